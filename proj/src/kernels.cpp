#include "ancl/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

namespace ancl::kernels {

namespace {
std::atomic<bool> g_parallel{true};

void check_gemm(const Mat& A, const Mat& B, Mat& C, Eigen::Index m, Eigen::Index inner_a,
                Eigen::Index inner_b, Eigen::Index n, bool accumulate) {
    if (inner_a != inner_b)
        throw DimensionError("gemm: inner dimensions differ (" + std::to_string(inner_a) + " vs " +
                             std::to_string(inner_b) + ")");
    if (!accumulate) {
        C.resize(m, n);
        C.setZero();
    } else if (C.rows() != m || C.cols() != n) {
        throw DimensionError("gemm: accumulate target has wrong shape");
    }
    (void)A;
    (void)B;
}

inline double dot(const double* a, const double* b, Eigen::Index k) {
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (Eigen::Index i = 0; i < k; ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double coef, const double* x, double* y, Eigen::Index k) {
#pragma omp simd
    for (Eigen::Index i = 0; i < k; ++i) y[i] += coef * x[i];
}

// One output row of C = A * B^T: four B rows at a time to reuse the A row.
inline void nt_row(const double* a, const Mat& B, double* c, Eigen::Index n, Eigen::Index k) {
    Eigen::Index j = 0;
    for (; j + 4 <= n; j += 4) {
        const double* b0 = B.data() + (j + 0) * k;
        const double* b1 = B.data() + (j + 1) * k;
        const double* b2 = B.data() + (j + 2) * k;
        const double* b3 = B.data() + (j + 3) * k;
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
        for (Eigen::Index l = 0; l < k; ++l) {
            const double av = a[l];
            s0 += av * b0[l];
            s1 += av * b1[l];
            s2 += av * b2[l];
            s3 += av * b3[l];
        }
        c[j + 0] += s0;
        c[j + 1] += s1;
        c[j + 2] += s2;
        c[j + 3] += s3;
    }
    for (; j < n; ++j) c[j] += dot(a, B.data() + j * k, k);
}

int predict_one(const Mat& train, const std::vector<std::int32_t>& labels, const double* t,
                int k, int num_classes, std::vector<std::pair<double, Eigen::Index>>& scratch) {
    const Eigen::Index n = train.rows();
    const Eigen::Index dim = train.cols();
    scratch.clear();
    scratch.reserve(n);
    for (Eigen::Index j = 0; j < n; ++j)
        scratch.emplace_back(dot(t, train.data() + j * dim, dim), j);
    auto closer = [](const std::pair<double, Eigen::Index>& a,
                     const std::pair<double, Eigen::Index>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end(), closer);
    std::vector<int> votes(num_classes, 0);
    for (int j = 0; j < k; ++j) ++votes[labels[scratch[j].second]];
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
        if (votes[c] > votes[best]) best = c;  // tie keeps the smaller class index
    return best;
}

void check_knn(const Mat& train, const std::vector<std::int32_t>& labels, const Mat& test, int k,
               int num_classes) {
    if (train.rows() == 0 || test.rows() == 0) throw ContractError("knn: empty feature set");
    if (static_cast<Eigen::Index>(labels.size()) != train.rows())
        throw DimensionError("knn: labels/features size mismatch");
    if (train.cols() != test.cols()) throw DimensionError("knn: feature dims differ");
    if (k < 1 || k > train.rows()) throw ContractError("knn: k out of range");
    if (num_classes < 1) throw ContractError("knn: num_classes < 1");
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace serial {

void gemm_nt(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    const Eigen::Index m = A.rows(), k = A.cols(), n = B.rows();
    check_gemm(A, B, C, m, k, B.cols(), n, accumulate);
    for (Eigen::Index i = 0; i < m; ++i) nt_row(A.data() + i * k, B, C.data() + i * n, n, k);
}

void gemm_tn(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    const Eigen::Index nb = A.rows(), m = A.cols(), k = B.cols();
    check_gemm(A, B, C, m, nb, B.rows(), k, accumulate);
    for (Eigen::Index b = 0; b < nb; ++b)
        for (Eigen::Index i = 0; i < m; ++i)
            axpy(A(b, i), B.data() + b * k, C.data() + i * k, k);
}

void gemm_nn(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    const Eigen::Index m = A.rows(), kk = A.cols(), n = B.cols();
    check_gemm(A, B, C, m, kk, B.rows(), n, accumulate);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index l = 0; l < kk; ++l)
            axpy(A(i, l), B.data() + l * n, C.data() + i * n, n);
}

int normalize_rows(Mat& A, Vec* norms, double min_norm) {
    const Eigen::Index n = A.rows(), d = A.cols();
    if (norms) norms->resize(n);
    int degenerate = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double* row = A.data() + i * d;
        double nrm = std::sqrt(dot(row, row, d));
        if (norms) (*norms)(i) = nrm;
        if (nrm < min_norm) {
            std::fill(row, row + d, 0.0);
            ++degenerate;
            continue;
        }
        const double inv = 1.0 / nrm;
#pragma omp simd
        for (Eigen::Index j = 0; j < d; ++j) row[j] *= inv;
    }
    return degenerate;
}

std::vector<std::int32_t> knn_predict(const Mat& train, const std::vector<std::int32_t>& labels,
                                      const Mat& test, int k, int num_classes) {
    check_knn(train, labels, test, k, num_classes);
    std::vector<std::int32_t> out(test.rows());
    std::vector<std::pair<double, Eigen::Index>> scratch;
    for (Eigen::Index i = 0; i < test.rows(); ++i)
        out[i] = static_cast<std::int32_t>(
            predict_one(train, labels, test.data() + i * test.cols(), k, num_classes, scratch));
    return out;
}

}  // namespace serial

void gemm_nt(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    if (!parallel_enabled()) return serial::gemm_nt(A, B, C, accumulate);
    const Eigen::Index m = A.rows(), k = A.cols(), n = B.rows();
    check_gemm(A, B, C, m, k, B.cols(), n, accumulate);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) nt_row(A.data() + i * k, B, C.data() + i * n, n, k);
}

void gemm_tn(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    if (!parallel_enabled()) return serial::gemm_tn(A, B, C, accumulate);
    const Eigen::Index nb = A.rows(), m = A.cols(), k = B.cols();
    check_gemm(A, B, C, m, nb, B.rows(), k, accumulate);
    // Each thread owns a contiguous block of output rows; the b-loop stays
    // sequential inside so accumulation order per entry is fixed.
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < m; ++i) {
            double* c = C.data() + i * k;
            for (Eigen::Index b = 0; b < nb; ++b) axpy(A(b, i), B.data() + b * k, c, k);
        }
    }
}

void gemm_nn(const Mat& A, const Mat& B, Mat& C, bool accumulate) {
    if (!parallel_enabled()) return serial::gemm_nn(A, B, C, accumulate);
    const Eigen::Index m = A.rows(), kk = A.cols(), n = B.cols();
    check_gemm(A, B, C, m, kk, B.rows(), n, accumulate);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
        double* c = C.data() + i * n;
        for (Eigen::Index l = 0; l < kk; ++l) axpy(A(i, l), B.data() + l * n, c, n);
    }
}

int normalize_rows(Mat& A, Vec* norms, double min_norm) {
    if (!parallel_enabled()) return serial::normalize_rows(A, norms, min_norm);
    const Eigen::Index n = A.rows(), d = A.cols();
    if (norms) norms->resize(n);
    int degenerate = 0;
#pragma omp parallel for schedule(static) reduction(+ : degenerate)
    for (Eigen::Index i = 0; i < n; ++i) {
        double* row = A.data() + i * d;
        double nrm = std::sqrt(dot(row, row, d));
        if (norms) (*norms)(i) = nrm;
        if (nrm < min_norm) {
            std::fill(row, row + d, 0.0);
            ++degenerate;
            continue;
        }
        const double inv = 1.0 / nrm;
#pragma omp simd
        for (Eigen::Index j = 0; j < d; ++j) row[j] *= inv;
    }
    return degenerate;
}

std::vector<std::int32_t> knn_predict(const Mat& train, const std::vector<std::int32_t>& labels,
                                      const Mat& test, int k, int num_classes) {
    if (!parallel_enabled()) return serial::knn_predict(train, labels, test, k, num_classes);
    check_knn(train, labels, test, k, num_classes);
    std::vector<std::int32_t> out(test.rows());
#pragma omp parallel
    {
        std::vector<std::pair<double, Eigen::Index>> scratch;
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < test.rows(); ++i)
            out[i] = static_cast<std::int32_t>(predict_one(
                train, labels, test.data() + i * test.cols(), k, num_classes, scratch));
    }
    return out;
}

}  // namespace ancl::kernels
