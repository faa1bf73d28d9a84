// Timings for the parallel kernels against their serial reference, at the
// shapes the training loop and the evaluator actually use.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "ancl/kernels.hpp"
#include "ancl/rng.hpp"

using namespace ancl;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

Mat random_mat(int r, int c, std::mt19937_64& rng) {
    Mat m(r, c);
    fill_gaussian(m, 1.0, rng);
    return m;
}

void report(const char* name, double gflop, double serial_ms, double parallel_ms) {
    std::printf("%-28s serial %8.2f ms (%6.2f GF/s)   omp %8.2f ms (%6.2f GF/s)   speedup %.2fx\n",
                name, serial_ms, gflop / serial_ms, parallel_ms, gflop / parallel_ms,
                serial_ms / parallel_ms);
}

}  // namespace

int main() {
    auto rng = make_rng(7);

    {
        // batch forward: X (256 x 2048) * W_enc^T (2048 x 128)
        Mat X = random_mat(256, 2048, rng), W = random_mat(128, 2048, rng), C;
        const double gflop = 2.0 * 256 * 2048 * 128 * 1e-6;
        const double s = time_ms([&] { kernels::serial::gemm_nt(X, W, C); }, 20);
        const double p = time_ms([&] { kernels::gemm_nt(X, W, C); }, 20);
        report("gemm_nt 256x2048 * 2048x128", gflop, s, p);
    }
    {
        // gradient accumulation: dE^T (256 x 128)^T * X (256 x 2048)
        Mat dE = random_mat(256, 128, rng), X = random_mat(256, 2048, rng), C;
        const double gflop = 2.0 * 256 * 128 * 2048 * 1e-6;
        const double s = time_ms([&] { kernels::serial::gemm_tn(dE, X, C); }, 20);
        const double p = time_ms([&] { kernels::gemm_tn(dE, X, C); }, 20);
        report("gemm_tn 128x256 * 256x2048", gflop, s, p);
    }
    {
        // scatter accumulation: X^T X at dataset scale
        Mat X = random_mat(3000, 512, rng), C;
        const double gflop = 2.0 * 3000 * 512 * 512 * 1e-6;
        const double s = time_ms([&] { kernels::serial::gemm_tn(X, X, C); }, 3);
        const double p = time_ms([&] { kernels::gemm_tn(X, X, C); }, 3);
        report("gemm_tn 512x3000 * 3000x512", gflop, s, p);
    }
    {
        Mat A = random_mat(3000, 128, rng);
        Mat B = A;
        const double gflop = 2.0 * 3000 * 128 * 1e-6;
        const double s = time_ms([&] { Mat T = A; kernels::serial::normalize_rows(T); }, 20);
        const double p = time_ms([&] { Mat T = B; kernels::normalize_rows(T); }, 20);
        report("normalize_rows 3000x128", gflop, s, p);
    }
    {
        // cosine k-NN: 1500 queries against 3000 references
        Mat train = random_mat(3000, 128, rng), test = random_mat(1500, 128, rng);
        kernels::normalize_rows(train);
        kernels::normalize_rows(test);
        std::vector<std::int32_t> labels(3000);
        std::uniform_int_distribution<int> lab(0, 2);
        for (auto& l : labels) l = lab(rng);
        const double gflop = 2.0 * 1500 * 3000 * 128 * 1e-6;
        const double s =
            time_ms([&] { kernels::serial::knn_predict(train, labels, test, 20, 3); }, 5);
        const double p = time_ms([&] { kernels::knn_predict(train, labels, test, 20, 3); }, 5);
        report("knn 1500 vs 3000, k=20", gflop, s, p);
    }
    return 0;
}
