#include <doctest.h>

#include "ancl/kernels.hpp"
#include "ancl/rng.hpp"

using namespace ancl;

namespace {
Mat random_mat(int r, int c, std::uint64_t seed) {
    auto rng = make_rng(seed);
    Mat m(r, c);
    fill_gaussian(m, 1.0, rng);
    return m;
}

struct ParallelGuard {
    bool saved = kernels::parallel_enabled();
    ~ParallelGuard() { kernels::set_parallel(saved); }
};
}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("gemm kernels agree with Eigen") {
    Mat A = random_mat(17, 33, 1), B = random_mat(9, 33, 2), C;
    kernels::gemm_nt(A, B, C);
    CHECK((C - Mat(A * B.transpose())).cwiseAbs().maxCoeff() < 1e-12);

    Mat D = random_mat(17, 9, 3), E;
    kernels::gemm_tn(A, D, E);  // A^T: 33x17 times 17x9
    CHECK((E - Mat(A.transpose() * D)).cwiseAbs().maxCoeff() < 1e-12);

    Mat F = random_mat(33, 5, 4), G;
    kernels::gemm_nn(A, F, G);
    CHECK((G - Mat(A * F)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("serial and parallel kernels are bit-identical") {
    Mat A = random_mat(31, 257, 5), B = random_mat(12, 257, 6);
    Mat Cs, Cp;
    kernels::serial::gemm_nt(A, B, Cs);
    kernels::gemm_nt(A, B, Cp);
    CHECK(Cs == Cp);

    Mat D = random_mat(31, 7, 7), Es, Ep;
    kernels::serial::gemm_tn(A, D, Es);
    kernels::gemm_tn(A, D, Ep);
    CHECK(Es == Ep);

    Mat Ns = A, Np = A;
    Vec norm_s, norm_p;
    kernels::serial::normalize_rows(Ns, &norm_s);
    kernels::normalize_rows(Np, &norm_p);
    CHECK(Ns == Np);
    CHECK(norm_s == norm_p);
}

TEST_CASE("accumulate adds into the target") {
    Mat A = random_mat(4, 6, 8), B = random_mat(5, 6, 9);
    Mat C, C2;
    kernels::gemm_nt(A, B, C);
    C2 = C;
    kernels::gemm_nt(A, B, C2, /*accumulate=*/true);
    CHECK((C2 - Mat(2.0 * C)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gemm rejects mismatched shapes") {
    Mat A = random_mat(3, 4, 10), B = random_mat(2, 5, 11), C;
    CHECK_THROWS_AS(kernels::gemm_nt(A, B, C), DimensionError);
}

TEST_CASE("normalize_rows zeroes degenerate rows and reports them") {
    Mat A = random_mat(3, 4, 12);
    A.row(1).setZero();
    Vec norms;
    const int bad = kernels::normalize_rows(A, &norms);
    CHECK(bad == 1);
    CHECK(A.row(1).norm() == 0.0);
    CHECK(A.row(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norms(1) == 0.0);
}

TEST_CASE("knn prediction: exact match wins at k=1") {
    Mat train = random_mat(10, 8, 13);
    kernels::normalize_rows(train);
    std::vector<std::int32_t> labels = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    Mat test = train.middleRows(4, 1);
    auto pred = kernels::knn_predict(train, labels, test, 1, 3);
    CHECK(pred[0] == 1);
}

TEST_CASE("knn vote tie breaks to the smaller class index") {
    // two classes, one neighbour each at equal similarity
    Mat train(2, 2);
    train << 1, 0, 0, 1;
    std::vector<std::int32_t> labels = {1, 0};
    Mat test(1, 2);
    test << std::sqrt(0.5), std::sqrt(0.5);
    auto pred = kernels::knn_predict(train, labels, test, 2, 2);
    CHECK(pred[0] == 0);
}

TEST_CASE("knn serial equals parallel") {
    Mat train = random_mat(50, 6, 14), test = random_mat(20, 6, 15);
    kernels::normalize_rows(train);
    kernels::normalize_rows(test);
    std::vector<std::int32_t> labels(50);
    for (int i = 0; i < 50; ++i) labels[i] = i % 4;
    auto a = kernels::serial::knn_predict(train, labels, test, 5, 4);
    auto b = kernels::knn_predict(train, labels, test, 5, 4);
    CHECK(a == b);
}

TEST_CASE("parallel toggle routes to the serial path") {
    ParallelGuard guard;
    kernels::set_parallel(false);
    CHECK_FALSE(kernels::parallel_enabled());
    Mat A = random_mat(5, 9, 16), B = random_mat(4, 9, 17), C;
    kernels::gemm_nt(A, B, C);
    CHECK((C - Mat(A * B.transpose())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_SUITE_END();
