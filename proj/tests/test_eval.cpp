#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ancl/eval.hpp"
#include "ancl/rng.hpp"

using namespace ancl;

namespace {

Mat random_unit_rows(int r, int c, std::uint64_t seed) {
    auto rng = make_rng(seed);
    Mat m(r, c);
    fill_gaussian(m, 1.0, rng);
    for (int i = 0; i < r; ++i) m.row(i) /= m.row(i).norm();
    return m;
}

// well separated unit features around C orthogonal anchors
void separated_features(int n_per, int C, int k, std::uint64_t seed, Mat& f,
                        std::vector<std::int32_t>& y) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.05);
    f.resize(n_per * C, k);
    y.resize(n_per * C);
    int row = 0;
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < n_per; ++i, ++row) {
            Vec v = Vec::Zero(k);
            v(c) = 1.0;
            for (int j = 0; j < k; ++j) v(j) += gauss(rng);
            f.row(row) = v.transpose() / v.norm();
            y[row] = c;
        }
    }
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("extract_features: identity model returns normalized inputs") {
    Model m;
    m.W_enc = Mat::Identity(4, 4);
    m.W_proj = Mat::Identity(4, 4);
    m.W_pred = Mat::Identity(4, 4);
    LabeledDataset ds;
    ds.X = random_unit_rows(6, 4, 1);
    ds.y.assign(6, 0);
    ds.spec = {1, 4, Mat::Zero(4, 1), 0.0};
    bool collapsed = true;
    Mat f = extract_features(m, ds, &collapsed);
    CHECK_FALSE(collapsed);
    CHECK((f - ds.X).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(f.row(i).norm() - 1.0) < 1e-12);
    // determinism
    Mat f2 = extract_features(m, ds);
    CHECK(f == f2);
}

TEST_CASE("extract_features zeroes collapsed rows and flags them") {
    Model m;
    m.W_enc = Mat::Zero(3, 4);
    m.W_proj = Mat::Identity(3, 3);
    m.W_pred = Mat::Identity(3, 3);
    LabeledDataset ds;
    ds.X = random_unit_rows(5, 4, 2);
    ds.y.assign(5, 0);
    bool collapsed = false;
    Mat f = extract_features(m, ds, &collapsed);
    CHECK(collapsed);
    CHECK(f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("knn accuracy on separated classes, and k = n with uniform labels") {
    Mat f;
    std::vector<std::int32_t> y;
    separated_features(30, 3, 8, 3, f, y);
    Mat ftest;
    std::vector<std::int32_t> ytest;
    separated_features(10, 3, 8, 4, ftest, ytest);
    CHECK(knn_accuracy(f, y, ftest, ytest, 5) == doctest::Approx(1.0));

    // k = n_train with 2:1 label imbalance: majority class everywhere
    Mat tr = random_unit_rows(9, 4, 5);
    std::vector<std::int32_t> names{0, 0, 0, 0, 0, 0, 1, 1, 1};
    Mat te = random_unit_rows(30, 4, 6);
    std::vector<std::int32_t> yte(30, 0);
    const double acc = knn_accuracy(tr, names, te, 9, yte);
    CHECK(acc == doctest::Approx(1.0));  // predicts class 0 = majority prior
}

TEST_CASE("knn is invariant to test-set permutation") {
    Mat f;
    std::vector<std::int32_t> y;
    separated_features(20, 3, 6, 7, f, y);
    Mat te;
    std::vector<std::int32_t> yte;
    separated_features(15, 3, 6, 8, te, yte);
    const double base = knn_accuracy(f, y, te, yte, 7);
    // reverse the test order
    Mat rev(te.rows(), te.cols());
    std::vector<std::int32_t> yrev(yte.size());
    for (Eigen::Index i = 0; i < te.rows(); ++i) {
        rev.row(i) = te.row(te.rows() - 1 - i);
        yrev[i] = yte[yte.size() - 1 - i];
    }
    CHECK(knn_accuracy(f, y, rev, yrev, 7) == doctest::Approx(base));
}

TEST_CASE("linear probe fits separable features to full training accuracy") {
    Mat f;
    std::vector<std::int32_t> y;
    separated_features(40, 3, 6, 9, f, y);
    // probe train accuracy via predicting the training set as 'test'
    const double acc = linear_probe(f, y, f, y, 1e-6);
    CHECK(acc == doctest::Approx(1.0));
}

TEST_CASE("identical features predict the majority class") {
    Mat f = Mat::Ones(30, 4);
    std::vector<std::int32_t> y(30, 1);
    for (int i = 0; i < 10; ++i) y[i] = 0;  // 2/3 majority of class 1
    Mat te = Mat::Ones(12, 4);
    std::vector<std::int32_t> yte(12, 1);
    const double acc = linear_probe(f, y, te, yte, 1e-3);
    CHECK(acc == doctest::Approx(1.0));  // everything goes to the majority class
}

TEST_CASE("linear probe is deterministic including the reg selection") {
    Mat f;
    std::vector<std::int32_t> y;
    separated_features(30, 3, 5, 10, f, y);
    Mat te;
    std::vector<std::int32_t> yte;
    separated_features(12, 3, 5, 11, te, yte);
    const double a = linear_probe(f, y, te, yte, -1.0, 42);
    const double b = linear_probe(f, y, te, yte, -1.0, 42);
    CHECK(a == b);
}

TEST_CASE("label permutation relabels predictions consistently") {
    Mat f;
    std::vector<std::int32_t> y;
    separated_features(25, 3, 6, 12, f, y);
    Mat te;
    std::vector<std::int32_t> yte;
    separated_features(10, 3, 6, 13, te, yte);
    const double base_knn = knn_accuracy(f, y, te, yte, 5);
    const double base_lin = linear_probe(f, y, te, yte, 1e-2);
    // permute classes by the cycle 0->1->2->0 everywhere
    auto perm = [](std::int32_t c) { return static_cast<std::int32_t>((c + 1) % 3); };
    std::vector<std::int32_t> yp(y.size()), ytep(yte.size());
    std::transform(y.begin(), y.end(), yp.begin(), perm);
    std::transform(yte.begin(), yte.end(), ytep.begin(), perm);
    CHECK(knn_accuracy(f, yp, te, ytep, 5) == doctest::Approx(base_knn));
    CHECK(linear_probe(f, yp, te, ytep, 1e-2) == doctest::Approx(base_lin));
}

TEST_CASE("collapse detector fires on identical features, not on separated ones") {
    Mat f = Mat::Ones(60, 4);
    std::vector<std::int32_t> y(60);
    for (int i = 0; i < 60; ++i) y[i] = i % 3;
    CHECK(detect_collapse(f, y));

    Mat g;
    std::vector<std::int32_t> yg;
    separated_features(40, 3, 6, 14, g, yg);
    CHECK_FALSE(detect_collapse(g, yg));
}

TEST_CASE("very large downstream noise drives transfer accuracy to chance") {
    Model m = init_model(32, 16, 8, 15);
    ClassSpec spec{3, 32, make_class_means(3, 32, 16), 0.35};
    WhiteningTransform id = WhiteningTransform::identity(32);
    const double acc = transfer_eval(m, spec, id, DownstreamMode::kExtrapolate, 60.0, 17,
                                     /*n_train_per_class=*/200, /*n_test_per_class=*/100);
    CHECK(acc < 0.45);
    CHECK(acc > 0.2);
}

TEST_SUITE_END();
