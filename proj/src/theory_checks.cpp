#include <algorithm>
#include <cmath>

#include "ancl/losses.hpp"
#include "ancl/rng.hpp"
#include "ancl/theory.hpp"

namespace ancl {

namespace {

Vec random_unit(int k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec v(k);
    for (int i = 0; i < k; ++i) v(i) = gauss(rng);
    return v / v.norm();
}

/// Random Assumption-4 instance: 3 centered class means scaled so that
/// S_B < I, and S_W = I - S_B.
ScatterSummary random_whitened_instance(int d, double sigma_e_sq, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat means(d, 3);
    for (Eigen::Index i = 0; i < means.size(); ++i) means.data()[i] = gauss(rng);
    Mat centered = means.colwise() - Vec(means.rowwise().mean());
    Eigen::SelfAdjointEigenSolver<Mat> eig(centered * centered.transpose() / 3.0);
    const double top = eig.eigenvalues().maxCoeff();
    std::uniform_real_distribution<double> mass(0.3, 0.8);
    centered *= std::sqrt(mass(rng) / top);
    return whitened_scatters(centered, sigma_e_sq);
}

Mat random_mat(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
    return m;
}

double scale_matched_rel_error(const Mat& est, const Mat& ref) {
    const double s = est.cwiseProduct(ref).sum() / std::max(est.squaredNorm(), 1e-300);
    return (s * est - ref).norm() / std::max(ref.norm(), 1e-300);
}

}  // namespace

std::vector<TheoryCheck> run_theory_checks(std::uint64_t seed) {
    std::vector<TheoryCheck> checks;
    auto add = [&](const std::string& name, double residual, double threshold) {
        checks.push_back({name, residual, threshold, residual < threshold});
    };

    // Interpolated-target identity of the constrained loss, 1000 unit triples.
    {
        auto rng = make_rng(seed, {1});
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            auto [lhs, rhs] = interpolated_target_identity_check(
                random_unit(8, rng), random_unit(8, rng), random_unit(8, rng), unif(rng));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        add("eq4_interpolated_target_identity", worst, 1e-12);
    }

    // Optimal predictor: closed form vs gradient-descent argmin, and the
    // stationarity of the closed form, over 20 random whitened instances.
    {
        auto rng = make_rng(seed, {2});
        const double alphas[4] = {0.0, 0.3, 0.7, 1.0};
        double worst_match = 0.0, worst_grad = 0.0;
        for (int t = 0; t < 20; ++t) {
            std::uniform_int_distribution<int> dd(4, 16);
            const int d = dd(rng);
            std::uniform_int_distribution<int> dk(2, std::min(8, d));
            const int k = dk(rng);
            const double sig_e = (t % 2 == 0) ? 0.0 : 0.2;
            ScatterSummary sc = random_whitened_instance(d, sig_e, rng);
            Mat W = random_mat(k, d, rng) / std::sqrt(static_cast<double>(d));
            const double alpha = alphas[t % 4];
            LagrangeParams lam;
            Mat closed = optimal_predictor(W, sc, alpha, lam.lambda3);
            Mat numeric = numeric_optimal_predictor(W, sc, alpha, lam);
            worst_match = std::max(worst_match, scale_matched_rel_error(closed, numeric));
            const double gnorm = lagrangian_grad_wp(W, closed, sc, alpha, lam).norm();
            worst_grad = std::max(worst_grad, gnorm);
        }
        add("thm1_closed_form_vs_numeric_argmin", worst_match, 1e-4);
        add("thm1_stationarity", worst_grad, 1e-8);
    }

    // Shared eigenspace of the population covariance triple, pulled back to
    // data space through an invertible map.
    {
        auto rng = make_rng(seed, {3});
        ScatterSummary sc = random_whitened_instance(12, 0.2, rng);
        Mat view = sc.S_T + sc.sigma_e_sq * Mat::Identity(12, 12);
        const double r = std::max({eigenspace_commute_residual(sc.S_B, sc.S_W),
                                   eigenspace_commute_residual(sc.S_B, view),
                                   eigenspace_commute_residual(sc.S_W, view)});
        add("prop1_population_commute", r, 1e-10);
    }

    // Monte-Carlo check of E[z2 z1^T] = W S_T W^T, per entry within 3 SE.
    {
        auto rng = make_rng(seed, {4});
        const int d = 8, k = 4, samples = 100000;
        ScatterSummary sc = random_whitened_instance(d, 0.2, rng);
        Mat W = random_mat(k, d, rng) / std::sqrt(static_cast<double>(d));
        Mat sqrt_sw = sc.V * sc.lambda_W.cwiseSqrt().asDiagonal() * sc.V.transpose();
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_int_distribution<int> pick(0, 2);
        const double sig_e = std::sqrt(sc.sigma_e_sq);
        Mat sum = Mat::Zero(k, k), sumsq = Mat::Zero(k, k);
        Vec g(d), e1(d), e2(d);
        for (int s = 0; s < samples; ++s) {
            const int y = pick(rng);
            for (int i = 0; i < d; ++i) g(i) = gauss(rng);
            Vec x = sc.means.col(y) + sqrt_sw * g;
            for (int i = 0; i < d; ++i) e1(i) = gauss(rng);
            for (int i = 0; i < d; ++i) e2(i) = gauss(rng);
            Vec z1 = W * (x + sig_e * e1);
            Vec z2 = W * (x + sig_e * e2);
            Mat outer = z2 * z1.transpose();
            sum += outer;
            sumsq += outer.cwiseProduct(outer);
        }
        Mat mc = sum / samples;
        Mat ref = W * sc.S_T * W.transpose();
        double worst = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const double var =
                    std::max(1e-300, sumsq(i, j) / samples - mc(i, j) * mc(i, j));
                worst = std::max(worst, std::abs(mc(i, j) - ref(i, j)) / std::sqrt(var / samples));
            }
        add("eq7_feature_covariance_montecarlo_3se", worst, 3.0);
    }

    // Pure intra-class directions are scaled by exactly alpha / (1 + s_e^2).
    {
        auto rng = make_rng(seed, {5});
        double worst = 0.0;
        for (double sig_e_sq : {0.0, 0.2}) {
            ScatterSummary sc = random_whitened_instance(10, sig_e_sq, rng);
            Mat W = random_mat(10, 10, rng);
            for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
                Mat wps = optimal_predictor(W, sc, alpha, 1.0);
                Vec gains = predictor_variance_reduction_check(wps, W, sc, alpha);
                for (Eigen::Index i = 0; i < gains.size(); ++i)
                    if (sc.lambda_B(i) == 0.0)
                        worst = std::max(worst,
                                         std::abs(gains(i) - alpha / (1.0 + sig_e_sq)));
            }
        }
        add("thm1_intra_class_gain_exact", worst, 1e-12);
    }

    // Intra-class variance of W_p*(alpha) features is non-decreasing in
    // alpha (common random samples across the grid).
    {
        auto rng = make_rng(seed, {6});
        const int d = 10, n = 400;
        ScatterSummary sc = random_whitened_instance(d, 0.1, rng);
        Mat W = random_mat(d, d, rng);
        Mat sqrt_sw = sc.V * sc.lambda_W.cwiseSqrt().asDiagonal() * sc.V.transpose();
        std::normal_distribution<double> gauss(0.0, 1.0);
        Mat devs(n, d);  // class-centered deviations, shared across alphas
        for (int i = 0; i < n; ++i) {
            Vec g(d);
            for (int j = 0; j < d; ++j) g(j) = gauss(rng);
            devs.row(i) = (sqrt_sw * g).transpose();
        }
        double prev = -1.0, worst_drop = 0.0;
        for (int a = 0; a <= 10; ++a) {
            Mat wps = optimal_predictor(W, sc, 0.1 * a, 1.0);
            Mat feat_devs = devs * (wps * W).transpose();
            const double sw = feat_devs.rowwise().squaredNorm().mean();
            if (a > 0) worst_drop = std::max(worst_drop, prev - sw);
            prev = sw;
        }
        add("thm1_monotone_intra_class_variance", worst_drop, 1e-12);
    }

    return checks;
}

}  // namespace ancl
