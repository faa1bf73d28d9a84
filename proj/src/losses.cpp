#include "ancl/losses.hpp"

#include <cmath>

namespace ancl {

namespace {
constexpr double kUnitTol = 1e-8;

void require_unit(const Vec& v, const char* what) {
    if (std::abs(v.squaredNorm() - 1.0) > kUnitTol)
        throw ContractError(std::string(what) + ": expected a unit vector");
}

void require_same_dim(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("loss: vector lengths differ");
}
}  // namespace

double loss_ssl(const Vec& p1, const Vec& z2) {
    require_same_dim(p1, z2);
    require_unit(p1, "loss_ssl p1");
    require_unit(z2, "loss_ssl z2");
    return (p1 - z2).squaredNorm();
}

double loss_sup(const Vec& p1, const Vec& z2sup) {
    require_same_dim(p1, z2sup);
    require_unit(p1, "loss_sup p1");
    if (!z2sup.allFinite()) throw ContractError("loss_sup: non-finite target");
    return (p1 - z2sup).squaredNorm();
}

LossBreakdown loss_total(const Vec& p1, const Vec& z2, const Vec& z2sup, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ContractError("loss_total: alpha outside [0,1]");
    LossBreakdown b;
    b.alpha = alpha;
    b.ell_ssl = loss_ssl(p1, z2);
    b.ell_sup = loss_sup(p1, z2sup);
    b.total = alpha * b.ell_ssl + (1.0 - alpha) * b.ell_sup;
    return b;
}

LossBreakdown symmetrized_loss(const Model& m, const TargetModel* target, const Vec& x1,
                               const Vec& x2, const std::optional<Vec>& z1sup,
                               const std::optional<Vec>& z2sup, double alpha) {
    auto [z1o, p1] = forward(m, x1);
    auto [z2o, p2] = forward(m, x2);
    Vec z1 = z1o, z2 = z2o;
    if (target) {
        const Mat& we = target->W_enc;
        const Mat& wp = target->W_proj;
        z1 = l2_normalize(wp * (we * x1));
        z2 = l2_normalize(wp * (we * x2));
    }
    LossBreakdown fwd = loss_total(p1, z2, z2sup ? *z2sup : z2, alpha);
    LossBreakdown bwd = loss_total(p2, z1, z1sup ? *z1sup : z1, alpha);
    LossBreakdown out;
    out.alpha = alpha;
    out.ell_ssl = 0.5 * (fwd.ell_ssl + bwd.ell_ssl);
    out.ell_sup = 0.5 * (fwd.ell_sup + bwd.ell_sup);
    out.total = 0.5 * (fwd.total + bwd.total);
    return out;
}

std::pair<double, double> interpolated_target_identity_check(const Vec& p1, const Vec& z2,
                                                             const Vec& z2sup, double alpha) {
    require_same_dim(p1, z2);
    require_same_dim(p1, z2sup);
    require_unit(p1, "identity p1");
    require_unit(z2, "identity z2");
    require_unit(z2sup, "identity z2sup");
    if (alpha < 0.0 || alpha > 1.0) throw ContractError("identity: alpha outside [0,1]");
    const double lhs =
        alpha * (p1 - z2).squaredNorm() + (1.0 - alpha) * (p1 - z2sup).squaredNorm();
    Vec t = alpha * z2 + (1.0 - alpha) * z2sup;
    const double rhs = (p1 - t).squaredNorm() + (1.0 - t.squaredNorm());
    return {lhs, rhs};
}

}  // namespace ancl
