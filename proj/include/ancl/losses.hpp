#pragma once

#include <optional>
#include <utility>

#include "ancl/common.hpp"
#include "ancl/model.hpp"

namespace ancl {

struct LossBreakdown {
    double ell_ssl = 0.0;
    double ell_sup = 0.0;
    double total = 0.0;
    double alpha = 0.0;
};

/// || p1 - z2 ||^2 = 2 - 2 <p1, z2> for unit inputs.
double loss_ssl(const Vec& p1, const Vec& z2);

/// || p1 - z2sup ||^2; z2sup is an averaged target and may have norm < 1.
double loss_sup(const Vec& p1, const Vec& z2sup);

LossBreakdown loss_total(const Vec& p1, const Vec& z2, const Vec& z2sup, double alpha);

/// Mean of the two anchor/target directions for one sample pair. The target
/// branch shares weights with `m` when `target` is null, otherwise uses the
/// EMA copy. Supervised targets are detached pool samples supplied by the
/// caller; a missing one falls back to the in-batch positive (the other
/// view's target projection).
LossBreakdown symmetrized_loss(const Model& m, const TargetModel* target, const Vec& x1,
                               const Vec& x2, const std::optional<Vec>& z1sup,
                               const std::optional<Vec>& z2sup, double alpha);

/// Both sides of the interpolated-target identity behind the constrained
/// loss: lhs = a||p1-z2||^2 + (1-a)||p1-z2sup||^2, rhs_plus_const =
/// ||p1 - (a z2 + (1-a) z2sup)||^2 + (1 - ||a z2 + (1-a) z2sup||^2).
std::pair<double, double> interpolated_target_identity_check(const Vec& p1, const Vec& z2,
                                                             const Vec& z2sup, double alpha);

}  // namespace ancl
