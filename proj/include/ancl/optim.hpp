#pragma once

#include "ancl/common.hpp"

namespace ancl {

/// base_lr * 0.5 * (1 + cos(pi * step / total_steps)); no warmup.
double cosine_lr(double base_lr, int step, int total_steps);

/// SGD with momentum and (coupled) weight decay:
///   g' = grad + weight_decay * param
///   buffer = momentum * buffer + g'
///   param -= lr * buffer
void sgd_step(Mat& param, const Mat& grad, Mat& buffer, double lr, double momentum,
              double weight_decay);

}  // namespace ancl
