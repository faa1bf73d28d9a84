#include "ancl/optim.hpp"

#include <cmath>
#include <numbers>

namespace ancl {

double cosine_lr(double base_lr, int step, int total_steps) {
    if (step < 0 || step > total_steps) throw ContractError("cosine_lr: step outside schedule");
    if (total_steps == 0) return base_lr;
    return base_lr * 0.5 *
           (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
}

void sgd_step(Mat& param, const Mat& grad, Mat& buffer, double lr, double momentum,
              double weight_decay) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
        param.rows() != buffer.rows() || param.cols() != buffer.cols())
        throw DimensionError("sgd_step: shape mismatch");
    buffer = momentum * buffer + (grad + weight_decay * param);
    param -= lr * buffer;
}

}  // namespace ancl
