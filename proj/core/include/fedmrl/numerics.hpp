#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fedmrl/matrix.hpp"

namespace fedmrl {

enum class Activation { Identity, ReLU };

Matrix apply_activation(const Matrix& pre, Activation act);
/// Multiplies upstream gradient by the activation derivative at `pre`.
/// ReLU'(0) is taken as 0.
Matrix activation_backward(const Matrix& pre, const Matrix& upstream, Activation act);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

struct CrossEntropy {
  double loss;
  Matrix grad_logits;
};

/// Single-sample cross entropy: logits is 1xL.
/// loss = -log softmax(logits)[label], grad = softmax - one_hot(label).
CrossEntropy cross_entropy(const Matrix& logits, std::size_t label);

/// Batch cross entropy with mean reduction. Row i of grad_logits is
/// (softmax_i - one_hot_i) / batch, i.e. the gradient of the mean loss.
CrossEntropy cross_entropy_mean(const Matrix& logits, std::span<const std::size_t> labels);

/// Lowest index of the maximum element in each row.
std::vector<std::size_t> argmax_rows(const Matrix& logits);

/// Returns params - lr * grads by value.
Matrix sgd_step(const Matrix& params, const Matrix& grads, double lr);
/// In-place variant: params -= lr * grads.
void sgd_step_inplace(Matrix& params, const Matrix& grads, double lr);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every i.
std::vector<double> finite_diff_gradient(const ScalarFunction& f, std::span<const double> x,
                                         double h = 1e-5);

/// |a - n| / max(1, |a|, |n|), the metric used by all gradient checks.
double gradient_relative_error(double analytic, double numeric);

}  // namespace fedmrl
