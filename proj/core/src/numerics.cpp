#include "fedmrl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedmrl/error.hpp"

namespace fedmrl {

Matrix apply_activation(const Matrix& pre, Activation act) {
  if (act == Activation::Identity) return pre;
  Matrix out = pre;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix activation_backward(const Matrix& pre, const Matrix& upstream, Activation act) {
  if (!pre.same_shape(upstream)) {
    throw DimensionError("activation_backward: pre-activation " + pre.shape_string() +
                         " vs upstream " + upstream.shape_string());
  }
  if (act == Activation::Identity) return upstream;
  Matrix out = upstream;
  auto o = out.data();
  const auto z = pre.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    if (!(z[i] > 0.0)) o[i] = 0.0;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  require_finite(logits, "softmax");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row_span(i);
    auto o = out.row_span(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

namespace {

// -log softmax(row)[label] via log-sum-exp.
double row_cross_entropy(std::span<const double> row, std::size_t label) {
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - mx);
  return std::log(sum) + mx - row[label];
}

void check_label(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw DataError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                    std::to_string(classes) + " classes");
  }
}

}  // namespace

CrossEntropy cross_entropy(const Matrix& logits, std::size_t label) {
  if (logits.rows() != 1 || logits.cols() == 0) {
    throw DimensionError("cross_entropy: expected 1xL logits, got " + logits.shape_string());
  }
  check_label(label, logits.cols());
  Matrix grad = softmax_rows(logits);
  grad(0, label) -= 1.0;
  return {row_cross_entropy(logits.row_span(0), label), std::move(grad)};
}

CrossEntropy cross_entropy_mean(const Matrix& logits, std::span<const std::size_t> labels) {
  if (logits.rows() != labels.size() || logits.rows() == 0) {
    throw DimensionError("cross_entropy_mean: " + std::to_string(labels.size()) +
                         " labels for logits " + logits.shape_string());
  }
  const auto batch = static_cast<double>(labels.size());
  Matrix grad = softmax_rows(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_label(labels[i], logits.cols());
    total += row_cross_entropy(logits.row_span(i), labels[i]);
    grad(i, labels[i]) -= 1.0;
  }
  for (double& v : grad.data()) v /= batch;
  return {total / batch, std::move(grad)};
}

std::vector<std::size_t> argmax_rows(const Matrix& logits) {
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto r = logits.row_span(i);
    // max_element returns the first maximum.
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

Matrix sgd_step(const Matrix& params, const Matrix& grads, double lr) {
  Matrix out = params;
  sgd_step_inplace(out, grads, lr);
  return out;
}

void sgd_step_inplace(Matrix& params, const Matrix& grads, double lr) {
  if (!params.same_shape(grads)) {
    throw DimensionError("sgd_step: params " + params.shape_string() + " vs grads " +
                         grads.shape_string());
  }
  if (lr < 0.0 || !std::isfinite(lr)) throw ConfigError("sgd_step: learning rate must be >= 0");
  axpy(params, -lr, grads);
}

std::vector<double> finite_diff_gradient(const ScalarFunction& f, std::span<const double> x,
                                         double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_gradient: step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_gradient: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace fedmrl
