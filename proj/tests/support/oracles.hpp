#pragma once

// Test-only reference implementations. Nothing here calls into the code
// path it is used to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fedmrl/matrix.hpp"
#include "fedmrl/mrl.hpp"
#include "fedmrl/rng.hpp"

namespace fedmrl::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.uniform(-1.0, 1.0);
  return m;
}

/// Textbook triple loop, j-outer so the summation order differs from the
/// library's i-k-j kernel.
inline Matrix triple_loop_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

/// Independent central-difference oracle over a flat vector.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

/// Miniature triple: input 6, d1 = 3, d2 = 4, L = 3, one hidden layer each.
struct MiniTriple {
  GlobalSmallModel g;
  LocalHeteroModel f;
  Projector p;
  Matrix x;
  std::vector<std::size_t> labels;
};

inline MiniTriple make_mini_triple(std::uint64_t seed, std::size_t batch = 4) {
  Rng rng(seed);
  MiniTriple t;
  t.g = make_global_model({6, {5}, 3, 3}, rng);
  t.f = make_local_model({6, {7}, 4, 3}, rng);
  t.p = make_projector(3, 4, rng);
  // Non-zero biases so every parameter influences the loss.
  for (auto* m : parameters(t.g)) for (double& v : m->data()) if (v == 0.0) v = rng.uniform(-0.1, 0.1);
  for (auto* m : parameters(t.f)) for (double& v : m->data()) if (v == 0.0) v = rng.uniform(-0.1, 0.1);
  t.x = random_matrix(batch, 6, rng, 2.0);
  for (std::size_t i = 0; i < batch; ++i) t.labels.push_back(rng.uniform_int(3));
  return t;
}

/// theta, omega, phi flattened back to back.
inline std::vector<double> flatten_triple(const GlobalSmallModel& g, const LocalHeteroModel& f,
                                          const Projector& p) {
  auto out = flatten(g);
  const auto b = flatten(f);
  const auto c = flatten(p);
  out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

inline void unflatten_triple(GlobalSmallModel& g, LocalHeteroModel& f, Projector& p,
                             std::span<const double> v) {
  const std::size_t ng = param_count(g);
  const std::size_t nf = param_count(f);
  unflatten(g, v.subspan(0, ng));
  unflatten(f, v.subspan(ng, nf));
  unflatten(p, v.subspan(ng + nf));
}

}  // namespace fedmrl::testing
