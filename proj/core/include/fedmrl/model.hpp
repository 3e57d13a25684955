#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedmrl/error.hpp"
#include "fedmrl/matrix.hpp"
#include "fedmrl/numerics.hpp"
#include "fedmrl/rng.hpp"

namespace fedmrl {

/// y = act(x W^T + b). weight is out x in; bias is 1 x out or empty.
struct AffineLayer {
  Matrix weight;
  Matrix bias;
  Activation activation = Activation::ReLU;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
  bool has_bias() const noexcept { return !bias.empty(); }

  friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

/// Stack of biased ReLU layers ending at the representation width.
struct Extractor {
  std::vector<AffineLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  std::size_t rep_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  friend bool operator==(const Extractor&, const Extractor&) = default;
};

/// Bias-free linear prediction header; weight is classes x in_dim.
struct Header {
  Matrix weight;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t classes() const noexcept { return weight.rows(); }

  friend bool operator==(const Header&, const Header&) = default;
};

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t rep_dim = 0;
  std::size_t classes = 0;

  /// Throws ConfigError on zero widths or fewer than two classes.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerCache {
  Matrix input;
  Matrix pre;
};

/// Per-layer inputs and pre-activations from one extractor forward pass.
struct ForwardCache {
  std::vector<LayerCache> layers;
};

struct Extraction {
  Matrix rep;
  ForwardCache cache;
};

struct InitializedModel {
  Extractor extractor;
  Header header;
};

/// He-uniform weights and zero biases for extractor layers, Xavier-uniform
/// for the header. Draw order: layer by layer, weights row-major, then header.
InitializedModel init_model(const ModelConfig& cfg, Rng& rng);

/// Xavier-uniform out x in matrix, U(-sqrt(6/(in+out)), +sqrt(6/(in+out))).
Matrix xavier_uniform(std::size_t out, std::size_t in, Rng& rng);

/// Rows of x are samples. Throws DimensionError on width mismatch.
Extraction extract(const Extractor& ex, const Matrix& x);
Matrix head_forward(const Header& h, const Matrix& rep);

/// Backpropagates `upstream` (d loss / d rep) through the extractor.
/// Parameter gradients are ADDED into `grad`, which must be shaped like `ex`
/// (see zeros_like); the gradient w.r.t. the extractor input is returned.
/// Throws StateError if the cache does not match the extractor.
Matrix extractor_backward(const Extractor& ex, const ForwardCache& cache, const Matrix& upstream,
                          Extractor& grad);

/// Adds d loss / d weight into grad and returns d loss / d rep.
Matrix header_backward(const Header& h, const Matrix& rep, const Matrix& grad_logits,
                       Header& grad);

Extractor zeros_like(const Extractor& ex);
Header zeros_like(const Header& h);

// Parameter enumeration in declared order: for each extractor layer its
// weight then bias, then header weight. Checkpoints, aggregation and flat
// gradient checks all rely on this order.
std::vector<Matrix*> parameters(Extractor& ex);
std::vector<const Matrix*> parameters(const Extractor& ex);
std::vector<Matrix*> parameters(Header& h);
std::vector<const Matrix*> parameters(const Header& h);

template <typename Model>
std::size_t param_count(const Model& m) {
  std::size_t n = 0;
  for (const Matrix* p : parameters(m)) n += p->size();
  return n;
}

template <typename Model>
std::vector<double> flatten(const Model& m) {
  std::vector<double> out;
  out.reserve(param_count(m));
  for (const Matrix* p : parameters(m)) out.insert(out.end(), p->data().begin(), p->data().end());
  return out;
}

template <typename Model>
void unflatten(Model& m, std::span<const double> values) {
  if (values.size() != param_count(m)) {
    throw DimensionError("unflatten: expected " + std::to_string(param_count(m)) +
                         " values, got " + std::to_string(values.size()));
  }
  std::size_t offset = 0;
  for (Matrix* p : parameters(m)) {
    auto dst = p->data();
    for (double& v : dst) v = values[offset++];
  }
}

/// Recovers the configuration an (extractor, header) pair was built from.
ModelConfig config_of(const Extractor& ex, const Header& h);

}  // namespace fedmrl
