#include "fedmrl/model.hpp"

#include <cmath>
#include <string>

namespace fedmrl {
namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double limit, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return m;
}

AffineLayer he_layer(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in));
  return {uniform_matrix(out, in, limit, rng), Matrix(1, out), Activation::ReLU};
}

void check_cache(const Extractor& ex, const ForwardCache& cache) {
  if (cache.layers.size() != ex.layers.size()) {
    throw StateError("extractor_backward: cache holds " + std::to_string(cache.layers.size()) +
                     " layers, extractor has " + std::to_string(ex.layers.size()));
  }
  for (std::size_t i = 0; i < ex.layers.size(); ++i) {
    const auto& lc = cache.layers[i];
    if (lc.input.cols() != ex.layers[i].in_dim() || lc.pre.cols() != ex.layers[i].out_dim() ||
        lc.input.rows() != lc.pre.rows()) {
      throw StateError("extractor_backward: cache for layer " + std::to_string(i) +
                       " does not match the extractor");
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("model config: input_dim must be positive");
  if (rep_dim == 0) throw ConfigError("model config: rep_dim must be positive");
  if (classes < 2) throw ConfigError("model config: need at least 2 classes");
  for (std::size_t w : hidden_widths)
    if (w == 0) throw ConfigError("model config: zero-width hidden layer");
}

Matrix xavier_uniform(std::size_t out, std::size_t in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  return uniform_matrix(out, in, limit, rng);
}

InitializedModel init_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  InitializedModel m;
  std::size_t in = cfg.input_dim;
  for (std::size_t w : cfg.hidden_widths) {
    m.extractor.layers.push_back(he_layer(in, w, rng));
    in = w;
  }
  m.extractor.layers.push_back(he_layer(in, cfg.rep_dim, rng));
  m.header.weight = xavier_uniform(cfg.classes, cfg.rep_dim, rng);
  return m;
}

Extraction extract(const Extractor& ex, const Matrix& x) {
  if (ex.layers.empty()) throw StateError("extract: extractor has no layers");
  if (x.cols() != ex.input_dim()) {
    throw DimensionError("extract: input width " + std::to_string(x.cols()) +
                         " does not match extractor input " + std::to_string(ex.input_dim()));
  }
  Extraction out;
  out.cache.layers.reserve(ex.layers.size());
  Matrix h = x;
  for (const auto& layer : ex.layers) {
    Matrix pre = matmul_bt(h, layer.weight);
    if (layer.has_bias()) add_row_broadcast(pre, layer.bias);
    Matrix act = apply_activation(pre, layer.activation);
    out.cache.layers.push_back({std::move(h), std::move(pre)});
    h = std::move(act);
  }
  out.rep = std::move(h);
  return out;
}

Matrix head_forward(const Header& h, const Matrix& rep) {
  if (rep.cols() != h.in_dim()) {
    throw DimensionError("head_forward: representation width " + std::to_string(rep.cols()) +
                         " does not match header input " + std::to_string(h.in_dim()));
  }
  return matmul_bt(rep, h.weight);
}

Matrix extractor_backward(const Extractor& ex, const ForwardCache& cache, const Matrix& upstream,
                          Extractor& grad) {
  check_cache(ex, cache);
  if (grad.layers.size() != ex.layers.size()) {
    throw DimensionError("extractor_backward: gradient accumulator has wrong depth");
  }
  Matrix delta = upstream;
  for (std::size_t i = ex.layers.size(); i-- > 0;) {
    const auto& layer = ex.layers[i];
    const auto& lc = cache.layers[i];
    // d pre = d act * act'(pre)
    Matrix dpre = activation_backward(lc.pre, delta, layer.activation);
    axpy(grad.layers[i].weight, 1.0, matmul_at(dpre, lc.input));
    if (layer.has_bias()) axpy(grad.layers[i].bias, 1.0, column_sums(dpre));
    delta = matmul(dpre, layer.weight);
  }
  return delta;
}

Matrix header_backward(const Header& h, const Matrix& rep, const Matrix& grad_logits,
                       Header& grad) {
  if (grad_logits.cols() != h.classes() || grad_logits.rows() != rep.rows()) {
    throw DimensionError("header_backward: logits gradient " + grad_logits.shape_string() +
                         " vs representation " + rep.shape_string());
  }
  axpy(grad.weight, 1.0, matmul_at(grad_logits, rep));
  return matmul(grad_logits, h.weight);
}

Extractor zeros_like(const Extractor& ex) {
  Extractor out;
  out.layers.reserve(ex.layers.size());
  for (const auto& l : ex.layers) {
    out.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()),
                          Matrix(l.bias.rows(), l.bias.cols()), l.activation});
  }
  return out;
}

Header zeros_like(const Header& h) { return {Matrix(h.weight.rows(), h.weight.cols())}; }

std::vector<Matrix*> parameters(Extractor& ex) {
  std::vector<Matrix*> out;
  for (auto& l : ex.layers) {
    out.push_back(&l.weight);
    if (l.has_bias()) out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Matrix*> parameters(const Extractor& ex) {
  std::vector<const Matrix*> out;
  for (const auto& l : ex.layers) {
    out.push_back(&l.weight);
    if (l.has_bias()) out.push_back(&l.bias);
  }
  return out;
}

std::vector<Matrix*> parameters(Header& h) { return {&h.weight}; }
std::vector<const Matrix*> parameters(const Header& h) { return {&h.weight}; }

ModelConfig config_of(const Extractor& ex, const Header& h) {
  ModelConfig cfg;
  cfg.input_dim = ex.input_dim();
  for (std::size_t i = 0; i + 1 < ex.layers.size(); ++i)
    cfg.hidden_widths.push_back(ex.layers[i].out_dim());
  cfg.rep_dim = ex.rep_dim();
  cfg.classes = h.classes();
  return cfg;
}

}  // namespace fedmrl
