#include "fedmrl/mrl.hpp"

#include <cmath>
#include <string>

#include "fedmrl/error.hpp"

namespace fedmrl {
namespace {

template <typename Model>
std::vector<Matrix*> model_params(Model& m) {
  auto out = parameters(m.extractor);
  out.push_back(&m.header.weight);
  return out;
}

template <typename Model>
std::vector<const Matrix*> model_params(const Model& m) {
  auto out = parameters(m.extractor);
  out.push_back(&m.header.weight);
  return out;
}

template <typename Model>
void step_params(Model& m, const Model& grad, double lr) {
  auto dst = parameters(m);
  const auto src = parameters(grad);
  for (std::size_t i = 0; i < dst.size(); ++i) sgd_step_inplace(*dst[i], *src[i], lr);
}

Matrix pad_cols(const Matrix& a, std::size_t width) {
  Matrix out(a.rows(), width);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

void check_batch(const Matrix& x, std::span<const std::size_t> labels) {
  if (x.rows() != labels.size() || x.rows() == 0) {
    throw DimensionError("forward_loss: " + std::to_string(labels.size()) + " labels for input " +
                         x.shape_string());
  }
}

FusionPass fused_forward(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                         const Matrix& x, std::span<const std::size_t> labels,
                         LossWeights weights, bool multi_granular) {
  validate_triple(g, f, p);
  check_batch(x, labels);
  if (weights.global < 0.0 || weights.local < 0.0) {
    throw ConfigError("forward_loss: loss weights must be non-negative");
  }

  FusionPass pass;
  auto& c = pass.cache;
  c.d1 = g.rep_dim();
  c.batch = x.rows();
  c.multi_granular = multi_granular;
  c.global_rep = extract(g.extractor, x);
  c.local_rep = extract(f.extractor, x);
  c.spliced = splice(c.global_rep.rep, c.local_rep.rep);
  c.fused = project(p, c.spliced);

  // The fine prefix is the whole fused representation.
  pass.logits_local = head_forward(f.header, c.fused);
  auto local_ce = cross_entropy_mean(pass.logits_local, labels);
  pass.loss.local = local_ce.loss;

  if (multi_granular) {
    auto prefixes = matryoshka_prefixes(c.fused, c.d1);
    c.coarse = std::move(prefixes.coarse);
    pass.logits_global = head_forward(g.header, c.coarse);
    auto global_ce = cross_entropy_mean(pass.logits_global, labels);
    pass.loss.global = global_ce.loss;
    c.grad_logits_global = scale(global_ce.grad_logits, weights.global);
    c.grad_logits_local = scale(local_ce.grad_logits, weights.local);
    pass.loss.total = weights.global * pass.loss.global + weights.local * pass.loss.local;
  } else {
    c.grad_logits_local = std::move(local_ce.grad_logits);
    pass.loss.total = pass.loss.local;
  }
  return pass;
}

}  // namespace

std::vector<Matrix*> parameters(GlobalSmallModel& m) { return model_params(m); }
std::vector<const Matrix*> parameters(const GlobalSmallModel& m) { return model_params(m); }
std::vector<Matrix*> parameters(LocalHeteroModel& m) { return model_params(m); }
std::vector<const Matrix*> parameters(const LocalHeteroModel& m) { return model_params(m); }
std::vector<Matrix*> parameters(Projector& p) { return {&p.weight}; }
std::vector<const Matrix*> parameters(const Projector& p) { return {&p.weight}; }

GlobalSmallModel zeros_like(const GlobalSmallModel& m) {
  return {zeros_like(m.extractor), zeros_like(m.header)};
}
LocalHeteroModel zeros_like(const LocalHeteroModel& m) {
  return {zeros_like(m.extractor), zeros_like(m.header)};
}
Projector zeros_like(const Projector& p) { return {Matrix(p.weight.rows(), p.weight.cols())}; }

GlobalSmallModel make_global_model(const ModelConfig& cfg, Rng& rng) {
  auto m = init_model(cfg, rng);
  return {std::move(m.extractor), std::move(m.header)};
}

LocalHeteroModel make_local_model(const ModelConfig& cfg, Rng& rng) {
  auto m = init_model(cfg, rng);
  return {std::move(m.extractor), std::move(m.header)};
}

Projector make_projector(std::size_t d1, std::size_t d2, Rng& rng) {
  if (d1 == 0 || d2 == 0) throw ConfigError("projector: d1 and d2 must be positive");
  return {xavier_uniform(d2, d1 + d2, rng)};
}

void validate_triple(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p) {
  const std::size_t d1 = g.rep_dim();
  const std::size_t d2 = f.rep_dim();
  if (d1 == 0 || d1 > d2) {
    throw ConfigError("fedmrl: need 0 < d1 <= d2, got d1=" + std::to_string(d1) +
                      " d2=" + std::to_string(d2));
  }
  if (g.extractor.input_dim() != f.extractor.input_dim()) {
    throw DimensionError("fedmrl: global and local extractors read different input widths");
  }
  if (p.weight.rows() != d2 || p.weight.cols() != d1 + d2) {
    throw DimensionError("fedmrl: projector " + p.weight.shape_string() + " does not map " +
                         std::to_string(d1 + d2) + " -> " + std::to_string(d2));
  }
  if (g.header.in_dim() != d1 || f.header.in_dim() != d2) {
    throw DimensionError("fedmrl: header input widths do not match representation widths");
  }
  if (g.header.classes() != f.header.classes()) {
    throw DimensionError("fedmrl: global and local headers disagree on class count");
  }
}

std::string_view to_string(InferenceVariant v) {
  switch (v) {
    case InferenceVariant::MixLarge: return "mix-large";
    case InferenceVariant::MixSmall: return "mix-small";
    case InferenceVariant::SingleSmall: return "single-small";
    case InferenceVariant::SingleLarge: return "single-large";
  }
  return "unknown";
}

InferenceVariant parse_inference_variant(std::string_view name) {
  for (auto v : {InferenceVariant::MixLarge, InferenceVariant::MixSmall,
                 InferenceVariant::SingleSmall, InferenceVariant::SingleLarge}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown inference variant '" + std::string(name) + "'");
}

Matrix splice(const Matrix& rep_global, const Matrix& rep_local) {
  return hconcat(rep_global, rep_local);
}

Matrix project(const Projector& p, const Matrix& spliced) {
  if (spliced.cols() != p.spliced_dim()) {
    throw DimensionError("project: spliced width " + std::to_string(spliced.cols()) +
                         " does not match projector " + p.weight.shape_string());
  }
  return matmul_bt(spliced, p.weight);
}

MatryoshkaPrefixes matryoshka_prefixes(const Matrix& fused, std::size_t d1) {
  if (d1 == 0 || d1 > fused.cols()) {
    throw DimensionError("matryoshka_prefixes: d1=" + std::to_string(d1) +
                         " outside fused width " + std::to_string(fused.cols()));
  }
  return {slice_cols(fused, 0, d1), fused};
}

FusionPass forward_loss(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                        const Matrix& x, std::span<const std::size_t> labels,
                        LossWeights weights) {
  return fused_forward(g, f, p, x, labels, weights, true);
}

FusionPass forward_loss_no_mrl(const GlobalSmallModel& g, const LocalHeteroModel& f,
                               const Projector& p, const Matrix& x,
                               std::span<const std::size_t> labels) {
  return fused_forward(g, f, p, x, labels, {0.0, 1.0}, false);
}

FusionGradients backward(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                         const FusionCache& c) {
  if (c.consumed) throw StateError("backward: cache already consumed by a previous step");
  if (c.batch == 0 || c.fused.rows() != c.batch || c.d1 != g.rep_dim() ||
      c.fused.cols() != f.rep_dim() || c.spliced.cols() != p.spliced_dim()) {
    throw StateError("backward: cache does not belong to this model triple");
  }

  FusionGradients grads{zeros_like(g), zeros_like(f), zeros_like(p)};

  // Local header on the fine prefix (all of fused).
  Matrix d_fused = header_backward(f.header, c.fused, c.grad_logits_local, grads.omega.header);

  // Global header on the coarse prefix; its gradient lands in the first d1
  // columns of fused.
  if (c.multi_granular) {
    Matrix d_coarse = header_backward(g.header, c.coarse, c.grad_logits_global, grads.theta.header);
    axpy(d_fused, 1.0, pad_cols(d_coarse, d_fused.cols()));
  }

  // fused = spliced W^T
  grads.phi.weight = matmul_at(d_fused, c.spliced);
  Matrix d_spliced = matmul(d_fused, p.weight);

  // Splice: first d1 columns came from the global extractor.
  const Matrix d_rep_global = slice_cols(d_spliced, 0, c.d1);
  const Matrix d_rep_local = slice_cols(d_spliced, c.d1, d_spliced.cols());
  extractor_backward(g.extractor, c.global_rep.cache, d_rep_global, grads.theta.extractor);
  extractor_backward(f.extractor, c.local_rep.cache, d_rep_local, grads.omega.extractor);
  return grads;
}

void apply_gradients(GlobalSmallModel& g, LocalHeteroModel& f, Projector& p,
                     const FusionGradients& grads, LearningRates lrs) {
  step_params(g, grads.theta, lrs.theta);
  step_params(f, grads.omega, lrs.omega);
  sgd_step_inplace(p.weight, grads.phi.weight, lrs.phi);
}

void backward_and_step(GlobalSmallModel& g, LocalHeteroModel& f, Projector& p, FusionCache& cache,
                       LearningRates lrs) {
  const auto grads = backward(g, f, p, cache);
  apply_gradients(g, f, p, grads, lrs);
  cache.consumed = true;
}

SinglePass forward_loss_single(const LocalHeteroModel& f, const Matrix& x,
                               std::span<const std::size_t> labels) {
  check_batch(x, labels);
  SinglePass pass;
  pass.rep = extract(f.extractor, x);
  auto ce = cross_entropy_mean(head_forward(f.header, pass.rep.rep), labels);
  pass.loss = ce.loss;
  pass.grad_logits = std::move(ce.grad_logits);
  return pass;
}

void backward_and_step_single(LocalHeteroModel& f, const SinglePass& pass, double lr) {
  LocalHeteroModel grad = zeros_like(f);
  Matrix d_rep = header_backward(f.header, pass.rep.rep, pass.grad_logits, grad.header);
  extractor_backward(f.extractor, pass.rep.cache, d_rep, grad.extractor);
  step_params(f, grad, lr);
}

Matrix infer_logits(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                    const Matrix& x, InferenceVariant variant) {
  switch (variant) {
    case InferenceVariant::SingleSmall:
      return head_forward(g.header, extract(g.extractor, x).rep);
    case InferenceVariant::SingleLarge:
      return head_forward(f.header, extract(f.extractor, x).rep);
    case InferenceVariant::MixLarge:
    case InferenceVariant::MixSmall:
      break;
  }
  const Matrix fused =
      project(p, splice(extract(g.extractor, x).rep, extract(f.extractor, x).rep));
  if (variant == InferenceVariant::MixLarge) return head_forward(f.header, fused);
  return head_forward(g.header, matryoshka_prefixes(fused, g.rep_dim()).coarse);
}

std::vector<std::size_t> infer(const GlobalSmallModel& g, const LocalHeteroModel& f,
                               const Projector& p, const Matrix& x, InferenceVariant variant) {
  return argmax_rows(infer_logits(g, f, p, x, variant));
}

double lr_bound(const TheoryConstants& c) {
  if (!(c.lipschitz > 0.0) || !(c.grad_variance > 0.0) || !(c.epsilon > 0.0) ||
      c.local_iterations == 0 || c.agg_variation < 0.0) {
    throw ConfigError("lr_bound: L1, sigma^2, epsilon and E must be positive, delta^2 >= 0");
  }
  if (c.epsilon <= c.agg_variation) {
    throw ConfigError("lr_bound: no admissible learning rate (epsilon <= delta^2)");
  }
  const auto e = static_cast<double>(c.local_iterations);
  return 2.0 * (c.epsilon - c.agg_variation) /
         (c.lipschitz * (c.epsilon + e * c.grad_variance));
}

}  // namespace fedmrl
