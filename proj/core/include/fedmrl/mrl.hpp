#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "fedmrl/matrix.hpp"
#include "fedmrl/model.hpp"

namespace fedmrl {

/// Homogeneous small model shared through the server. rep_dim is d1.
struct GlobalSmallModel {
  Extractor extractor;
  Header header;

  std::size_t rep_dim() const { return extractor.rep_dim(); }
  friend bool operator==(const GlobalSmallModel&, const GlobalSmallModel&) = default;
};

/// Client-private heterogeneous model. rep_dim is d2.
struct LocalHeteroModel {
  Extractor extractor;
  Header header;

  std::size_t rep_dim() const { return extractor.rep_dim(); }
  friend bool operator==(const LocalHeteroModel&, const LocalHeteroModel&) = default;
};

/// Bias-free linear map from the spliced [global | local] representation
/// (width d1 + d2) to the fused representation (width d2).
struct Projector {
  Matrix weight;  // d2 x (d1 + d2)

  std::size_t fused_dim() const noexcept { return weight.rows(); }
  std::size_t spliced_dim() const noexcept { return weight.cols(); }
  friend bool operator==(const Projector&, const Projector&) = default;
};

std::vector<Matrix*> parameters(GlobalSmallModel& m);
std::vector<const Matrix*> parameters(const GlobalSmallModel& m);
std::vector<Matrix*> parameters(LocalHeteroModel& m);
std::vector<const Matrix*> parameters(const LocalHeteroModel& m);
std::vector<Matrix*> parameters(Projector& p);
std::vector<const Matrix*> parameters(const Projector& p);

GlobalSmallModel zeros_like(const GlobalSmallModel& m);
LocalHeteroModel zeros_like(const LocalHeteroModel& m);
Projector zeros_like(const Projector& p);

GlobalSmallModel make_global_model(const ModelConfig& cfg, Rng& rng);
LocalHeteroModel make_local_model(const ModelConfig& cfg, Rng& rng);
/// Xavier-uniform d2 x (d1 + d2).
Projector make_projector(std::size_t d1, std::size_t d2, Rng& rng);

/// Checks the dimension chain of a client triple: shared input width,
/// 0 < d1 <= d2, projector d2 x (d1 + d2), equal class counts.
void validate_triple(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p);

struct LossWeights {
  double global = 1.0;
  double local = 1.0;
};

struct LearningRates {
  double theta = 0.01;
  double omega = 0.01;
  double phi = 0.01;

  static LearningRates uniform(double lr) { return {lr, lr, lr}; }
};

enum class InferenceVariant { MixLarge, MixSmall, SingleSmall, SingleLarge };

std::string_view to_string(InferenceVariant v);
InferenceVariant parse_inference_variant(std::string_view name);

// ---- representation plumbing --------------------------------------------

/// [global | local], global first.
Matrix splice(const Matrix& rep_global, const Matrix& rep_local);

/// fused = spliced * W^T, width d2.
Matrix project(const Projector& p, const Matrix& spliced);

struct MatryoshkaPrefixes {
  Matrix coarse;  // first d1 columns
  Matrix fine;    // first d2 columns, i.e. all of fused
};

/// Nested prefixes of the fused representation. Throws DimensionError when
/// d1 exceeds the fused width.
MatryoshkaPrefixes matryoshka_prefixes(const Matrix& fused, std::size_t d1);

// ---- training graph -----------------------------------------------------

/// Everything one backward pass needs. A cache is single-use: stepping
/// with it marks it consumed and a second step throws StateError.
struct FusionCache {
  Extraction global_rep;
  Extraction local_rep;
  Matrix spliced;
  Matrix fused;
  Matrix coarse;
  Matrix grad_logits_global;  // d(total)/d(global logits), weights and 1/B applied
  Matrix grad_logits_local;
  std::size_t d1 = 0;
  std::size_t batch = 0;
  bool multi_granular = true;
  bool consumed = false;
};

struct FusionLoss {
  double total = 0.0;
  double global = 0.0;  // mean CE of the global header on the d1 prefix
  double local = 0.0;   // mean CE of the local header on the full fused rep
};

struct FusionPass {
  FusionLoss loss;
  FusionCache cache;
  Matrix logits_global;  // empty without multi-granular learning
  Matrix logits_local;
};

/// Dual-head loss m_g * CE(global header(coarse)) + m_l * CE(local header(fine)),
/// mean-reduced over the rows of x.
FusionPass forward_loss(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                        const Matrix& x, std::span<const std::size_t> labels,
                        LossWeights weights = {});

/// Ablation without Matryoshka prefixes: the fused representation feeds the
/// local header only and the global header takes no part.
FusionPass forward_loss_no_mrl(const GlobalSmallModel& g, const LocalHeteroModel& f,
                               const Projector& p, const Matrix& x,
                               std::span<const std::size_t> labels);

struct FusionGradients {
  GlobalSmallModel theta;
  LocalHeteroModel omega;
  Projector phi;
};

/// Exact gradients of the cached loss w.r.t. every parameter of the triple.
FusionGradients backward(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                         const FusionCache& cache);

void apply_gradients(GlobalSmallModel& g, LocalHeteroModel& f, Projector& p,
                     const FusionGradients& grads, LearningRates lrs);

/// backward + one simultaneous SGD step on theta, omega and phi.
void backward_and_step(GlobalSmallModel& g, LocalHeteroModel& f, Projector& p, FusionCache& cache,
                       LearningRates lrs);

// ---- single-model training (Standalone baseline) --------------------------

struct SinglePass {
  double loss = 0.0;
  Extraction rep;
  Matrix grad_logits;
};

/// Mean CE of a lone local model.
SinglePass forward_loss_single(const LocalHeteroModel& f, const Matrix& x,
                               std::span<const std::size_t> labels);
void backward_and_step_single(LocalHeteroModel& f, const SinglePass& pass, double lr);

// ---- inference ----------------------------------------------------------

/// Logits of the chosen deployed model for each row of x.
///   MixLarge:    both extractors -> splice -> project -> local header
///   MixSmall:    both extractors -> splice -> project -> d1 prefix -> global header
///   SingleSmall: global model alone
///   SingleLarge: local model alone
Matrix infer_logits(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                    const Matrix& x, InferenceVariant variant = InferenceVariant::MixLarge);

/// Argmax class per row; ties resolve to the lowest index.
std::vector<std::size_t> infer(const GlobalSmallModel& g, const LocalHeteroModel& f,
                               const Projector& p, const Matrix& x,
                               InferenceVariant variant = InferenceVariant::MixLarge);

// ---- learning-rate bound ------------------------------------------------

/// Constants of the non-convex convergence guarantee.
struct TheoryConstants {
  double lipschitz = 1.0;       // L1
  double grad_variance = 1.0;   // sigma^2
  double agg_variation = 0.0;   // delta^2
  double epsilon = 1.0;         // target gradient-norm bound
  std::size_t local_iterations = 1;  // E
};

/// Largest admissible learning rate 2(eps - delta^2) / (L1 (eps + E sigma^2)).
/// Throws ConfigError if eps <= delta^2 or any constant is non-positive.
double lr_bound(const TheoryConstants& c);

}  // namespace fedmrl
