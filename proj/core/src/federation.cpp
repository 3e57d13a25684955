#include "fedmrl/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedmrl/error.hpp"
#include "fedmrl/metrics.hpp"

namespace fedmrl {
namespace {

// Seed streams derived from RunConfig::seed.
constexpr std::uint64_t kGlobalInitStream = 1;
constexpr std::uint64_t kServerStream = 2;
constexpr std::uint64_t kLocalInitStream = 1000;
constexpr std::uint64_t kClientTrainStream = 1'000'000;

}  // namespace

std::string_view to_string(TrainingMode m) {
  switch (m) {
    case TrainingMode::FedMRL: return "fedmrl";
    case TrainingMode::Standalone: return "standalone";
    case TrainingMode::FedMRLNoMRL: return "no-mrl";
  }
  return "unknown";
}

TrainingMode parse_training_mode(std::string_view name) {
  for (auto m : {TrainingMode::FedMRL, TrainingMode::Standalone, TrainingMode::FedMRLNoMRL}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "' (fedmrl|standalone|no-mrl)");
}

std::size_t RunConfig::clients_per_round() const {
  return static_cast<std::size_t>(std::llround(participation * static_cast<double>(n_clients)));
}

void RunConfig::validate() const {
  if (n_clients == 0) throw ConfigError("run config: n_clients must be positive");
  if (!(participation > 0.0) || participation > 1.0) {
    throw ConfigError("run config: participation must be in (0, 1]");
  }
  const std::size_t k = clients_per_round();
  if (k < 1 || k > n_clients) {
    throw ConfigError("run config: participation yields K=" + std::to_string(k) + " of " +
                      std::to_string(n_clients) + " clients");
  }
  if (batch_size == 0) throw ConfigError("run config: batch_size must be positive");
  if (d1 == 0 || d1 > d2) {
    throw ConfigError("run config: need 0 < d1 <= d2, got d1=" + std::to_string(d1) +
                      " d2=" + std::to_string(d2));
  }
  if (local_hidden.empty()) throw ConfigError("run config: at least one local model shape");
  for (double lr : {lrs.theta, lrs.omega, lrs.phi})
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("run config: bad learning rate");
  if (weights.global < 0.0 || weights.local < 0.0) {
    throw ConfigError("run config: loss weights must be non-negative");
  }
}

std::vector<ClientId> sample_clients(ServerState& server, std::size_t n, std::size_t k) {
  if (k < 1 || k > n) {
    throw ConfigError("sample_clients: cannot sample " + std::to_string(k) + " of " +
                      std::to_string(n) + " clients");
  }
  std::vector<ClientId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(server.rng.uniform_int(n - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void broadcast(const ServerState& server, std::span<ClientState> clients,
               std::span<const ClientId> ids) {
  for (ClientId id : ids) {
    if (id >= clients.size()) {
      throw ConfigError("broadcast: unknown client id " + std::to_string(id));
    }
    clients[id].global_copy = server.global_model;
    clients[id].awaiting_update = true;
  }
}

ThetaUpload client_update(ClientState& client, const LabeledDataset& ds,
                          const LocalTrainingOptions& opts) {
  if (opts.mode != TrainingMode::Standalone && !client.awaiting_update) {
    throw StateError("client_update: client " + std::to_string(client.id) +
                     " has not received this round's broadcast");
  }
  if (client.train.empty()) {
    throw DataError("client_update: client " + std::to_string(client.id) + " has no training data");
  }
  if (opts.batch_size == 0) throw ConfigError("client_update: batch_size must be positive");

  ThetaUpload up;
  up.client = client.id;
  up.n_k = client.train.size();

  std::vector<std::size_t> order = client.train;
  std::vector<std::size_t> labels;
  for (std::size_t e = 0; e < opts.epochs; ++e) {
    client.rng.shuffle(order);
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const Matrix x = gather_rows(ds.features, batch);
      labels.clear();
      for (std::size_t idx : batch) labels.push_back(ds.labels[idx]);

      double loss = 0.0;
      switch (opts.mode) {
        case TrainingMode::FedMRL: {
          auto pass = forward_loss(client.global_copy, client.local_model, client.projector, x,
                                   labels, opts.weights);
          loss = pass.loss.total;
          backward_and_step(client.global_copy, client.local_model, client.projector, pass.cache,
                            opts.lrs);
          break;
        }
        case TrainingMode::FedMRLNoMRL: {
          auto pass = forward_loss_no_mrl(client.global_copy, client.local_model, client.projector,
                                          x, labels);
          loss = pass.loss.total;
          backward_and_step(client.global_copy, client.local_model, client.projector, pass.cache,
                            opts.lrs);
          break;
        }
        case TrainingMode::Standalone: {
          const auto pass = forward_loss_single(client.local_model, x, labels);
          loss = pass.loss;
          backward_and_step_single(client.local_model, pass, opts.lrs.omega);
          break;
        }
      }
      weighted += loss * static_cast<double>(batch.size());
    }
    up.epoch_losses.push_back(weighted / static_cast<double>(order.size()));
  }
  if (!up.epoch_losses.empty()) {
    up.mean_loss = std::accumulate(up.epoch_losses.begin(), up.epoch_losses.end(), 0.0) /
                   static_cast<double>(up.epoch_losses.size());
  }
  up.theta = client.global_copy;
  client.awaiting_update = false;
  return up;
}

namespace {

std::vector<const ThetaUpload*> sorted_uploads(std::span<const ThetaUpload> uploads) {
  std::vector<const ThetaUpload*> out;
  out.reserve(uploads.size());
  for (const auto& u : uploads) out.push_back(&u);
  std::stable_sort(out.begin(), out.end(),
                   [](const ThetaUpload* a, const ThetaUpload* b) { return a->client < b->client; });
  return out;
}

}  // namespace

std::vector<double> aggregation_weights(std::span<const ThetaUpload> uploads) {
  const auto ordered = sorted_uploads(uploads);
  std::size_t n = 0;
  for (const auto* u : ordered) n += u->n_k;
  if (n == 0) throw DataError("aggregate: uploads carry no samples");
  std::vector<double> w;
  for (const auto* u : ordered) w.push_back(static_cast<double>(u->n_k) / static_cast<double>(n));
  return w;
}

// Running weighted mean: theta <- theta + (n_k / n_seen) (theta_k - theta).
// Algebraically sum_k (n_k / n) theta_k, and exact when all theta_k agree.
void aggregate(ServerState& server, std::span<const ThetaUpload> uploads) {
  if (uploads.empty()) throw DataError("aggregate: no uploads");
  const auto ordered = sorted_uploads(uploads);
  const auto reference = parameters(server.global_model);
  for (const auto* u : ordered) {
    const auto ps = parameters(u->theta);
    bool ok = ps.size() == reference.size();
    for (std::size_t i = 0; ok && i < ps.size(); ++i) ok = ps[i]->same_shape(*reference[i]);
    if (!ok) {
      throw DimensionError("aggregate: upload from client " + std::to_string(u->client) +
                           " does not match the global model shape");
    }
    if (u->n_k == 0) {
      throw DataError("aggregate: client " + std::to_string(u->client) + " reports n_k = 0");
    }
  }

  GlobalSmallModel acc = ordered.front()->theta;
  std::size_t seen = ordered.front()->n_k;
  for (std::size_t j = 1; j < ordered.size(); ++j) {
    seen += ordered[j]->n_k;
    const double w = static_cast<double>(ordered[j]->n_k) / static_cast<double>(seen);
    auto dst = parameters(acc);
    const auto src = parameters(ordered[j]->theta);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      auto d = dst[i]->data();
      const auto s = src[i]->data();
      for (std::size_t t = 0; t < d.size(); ++t) d[t] += w * (s[t] - d[t]);
    }
  }
  server.global_model = std::move(acc);
}

Simulation::Simulation(RunConfig cfg, const LabeledDataset& ds, const PartitionPlan& plan)
    : cfg_(std::move(cfg)), ds_(&ds) {
  cfg_.validate();
  ds.validate();
  if (plan.n_clients() != cfg_.n_clients) {
    throw ConfigError("simulation: plan has " + std::to_string(plan.n_clients()) +
                      " clients, config expects " + std::to_string(cfg_.n_clients));
  }
  plan.validate(ds.size());

  const Rng base(cfg_.seed);
  Rng global_rng = base.fork(kGlobalInitStream);
  ModelConfig gcfg{ds.dim(), cfg_.global_hidden, cfg_.d1, ds.classes};
  server_.global_model = make_global_model(gcfg, global_rng);
  server_.rng = base.fork(kServerStream);

  clients_.reserve(cfg_.n_clients);
  for (std::size_t k = 0; k < cfg_.n_clients; ++k) {
    Rng init = base.fork(kLocalInitStream + k);
    ClientState c;
    c.id = k;
    const ModelConfig lcfg{ds.dim(), cfg_.local_hidden[k % cfg_.local_hidden.size()], cfg_.d2,
                           ds.classes};
    c.local_model = make_local_model(lcfg, init);
    c.projector = make_projector(cfg_.d1, cfg_.d2, init);
    c.global_copy = server_.global_model;
    c.train = plan.clients[k].train;
    c.test = plan.clients[k].test;
    c.n_k = c.train.size();
    c.rng = base.fork(kClientTrainStream + k);
    if (c.train.empty() || c.test.empty()) {
      throw DataError("simulation: client " + std::to_string(k) + " has an empty split");
    }
    clients_.push_back(std::move(c));
  }
}

InferenceVariant Simulation::eval_variant() const noexcept {
  return cfg_.mode == TrainingMode::Standalone ? InferenceVariant::SingleLarge : cfg_.variant;
}

RoundReport Simulation::step() {
  const bool federated = cfg_.mode != TrainingMode::Standalone;
  const std::size_t k = cfg_.clients_per_round();
  ++server_.round;

  const auto ids = sample_clients(server_, cfg_.n_clients, k);
  if (federated) broadcast(server_, clients_, ids);

  const LocalTrainingOptions opts{cfg_.local_epochs, cfg_.batch_size, cfg_.lrs, cfg_.weights,
                                  cfg_.mode};
  std::vector<ThetaUpload> uploads;
  uploads.reserve(ids.size());
  for (ClientId id : ids) uploads.push_back(client_update(clients_[id], *ds_, opts));
  if (federated) aggregate(server_, uploads);

  RoundReport r;
  r.round = server_.round;
  const auto variant = eval_variant();
  for (const auto& c : clients_) r.per_client_accuracy.push_back(evaluate(c, *ds_, variant));
  r.avg_test_accuracy =
      std::accumulate(r.per_client_accuracy.begin(), r.per_client_accuracy.end(), 0.0) /
      static_cast<double>(clients_.size());
  double loss = 0.0;
  for (const auto& u : uploads) loss += u.mean_loss;
  r.mean_train_loss = loss / static_cast<double>(uploads.size());

  const auto comm = comm_cost_round(param_count(server_.global_model), ids.size(), cfg_.mode);
  r.uplink_params = comm.uplink;
  r.downlink_params = comm.downlink;
  for (ClientId id : ids) {
    const auto& c = clients_[id];
    r.flops += flops_round(c.global_copy, c.local_model, c.projector, c.train.size(),
                           cfg_.local_epochs, cfg_.mode);
  }
  return r;
}

std::vector<RoundReport> Simulation::run() {
  std::vector<RoundReport> out;
  out.reserve(cfg_.rounds);
  for (std::size_t t = 0; t < cfg_.rounds; ++t) out.push_back(step());
  return out;
}

std::vector<RoundReport> run_training(const RunConfig& cfg, const LabeledDataset& ds,
                                      const PartitionPlan& plan) {
  Simulation sim(cfg, ds, plan);
  return sim.run();
}

}  // namespace fedmrl
