#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedmrl/data.hpp"
#include "fedmrl/mrl.hpp"
#include "fedmrl/report.hpp"
#include "fedmrl/rng.hpp"

namespace fedmrl {

enum class TrainingMode { FedMRL, Standalone, FedMRLNoMRL };

std::string_view to_string(TrainingMode m);
TrainingMode parse_training_mode(std::string_view name);

using ClientId = std::size_t;

struct RunConfig {
  std::size_t n_clients = 10;
  double participation = 1.0;  // C in (0, 1]
  std::size_t rounds = 10;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 16;
  LearningRates lrs;
  std::size_t d1 = 4;
  std::size_t d2 = 16;
  LossWeights weights;
  TrainingMode mode = TrainingMode::FedMRL;
  InferenceVariant variant = InferenceVariant::MixLarge;
  std::uint64_t seed = 0;

  std::vector<std::size_t> global_hidden{32};
  /// Heterogeneous local extractor shapes, dealt round-robin by client id.
  std::vector<std::vector<std::size_t>> local_hidden{{64}, {48}, {32}};

  /// K = round(C * N).
  std::size_t clients_per_round() const;
  void validate() const;
};

/// Everything a client holds. The server never sees local_model or projector.
struct ClientState {
  ClientId id = 0;
  LocalHeteroModel local_model;
  Projector projector;
  GlobalSmallModel global_copy;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::size_t n_k = 0;
  Rng rng;
  bool awaiting_update = false;
};

struct ServerState {
  GlobalSmallModel global_model;
  std::size_t round = 0;
  Rng rng;
};

/// The only thing that travels client -> server: theta-shaped parameters and
/// scalar diagnostics.
struct ThetaUpload {
  ClientId client = 0;
  std::size_t n_k = 0;
  GlobalSmallModel theta;
  std::vector<double> epoch_losses;
  double mean_loss = 0.0;
};

struct LocalTrainingOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  LearningRates lrs;
  LossWeights weights;
  TrainingMode mode = TrainingMode::FedMRL;
};

/// Uniform sample of k ids without replacement, returned ascending.
std::vector<ClientId> sample_clients(ServerState& server, std::size_t n, std::size_t k);

/// Deep-copies the server model into each listed client.
void broadcast(const ServerState& server, std::span<ClientState> clients,
               std::span<const ClientId> ids);

/// E epochs of shuffled mini-batch SGD on the client's train split. Each
/// epoch covers the whole split; the last batch may be short. In
/// Standalone mode only the local model trains.
ThetaUpload client_update(ClientState& client, const LabeledDataset& ds,
                          const LocalTrainingOptions& opts);

/// theta <- sum_k (n_k / n) theta_k with n summed over these uploads, in
/// ascending client-id order.
void aggregate(ServerState& server, std::span<const ThetaUpload> uploads);

/// Normalised n_k / n weights in ascending client-id order.
std::vector<double> aggregation_weights(std::span<const ThetaUpload> uploads);

/// Owns the server and every client for one run.
class Simulation {
 public:
  Simulation(RunConfig cfg, const LabeledDataset& ds, const PartitionPlan& plan);

  /// One round: sample, broadcast, local training, aggregate, evaluate.
  RoundReport step();
  std::vector<RoundReport> run();

  const RunConfig& config() const noexcept { return cfg_; }
  const ServerState& server() const noexcept { return server_; }
  ServerState& server() noexcept { return server_; }
  std::span<const ClientState> clients() const noexcept { return clients_; }
  std::span<ClientState> clients() noexcept { return clients_; }
  InferenceVariant eval_variant() const noexcept;

 private:
  RunConfig cfg_;
  const LabeledDataset* ds_;
  ServerState server_;
  std::vector<ClientState> clients_;
};

std::vector<RoundReport> run_training(const RunConfig& cfg, const LabeledDataset& ds,
                                      const PartitionPlan& plan);

}  // namespace fedmrl
