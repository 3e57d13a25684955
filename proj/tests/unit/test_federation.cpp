#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <type_traits>

#include "fedmrl/error.hpp"
#include "fedmrl/federation.hpp"
#include "support/oracles.hpp"

namespace fedmrl {
namespace {

struct Fixture {
  LabeledDataset ds;
  PartitionPlan plan;
  RunConfig cfg;
};

Fixture small_setup(std::uint64_t seed = 1, TrainingMode mode = TrainingMode::FedMRL) {
  Fixture fx;
  Rng rng(seed);
  fx.ds = gen_synthetic(4, 8, 30, 1.0, rng);
  fx.plan = split_train_test(partition_class_count(fx.ds, 4, {2}, seed), seed + 7);
  fx.cfg.n_clients = 4;
  fx.cfg.rounds = 3;
  fx.cfg.batch_size = 8;
  fx.cfg.d1 = 2;
  fx.cfg.d2 = 4;
  fx.cfg.global_hidden = {8};
  fx.cfg.local_hidden = {{8}, {6}};
  fx.cfg.lrs = LearningRates::uniform(0.05);
  fx.cfg.mode = mode;
  fx.cfg.seed = seed;
  return fx;
}

// One-layer, one-class-weight model whose every parameter equals v.
GlobalSmallModel constant_model(double v) {
  GlobalSmallModel g;
  g.extractor.layers.push_back({Matrix{{v, v}}, Matrix{{v}}, Activation::ReLU});
  g.header.weight = Matrix{{v}, {v}};
  return g;
}

ThetaUpload upload(ClientId id, std::size_t n, GlobalSmallModel theta) {
  ThetaUpload u;
  u.client = id;
  u.n_k = n;
  u.theta = std::move(theta);
  return u;
}

void expect_all_equal(const GlobalSmallModel& g, double v) {
  for (const auto* m : parameters(g)) for (double x : m->data()) EXPECT_EQ(x, v);
}

TEST(Sampling, FullParticipationReturnsEveryClientInOrder) {
  ServerState s{{}, 0, Rng(1)};
  std::vector<ClientId> all(7);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(sample_clients(s, 7, 7), all);
}

TEST(Sampling, DeterministicForServerSeed) {
  ServerState a{{}, 0, Rng(5)};
  ServerState b{{}, 0, Rng(5)};
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_clients(a, 20, 5), sample_clients(b, 20, 5));
}

TEST(Sampling, DistinctSortedAndInRange) {
  ServerState s{{}, 0, Rng(6)};
  for (int i = 0; i < 50; ++i) {
    const auto ids = sample_clients(s, 20, 6);
    ASSERT_EQ(ids.size(), 6u);
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
    EXPECT_EQ(std::set<ClientId>(ids.begin(), ids.end()).size(), 6u);
    EXPECT_LT(ids.back(), 20u);
  }
}

TEST(Sampling, SingleClientDrawIsUniform) {
  ServerState s{{}, 0, Rng(7)};
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 1000; ++i) ++counts[sample_clients(s, 10, 1).front()];
  for (int c : counts) EXPECT_NEAR(c / 1000.0, 0.1, 0.05);
}

TEST(Sampling, RejectsImpossibleRequests) {
  ServerState s{{}, 0, Rng(8)};
  EXPECT_THROW(sample_clients(s, 5, 6), ConfigError);
  EXPECT_THROW(sample_clients(s, 5, 0), ConfigError);
}

TEST(RunConfig, ParticipationRoundsToClientCount) {
  RunConfig cfg;
  cfg.n_clients = 50;
  cfg.participation = 0.1;
  EXPECT_EQ(cfg.clients_per_round(), 5u);
  cfg.participation = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.participation = 1.0;
  cfg.d1 = 20;
  cfg.d2 = 16;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Broadcast, CopiesServerModelAndStaysIndependent) {
  auto fx = small_setup();
  Simulation sim(fx.cfg, fx.ds, fx.plan);
  auto& server = sim.server();
  for (auto* m : parameters(server.global_model)) m->fill(0.25);
  const std::vector<ClientId> ids{1, 3};
  broadcast(server, sim.clients(), ids);
  EXPECT_EQ(sim.clients()[1].global_copy, server.global_model);
  EXPECT_TRUE(sim.clients()[1].awaiting_update);
  EXPECT_FALSE(sim.clients()[0].awaiting_update);

  parameters(sim.clients()[1].global_copy)[0]->fill(9.0);
  expect_all_equal(server.global_model, 0.25);
  EXPECT_EQ(sim.clients()[3].global_copy, server.global_model);
}

TEST(ClientUpdate, RequiresBroadcastInFederatedModes) {
  auto fx = small_setup();
  Simulation sim(fx.cfg, fx.ds, fx.plan);
  LocalTrainingOptions opts;
  EXPECT_THROW(client_update(sim.clients()[0], fx.ds, opts), StateError);
  opts.mode = TrainingMode::Standalone;
  EXPECT_NO_THROW(client_update(sim.clients()[0], fx.ds, opts));
}

TEST(ClientUpdate, ZeroEpochsReturnsBroadcastThetaUnchanged) {
  auto fx = small_setup();
  Simulation sim(fx.cfg, fx.ds, fx.plan);
  const std::vector<ClientId> ids{0};
  broadcast(sim.server(), sim.clients(), ids);
  const auto local_before = sim.clients()[0].local_model;
  LocalTrainingOptions opts;
  opts.epochs = 0;
  const auto up = client_update(sim.clients()[0], fx.ds, opts);
  EXPECT_EQ(up.theta, sim.server().global_model);
  EXPECT_EQ(sim.clients()[0].local_model, local_before);
  EXPECT_TRUE(up.epoch_losses.empty());
}

TEST(ClientUpdate, ZeroLearningRateChangesNothing) {
  auto fx = small_setup();
  Simulation sim(fx.cfg, fx.ds, fx.plan);
  const std::vector<ClientId> ids{2};
  broadcast(sim.server(), sim.clients(), ids);
  const auto client_before = sim.clients()[2];
  LocalTrainingOptions opts;
  opts.epochs = 3;
  opts.lrs = LearningRates::uniform(0.0);
  const auto up = client_update(sim.clients()[2], fx.ds, opts);
  EXPECT_EQ(up.theta, sim.server().global_model);
  EXPECT_EQ(sim.clients()[2].local_model, client_before.local_model);
  EXPECT_EQ(sim.clients()[2].projector, client_before.projector);
  EXPECT_EQ(up.n_k, client_before.train.size());
}

TEST(ClientUpdate, EpochLossMostlyNonIncreasing) {
  int monotone = 0;
  int trials = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto fx = small_setup(seed);
    Simulation sim(fx.cfg, fx.ds, fx.plan);
    for (ClientId id = 0; id < fx.cfg.n_clients; ++id) {
      const std::vector<ClientId> ids{id};
      broadcast(sim.server(), sim.clients(), ids);
      LocalTrainingOptions opts;
      opts.epochs = 5;
      opts.batch_size = 8;
      opts.lrs = LearningRates::uniform(0.02);
      const auto up = client_update(sim.clients()[id], fx.ds, opts);
      ++trials;
      bool ok = true;
      for (std::size_t e = 1; e < up.epoch_losses.size(); ++e) ok = ok && up.epoch_losses[e] <= up.epoch_losses[e - 1];
      monotone += ok ? 1 : 0;
    }
  }
  EXPECT_GE(monotone, (9 * trials + 9) / 10) << monotone << " of " << trials;
}

TEST(Aggregate, EqualWeightsAverage) {
  ServerState s{constant_model(5.0), 0, Rng(1)};
  const std::vector<ThetaUpload> ups{upload(0, 10, constant_model(0.0)), upload(1, 10, constant_model(2.0))};
  aggregate(s, ups);
  expect_all_equal(s.global_model, 1.0);
}

TEST(Aggregate, SampleCountWeighting) {
  ServerState s{constant_model(5.0), 0, Rng(1)};
  const std::vector<ThetaUpload> ups{upload(0, 1, constant_model(0.0)), upload(1, 3, constant_model(4.0))};
  aggregate(s, ups);
  expect_all_equal(s.global_model, 3.0);
}

TEST(Aggregate, SingleUploadIsBitwiseIdentity) {
  Rng rng(2);
  auto g = constant_model(0.0);
  for (auto* m : parameters(g)) for (double& v : m->data()) v = rng.normal();
  ServerState s{constant_model(5.0), 0, Rng(1)};
  const std::vector<ThetaUpload> ups{upload(4, 37, g)};
  aggregate(s, ups);
  EXPECT_EQ(s.global_model, g);
}

TEST(Aggregate, IdenticalUploadsAreBitwiseFixedPoint) {
  Rng rng(3);
  auto g = constant_model(0.0);
  for (auto* m : parameters(g)) for (double& v : m->data()) v = rng.normal() * 1e3;
  std::vector<ThetaUpload> ups;
  for (ClientId id = 0; id < 7; ++id) ups.push_back(upload(id, 1 + rng.uniform_int(100), g));
  ServerState s{constant_model(5.0), 0, Rng(1)};
  aggregate(s, ups);
  EXPECT_EQ(s.global_model, g);
}

TEST(Aggregate, WeightsSumToOne) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ThetaUpload> ups;
    const std::size_t k = 1 + rng.uniform_int(30);
    for (ClientId id = 0; id < k; ++id) ups.push_back(upload(id, 1 + rng.uniform_int(1000), constant_model(0.0)));
    const auto w = aggregation_weights(ups);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Aggregate, MatchesDirectWeightedMean) {
  Rng rng(5);
  std::vector<ThetaUpload> ups;
  std::vector<double> values;
  std::size_t total = 0;
  for (ClientId id = 0; id < 6; ++id) {
    const double v = rng.normal();
    const std::size_t n = 1 + rng.uniform_int(50);
    ups.push_back(upload(id, n, constant_model(v)));
    values.push_back(v * static_cast<double>(n));
    total += n;
  }
  const double expected = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(total);
  ServerState s{constant_model(0.0), 0, Rng(1)};
  aggregate(s, ups);
  for (const auto* m : parameters(s.global_model)) for (double x : m->data()) EXPECT_NEAR(x, expected, 1e-12);
}

TEST(Aggregate, IndependentOfUploadOrder) {
  Rng rng(6);
  std::vector<ThetaUpload> ups;
  for (ClientId id = 0; id < 5; ++id) ups.push_back(upload(id, 1 + rng.uniform_int(9), constant_model(rng.normal())));
  ServerState a{constant_model(0.0), 0, Rng(1)};
  aggregate(a, ups);
  std::reverse(ups.begin(), ups.end());
  ServerState b{constant_model(0.0), 0, Rng(1)};
  aggregate(b, ups);
  EXPECT_EQ(a.global_model, b.global_model);
}

TEST(Aggregate, RejectsEmptyMismatchedAndZeroCount) {
  ServerState s{constant_model(0.0), 0, Rng(1)};
  EXPECT_THROW(aggregate(s, std::vector<ThetaUpload>{}), DataError);
  const std::vector<ThetaUpload> zero{upload(0, 0, constant_model(1.0))};
  EXPECT_THROW(aggregate(s, zero), DataError);
  GlobalSmallModel wrong = constant_model(1.0);
  wrong.header.weight = Matrix(3, 1);
  const std::vector<ThetaUpload> bad{upload(0, 1, wrong)};
  EXPECT_THROW(aggregate(s, bad), DimensionError);
}

TEST(Simulation, ZeroRoundsGiveNoReports) {
  auto fx = small_setup();
  fx.cfg.rounds = 0;
  EXPECT_TRUE(run_training(fx.cfg, fx.ds, fx.plan).empty());
}

TEST(Simulation, RoundsNumberedFromOne) {
  auto fx = small_setup();
  const auto reports = run_training(fx.cfg, fx.ds, fx.plan);
  ASSERT_EQ(reports.size(), 3u);
  for (std::size_t t = 0; t < reports.size(); ++t) EXPECT_EQ(reports[t].round, t + 1);
}

TEST(Simulation, StandaloneNeverTouchesGlobalModel) {
  auto fx = small_setup(2, TrainingMode::Standalone);
  Simulation sim(fx.cfg, fx.ds, fx.plan);
  const auto before = sim.server().global_model;
  const auto reports = sim.run();
  EXPECT_EQ(sim.server().global_model, before);
  for (const auto& r : reports) {
    EXPECT_EQ(r.uplink_params, 0u);
    EXPECT_EQ(r.downlink_params, 0u);
  }
  EXPECT_EQ(sim.eval_variant(), InferenceVariant::SingleLarge);
}

TEST(Simulation, FullRunIsDeterministic) {
  for (auto mode : {TrainingMode::FedMRL, TrainingMode::Standalone, TrainingMode::FedMRLNoMRL}) {
    auto fx = small_setup(3, mode);
    EXPECT_EQ(run_training(fx.cfg, fx.ds, fx.plan), run_training(fx.cfg, fx.ds, fx.plan));
  }
}

TEST(Simulation, DifferentSeedsDiverge) {
  auto a = small_setup(4);
  auto b = a;
  b.cfg.seed = 5;
  EXPECT_NE(run_training(a.cfg, a.ds, a.plan), run_training(b.cfg, b.ds, b.plan));
}

TEST(Simulation, PartialParticipationTrainsOnlySampledClients) {
  auto fx = small_setup(6);
  fx.cfg.participation = 0.5;
  Simulation sim(fx.cfg, fx.ds, fx.plan);
  std::vector<LocalHeteroModel> before;
  for (const auto& c : sim.clients()) before.push_back(c.local_model);
  sim.step();
  int changed = 0;
  for (std::size_t k = 0; k < before.size(); ++k) changed += sim.clients()[k].local_model != before[k];
  EXPECT_EQ(changed, 2);
}

TEST(Simulation, PlanSizeMismatchThrows) {
  auto fx = small_setup();
  fx.cfg.n_clients = 5;
  EXPECT_THROW(Simulation(fx.cfg, fx.ds, fx.plan), ConfigError);
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : {TrainingMode::FedMRL, TrainingMode::Standalone, TrainingMode::FedMRLNoMRL}) {
    EXPECT_EQ(parse_training_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_training_mode("fedavg"), ConfigError);
}

// The server-side types expose no slot for a local model or projector.
static_assert(std::is_same_v<decltype(ServerState::global_model), GlobalSmallModel>);
static_assert(std::is_same_v<decltype(ThetaUpload::theta), GlobalSmallModel>);
static_assert(!std::is_invocable_v<decltype(&aggregate), ServerState&, std::span<const LocalHeteroModel>>);
static_assert(!std::is_invocable_v<decltype(&aggregate), ServerState&, std::span<const Projector>>);

TEST(Privacy, ServerHoldsNoLocalOrProjectorValues) {
  auto fx = small_setup(7);
  Simulation sim(fx.cfg, fx.ds, fx.plan);
  for (auto* m : parameters(sim.server().global_model)) m->fill(0.0);
  sim.step();

  std::set<double> private_values;
  for (const auto& c : sim.clients()) {
    for (const auto* m : parameters(c.local_model)) for (double v : m->data()) private_values.insert(v);
    for (const auto* m : parameters(c.projector)) for (double v : m->data()) private_values.insert(v);
  }
  private_values.erase(0.0);
  std::size_t server_params = 0;
  for (const auto* m : parameters(sim.server().global_model)) {
    for (double v : m->data()) {
      EXPECT_EQ(private_values.count(v), 0u);
      ++server_params;
    }
  }
  EXPECT_EQ(server_params, param_count(sim.clients()[0].global_copy));
}

}  // namespace
}  // namespace fedmrl
