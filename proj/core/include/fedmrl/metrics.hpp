#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedmrl/data.hpp"
#include "fedmrl/federation.hpp"
#include "fedmrl/mrl.hpp"
#include "fedmrl/report.hpp"

namespace fedmrl {

/// Fraction of rows of the client's test split predicted correctly.
/// Throws DataError on an empty test split.
double evaluate(const ClientState& client, const LabeledDataset& ds, InferenceVariant variant);

struct CommCost {
  std::uint64_t uplink = 0;
  std::uint64_t downlink = 0;

  std::uint64_t total() const noexcept { return uplink + downlink; }
  friend bool operator==(const CommCost&, const CommCost&) = default;
};

/// Parameters exchanged by one client in one round: |theta| each way,
/// nothing in Standalone mode.
CommCost comm_cost_client(std::size_t theta_params, TrainingMode mode);
/// Round totals over k participating clients.
CommCost comm_cost_round(std::size_t theta_params, std::size_t k, TrainingMode mode);

// FLOP convention: a multiply-add is 2 FLOPs, so an in x out affine map
// costs 2*in*out per sample forward and twice that backward. Bias adds and
// activations are not counted. Mini-batching does not change the total.

std::uint64_t affine_forward_flops(std::size_t in, std::size_t out);

/// Forward-only FLOPs per sample of every affine map that takes part in
/// training under `mode`.
std::uint64_t forward_flops_per_sample(const GlobalSmallModel& g, const LocalHeteroModel& f,
                                       const Projector& p, TrainingMode mode);

/// Training FLOPs of one client in one round: 3 x forward x n_train x epochs.
std::uint64_t flops_round(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                          std::size_t n_train, std::size_t epochs, TrainingMode mode);

/// First 1-based round whose average accuracy reaches `target`.
std::optional<std::size_t> first_round_reaching(std::span<const RoundReport> reports,
                                                double target);

/// Run-level fields written alongside the per-round rows in JSON.
struct ReportMeta {
  std::string mode;
  std::uint64_t seed = 0;
  std::uint64_t partition_hash = 0;
  std::map<std::string, std::string> parameters;
  std::optional<double> target_accuracy;
};

/// Header `round,avg_acc,mean_loss,uplink,downlink,flops,client_0,...`.
/// Doubles use the shortest representation that round-trips.
std::string reports_to_csv(std::span<const RoundReport> reports);
std::string reports_to_json(std::span<const RoundReport> reports, const ReportMeta& meta);

void export_csv(std::span<const RoundReport> reports, const std::filesystem::path& path);
void export_json(std::span<const RoundReport> reports, const ReportMeta& meta,
                 const std::filesystem::path& path);

struct LoadedReports {
  ReportMeta meta;
  std::vector<RoundReport> rounds;
};

LoadedReports load_reports_json(const std::filesystem::path& path);
std::vector<RoundReport> load_reports_csv(const std::filesystem::path& path);

}  // namespace fedmrl
