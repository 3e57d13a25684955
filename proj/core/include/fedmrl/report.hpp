#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fedmrl {

/// Per-round snapshot of the three evaluation axes.
struct RoundReport {
  std::size_t round = 0;  // 1-based
  double avg_test_accuracy = 0.0;
  std::vector<double> per_client_accuracy;  // all N clients, by id
  double mean_train_loss = 0.0;             // over this round's trained clients
  std::uint64_t uplink_params = 0;          // round totals
  std::uint64_t downlink_params = 0;
  std::uint64_t flops = 0;

  friend bool operator==(const RoundReport&, const RoundReport&) = default;
};

}  // namespace fedmrl
