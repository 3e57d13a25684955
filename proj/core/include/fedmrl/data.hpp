#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fedmrl/matrix.hpp"
#include "fedmrl/rng.hpp"

namespace fedmrl {

struct LabeledDataset {
  Matrix features;  // n x D
  std::vector<std::size_t> labels;
  std::size_t classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  /// labels.size() == rows, every label < classes.
  void validate() const;
  /// Indices of each class, ascending.
  std::vector<std::vector<std::size_t>> indices_by_class() const;
};

/// Gaussian cluster per class. Class means are drawn N(0, I) in class order,
/// then samples are mean + spread * N(0, I), class-major. Deterministic.
LabeledDataset gen_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class,
                             double spread, Rng& rng);

/// Per-feature z-scoring in place. Zero-variance features are only centred.
void standardize(LabeledDataset& ds);

/// CSV layout: header `f0,...,f{D-1},label`, one sample per line, features
/// as doubles and an integer label in the last column.
/// `classes` bounds labels when given; otherwise it is max label + 1.
LabeledDataset load_csv(const std::filesystem::path& path,
                        std::optional<std::size_t> classes = std::nullopt);
/// Writes shortest round-trip decimal representations.
void save_csv(const LabeledDataset& ds, const std::filesystem::path& path);

struct ClassCount {
  std::size_t classes_per_client = 2;
};

struct Dirichlet {
  double alpha = 0.5;
};

struct NonIidSpec {
  std::variant<ClassCount, Dirichlet> variant;
  std::uint64_t seed = 0;
};

/// Per-client sample indices before the train/test split.
struct Partition {
  std::vector<std::vector<std::size_t>> clients;
};

struct ClientSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct PartitionPlan {
  std::vector<ClientSplit> clients;

  std::size_t n_clients() const noexcept { return clients.size(); }
  /// Indices in range, train/test disjoint within each client.
  void validate(std::size_t dataset_size) const;
  /// FNV-1a over the index lists; equal plans hash equally.
  std::uint64_t hash() const;
};

/// Each client gets `classes_per_client` distinct classes. Classes are
/// randomly permuted and dealt cyclically, so every class is held by at least
/// one client; a class's samples are shuffled and split evenly over its
/// holders (remainder to the lowest client ids).
/// Throws DataError if n_clients * c < L (a class would be dropped) or a
/// client would end up empty.
Partition partition_class_count(const LabeledDataset& ds, std::size_t n_clients, ClassCount spec,
                                std::uint64_t seed);

/// For every class, client shares ~ Dirichlet(alpha) and the shuffled class
/// indices are cut at floor(cumsum(share) * n_class). The whole draw is
/// retried (up to 100 times) while any client holds fewer than
/// `min_per_client` samples.
Partition partition_dirichlet(const LabeledDataset& ds, std::size_t n_clients, Dirichlet spec,
                              std::uint64_t seed, std::size_t min_per_client = 1);

inline constexpr int kDirichletMaxAttempts = 100;

Partition partition(const LabeledDataset& ds, std::size_t n_clients, const NonIidSpec& spec,
                    std::size_t min_per_client = 1);

/// Seeded shuffle, then test = max(1, floor(0.2 n)) and train the rest.
/// Throws DataError for a client with fewer than 5 samples.
PartitionPlan split_train_test(const Partition& part, std::uint64_t seed);

inline constexpr std::size_t kMinClientSamples = 5;

}  // namespace fedmrl
