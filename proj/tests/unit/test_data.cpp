#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fedmrl/data.hpp"
#include "fedmrl/error.hpp"
#include "fedmrl/model.hpp"
#include "fedmrl/numerics.hpp"

namespace fedmrl {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / name; }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::set<std::size_t> labels_of(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
  std::set<std::size_t> s;
  for (std::size_t i : idx) s.insert(ds.labels[i]);
  return s;
}

std::vector<double> class_histogram(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<double> h(ds.classes, 0.0);
  for (std::size_t i : idx) h[ds.labels[i]] += 1.0;
  for (double& v : h) v /= static_cast<double>(idx.size());
  return h;
}

double entropy(const std::vector<double>& p) {
  double e = 0.0;
  for (double v : p) if (v > 0.0) e -= v * std::log(v);
  return e;
}

void expect_exhaustive_and_disjoint(const Partition& part, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& c : part.clients) for (std::size_t i : c) ++seen[i];
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen[i], 1) << "index " << i;
}

LabeledDataset synthetic(std::size_t classes, std::size_t per_class, std::uint64_t seed = 1) {
  Rng rng(seed);
  return gen_synthetic(classes, 4, per_class, 1.0, rng);
}

TEST(Synthetic, DeterministicForSeed) {
  Rng a(3), b(3);
  const auto x = gen_synthetic(4, 5, 10, 0.5, a);
  const auto y = gen_synthetic(4, 5, 10, 0.5, b);
  EXPECT_EQ(x.features, y.features);
  EXPECT_EQ(x.labels, y.labels);
  EXPECT_EQ(x.size(), 40u);
  EXPECT_EQ(x.dim(), 5u);
}

TEST(Synthetic, ZeroSpreadCollapsesEachClassToItsMean) {
  Rng rng(4);
  const auto ds = gen_synthetic(3, 6, 5, 0.0, rng);
  const auto by_class = ds.indices_by_class();
  for (const auto& idx : by_class) {
    for (std::size_t i : idx) {
      for (std::size_t j = 0; j < ds.dim(); ++j) EXPECT_EQ(ds.features(i, j), ds.features(idx[0], j));
    }
  }
}

TEST(Synthetic, LowSpreadIsLinearlySeparable) {
  Rng rng(5);
  const auto ds = gen_synthetic(5, 16, 20, 0.1, rng);
  Header h{Matrix(5, 16)};
  for (int it = 0; it < 500; ++it) {
    const auto ce = cross_entropy_mean(head_forward(h, ds.features), ds.labels);
    sgd_step_inplace(h.weight, matmul_at(ce.grad_logits, ds.features), 0.5);
  }
  EXPECT_EQ(argmax_rows(head_forward(h, ds.features)), ds.labels);
}

TEST(Synthetic, RejectsDegenerateRequests) {
  Rng rng(6);
  EXPECT_THROW(gen_synthetic(1, 4, 10, 1.0, rng), ConfigError);
  EXPECT_THROW(gen_synthetic(3, 4, 0, 1.0, rng), ConfigError);
  EXPECT_THROW(gen_synthetic(3, 4, 10, -1.0, rng), ConfigError);
}

TEST(Standardize, ZeroMeanUnitVariance) {
  Rng rng(7);
  auto ds = gen_synthetic(3, 4, 50, 2.0, rng);
  standardize(ds);
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) mean += ds.features(i, j);
    mean /= static_cast<double>(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) sq += std::pow(ds.features(i, j) - mean, 2);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / static_cast<double>(ds.size()), 1.0, 1e-12);
  }
}

TEST(ClassCount, AllClassesPerClientIsIid) {
  const auto ds = synthetic(10, 50);
  const auto part = partition_class_count(ds, 10, {10}, 1);
  for (const auto& c : part.clients) {
    EXPECT_EQ(labels_of(ds, c).size(), 10u);
    EXPECT_EQ(c.size(), 50u);
  }
  expect_exhaustive_and_disjoint(part, ds.size());
}

TEST(ClassCount, TwoClassesPerClient) {
  const auto ds = synthetic(10, 30);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto part = partition_class_count(ds, 20, {2}, seed);
    for (const auto& c : part.clients) EXPECT_EQ(labels_of(ds, c).size(), 2u);
    expect_exhaustive_and_disjoint(part, ds.size());
  }
}

TEST(ClassCount, RandomConfigsAreExhaustiveAndDisjoint) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t classes = 2 + rng.uniform_int(9);
    const std::size_t n = 1 + rng.uniform_int(12);
    const std::size_t c = 1 + rng.uniform_int(classes);
    if (n * c < classes) continue;
    const auto ds = synthetic(classes, 40, trial);
    const auto part = partition_class_count(ds, n, {c}, trial);
    ASSERT_EQ(part.clients.size(), n);
    expect_exhaustive_and_disjoint(part, ds.size());
    for (const auto& cl : part.clients) EXPECT_LE(labels_of(ds, cl).size(), c);
  }
}

TEST(ClassCount, InfeasibleCoverageThrows) {
  const auto ds = synthetic(10, 10);
  EXPECT_THROW(partition_class_count(ds, 4, {2}, 1), DataError);
  EXPECT_THROW(partition_class_count(ds, 4, {0}, 1), ConfigError);
  EXPECT_THROW(partition_class_count(ds, 4, {11}, 1), ConfigError);
}

TEST(ClassCount, DeterministicForSeed) {
  const auto ds = synthetic(6, 20);
  EXPECT_EQ(partition_class_count(ds, 5, {3}, 9).clients, partition_class_count(ds, 5, {3}, 9).clients);
}

TEST(Dirichlet, LargeAlphaIsNearlyUniform) {
  const auto ds = synthetic(10, 1000);
  const auto part = partition_dirichlet(ds, 10, {1000.0}, 1);
  for (const auto& c : part.clients) {
    const auto h = class_histogram(ds, c);
    double tv = 0.0;
    for (double v : h) tv += std::abs(v - 0.1);
    EXPECT_LT(0.5 * tv, 0.1);
  }
}

TEST(Dirichlet, SmallAlphaHasLowerLabelEntropy) {
  const auto ds = synthetic(10, 200);
  const auto mean_entropy = [&](double alpha) {
    const auto part = partition_dirichlet(ds, 10, {alpha}, 2);
    double e = 0.0;
    for (const auto& c : part.clients) e += entropy(class_histogram(ds, c));
    return e / 10.0;
  };
  EXPECT_LT(mean_entropy(0.1), mean_entropy(1000.0));
}

TEST(Dirichlet, ExhaustiveDisjointAndPreservesClassTotals) {
  const auto ds = synthetic(7, 60);
  for (double alpha : {0.1, 0.5, 5.0}) {
    const auto part = partition_dirichlet(ds, 8, {alpha}, 3);
    expect_exhaustive_and_disjoint(part, ds.size());
    std::vector<std::size_t> totals(ds.classes, 0);
    for (const auto& c : part.clients) for (std::size_t i : c) ++totals[ds.labels[i]];
    for (std::size_t t : totals) EXPECT_EQ(t, 60u);
  }
}

TEST(Dirichlet, MinimumPerClientIsHonoured) {
  const auto ds = synthetic(10, 50);
  const auto part = partition_dirichlet(ds, 10, {0.5}, 4, kMinClientSamples);
  for (const auto& c : part.clients) EXPECT_GE(c.size(), kMinClientSamples);
}

TEST(Dirichlet, RejectsNonPositiveAlpha) {
  const auto ds = synthetic(3, 10);
  EXPECT_THROW(partition_dirichlet(ds, 2, {0.0}, 1), ConfigError);
}

TEST(Split, TenSamplesGiveEightAndTwo) {
  Partition part{{{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}};
  const auto plan = split_train_test(part, 1);
  EXPECT_EQ(plan.clients[0].train.size(), 8u);
  EXPECT_EQ(plan.clients[0].test.size(), 2u);
}

TEST(Split, FiveSamplesGiveFourAndOne) {
  Partition part{{{10, 11, 12, 13, 14}}};
  const auto plan = split_train_test(part, 1);
  EXPECT_EQ(plan.clients[0].train.size(), 4u);
  EXPECT_EQ(plan.clients[0].test.size(), 1u);
  std::vector<std::size_t> all = plan.clients[0].train;
  all.insert(all.end(), plan.clients[0].test.begin(), plan.clients[0].test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{10, 11, 12, 13, 14}));
}

TEST(Split, TooFewSamplesThrows) {
  Partition part{{{0, 1, 2, 3}}};
  EXPECT_THROW(split_train_test(part, 1), DataError);
}

TEST(Split, HashDependsOnAssignment) {
  const auto ds = synthetic(4, 20);
  const auto a = split_train_test(partition_class_count(ds, 4, {2}, 1), 1);
  const auto b = split_train_test(partition_class_count(ds, 4, {2}, 1), 1);
  const auto c = split_train_test(partition_class_count(ds, 4, {2}, 2), 1);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_NO_THROW(a.validate(ds.size()));
}

TEST(Csv, RoundTripIsExact) {
  Rng rng(9);
  const auto ds = gen_synthetic(3, 4, 5, 1.0, rng);
  const auto path = temp_file("fedmrl_roundtrip.csv");
  save_csv(ds, path);
  const auto back = load_csv(path, 3);
  fs::remove(path);
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.classes, 3u);
}

TEST(Csv, MalformedLineReportsLineNumber) {
  const auto path = temp_file("fedmrl_malformed.csv");
  write_text(path, "f0,f1,label\n0.5,1.0,0\n0.1,oops,1\n");
  try {
    load_csv(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  fs::remove(path);
}

TEST(Csv, LabelBeyondDeclaredClassesThrows) {
  const auto path = temp_file("fedmrl_label.csv");
  write_text(path, "f0,label\n0.5,0\n0.1,3\n");
  EXPECT_THROW(load_csv(path, 3), DataError);
  EXPECT_NO_THROW(load_csv(path, 4));
  fs::remove(path);
}

TEST(Csv, BadHeaderThrows) {
  const auto path = temp_file("fedmrl_header.csv");
  write_text(path, "x,y,label\n0.5,1,0\n");
  EXPECT_THROW(load_csv(path), DataError);
  fs::remove(path);
}

TEST(Csv, MissingFileIsIoError) { EXPECT_THROW(load_csv("/nonexistent/x.csv"), IoError); }

TEST(Csv, TinyFixtureHasExpectedShape) {
  const auto ds = load_csv(fs::path(FEDMRL_FIXTURE_DIR) / "tiny.csv");
  EXPECT_EQ(ds.size(), 30u);
  EXPECT_EQ(ds.dim(), 4u);
  EXPECT_EQ(ds.classes, 3u);
}

}  // namespace
}  // namespace fedmrl
