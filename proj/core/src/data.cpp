#include "fedmrl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "fedmrl/error.hpp"

namespace fedmrl {
namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Partition finish_partition(std::vector<std::vector<std::size_t>> clients) {
  for (auto& c : clients) std::sort(c.begin(), c.end());
  return {std::move(clients)};
}

}  // namespace

void LabeledDataset::validate() const {
  if (labels.size() != features.rows()) {
    throw DataError("dataset: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(features.rows()) + " feature rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw DataError("dataset: label " + std::to_string(labels[i]) + " at row " +
                      std::to_string(i) + " exceeds class count " + std::to_string(classes));
    }
  }
  if (!all_finite(features)) throw DataError("dataset: non-finite feature value");
}

std::vector<std::vector<std::size_t>> LabeledDataset::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

LabeledDataset gen_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class,
                             double spread, Rng& rng) {
  if (classes < 2) throw ConfigError("gen_synthetic: need at least 2 classes");
  if (per_class == 0 || dim == 0) throw ConfigError("gen_synthetic: empty dataset requested");
  if (spread < 0.0) throw ConfigError("gen_synthetic: spread must be >= 0");

  Matrix means(classes, dim);
  for (double& v : means.data()) v = rng.normal();

  LabeledDataset ds;
  ds.classes = classes;
  ds.features = Matrix(classes * per_class, dim);
  ds.labels.reserve(classes * per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s, ++row) {
      for (std::size_t j = 0; j < dim; ++j) ds.features(row, j) = means(c, j) + spread * rng.normal();
      ds.labels.push_back(c);
    }
  }
  return ds;
}

void standardize(LabeledDataset& ds) {
  const std::size_t n = ds.size();
  if (n == 0) return;
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.features(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = ds.features(i, j) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      ds.features(i, j) -= mean;
      if (sd > 0.0) ds.features(i, j) /= sd;
    }
  }
}

LabeledDataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> classes) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open " + path.string());

  const auto where = [&](std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
  };

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DataError(where(1) + "missing header");
  const auto header = split_commas(line);
  if (header.size() < 2 || header.back() != "label") {
    throw DataError(where(1) + "header must be f0,...,f{D-1},label");
  }
  for (std::size_t j = 0; j + 1 < header.size(); ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw DataError(where(1) + "expected column 'f" + std::to_string(j) + "', found '" +
                      std::string(header[j]) + "'");
    }
  }
  const std::size_t dim = header.size() - 1;

  std::vector<double> values;
  std::vector<std::size_t> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != dim + 1) {
      throw DataError(where(line_no) + "expected " + std::to_string(dim + 1) + " columns, found " +
                      std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      const auto* end = cells[j].data() + cells[j].size();
      auto [ptr, ec] = std::from_chars(cells[j].data(), end, v);
      if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw DataError(where(line_no) + "bad feature value '" + std::string(cells[j]) + "'");
      }
      values.push_back(v);
    }
    std::size_t label = 0;
    const auto& cell = cells.back();
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
      throw DataError(where(line_no) + "bad label '" + std::string(cell) + "'");
    }
    if (classes && label >= *classes) {
      throw DataError(where(line_no) + "label " + std::to_string(label) + " >= declared classes " +
                      std::to_string(*classes));
    }
    labels.push_back(label);
  }

  LabeledDataset ds;
  ds.classes = classes ? *classes
                       : (labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1);
  ds.features = Matrix(labels.size(), dim, std::move(values));
  ds.labels = std::move(labels);
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_csv: cannot write " + path.string());
  for (std::size_t j = 0; j < ds.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) out << format_double(ds.features(i, j)) << ',';
    out << ds.labels[i] << '\n';
  }
  if (!out) throw IoError("save_csv: write failed for " + path.string());
}

void PartitionPlan::validate(std::size_t dataset_size) const {
  for (std::size_t k = 0; k < clients.size(); ++k) {
    std::set<std::size_t> seen;
    for (const auto* list : {&clients[k].train, &clients[k].test}) {
      for (std::size_t idx : *list) {
        if (idx >= dataset_size) {
          throw DataError("partition: client " + std::to_string(k) + " references index " +
                          std::to_string(idx) + " beyond dataset size " +
                          std::to_string(dataset_size));
        }
        if (!seen.insert(idx).second) {
          throw DataError("partition: client " + std::to_string(k) + " lists index " +
                          std::to_string(idx) + " twice");
        }
      }
    }
  }
}

std::uint64_t PartitionPlan::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  mix(clients.size());
  for (const auto& c : clients) {
    mix(c.train.size());
    for (auto i : c.train) mix(i);
    mix(c.test.size());
    for (auto i : c.test) mix(i);
  }
  return h;
}

Partition partition_class_count(const LabeledDataset& ds, std::size_t n_clients, ClassCount spec,
                                std::uint64_t seed) {
  const std::size_t L = ds.classes;
  const std::size_t c = spec.classes_per_client;
  if (n_clients == 0) throw ConfigError("partition_class_count: need at least one client");
  if (c == 0 || c > L) {
    throw ConfigError("partition_class_count: classes per client must be in [1, " +
                      std::to_string(L) + "], got " + std::to_string(c));
  }
  if (n_clients * c < L) {
    throw DataError("partition_class_count: " + std::to_string(n_clients) + " clients x " +
                    std::to_string(c) + " classes cannot cover " + std::to_string(L) + " classes");
  }

  Rng rng(seed);
  std::vector<std::size_t> perm(L);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  // Deal classes cyclically over the permutation: client k holds slots
  // k*c .. k*c + c - 1 (mod L), which are distinct since c <= L.
  std::vector<std::vector<std::size_t>> holders(L);
  for (std::size_t k = 0; k < n_clients; ++k)
    for (std::size_t j = 0; j < c; ++j) holders[perm[(k * c + j) % L]].push_back(k);

  std::vector<std::vector<std::size_t>> clients(n_clients);
  auto by_class = ds.indices_by_class();
  for (std::size_t cls = 0; cls < L; ++cls) {
    auto& idx = by_class[cls];
    rng.shuffle(idx);
    const auto& owners = holders[cls];
    const std::size_t base = idx.size() / owners.size();
    const std::size_t extra = idx.size() % owners.size();
    std::size_t pos = 0;
    for (std::size_t o = 0; o < owners.size(); ++o) {
      const std::size_t take = base + (o < extra ? 1 : 0);
      auto& dst = clients[owners[o]];
      dst.insert(dst.end(), idx.begin() + static_cast<std::ptrdiff_t>(pos),
                 idx.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
  }
  for (std::size_t k = 0; k < n_clients; ++k) {
    if (clients[k].empty()) {
      throw DataError("partition_class_count: client " + std::to_string(k) +
                      " would receive no samples");
    }
  }
  return finish_partition(std::move(clients));
}

Partition partition_dirichlet(const LabeledDataset& ds, std::size_t n_clients, Dirichlet spec,
                              std::uint64_t seed, std::size_t min_per_client) {
  if (n_clients == 0) throw ConfigError("partition_dirichlet: need at least one client");
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) {
    throw ConfigError("partition_dirichlet: alpha must be positive");
  }
  Rng rng(seed);
  const auto by_class_orig = ds.indices_by_class();
  for (int attempt = 0; attempt < kDirichletMaxAttempts; ++attempt) {
    std::vector<std::vector<std::size_t>> clients(n_clients);
    for (auto idx : by_class_orig) {
      rng.shuffle(idx);
      const auto shares = rng.dirichlet(spec.alpha, n_clients);
      const auto n = static_cast<double>(idx.size());
      double cum = 0.0;
      std::size_t pos = 0;
      for (std::size_t k = 0; k < n_clients; ++k) {
        cum += shares[k];
        std::size_t cut = k + 1 == n_clients
                              ? idx.size()
                              : std::min(idx.size(), static_cast<std::size_t>(std::floor(cum * n)));
        cut = std::max(cut, pos);
        clients[k].insert(clients[k].end(), idx.begin() + static_cast<std::ptrdiff_t>(pos),
                          idx.begin() + static_cast<std::ptrdiff_t>(cut));
        pos = cut;
      }
    }
    const bool ok = std::all_of(clients.begin(), clients.end(), [&](const auto& c) {
      return c.size() >= std::max<std::size_t>(min_per_client, 1);
    });
    if (ok) return finish_partition(std::move(clients));
  }
  throw DataError("partition_dirichlet: could not give every client >= " +
                  std::to_string(std::max<std::size_t>(min_per_client, 1)) + " samples in " +
                  std::to_string(kDirichletMaxAttempts) + " attempts (alpha=" +
                  format_double(spec.alpha) + ")");
}

Partition partition(const LabeledDataset& ds, std::size_t n_clients, const NonIidSpec& spec,
                    std::size_t min_per_client) {
  if (const auto* cc = std::get_if<ClassCount>(&spec.variant)) {
    return partition_class_count(ds, n_clients, *cc, spec.seed);
  }
  return partition_dirichlet(ds, n_clients, std::get<Dirichlet>(spec.variant), spec.seed,
                             min_per_client);
}

PartitionPlan split_train_test(const Partition& part, std::uint64_t seed) {
  PartitionPlan plan;
  plan.clients.reserve(part.clients.size());
  const Rng base(seed);
  for (std::size_t k = 0; k < part.clients.size(); ++k) {
    auto idx = part.clients[k];
    if (idx.size() < kMinClientSamples) {
      throw DataError("split_train_test: client " + std::to_string(k) + " has " +
                      std::to_string(idx.size()) + " samples, need at least " +
                      std::to_string(kMinClientSamples));
    }
    Rng rng = base.fork(k);
    rng.shuffle(idx);
    const std::size_t n_test = std::max<std::size_t>(1, idx.size() / 5);
    ClientSplit split;
    split.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_test));
    split.test.assign(idx.end() - static_cast<std::ptrdiff_t>(n_test), idx.end());
    plan.clients.push_back(std::move(split));
  }
  return plan;
}

}  // namespace fedmrl
