#include "fedmrl/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fedmrl/error.hpp"

namespace fedmrl {
namespace {

using json = nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t extractor_forward_flops(const Extractor& ex) {
  std::uint64_t total = 0;
  for (const auto& l : ex.layers) total += affine_forward_flops(l.in_dim(), l.out_dim());
  return total;
}

std::uint64_t header_forward_flops(const Header& h) {
  return affine_forward_flops(h.in_dim(), h.classes());
}

}  // namespace

double evaluate(const ClientState& client, const LabeledDataset& ds, InferenceVariant variant) {
  if (client.test.empty()) {
    throw DataError("evaluate: client " + std::to_string(client.id) + " has an empty test split");
  }
  const Matrix x = gather_rows(ds.features, client.test);
  const auto pred = infer(client.global_copy, client.local_model, client.projector, x, variant);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == ds.labels[client.test[i]]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

CommCost comm_cost_client(std::size_t theta_params, TrainingMode mode) {
  if (mode == TrainingMode::Standalone) return {};
  return {theta_params, theta_params};
}

CommCost comm_cost_round(std::size_t theta_params, std::size_t k, TrainingMode mode) {
  const auto per = comm_cost_client(theta_params, mode);
  return {per.uplink * k, per.downlink * k};
}

std::uint64_t affine_forward_flops(std::size_t in, std::size_t out) {
  return 2ULL * static_cast<std::uint64_t>(in) * static_cast<std::uint64_t>(out);
}

std::uint64_t forward_flops_per_sample(const GlobalSmallModel& g, const LocalHeteroModel& f,
                                       const Projector& p, TrainingMode mode) {
  std::uint64_t total = extractor_forward_flops(f.extractor) + header_forward_flops(f.header);
  if (mode == TrainingMode::Standalone) return total;
  total += extractor_forward_flops(g.extractor);
  total += affine_forward_flops(p.spliced_dim(), p.fused_dim());
  if (mode == TrainingMode::FedMRL) total += header_forward_flops(g.header);
  return total;
}

std::uint64_t flops_round(const GlobalSmallModel& g, const LocalHeteroModel& f, const Projector& p,
                          std::size_t n_train, std::size_t epochs, TrainingMode mode) {
  // forward + backward (2x forward)
  return 3ULL * forward_flops_per_sample(g, f, p, mode) * n_train * epochs;
}

std::optional<std::size_t> first_round_reaching(std::span<const RoundReport> reports,
                                                double target) {
  for (const auto& r : reports)
    if (r.avg_test_accuracy >= target) return r.round;
  return std::nullopt;
}

std::string reports_to_csv(std::span<const RoundReport> reports) {
  std::string out = "round,avg_acc,mean_loss,uplink,downlink,flops";
  const std::size_t n_clients = reports.empty() ? 0 : reports.front().per_client_accuracy.size();
  for (std::size_t k = 0; k < n_clients; ++k) out += ",client_" + std::to_string(k);
  out += '\n';
  for (const auto& r : reports) {
    if (r.per_client_accuracy.size() != n_clients) {
      throw DataError("reports_to_csv: rounds disagree on client count");
    }
    out += std::to_string(r.round) + ',' + format_double(r.avg_test_accuracy) + ',' +
           format_double(r.mean_train_loss) + ',' + std::to_string(r.uplink_params) + ',' +
           std::to_string(r.downlink_params) + ',' + std::to_string(r.flops);
    for (double a : r.per_client_accuracy) out += ',' + format_double(a);
    out += '\n';
  }
  return out;
}

std::string reports_to_json(std::span<const RoundReport> reports, const ReportMeta& meta) {
  json doc;
  doc["schema"] = "fedmrl.report";
  doc["version"] = 1;
  doc["mode"] = meta.mode;
  doc["seed"] = meta.seed;
  doc["partition_hash"] = hex64(meta.partition_hash);
  doc["parameters"] = meta.parameters;
  doc["target_accuracy"] = meta.target_accuracy ? json(*meta.target_accuracy) : json(nullptr);
  const auto reached = meta.target_accuracy ? first_round_reaching(reports, *meta.target_accuracy)
                                            : std::nullopt;
  doc["first_round_reaching_target"] = reached ? json(*reached) : json(nullptr);
  json rounds = json::array();
  for (const auto& r : reports) {
    rounds.push_back({{"round", r.round},
                      {"avg_acc", r.avg_test_accuracy},
                      {"mean_loss", r.mean_train_loss},
                      {"uplink", r.uplink_params},
                      {"downlink", r.downlink_params},
                      {"flops", r.flops},
                      {"client_acc", r.per_client_accuracy}});
  }
  doc["rounds"] = std::move(rounds);
  return doc.dump(2) + '\n';
}

void export_csv(std::span<const RoundReport> reports, const std::filesystem::path& path) {
  write_file(path, reports_to_csv(reports));
}

void export_json(std::span<const RoundReport> reports, const ReportMeta& meta,
                 const std::filesystem::path& path) {
  write_file(path, reports_to_json(reports, meta));
}

LoadedReports load_reports_json(const std::filesystem::path& path) {
  LoadedReports out;
  try {
    const json doc = json::parse(read_file(path));
    if (doc.at("schema") != "fedmrl.report") throw DataError(path.string() + ": not a report file");
    out.meta.mode = doc.at("mode").get<std::string>();
    out.meta.seed = doc.at("seed").get<std::uint64_t>();
    out.meta.partition_hash =
        std::stoull(doc.at("partition_hash").get<std::string>(), nullptr, 16);
    out.meta.parameters = doc.at("parameters").get<std::map<std::string, std::string>>();
    if (!doc.at("target_accuracy").is_null())
      out.meta.target_accuracy = doc.at("target_accuracy").get<double>();
    for (const auto& r : doc.at("rounds")) {
      RoundReport rep;
      rep.round = r.at("round").get<std::size_t>();
      rep.avg_test_accuracy = r.at("avg_acc").get<double>();
      rep.mean_train_loss = r.at("mean_loss").get<double>();
      rep.uplink_params = r.at("uplink").get<std::uint64_t>();
      rep.downlink_params = r.at("downlink").get<std::uint64_t>();
      rep.flops = r.at("flops").get<std::uint64_t>();
      rep.per_client_accuracy = r.at("client_acc").get<std::vector<double>>();
      out.rounds.push_back(std::move(rep));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed report JSON: " + e.what());
  }
  return out;
}

std::vector<RoundReport> load_reports_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty report CSV");
  std::vector<RoundReport> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 6) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": too few columns");
    }
    const auto num = [&](const std::string& s, auto& v) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + s + "'");
      }
    };
    RoundReport r;
    num(cells[0], r.round);
    num(cells[1], r.avg_test_accuracy);
    num(cells[2], r.mean_train_loss);
    num(cells[3], r.uplink_params);
    num(cells[4], r.downlink_params);
    num(cells[5], r.flops);
    for (std::size_t i = 6; i < cells.size(); ++i) {
      double a = 0.0;
      num(cells[i], a);
      r.per_client_accuracy.push_back(a);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fedmrl
