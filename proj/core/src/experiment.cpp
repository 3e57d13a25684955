#include "fedmrl/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "fedmrl/error.hpp"
#include "fedmrl/metrics.hpp"

namespace fedmrl {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == s.npos ? s.npos : pos - start)));
    if (pos == s.npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("key '" + std::string(key) + "': expected " + expected + ", got '" +
                    std::string(value) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "a number");
  }
  return v;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  return parse_number<std::size_t>(key, value);
}

double parse_real(std::string_view key, std::string_view value) {
  return parse_number<double>(key, value);
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

// "64x32" -> {64, 32}; "none" -> {}.
std::vector<std::size_t> parse_widths(std::string_view key, std::string_view value) {
  if (value == "none") return {};
  std::vector<std::size_t> out;
  for (const auto& w : split(value, 'x')) {
    const auto n = parse_count(key, w);
    if (n == 0) bad_value(key, value, "positive widths");
    out.push_back(n);
  }
  return out;
}

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys{
      "schema_version", "name",          "dataset",        "csv_path",     "classes",
      "input_dim",      "per_class",     "spread",         "data_seed",    "standardize",
      "partition",      "classes_per_client", "alpha",     "n_clients",    "participation",
      "rounds",         "local_epochs",  "batch_size",     "lr",           "lr_theta",
      "lr_omega",       "lr_phi",        "d1",             "d2",           "m_global",
      "m_local",        "mode",          "seed",           "inference",    "global_hidden",
      "local_hidden",   "out_dir",       "format",         "target_accuracy"};
  return keys;
}

std::string sanitize(std::string_view v) {
  std::string out;
  for (char ch : v) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-') ? ch : '_';
  return out;
}


LabeledDataset build_dataset(const ExperimentConfig& cfg, std::uint64_t data_seed) {
  LabeledDataset ds;
  if (cfg.source == DatasetSource::Csv) {
    ds = load_csv(cfg.csv_path, cfg.classes);
  } else {
    Rng rng(data_seed);
    ds = gen_synthetic(cfg.classes, cfg.input_dim, cfg.per_class, cfg.spread, rng);
  }
  if (cfg.standardize) standardize(ds);
  ds.validate();
  return ds;
}

}  // namespace

bool is_sweepable_key(std::string_view key) {
  return key == "d1" || key == "alpha" || key == "classes_per_client" || key == "mode" ||
         key == "seed";
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  auto& run = cfg.run;
  if (key == "schema_version") {
    if (parse_count(key, value) != static_cast<std::size_t>(kExperimentSchemaVersion)) {
      bad_value(key, value, "schema version 1");
    }
  } else if (key == "name") {
    if (value.empty()) bad_value(key, value, "a non-empty name");
    cfg.name = sanitize(value);
  } else if (key == "dataset") {
    if (value == "synthetic") cfg.source = DatasetSource::Synthetic;
    else if (value == "csv") cfg.source = DatasetSource::Csv;
    else bad_value(key, value, "synthetic or csv");
  } else if (key == "csv_path") {
    cfg.csv_path = std::string(value);
  } else if (key == "classes") {
    cfg.classes = parse_count(key, value);
  } else if (key == "input_dim") {
    cfg.input_dim = parse_count(key, value);
  } else if (key == "per_class") {
    cfg.per_class = parse_count(key, value);
  } else if (key == "spread") {
    cfg.spread = parse_real(key, value);
  } else if (key == "data_seed") {
    cfg.data_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "standardize") {
    cfg.standardize = parse_bool(key, value);
  } else if (key == "partition") {
    if (value == "class") cfg.partition = PartitionKind::ClassCount;
    else if (value == "dirichlet") cfg.partition = PartitionKind::Dirichlet;
    else bad_value(key, value, "class or dirichlet");
  } else if (key == "classes_per_client") {
    cfg.classes_per_client = parse_count(key, value);
  } else if (key == "alpha") {
    cfg.alpha = parse_real(key, value);
    if (!(cfg.alpha > 0.0)) bad_value(key, value, "a positive alpha");
  } else if (key == "n_clients") {
    run.n_clients = parse_count(key, value);
  } else if (key == "participation") {
    run.participation = parse_real(key, value);
  } else if (key == "rounds") {
    run.rounds = parse_count(key, value);
  } else if (key == "local_epochs") {
    run.local_epochs = parse_count(key, value);
  } else if (key == "batch_size") {
    run.batch_size = parse_count(key, value);
  } else if (key == "lr") {
    run.lrs = LearningRates::uniform(parse_real(key, value));
  } else if (key == "lr_theta") {
    run.lrs.theta = parse_real(key, value);
  } else if (key == "lr_omega") {
    run.lrs.omega = parse_real(key, value);
  } else if (key == "lr_phi") {
    run.lrs.phi = parse_real(key, value);
  } else if (key == "d1") {
    run.d1 = parse_count(key, value);
  } else if (key == "d2") {
    run.d2 = parse_count(key, value);
  } else if (key == "m_global") {
    run.weights.global = parse_real(key, value);
  } else if (key == "m_local") {
    run.weights.local = parse_real(key, value);
  } else if (key == "mode") {
    run.mode = parse_training_mode(value);
  } else if (key == "seed") {
    run.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "inference") {
    run.variant = parse_inference_variant(value);
  } else if (key == "global_hidden") {
    run.global_hidden = parse_widths(key, value);
  } else if (key == "local_hidden") {
    run.local_hidden.clear();
    for (const auto& variant : split(value, ';')) run.local_hidden.push_back(parse_widths(key, variant));
  } else if (key == "out_dir") {
    cfg.out_dir = std::string(value);
  } else if (key == "format") {
    if (value == "csv") cfg.format = ReportFormat::Csv;
    else if (value == "json") cfg.format = ReportFormat::Json;
    else if (value == "both") cfg.format = ReportFormat::Both;
    else bad_value(key, value, "csv, json or both");
  } else if (key == "target_accuracy") {
    const double t = parse_real(key, value);
    if (t < 0.0 || t > 1.0) bad_value(key, value, "a fraction in [0, 1]");
    cfg.target_accuracy = t;
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    pos = nl == text.npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto where = "line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == line.npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!known_keys().contains(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");

    try {
      if (value.find(',') != value.npos) {
        if (!is_sweepable_key(key)) {
          throw ConfigError("key '" + key + "' does not accept a list of values");
        }
        auto values = split(value, ',');
        ExperimentConfig probe = cfg;
        for (const auto& v : values) set_config_value(probe, key, v);
        set_config_value(cfg, key, values.front());
        cfg.sweeps.emplace_back(key, std::move(values));
      } else {
        set_config_value(cfg, key, value);
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!seen.contains("schema_version")) {
    throw ConfigError("missing required key 'schema_version'");
  }
  if (cfg.source == DatasetSource::Csv && cfg.csv_path.empty()) {
    throw ConfigError("dataset = csv requires csv_path");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_experiment_config(ss.str());
  if (cfg.source == DatasetSource::Csv && cfg.csv_path.is_relative()) {
    cfg.csv_path = path.parent_path() / cfg.csv_path;
  }
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const ExperimentOverrides& ov) {
  if (ov.mode) cfg.run.mode = *ov.mode;
  if (ov.seed) cfg.run.seed = *ov.seed;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  for (const auto& s : ov.sweeps) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep expects key=v1,v2,...: '" + s + "'");
    const std::string key(trim(std::string_view(s).substr(0, eq)));
    if (!is_sweepable_key(key)) throw ConfigError("--sweep: key '" + key + "' is not sweepable");
    auto values = split(std::string_view(s).substr(eq + 1), ',');
    ExperimentConfig probe = cfg;
    for (const auto& v : values) set_config_value(probe, key, v);
    std::erase_if(cfg.sweeps, [&](const auto& kv) { return kv.first == key; });
    cfg.sweeps.emplace_back(key, std::move(values));
  }
}

std::vector<ExperimentRun> run_experiment(const ExperimentConfig& base) {
  // Cartesian product over sweeps, first key varying slowest.
  std::vector<std::vector<std::pair<std::string, std::string>>> combos{{}};
  for (const auto& [key, values] : base.sweeps) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& combo : combos) {
      for (const auto& v : values) {
        auto c = combo;
        c.emplace_back(key, v);
        next.push_back(std::move(c));
      }
    }
    combos = std::move(next);
  }

  std::vector<ExperimentRun> runs;
  for (const auto& combo : combos) {
    ExperimentConfig cfg = base;
    for (const auto& [k, v] : combo) set_config_value(cfg, k, v);

    const LabeledDataset ds = build_dataset(cfg, cfg.data_seed.value_or(cfg.run.seed));
    NonIidSpec spec;
    spec.seed = cfg.run.seed;
    if (cfg.partition == PartitionKind::ClassCount) {
      spec.variant = ClassCount{cfg.classes_per_client};
    } else {
      spec.variant = Dirichlet{cfg.alpha};
    }
    const Partition part = partition(ds, cfg.run.n_clients, spec, kMinClientSamples);
    const PartitionPlan plan = split_train_test(part, cfg.run.seed ^ 0x5851F42D4C957F2DULL);

    ExperimentRun run;
    run.assignment = combo;
    run.partition_hash = plan.hash();
    run.reports = run_training(cfg.run, ds, plan);

    std::string stem = cfg.name;
    for (const auto& [k, v] : combo) stem += "_" + k + "-" + sanitize(v);

    ReportMeta meta;
    meta.mode = std::string(to_string(cfg.run.mode));
    meta.seed = cfg.run.seed;
    meta.partition_hash = run.partition_hash;
    for (const auto& [k, v] : combo) meta.parameters[k] = v;
    meta.parameters["d1"] = std::to_string(cfg.run.d1);
    meta.parameters["d2"] = std::to_string(cfg.run.d2);
    meta.target_accuracy = cfg.target_accuracy;

    if (cfg.format != ReportFormat::Json) {
      run.files.push_back(cfg.out_dir / (stem + ".csv"));
      export_csv(run.reports, run.files.back());
    }
    if (cfg.format != ReportFormat::Csv) {
      run.files.push_back(cfg.out_dir / (stem + ".json"));
      export_json(run.reports, meta, run.files.back());
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

int run_experiment(const std::filesystem::path& config_path, const ExperimentOverrides& ov,
                   std::ostream& out, std::ostream& err) {
  try {
    auto cfg = load_experiment_config(config_path);
    apply_overrides(cfg, ov);
    for (const auto& run : run_experiment(cfg)) {
      for (const auto& f : run.files) out << f.string() << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fedmrl
