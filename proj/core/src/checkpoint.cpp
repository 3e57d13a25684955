#include "fedmrl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedmrl/error.hpp"

namespace fedmrl {
namespace {

using json = nlohmann::json;

json matrix_entry(const std::string& name, const Matrix& m) {
  return {{"name", name},
          {"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix read_matrix(const json& entry, const std::string& expected_name, std::size_t rows,
                   std::size_t cols) {
  const auto name = entry.at("name").get<std::string>();
  if (name != expected_name) {
    throw DataError("checkpoint: expected parameter '" + expected_name + "', found '" + name + "'");
  }
  const auto r = entry.at("rows").get<std::size_t>();
  const auto c = entry.at("cols").get<std::size_t>();
  if (r != rows || c != cols) {
    throw DataError("checkpoint: parameter '" + name + "' has shape [" + std::to_string(r) + "x" +
                    std::to_string(c) + "], config implies [" + std::to_string(rows) + "x" +
                    std::to_string(cols) + "]");
  }
  return {r, c, entry.at("data").get<std::vector<double>>()};
}

void check_header(const json& doc, const char* format) {
  if (doc.at("format") != format) {
    throw DataError(std::string("checkpoint: not a ") + format + " document");
  }
  if (doc.at("version").get<int>() != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + doc.at("version").dump());
  }
}

}  // namespace

std::string model_to_json(const Extractor& ex, const Header& h) {
  const ModelConfig cfg = config_of(ex, h);
  json doc;
  doc["format"] = "fedmrl.model";
  doc["version"] = kCheckpointVersion;
  doc["config"] = {{"input_dim", cfg.input_dim},
                   {"hidden_widths", cfg.hidden_widths},
                   {"rep_dim", cfg.rep_dim},
                   {"classes", cfg.classes}};
  json params = json::array();
  for (std::size_t i = 0; i < ex.layers.size(); ++i) {
    const std::string prefix = "extractor." + std::to_string(i);
    params.push_back(matrix_entry(prefix + ".weight", ex.layers[i].weight));
    params.push_back(matrix_entry(prefix + ".bias", ex.layers[i].bias));
  }
  params.push_back(matrix_entry("header.weight", h.weight));
  doc["parameters"] = std::move(params);
  return doc.dump() + '\n';
}

ModelCheckpoint model_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    check_header(doc, "fedmrl.model");
    ModelCheckpoint ck;
    const auto& c = doc.at("config");
    ck.config.input_dim = c.at("input_dim").get<std::size_t>();
    ck.config.hidden_widths = c.at("hidden_widths").get<std::vector<std::size_t>>();
    ck.config.rep_dim = c.at("rep_dim").get<std::size_t>();
    ck.config.classes = c.at("classes").get<std::size_t>();
    ck.config.validate();

    const auto& params = doc.at("parameters");
    const std::size_t layers = ck.config.hidden_widths.size() + 1;
    if (params.size() != 2 * layers + 1) {
      throw DataError("checkpoint: expected " + std::to_string(2 * layers + 1) +
                      " parameter arrays, found " + std::to_string(params.size()));
    }
    std::size_t in = ck.config.input_dim;
    for (std::size_t i = 0; i < layers; ++i) {
      const std::size_t out = i + 1 == layers ? ck.config.rep_dim : ck.config.hidden_widths[i];
      const std::string prefix = "extractor." + std::to_string(i);
      AffineLayer layer;
      layer.weight = read_matrix(params[2 * i], prefix + ".weight", out, in);
      layer.bias = read_matrix(params[2 * i + 1], prefix + ".bias", 1, out);
      layer.activation = Activation::ReLU;
      ck.extractor.layers.push_back(std::move(layer));
      in = out;
    }
    ck.header.weight = read_matrix(params[2 * layers], "header.weight", ck.config.classes,
                                   ck.config.rep_dim);
    return ck;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
}

std::string projector_to_json(const Projector& p, std::size_t d1) {
  json doc;
  doc["format"] = "fedmrl.projector";
  doc["version"] = kCheckpointVersion;
  doc["d1"] = d1;
  doc["d2"] = p.fused_dim();
  doc["parameters"] = json::array({matrix_entry("projector.weight", p.weight)});
  return doc.dump() + '\n';
}

Projector projector_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    check_header(doc, "fedmrl.projector");
    const auto d1 = doc.at("d1").get<std::size_t>();
    const auto d2 = doc.at("d2").get<std::size_t>();
    const auto& params = doc.at("parameters");
    if (params.size() != 1) throw DataError("checkpoint: projector needs exactly one array");
    return {read_matrix(params[0], "projector.weight", d2, d1 + d2)};
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Extractor& ex, const Header& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_model: cannot write " + path.string());
  out << model_to_json(ex, h);
  if (!out) throw IoError("save_model: write failed for " + path.string());
}

ModelCheckpoint load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_model: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace fedmrl
