#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fedmrl/model.hpp"
#include "fedmrl/mrl.hpp"

namespace fedmrl {

inline constexpr int kCheckpointVersion = 1;

struct ModelCheckpoint {
  ModelConfig config;
  Extractor extractor;
  Header header;
};

// JSON layout (docs/formats.md):
//   {"format": "fedmrl.model", "version": 1,
//    "config": {"input_dim", "hidden_widths", "rep_dim", "classes"},
//    "parameters": [{"name", "rows", "cols", "data": [...]}, ...]}
// Parameters appear in declared order: extractor.<i>.weight,
// extractor.<i>.bias for each layer, then header.weight.

std::string model_to_json(const Extractor& ex, const Header& h);
ModelCheckpoint model_from_json(std::string_view text);

std::string projector_to_json(const Projector& p, std::size_t d1);
Projector projector_from_json(std::string_view text);

void save_model(const std::filesystem::path& path, const Extractor& ex, const Header& h);
ModelCheckpoint load_model(const std::filesystem::path& path);

}  // namespace fedmrl
