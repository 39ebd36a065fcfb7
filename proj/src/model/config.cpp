// Copyright 2026 The hgt-normals Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <set>
#include <string>

#include "hgt/error.hpp"
#include "hgt/model.hpp"

namespace hgt {

using nlohmann::json;

namespace {

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<Variant> kVariants[] = {{Variant::kHgt, "hgt"}, {Variant::kHgn, "hgn"}};
constexpr EnumName<Reduction> kReductions[] = {{Reduction::kMax, "max"},
                                               {Reduction::kMean, "mean"}};
constexpr EnumName<AttentionNorm> kNorms[] = {{AttentionNorm::kSoftmax, "softmax"},
                                              {AttentionNorm::kOffset, "offset"}};
constexpr EnumName<Combine> kCombines[] = {{Combine::kValue, "value"}, {Combine::kQuery, "query"}};

template <typename E, std::size_t N>
const char* name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const std::string& s, const char* field) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : "|") + e.name;
  throw ConfigError(std::string(field) + ": '" + s + "' is not one of " + allowed);
}

void require_positive(const std::vector<int>& widths, const char* field) {
  if (widths.empty()) throw ConfigError(std::string(field) + " must list at least one width");
  for (int w : widths) {
    if (w < 1) throw ConfigError(std::string(field) + " widths must be >= 1");
  }
}

}  // namespace

void ModelConfig::validate() const {
  require_positive(unet_channels, "unet_channels");
  require_positive(point_mlp, "point_mlp");
  require_positive(pos_mlp, "pos_mlp");
  if (d_img < 1) throw ConfigError("d_img must be >= 1");
  if (d_token < 1) throw ConfigError("d_token must be >= 1");
  if (neighbor_count < 1) throw ConfigError("neighbor_count must be >= 1");
  if (!(radius > 0.0)) throw ConfigError("radius must be > 0");
  if (variant == Variant::kHgt && attention_blocks < 1) {
    throw ConfigError("attention_blocks must be >= 1 for the hgt variant");
  }
  if (attention_blocks < 0) throw ConfigError("attention_blocks must be >= 0");
  if (head_hidden < 1) throw ConfigError("head_hidden must be >= 1");
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.unet_channels = {4, 8, 16};
  c.d_img = 8;
  c.point_mlp = {16, 32};
  c.pos_mlp = {16};
  c.d_token = 32;
  c.neighbor_count = 16;
  c.head_hidden = 32;
  return c;
}

std::string to_string(Variant v) { return name_of(kVariants, v); }

Variant parse_variant(const std::string& s) { return parse_enum(kVariants, s, "variant"); }

json to_json(const ModelConfig& c) {
  return json{{"variant", name_of(kVariants, c.variant)},
              {"unet_channels", c.unet_channels},
              {"d_img", c.d_img},
              {"point_mlp", c.point_mlp},
              {"pos_mlp", c.pos_mlp},
              {"d_token", c.d_token},
              {"neighbor_count", c.neighbor_count},
              {"radius", c.radius},
              {"attention_blocks", c.attention_blocks},
              {"head_hidden", c.head_hidden},
              {"reduction", name_of(kReductions, c.reduction)},
              {"attention_norm", name_of(kNorms, c.attention_norm)},
              {"combine", name_of(kCombines, c.combine)}};
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const std::set<std::string> known = {
      "variant",        "unet_channels", "d_img",    "point_mlp",
      "pos_mlp",        "d_token",       "neighbor_count", "radius",
      "attention_blocks", "head_hidden", "reduction", "attention_norm",
      "combine", "preset"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown model config key '" + item.key() + "'");
  }
  ModelConfig c;
  try {
    if (j.contains("preset")) {
      const std::string preset = j["preset"].get<std::string>();
      if (preset == "desk") c = ModelConfig::desk();
      else if (preset != "default") throw ConfigError("preset: '" + preset + "' is not one of default|desk");
    }
    if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
    if (j.contains("unet_channels")) c.unet_channels = j["unet_channels"].get<std::vector<int>>();
    if (j.contains("d_img")) c.d_img = j["d_img"].get<int>();
    if (j.contains("point_mlp")) c.point_mlp = j["point_mlp"].get<std::vector<int>>();
    if (j.contains("pos_mlp")) c.pos_mlp = j["pos_mlp"].get<std::vector<int>>();
    if (j.contains("d_token")) c.d_token = j["d_token"].get<int>();
    if (j.contains("neighbor_count")) c.neighbor_count = j["neighbor_count"].get<int>();
    if (j.contains("radius")) c.radius = j["radius"].get<double>();
    if (j.contains("attention_blocks")) c.attention_blocks = j["attention_blocks"].get<int>();
    if (j.contains("head_hidden")) c.head_hidden = j["head_hidden"].get<int>();
    if (j.contains("reduction")) {
      c.reduction = parse_enum(kReductions, j["reduction"].get<std::string>(), "reduction");
    }
    if (j.contains("attention_norm")) {
      c.attention_norm = parse_enum(kNorms, j["attention_norm"].get<std::string>(), "attention_norm");
    }
    if (j.contains("combine")) {
      c.combine = parse_enum(kCombines, j["combine"].get<std::string>(), "combine");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace hgt
