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

#include <cmath>
#include <random>
#include <string_view>

#include "hgt/error.hpp"
#include "hgt/geometry.hpp"
#include "hgt/model.hpp"

namespace hgt {

using nlohmann::json;

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Layers whose output feeds a ReLU.
bool before_relu(const std::string& name) {
  return name.rfind("unet.enc", 0) == 0 || name.rfind("unet.dec", 0) == 0 ||
         name.rfind("point.", 0) == 0 || name.rfind("pos.", 0) == 0 ||
         name.rfind("fuse.", 0) == 0 || name.rfind("hgn.", 0) == 0 ||
         name.rfind("head.0.", 0) == 0;
}

std::size_t fan_in(const std::string& name, const Shape& shape) {
  if (shape.size() == 4) return shape[1] * shape[2] * shape[3];  // conv [F x C x k x k]
  if (shape.size() == 2) return shape[0];                         // linear [in x out]
  return shape[0];
}

}  // namespace

void ModelParams::add(const std::string& name, Shape shape) {
  tensors_.push_back({name, Tensor::zeros(std::move(shape), true)});
}

void ModelParams::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < tensors_.size(); ++i) index_[tensors_[i].name] = i;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config_ = config;
  const auto& ch = config.unet_channels;
  const std::size_t levels = ch.size();
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t in = l == 0 ? 3 : ch[l - 1];
    const std::string pre = "unet.enc" + std::to_string(l);
    p.add(pre + ".weight", {static_cast<std::size_t>(ch[l]), in, 3, 3});
    p.add(pre + ".bias", {static_cast<std::size_t>(ch[l])});
  }
  for (std::size_t l = levels - 1; l-- > 0;) {
    const std::string pre = "unet.dec" + std::to_string(l);
    p.add(pre + ".weight",
          {static_cast<std::size_t>(ch[l]), static_cast<std::size_t>(ch[l + 1] + ch[l]), 3, 3});
    p.add(pre + ".bias", {static_cast<std::size_t>(ch[l])});
  }
  p.add("unet.out.weight", {static_cast<std::size_t>(config.d_img), static_cast<std::size_t>(ch[0]), 1, 1});
  p.add("unet.out.bias", {static_cast<std::size_t>(config.d_img)});

  auto mlp = [&](const std::string& prefix, const std::vector<int>& widths) {
    std::size_t in = 3;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const std::string pre = prefix + "." + std::to_string(k);
      p.add(pre + ".weight", {in, static_cast<std::size_t>(widths[k])});
      p.add(pre + ".bias", {static_cast<std::size_t>(widths[k])});
      in = widths[k];
    }
  };
  mlp("point", config.point_mlp);
  mlp("pos", config.pos_mlp);

  const auto d = static_cast<std::size_t>(config.d_token);
  p.add("fuse.weight", {static_cast<std::size_t>(config.fused_width()), d});
  p.add("fuse.bias", {d});

  std::size_t head_in = d;
  if (config.variant == Variant::kHgt) {
    for (int b = 0; b < config.attention_blocks; ++b) {
      const std::string pre = "attn" + std::to_string(b);
      for (const char* w : {".wq", ".wk", ".wv", ".wo"}) p.add(pre + w, {d, d});
      p.add(pre + ".gamma", {d});
      p.add(pre + ".beta", {d});
      p.running_.push_back(ops::RunningStats::identity(d));
    }
  } else {
    p.add("hgn.weight", {d, d});
    p.add("hgn.bias", {d});
    head_in = 2 * d;
  }
  const auto hidden = static_cast<std::size_t>(config.head_hidden);
  p.add("head.0.weight", {head_in, hidden});
  p.add("head.0.bias", {hidden});
  p.add("head.1.weight", {hidden, 3});
  p.add("head.1.bias", {3});

  // Weights: U(+-sqrt(6 / fan_in)) ahead of a ReLU, U(+-sqrt(3 / fan_in))
  // otherwise. Biases: U(+-1 / sqrt(fan_in)). Batch-norm scale 1, shift 0.
  for (std::size_t i = 0; i < p.tensors_.size(); ++i) {
    NamedTensor& nt = p.tensors_[i];
    auto data = nt.tensor.mutable_data();
    if (ends_with(nt.name, ".gamma")) {
      std::fill(data.begin(), data.end(), 1.0);
      continue;
    }
    if (ends_with(nt.name, ".beta")) continue;
    Rng rng(derive_seed(seed, stable_hash(nt.name)));
    double bound;
    if (ends_with(nt.name, ".bias")) {
      const NamedTensor& w = p.tensors_[i - 1];  // bias follows its weight
      bound = 1.0 / std::sqrt(static_cast<double>(fan_in(w.name, w.tensor.shape())));
    } else {
      const double gain = before_relu(nt.name) ? 6.0 : 3.0;
      bound = std::sqrt(gain / static_cast<double>(fan_in(nt.name, nt.tensor.shape())));
    }
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : data) v = dist(rng);
  }
  p.reindex();
  return p;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("model has no parameter '" + name + "'");
  return tensors_[it->second].tensor;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.tensor.numel();
  return n;
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.config_ = config_;
  p.running_ = running_;
  for (const auto& t : tensors_) p.tensors_.push_back({t.name, t.tensor.clone()});
  p.reindex();
  return p;
}

void ModelParams::assign_values(const ModelParams& other) {
  if (other.tensors_.size() != tensors_.size()) {
    throw ContractError("assign_values: parameter layouts differ");
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto src = other.tensors_[i].tensor.data();
    auto dst = tensors_[i].tensor.mutable_data();
    if (src.size() != dst.size()) throw ContractError("assign_values: size mismatch");
    std::copy(src.begin(), src.end(), dst.begin());
  }
  running_ = other.running_;
}

void ModelParams::zero_grad() {
  for (auto& t : tensors_) t.tensor.zero_grad();
}

void ModelParams::save(const std::filesystem::path& path, json meta) const {
  std::vector<NamedTensor> all = tensors_;
  for (std::size_t b = 0; b < running_.size(); ++b) {
    const std::string pre = "attn" + std::to_string(b);
    const auto& rs = running_[b];
    all.push_back({pre + ".running_mean", Tensor::from({rs.mean.size()}, rs.mean)});
    all.push_back({pre + ".running_var", Tensor::from({rs.var.size()}, rs.var)});
  }
  if (meta.is_null()) meta = json::object();
  meta["model"] = to_json(config_);
  save_checkpoint(path, all, meta);
}

ModelParams ModelParams::load(const std::filesystem::path& path, json* meta) {
  Checkpoint ck = load_checkpoint(path);
  if (!ck.meta.contains("model")) {
    throw ParseError("checkpoint " + path.string() + " carries no model config");
  }
  ModelParams p = init(model_config_from_json(ck.meta["model"]), 0);
  auto copy_into = [&](const std::string& name, std::span<double> dst, const Shape& shape) {
    const Tensor& src = ck.get(name);
    if (src.shape() != shape) {
      throw ParseError("checkpoint tensor '" + name + "' has shape " + shape_string(src.shape()) +
                       ", expected " + shape_string(shape));
    }
    std::copy(src.data().begin(), src.data().end(), dst.begin());
  };
  for (auto& t : p.tensors_) copy_into(t.name, t.tensor.mutable_data(), t.tensor.shape());
  for (std::size_t b = 0; b < p.running_.size(); ++b) {
    const std::string pre = "attn" + std::to_string(b);
    auto& rs = p.running_[b];
    copy_into(pre + ".running_mean", rs.mean, {rs.mean.size()});
    copy_into(pre + ".running_var", rs.var, {rs.var.size()});
  }
  if (meta) *meta = ck.meta;
  return p;
}

}  // namespace hgt
