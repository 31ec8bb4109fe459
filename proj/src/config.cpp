/**
 * Copyright 2026 The FlexiNet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "flexinet/config.hpp"

#include <cstdlib>
#include <fstream>

#include "flexinet/errors.hpp"
#include "flexinet/log.hpp"

namespace flexinet {

using nlohmann::json;

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::fitted: return "fitted";
    case FusionMode::uniform: return "uniform";
    case FusionMode::none: return "none";
  }
  return "fitted";
}

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "fitted") return FusionMode::fitted;
  if (s == "uniform" || s == "averaged") return FusionMode::uniform;
  if (s == "none") return FusionMode::none;
  throw ConfigError("distill.fusion: expected fitted, uniform or none, got '" + s + "'");
}

json arch_to_json(const ArchConfig& a) {
  json stages = json::array();
  for (const auto& s : a.stages) {
    stages.push_back({{"blocks", s.num_blocks}, {"channels", s.channels}, {"stride", s.first_stride}});
  }
  return {{"name", a.name},
          {"in_channels", a.in_channels},
          {"stem_channels", a.stem_channels},
          {"stages", stages},
          {"num_classes", a.num_classes},
          {"resnorm_placement", to_string(a.resnorm_placement)},
          {"resnorm_lambda_init", a.resnorm_lambda_init},
          {"resnorm_epsilon", a.resnorm_epsilon}};
}

namespace {

template <typename T>
T get(const json& j, const char* key, const std::string& section) {
  if (!j.contains(key)) throw ConfigError(section + "." + key + " is missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + " has the wrong type (" + j.at(key).dump() + ")");
  }
}

void check_keys(const json& j, std::initializer_list<const char*> keys, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("unknown config key '" + section + "." + it.key() + "'");
  }
}

json defaults_json() { return to_json(RunConfig{}); }

}  // namespace

ArchConfig arch_from_json(const json& j) {
  check_keys(j, {"name", "in_channels", "stem_channels", "stages", "num_classes", "resnorm_placement",
                 "resnorm_lambda_init", "resnorm_epsilon"},
             "arch");
  ArchConfig a;
  a.name = get<std::string>(j, "name", "arch");
  a.in_channels = get<std::size_t>(j, "in_channels", "arch");
  a.stem_channels = get<std::size_t>(j, "stem_channels", "arch");
  a.num_classes = get<std::size_t>(j, "num_classes", "arch");
  a.resnorm_placement = parse_resnorm_placement(get<std::string>(j, "resnorm_placement", "arch"));
  a.resnorm_lambda_init = get<double>(j, "resnorm_lambda_init", "arch");
  a.resnorm_epsilon = get<double>(j, "resnorm_epsilon", "arch");
  const json& st = j.at("stages");
  if (!st.is_array()) throw ConfigError("arch.stages must be an array");
  for (const auto& s : st) {
    check_keys(s, {"blocks", "channels", "stride"}, "arch.stages[]");
    a.stages.push_back({get<std::size_t>(s, "blocks", "arch.stages[]"), get<std::size_t>(s, "channels", "arch.stages[]"),
                        get<std::size_t>(s, "stride", "arch.stages[]")});
  }
  return a;
}

json to_json(const RunConfig& c) {
  json j;
  j["arch"] = arch_to_json(c.arch);
  const auto& f = c.features;
  j["features"] = {{"sample_rate", f.sample_rate}, {"n_mels", f.n_mels}, {"n_fft", f.n_fft},
                   {"hop", f.hop}, {"fmin", f.fmin}, {"fmax", f.fmax}, {"log_floor", f.log_floor},
                   {"clip_samples", f.clip_samples}, {"trim_last_frame", f.trim_last_frame}};
  const auto& a = c.augment;
  j["augment"] = {
      {"fms", {{"enabled", a.fms_enabled}, {"p", a.fms.p}, {"alpha", a.fms.alpha}, {"epsilon", a.fms.epsilon}}},
      {"adir",
       {{"enabled", a.adir_enabled}, {"p", a.adir_p}, {"energy_threshold", a.adir_energy_threshold},
        {"dir_bank", a.dir_bank}}},
      {"roll", {{"enabled", a.roll_enabled}, {"fraction", a.roll_fraction}}},
      {"freq_mask", {{"enabled", a.mask_enabled}, {"width", a.mask_width}}}};
  const auto& d = c.distill;
  j["distill"] = {{"enabled", d.enabled},
                  {"logits", d.logits},
                  {"fusion", to_string(d.fusion)},
                  {"fusion_params", d.fusion_params},
                  {"num_teachers", d.num_teachers ? json(*d.num_teachers) : json(nullptr)},
                  {"lambda", d.kd.lambda},
                  {"temperature", d.kd.temperature},
                  {"schedule", d.kd.schedule ? json::array({d.kd.schedule->first, d.kd.schedule->second})
                                             : json(nullptr)}};
  const auto& q = c.quant;
  j["quant"] = {{"enabled", q.enabled},
                {"start_fraction", q.start_fraction},
                {"freeze_fraction", q.freeze_fraction},
                {"calibration_clips", q.calibration_clips}};
  const auto& t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"min_learning_rate", t.min_learning_rate},
                {"weight_decay", t.weight_decay},
                {"warmup_epochs", t.warmup_epochs},
                {"seed", t.seed},
                {"checkpoint_every", t.checkpoint_every},
                {"eval_every", t.eval_every}};
  const auto& s = c.data.synthetic;
  j["data"] = {{"source", c.data.source},
               {"root", c.data.root},
               {"metadata", c.data.metadata},
               {"synthetic",
                {{"train_clips_per_cell", s.train_clips_per_cell},
                 {"test_clips_per_cell", s.test_clips_per_cell},
                 {"unused_clips_per_cell", s.unused_clips_per_cell},
                 {"seed", s.seed},
                 {"sample_rate", s.sample_rate},
                 {"clip_samples", s.clip_samples}}}};
  return j;
}

void merge_config(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config" + (path.empty() ? "" : " section '" + path + "'") + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (key == "arch.preset") continue;
    if (key == "arch" && it->is_object() && it->contains("preset")) {
      const json& p = it->at("preset");
      if (!p.is_string()) throw ConfigError("arch.preset must be a string");
      base["arch"] = arch_to_json(reference_config(p.get<std::string>()));
    }
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& dst = base[it.key()];
    if (dst.is_object() && key != "arch.stages") {
      merge_config(dst, *it, key);
    } else if (!dst.is_null() && !it->is_null()) {
      const bool ok = dst.is_number() && it->is_number()
                          ? !(dst.is_number_integer() && it->is_number_float()) &&
                                !(dst.is_number_unsigned() && it->get<double>() < 0.0)
                          : dst.type() == it->type();
      if (!ok) {
        const std::string want = dst.is_number_unsigned() ? "a non-negative integer"
                                 : dst.is_number_integer() ? "an integer"
                                                           : dst.type_name();
        throw ConfigError("config key '" + key + "' expects " + want + ", got " + it->dump());
      }
      dst = *it;
    } else {
      dst = *it;
    }
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  // Build a nested patch so that the same checks as for files apply.
  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1)) {
    parts.push_back(rest.substr(0, pos));
  }
  parts.push_back(rest);
  for (auto p = parts.rbegin(); p != parts.rend(); ++p) {
    if (p->empty()) throw ConfigError("--set: empty path component in '" + key + "'");
    patch = json{{*p, patch}};
  }
  merge_config(doc, patch);
}

RunConfig run_config_from_json(const json& input) {
  json j = defaults_json();
  merge_config(j, input);
  RunConfig c;
  c.arch = arch_from_json(j["arch"]);
  const json& f = j["features"];
  c.features.sample_rate = get<int>(f, "sample_rate", "features");
  c.features.n_mels = get<std::size_t>(f, "n_mels", "features");
  c.features.n_fft = get<std::size_t>(f, "n_fft", "features");
  c.features.hop = get<std::size_t>(f, "hop", "features");
  c.features.fmin = get<double>(f, "fmin", "features");
  c.features.fmax = get<double>(f, "fmax", "features");
  c.features.log_floor = get<double>(f, "log_floor", "features");
  c.features.clip_samples = get<std::size_t>(f, "clip_samples", "features");
  c.features.trim_last_frame = get<bool>(f, "trim_last_frame", "features");

  const json& a = j["augment"];
  auto& ag = c.augment;
  ag.fms_enabled = get<bool>(a["fms"], "enabled", "augment.fms");
  ag.fms.p = get<double>(a["fms"], "p", "augment.fms");
  ag.fms.alpha = get<double>(a["fms"], "alpha", "augment.fms");
  ag.fms.epsilon = get<double>(a["fms"], "epsilon", "augment.fms");
  ag.adir_enabled = get<bool>(a["adir"], "enabled", "augment.adir");
  ag.adir_p = get<double>(a["adir"], "p", "augment.adir");
  ag.adir_energy_threshold = get<double>(a["adir"], "energy_threshold", "augment.adir");
  ag.dir_bank = get<std::string>(a["adir"], "dir_bank", "augment.adir");
  ag.roll_enabled = get<bool>(a["roll"], "enabled", "augment.roll");
  ag.roll_fraction = get<double>(a["roll"], "fraction", "augment.roll");
  ag.mask_enabled = get<bool>(a["freq_mask"], "enabled", "augment.freq_mask");
  ag.mask_width = get<std::size_t>(a["freq_mask"], "width", "augment.freq_mask");

  const json& d = j["distill"];
  c.distill.enabled = get<bool>(d, "enabled", "distill");
  c.distill.logits = get<std::string>(d, "logits", "distill");
  c.distill.fusion = parse_fusion_mode(get<std::string>(d, "fusion", "distill"));
  c.distill.fusion_params = get<std::string>(d, "fusion_params", "distill");
  if (!d["num_teachers"].is_null()) c.distill.num_teachers = get<std::size_t>(d, "num_teachers", "distill");
  c.distill.kd.lambda = get<double>(d, "lambda", "distill");
  c.distill.kd.temperature = get<double>(d, "temperature", "distill");
  if (!d["schedule"].is_null()) {
    const auto s = get<std::vector<double>>(d, "schedule", "distill");
    if (s.size() != 2) throw ConfigError("distill.schedule must be [lambda_start, lambda_end] or null");
    c.distill.kd.schedule = std::make_pair(s[0], s[1]);
  }

  const json& q = j["quant"];
  c.quant.enabled = get<bool>(q, "enabled", "quant");
  c.quant.start_fraction = get<double>(q, "start_fraction", "quant");
  c.quant.freeze_fraction = get<double>(q, "freeze_fraction", "quant");
  c.quant.calibration_clips = get<std::size_t>(q, "calibration_clips", "quant");

  const json& t = j["train"];
  c.train.epochs = get<std::size_t>(t, "epochs", "train");
  c.train.batch_size = get<std::size_t>(t, "batch_size", "train");
  c.train.learning_rate = get<double>(t, "learning_rate", "train");
  c.train.min_learning_rate = get<double>(t, "min_learning_rate", "train");
  c.train.weight_decay = get<double>(t, "weight_decay", "train");
  c.train.warmup_epochs = get<std::size_t>(t, "warmup_epochs", "train");
  c.train.seed = get<std::uint64_t>(t, "seed", "train");
  c.train.checkpoint_every = get<std::size_t>(t, "checkpoint_every", "train");
  c.train.eval_every = get<std::size_t>(t, "eval_every", "train");

  const json& da = j["data"];
  c.data.source = get<std::string>(da, "source", "data");
  c.data.root = get<std::string>(da, "root", "data");
  c.data.metadata = get<std::string>(da, "metadata", "data");
  const json& s = da["synthetic"];
  auto& sp = c.data.synthetic;
  sp.train_clips_per_cell = get<std::size_t>(s, "train_clips_per_cell", "data.synthetic");
  sp.test_clips_per_cell = get<std::size_t>(s, "test_clips_per_cell", "data.synthetic");
  sp.unused_clips_per_cell = get<std::size_t>(s, "unused_clips_per_cell", "data.synthetic");
  sp.seed = get<std::uint64_t>(s, "seed", "data.synthetic");
  sp.sample_rate = get<int>(s, "sample_rate", "data.synthetic");
  sp.clip_samples = get<std::size_t>(s, "clip_samples", "data.synthetic");
  return c;
}

void RunConfig::validate() const {
  arch.validate();
  features.validate();
  augment.fms.validate();
  if (!(augment.adir_p >= 0.0 && augment.adir_p <= 1.0)) throw ConfigError("augment.adir.p must lie in [0, 1]");
  if (!(augment.adir_energy_threshold >= 0.0)) throw ConfigError("augment.adir.energy_threshold must be >= 0");
  if (!(augment.roll_fraction >= 0.0 && augment.roll_fraction <= 1.0)) {
    throw ConfigError("augment.roll.fraction must lie in [0, 1]");
  }
  if (augment.mask_width >= features.n_mels) throw ConfigError("augment.freq_mask.width must be below features.n_mels");
  distill.kd.validate();
  if (distill.enabled && distill.logits.empty()) {
    throw ConfigError("distill.enabled requires distill.logits (teacher logits file)");
  }
  if (distill.num_teachers && *distill.num_teachers == 0) throw ConfigError("distill.num_teachers must be positive");
  if (!(quant.start_fraction >= 0.0 && quant.start_fraction <= 1.0) ||
      !(quant.freeze_fraction >= quant.start_fraction && quant.freeze_fraction <= 1.0)) {
    throw ConfigError("quant: need 0 <= start_fraction <= freeze_fraction <= 1");
  }
  if (train.epochs == 0) throw ConfigError("train.epochs must be positive");
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(train.min_learning_rate >= 0.0 && train.min_learning_rate <= train.learning_rate)) {
    throw ConfigError("train.min_learning_rate must lie in [0, learning_rate]");
  }
  if (!(train.weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (data.source == "synthetic") {
    data.synthetic.validate();
    if (data.synthetic.sample_rate != features.sample_rate) {
      warn("data.synthetic.sample_rate differs from features.sample_rate; clips will be resampled");
    }
  } else if (data.source == "tau") {
    if (data.metadata.empty()) throw ConfigError("data.source = tau requires data.metadata");
  } else {
    throw ConfigError("data.source: expected synthetic or tau, got '" + data.source + "'");
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides) {
  json doc = defaults_json();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    json user;
    try {
      user = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + file->string() + ": " + e.what());
    }
    merge_config(doc, user);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  if (const char* env = std::getenv("FLEXINET_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError(std::string("FLEXINET_SEED must be an unsigned integer, got '") + env + "'");
    doc["train"]["seed"] = v;
  }
  RunConfig c = run_config_from_json(doc);
  c.validate();
  return c;
}

void write_resolved_config(const RunConfig& c, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "resolved_config.json", std::ios::binary);
  out << to_json(c).dump(2) << '\n';
  if (!out) throw FormatError("cannot write " + (out_dir / "resolved_config.json").string());
}

}  // namespace flexinet
