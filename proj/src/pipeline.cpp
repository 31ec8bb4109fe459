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

#include "flexinet/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "flexinet/augment.hpp"
#include "flexinet/container.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/int8_model.hpp"
#include "flexinet/log.hpp"
#include "flexinet/train.hpp"

namespace flexinet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::vector<ClipRecord> load_corpus(const DataConfig& data) {
  if (data.source == "synthetic") return generate_synthetic_corpus(data.synthetic);
  if (data.source == "tau") {
    if (!fs::exists(data.metadata)) throw ConfigError("data.metadata not found: " + data.metadata);
    return load_tau_metadata(data.metadata, data.root);
  }
  throw ConfigError("data.source: expected synthetic or tau, got '" + data.source + "'");
}

std::vector<ClipRecord> select_split(const std::vector<ClipRecord>& records, Split split) {
  std::vector<ClipRecord> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r);
  return out;
}

FeaturesSummary cmd_features(const RunConfig& cfg, const fs::path& in_dir, const fs::path& out_dir) {
  if (!fs::is_directory(in_dir)) throw ConfigError("features: input directory not found: " + in_dir.string());
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(in_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  FeaturesSummary summary;
  if (files.empty()) warn("features: no .wav files under " + in_dir.string());
  MelFrontend fe(cfg.features);
  for (const auto& f : files) {
    const fs::path rel = fs::relative(f, in_dir);
    try {
      const TensorF feat = fe(read_wav(f));
      fs::path dst = out_dir / rel;
      dst.replace_extension(".flxf");
      save_features(dst, feat, {{"source", rel.generic_string()}});
      ++summary.written;
    } catch (const FormatError& e) {
      summary.failures.emplace_back(rel.generic_string(), e.what());
    }
  }
  std::string manifest;
  for (const auto& [path, why] : summary.failures) manifest += path + "\t" + why + "\n";
  write_text(out_dir / "failures.txt", manifest);
  return summary;
}

namespace {

TeacherLogits load_teachers(const RunConfig& cfg, const fs::path& path) {
  if (path.empty()) throw ConfigError("distill: no teacher logits file configured (distill.logits)");
  if (!fs::exists(path)) throw ConfigError("distill: teacher logits file not found: " + path.string());
  TeacherLogits t = read_teacher_logits(path);
  if (cfg.distill.num_teachers && *cfg.distill.num_teachers != t.num_teachers()) {
    throw ConfigError("distill: config expects " + std::to_string(*cfg.distill.num_teachers) + " teachers, " +
                      path.string() + " holds " + std::to_string(t.num_teachers()));
  }
  return t;
}

}  // namespace

void cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  std::optional<TeacherLogits> teachers;
  if (cfg.distill.enabled) teachers = load_teachers(cfg, cfg.distill.logits);

  const auto corpus = load_corpus(cfg.data);
  const FeatureSet train = compute_features(select_split(corpus, Split::train), cfg.features);
  const FeatureSet test = compute_features(select_split(corpus, Split::test), cfg.features);

  std::unique_ptr<KdTargets> kd;
  if (teachers) {
    std::optional<FusionParams> fitted;
    if (cfg.distill.fusion == FusionMode::fitted && !cfg.distill.fusion_params.empty()) {
      fitted = load_fusion(cfg.distill.fusion_params);
    }
    kd = std::make_unique<KdTargets>(make_kd_targets(*teachers, train, cfg.distill.fusion, fitted));
    save_fusion(out_dir / "fusion_used.json", kd->params);
  }

  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::binary);
  if (!metrics) throw FormatError("cannot write " + (out_dir / "metrics.jsonl").string());
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochMetrics& m) { metrics << m.to_json().dump() << '\n' << std::flush; };
  const json extra = {{"qat", cfg.quant.enabled}, {"seed", cfg.train.seed}, {"epochs", cfg.train.epochs}};
  cb.on_checkpoint = [&](FlexiNet<float>& model, std::size_t epoch) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04zu.flxn", epoch + 1);
    json e = extra;
    e["epoch"] = epoch + 1;
    save_float_model(model, out_dir / "checkpoints" / name, e);
  };
  TrainResult result = train_model(cfg, train, test.size() ? &test : nullptr, kd.get(), cb);
  save_float_model(*result.model, out_dir / "model.flxn", extra);
  if (test.size()) {
    const EvalReport rep = evaluate(predict(*result.model, test), test.records);
    write_text(out_dir / "eval_test.json", rep.to_json() + "\n");
    write_text(out_dir / "eval_test.txt", rep.to_text());
  }
}

FusionFit cmd_distill_fit(const RunConfig& cfg, const fs::path& logits, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  const TeacherLogits t = load_teachers(cfg, logits.empty() ? fs::path(cfg.distill.logits) : logits);
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& r : select_split(load_corpus(cfg.data), Split::train)) {
    if (!t.contains(r.clip_id)) throw ConfigError("distill-fit: teacher logits lack training clip '" + r.clip_id + "'");
    ids.push_back(r.clip_id);
    labels.push_back(r.scene);
  }
  if (ids.empty()) throw ConfigError("distill-fit: the training split is empty");
  const FusionFit fit = fit_fusion(gather_logits(t, ids), labels, t.num_teachers());
  save_fusion(out_dir / "fusion.json", fit.params);
  write_json(out_dir / "fit_report.json", {{"teachers", t.teacher_ids()},
                                           {"clips", ids.size()},
                                           {"cross_entropy", fit.cross_entropy},
                                           {"uniform_cross_entropy", fit.uniform_cross_entropy},
                                           {"iterations", fit.iterations}});
  return fit;
}

namespace {

FeatureSet calibration_set(const RunConfig& cfg, const fs::path& list) {
  std::ifstream in(list);
  if (!in) throw ConfigError("quantize: cannot open calibration list " + list.string());
  std::vector<std::string> entries;
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (!line.empty() && line[0] != '#') entries.push_back(line);
  }
  if (entries.empty()) throw ConfigError("quantize: calibration list " + list.string() + " is empty");
  std::vector<ClipRecord> corpus;
  bool corpus_loaded = false;
  std::map<std::string, const ClipRecord*> by_id;
  std::vector<ClipRecord> chosen;
  for (const auto& e : entries) {
    fs::path p = e;
    if (p.is_relative() && !fs::exists(p)) p = list.parent_path() / e;
    if (fs::is_regular_file(p)) {
      ClipRecord r;
      r.clip_id = p.stem().string();
      r.path = p;
      chosen.push_back(std::move(r));
      continue;
    }
    if (!corpus_loaded) {
      corpus = load_corpus(cfg.data);
      for (const auto& r : corpus) by_id[r.clip_id] = &r;
      corpus_loaded = true;
    }
    const auto it = by_id.find(e);
    if (it == by_id.end()) throw ConfigError("quantize: calibration entry '" + e + "' is neither a file nor a clip id");
    chosen.push_back(*it->second);
  }
  return compute_features(std::move(chosen), cfg.features);
}

}  // namespace

void cmd_quantize(const RunConfig& cfg, const fs::path& model_path, const std::optional<fs::path>& calibration_list,
                  const fs::path& out_dir) {
  if (!calibration_list) throw ConfigError("quantize: a calibration clip list is required (--calibration)");
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  const Container c = read_container(model_path);
  auto model = float_model_from_container(c);
  const bool qat = c.metadata.value("extra", json::object()).value("qat", false);
  const FeatureSet calib = calibration_set(cfg, *calibration_list);
  // QAT models keep the ranges they were trained with.
  if (!qat) calibrate(*model, calib, cfg.quant.calibration_clips);
  const QuantizedModel q = convert_int8(*model);
  const Container qc = int8_model_container(q);
  write_container(out_dir / "model_int8.flxn", qc);
  const auto pf = predict(*model, calib), pq = predict(q, calib);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pf.size(); ++i) agree += pf[i] == pq[i];
  const ContainerSize size = container_size(qc);
  const std::size_t params = model->parameter_count();
  write_json(out_dir / "quantize_report.json",
             {{"param_count", params},
              {"file_bytes", size.total},
              {"payload_bytes", size.payload},
              {"header_bytes", size.header()},
              {"payload_over_params", static_cast<double>(size.payload) / static_cast<double>(params)},
              {"observers", qat ? "qat" : "calibrated"},
              {"calibration_clips", calib.size()},
              {"calibration_top1_agreement", static_cast<double>(agree) / static_cast<double>(pf.size())}});
}

EvalReport cmd_eval(const RunConfig& cfg, const fs::path& model_path, Split split, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  const Container c = read_container(model_path);
  const FeatureSet set = compute_features(select_split(load_corpus(cfg.data), split), cfg.features);
  if (set.size() == 0) throw ConfigError("eval: split '" + split_name(split) + "' has no clips");
  std::vector<int> pred;
  if (c.kind == kInt8ModelKind) {
    pred = predict(int8_model_from_container(c), set);
  } else {
    pred = predict(*float_model_from_container(c), set);
  }
  const EvalReport rep = evaluate(pred, set.records);
  write_text(out_dir / "eval.json", rep.to_json() + "\n");
  write_text(out_dir / "eval.txt", rep.to_text());
  return rep;
}

void cmd_generate(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  write_synthetic_corpus(cfg.data.synthetic, out_dir);
}

void cmd_make_teachers(const RunConfig& cfg, const fs::path& out_dir, std::uint64_t seed) {
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& r : select_split(load_corpus(cfg.data), Split::train)) {
    ids.push_back(r.clip_id);
    labels.push_back(r.scene);
  }
  write_teacher_logits(out_dir / "teachers.txt",
                       make_synthetic_teacher_logits(ids, labels, default_synthetic_teachers(), seed));
}

EnergyHistogram cmd_energy(const RunConfig& cfg, const fs::path& out_dir, std::size_t bins) {
  fs::create_directories(out_dir);
  write_resolved_config(cfg, out_dir);
  const EnergyHistogram h = energy_histogram(load_corpus(cfg.data), bins);
  write_json(out_dir / "energy.json", {{"edges", h.edges}, {"counts", h.counts}, {"mean", h.mean}, {"clips", h.total}});
  return h;
}

}  // namespace flexinet
