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

// flexinet {features|train|distill-fit|quantize|eval} --config <path> [--set k=v ...] --out <dir>
// Exit codes: 0 success, 1 user or configuration error, 2 internal error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flexinet/config.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/pipeline.hpp"
#include "json.hpp"

namespace {

using namespace flexinet;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--set", c.sets, "Override a config value, e.g. --set train.epochs=5")->take_all();
  cmd->add_option("--out", c.out, "Output directory")->required();
}

RunConfig resolve(const Common& c) {
  std::optional<fs::path> file;
  if (!c.config.empty()) file = c.config;
  return load_run_config(file, c.sets);
}

int run(int argc, char** argv) {
  CLI::App app{"FlexiNet acoustic scene classification toolkit"};
  app.require_subcommand(1);

  Common features_c, train_c, fit_c, quant_c, eval_c, gen_c, teach_c, energy_c, count_c;
  std::string input, logits, model, calibration, split = "test";
  std::uint64_t teacher_seed = 2024;
  std::size_t bins = 40;

  auto* features = app.add_subcommand("features", "Extract log-mel features for every WAV in a directory");
  add_common(features, features_c);
  features->add_option("--input", input, "Directory of WAV files (default: data.root)");

  auto* train = app.add_subcommand("train", "Train a float model (optional KD and QAT)");
  add_common(train, train_c);

  auto* fit = app.add_subcommand("distill-fit", "Fit teacher fusion weights on the train split");
  add_common(fit, fit_c);
  fit->add_option("--logits", logits, "Teacher logits file (default: distill.logits)");

  auto* quantize = app.add_subcommand("quantize", "Convert a float model to an int8 container");
  add_common(quantize, quant_c);
  quantize->add_option("--model", model, "Float model container")->required();
  quantize->add_option("--calibration", calibration, "Calibration list: clip ids or WAV paths, one per line");

  auto* eval = app.add_subcommand("eval", "Per-device accuracy report for a float or int8 model");
  add_common(eval, eval_c);
  eval->add_option("--model", model, "Model container")->required();
  eval->add_option("--split", split, "train, test or unused");

  auto* gen = app.add_subcommand("generate", "Write the synthetic corpus as WAV files plus meta.csv");
  add_common(gen, gen_c);

  auto* teach = app.add_subcommand("make-teachers", "Write synthetic three-teacher logits for the train split");
  add_common(teach, teach_c);
  teach->add_option("--teacher-seed", teacher_seed, "Seed of the synthetic teachers");

  auto* energy = app.add_subcommand("energy", "Clip-energy histogram of the corpus");
  add_common(energy, energy_c);
  energy->add_option("--bins", bins, "Histogram bins");

  auto* count = app.add_subcommand("count", "Parameter and MAC counts of the configured architecture");
  add_common(count, count_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (features->parsed()) {
    const RunConfig cfg = resolve(features_c);
    const fs::path in = input.empty() ? fs::path(cfg.data.root) : fs::path(input);
    if (in.empty()) throw ConfigError("features: pass --input or set data.root");
    const auto s = cmd_features(cfg, in, features_c.out);
    std::cout << "features: " << s.written << " written, " << s.failures.size() << " failed\n";
    for (const auto& [path, why] : s.failures) std::cerr << "  " << path << ": " << why << "\n";
    return s.failures.empty() ? 0 : 1;
  }
  if (train->parsed()) {
    cmd_train(resolve(train_c), train_c.out);
    std::cout << "train: wrote " << (fs::path(train_c.out) / "model.flxn").string() << "\n";
    return 0;
  }
  if (fit->parsed()) {
    const auto f = cmd_distill_fit(resolve(fit_c), logits, fit_c.out);
    std::cout << "distill-fit: cross-entropy " << f.cross_entropy << " (uniform " << f.uniform_cross_entropy << ")\n";
    return 0;
  }
  if (quantize->parsed()) {
    std::optional<fs::path> cal;
    if (!calibration.empty()) cal = calibration;
    cmd_quantize(resolve(quant_c), model, cal, quant_c.out);
    std::cout << "quantize: wrote " << (fs::path(quant_c.out) / "model_int8.flxn").string() << "\n";
    return 0;
  }
  if (eval->parsed()) {
    const auto rep = cmd_eval(resolve(eval_c), model, parse_split(split), eval_c.out);
    std::cout << rep.to_text();
    return 0;
  }
  if (gen->parsed()) {
    cmd_generate(resolve(gen_c), gen_c.out);
    return 0;
  }
  if (teach->parsed()) {
    cmd_make_teachers(resolve(teach_c), teach_c.out, teacher_seed);
    return 0;
  }
  if (energy->parsed()) {
    const auto h = cmd_energy(resolve(energy_c), energy_c.out, bins);
    std::cout << "energy: mean " << h.mean << " over " << h.total << " clips\n";
    return 0;
  }
  if (count->parsed()) {
    const RunConfig cfg = resolve(count_c);
    const Complexity c = count_params_macs(cfg.arch, cfg.features.n_mels, cfg.features.frames());
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : c.layers) layers.push_back({{"name", l.name}, {"params", l.params}, {"macs", l.macs}});
    fs::create_directories(count_c.out);
    write_resolved_config(cfg, count_c.out);
    std::ofstream(fs::path(count_c.out) / "complexity.json")
        << nlohmann::json{{"arch", cfg.arch.name}, {"params", c.params}, {"macs", c.macs}, {"layers", layers}}.dump(2)
        << "\n";
    std::cout << cfg.arch.name << ": " << c.params << " params, " << c.macs << " MACs\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const flexinet::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const flexinet::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
