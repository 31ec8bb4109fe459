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

#include "flexinet/distill.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include "flexinet/errors.hpp"
#include "flexinet/ops.hpp"
#include "json.hpp"

namespace flexinet {

using nlohmann::json;

TeacherLogits::TeacherLogits(std::vector<std::string> teacher_ids, std::vector<std::string> class_names)
    : teacher_ids_(std::move(teacher_ids)), class_names_(std::move(class_names)) {
  if (teacher_ids_.empty()) throw ConfigError("teacher logits: at least one teacher is required");
  if (class_names_.size() != kNumClasses) {
    throw ConfigError("teacher logits: expected 10 class names, got " + std::to_string(class_names_.size()));
  }
}

void TeacherLogits::add(const std::string& clip_id, std::vector<double> values) {
  if (values.size() != num_teachers() * kNumClasses) {
    throw FormatError("teacher logits: clip '" + clip_id + "' has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(num_teachers() * kNumClasses));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw FormatError("teacher logits: non-finite value for clip '" + clip_id + "'");
  }
  if (!index_.emplace(clip_id, clip_ids_.size()).second) {
    throw FormatError("teacher logits: duplicate clip id '" + clip_id + "'");
  }
  clip_ids_.push_back(clip_id);
  data_.insert(data_.end(), values.begin(), values.end());
}

const double* TeacherLogits::row(const std::string& clip_id) const {
  const auto it = index_.find(clip_id);
  if (it == index_.end()) throw std::out_of_range("teacher logits: no entry for clip '" + clip_id + "'");
  return data_.data() + it->second * num_teachers() * kNumClasses;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

TeacherLogits read_json_logits(const std::string& text, const std::string& where) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(where + ": invalid JSON: " + e.what());
  }
  try {
    const std::size_t k = j.at("K").get<std::size_t>();
    TeacherLogits t(j.at("teachers").get<std::vector<std::string>>(),
                    j.at("classes").get<std::vector<std::string>>());
    if (t.num_teachers() != k) throw FormatError(where + ": K does not match the teacher list");
    for (const auto& r : j.at("records")) {
      const auto rows = r.at("logits").get<std::vector<std::vector<double>>>();
      if (rows.size() != k) throw FormatError(where + ": record with " + std::to_string(rows.size()) + " teachers");
      std::vector<double> flat;
      for (const auto& row : rows) {
        if (row.size() != kNumClasses) throw FormatError(where + ": logit row must have 10 values");
        flat.insert(flat.end(), row.begin(), row.end());
      }
      t.add(r.at("clip_id").get<std::string>(), std::move(flat));
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
}

}  // namespace

TeacherLogits read_teacher_logits(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("teacher logits: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return read_json_logits(text, path.string());

  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0, k = 0;
  std::vector<std::string> classes, teachers;
  bool seen_magic = false;
  std::unique_ptr<TeacherLogits> t;
  auto fail = [&](const std::string& msg) {
    throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0][0] == '#') {
      const std::string key = tok[0].substr(1);
      if (key == "flexinet-teacher-logits") {
        seen_magic = true;
      } else if (key == "K") {
        if (tok.size() != 2) fail("malformed #K line");
        try {
          k = std::stoul(tok[1]);
        } catch (const std::exception&) {
          fail("malformed #K value '" + tok[1] + "'");
        }
      } else if (key == "classes") {
        classes.assign(tok.begin() + 1, tok.end());
      } else if (key == "teachers") {
        teachers.assign(tok.begin() + 1, tok.end());
      }
      continue;
    }
    if (!t) {
      if (!seen_magic) fail("missing #flexinet-teacher-logits header");
      if (k == 0 || teachers.size() != k) fail("#K and #teachers disagree or are missing");
      try {
        t = std::make_unique<TeacherLogits>(teachers, classes);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    }
    if (tok.size() != 1 + k * kNumClasses) {
      fail("expected clip id and " + std::to_string(k * kNumClasses) + " values, got " +
           std::to_string(tok.size() - 1));
    }
    std::vector<double> v(k * kNumClasses);
    for (std::size_t i = 0; i < v.size(); ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(tok[i + 1], &used);
        if (used != tok[i + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail("bad number '" + tok[i + 1] + "'");
      }
    }
    try {
      t->add(tok[0], std::move(v));
    } catch (const FormatError& e) {
      fail(e.what());
    }
  }
  if (!t) {
    if (!seen_magic) throw FormatError(path.string() + ": missing #flexinet-teacher-logits header");
    return TeacherLogits(teachers, classes);
  }
  return std::move(*t);
}

void write_teacher_logits(const std::filesystem::path& path, const TeacherLogits& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("teacher logits: cannot write " + path.string());
  out << "#flexinet-teacher-logits 1\n#K " << t.num_teachers() << "\n#classes";
  for (const auto& c : t.class_names()) out << ' ' << c;
  out << "\n#teachers";
  for (const auto& id : t.teacher_ids()) out << ' ' << id;
  out << '\n' << std::setprecision(17);
  for (const auto& id : t.clip_ids()) {
    out << id;
    const double* r = t.row(id);
    for (std::size_t i = 0; i < t.num_teachers() * kNumClasses; ++i) out << ' ' << r[i];
    out << '\n';
  }
}

void write_teacher_logits_json(const std::filesystem::path& path, const TeacherLogits& t) {
  json j;
  j["format"] = "flexinet-teacher-logits";
  j["K"] = t.num_teachers();
  j["classes"] = t.class_names();
  j["teachers"] = t.teacher_ids();
  j["records"] = json::array();
  for (const auto& id : t.clip_ids()) {
    const double* r = t.row(id);
    json rows = json::array();
    for (std::size_t k = 0; k < t.num_teachers(); ++k) {
      rows.push_back(std::vector<double>(r + k * kNumClasses, r + (k + 1) * kNumClasses));
    }
    j["records"].push_back({{"clip_id", id}, {"logits", rows}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("teacher logits: cannot write " + path.string());
  out << j.dump(1) << '\n';
}

FusionParams FusionParams::uniform(std::size_t k) {
  if (k == 0) throw ConfigError("fusion: K must be positive");
  FusionParams p;
  p.alpha.assign(k, 1.0 / static_cast<double>(k));
  return p;
}

void FusionParams::validate(std::size_t k) const {
  if (alpha.size() != k) {
    throw ConfigError("fusion: alpha has " + std::to_string(alpha.size()) + " entries but K = " +
                      std::to_string(k));
  }
  for (double a : alpha)
    if (!std::isfinite(a)) throw ConfigError("fusion: non-finite alpha");
  for (double b : beta)
    if (!std::isfinite(b)) throw ConfigError("fusion: non-finite beta");
}

void save_fusion(const std::filesystem::path& path, const FusionParams& p) {
  json j;
  j["format"] = "flexinet-fusion";
  j["K"] = p.alpha.size();
  j["alpha"] = p.alpha;
  j["beta"] = std::vector<double>(p.beta.begin(), p.beta.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("fusion: cannot write " + path.string());
  out << j.dump(2) << '\n';
}

FusionParams load_fusion(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("fusion: cannot open " + path.string());
  try {
    const json j = json::parse(in);
    FusionParams p;
    p.alpha = j.at("alpha").get<std::vector<double>>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    if (beta.size() != kNumClasses) throw FormatError("fusion: beta must have 10 entries");
    std::copy(beta.begin(), beta.end(), p.beta.begin());
    if (j.at("K").get<std::size_t>() != p.alpha.size()) throw FormatError("fusion: K does not match alpha");
    p.validate(p.alpha.size());
    return p;
  } catch (const json::exception& e) {
    throw FormatError("fusion: " + path.string() + ": " + e.what());
  }
}

Logits10 fuse(const double* logits, std::size_t k, const FusionParams& p) {
  p.validate(k);
  Logits10 h = p.beta;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < k; ++t) acc += p.alpha[t] * logits[t * kNumClasses + i];
    h[i] = acc + p.beta[i];
  }
  return h;
}

Logits10 fuse(const std::vector<double>& logits, const FusionParams& p) {
  if (logits.size() != p.alpha.size() * kNumClasses) {
    throw ConfigError("fusion: got " + std::to_string(logits.size()) + " logits for K = " +
                      std::to_string(p.alpha.size()));
  }
  return fuse(logits.data(), p.alpha.size(), p);
}

namespace {

void check_fit_inputs(const std::vector<double>& logits, const std::vector<int>& labels, std::size_t k) {
  if (k == 0) throw ConfigError("fusion: K must be positive");
  if (labels.empty()) throw ConfigError("fusion: no clips to fit on");
  if (logits.size() != labels.size() * k * kNumClasses) {
    throw ConfigError("fusion: logits size does not match " + std::to_string(labels.size()) +
                      " clips x K = " + std::to_string(k));
  }
  for (int y : labels) {
    if (y < 0 || y >= static_cast<int>(kNumClasses)) throw ConfigError("fusion: label outside [0, 9]");
  }
}

// Softmax of h into p, returns log-sum-exp.
double softmax10(const Logits10& h, Logits10& p) {
  const double mx = *std::max_element(h.begin(), h.end());
  double s = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) s += std::exp(h[i] - mx);
  const double lse = mx + std::log(s);
  for (std::size_t i = 0; i < kNumClasses; ++i) p[i] = std::exp(h[i] - lse);
  return lse;
}

FusionParams unpack(const Eigen::VectorXd& theta, std::size_t k, bool fit_bias) {
  FusionParams p;
  p.alpha.assign(theta.data(), theta.data() + k);
  if (fit_bias)
    for (std::size_t i = 0; i < kNumClasses; ++i) p.beta[i] = theta[static_cast<Eigen::Index>(k + i)];
  return p;
}

}  // namespace

double fusion_cross_entropy(const std::vector<double>& logits, const std::vector<int>& labels,
                            std::size_t k, const FusionParams& p) {
  check_fit_inputs(logits, labels, k);
  double ce = 0.0;
  Logits10 prob;
  for (std::size_t m = 0; m < labels.size(); ++m) {
    const Logits10 h = fuse(logits.data() + m * k * kNumClasses, k, p);
    ce += softmax10(h, prob) - h[static_cast<std::size_t>(labels[m])];
  }
  return ce / static_cast<double>(labels.size());
}

FusionFit fit_fusion(const std::vector<double>& logits, const std::vector<int>& labels, std::size_t k,
                     const FusionFitOptions& opt) {
  check_fit_inputs(logits, labels, k);
  if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
    throw ConfigError("fusion: labels contain a single class; the fit is degenerate");
  }
  const std::size_t m = labels.size();
  const auto np = static_cast<Eigen::Index>(k + (opt.fit_bias ? kNumClasses : 0));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(np);
  for (std::size_t t = 0; t < k; ++t) theta[static_cast<Eigen::Index>(t)] = 1.0 / static_cast<double>(k);

  FusionFit fit;
  fit.uniform_cross_entropy = fusion_cross_entropy(logits, labels, k, unpack(theta, k, opt.fit_bias));
  double ce = fit.uniform_cross_entropy;
  double mu = 1e-3;

  Eigen::MatrixXd jac(static_cast<Eigen::Index>(kNumClasses), np);
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    // Gradient and Gauss-Newton-exact Hessian of the mean cross-entropy.
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(np);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(np, np);
    const FusionParams p = unpack(theta, k, opt.fit_bias);
    Logits10 prob;
    for (std::size_t s = 0; s < m; ++s) {
      const double* l = logits.data() + s * k * kNumClasses;
      softmax10(fuse(l, k, p), prob);
      jac.setZero();
      for (std::size_t i = 0; i < kNumClasses; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
          jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = l[t * kNumClasses + i];
        }
        if (opt.fit_bias) jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + i)) = 1.0;
      }
      Eigen::VectorXd pv(static_cast<Eigen::Index>(kNumClasses));
      for (std::size_t i = 0; i < kNumClasses; ++i) pv[static_cast<Eigen::Index>(i)] = prob[i];
      Eigen::VectorXd gh = pv;
      gh[labels[s]] -= 1.0;
      grad += jac.transpose() * gh;
      Eigen::MatrixXd hh = Eigen::MatrixXd(pv.asDiagonal()) - pv * pv.transpose();
      hess += jac.transpose() * hh * jac;
    }
    grad /= static_cast<double>(m);
    hess /= static_cast<double>(m);
    fit.iterations = it;
    if (grad.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) break;

    double gain = 0.0;
    for (int tries = 0; tries < 30; ++tries) {
      const Eigen::MatrixXd damped = hess + mu * Eigen::MatrixXd::Identity(np, np);
      const Eigen::VectorXd cand = theta + damped.ldlt().solve(-grad);
      const double c = fusion_cross_entropy(logits, labels, k, unpack(cand, k, opt.fit_bias));
      if (std::isfinite(c) && c < ce) {
        theta = cand;
        gain = ce - c;
        ce = c;
        mu = std::max(mu / 3.0, 1e-12);
        break;
      }
      mu *= 4.0;
    }
    if (gain <= 1e-15 * std::max(1.0, ce)) break;
  }
  fit.params = unpack(theta, k, opt.fit_bias);
  fit.cross_entropy = ce;
  return fit;
}

std::vector<double> gather_logits(const TeacherLogits& t, const std::vector<std::string>& clip_ids) {
  std::vector<double> out;
  out.reserve(clip_ids.size() * t.num_teachers() * kNumClasses);
  for (const auto& id : clip_ids) {
    const double* r = t.row(id);
    out.insert(out.end(), r, r + t.num_teachers() * kNumClasses);
  }
  return out;
}

void KdConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("distill: lambda must be in [0, 1]");
  if (!(temperature > 0.0)) throw ConfigError("distill: temperature must be positive");
  if (schedule) {
    const auto [a, b] = *schedule;
    if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) {
      throw ConfigError("distill: lambda schedule endpoints must be in [0, 1]");
    }
  }
}

double KdConfig::lambda_at(double progress) const {
  if (!schedule) return lambda;
  const double t = std::clamp(progress, 0.0, 1.0);
  return schedule->first + (schedule->second - schedule->first) * t;
}

namespace {

template <typename T>
void softmax_rows(const T* z, std::size_t n, std::size_t k, T inv_temp, T* out) {
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = z + r * k;
    T mx = row[0] * inv_temp;
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j] * inv_temp);
    T s = 0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(row[j] * inv_temp - mx);
    const T lse = mx + std::log(s);
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = std::exp(row[j] * inv_temp - lse);
  }
}

}  // namespace

template <typename T>
Var<T> soft_cross_entropy(Tape<T>& tape, const Var<T>& student, const Tensor<T>& teacher, T temperature) {
  const auto& s = student.value();
  if (s.rank() != 2 || !s.same_shape(teacher)) {
    throw DimensionError("soft_cross_entropy: student " + shape_str(s.shape()) + " vs teacher " +
                         shape_str(teacher.shape()));
  }
  const std::size_t n = s.dim(0), k = s.dim(1);
  const T inv = T(1) / temperature;
  auto p = std::make_shared<Tensor<T>>(s.shape());
  auto q = std::make_shared<Tensor<T>>(s.shape());
  softmax_rows(s.ptr(), n, k, inv, p->ptr());
  softmax_rows(teacher.ptr(), n, k, inv, q->ptr());
  T loss = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = s.ptr() + r * k;
    T mx = row[0] * inv;
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j] * inv);
    T z = 0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] * inv - mx);
    const T lse = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) loss -= (*q)[r * k + j] * (row[j] * inv - lse);
  }
  loss *= temperature * temperature / static_cast<T>(n);
  auto sn = student.node();
  return tape.record("soft_cross_entropy", {student}, Tensor<T>({1}, std::vector<T>{loss}),
                     [sn, p, q, n, temperature](const Tensor<T>& g) {
                       Tensor<T> gs(p->shape());
                       const T c = g[0] * temperature / static_cast<T>(n);
                       for (std::size_t i = 0; i < gs.size(); ++i) gs[i] = c * ((*p)[i] - (*q)[i]);
                       accumulate_grad(sn, gs);
                     });
}

template <typename T>
Var<T> kd_loss(Tape<T>& tape, const Var<T>& student, const std::vector<int>& labels,
               const Tensor<T>& teacher, T lambda, T temperature) {
  Var<T> label = ops::softmax_cross_entropy(tape, student, labels);
  Var<T> kd = soft_cross_entropy(tape, student, teacher, temperature);
  return ops::add(tape, ops::scale(tape, label, lambda), ops::scale(tape, kd, T(1) - lambda));
}

template Var<float> soft_cross_entropy(Tape<float>&, const Var<float>&, const Tensor<float>&, float);
template Var<double> soft_cross_entropy(Tape<double>&, const Var<double>&, const Tensor<double>&, double);
template Var<float> kd_loss(Tape<float>&, const Var<float>&, const std::vector<int>&,
                            const Tensor<float>&, float, float);
template Var<double> kd_loss(Tape<double>&, const Var<double>&, const std::vector<int>&,
                             const Tensor<double>&, double, double);

KdLossValue kd_loss_value(const std::vector<double>& student, const std::vector<int>& labels,
                          const std::vector<double>& teacher, double lambda, double temperature) {
  const std::size_t n = labels.size();
  if (n == 0 || student.size() % n != 0 || student.size() != teacher.size()) {
    throw DimensionError("kd_loss: inconsistent student/teacher/label sizes");
  }
  const std::size_t k = student.size() / n;
  KdLossValue v;
  v.grad.assign(student.size(), 0.0);
  std::vector<double> p1(k), pt(k), qt(k);
  for (std::size_t r = 0; r < n; ++r) {
    const double* s = student.data() + r * k;
    const double* t = teacher.data() + r * k;
    softmax_rows(s, 1, k, 1.0, p1.data());
    softmax_rows(s, 1, k, 1.0 / temperature, pt.data());
    softmax_rows(t, 1, k, 1.0 / temperature, qt.data());
    v.label -= std::log(p1[static_cast<std::size_t>(labels[r])]);
    for (std::size_t j = 0; j < k; ++j) {
      v.kd -= qt[j] * std::log(pt[j]);
      const double onehot = static_cast<int>(j) == labels[r] ? 1.0 : 0.0;
      v.grad[r * k + j] = (lambda * (p1[j] - onehot) + (1.0 - lambda) * temperature * (pt[j] - qt[j])) /
                          static_cast<double>(n);
    }
  }
  v.label /= static_cast<double>(n);
  v.kd *= temperature * temperature / static_cast<double>(n);
  v.total = lambda * v.label + (1.0 - lambda) * v.kd;
  return v;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<SyntheticTeacher> default_synthetic_teachers() {
  SyntheticTeacher good{"good", 5.0, 1.0, 0.08, {}, -1, 0.0};
  SyntheticTeacher medium{"medium", 3.5, 1.5, 0.22, {}, -1, 0.0};
  SyntheticTeacher biased{"biased", 3.0, 1.8, 0.30, {}, 3, 0.25};
  biased.bias = {0.0, 0.0, 0.0, 2.5, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0};
  return {good, medium, biased};
}

TeacherLogits make_synthetic_teacher_logits(const std::vector<std::string>& clip_ids,
                                            const std::vector<int>& labels,
                                            const std::vector<SyntheticTeacher>& teachers,
                                            std::uint64_t seed) {
  if (clip_ids.size() != labels.size()) throw ConfigError("synthetic teachers: ids and labels differ in length");
  std::vector<std::string> ids, classes;
  for (const auto& t : teachers) ids.push_back(t.id);
  for (std::size_t i = 0; i < kNumClasses; ++i) classes.push_back("class" + std::to_string(i));
  TeacherLogits out(ids, classes);
  for (std::size_t c = 0; c < clip_ids.size(); ++c) {
    std::vector<double> v;
    for (std::size_t k = 0; k < teachers.size(); ++k) {
      const auto& t = teachers[k];
      std::mt19937_64 rng(seed ^ fnv1a(clip_ids[c]) ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> noise(0.0, t.noise);
      std::uniform_int_distribution<int> other(1, static_cast<int>(kNumClasses) - 1);
      int pred = labels[c];
      const double r = u(rng);
      if (r < t.flip_prob) {
        pred = (pred + other(rng)) % static_cast<int>(kNumClasses);
      } else if (t.favored_class >= 0 && r < t.flip_prob + t.favor_prob) {
        pred = t.favored_class;
      }
      for (std::size_t i = 0; i < kNumClasses; ++i) {
        v.push_back((static_cast<int>(i) == pred ? t.margin : 0.0) + noise(rng) + t.bias[i]);
      }
    }
    out.add(clip_ids[c], std::move(v));
  }
  return out;
}

}  // namespace flexinet
