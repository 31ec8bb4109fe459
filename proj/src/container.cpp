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

#include "flexinet/container.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "flexinet/config.hpp"
#include "flexinet/errors.hpp"

namespace flexinet {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'F', 'L', 'X', 'N'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void bytes(const std::vector<std::uint8_t>& b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(le(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::int32_t i32(const char* what) { return static_cast<std::int32_t>(u32(what)); }
  std::span<const std::uint8_t> bytes(std::uint64_t n, const char* what) {
    need(n, what);
    auto s = b_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }
  std::string str(std::uint64_t n, const char* what) {
    auto s = bytes(n, what);
    return std::string(s.begin(), s.end());
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::uint64_t n, const char* what) const {
    if (n > b_.size() - pos_) {
      throw FormatError("container: truncated at byte " + std::to_string(pos_) + " while reading " + what +
                        " (need " + std::to_string(n) + ", have " + std::to_string(b_.size() - pos_) + ")");
    }
  }
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::uint64_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

json spec_to_json(const QuantSpec& q) {
  return {{"scale", q.scale}, {"zero_point", q.zero_point}, {"min", q.min}, {"max", q.max}};
}

QuantSpec spec_from_json(const json& j) {
  QuantSpec q;
  q.scale = j.at("scale").get<float>();
  q.zero_point = j.at("zero_point").get<std::int32_t>();
  q.min = j.at("min").get<float>();
  q.max = j.at("max").get<float>();
  q.validate();
  return q;
}

}  // namespace

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::f32: return 4;
    case DType::i8: return 1;
    case DType::i32: return 4;
  }
  return 0;
}

ContainerTensor ContainerTensor::from_f32(std::string name, const TensorF& t) {
  ContainerTensor c{std::move(name), DType::f32, t.shape(), std::nullopt, {}};
  c.raw.reserve(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto v = std::bit_cast<std::uint32_t>(t[i]);
    for (int b = 0; b < 4; ++b) c.raw.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  return c;
}

ContainerTensor ContainerTensor::from_i8(std::string name, const QTensor& q) {
  ContainerTensor c{std::move(name), DType::i8, q.shape, q.spec, {}};
  c.raw.resize(q.data.size());
  for (std::size_t i = 0; i < q.data.size(); ++i) c.raw[i] = static_cast<std::uint8_t>(q.data[i]);
  return c;
}

ContainerTensor ContainerTensor::from_i32(std::string name, const std::vector<std::int32_t>& v) {
  ContainerTensor c{std::move(name), DType::i32, {v.size()}, std::nullopt, {}};
  c.raw.reserve(v.size() * 4);
  for (auto x : v) {
    const auto u = static_cast<std::uint32_t>(x);
    for (int b = 0; b < 4; ++b) c.raw.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  return c;
}

namespace {

std::uint32_t word(const std::vector<std::uint8_t>& raw, std::size_t i) {
  return static_cast<std::uint32_t>(raw[4 * i]) | static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
         static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 | static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
}

void expect_dtype(const ContainerTensor& t, DType d) {
  if (t.dtype != d) throw FormatError("container: tensor '" + t.name + "' has an unexpected dtype");
}

}  // namespace

TensorF ContainerTensor::to_f32() const {
  expect_dtype(*this, DType::f32);
  TensorF t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::bit_cast<float>(word(raw, i));
  return t;
}

QTensor ContainerTensor::to_i8() const {
  expect_dtype(*this, DType::i8);
  if (!quant) throw FormatError("container: int8 tensor '" + name + "' lacks a quantization block");
  QTensor q{shape, std::vector<std::int8_t>(raw.size()), *quant};
  for (std::size_t i = 0; i < raw.size(); ++i) q.data[i] = static_cast<std::int8_t>(raw[i]);
  return q;
}

std::vector<std::int32_t> ContainerTensor::to_i32() const {
  expect_dtype(*this, DType::i32);
  std::vector<std::int32_t> v(raw.size() / 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::int32_t>(word(raw, i));
  return v;
}

const ContainerTensor& Container::get(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw FormatError("container (" + kind + "): missing tensor '" + name + "'");
}

bool Container::has(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

std::vector<std::uint8_t> encode_container(const Container& c) {
  Writer w;
  for (char m : kMagic) w.u8(static_cast<std::uint8_t>(m));
  w.u32(kContainerVersion);
  w.str32(c.kind);
  w.str32(c.metadata.dump());
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    if (t.name.size() > 0xffff) throw FormatError("container: tensor name too long");
    if (t.raw.size() != numel(t.shape) * dtype_size(t.dtype)) {
      throw FormatError("container: tensor '" + t.name + "' has " + std::to_string(t.raw.size()) +
                        " bytes for shape " + shape_str(t.shape));
    }
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    for (char ch : t.name) w.u8(static_cast<std::uint8_t>(ch));
    w.u8(static_cast<std::uint8_t>(t.dtype));
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    w.u8(t.quant ? 1 : 0);
    if (t.quant) {
      w.f32(t.quant->scale);
      w.i32(t.quant->zero_point);
      w.f32(t.quant->min);
      w.f32(t.quant->max);
    }
    w.u64(t.raw.size());
    w.bytes(t.raw);
  }
  return w.take();
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("container: bad magic (not a FLXN file)");
  const std::uint32_t version = r.u32("version");
  if (version != kContainerVersion) {
    throw FormatError("container: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kContainerVersion) + ")");
  }
  Container c;
  c.kind = r.str(r.u32("kind length"), "kind");
  const std::string meta = r.str(r.u32("metadata length"), "metadata");
  try {
    c.metadata = json::parse(meta);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("container: corrupt metadata: ") + e.what());
  }
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    ContainerTensor t;
    t.name = r.str(r.u16("tensor name length"), "tensor name");
    const std::uint8_t dt = r.u8("dtype");
    if (dt > 2) throw FormatError("container: tensor '" + t.name + "' has unknown dtype " + std::to_string(dt));
    t.dtype = static_cast<DType>(dt);
    const std::uint8_t rank = r.u8("rank");
    for (std::uint8_t k = 0; k < rank; ++k) t.shape.push_back(static_cast<std::size_t>(r.u64("dimension")));
    if (r.u8("quant flag")) {
      QuantSpec q;
      q.scale = r.f32("scale");
      q.zero_point = r.i32("zero point");
      q.min = r.f32("min");
      q.max = r.f32("max");
      t.quant = q;
    }
    const std::uint64_t n = r.u64("data length");
    if (n != numel(t.shape) * dtype_size(t.dtype)) {
      throw FormatError("container: tensor '" + t.name + "' declares " + std::to_string(n) +
                        " bytes for shape " + shape_str(t.shape));
    }
    auto data = r.bytes(n, "tensor data");
    t.raw.assign(data.begin(), data.end());
    c.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) {
    throw FormatError("container: " + std::to_string(r.remaining()) + " trailing bytes after tensor table");
  }
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  const auto bytes = encode_container(c);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("cannot write " + path.string());
}

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

Container read_container(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return decode_container(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string container_kind(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> head(12);
  in.read(reinterpret_cast<char*>(head.data()), 12);
  if (in.gcount() != 12) throw FormatError(path.string() + ": container: truncated header");
  Reader r(head);
  auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError(path.string() + ": container: bad magic");
  r.u32("version");
  std::string kind(r.u32("kind length"), '\0');
  in.read(kind.data(), static_cast<std::streamsize>(kind.size()));
  if (static_cast<std::size_t>(in.gcount()) != kind.size()) throw FormatError(path.string() + ": truncated kind");
  return kind;
}

ContainerSize container_size(const Container& c) {
  ContainerSize s;
  s.total = encode_container(c).size();
  for (const auto& t : c.tensors) s.payload += t.raw.size();
  return s;
}

Container float_model_container(FlexiNet<float>& model, const json& extra) {
  Container c;
  c.kind = kFloatModelKind;
  c.metadata["arch"] = arch_to_json(model.config());
  json obs = json::object();
  for (const auto& [name, o] : model.observers()) {
    if (o.initialized()) obs[name] = {o.min(), o.max()};
  }
  c.metadata["observers"] = obs;
  c.metadata["extra"] = extra;
  for (const auto& [name, t] : model.state()) c.tensors.push_back(ContainerTensor::from_f32(name, *t));
  return c;
}

std::unique_ptr<FlexiNet<float>> float_model_from_container(const Container& c) {
  if (c.kind != kFloatModelKind) throw FormatError("container: expected a float model, found '" + c.kind + "'");
  ArchConfig arch;
  try {
    arch = arch_from_json(c.metadata.at("arch"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("container: bad arch metadata: ") + e.what());
  }
  auto model = std::make_unique<FlexiNet<float>>(arch, 0);
  const auto state = model->state();
  if (state.size() != c.tensors.size()) {
    throw FormatError("container: float model holds " + std::to_string(c.tensors.size()) + " tensors, arch needs " +
                      std::to_string(state.size()));
  }
  for (const auto& [name, t] : state) {
    TensorF v = c.get(name).to_f32();
    if (v.shape() != t->shape()) {
      throw FormatError("container: tensor '" + name + "' has shape " + shape_str(v.shape()) + ", expected " +
                        shape_str(t->shape()));
    }
    *t = std::move(v);
  }
  if (c.metadata.contains("observers")) {
    for (const auto& [name, range] : c.metadata["observers"].items()) {
      model->observers()[name].update_range(range.at(0).get<double>(), range.at(1).get<double>());
    }
  }
  return model;
}

void save_float_model(FlexiNet<float>& model, const std::filesystem::path& path, const json& extra) {
  write_container(path, float_model_container(model, extra));
}

std::unique_ptr<FlexiNet<float>> load_float_model(const std::filesystem::path& path) {
  try {
    return float_model_from_container(read_container(path));
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw FormatError(path.string() + ": " + msg);
  }
}

namespace {

json layer_meta(const QConvLayer& l) {
  return {{"name", l.name},
          {"kind", l.kind == ConvKind::depthwise ? "depthwise" : "standard"},
          {"stride", {l.params.stride_h, l.params.stride_w}},
          {"pad", {l.params.pad_h, l.params.pad_w}},
          {"relu", l.relu},
          {"in", spec_to_json(l.in)},
          {"out", spec_to_json(l.out)}};
}

void add_layer(Container& c, const QConvLayer& l) {
  c.tensors.push_back(ContainerTensor::from_i8(l.name + ".weight", l.weight));
  c.tensors.push_back(ContainerTensor::from_i32(l.name + ".bias", l.bias));
}

QConvLayer read_layer(const Container& c, const json& m) {
  QConvLayer l;
  l.name = m.at("name").get<std::string>();
  const std::string kind = m.at("kind").get<std::string>();
  if (kind != "standard" && kind != "depthwise") throw FormatError("container: unknown layer kind '" + kind + "'");
  l.kind = kind == "depthwise" ? ConvKind::depthwise : ConvKind::standard;
  l.params.stride_h = m.at("stride").at(0).get<std::size_t>();
  l.params.stride_w = m.at("stride").at(1).get<std::size_t>();
  l.params.pad_h = m.at("pad").at(0).get<std::size_t>();
  l.params.pad_w = m.at("pad").at(1).get<std::size_t>();
  l.relu = m.at("relu").get<bool>();
  l.in = spec_from_json(m.at("in"));
  l.out = spec_from_json(m.at("out"));
  l.weight = c.get(l.name + ".weight").to_i8();
  l.bias = c.get(l.name + ".bias").to_i32();
  if (l.weight.shape.size() != 4 || l.bias.size() != l.weight.shape[0]) {
    throw FormatError("container: layer '" + l.name + "' has inconsistent weight/bias shapes");
  }
  return l;
}

}  // namespace

Container int8_model_container(const QuantizedModel& q) {
  Container c;
  c.kind = kInt8ModelKind;
  json& m = c.metadata;
  m["arch"] = arch_to_json(q.arch);
  m["input"] = spec_to_json(q.input);
  m["post_stem"] = q.post_stem ? spec_to_json(*q.post_stem) : json(nullptr);
  m["pool"] = spec_to_json(q.pool);
  c.tensors.push_back(ContainerTensor::from_f32("resnorm.lambda", TensorF({1}, q.resnorm_lambda)));
  json stem = json::array();
  for (const auto& l : q.stem) {
    stem.push_back(layer_meta(l));
    add_layer(c, l);
  }
  m["stem"] = stem;
  json blocks = json::array();
  for (const auto& b : q.blocks) {
    json jb = {{"name", b.name}, {"dw", layer_meta(b.dw)}, {"pw", layer_meta(b.pw)}, {"out", spec_to_json(b.out)}};
    jb["proj"] = b.proj ? layer_meta(*b.proj) : json(nullptr);
    add_layer(c, b.dw);
    add_layer(c, b.pw);
    if (b.proj) add_layer(c, *b.proj);
    blocks.push_back(jb);
  }
  m["blocks"] = blocks;
  m["head"] = layer_meta(q.head);
  add_layer(c, q.head);
  return c;
}

QuantizedModel int8_model_from_container(const Container& c) {
  if (c.kind != kInt8ModelKind) throw FormatError("container: expected an int8 model, found '" + c.kind + "'");
  try {
    const json& m = c.metadata;
    QuantizedModel q;
    q.arch = arch_from_json(m.at("arch"));
    q.resnorm_lambda = c.get("resnorm.lambda").to_f32()[0];
    q.input = spec_from_json(m.at("input"));
    if (!m.at("post_stem").is_null()) q.post_stem = spec_from_json(m.at("post_stem"));
    q.pool = spec_from_json(m.at("pool"));
    for (const auto& l : m.at("stem")) q.stem.push_back(read_layer(c, l));
    for (const auto& jb : m.at("blocks")) {
      QBlock b;
      b.name = jb.at("name").get<std::string>();
      b.dw = read_layer(c, jb.at("dw"));
      b.pw = read_layer(c, jb.at("pw"));
      if (!jb.at("proj").is_null()) b.proj = read_layer(c, jb.at("proj"));
      b.out = spec_from_json(jb.at("out"));
      q.blocks.push_back(std::move(b));
    }
    q.head = read_layer(c, m.at("head"));
    return q;
  } catch (const json::exception& e) {
    throw FormatError(std::string("container: bad int8 model metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("container: bad int8 model metadata: ") + e.what());
  }
}

void save_int8_model(const QuantizedModel& q, const std::filesystem::path& path) {
  write_container(path, int8_model_container(q));
}

QuantizedModel load_int8_model(const std::filesystem::path& path) {
  return int8_model_from_container(read_container(path));
}

void save_features(const std::filesystem::path& path, const TensorF& features, const json& metadata) {
  Container c;
  c.kind = kFeaturesKind;
  c.metadata = metadata;
  c.tensors.push_back(ContainerTensor::from_f32("features", features));
  write_container(path, c);
}

TensorF load_features(const std::filesystem::path& path) {
  const Container c = read_container(path);
  if (c.kind != kFeaturesKind) throw FormatError(path.string() + ": not a feature file (kind '" + c.kind + "')");
  return c.get("features").to_f32();
}

}  // namespace flexinet
