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

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexinet/int8_model.hpp"
#include "flexinet/model.hpp"
#include "flexinet/quant.hpp"
#include "json.hpp"

// Binary container, all integers little-endian:
//   "FLXN" | u32 version | u32 len, kind | u32 len, metadata JSON (sorted keys)
//   | u32 tensor count | per tensor:
//       u16 len, name | u8 dtype (0 f32, 1 i8, 2 i32) | u8 rank | u64 dims[rank]
//       | u8 has_quant [f32 scale, i32 zero_point, f32 min, f32 max]
//       | u64 byte length | raw little-endian data
namespace flexinet {

constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { f32 = 0, i8 = 1, i32 = 2 };
std::size_t dtype_size(DType d);

struct ContainerTensor {
  std::string name;
  DType dtype = DType::f32;
  Shape shape;
  std::optional<QuantSpec> quant;
  std::vector<std::uint8_t> raw;

  static ContainerTensor from_f32(std::string name, const TensorF& t);
  static ContainerTensor from_i8(std::string name, const QTensor& q);
  static ContainerTensor from_i32(std::string name, const std::vector<std::int32_t>& v);
  TensorF to_f32() const;
  QTensor to_i8() const;
  std::vector<std::int32_t> to_i32() const;
};

struct Container {
  std::string kind;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ContainerTensor> tensors;

  const ContainerTensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

std::vector<std::uint8_t> encode_container(const Container& c);
/// Throws FormatError on bad magic, unsupported version or truncation.
Container decode_container(std::span<const std::uint8_t> bytes);
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);
/// Peeks at the kind string without decoding tensors.
std::string container_kind(const std::filesystem::path& path);

struct ContainerSize {
  std::size_t total = 0;    // file bytes
  std::size_t payload = 0;  // raw tensor data
  std::size_t header() const { return total - payload; }
};
ContainerSize container_size(const Container& c);

inline constexpr const char* kFloatModelKind = "flexinet-float";
inline constexpr const char* kInt8ModelKind = "flexinet-int8";
inline constexpr const char* kFeaturesKind = "flexinet-features";

/// Weights, BatchNorm statistics, arch and observer ranges. `extra` lands in the
/// metadata under "extra".
Container float_model_container(FlexiNet<float>& model, const nlohmann::json& extra = nlohmann::json::object());
std::unique_ptr<FlexiNet<float>> float_model_from_container(const Container& c);
void save_float_model(FlexiNet<float>& model, const std::filesystem::path& path,
                      const nlohmann::json& extra = nlohmann::json::object());
std::unique_ptr<FlexiNet<float>> load_float_model(const std::filesystem::path& path);

Container int8_model_container(const QuantizedModel& q);
QuantizedModel int8_model_from_container(const Container& c);
void save_int8_model(const QuantizedModel& q, const std::filesystem::path& path);
QuantizedModel load_int8_model(const std::filesystem::path& path);

/// Single-tensor feature file.
void save_features(const std::filesystem::path& path, const TensorF& features,
                   const nlohmann::json& metadata = nlohmann::json::object());
TensorF load_features(const std::filesystem::path& path);

}  // namespace flexinet
