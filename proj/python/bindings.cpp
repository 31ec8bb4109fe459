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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flexinet/augment.hpp"
#include "flexinet/container.hpp"
#include "flexinet/dataset.hpp"
#include "flexinet/distill.hpp"
#include "flexinet/dsp.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/int8_model.hpp"
#include "flexinet/model.hpp"
#include "flexinet/quant.hpp"
#include "flexinet/train.hpp"

namespace py = pybind11;
using namespace flexinet;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

TensorF to_tensor(const FloatArray& a) {
  Shape s(a.shape(), a.shape() + a.ndim());
  TensorF t(s);
  std::copy(a.data(), a.data() + a.size(), t.ptr());
  return t;
}

FloatArray to_array(const TensorF& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  FloatArray a(shape);
  std::copy(t.ptr(), t.ptr() + t.size(), a.mutable_data());
  return a;
}

Waveform to_waveform(const FloatArray& samples, int sample_rate) {
  if (samples.ndim() != 1) throw py::value_error("expected a 1-D sample array");
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(samples.data(), samples.data() + samples.size());
  return w;
}

// Float or int8 model loaded from a container; predict() takes [N, 1, F, T] features.
class Model {
 public:
  explicit Model(const std::string& path) {
    const Container c = read_container(path);
    if (c.kind == kInt8ModelKind) {
      int8_ = std::make_unique<QuantizedModel>(int8_model_from_container(c));
    } else {
      float_ = float_model_from_container(c);
    }
  }
  std::string kind() const { return int8_ ? "int8" : "float"; }
  FloatArray logits(const FloatArray& x) {
    const TensorF t = to_tensor(x);
    return to_array(int8_ ? int8_->predict_logits(t) : float_->predict_logits(t));
  }
  std::vector<int> predict(const FloatArray& x) {
    const TensorF t = to_tensor(x);
    return argmax_rows(int8_ ? int8_->predict_logits(t) : float_->predict_logits(t));
  }

 private:
  std::unique_ptr<FlexiNet<float>> float_;
  std::unique_ptr<QuantizedModel> int8_;
};

}  // namespace

PYBIND11_MODULE(_flexinet, m) {
  m.doc() = "FlexiNet acoustic scene classification core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);

  m.def("reference_configs", &reference_config_names);
  m.def(
      "count_params_macs",
      [](const std::string& name, std::size_t n_mels, std::size_t frames) {
        const Complexity c = count_params_macs(reference_config(name), n_mels, frames);
        return py::make_tuple(c.params, c.macs);
      },
      py::arg("name"), py::arg("n_mels") = 256, py::arg("frames") = 64);

  m.def(
      "log_mel",
      [](const FloatArray& samples, int sample_rate) {
        MelConfig cfg;
        return to_array(log_mel(to_waveform(samples, sample_rate), cfg));
      },
      py::arg("samples"), py::arg("sample_rate") = 32000);

  m.def("clip_energy", [](const FloatArray& samples) {
    return clip_energy(std::span<const float>(samples.data(), static_cast<std::size_t>(samples.size())));
  });

  m.def(
      "synthesize_clip",
      [](int scene, const std::string& device, std::uint64_t seed) {
        Waveform w = synthesize_scene(scene, seed, 32000, 32000);
        apply_device(w, parse_device(device), seed);
        return FloatArray(static_cast<py::ssize_t>(w.samples.size()), w.samples.data());
      },
      py::arg("scene"), py::arg("device") = "a", py::arg("seed") = 0);

  m.def(
      "fuse",
      [](const DoubleArray& logits, const std::vector<double>& alpha, const std::vector<double>& beta) {
        if (logits.ndim() != 2 || logits.shape(1) != static_cast<py::ssize_t>(kNumClasses)) {
          throw py::value_error("logits must have shape [K, 10]");
        }
        FusionParams p;
        p.alpha = alpha;
        if (beta.size() != kNumClasses) throw py::value_error("beta must have 10 entries");
        std::copy(beta.begin(), beta.end(), p.beta.begin());
        p.validate(static_cast<std::size_t>(logits.shape(0)));
        const Logits10 h = fuse(logits.data(), static_cast<std::size_t>(logits.shape(0)), p);
        return std::vector<double>(h.begin(), h.end());
      },
      py::arg("logits"), py::arg("alpha"), py::arg("beta"));

  m.def(
      "fit_fusion",
      [](const DoubleArray& logits, const std::vector<int>& labels, bool fit_bias) {
        if (logits.ndim() != 3 || logits.shape(2) != static_cast<py::ssize_t>(kNumClasses)) {
          throw py::value_error("logits must have shape [M, K, 10]");
        }
        std::vector<double> flat(logits.data(), logits.data() + logits.size());
        FusionFitOptions opt;
        opt.fit_bias = fit_bias;
        const FusionFit f = fit_fusion(flat, labels, static_cast<std::size_t>(logits.shape(1)), opt);
        py::dict d;
        d["alpha"] = f.params.alpha;
        d["beta"] = std::vector<double>(f.params.beta.begin(), f.params.beta.end());
        d["cross_entropy"] = f.cross_entropy;
        d["uniform_cross_entropy"] = f.uniform_cross_entropy;
        d["iterations"] = f.iterations;
        return d;
      },
      py::arg("logits"), py::arg("labels"), py::arg("fit_bias") = true);

  m.def(
      "quantize_roundtrip",
      [](const FloatArray& x, double min, double max) {
        const QuantSpec q = affine_spec(min, max);
        return py::make_tuple(to_array(dequantize(quantize(to_tensor(x), q))), q.scale, q.zero_point);
      },
      py::arg("x"), py::arg("min"), py::arg("max"));

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def_property_readonly("kind", &Model::kind)
      .def("logits", &Model::logits)
      .def("predict", &Model::predict);
}
