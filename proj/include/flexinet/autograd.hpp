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

#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexinet/tensor.hpp"

namespace flexinet {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;

  Tensor<T>& grad_buffer() {
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Shared handle to a value in the autodiff graph. Copies alias the same node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Var parameter(Tensor<T> value) { return Var(std::move(value), true); }

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& value_mut() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  bool has_grad() const { return node_->grad.shape() == node_->value.shape() && !node_->value.empty(); }
  /// Gradient buffer; zeros if nothing has flowed into this node yet.
  const Tensor<T>& grad() const { return node_->grad_buffer(); }
  void zero_grad() {
    if (has_grad()) node_->grad.fill(T(0));
  }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Records differentiable operations in execution order; backward replays them in
/// exact reverse. A tape is single-owner and must be re-recorded after each backward.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor<T>& grad_out)>;

  /// Wraps `output` in a Var. The op is recorded only when some input needs a gradient.
  Var<T> record(const char* op, std::initializer_list<Var<T>> inputs, Tensor<T> output,
                BackwardFn backward_fn) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in.requires_grad();
    Var<T> out(std::move(output), needs);
    if (needs) {
      consumed_ = false;
      entries_.push_back({op, out.node(), std::move(backward_fn)});
    }
    return out;
  }

  /// Propagates d(loss)/d(.) into every reachable requires_grad node.
  void backward(const Var<T>& loss);

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }
  void clear() {
    entries_.clear();
    consumed_ = false;
  }
  std::vector<std::string> op_names() const {
    std::vector<std::string> names;
    for (const auto& e : entries_) names.emplace_back(e.op);
    return names;
  }

 private:
  struct Entry {
    const char* op;
    std::shared_ptr<Node<T>> output;
    BackwardFn backward_fn;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
};

/// Adds `g` into the node's gradient when it participates in differentiation.
template <typename T>
void accumulate_grad(const std::shared_ptr<Node<T>>& node, const Tensor<T>& g) {
  if (!node || !node->requires_grad) return;
  auto& buf = node->grad_buffer();
  if (buf.shape() != g.shape()) {
    throw DimensionError("backward: gradient shape " + shape_str(g.shape()) +
                         " does not match value shape " + shape_str(buf.shape()));
  }
  T* dst = buf.ptr();
  const T* src = g.ptr();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace flexinet
