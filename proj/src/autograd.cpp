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

#include "flexinet/autograd.hpp"

#include "flexinet/log.hpp"

namespace flexinet {

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined loss");
  if (loss.value().size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  }
  if (consumed_) {
    throw std::logic_error("backward: tape already consumed; re-record the forward pass first");
  }
  if (!loss.requires_grad()) {
    warn("backward: loss is detached from every parameter; gradients stay zero");
    consumed_ = true;
    return;
  }
  if (entries_.empty()) throw std::logic_error("backward: tape is empty");

  auto& seed = loss.node()->grad_buffer();
  seed[0] += T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    auto& out = it->output;
    if (out->grad.shape() != out->value.shape()) continue;  // nothing flowed here
    it->backward_fn(out->grad);
  }
  entries_.clear();
  consumed_ = true;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace flexinet
