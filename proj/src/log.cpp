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

#include "flexinet/log.hpp"

#include <atomic>
#include <iostream>

namespace flexinet {

namespace {
std::atomic<std::size_t> g_warnings{0};
std::atomic<bool> g_quiet{false};
}  // namespace

void warn(const std::string& message) {
  ++g_warnings;
  if (!g_quiet) std::cerr << "[flexinet] warning: " << message << "\n";
}

std::size_t warning_count() { return g_warnings.load(); }

void set_warnings_quiet(bool quiet) { g_quiet = quiet; }

}  // namespace flexinet
