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

#include <cstddef>
#include <string>

namespace flexinet {

/// Emits a warning on stderr (unless silenced) and bumps a process-wide counter.
void warn(const std::string& message);

/// Number of warnings emitted since process start; tests diff this around a call.
std::size_t warning_count();

/// Silences stderr output of warnings (they are still counted).
void set_warnings_quiet(bool quiet);

}  // namespace flexinet
