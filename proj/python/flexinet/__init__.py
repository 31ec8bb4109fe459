# Copyright 2026 The FlexiNet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the FlexiNet C++ core."""

from ._flexinet import (
    ConfigError,
    FormatError,
    Model,
    clip_energy,
    count_params_macs,
    fit_fusion,
    fuse,
    log_mel,
    quantize_roundtrip,
    reference_configs,
    synthesize_clip,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "Model",
    "clip_energy",
    "count_params_macs",
    "fit_fusion",
    "fuse",
    "log_mel",
    "quantize_roundtrip",
    "reference_configs",
    "synthesize_clip",
]
