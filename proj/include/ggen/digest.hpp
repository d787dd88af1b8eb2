// Copyright 2026 The gesturegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ggen {

// FNV-1a over bytes. Used to stamp artifacts with the configuration that
// produced them and to refuse cross-run mixing; not a cryptographic hash.
uint64_t fnv1a64(std::string_view bytes);
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 14695981039346656037ull);

// 16 lowercase hex chars.
std::string digest_hex(std::string_view bytes);
std::string hex64(uint64_t value);

}  // namespace ggen
