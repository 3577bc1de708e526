/*
 * Copyright 2026 The InCTRL-cpp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef INCTRL_DIGEST_HPP_
#define INCTRL_DIGEST_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace inctrl {

using Digest = std::array<std::uint8_t, 32>;

Digest Sha256(std::span<const std::byte> bytes);
Digest Sha256(std::string_view text);

std::string ToHex(const Digest& digest);

// First eight bytes as a little-endian integer, used to seed generators.
std::uint64_t DigestSeed(const Digest& digest);

}  // namespace inctrl

#endif  // INCTRL_DIGEST_HPP_
