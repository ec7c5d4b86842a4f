/* Copyright 2026 The Driftline Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DRIFTLINE_UTIL_H_
#define DRIFTLINE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace driftline {

using Json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "driftline 0.1.0";

// Canonical JSON: sorted keys, two-space indentation, LF line endings, a
// trailing newline, and every floating-point number printed with 17
// significant digits. Integers print as integers. Non-finite numbers throw.
std::string canonical_json(const Json& value);

// Single-line canonical form (no whitespace) used for JSONL records.
std::string canonical_json_line(const Json& value);

// printf("%.17g") with a guard against non-finite values.
std::string format_double(double value);

// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);
// Throws kProtocolError on malformed input.
std::string base64_decode(std::string_view text);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames into place, so readers
// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
// First eight bytes of a hex digest interpreted big-endian.
std::uint64_t seed_from_hex(std::string_view hex_digest);

std::string zero_padded(int value, int width);

// Strips trailing ASCII whitespace.
std::string rstrip(std::string_view text);

// UTC wall clock in ISO-8601 form, e.g. 2026-10-16T12:00:00Z.
std::string utc_timestamp();

}  // namespace driftline

#endif  // DRIFTLINE_UTIL_H_
