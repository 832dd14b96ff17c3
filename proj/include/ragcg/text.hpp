/*
 * Copyright 2026 The ragcodegen Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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
#include <string_view>
#include <vector>

// UTF-8 helpers. Every character count in the project is a count of Unicode
// scalar values, never bytes.
namespace ragcg::text {

/// Number of Unicode scalar values in a UTF-8 string (counts lead bytes;
/// input is assumed to be well-formed UTF-8).
std::size_t count_chars(std::string_view utf8) noexcept;

/// Byte offsets of every scalar boundary, including the final end offset.
std::vector<std::size_t> char_boundaries(std::string_view utf8);

/// Substring by scalar positions [begin, end).
std::string slice_chars(std::string_view utf8, std::size_t begin, std::size_t end);

/// First `n` scalars of the string (whole string when shorter).
std::string take_chars(std::string_view utf8, std::size_t n);

/// Collapse every run of whitespace to a single space and trim both ends.
std::string normalize_ws(std::string_view s);

std::string trim(std::string_view s);

/// Split on '\n'; a trailing '\r' is removed from each line.
std::vector<std::string> lines(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix) noexcept;

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Whitespace-delimited words.
std::vector<std::string> words(std::string_view s);

/// Splits on every `delim`; empty fields are kept.
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace ragcg::text
