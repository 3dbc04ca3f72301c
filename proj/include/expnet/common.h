/*
 * Copyright 2026 The ExpNet Kit Authors.
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

#ifndef EXPNET_COMMON_H_
#define EXPNET_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace expnet {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kToolkitVersion = "0.1.0";

// JSON document whose floating point numbers are IEEE float32. Serialization
// emits the shortest decimal that parses back to the same float, and parsing
// goes through strtof, so float payloads round-trip bit-exactly.
using FloatJson = nlohmann::basic_json<std::map, std::vector, std::string,
                                       bool, std::int64_t, std::uint64_t,
                                       float>;
// Double-precision JSON for reports and manifests.
using Json = nlohmann::json;

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record violates a named invariant. The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, std::string example_id,
                  const std::string& detail);

  const std::string& invariant() const { return invariant_; }
  const std::string& example_id() const { return example_id_; }

 private:
  std::string invariant_;
  std::string example_id_;
};

// Malformed input text. `line` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(std::filesystem::path path, std::size_t line,
             const std::string& detail);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

std::string ReadFile(const std::filesystem::path& path);

// Writes via a sibling temporary file and renames it into place.
void WriteFile(const std::filesystem::path& path, std::string_view contents);

// Reads a required field, reporting the key name on failure.
template <typename T, typename JsonT>
T Field(const JsonT& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end()) {
    throw Error(std::string("missing field \"") + key + "\"");
  }
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("field \"") + key + "\": " + e.what());
  }
}

// Checks the "format_version" key of a parsed record.
template <typename JsonT>
void CheckFormatVersion(const JsonT& object) {
  auto it = object.find("format_version");
  if (it == object.end() || !it->is_number_integer()) {
    throw VersionError("missing integer \"format_version\"");
  }
  const auto version = it->template get<std::int64_t>();
  if (version != kFormatVersion) {
    throw VersionError("unsupported format_version " +
                       std::to_string(version) + " (expected " +
                       std::to_string(kFormatVersion) + ")");
  }
}

// 64-bit FNV-1a. Used to derive per-record seeds from string ids in a way
// that does not depend on the standard library implementation.
std::uint64_t Fnv1a(std::string_view text);

}  // namespace expnet

#endif  // EXPNET_COMMON_H_
