/*
Copyright 2026 The domaudit Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace domaudit {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kFormat,
  kUnreachable,
  kNumeric,
  kNotFound,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// On-disk codes are the i8 values -1, 0, 1, 2.
enum class DomainLabel : int8_t {
  Unknown = -1,
  Natural = 0,
  Ambiguous = 1,
  Rendition = 2,
};

inline constexpr DomainLabel kKnownDomains[] = {DomainLabel::Natural, DomainLabel::Ambiguous,
                                                DomainLabel::Rendition};

const char* domain_name(DomainLabel label);
// Accepts "natural"/"nat", "ambiguous"/"amb", "rendition"/"rend", "unknown"/"unk".
DomainLabel parse_domain(std::string_view token);
bool is_valid_domain_code(int code);

// Seeded generator with platform-independent derived draws. The standard
// distributions are implementation-defined, so they are not used here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }
  // Uniform in [0, n), unbiased.
  uint64_t uniform_index(uint64_t n);
  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over little-endian u64 ids, used to fingerprint id sets.
uint64_t fingerprint_ids(std::span<const uint64_t> ids);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> v);

}  // namespace domaudit
