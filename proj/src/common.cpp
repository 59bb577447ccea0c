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
#include "domaudit/common.hpp"

#include <cmath>
#include <numbers>

namespace domaudit {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kUnreachable: return "unreachable";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kNotFound: return "not_found";
  }
  return "unknown";
}

const char* domain_name(DomainLabel label) {
  switch (label) {
    case DomainLabel::Natural: return "natural";
    case DomainLabel::Ambiguous: return "ambiguous";
    case DomainLabel::Rendition: return "rendition";
    case DomainLabel::Unknown: return "unknown";
  }
  return "unknown";
}

DomainLabel parse_domain(std::string_view token) {
  if (token == "natural" || token == "nat" || token == "Natural") return DomainLabel::Natural;
  if (token == "ambiguous" || token == "amb" || token == "Ambiguous") return DomainLabel::Ambiguous;
  if (token == "rendition" || token == "rend" || token == "Rendition") return DomainLabel::Rendition;
  if (token == "unknown" || token == "unk" || token == "Unknown") return DomainLabel::Unknown;
  throw Error(ErrorCode::kInvalidArgument, "unknown domain label '" + std::string(token) + "'");
}

bool is_valid_domain_code(int code) { return code >= -1 && code <= 2; }

uint64_t Rng::uniform_index(uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "uniform_index: empty range");
  // Rejection zone keeps the draw unbiased.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

uint64_t fingerprint_ids(std::span<const uint64_t> ids) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (uint64_t id : ids) {
    for (int b = 0; b < 8; ++b) {
      h ^= (id >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

}  // namespace domaudit
