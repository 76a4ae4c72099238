/*
 * Copyright 2026 the uptake authors.
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
#pragma once

// Number <-> string helpers used by every serializer. Doubles are written
// with the shortest decimal form that parses back to the same bits, so
// emitted files are byte-stable across runs and job counts.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

#include "uptake/error.hpp"

namespace uptake {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_double(std::string_view s, const char* what = "number") {
  const std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end == tmp.c_str() || *end != '\0') {
    throw error(std::string("bad ") + what + ": \"" + tmp + "\"");
  }
  return v;
}

inline long long parse_int(std::string_view s, const char* what = "integer") {
  const std::string tmp(s);
  char* end = nullptr;
  const long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (end == tmp.c_str() || *end != '\0') {
    throw error(std::string("bad ") + what + ": \"" + tmp + "\"");
  }
  return v;
}

}  // namespace uptake
