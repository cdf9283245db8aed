// Copyright 2026 The slujoint Authors.
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

#ifndef SLU_ERROR_H_
#define SLU_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace slu {

// All library failures are reported as slu::Error (or a subclass) so callers
// can catch a single type. The CLI maps them to a nonzero exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

namespace internal {
template <typename... Args>
std::string StrCat(Args &&...args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}
}  // namespace internal

}  // namespace slu

#define SLU_CHECK(cond, ...)                                              \
  do {                                                                    \
    if (!(cond)) throw ::slu::Error(::slu::internal::StrCat(__VA_ARGS__)); \
  } while (0)

#endif  // SLU_ERROR_H_
