// affect/common.h

// Copyright 2026  affectkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFECT_COMMON_H_
#define AFFECT_COMMON_H_

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace affect {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using MatF = Eigen::MatrixXf;
using VecF = Eigen::VectorXf;

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (singular matrix, non-finite loss, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or stream content; carries the source name and byte offset.
class FormatError : public Error {
 public:
  FormatError(const std::string &source, std::uint64_t offset,
              const std::string &what)
      : Error(source + " (offset " + std::to_string(offset) + "): " + what),
        source_(source), offset_(offset) {}
  const std::string &source() const { return source_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::string source_;
  std::uint64_t offset_;
};

namespace internal {
inline void Append(std::ostringstream &) {}
template <typename T, typename... Rest>
void Append(std::ostringstream &os, const T &v, const Rest &...rest) {
  os << v;
  Append(os, rest...);
}
}  // namespace internal

/// Concatenates the streamable arguments into one message.
template <typename... Args>
std::string StrCat(const Args &...args) {
  std::ostringstream os;
  internal::Append(os, args...);
  return os.str();
}

template <typename E = InvalidArgument, typename... Args>
[[noreturn]] void Fail(const Args &...args) {
  throw E(StrCat(args...));
}

/// All seeded randomness goes through this engine; it is always passed
/// explicitly, never held in global state.
using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a string key
/// (FNV-1a over the key mixed with the seed through splitmix64).
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view key);

/// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view bytes,
                      std::uint64_t h = 14695981039346656037ull);

std::string ToHex64(std::uint64_t v);

}  // namespace affect

#endif  // AFFECT_COMMON_H_
