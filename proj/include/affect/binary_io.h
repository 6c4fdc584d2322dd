// affect/binary_io.h

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

#ifndef AFFECT_BINARY_IO_H_
#define AFFECT_BINARY_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "affect/common.h"

namespace affect {

// Little-endian byte sink. Every on-disk format in this project is built
// with it, so output does not depend on host byte order.
class ByteWriter {
 public:
  void PutU16(std::uint16_t v);
  void PutU32(std::uint32_t v);
  void PutU64(std::uint64_t v);
  void PutF32(float v);
  void PutBytes(std::string_view bytes) { buf_.append(bytes); }
  void PutF32s(std::span<const float> v);

  const std::string &bytes() const { return buf_; }
  std::string &&Release() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  std::string buf_;
};

// Little-endian cursor over an in-memory buffer. Errors are FormatError
// carrying `source` and the offset where the read failed.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string source,
             std::uint64_t base_offset = 0)
      : data_(data), source_(std::move(source)), base_(base_offset) {}

  std::uint16_t GetU16();
  std::uint32_t GetU32();
  std::uint64_t GetU64();
  float GetF32();
  std::string_view GetBytes(std::size_t n);
  void GetF32s(std::span<float> out);
  /// Reads 4 bytes and checks them against `magic`.
  void ExpectMagic(std::string_view magic);

  std::uint64_t offset() const { return base_ + pos_; }
  bool AtEnd() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string &source() const { return source_; }
  [[noreturn]] void Throw(const std::string &what) const {
    throw FormatError(source_, offset(), what);
  }

 private:
  void Need(std::size_t n);

  std::string_view data_;
  std::string source_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

/// Whole-file read; throws Error if the file cannot be opened.
std::string ReadFileBytes(const std::string &path);

/// Writes to `path + ".tmp.<pid>"` then renames over `path`.
void WriteFileAtomic(const std::string &path, std::string_view bytes);

}  // namespace affect

#endif  // AFFECT_BINARY_IO_H_
