// pipeline/binary_io.cc

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

#include "affect/binary_io.h"

#include <unistd.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>

namespace affect {

std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view key) {
  std::uint64_t z = Fnv1a64(key) ^ (seed + 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string ToHex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void ByteWriter::PutU16(std::uint16_t v) {
  buf_.push_back(static_cast<char>(v & 0xff));
  buf_.push_back(static_cast<char>(v >> 8));
}

void ByteWriter::PutU32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::PutU64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::PutF32(float v) { PutU32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::PutF32s(std::span<const float> v) {
  buf_.reserve(buf_.size() + 4 * v.size());
  for (float x : v) PutF32(x);
}

void ByteReader::Need(std::size_t n) {
  if (data_.size() - pos_ < n)
    Throw(StrCat("unexpected end of data (need ", n, " bytes, have ",
                 data_.size() - pos_, ")"));
}

std::uint16_t ByteReader::GetU16() {
  Need(2);
  auto p = reinterpret_cast<const unsigned char *>(data_.data() + pos_);
  pos_ += 2;
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ByteReader::GetU32() {
  Need(4);
  auto p = reinterpret_cast<const unsigned char *>(data_.data() + pos_);
  pos_ += 4;
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t ByteReader::GetU64() {
  std::uint64_t lo = GetU32();
  std::uint64_t hi = GetU32();
  return lo | (hi << 32);
}

float ByteReader::GetF32() { return std::bit_cast<float>(GetU32()); }

std::string_view ByteReader::GetBytes(std::size_t n) {
  Need(n);
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::GetF32s(std::span<float> out) {
  Need(4 * out.size());
  for (float &x : out) x = GetF32();
}

void ByteReader::ExpectMagic(std::string_view magic) {
  std::uint64_t at = offset();
  if (remaining() < magic.size())
    throw FormatError(source_, at, StrCat("truncated; expected magic '", magic, "'"));
  auto got = GetBytes(magic.size());
  if (got != magic)
    throw FormatError(source_, at, StrCat("bad magic; expected '", magic, "'"));
}

std::string ReadFileBytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail<Error>("cannot open '", path, "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void WriteFileAtomic(const std::string &path, std::string_view bytes) {
  std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail<Error>("cannot open '", tmp, "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) Fail<Error>("write failed for '", tmp, "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    Fail<Error>("cannot rename onto '", path, "'");
  }
}

}  // namespace affect
