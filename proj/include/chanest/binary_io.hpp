#pragma once

// Little-endian primitive readers/writers shared by the .fch, .fds and .fnn
// formats.

#include <algorithm>
#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "chanest/errors.hpp"

namespace chanest::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
U to_little(U v) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    auto raw = std::bit_cast<std::array<unsigned char, sizeof(U)>>(v);
    std::reverse(raw.begin(), raw.end());
    return std::bit_cast<U>(raw);
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag) { bytes(tag.data(), tag.size()); }

  void u32(std::uint32_t v) {
    v = to_little(v);
    bytes(&v, sizeof v);
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void f64(double v) {
    auto bits = to_little(std::bit_cast<std::uint64_t>(v));
    bytes(&bits, sizeof bits);
  }

  /// Interleaved (re, im) f32 pairs.
  template <typename T>
  void complex_f32(std::span<const std::complex<T>> values) {
    for (const auto& c : values) {
      f32(static_cast<float>(c.real()));
      f32(static_cast<float>(c.imag()));
    }
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw DataError("write failed");
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  void expect_magic(std::string_view tag) {
    std::array<char, 8> buf{};
    bytes(buf.data(), tag.size());
    if (std::string_view(buf.data(), tag.size()) != tag)
      throw DataError(source_ + ": bad magic, expected " + std::string(tag));
  }

  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return to_little(v);
  }

  float f32() { return std::bit_cast<float>(u32()); }

  double f64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return std::bit_cast<double>(to_little(v));
  }

  template <typename T>
  void complex_f32(std::span<std::complex<T>> out) {
    for (auto& c : out) {
      const float re = f32();
      const float im = f32();
      c = {static_cast<T>(re), static_cast<T>(im)};
    }
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw DataError(source_ + ": truncated file");
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw DataError(source_ + ": trailing bytes");
  }

 private:
  std::istream& in_;
  std::string source_;
};

}  // namespace chanest::io
