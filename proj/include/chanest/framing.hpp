#pragma once

// Bits, Gray-mapped QPSK, pilot-interleaved frames and the 4 x L real
// feature matrix consumed by the estimator network.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chanest/channel.hpp"
#include "chanest/errors.hpp"
#include "chanest/rng.hpp"

namespace chanest {

using Bits = std::vector<std::uint8_t>;

inline Bits random_bits(std::size_t count, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, Stream::bits);
  Bits bits(count);
  for (auto& b : bits) b = rng.bit() ? 1 : 0;
  return bits;
}

/// 00 -> (+1+j), 01 -> (+1-j), 11 -> (-1-j), 10 -> (-1+j), all over sqrt(2).
inline ComplexSeq qpsk_modulate(std::span<const std::uint8_t> bits) {
  if (bits.size() % 2 != 0) throw ArgumentError("qpsk_modulate: odd bit count");
  const double a = 1.0 / std::sqrt(2.0);
  ComplexSeq symbols(bits.size() / 2);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    symbols[i] = {bits[2 * i] ? -a : a, bits[2 * i + 1] ? -a : a};
  }
  return symbols;
}

/// Nearest-point inverse of qpsk_modulate.
inline Bits qpsk_demap(std::span<const cplx> symbols) {
  Bits bits(symbols.size() * 2);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    bits[2 * i] = symbols[i].real() < 0.0 ? 1 : 0;
    bits[2 * i + 1] = symbols[i].imag() < 0.0 ? 1 : 0;
  }
  return bits;
}

struct FrameLayout {
  std::size_t block_length = 0;      // N
  std::size_t pilots_per_block = 0;  // Np
  std::size_t block_count = 0;       // K
  std::vector<std::size_t> pilot_positions;  // in-block offsets, ascending

  std::size_t total_length() const noexcept { return block_length * block_count; }
  std::size_t data_per_block() const noexcept { return block_length - pilots_per_block; }
  double pilot_density() const noexcept {
    return static_cast<double>(pilots_per_block) / static_cast<double>(block_length);
  }
  bool is_pilot(std::size_t n) const noexcept {
    const std::size_t stride = block_length / pilots_per_block;
    return (n % block_length) % stride == 0;
  }
  /// Absolute pilot indices over the whole frame, ascending.
  std::vector<std::size_t> pilot_indices() const {
    std::vector<std::size_t> out;
    out.reserve(pilots_per_block * block_count);
    for (std::size_t k = 0; k < block_count; ++k)
      for (std::size_t p : pilot_positions) out.push_back(k * block_length + p);
    return out;
  }

  friend bool operator==(const FrameLayout&, const FrameLayout&) = default;
};

/// Uniform interleaving: pilots at in-block offsets 0, N/Np, 2N/Np, ...
inline FrameLayout build_layout(std::size_t block_length, std::size_t pilots_per_block,
                                std::size_t block_count) {
  if (pilots_per_block < 1 || pilots_per_block > block_length)
    throw ArgumentError("build_layout: need 1 <= Np <= N");
  if (block_length % pilots_per_block != 0)
    throw ArgumentError("build_layout: Np=" + std::to_string(pilots_per_block) +
                        " does not divide N=" + std::to_string(block_length) +
                        " (unsupported layout)");
  if (block_count < 1) throw ArgumentError("build_layout: need K >= 1");
  FrameLayout layout{block_length, pilots_per_block, block_count, {}};
  const std::size_t stride = block_length / pilots_per_block;
  for (std::size_t i = 0; i < pilots_per_block; ++i) layout.pilot_positions.push_back(i * stride);
  return layout;
}

struct Frame {
  ComplexSeq symbols;    // x
  ComplexSeq pilot_ref;  // p: pilots in place, zero at data positions
  FrameLayout layout;
  Bits data_bits;
};

/// pilot_bits: 2*Np bits reused in every block. data_bits: 2*K*(N-Np) bits
/// filling data positions in order.
inline Frame assemble_frame(const FrameLayout& layout, std::span<const std::uint8_t> pilot_bits,
                            std::span<const std::uint8_t> data_bits) {
  if (pilot_bits.size() != 2 * layout.pilots_per_block)
    throw ArgumentError("assemble_frame: expected " + std::to_string(2 * layout.pilots_per_block) +
                        " pilot bits, got " + std::to_string(pilot_bits.size()));
  const std::size_t data_symbols = layout.block_count * layout.data_per_block();
  if (data_bits.size() != 2 * data_symbols)
    throw ArgumentError("assemble_frame: expected " + std::to_string(2 * data_symbols) +
                        " data bits, got " + std::to_string(data_bits.size()));
  const ComplexSeq pilots = qpsk_modulate(pilot_bits);
  const ComplexSeq data = qpsk_modulate(data_bits);

  Frame frame;
  frame.layout = layout;
  frame.data_bits.assign(data_bits.begin(), data_bits.end());
  const std::size_t length = layout.total_length();
  frame.symbols.resize(length);
  frame.pilot_ref.assign(length, cplx{0.0, 0.0});
  std::size_t next_data = 0;
  for (std::size_t k = 0; k < layout.block_count; ++k) {
    std::size_t next_pilot = 0;
    for (std::size_t i = 0; i < layout.block_length; ++i) {
      const std::size_t n = k * layout.block_length + i;
      if (next_pilot < layout.pilots_per_block && layout.pilot_positions[next_pilot] == i) {
        frame.symbols[n] = pilots[next_pilot];
        frame.pilot_ref[n] = pilots[next_pilot];
        ++next_pilot;
      } else {
        frame.symbols[n] = data[next_data++];
      }
    }
  }
  return frame;
}

/// Rebuilds a frame from stored symbol and pilot-reference sequences.
inline Frame frame_from_sequences(const FrameLayout& layout, ComplexSeq symbols, ComplexSeq pilot_ref) {
  if (symbols.size() != layout.total_length() || pilot_ref.size() != layout.total_length())
    throw DataError("frame: sequence length does not match layout");
  for (std::size_t n = 0; n < symbols.size(); ++n) {
    const bool pilot = layout.is_pilot(n);
    if (pilot ? pilot_ref[n] != symbols[n] : pilot_ref[n] != cplx{0.0, 0.0})
      throw DataError("frame: pilot reference inconsistent with layout at index " + std::to_string(n));
  }
  return {std::move(symbols), std::move(pilot_ref), layout, {}};
}

/// 4 x L network input, rows re(y), re(p), im(y), im(p).
class FeatureMatrix {
 public:
  static constexpr std::size_t rows = 4;

  explicit FeatureMatrix(std::size_t length = 0) : length_(length), values_(rows * length, 0.0) {}

  std::size_t length() const noexcept { return length_; }
  double& at(std::size_t row, std::size_t col) { return values_[row * length_ + col]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * length_ + col]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * length_, length_}; }

 private:
  std::size_t length_;
  std::vector<double> values_;
};

inline FeatureMatrix to_features(std::span<const cplx> y, std::span<const cplx> p) {
  if (y.size() != p.size()) throw ArgumentError("to_features: y and p lengths differ");
  FeatureMatrix f(y.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    f.at(0, n) = y[n].real();
    f.at(1, n) = p[n].real();
    f.at(2, n) = y[n].imag();
    f.at(3, n) = p[n].imag();
  }
  return f;
}

}  // namespace chanest
