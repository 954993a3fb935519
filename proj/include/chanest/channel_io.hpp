#pragma once

// ".fch" channel files:
//   "FCH1" | u32 realization_count | u32 length | f64 normalized_doppler |
//   realization_count * length complex samples as interleaved f32 (re, im)
// All fields little-endian. Samples are stored in single precision, so a
// read followed by a write reproduces the file byte for byte.

#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "chanest/binary_io.hpp"
#include "chanest/channel.hpp"

namespace chanest {

struct ChannelFile {
  double normalized_doppler = 0.0;
  std::size_t length = 0;
  std::vector<ComplexSeq> gains;
};

inline ChannelFile to_channel_file(std::span<const ChannelRealization> realizations) {
  if (realizations.empty()) throw ArgumentError("channel file: no realizations");
  ChannelFile file;
  file.normalized_doppler = realizations.front().spec.normalized_doppler();
  file.length = realizations.front().gains.size();
  for (const auto& r : realizations) {
    if (r.gains.size() != file.length) throw ArgumentError("channel file: realizations differ in length");
    file.gains.push_back(r.gains);
  }
  return file;
}

inline void write_channels(std::ostream& out, const ChannelFile& file) {
  io::Writer w(out);
  w.magic("FCH1");
  w.u32(static_cast<std::uint32_t>(file.gains.size()));
  w.u32(static_cast<std::uint32_t>(file.length));
  w.f64(file.normalized_doppler);
  for (const auto& g : file.gains) {
    if (g.size() != file.length) throw ArgumentError("channel file: realization length mismatch");
    w.complex_f32<double>(g);
  }
}

inline ChannelFile read_channels(std::istream& in, const std::string& source = "channel file") {
  io::Reader r(in, source);
  r.expect_magic("FCH1");
  ChannelFile file;
  const std::uint32_t count = r.u32();
  file.length = r.u32();
  file.normalized_doppler = r.f64();
  file.gains.assign(count, ComplexSeq(file.length));
  for (auto& g : file.gains) r.complex_f32<double>(g);
  r.expect_end();
  return file;
}

inline void save_channels(const std::filesystem::path& path, const ChannelFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_channels(out, file);
}

inline ChannelFile load_channels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_channels(in, path.string());
}

}  // namespace chanest
