#pragma once

// ".fds" dataset files:
//   "FDS1" | u32 sequence_count | u32 L | u32 N | u32 Np | u32 K |
//   per sequence: u32 channel_index | complex-f32 x[L] | complex-f32 p[L]
// Little-endian throughout.

#include <filesystem>
#include <fstream>
#include <vector>

#include "chanest/binary_io.hpp"
#include "chanest/framing.hpp"

namespace chanest {

struct SequenceRecord {
  std::uint32_t channel_index = 0;
  ComplexSeq symbols;
  ComplexSeq pilot_ref;
};

struct DatasetFile {
  FrameLayout layout;
  std::vector<SequenceRecord> sequences;
};

inline void write_dataset(std::ostream& out, const DatasetFile& data) {
  const std::size_t length = data.layout.total_length();
  io::Writer w(out);
  w.magic("FDS1");
  w.u32(static_cast<std::uint32_t>(data.sequences.size()));
  w.u32(static_cast<std::uint32_t>(length));
  w.u32(static_cast<std::uint32_t>(data.layout.block_length));
  w.u32(static_cast<std::uint32_t>(data.layout.pilots_per_block));
  w.u32(static_cast<std::uint32_t>(data.layout.block_count));
  for (const auto& s : data.sequences) {
    if (s.symbols.size() != length || s.pilot_ref.size() != length)
      throw ArgumentError("dataset file: sequence length does not match layout");
    w.u32(s.channel_index);
    w.complex_f32<double>(s.symbols);
    w.complex_f32<double>(s.pilot_ref);
  }
}

inline DatasetFile read_dataset(std::istream& in, const std::string& source = "dataset file") {
  io::Reader r(in, source);
  r.expect_magic("FDS1");
  const std::uint32_t count = r.u32();
  const std::uint32_t length = r.u32();
  const std::uint32_t n = r.u32();
  const std::uint32_t np = r.u32();
  const std::uint32_t k = r.u32();
  DatasetFile data;
  try {
    data.layout = build_layout(n, np, k);
  } catch (const ArgumentError& e) {
    throw DataError(source + ": " + e.what());
  }
  if (data.layout.total_length() != length) throw DataError(source + ": L != N*K");
  data.sequences.resize(count);
  for (auto& s : data.sequences) {
    s.channel_index = r.u32();
    s.symbols.resize(length);
    s.pilot_ref.resize(length);
    r.complex_f32<double>(s.symbols);
    r.complex_f32<double>(s.pilot_ref);
  }
  r.expect_end();
  return data;
}

inline void save_dataset(const std::filesystem::path& path, const DatasetFile& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_dataset(out, data);
}

inline DatasetFile load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_dataset(in, path.string());
}

}  // namespace chanest
