#pragma once

// ".fnn" checkpoints:
//   "FNN1" | u32 layer_count |
//   per tensor (order of ModelParams): u32 rank | u32 dims[rank] | f32 data |
//   u32 CRC-32 (zlib polynomial) of every preceding byte
// Little-endian. Values are stored in single precision.

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "chanest/binary_io.hpp"
#include "chanest/nn/params.hpp"

namespace chanest::nn {

template <typename T>
std::string encode_checkpoint(const ModelParams<T>& params) {
  std::ostringstream buf(std::ios::binary);
  io::Writer w(buf);
  w.magic("FNN1");
  w.u32(static_cast<std::uint32_t>(params.shape().layers));
  for (std::size_t k = 0; k < params.tensor_count(); ++k) {
    const auto& info = params.tensor(k);
    w.u32(static_cast<std::uint32_t>(info.dims.size()));
    for (auto d : info.dims) w.u32(d);
    for (T v : params.tensor_values(k)) w.f32(static_cast<float>(v));
  }
  std::string bytes = buf.str();
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
  std::ostringstream tail(std::ios::binary);
  io::Writer(tail).u32(crc);
  return bytes + tail.str();
}

inline ModelParams<float> decode_checkpoint(const std::string& bytes, const std::string& source = "checkpoint") {
  if (bytes.size() < 12) throw DataError(source + ": truncated checkpoint");
  const std::string body = bytes.substr(0, bytes.size() - 4);
  {
    std::istringstream tail(bytes.substr(bytes.size() - 4), std::ios::binary);
    const std::uint32_t stored = io::Reader(tail, source).u32();
    const auto actual = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    if (stored != actual) throw DataError(source + ": CRC mismatch");
  }
  std::istringstream in(body, std::ios::binary);
  io::Reader r(in, source);
  r.expect_magic("FNN1");
  const std::uint32_t layers = r.u32();
  if (layers == 0 || layers > 64) throw DataError(source + ": implausible layer count");

  auto read_dims = [&] {
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 4) throw DataError(source + ": bad tensor rank");
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = r.u32();
    return dims;
  };

  // The first tensor (layer 0 forward Wz, H x (H + I)) fixes the shape.
  const auto first = read_dims();
  if (first.size() != 2 || first[1] <= first[0]) throw DataError(source + ": unexpected first tensor");
  ModelShape shape;
  shape.layers = layers;
  shape.hidden_size = first[0];
  shape.input_size = first[1] - first[0];
  // Output size is read from the head bias later; provisional value for now.
  std::vector<float> first_values(static_cast<std::size_t>(first[0]) * first[1]);
  for (auto& v : first_values) v = r.f32();

  std::vector<std::vector<std::uint32_t>> dims_list{first};
  std::vector<std::vector<float>> values_list{std::move(first_values)};
  const std::size_t tensor_total = layers * 12 + 2;
  for (std::size_t k = 1; k < tensor_total; ++k) {
    auto dims = read_dims();
    std::size_t count = 1;
    for (auto d : dims) count *= d;
    if (count > (std::size_t{1} << 28)) throw DataError(source + ": tensor too large");
    std::vector<float> values(count);
    for (auto& v : values) v = r.f32();
    dims_list.push_back(std::move(dims));
    values_list.push_back(std::move(values));
  }
  r.expect_end();
  if (dims_list.back().size() != 1) throw DataError(source + ": bad head bias");
  shape.output_size = dims_list.back()[0];

  ModelParams<float> params(shape);
  for (std::size_t k = 0; k < tensor_total; ++k) {
    if (params.tensor(k).dims != dims_list[k])
      throw DataError(source + ": tensor " + params.tensor(k).name + " has unexpected dimensions");
    auto dst = params.tensor_values(k);
    std::copy(values_list[k].begin(), values_list[k].end(), dst.begin());
  }
  return params;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline ModelParams<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str(), path.string());
}

}  // namespace chanest::nn
