#pragma once

// Experiment configuration: "key = value" lines, '#' starts a comment, list
// values are comma separated. Unknown or repeated keys are rejected.
// serialize() writes every key in a fixed order with round-trip number
// formatting, so parse(serialize(c)) == c.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chanest/channel.hpp"
#include "chanest/csv.hpp"
#include "chanest/errors.hpp"
#include "chanest/framing.hpp"
#include "chanest/sbgru.hpp"

namespace chanest {

struct ExperimentConfig {
  double carrier_frequency = 5.2e9;
  double receiver_speed = 10.0;
  double sampling_rate = 0.25e6;

  std::size_t block_length = 16;
  std::size_t pilots_per_block = 8;
  std::size_t block_count = 10;

  std::size_t window_length = 40;
  std::size_t hidden_size = 40;
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  double train_snr_db = 20.0;
  std::size_t epochs = 10;
  std::size_t windows_per_sequence = 1;

  std::uint64_t seed = 1;
  std::size_t threads = 1;

  std::size_t train_channels = 120;
  std::size_t val_channels = 30;
  std::size_t test_channels = 30;
  std::size_t train_sequences = 10000;
  std::size_t val_sequences = 1000;
  std::size_t test_sequences = 1000;

  std::vector<double> test_snr_db{5.0, 10.0, 15.0, 20.0, 25.0};
  std::vector<double> pilot_densities{0.5, 0.25};
  std::vector<std::size_t> window_lengths{16, 24, 32, 40};
  /// Train one model per swept window length; false reuses model.fnn.
  bool window_sweep_retrain = true;

  std::size_t trace_length = 4000;
  double trace_snr_db = 20.0;

  std::string output_dir = "out";

  DopplerSpec doppler() const { return DopplerSpec::from_physical(carrier_frequency, receiver_speed, sampling_rate); }
  FrameLayout layout() const { return build_layout(block_length, pilots_per_block, block_count); }

  /// Pilots per block for a density in pilot_densities.
  std::size_t pilots_for_density(double density) const {
    const double np = density * static_cast<double>(block_length);
    const auto rounded = static_cast<std::size_t>(std::llround(np));
    if (!(density > 0.0) || std::abs(np - static_cast<double>(rounded)) > 1e-9 || rounded == 0 ||
        block_length % rounded != 0)
      throw ConfigError("pilot density " + csv::number(density) + " does not give a uniform layout with block_length " +
                        std::to_string(block_length));
    return rounded;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.learning_rate = learning_rate;
    t.batch_size = batch_size;
    t.train_snr_db = train_snr_db;
    t.epochs = epochs;
    t.seed = seed;
    t.windows_per_sequence = windows_per_sequence;
    t.hidden_size = hidden_size;
    return t;
  }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = value.find(',', start);
    out.push_back(trim(std::string_view(value).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  try {
    const double v = csv::parse_double(text);
    if (!std::isfinite(v)) throw DataError("");
    return v;
  } catch (const DataError&) {
    throw ConfigError("config: " + key + " expects a finite number, got '" + text + "'");
  }
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("config: " + key + " expects a non-negative integer, got '" + text + "'");
  return v;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += csv::number(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

struct ConfigField {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> read;
  std::function<std::string(const ExperimentConfig&)> write;
};

inline std::vector<ConfigField> config_fields() {
  std::vector<ConfigField> f;
  auto real = [&f](std::string key, double ExperimentConfig::*m) {
    f.push_back({key, [key, m](ExperimentConfig& c, const std::string& v) { c.*m = parse_real(key, v); },
                 [m](const ExperimentConfig& c) { return csv::number(c.*m); }});
  };
  auto count = [&f](std::string key, std::size_t ExperimentConfig::*m) {
    f.push_back({key,
                 [key, m](ExperimentConfig& c, const std::string& v) {
                   c.*m = static_cast<std::size_t>(parse_unsigned(key, v));
                 },
                 [m](const ExperimentConfig& c) { return std::to_string(c.*m); }});
  };
  real("carrier_frequency", &ExperimentConfig::carrier_frequency);
  real("receiver_speed", &ExperimentConfig::receiver_speed);
  real("sampling_rate", &ExperimentConfig::sampling_rate);
  count("block_length", &ExperimentConfig::block_length);
  count("pilots_per_block", &ExperimentConfig::pilots_per_block);
  count("block_count", &ExperimentConfig::block_count);
  count("window_length", &ExperimentConfig::window_length);
  count("hidden_size", &ExperimentConfig::hidden_size);
  real("learning_rate", &ExperimentConfig::learning_rate);
  count("batch_size", &ExperimentConfig::batch_size);
  real("train_snr_db", &ExperimentConfig::train_snr_db);
  count("epochs", &ExperimentConfig::epochs);
  count("windows_per_sequence", &ExperimentConfig::windows_per_sequence);
  f.push_back({"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_unsigned("seed", v); },
               [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
  count("threads", &ExperimentConfig::threads);
  count("train_channels", &ExperimentConfig::train_channels);
  count("val_channels", &ExperimentConfig::val_channels);
  count("test_channels", &ExperimentConfig::test_channels);
  count("train_sequences", &ExperimentConfig::train_sequences);
  count("val_sequences", &ExperimentConfig::val_sequences);
  count("test_sequences", &ExperimentConfig::test_sequences);
  f.push_back({"test_snr_db",
               [](ExperimentConfig& c, const std::string& v) {
                 c.test_snr_db.clear();
                 for (const auto& item : split_list(v)) c.test_snr_db.push_back(parse_real("test_snr_db", item));
               },
               [](const ExperimentConfig& c) { return join(c.test_snr_db); }});
  f.push_back({"pilot_densities",
               [](ExperimentConfig& c, const std::string& v) {
                 c.pilot_densities.clear();
                 for (const auto& item : split_list(v)) c.pilot_densities.push_back(parse_real("pilot_densities", item));
               },
               [](const ExperimentConfig& c) { return join(c.pilot_densities); }});
  f.push_back({"window_lengths",
               [](ExperimentConfig& c, const std::string& v) {
                 c.window_lengths.clear();
                 for (const auto& item : split_list(v))
                   c.window_lengths.push_back(static_cast<std::size_t>(parse_unsigned("window_lengths", item)));
               },
               [](const ExperimentConfig& c) { return join(c.window_lengths); }});
  f.push_back({"window_sweep_retrain",
               [](ExperimentConfig& c, const std::string& v) {
                 if (v == "true" || v == "1") {
                   c.window_sweep_retrain = true;
                 } else if (v == "false" || v == "0") {
                   c.window_sweep_retrain = false;
                 } else {
                   throw ConfigError("config: window_sweep_retrain expects true or false, got '" + v + "'");
                 }
               },
               [](const ExperimentConfig& c) { return std::string(c.window_sweep_retrain ? "true" : "false"); }});
  count("trace_length", &ExperimentConfig::trace_length);
  real("trace_snr_db", &ExperimentConfig::trace_snr_db);
  f.push_back({"output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
               [](const ExperimentConfig& c) { return c.output_dir; }});
  return f;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  try {
    doppler();
    layout();
  } catch (const ArgumentError& e) {
    fail(e.what());
  }
  const std::size_t length = block_length * block_count;
  if (window_length == 0 || window_length > length) fail("window_length must be in [1, block_length * block_count]");
  if (hidden_size == 0) fail("hidden_size must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (windows_per_sequence == 0) fail("windows_per_sequence must be >= 1");
  if (threads == 0) fail("threads must be >= 1");
  for (std::size_t n : {train_channels, val_channels, test_channels, train_sequences, val_sequences, test_sequences})
    if (n == 0) fail("channel and sequence counts must be >= 1");
  if (train_channels > 0xFFFFFFFFu || train_sequences > 0xFFFFFFFFu || val_sequences > 0xFFFFFFFFu ||
      test_sequences > 0xFFFFFFFFu)
    fail("counts must fit in 32 bits");
  if (test_snr_db.empty()) fail("test_snr_db must list at least one SNR");
  if (pilot_densities.empty()) fail("pilot_densities must list at least one density");
  for (double d : pilot_densities) pilots_for_density(d);
  if (window_lengths.empty()) fail("window_lengths must list at least one length");
  for (std::size_t w : window_lengths)
    if (w == 0 || w > length) fail("window_lengths entries must be in [1, block_length * block_count]");
  if (trace_length == 0 || trace_length % block_length != 0) fail("trace_length must be a positive multiple of block_length");
  if (trace_length < window_length) fail("trace_length must be at least window_length");
  if (output_dir.empty()) fail("output_dir must not be empty");
}

inline ExperimentConfig parse_config(std::string_view text, const std::string& source = "config") {
  ExperimentConfig cfg;
  const auto fields = detail::config_fields();
  std::map<std::string, bool> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = stripped.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
    const std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
    auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.key == key; });
    if (it == fields.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (seen[key]) throw ConfigError(where + "duplicate key '" + key + "'");
    seen[key] = true;
    try {
      it->read(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    if (end == text.size()) break;
  }
  cfg.validate();
  return cfg;
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : detail::config_fields()) out += f.key + " = " + f.write(cfg) + "\n";
  return out;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace chanest
