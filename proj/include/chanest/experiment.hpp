#pragma once

// Experiment commands. Each one is a deterministic function of the config:
// all randomness is drawn from streams derived from cfg.seed, and all
// artifacts go to cfg.output_dir under fixed names.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chanest/baselines.hpp"
#include "chanest/channel_io.hpp"
#include "chanest/config.hpp"
#include "chanest/csv.hpp"
#include "chanest/dataset_io.hpp"
#include "chanest/evaluation.hpp"
#include "chanest/nn/checkpoint.hpp"
#include "chanest/parallel.hpp"
#include "chanest/sbgru.hpp"

namespace chanest {

enum class Split : std::uint64_t { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline constexpr Split all_splits[] = {Split::train, Split::val, Split::test};

struct Artifacts {
  std::filesystem::path dir;

  std::filesystem::path channels(Split s) const { return dir / ("channels_" + std::string(split_name(s)) + ".fch"); }
  std::filesystem::path dataset(Split s) const { return dir / ("dataset_" + std::string(split_name(s)) + ".fds"); }
  std::filesystem::path model() const { return dir / "model.fnn"; }
  std::filesystem::path train_log() const { return dir / "train_log.csv"; }
  std::filesystem::path eval() const { return dir / "eval.csv"; }
  std::filesystem::path eval_block() const { return dir / "eval_block.csv"; }
  std::filesystem::path sweep_window() const { return dir / "sweep_window_length.csv"; }
  std::filesystem::path sweep_density() const { return dir / "sweep_pilot_density.csv"; }
  std::filesystem::path trace() const { return dir / "trace.csv"; }
};

inline Artifacts artifacts(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw DataError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
  return {cfg.output_dir};
}

inline std::size_t channel_count(const ExperimentConfig& cfg, Split s) {
  switch (s) {
    case Split::train: return cfg.train_channels;
    case Split::val: return cfg.val_channels;
    case Split::test: return cfg.test_channels;
  }
  return 0;
}

inline std::size_t sequence_count(const ExperimentConfig& cfg, Split s) {
  switch (s) {
    case Split::train: return cfg.train_sequences;
    case Split::val: return cfg.val_sequences;
    case Split::test: return cfg.test_sequences;
  }
  return 0;
}

/// Splits draw from disjoint seed families keyed by (split, index).
inline std::uint64_t channel_seed(std::uint64_t seed, Split s, std::size_t r) {
  return derive_seed(seed, {static_cast<std::uint64_t>(Stream::split), static_cast<std::uint64_t>(s),
                            static_cast<std::uint64_t>(r)});
}

inline ChannelFile make_channels(const ExperimentConfig& cfg, Split s) {
  const DopplerSpec spec = cfg.doppler();
  ChannelFile file{spec.normalized_doppler(), cfg.layout().total_length(), {}};
  file.gains.resize(channel_count(cfg, s));
  parallel_for(file.gains.size(), cfg.threads, [&](std::size_t r) {
    file.gains[r] = generate_channel(file.length, spec, channel_seed(cfg.seed, s, r)).gains;
  });
  return file;
}

inline ComplexSeq to_stored_precision(const ComplexSeq& v) {
  ComplexSeq out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = {static_cast<double>(static_cast<float>(v[i].real())), static_cast<double>(static_cast<float>(v[i].imag()))};
  return out;
}

/// Pilot symbols are shared by every split and every sequence; data bits
/// and channel picks are per split. Symbols are rounded to single precision,
/// as stored in .fds files, so in-memory and reloaded datasets agree.
inline DatasetFile make_dataset(const ExperimentConfig& cfg, const FrameLayout& layout, Split s,
                                std::size_t pool_size) {
  if (pool_size == 0) throw DataError(std::string("dataset: empty channel pool for split ") + split_name(s));
  const Bits pilot_bits = random_bits(2 * layout.pilots_per_block, derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::pilot_bits)}));
  const std::size_t data_bits = 2 * layout.block_count * layout.data_per_block();
  DatasetFile data;
  data.layout = layout;
  data.sequences.resize(sequence_count(cfg, s));
  Rng pick = Rng::stream(cfg.seed, Stream::channel_pick, static_cast<std::uint64_t>(s));
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    const auto bits_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::bits), static_cast<std::uint64_t>(s),
                                                  static_cast<std::uint64_t>(i)});
    Frame frame = assemble_frame(layout, pilot_bits, random_bits(data_bits, bits_seed));
    auto& rec = data.sequences[i];
    rec.channel_index = static_cast<std::uint32_t>(pick.below(pool_size));
    rec.symbols = to_stored_precision(frame.symbols);
    rec.pilot_ref = to_stored_precision(frame.pilot_ref);
  }
  return data;
}

inline std::vector<ComplexSeq> load_channel_pool(const ExperimentConfig& cfg, const Artifacts& a, Split s) {
  const auto path = a.channels(s);
  if (!std::filesystem::exists(path)) throw DataError("missing " + path.string() + " (run gen-channels first)");
  ChannelFile file = load_channels(path);
  if (file.length != cfg.layout().total_length())
    throw DataError(path.string() + ": channel length " + std::to_string(file.length) + " differs from the frame length");
  const double expected = cfg.doppler().normalized_doppler();
  if (std::abs(file.normalized_doppler - expected) > 1e-12 * expected)
    throw DataError(path.string() + ": normalized Doppler differs from the config");
  return std::move(file.gains);
}

inline SequenceSet load_sequence_set(const ExperimentConfig& cfg, const Artifacts& a, Split s) {
  const auto path = a.dataset(s);
  if (!std::filesystem::exists(path)) throw DataError("missing " + path.string() + " (run gen-dataset first)");
  SequenceSet set{load_dataset(path), load_channel_pool(cfg, a, s)};
  if (!(set.data.layout == cfg.layout())) throw DataError(path.string() + ": frame layout differs from the config");
  set.validate();
  return set;
}

inline nn::ModelParams<float> load_model(const Artifacts& a) {
  if (!std::filesystem::exists(a.model())) throw DataError("missing " + a.model().string() + " (run train first)");
  auto model = nn::load_checkpoint(a.model());
  if (model.shape().input_size != FeatureMatrix::rows || model.shape().output_size != 2)
    throw DataError(a.model().string() + ": model does not map 4 features to 2 outputs");
  return model;
}

inline csv::Table train_log_table(const std::vector<TrainLogRow>& log) {
  csv::Table t({"epoch", "train_loss", "val_loss"});
  for (const auto& r : log) t.add_row({csv::number(r.epoch), csv::number(r.train_loss), csv::number(r.val_loss)});
  return t;
}

inline TrainResult train_model(const ExperimentConfig& cfg, const SequenceSet& train_set, const SequenceSet& val_set,
                               std::size_t window_length, std::ostream& log) {
  return train(train_set, val_set, cfg.train_config(), window_length, [&](const TrainLogRow& row) {
    log << "  epoch " << row.epoch << "  train " << csv::number(row.train_loss) << "  val "
        << csv::number(row.val_loss) << std::endl;
  });
}

inline void cmd_gen_channels(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  for (Split s : all_splits) {
    const ChannelFile file = make_channels(cfg, s);
    save_channels(a.channels(s), file);
    log << "wrote " << a.channels(s).string() << " (" << file.gains.size() << " channels)\n";
  }
}

inline void cmd_gen_dataset(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  for (Split s : all_splits) {
    const auto pool = load_channel_pool(cfg, a, s);
    const DatasetFile data = make_dataset(cfg, cfg.layout(), s, pool.size());
    save_dataset(a.dataset(s), data);
    log << "wrote " << a.dataset(s).string() << " (" << data.sequences.size() << " sequences)\n";
  }
}

/// epochs = 0 writes the initialized checkpoint and nothing else.
inline void cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const SequenceSet train_set = load_sequence_set(cfg, a, Split::train);
  const SequenceSet val_set = load_sequence_set(cfg, a, Split::val);
  if (cfg.epochs == 0) {
    const nn::ModelShape shape{FeatureMatrix::rows, cfg.hidden_size, 2, 2};
    nn::save_checkpoint(a.model(), nn::init_params<float>(shape, cfg.seed));
    log << "wrote " << a.model().string() << " (initialized, no training)\n";
    return;
  }
  const TrainResult result = train_model(cfg, train_set, val_set, cfg.window_length, log);
  nn::save_checkpoint(a.model(), result.model);
  train_log_table(result.log).save(a.train_log());
  log << "wrote " << a.model().string() << " (best epoch " << result.best_epoch << ", val "
      << csv::number(result.best_val_loss) << ") and " << a.train_log().string() << "\n";
}

/// Block-mode BGRU uses blocks as long as the training window.
inline void cmd_eval(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const SequenceSet test_set = load_sequence_set(cfg, a, Split::test);
  const auto model = load_model(a);
  if (test_set.length() % cfg.window_length != 0)
    throw ConfigError("eval: window_length must divide the frame length for block-mode evaluation");

  std::vector<EstimateReport> all, block;
  for (double snr : cfg.test_snr_db) {
    const NoiseSpec noise = NoiseSpec::from_snr_db(snr);
    const std::vector<NamedEstimator> estimators{
        sbgru_estimator(model, cfg.window_length), bgru_block_estimator(model, cfg.window_length), ls_estimator(),
        mmse_theory_estimator(cfg.doppler(), test_set.length(), noise), mmse_sim_estimator()};
    const auto reports = evaluate_snr(test_set, snr, estimators, cfg.seed, cfg.threads);
    for (const auto& r : reports) {
      all.push_back(r);
      if (r.estimator_name == "SBGRU" || r.estimator_name == "BGRU-block") block.push_back(r);
      log << "  " << csv::number(snr) << " dB  " << r.estimator_name << "  " << csv::number(r.mse) << "\n";
    }
  }
  reports_table(all).save(a.eval());
  reports_table(block).save(a.eval_block());
  log << "wrote " << a.eval().string() << " and " << a.eval_block().string() << "\n";
}

enum class SweepAxis { window_length, pilot_density, both };

/// Window-length axis: one SBGRU model per window length (the configured
/// window reuses model.fnn), or inference-only with model.fnn when
/// window_sweep_retrain is off. Pilot-density axis: datasets are rebuilt
/// in memory from the stored channel pools and a model is trained per
/// density (the configured density reuses model.fnn).
inline void cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const auto base_model = load_model(a);

  if (axis != SweepAxis::pilot_density) {
    const SequenceSet test_set = load_sequence_set(cfg, a, Split::test);
    std::optional<SequenceSet> train_set, val_set;
    csv::Table table({"window_length", "estimator", "snr_db", "mse", "sample_count"});
    for (std::size_t w : cfg.window_lengths) {
      nn::ModelParams<float> model = base_model;
      if (cfg.window_sweep_retrain && w != cfg.window_length) {
        if (!train_set) {
          train_set = load_sequence_set(cfg, a, Split::train);
          val_set = load_sequence_set(cfg, a, Split::val);
        }
        log << "window length " << w << ": training\n";
        model = train_model(cfg, *train_set, *val_set, w, log).model;
      }
      for (double snr : cfg.test_snr_db) {
        const auto reports = evaluate_snr(test_set, snr, {sbgru_estimator(model, w)}, cfg.seed, cfg.threads);
        for (const auto& r : reports) {
          table.add_row({csv::number(w), r.estimator_name, csv::number(r.snr_db), csv::number(r.mse),
                         csv::number(r.sample_count)});
          log << "  W=" << w << "  " << csv::number(snr) << " dB  " << csv::number(r.mse) << "\n";
        }
      }
    }
    table.save(a.sweep_window());
    log << "wrote " << a.sweep_window().string() << "\n";
  }

  if (axis != SweepAxis::window_length) {
    std::vector<ComplexSeq> pools[3];
    for (Split s : all_splits) pools[static_cast<std::size_t>(s)] = load_channel_pool(cfg, a, s);
    csv::Table table({"pilot_density", "estimator", "snr_db", "mse", "sample_count"});
    for (double density : cfg.pilot_densities) {
      const std::size_t np = cfg.pilots_for_density(density);
      const FrameLayout layout = build_layout(cfg.block_length, np, cfg.block_count);
      auto set_for = [&](Split s) {
        const auto& pool = pools[static_cast<std::size_t>(s)];
        return SequenceSet{make_dataset(cfg, layout, s, pool.size()), pool};
      };
      const SequenceSet test_set = set_for(Split::test);
      nn::ModelParams<float> model = base_model;
      if (np != cfg.pilots_per_block) {
        log << "pilot density " << csv::number(density) << ": training\n";
        model = train_model(cfg, set_for(Split::train), set_for(Split::val), cfg.window_length, log).model;
      }
      for (double snr : cfg.test_snr_db) {
        const std::vector<NamedEstimator> estimators{sbgru_estimator(model, cfg.window_length), ls_estimator(),
                                                     mmse_sim_estimator()};
        for (const auto& r : evaluate_snr(test_set, snr, estimators, cfg.seed, cfg.threads)) {
          table.add_row({csv::number(density), r.estimator_name, csv::number(r.snr_db), csv::number(r.mse),
                         csv::number(r.sample_count)});
          log << "  density " << csv::number(density) << "  " << csv::number(snr) << " dB  " << r.estimator_name
              << "  " << csv::number(r.mse) << "\n";
        }
      }
    }
    table.save(a.sweep_density());
    log << "wrote " << a.sweep_density().string() << "\n";
  }
}

/// Channel tracking over one fresh long realization at trace_snr_db.
inline TraceResult cmd_trace(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Artifacts a = artifacts(cfg);
  const auto model = load_model(a);
  const FrameLayout layout = build_layout(cfg.block_length, cfg.pilots_per_block, cfg.trace_length / cfg.block_length);
  const auto channel = generate_channel(cfg.trace_length, cfg.doppler(),
                                        derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::trace), 0}));
  const Bits pilot_bits = random_bits(2 * layout.pilots_per_block, derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::pilot_bits)}));
  const Bits data_bits = random_bits(2 * layout.block_count * layout.data_per_block(),
                                     derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::trace), 1}));
  const Frame frame = assemble_frame(layout, pilot_bits, data_bits);
  const std::size_t w = cfg.window_length;
  TraceResult result = trace_export([&](const FeatureMatrix& x) { return sliding_estimate(x, model, w); }, channel,
                                    frame, cfg.trace_snr_db,
                                    derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::trace), 2}));
  result.table.save(a.trace());
  log << "wrote " << a.trace().string() << "  MSE: SBGRU " << csv::number(result.sbgru_mse) << ", LS "
      << csv::number(result.ls_mse) << ", MMSE-sim " << csv::number(result.mmse_sim_mse) << "\n";
  return result;
}

}  // namespace chanest
