#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "layersparse/condense.hpp"
#include "layersparse/network.hpp"
#include "layersparse/rng.hpp"
#include "layersparse/training.hpp"

namespace layersparse {

struct GenConfig {
  std::size_t input_dim = 2;
  std::size_t hidden_width = 5;
  std::size_t hidden_layers = 10;  // depth - 1
  double s_w = 0.1;
  std::size_t n_train = 100;
  std::size_t n_test = 50;
  // Divide all targets by their root mean square over the n_train + n_test
  // samples. Raw targets of deep nonnegative ReLU stacks reach 1e6..1e16.
  bool normalize_targets = true;

  void validate() const;
};

/// Data-generating network: identity output activation, ReLU elsewhere.
/// indicators[i] == 1 means W^{i+2} was drawn from (-2, 2), 0 means (0, 2).
/// Targets are target_scale * (f_W(x) + u).
struct TrueModel {
  Network net;
  std::vector<int> indicators;
  ActiveSet active;
  double target_scale = 1.0;
};

struct GeneratedData {
  TrueModel model;
  DataSet train;
  DataSet test;
};

// Widths (1, w, ..., w, d) and activations (identity, relu, ..., relu).
std::vector<std::size_t> simulation_widths(const GenConfig& cfg);
std::vector<Activation> simulation_activations(const GenConfig& cfg);

// Draw order: indicators, W^1, W^2..W^l (row-major each), inputs, noise.
GeneratedData generate(const GenConfig& cfg, RngStream& rng);

// Mean squared prediction error over the set.
double mse_metric(const Network& net, const DataSet& test);
// Number of active layers among 1..depth-1 at `tolerance`.
std::size_t shat_metric(const Network& net, double tolerance);

enum class MethodKind { LS, SLS, ILS, FLS };
inline constexpr std::array<MethodKind, 4> kAllMethods = {MethodKind::LS, MethodKind::SLS,
                                                          MethodKind::ILS, MethodKind::FLS};
std::string to_string(MethodKind kind);

struct Hyper {
  int epochs = 200;
  double learning_rate = 1e-2;
  std::size_t batch_size = 10;
  double layer_weight = 0.2;
  double tolerance = 1e-6;
  BatchGradient gradient = BatchGradient::Mean;
  CondenseMode fls_mode = CondenseMode::Sound;
  // Start of LS, SLS and ILS fits.
  InitScheme init = GlorotUniform{};
};

struct Setting {
  std::size_t hidden_layers = 10;
  double s_w = 0.1;
  std::string label() const;  // e.g. "h10_sw0.1"
};

// Fields left empty fall back to the built-in per-setting values.
struct HyperOverrides {
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<double> layer_weight;
  std::optional<double> tolerance;
  std::optional<CondenseMode> fls_mode;
  std::optional<BatchGradient> gradient;
};

// Built-in epochs and layer weight per setting; throws ParameterError for
// a setting outside that grid unless the overrides supply both.
Hyper hyper_for(const Setting& setting, const HyperOverrides& overrides = {});

// The default five-setting (hidden layers, s_W) grid.
std::vector<Setting> table1_settings();

struct RunResult {
  MethodKind method = MethodKind::LS;
  bool ok = false;
  double mse = 0.0;
  std::optional<double> shat;  // ILS and FLS only
  std::string failure;
};

// One method on one generated data set. `seed` drives initialization and
// shuffling; LS and SLS share their start network for a given seed.
RunResult run_method(MethodKind kind, const GeneratedData& data, const Hyper& hyper,
                     std::uint64_t seed);
// All four methods; FLS reuses the SLS fit.
std::array<RunResult, 4> run_all_methods(const GeneratedData& data, const Hyper& hyper,
                                         std::uint64_t seed);

struct ExperimentConfig {
  std::vector<Setting> settings = table1_settings();
  std::size_t n_runs = 30;
  std::uint64_t seed = 20200101;
  GenConfig base;  // hidden_layers and s_w are taken from each setting
  HyperOverrides overrides;
  std::size_t threads = 0;  // 0: LAYERSPARSE_THREADS or hardware concurrency

  static ExperimentConfig from_json(const nlohmann::json& doc);
};

struct Aggregate {
  std::string setting;
  MethodKind method = MethodKind::LS;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  std::optional<double> mse_median;
  std::optional<double> mse_q3;
  std::optional<double> shat_median;
  std::optional<double> shat_q3;
};

struct RunRecord {
  std::size_t setting_index = 0;
  std::size_t run_index = 0;
  std::array<RunResult, 4> results;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  // ordered by (setting, run)
  std::vector<Aggregate> aggregates;  // ordered by (setting, method)
};

// Median and third quartile per (setting, method) over successful runs.
std::vector<Aggregate> aggregate_runs(const std::vector<Setting>& settings,
                                      const std::vector<RunRecord>& runs);

// Run r of setting s uses RngStream(seed).child(label_s).child("run", r); the
// result does not depend on thread count or scheduling.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

enum class TableFormat { Csv, Text };
// Columns: setting, method, mse_median, mse_q3, shat_median, shat_q3,
// runs_ok, runs_failed. Absent values print as an em dash.
std::string emit_table(const std::vector<Aggregate>& aggregates, TableFormat format);

}  // namespace layersparse
