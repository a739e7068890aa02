#include "layersparse/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "layersparse/errors.hpp"
#include "layersparse/refit.hpp"
#include "layersparse/stats.hpp"

namespace layersparse {

void GenConfig::validate() const {
  if (input_dim == 0 || hidden_width == 0 || hidden_layers == 0) {
    throw ParameterError("generator dimensions must be positive");
  }
  if (!(s_w >= 0.0 && s_w <= 1.0)) throw ParameterError("s_W must lie in [0,1]");
  if (n_train == 0 || n_test == 0) throw ParameterError("train and test sizes must be positive");
}

std::vector<std::size_t> simulation_widths(const GenConfig& cfg) {
  std::vector<std::size_t> widths{1};
  widths.insert(widths.end(), cfg.hidden_layers, cfg.hidden_width);
  widths.push_back(cfg.input_dim);
  return widths;
}

std::vector<Activation> simulation_activations(const GenConfig& cfg) {
  std::vector<Activation> acts{Activation::identity()};
  acts.insert(acts.end(), cfg.hidden_layers, Activation::relu());
  return acts;
}

GeneratedData generate(const GenConfig& cfg, RngStream& rng) {
  cfg.validate();
  const auto widths = simulation_widths(cfg);
  const std::size_t depth = widths.size() - 1;

  std::vector<int> indicators = sample_bernoulli(rng, cfg.s_w, depth - 1);
  std::vector<Matrix> weights;
  weights.push_back(sample_uniform(rng, -2.0, 2.0, widths[0], widths[1]));
  for (std::size_t j = 1; j < depth; ++j) {
    const double lo = indicators[j - 1] ? -2.0 : 0.0;
    weights.push_back(sample_uniform(rng, lo, 2.0, widths[j], widths[j + 1]));
  }
  Network net(std::move(weights), simulation_activations(cfg));

  const std::size_t total = cfg.n_train + cfg.n_test;
  const Matrix inputs = sample_std_normal(rng, total, cfg.input_dim);
  const Matrix noise = sample_std_normal(rng, total, 1);
  std::vector<double> targets(total);
  for (std::size_t i = 0; i < total; ++i) targets[i] = forward(net, inputs.row(i)) + noise(i, 0);

  double scale = 1.0;
  if (cfg.normalize_targets) {
    double sq = 0.0;
    for (double y : targets) sq += y * y;
    const double rms = std::sqrt(sq / static_cast<double>(total));
    if (rms > 0.0 && std::isfinite(rms)) scale = 1.0 / rms;
    for (double& y : targets) y *= scale;
  }

  auto slice = [&](std::size_t begin, std::size_t count) {
    DataSet d{Matrix(count, cfg.input_dim), {}};
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < cfg.input_dim; ++c) d.inputs(i, c) = inputs(begin + i, c);
      d.targets.push_back(targets[begin + i]);
    }
    return d;
  };

  ActiveSet active = detect_active(net, 0.0);
  return {TrueModel{std::move(net), std::move(indicators), std::move(active), scale},
          slice(0, cfg.n_train), slice(cfg.n_train, cfg.n_test)};
}

double mse_metric(const Network& net, const DataSet& test) {
  if (test.size() == 0) throw ParameterError("mse of an empty test set");
  return lsq_loss(net, test) / static_cast<double>(test.size());
}

std::size_t shat_metric(const Network& net, double tolerance) {
  return detect_active(net, tolerance).hidden_active();
}

std::string to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::LS:
      return "LS";
    case MethodKind::SLS:
      return "SLS";
    case MethodKind::ILS:
      return "ILS";
    case MethodKind::FLS:
      return "FLS";
  }
  return "?";
}

std::string Setting::label() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "h%zu_sw%g", hidden_layers, s_w);
  return buf;
}

std::vector<Setting> table1_settings() {
  return {{10, 0.1}, {10, 0.3}, {10, 0.9}, {25, 0.1}, {25, 0.3}};
}

Hyper hyper_for(const Setting& setting, const HyperOverrides& overrides) {
  auto near = [&](double v) { return std::abs(setting.s_w - v) < 1e-12; };
  std::optional<int> epochs;
  std::optional<double> weight;
  if (setting.hidden_layers == 10) {
    if (near(0.1) || near(0.3)) epochs = 200;
    else if (near(0.9)) epochs = 300;
    if (near(0.1)) weight = 0.2;
    else if (near(0.3)) weight = 0.12;
    else if (near(0.9)) weight = 0.07;
  } else if (setting.hidden_layers == 25) {
    epochs = near(0.1) ? 400 : 500;
    weight = 0.05;
  }
  Hyper h;
  if (overrides.epochs) epochs = overrides.epochs;
  if (overrides.layer_weight) weight = overrides.layer_weight;
  if (!epochs || !weight) {
    throw ParameterError("setting " + setting.label() +
                         " has no built-in hyperparameters; override epochs and rl");
  }
  h.epochs = *epochs;
  h.layer_weight = *weight;
  if (overrides.learning_rate) h.learning_rate = *overrides.learning_rate;
  if (overrides.batch_size) h.batch_size = *overrides.batch_size;
  if (overrides.tolerance) h.tolerance = *overrides.tolerance;
  if (overrides.fls_mode) h.fls_mode = *overrides.fls_mode;
  if (overrides.gradient) h.gradient = *overrides.gradient;
  return h;
}

namespace {

TrainConfig train_config(const Hyper& hyper, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.batch_size = hyper.batch_size;
  cfg.learning_rate = hyper.learning_rate;
  cfg.epochs = hyper.epochs;
  cfg.seed = seed;
  cfg.gradient = hyper.gradient;
  cfg.init = hyper.init;
  return cfg;
}

RunResult failed(MethodKind kind, const std::string& why) {
  RunResult r;
  r.method = kind;
  r.failure = why;
  return r;
}

// Runs `body`, turning divergence into a recorded failure.
template <typename Body>
RunResult guarded(MethodKind kind, Body&& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    return failed(kind, e.what());
  }
}

Network full_start(const GeneratedData& data, const Hyper& hyper, std::uint64_t seed) {
  const auto& net = data.model.net;
  const auto widths = net.widths();
  RngStream rng = RngStream(seed).child("init");
  return initialize_network(widths, net.activations(), hyper.init, rng);
}

RunResult ok_result(MethodKind kind, double mse, std::optional<double> shat = std::nullopt) {
  RunResult r;
  r.method = kind;
  r.ok = true;
  r.mse = mse;
  r.shat = shat;
  return r;
}

RunResult run_ls(const GeneratedData& data, const Hyper& hyper, std::uint64_t seed, double weight,
                 MethodKind kind, std::optional<FitResult>* keep = nullptr) {
  return guarded(kind, [&] {
    const Network start = full_start(data, hyper, seed);
    FitResult fit = sgd_fit(start, data.train, train_config(hyper, seed),
                            RegWeights::layer_only(start.depth(), weight));
    RunResult r = ok_result(kind, mse_metric(fit.net, data.test));
    if (keep) *keep = std::move(fit);
    return r;
  });
}

RunResult run_ils(const GeneratedData& data, const Hyper& hyper, std::uint64_t seed) {
  return guarded(MethodKind::ILS, [&] {
    const auto widths = data.model.net.widths();
    const CondensedSpace space =
        condensed_space(data.model.active, widths, data.model.net.activations());
    FitResult fit = refit(space, data.train, train_config(hyper, seed));
    return ok_result(MethodKind::ILS, mse_metric(fit.net, data.test),
                     static_cast<double>(data.model.active.hidden_active()));
  });
}

RunResult run_fls(const GeneratedData& data, const Hyper& hyper, std::uint64_t seed,
                  FitResult sls) {
  return guarded(MethodKind::FLS, [&] {
    PipelineConfig cfg;
    cfg.train = train_config(hyper, seed);
    cfg.layer_weight = hyper.layer_weight;
    cfg.tolerance = hyper.tolerance;
    cfg.mode = hyper.fls_mode;
    PipelineResult out = condense_and_refit(std::move(sls), data.train, cfg);
    return ok_result(MethodKind::FLS, mse_metric(out.refit.net, data.test),
                     static_cast<double>(shat_metric(out.refit.net, hyper.tolerance)));
  });
}

}  // namespace

RunResult run_method(MethodKind kind, const GeneratedData& data, const Hyper& hyper,
                     std::uint64_t seed) {
  switch (kind) {
    case MethodKind::LS:
      return run_ls(data, hyper, seed, 0.0, MethodKind::LS);
    case MethodKind::SLS:
      return run_ls(data, hyper, seed, hyper.layer_weight, MethodKind::SLS);
    case MethodKind::ILS:
      return run_ils(data, hyper, seed);
    case MethodKind::FLS: {
      std::optional<FitResult> sls;
      RunResult r = run_ls(data, hyper, seed, hyper.layer_weight, MethodKind::SLS, &sls);
      if (!r.ok) return failed(MethodKind::FLS, "layer-regularized fit failed: " + r.failure);
      return run_fls(data, hyper, seed, std::move(*sls));
    }
  }
  throw ParameterError("unknown method");
}

std::array<RunResult, 4> run_all_methods(const GeneratedData& data, const Hyper& hyper,
                                         std::uint64_t seed) {
  std::array<RunResult, 4> out;
  out[0] = run_ls(data, hyper, seed, 0.0, MethodKind::LS);
  std::optional<FitResult> sls;
  out[1] = run_ls(data, hyper, seed, hyper.layer_weight, MethodKind::SLS, &sls);
  out[2] = run_ils(data, hyper, seed);
  out[3] = out[1].ok ? run_fls(data, hyper, seed, std::move(*sls))
                     : failed(MethodKind::FLS, "layer-regularized fit failed: " + out[1].failure);
  return out;
}

std::vector<Aggregate> aggregate_runs(const std::vector<Setting>& settings,
                                      const std::vector<RunRecord>& runs) {
  std::vector<Aggregate> out;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
      Aggregate agg;
      agg.setting = settings[s].label();
      agg.method = kAllMethods[m];
      std::vector<double> mse;
      std::vector<double> shat;
      for (const auto& rec : runs) {
        if (rec.setting_index != s) continue;
        const RunResult& r = rec.results[m];
        if (!r.ok) {
          ++agg.runs_failed;
          continue;
        }
        ++agg.runs_ok;
        mse.push_back(r.mse);
        if (r.shat) shat.push_back(*r.shat);
      }
      if (!mse.empty()) {
        agg.mse_median = quantile(mse, 0.5);
        agg.mse_q3 = quantile(mse, 0.75);
      }
      if (!shat.empty()) {
        agg.shat_median = quantile(shat, 0.5);
        agg.shat_q3 = quantile(shat, 0.75);
      }
      out.push_back(std::move(agg));
    }
  }
  return out;
}

namespace {

std::size_t worker_count(std::size_t requested, std::size_t tasks) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("LAYERSPARSE_THREADS")) n = std::strtoul(env, nullptr, 10);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, tasks));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.settings.empty()) throw ParameterError("experiment needs at least one setting");
  if (cfg.n_runs == 0) throw ParameterError("experiment needs at least one run");
  std::vector<Hyper> hypers;
  for (const auto& s : cfg.settings) hypers.push_back(hyper_for(s, cfg.overrides));

  const RngStream master(cfg.seed);
  const std::size_t tasks = cfg.settings.size() * cfg.n_runs;
  std::vector<RunRecord> runs(tasks);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto work = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      try {
        const std::size_t s = t / cfg.n_runs;
        const std::size_t r = t % cfg.n_runs;
        GenConfig gen = cfg.base;
        gen.hidden_layers = cfg.settings[s].hidden_layers;
        gen.s_w = cfg.settings[s].s_w;
        const RngStream run_rng = master.child(cfg.settings[s].label()).child("run", r);
        RngStream data_rng = run_rng.child("data");
        const GeneratedData data = generate(gen, data_rng);
        const std::uint64_t fit_seed = run_rng.child("fit").next_u64();
        runs[t] = RunRecord{s, r, run_all_methods(data, hypers[s], fit_seed)};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const std::size_t workers = worker_count(cfg.threads, tasks);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  result.aggregates = aggregate_runs(cfg.settings, runs);
  result.runs = std::move(runs);
  return result;
}

namespace {

const char* const kDash = "\xE2\x80\x94";  // U+2014

std::string format_number(const std::optional<double>& v) {
  if (!v) return kDash;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", *v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Display width in code points, so the multi-byte dash pads like one column.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

std::string emit_table(const std::vector<Aggregate>& aggregates, TableFormat format) {
  const std::vector<std::string> header{"setting",     "method",  "mse_median", "mse_q3",
                                        "shat_median", "shat_q3", "runs_ok",    "runs_failed"};
  std::vector<std::vector<std::string>> rows{header};
  for (const auto& a : aggregates) {
    rows.push_back({a.setting, to_string(a.method), format_number(a.mse_median),
                    format_number(a.mse_q3), format_number(a.shat_median), format_number(a.shat_q3),
                    std::to_string(a.runs_ok), std::to_string(a.runs_failed)});
  }
  std::string out;
  if (format == TableFormat::Csv) {
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += csv_field(row[c]);
      }
      out += "\r\n";
    }
    return out;
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
  }
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(width[c] - display_width(row[c]), ' ');
    }
    out += line + "\n";
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& msg) -> void { throw ParseError("experiment config: " + msg); };
  if (!doc.is_object()) fail("top level must be an object");
  static const std::vector<std::string> allowed{"settings",     "n_runs",    "seed",    "input_dim",
                                                "hidden_width", "n_train",   "n_test",  "normalize_targets",
                                                "overrides",    "threads"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail("unknown key \"" + key + "\"");
    }
  }
  ExperimentConfig cfg;
  try {
    if (doc.contains("settings")) {
      cfg.settings.clear();
      for (const auto& s : doc.at("settings")) {
        for (const auto& [key, _] : s.items()) {
          if (key != "hidden_layers" && key != "s_w") fail("unknown setting key \"" + key + "\"");
        }
        cfg.settings.push_back({s.at("hidden_layers").get<std::size_t>(), s.at("s_w").get<double>()});
      }
    }
    if (doc.contains("n_runs")) cfg.n_runs = doc["n_runs"].get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("input_dim")) cfg.base.input_dim = doc["input_dim"].get<std::size_t>();
    if (doc.contains("hidden_width")) cfg.base.hidden_width = doc["hidden_width"].get<std::size_t>();
    if (doc.contains("n_train")) cfg.base.n_train = doc["n_train"].get<std::size_t>();
    if (doc.contains("n_test")) cfg.base.n_test = doc["n_test"].get<std::size_t>();
    if (doc.contains("normalize_targets")) cfg.base.normalize_targets = doc["normalize_targets"].get<bool>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<std::size_t>();
    if (doc.contains("overrides")) {
      const auto& o = doc["overrides"];
      for (const auto& [key, value] : o.items()) {
        if (key == "epochs") cfg.overrides.epochs = value.get<int>();
        else if (key == "lr") cfg.overrides.learning_rate = value.get<double>();
        else if (key == "batch") cfg.overrides.batch_size = value.get<std::size_t>();
        else if (key == "rl") cfg.overrides.layer_weight = value.get<double>();
        else if (key == "tol") cfg.overrides.tolerance = value.get<double>();
        else if (key == "mode") cfg.overrides.fls_mode = condense_mode_from_string(value.get<std::string>());
        else if (key == "gradient") {
          const auto g = value.get<std::string>();
          if (g != "sum" && g != "mean") fail("gradient must be \"sum\" or \"mean\"");
          cfg.overrides.gradient = g == "sum" ? BatchGradient::Sum : BatchGradient::Mean;
        } else fail("unknown override \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  if (cfg.settings.empty()) fail("settings must not be empty");
  if (cfg.n_runs == 0) fail("n_runs must be positive");
  for (const auto& s : cfg.settings) {
    if (!(s.s_w >= 0.0 && s.s_w <= 1.0)) fail("s_w must lie in [0,1]");
  }
  return cfg;
}

}  // namespace layersparse
