#include "layersparse/cli.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "layersparse/condense.hpp"
#include "layersparse/errors.hpp"
#include "layersparse/model_io.hpp"
#include "layersparse/refit.hpp"
#include "layersparse/simulation.hpp"
#include "layersparse/training.hpp"

namespace layersparse {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ParseError(what + ": not a number: \"" + text + "\"");
  return v;
}

// "0.2" broadcasts to every penalized layer; "0.2,0.1,..." gives one per layer.
std::vector<double> parse_layer_weights(const std::string& text, std::size_t depth) {
  const auto items = split_list(text);
  if (items.size() == 1) return std::vector<double>(depth - 1, parse_double(items[0], "--rl"));
  if (items.size() != depth - 1) {
    throw ParseError("--rl needs one value or " + std::to_string(depth - 1) + " values, got " +
                     std::to_string(items.size()));
  }
  std::vector<double> out;
  for (const auto& s : items) out.push_back(parse_double(s, "--rl"));
  return out;
}

Activation parse_activation(const std::string& text) {
  if (text == "identity") return Activation::identity();
  if (text == "relu") return Activation::relu();
  if (text.rfind("leaky_relu:", 0) == 0) {
    return Activation::leaky_relu(parse_double(text.substr(11), "leaky slope"));
  }
  throw ParseError("unknown activation \"" + text + "\" (identity, relu, leaky_relu:<slope>)");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct TrainFlags {
  int epochs = 100;
  double lr = 1e-2;
  std::size_t batch = 10;
  std::uint64_t seed = 0;
  std::string grad = "mean";
  bool no_shuffle = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lr", lr, "Learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", batch, "Mini-batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Seed for initialization and shuffling");
    cmd->add_option("--grad", grad, "Batch gradient: mean or sum")->check(CLI::IsMember({"mean", "sum"}));
    cmd->add_flag("--no-shuffle", no_shuffle, "Visit samples in file order");
  }

  TrainConfig config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.shuffle = !no_shuffle;
    cfg.gradient = grad == "sum" ? BatchGradient::Sum : BatchGradient::Mean;
    return cfg;
  }
};

Matrix probe_matrix(std::size_t count, std::size_t dim, std::uint64_t seed) {
  RngStream rng = RngStream(seed).child("verify-probes");
  return sample_std_normal(rng, count, dim);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer-sparse network training, condensation and simulation"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::size_t> sim_runs;
  std::size_t sim_threads = 0;
  std::string sim_format = "csv";
  auto* simulate = app.add_subcommand("simulate", "Run the simulation study and write the summary table");
  simulate->add_option("--config", sim_config, "Experiment config (JSON)")->required();
  simulate->add_option("--out", sim_out, "Output file (stdout when omitted)");
  simulate->add_option("--seed", sim_seed, "Master seed (overrides the config)");
  simulate->add_option("--runs", sim_runs, "Runs per setting (overrides the config)");
  simulate->add_option("--threads", sim_threads, "Worker threads (0: auto)");
  simulate->add_option("--format", sim_format, "csv or table")->check(CLI::IsMember({"csv", "table"}));

  // generate
  GenConfig gen;
  std::uint64_t gen_seed = 0;
  std::string gen_train;
  std::string gen_test;
  std::string gen_model;
  bool gen_raw = false;
  auto* generate_cmd = app.add_subcommand("generate", "Draw a true network and train/test data");
  generate_cmd->add_option("--hidden-layers", gen.hidden_layers, "Number of hidden layers");
  generate_cmd->add_option("--width", gen.hidden_width, "Hidden width");
  generate_cmd->add_option("--dim", gen.input_dim, "Input dimension");
  generate_cmd->add_option("--sw", gen.s_w, "Probability that a hidden matrix is signed");
  generate_cmd->add_option("--n-train", gen.n_train, "Training samples");
  generate_cmd->add_option("--n-test", gen.n_test, "Test samples");
  generate_cmd->add_option("--seed", gen_seed, "Seed");
  generate_cmd->add_flag("--raw", gen_raw, "Keep raw target scale");
  generate_cmd->add_option("--train", gen_train, "Training CSV output")->required();
  generate_cmd->add_option("--test", gen_test, "Test CSV output")->required();
  generate_cmd->add_option("--model", gen_model, "True model output");

  // train
  TrainFlags train_flags;
  std::string train_data;
  std::string train_model;
  std::string train_widths;
  std::string train_acts;
  std::string train_rl = "0";
  std::string train_out;
  auto* train = app.add_subcommand("train", "Fit a network with the layer penalty");
  train_flags.attach(train);
  train->add_option("--data", train_data, "Training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--model", train_model, "Start model (JSON)");
  train->add_option("--widths", train_widths, "Widths p1,...,p_{l+1} for a fresh start");
  train->add_option("--activations", train_acts, "Activations for a fresh start, e.g. identity,relu*10");
  train->add_option("--rl", train_rl, "Layer penalty weight: scalar or per-layer list");
  train->add_option("--out", train_out, "Fitted model output")->required();

  // condense
  std::string cond_model;
  std::string cond_mode = "as-stated";
  double cond_tol = 1e-6;
  std::string cond_out;
  std::string cond_report;
  std::size_t cond_probes = 1000;
  std::uint64_t cond_seed = 0;
  auto* condense_cmd = app.add_subcommand("condense", "Merge inactive layers");
  condense_cmd->add_option("--model", cond_model, "Model (JSON)")->required()->check(CLI::ExistingFile);
  condense_cmd->add_option("--mode", cond_mode, "as-stated or sound")->check(CLI::IsMember({"as-stated", "sound"}));
  condense_cmd->add_option("--tol", cond_tol, "Inactivity tolerance")->check(CLI::NonNegativeNumber);
  condense_cmd->add_option("--out", cond_out, "Condensed model output")->required();
  condense_cmd->add_option("--report", cond_report, "Condensation report output (JSON)");
  condense_cmd->add_option("--probes", cond_probes, "Probe count for the residual");
  condense_cmd->add_option("--seed", cond_seed, "Probe seed");

  // refit
  TrainFlags refit_flags;
  std::string refit_model;
  std::string refit_data;
  std::string refit_out;
  bool refit_cold = false;
  auto* refit_cmd = app.add_subcommand("refit", "Unregularized least-squares refit of a condensed model");
  refit_flags.attach(refit_cmd);
  refit_cmd->add_option("--model", refit_model, "Condensed model (JSON)")->required()->check(CLI::ExistingFile);
  refit_cmd->add_option("--data", refit_data, "Training CSV")->required()->check(CLI::ExistingFile);
  refit_cmd->add_option("--out", refit_out, "Refitted model output")->required();
  refit_cmd->add_flag("--cold", refit_cold, "Fresh Glorot start on the same architecture");

  // verify
  std::string ver_a;
  std::string ver_b;
  std::size_t ver_probes = 1000;
  std::uint64_t ver_seed = 0;
  auto* verify = app.add_subcommand("verify", "Max output deviation between two models");
  verify->add_option("a", ver_a, "First model")->required()->check(CLI::ExistingFile);
  verify->add_option("b", ver_b, "Second model")->required()->check(CLI::ExistingFile);
  verify->add_option("--probes", ver_probes, "Standard-normal probe count");
  verify->add_option("--seed", ver_seed, "Probe seed");

  // gradcheck
  std::string gc_model;
  std::string gc_data;
  double gc_step = 1e-6;
  std::string gc_rl = "0";
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backprop with central differences");
  gradcheck->add_option("--model", gc_model, "Model (JSON)")->required()->check(CLI::ExistingFile);
  gradcheck->add_option("--data", gc_data, "Data CSV")->required()->check(CLI::ExistingFile);
  gradcheck->add_option("--step", gc_step, "Finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--rl", gc_rl, "Layer penalty weight included in the objective");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      ExperimentConfig cfg = ExperimentConfig::from_json(read_json_file(sim_config));
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_runs) cfg.n_runs = *sim_runs;
      if (sim_threads) cfg.threads = sim_threads;
      const ExperimentResult result = run_experiment(cfg);
      const std::string table =
          emit_table(result.aggregates, sim_format == "csv" ? TableFormat::Csv : TableFormat::Text);
      if (sim_out.empty()) out << table;
      else write_file_atomic(sim_out, table);
      bool all_failed = false;
      for (const auto& a : result.aggregates) {
        if (a.runs_ok == 0) {
          err << "setting " << a.setting << " method " << to_string(a.method) << ": all "
              << a.runs_failed << " runs diverged\n";
          all_failed = true;
        } else if (a.runs_failed > 0) {
          err << "setting " << a.setting << " method " << to_string(a.method) << ": "
              << a.runs_failed << " of " << a.runs_ok + a.runs_failed << " runs diverged\n";
        }
      }
      return all_failed ? kExitDivergence : kExitOk;
    }

    if (generate_cmd->parsed()) {
      gen.normalize_targets = !gen_raw;
      RngStream rng = RngStream(gen_seed).child("generate");
      const GeneratedData data = generate(gen, rng);
      save_dataset(data.train, gen_train);
      save_dataset(data.test, gen_test);
      if (!gen_model.empty()) save_model(data.model.net, gen_model);
      out << "true active hidden layers: " << data.model.active.hidden_active()
          << "\ntarget scale: " << fmt(data.model.target_scale) << "\n";
      return kExitOk;
    }

    if (train->parsed()) {
      const DataSet data = load_dataset(train_data);
      TrainConfig cfg = train_flags.config();
      Network start = [&] {
        if (!train_model.empty()) return load_model(train_model);
        if (train_widths.empty() || train_acts.empty()) {
          throw ParseError("train needs --model or both --widths and --activations");
        }
        std::vector<std::size_t> widths;
        for (const auto& w : split_list(train_widths)) {
          widths.push_back(static_cast<std::size_t>(parse_double(w, "--widths")));
        }
        std::vector<Activation> acts;
        for (const auto& a : split_list(train_acts)) {
          // "relu*10" repeats an entry
          const auto star = a.find('*');
          const double count = star == std::string::npos ? 1.0 : parse_double(a.substr(star + 1), "--activations");
          if (count < 1.0 || count != std::floor(count)) throw ParseError("--activations: bad repeat count in \"" + a + "\"");
          acts.insert(acts.end(), static_cast<std::size_t>(count), parse_activation(a.substr(0, star)));
        }
        RngStream rng = RngStream(cfg.seed).child("init");
        try {
          return initialize_network(widths, acts, GlorotUniform{}, rng);
        } catch (const ShapeError& e) {
          throw ValidationError(e.what());
        }
      }();
      RegWeights reg = RegWeights::zero(start.depth());
      reg.layer = parse_layer_weights(train_rl, start.depth());
      const FitResult fit = sgd_fit(start, data, cfg, reg);
      save_model(fit.net, train_out);
      out << "final objective: " << fmt(fit.report.final_objective)
          << "\nactive hidden layers: " << detect_active(fit.net, 0.0).hidden_active() << "\n";
      return kExitOk;
    }

    if (condense_cmd->parsed()) {
      const Network net = load_model(cond_model);
      const CondensationReport report =
          condense(net, condense_mode_from_string(cond_mode), cond_tol, cond_probes, cond_seed);
      save_model(report.condensed, cond_out);
      const std::string json = report.to_json().dump(2) + "\n";
      if (!cond_report.empty()) write_file_atomic(cond_report, json);
      out << json;
      if (report.max_residual > 1e-9) {
        out << "warning: condensed model deviates from the original by up to "
            << fmt(report.max_residual) << " on " << cond_probes << " probes\n";
      }
      return kExitOk;
    }

    if (refit_cmd->parsed()) {
      const Network warm = load_model(refit_model);
      const DataSet data = load_dataset(refit_data);
      TrainConfig cfg = refit_flags.config();
      const FitResult fit = refit_cold ? refit(space_of(warm), data, cfg)
                                       : refit(space_of(warm), data, cfg, warm);
      save_model(fit.net, refit_out);
      out << "final loss: " << fmt(fit.report.final_objective) << "\n";
      return kExitOk;
    }

    if (verify->parsed()) {
      const Network a = load_model(ver_a);
      const Network b = load_model(ver_b);
      const double residual =
          verify_equivalence(a, b, probe_matrix(ver_probes, a.input_dim(), ver_seed));
      out << "max_residual " << fmt(residual) << "\n";
      return kExitOk;
    }

    if (gradcheck->parsed()) {
      const Network net = load_model(gc_model);
      const DataSet data = load_dataset(gc_data);
      RegWeights reg = RegWeights::zero(net.depth());
      reg.layer = parse_layer_weights(gc_rl, net.depth());
      auto analytic = backprop(net, data);
      accumulate_regularizer_subgradient(net.weights(), reg, analytic);
      // Central differences of the full objective.
      Network probe = net;
      double worst = 0.0;
      for (std::size_t j = 0; j < net.depth(); ++j) {
        auto entries = probe.weight(j).data();
        for (std::size_t k = 0; k < entries.size(); ++k) {
          const double saved = entries[k];
          entries[k] = saved + gc_step;
          const double up = objective(probe, data, reg);
          entries[k] = saved - gc_step;
          const double down = objective(probe, data, reg);
          entries[k] = saved;
          const double numeric = (up - down) / (2.0 * gc_step);
          const double exact = analytic[j].data()[k];
          const double scale = std::max({std::abs(numeric), std::abs(exact), 1.0});
          worst = std::max(worst, std::abs(numeric - exact) / scale);
        }
      }
      out << "max_relative_error " << fmt(worst) << "\n";
      return kExitOk;
    }
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const SoundnessError& e) {
    err << "error: " << e.what() << "\n";
    return kExitSoundness;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace layersparse
