// driftguard: data generation, control-limit calibration, stream monitoring
// and replicated false-alarm / detection studies.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "driftguard/io.hpp"
#include "driftguard/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace driftguard;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct ModelFlags {
  std::string kind = "linear";
  ModelSpec spec;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", kind, "Score model: linear (ridge) or mlp")->capture_default_str();
    cmd->add_option("--gamma", spec.gamma, "L2 penalty weight")->capture_default_str();
    cmd->add_option("--epochs", spec.train.epochs, "MLP: full-batch epochs for a cold fit")->capture_default_str();
    cmd->add_option("--step-size", spec.train.step_size, "MLP: initial Adam step size")->capture_default_str();
    cmd->add_option("--train-seed", spec.train.seed, "MLP: weight-initialization seed")->capture_default_str();
    cmd->add_option("--restarts", spec.train.restarts, "MLP: random restarts for a cold fit")->capture_default_str();
    cmd->add_option("--refit-epochs", spec.train.refit_epochs, "MLP: epochs for warm-started bootstrap refits")
        ->capture_default_str();
  }

  ModelSpec resolve() {
    spec.kind = parse_model_kind(kind);
    return spec;
  }
};

struct BootFlags {
  BootstrapConfig cfg;
  double epsilon = -1.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--B-O,--outer", cfg.outer, "Outer bootstrap replicates")->capture_default_str();
    cmd->add_option("--B-I,--inner", cfg.inner, "Inner bootstrap replicates")->capture_default_str();
    cmd->add_option("--lambda", cfg.lambda, "MEWMA smoothing weight")->capture_default_str();
    cmd->add_option("--alpha", cfg.alpha, "Pointwise false-alarm probability")->capture_default_str();
    cmd->add_option("--horizon", cfg.horizon, "Number of control-limit points")->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "Covariance ridge (negative: 1e-8 trace/d)")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
    cmd->add_flag("--naive", cfg.naive, "Disable the variance-inflation correction");
    cmd->add_option("--threads", cfg.threads, "Worker threads (0: all cores)")->capture_default_str();
  }

  BootstrapConfig resolve() {
    cfg.epsilon = epsilon >= 0.0 ? std::optional<double>(epsilon) : std::nullopt;
    return cfg;
  }
};

// Echo of every option of a subcommand, for provenance sidecars.
json option_echo(const CLI::App* cmd) {
  json j;
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    std::string name = opt->get_name();
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    if (opt->count() > 0) {
      j[name] = opt->get_expected_min() == 0 ? json(true) : json(opt->results().back());
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_provenance(const fs::path& out, const std::string& command, const CLI::App* cmd,
                      const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs, json extra = {}) {
  json j;
  j["command"] = command;
  j["config"] = option_echo(cmd);
  json hashes = json::object();
  for (const auto& p : inputs) hashes[p.filename().string()] = sha256_file(p);
  j["inputs"] = hashes;
  json out_hashes = json::object();
  for (const auto& p : outputs) out_hashes[p.filename().string()] = sha256_file(p);
  j["outputs"] = out_hashes;
  if (!extra.is_null()) j["details"] = std::move(extra);
  write_text(out, j.dump(2) + "\n");
}

fs::path sidecar(const fs::path& p) { return fs::path(p.string() + ".json"); }

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Splices `--config file.json` into flags placed ahead of the explicit ones,
// so that explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t k = 1; k < args.size(); ++k) {
    if (args[k] != "--config" && args[k].rfind("--config=", 0) != 0) continue;
    std::string file;
    std::size_t consumed = 1;
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw InputError("--config needs a file");
      file = args[k + 1];
      consumed = 2;
    } else {
      file = args[k].substr(9);
    }
    json cfg;
    try {
      cfg = json::parse(read_text(file));
    } catch (const json::exception& e) {
      throw InputError("config '" + file + "': " + e.what());
    }
    if (!cfg.is_object()) throw InputError("config '" + file + "' must be a JSON object");
    std::vector<std::string> injected;
    for (const auto& [key, value] : cfg.items()) {
      const std::string flag = "--" + key;
      if (value.is_boolean()) {
        if (value.get<bool>()) injected.push_back(flag);
      } else if (value.is_string()) {
        injected.push_back(flag);
        injected.push_back(value.get<std::string>());
      } else if (value.is_number()) {
        injected.push_back(flag);
        injected.push_back(value.dump());
      } else if (!value.is_null()) {
        throw InputError("config '" + file + "': value of '" + key + "' must be a scalar");
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k + consumed));
    // Subcommand name sits at args[1]; injected flags follow it.
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    break;
  }
  return args;
}

std::string csv_optional(const std::optional<Eigen::Index>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score-based concept-drift monitoring with nested-bootstrap MEWMA control limits", "driftguard"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_file;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a dataset CSV plus a provenance sidecar");
  std::string sim_kind = "linear", sim_mode = "single", sim_out;
  LinearGenConfig lin_cfg;
  OscillatorGenConfig osc_cfg;
  Eigen::Index sim_n = 2000, sim_shift_at = 0;
  std::uint64_t sim_seed = 1;
  sim->add_option("--kind", sim_kind, "linear or oscillator")->capture_default_str();
  sim->add_option("--mode", sim_mode, "linear: single or mixture")->capture_default_str();
  sim->add_option("--n", sim_n, "Rows")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Seed")->capture_default_str();
  sim->add_option("--shift-at", sim_shift_at, "1-based first shifted row (0: none)")->capture_default_str();
  sim->add_option("--noise-variance", lin_cfg.noise_variance, "linear: noise variance")->capture_default_str();
  sim->add_option("--sigma", osc_cfg.sigma, "oscillator: response noise sd")->capture_default_str();
  sim->add_option("--p1", osc_cfg.state0.p1, "oscillator: initial p1")->capture_default_str();
  sim->add_option("--v1", osc_cfg.state0.v1, "oscillator: initial v1")->capture_default_str();
  sim->add_option("--p2", osc_cfg.state0.p2, "oscillator: initial p2")->capture_default_str();
  sim->add_option("--v2", osc_cfg.state0.v2, "oscillator: initial v2")->capture_default_str();
  sim->add_option("--time-horizon", osc_cfg.horizon, "oscillator: sampling window in seconds")->capture_default_str();
  sim->add_option("--grid-n", osc_cfg.grid_n, "oscillator: grid size defining the interval (0: n)")
      ->capture_default_str();
  sim->add_option("--skip", osc_cfg.skip, "oscillator: intervals advanced before the first row")
      ->capture_default_str();
  sim->add_flag("--random-times", osc_cfg.random_times, "oscillator: i.i.d. uniform sampling times");
  sim->add_option("--out", sim_out, "Output CSV")->required();
  sim->add_option("--config", config_file, "JSON file with flag values");

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "Nested-bootstrap control limits for a training dataset");
  std::string cal_data, cal_out;
  ModelFlags cal_model;
  BootFlags cal_boot;
  cal_cmd->add_option("--data", cal_data, "Training dataset CSV")->required();
  cal_cmd->add_option("--out", cal_out, "Calibration JSON")->required();
  cal_model.add(cal_cmd);
  cal_boot.add(cal_cmd);
  cal_cmd->add_option("--config", config_file, "JSON file with flag values");

  // monitor
  auto* mon = app.add_subcommand("monitor", "Run the T^2 chart over a stream");
  std::string mon_cal, mon_stream, mon_out;
  mon->add_option("--calibration", mon_cal, "Calibration JSON")->required();
  mon->add_option("--stream", mon_stream, "Stream dataset CSV")->required();
  mon->add_option("--out", mon_out, "Monitor CSV (i,t2,cl,signal)")->required();
  mon->add_option("--config", config_file, "JSON file with flag values");

  // studies
  StudyConfig study;
  ModelFlags study_model;
  BootFlags study_boot;
  std::string study_scenario = "linear", study_out, osc_stream = "resample";
  bool no_baseline = false;
  auto add_study_flags = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", study_scenario, "linear or oscillator")->capture_default_str();
    cmd->add_option("--replicates,-R", study.replicates, "Replicates")->capture_default_str();
    cmd->add_option("--n-train", study.n_train, "Training rows per replicate")->capture_default_str();
    cmd->add_option("--stream-length", study.stream_length, "Monitored observations")->capture_default_str();
    cmd->add_option("--shift-at", study.shift_at, "1-based first post-shift observation")->capture_default_str();
    cmd->add_option("--split-fraction", study.split_fraction, "Baseline: fraction used for fitting")
        ->capture_default_str();
    cmd->add_flag("--no-baseline", no_baseline, "Skip the split-sample baseline");
    cmd->add_flag("--with-naive", study.naive, "Also run the uncorrected (k = 1) limits");
    cmd->add_option("--sigma", study.sigma, "Oscillator response noise sd")->capture_default_str();
    cmd->add_option("--osc-stream", osc_stream, "Oscillator stream sampling: resample or continuation")
        ->capture_default_str();
    cmd->add_option("--cv-folds", study.cv_folds, "Report k-fold CV R^2 of the mlp (0: off)")->capture_default_str();
    cmd->add_option("--out", study_out, "Output prefix")->required();
    study_model.add(cmd);
    study_boot.add(cmd);
    cmd->add_option("--config", config_file, "JSON file with flag values");
  };
  auto* far_cmd = app.add_subcommand("far-study", "Pointwise false-alarm rate over no-shift streams");
  add_study_flags(far_cmd);
  auto* det_cmd = app.add_subcommand("detect-study", "First-signal index over streams with a shift");
  add_study_flags(det_cmd);
  det_cmd->add_flag("--control-arm", study.control_arm, "Monitor unshifted streams instead");

  // compare-baseline
  auto* cmp = app.add_subcommand("compare-baseline", "Bootstrap vs split-sample limits on one stream");
  std::string cmp_data, cmp_stream, cmp_out;
  double cmp_split = 0.5;
  ModelFlags cmp_model;
  BootFlags cmp_boot;
  cmp->add_option("--data", cmp_data, "Training dataset CSV")->required();
  cmp->add_option("--stream", cmp_stream, "Stream dataset CSV")->required();
  cmp->add_option("--out", cmp_out, "Comparison CSV")->required();
  cmp->add_option("--split-fraction", cmp_split, "Baseline: fraction used for fitting")->capture_default_str();
  cmp_model.add(cmp);
  cmp_boot.add(cmp);
  cmp->add_option("--config", config_file, "JSON file with flag values");

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  std::string step = "setup";
  try {
    if (sim->parsed()) {
      step = "simulate";
      Dataset data;
      json details;
      if (sim_kind == "linear") {
        lin_cfg.n = sim_n;
        lin_cfg.seed = sim_seed;
        lin_cfg.mode = sim_mode == "mixture" ? LinearMode::mixture : LinearMode::single;
        if (sim_mode != "single" && sim_mode != "mixture") throw InputError("--mode must be single or mixture");
        lin_cfg.shift_at = sim_shift_at > 0 ? sim_shift_at - 1 : 0;
        data = gen_linear(lin_cfg);
        details = {{"kind", "linear"},   {"n", sim_n},         {"seed", sim_seed}, {"mode", sim_mode},
                   {"shift_at", sim_shift_at}, {"noise_variance", lin_cfg.noise_variance}};
      } else if (sim_kind == "oscillator") {
        osc_cfg.n = sim_n;
        osc_cfg.seed = sim_seed;
        osc_cfg.shift_at = sim_shift_at > 0 ? sim_shift_at - 1 : -1;
        data = gen_oscillator(osc_cfg);
        details = {{"kind", "oscillator"},
                   {"n", sim_n},
                   {"seed", sim_seed},
                   {"sigma", osc_cfg.sigma},
                   {"params", to_json(osc_cfg.params)},
                   {"shifted_params", to_json(osc_cfg.params.shifted())},
                   {"state0", to_json(osc_cfg.state0)},
                   {"dt", osc_cfg.dt()},
                   {"skip", osc_cfg.skip},
                   {"random_times", osc_cfg.random_times},
                   {"shift_at", sim_shift_at}};
      } else {
        throw InputError("--kind must be linear or oscillator");
      }
      write_dataset_csv(sim_out, data);
      write_provenance(sidecar(sim_out), "simulate", sim, {}, {sim_out}, details);
      std::cout << "wrote " << data.rows() << " rows to " << sim_out << "\n";
    } else if (cal_cmd->parsed()) {
      step = "read training data";
      const Dataset data = read_dataset_csv(cal_data);
      step = "calibrate";
      const Calibration cal = calibrate(data, cal_model.resolve(), cal_boot.resolve());
      warn_all(cal.warnings);
      write_text(cal_out, calibration_to_json(cal).dump(1) + "\n");
      write_provenance(sidecar(cal_out), "calibrate", cal_cmd, {cal_data}, {cal_out});
      std::cout << "control limits: CL_1 = " << cal.cl.front() << ", CL_" << cal.cl.size() << " = " << cal.cl.back()
                << "\n";
    } else if (mon->parsed()) {
      step = "read calibration";
      json j;
      try {
        j = json::parse(read_text(mon_cal));
      } catch (const json::exception& e) {
        throw InputError(std::string("calibration is not valid JSON: ") + e.what());
      }
      const Calibration cal = calibration_from_json(j);
      step = "read stream";
      const Dataset stream = read_dataset_csv(mon_stream);
      step = "monitor";
      const auto records = monitor(cal, stream);
      write_monitor_csv(mon_out, records);
      const auto first = first_signal(records);
      write_provenance(sidecar(mon_out), "monitor", mon, {mon_cal, mon_stream}, {mon_out},
                       {{"first_signal", first ? json(*first) : json(nullptr)}});
      if (first) {
        std::cout << "first signal at observation " << *first << "\n";
      } else {
        std::cout << "no signal in " << records.size() << " observations\n";
      }
    } else if (far_cmd->parsed() || det_cmd->parsed()) {
      const bool far = far_cmd->parsed();
      step = far ? "far-study" : "detect-study";
      study.scenario = parse_scenario(study_scenario);
      study.osc_stream = parse_osc_stream(osc_stream);
      study.model = study_model.resolve();
      study.boot = study_boot.resolve();
      study.baseline = !no_baseline;
      study.seed = study.boot.seed;
      const StudyResult res = far ? far_study(study) : detect_study(study);
      warn_all(res.warnings);
      std::string text;
      fs::path table;
      if (far) {
        table = study_out + "_far.csv";
        text = "i,far_bootstrap";
        if (!res.far_baseline.empty()) text += ",far_baseline";
        if (!res.far_naive.empty()) text += ",far_naive";
        text += "\n";
        for (std::size_t k = 0; k < res.far_bootstrap.size(); ++k) {
          text += std::to_string(k + 1) + "," + format_double(res.far_bootstrap[k]);
          if (!res.far_baseline.empty()) text += "," + format_double(res.far_baseline[k]);
          if (!res.far_naive.empty()) text += "," + format_double(res.far_naive[k]);
          text += "\n";
        }
      } else {
        table = study_out + "_detect.csv";
        text = "replicate,first_bootstrap,pre_shift_bootstrap";
        if (!res.first_naive.empty()) text += ",first_naive";
        if (!res.first_baseline.empty()) text += ",first_baseline";
        text += "\n";
        for (int r = 0; r < res.replicates; ++r) {
          const auto ur = static_cast<std::size_t>(r);
          text += std::to_string(r + 1) + "," + csv_optional(res.first_bootstrap[ur]) + "," +
                  (res.pre_shift_bootstrap[ur] ? "1" : "0");
          if (!res.first_naive.empty()) text += "," + csv_optional(res.first_naive[ur]);
          if (!res.first_baseline.empty()) text += "," + csv_optional(res.first_baseline[ur]);
          text += "\n";
        }
      }
      write_text(table, text);
      const fs::path summary_path = study_out + "_summary.json";
      const json summary = res.summary();
      write_text(summary_path, summary.dump(2) + "\n");
      write_provenance(sidecar(table), step, far ? far_cmd : det_cmd, {}, {table, summary_path});
      if (far) {
        std::cout << "mean FAR bootstrap = " << summary["mean_far_bootstrap"];
        if (summary.contains("mean_far_baseline")) std::cout << ", baseline = " << summary["mean_far_baseline"];
        if (summary.contains("mean_far_naive")) std::cout << ", naive = " << summary["mean_far_naive"];
        std::cout << "\n";
      } else {
        std::cout << "median first signal (bootstrap) = " << summary["median_first_signal_bootstrap"] << "\n";
      }
    } else if (cmp->parsed()) {
      step = "read data";
      const Dataset data = read_dataset_csv(cmp_data);
      const Dataset stream = read_dataset_csv(cmp_stream);
      const ModelSpec spec = cmp_model.resolve();
      const BootstrapConfig boot = cmp_boot.resolve();
      step = "calibrate";
      const Calibration cal = calibrate(data, spec, boot);
      warn_all(cal.warnings);
      step = "baseline";
      const BaselineCalibration base = baseline_split_cl(data, spec, cmp_split, boot.lambda, boot.alpha, boot.epsilon);
      warn_all(base.warnings);
      step = "monitor";
      const auto rb = monitor(cal, stream);
      const auto rs = monitor(base, stream);
      std::string text = "i,t2_bootstrap,cl_bootstrap,signal_bootstrap,t2_baseline,cl_baseline,signal_baseline\n";
      for (std::size_t k = 0; k < rb.size(); ++k)
        text += std::to_string(rb[k].i) + "," + format_double(rb[k].t2) + "," + format_double(rb[k].cl) + "," +
                (rb[k].signal ? "1" : "0") + "," + format_double(rs[k].t2) + "," + format_double(rs[k].cl) + "," +
                (rs[k].signal ? "1" : "0") + "\n";
      write_text(cmp_out, text);
      const auto fb = first_signal(rb), fs_ = first_signal(rs);
      write_provenance(sidecar(cmp_out), "compare-baseline", cmp, {cmp_data, cmp_stream}, {cmp_out},
                       {{"first_signal_bootstrap", fb ? json(*fb) : json(nullptr)},
                        {"first_signal_baseline", fs_ ? json(*fs_) : json(nullptr)},
                        {"cl_baseline", base.cl}});
      std::cout << "first signal: bootstrap " << (fb ? std::to_string(*fb) : "none") << ", baseline "
                << (fs_ ? std::to_string(*fs_) : "none") << "\n";
    }
  } catch (const InputError& e) {
    std::cerr << "error (" << step << "): " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure (" << step << "): " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error (" << step << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}
