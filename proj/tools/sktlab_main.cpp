// sktlab command-line front end.
//
//   sktlab simulate        --config FILE --seed S --out DIR
//   sktlab ensemble        --config FILE --seed S --out DIR --paths M [--threads T]
//   sktlab check-structure --config FILE --seed S --out DIR [--samples K]
//   sktlab eps-study       --config FILE --seed S --out DIR --eps-list 1e-1,1e-2,1e-3
//   sktlab entropy-report  --config FILE --seed S --out DIR
//
// Exit codes: 0 success, 2 invalid input, 3 solver failure, 1 anything else.
// Errors are reported on stderr as a single JSON object.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sktlab/config.hpp"
#include "sktlab/error.hpp"
#include "sktlab/estimators.hpp"
#include "sktlab/noise.hpp"
#include "sktlab/output.hpp"
#include "sktlab/rng.hpp"
#include "sktlab/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sktlab;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

void write_json(const fs::path& file, const json& value) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + file.string() + " for writing");
  out << value.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write to " + file.string() + " failed");
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

/// Collects outputs and writes the manifest last.
class Run {
 public:
  Run(std::string command, const Common& common, const SimConfig& config)
      : dir_(common.out), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
    manifest_.command = std::move(command);
    manifest_.version = library_version();
    manifest_.config_json = effective_config_json(config);
    manifest_.config_hash = sha256_hex(manifest_.config_json);
    manifest_.seeds = {common.seed};
    manifest_.started_utc = utc_timestamp();
  }

  const fs::path& dir() const { return dir_; }
  void add(const std::string& name) { manifest_.add_output(dir_, name); }
  void meta(const std::string& key, const std::string& value) { manifest_.metadata.emplace_back(key, value); }

  void finish() {
    manifest_.finished_utc = utc_timestamp();
    manifest_.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(dir_, manifest_);
  }

 private:
  fs::path dir_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

std::string step_stem(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "u_%08zu", step);
  return buf;
}

void write_path_outputs(Run& run, const SimConfig& config, const PathRecord& record) {
  write_timeseries(run.dir() / "timeseries.csv", record, config.params.n);
  run.add("timeseries.csv");
  fs::create_directories(run.dir() / "snapshots");
  for (const Snapshot& s : record.snapshots) {
    const std::string stem = step_stem(s.step);
    write_snapshot(run.dir() / "snapshots", stem, s.u, config.grid, s.t);
    run.add("snapshots/" + stem + ".json");
    run.add("snapshots/" + stem + ".bin");
  }
  const Snapshot& last = record.snapshots.back();
  write_snapshot(run.dir(), "final_u", last.u, config.grid, last.t);
  run.add("final_u.json");
  run.add("final_u.bin");
}

int cmd_simulate(const Common& c) {
  const SimConfig config = load_config(c.config);
  Run run("simulate", c, config);
  const PathRecord record = run_path(config, c.seed, 0);
  write_path_outputs(run, config, record);
  run.meta("face_bound_violations", std::to_string(record.face_bound_violations));
  run.meta("clip_events", std::to_string(record.clip_events));
  run.finish();
  return 0;
}

int cmd_ensemble(const Common& c, std::size_t paths, unsigned threads) {
  const SimConfig config = load_config(c.config);
  Run run("ensemble", c, config);
  EnsembleOptions options;
  options.threads = threads;
  const EnsembleStats stats = run_ensemble(config, paths, c.seed, options);

  std::vector<std::string> header = {"path", "sup_H", "integrated_dissipation", "final_H", "min_u"};
  for (int i = 1; i <= config.params.n; ++i) header.push_back("final_mass_" + std::to_string(i));
  for (int i = 1; i <= config.params.n; ++i) header.push_back("final_dual_mass_" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  for (const PathSummary& s : stats.paths) {
    std::vector<double> row = {static_cast<double>(s.path_index), s.sup_entropy, s.integrated_dissipation,
                               s.final_entropy, s.min_density};
    for (int i = 0; i < config.params.n; ++i) row.push_back(s.final_mass(i));
    for (int i = 0; i < config.params.n; ++i) row.push_back(s.final_dual_mass(i));
    rows.push_back(std::move(row));
  }
  write_csv(run.dir() / "paths.csv", header, rows);
  run.add("paths.csv");

  std::vector<std::vector<double>> series;
  for (std::size_t k = 0; k < stats.times.size(); ++k) {
    series.push_back({stats.times[k], stats.mean_entropy[k], stats.variance_entropy[k]});
  }
  write_csv(run.dir() / "entropy_mean.csv", {"t", "mean_H", "var_H"}, series);
  run.add("entropy_mean.csv");

  const auto stats_json = [](const SampleStats& s) {
    return json{{"mean", s.mean}, {"variance", s.variance}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
  };
  json summary;
  summary["paths"] = paths;
  summary["base_seed"] = c.seed;
  summary["sup_H"] = stats_json(stats.sup_entropy);
  summary["integrated_dissipation"] = stats_json(stats.integrated_dissipation);
  summary["final_H"] = stats_json(stats.final_entropy);
  write_json(run.dir() / "summary.json", summary);
  run.add("summary.json");
  run.finish();
  return 0;
}

/// Random smooth positive density pairs for the Lipschitz and growth checks.
std::vector<std::pair<GridField, GridField>> sample_pairs(const SimConfig& config, std::uint64_t seed,
                                                          std::size_t count) {
  CounterRng rng(seed, 0xA4u);
  const SpectralBasis& basis = *config.basis;
  const Eigen::Index modes = std::min<Eigen::Index>(8, basis.size());
  const auto field = [&](double level) {
    FieldArray f(config.params.n, basis.size());
    for (int i = 0; i < config.params.n; ++i) {
      Eigen::VectorXd coeff = Eigen::VectorXd::Zero(modes);
      for (Eigen::Index k = 0; k < modes; ++k) coeff(k) = rng.normal() / (1.0 + k);
      const Eigen::VectorXd g = basis.from_spectral(coeff);
      f.row(i) = (level * (0.5 * g.array()).exp()).transpose();
    }
    return GridField(FieldKind::Density, f);
  };
  std::vector<std::pair<GridField, GridField>> pairs;
  for (std::size_t j = 0; j < count; ++j) {
    const double level = std::pow(10.0, -1.0 + 4.0 * rng.uniform());
    pairs.emplace_back(field(level), field(level));
  }
  return pairs;
}

int cmd_check_structure(const Common& c, std::size_t samples) {
  const SimConfig config = load_config(c.config);
  Run run("check-structure", c, config);
  const SKTParameters& p = config.params;
  json out;
  out["pi"] = vector_json(p.pi);
  out["detailed_balance_residual"] = p.detailed_balance_residual();
  out["mode"] = p.mode == DiffusionMode::WithSelfDiffusion ? "with_self_diffusion" : "without_self_diffusion";
  const NoiseModel& noise = *config.noise_model;
  out["noise"] = {{"family", family_name(noise.family())},
                  {"rho", noise.rho()},
                  {"K", noise.modes()},
                  {"tail_fraction", noise.tail_fraction()},
                  {"sup_norm_sum", noise.sup_norm_sum()}};
  const A4Report a4 = check_A4(noise, p, sample_pairs(config, c.seed, samples));
  out["A4"] = {{"lipschitz", a4.lipschitz}, {"growth", a4.growth}, {"exponent", a4.exponent},
               {"samples", a4.samples}};
  const PathRecord record = run_path(config, c.seed, 0);
  const A5Report a5 = check_A5(noise, p, record);
  out["A5"] = {{"ratio1", a5.ratio1}, {"ratio2", a5.ratio2}, {"snapshots", record.snapshots.size()}};
  out["face_bound_violations"] = record.face_bound_violations;
  out["faces_checked"] = record.faces_checked;
  write_json(run.dir() / "structure.json", out);
  run.add("structure.json");
  run.finish();
  return 0;
}

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "--eps-list entry '" + item + "' is not a number");
    }
  }
  require(!out.empty(), ErrorCode::InvalidArgument, "--eps-list is empty");
  return out;
}

int cmd_eps_study(const Common& c, const std::string& eps_text) {
  const SimConfig config = load_config(c.config);
  const std::vector<double> eps = parse_eps_list(eps_text);
  Run run("eps-study", c, config);
  run.meta("eps_list", eps_text);
  const std::vector<EpsilonRow> rows = epsilon_consistency_study(config, eps, c.seed);
  std::vector<std::vector<double>> table;
  for (const EpsilonRow& r : rows) {
    table.push_back({r.epsilon, r.l2_difference.value_or(std::numeric_limits<double>::quiet_NaN()),
                     r.regularization_residue, r.sup_entropy, static_cast<double>(r.total_newton_iterations)});
  }
  write_csv(run.dir() / "eps_study.csv",
            {"epsilon", "l2_difference_next", "regularization_residue", "sup_H", "newton_iters"}, table);
  run.add("eps_study.csv");
  run.finish();
  return 0;
}

int cmd_entropy_report(const Common& c) {
  SimConfig config = load_config(c.config);
  config.save_every = 1;
  Run run("entropy-report", c, config);
  const PathRecord record = run_path(config, c.seed, 0);
  write_timeseries(run.dir() / "timeseries.csv", record, config.params.n);
  run.add("timeseries.csv");
  const std::vector<BalanceStep> steps = entropy_balance_report(config, record);
  std::vector<std::vector<double>> table;
  for (const BalanceStep& s : steps) {
    table.push_back({s.t, s.delta_entropy, s.dissipation, s.martingale, s.ito_correction, s.residual,
                     s.face_lower_bound, static_cast<double>(s.face_violations)});
  }
  write_csv(run.dir() / "entropy_balance.csv",
            {"t", "delta_H", "dissipation", "martingale", "ito_correction", "residual", "face_lower_bound",
             "face_violations"},
            table);
  run.add("entropy_balance.csv");
  run.finish();
  return 0;
}

void report_error(const std::string& code, const std::string& kind, const std::string& message) {
  json err = {{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic SKT cross-diffusion laboratory"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);

  Common common;
  std::size_t paths = 1;
  unsigned threads = 0;
  std::size_t samples = 200;
  std::string eps_list;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "64-bit seed")->default_val(0);
    sub->add_option("--out", common.out, "output directory")->required();
  };
  CLI::App* simulate = app.add_subcommand("simulate", "run one path");
  add_common(simulate);
  CLI::App* ensemble = app.add_subcommand("ensemble", "run independent paths and aggregate");
  add_common(ensemble);
  ensemble->add_option("--paths", paths, "number of paths")->required()->check(CLI::PositiveNumber);
  ensemble->add_option("--threads", threads, "worker threads (0: all cores)")->default_val(0);
  CLI::App* structure = app.add_subcommand("check-structure", "detailed balance and noise assumption checks");
  add_common(structure);
  structure->add_option("--samples", samples, "random sample pairs for the Lipschitz check")
      ->default_val(200)
      ->check(CLI::PositiveNumber);
  CLI::App* eps = app.add_subcommand("eps-study", "compare runs across regularization strengths");
  add_common(eps);
  eps->add_option("--eps-list", eps_list, "comma-separated epsilons, descending")->required();
  CLI::App* report = app.add_subcommand("entropy-report", "per-step entropy balance of one path");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", "validation", e.what());
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common);
    if (ensemble->parsed()) return cmd_ensemble(common, paths, threads);
    if (structure->parsed()) return cmd_check_structure(common, samples);
    if (eps->parsed()) return cmd_eps_study(common, eps_list);
    if (report->parsed()) return cmd_entropy_report(common);
  } catch (const SktError& e) {
    const bool validation = is_validation_error(e.code());
    report_error(std::string(to_string(e.code())), validation ? "validation" : "solver", e.what());
    return validation ? 2 : 3;
  } catch (const std::exception& e) {
    report_error("Internal", "internal", e.what());
    return 1;
  }
  return 1;
}
