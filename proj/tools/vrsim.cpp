// Command-line front end: experiment sweeps from plain-text configs, the
// service-requirement table, and config validation.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "vrsim/errors.hpp"
#include "vrsim/experiment.hpp"
#include "vrsim/qos.hpp"

namespace {

int do_run(const std::string& config_path, std::optional<std::uint64_t> seed,
           std::optional<double> duration, const std::string& out,
           const std::string& per_run, const std::string& trace) {
  auto spec = vrsim::expt::parse_config(config_path);
  if (seed) spec.seeds = {*seed};
  if (duration) spec.base.duration_s = *duration;
  if (!out.empty()) spec.out_csv = out;
  if (!per_run.empty()) spec.per_run_csv = per_run;
  if (!trace.empty()) {
    if (vrsim::expt::planned_runs(spec) != 1)
      throw vrsim::ConfigError(
          "--trace requires exactly one planned run (1 curve, 1 user count, "
          "1 seed); this config plans " +
          std::to_string(vrsim::expt::planned_runs(spec)));
    spec.base.trace_path = vrsim::expt::resolve_out_path(trace).string();
  }
  vrsim::expt::validate_spec(spec);

  vrsim::expt::write_experiment(spec);
  std::cout << "wrote " << vrsim::expt::resolve_out_path(spec.out_csv).string()
            << " (" << vrsim::expt::planned_runs(spec) << " runs)\n";
  if (!spec.per_run_csv.empty())
    std::cout << "wrote "
              << vrsim::expt::resolve_out_path(spec.per_run_csv).string() << "\n";
  if (!spec.base.trace_path.empty())
    std::cout << "wrote " << spec.base.trace_path << "\n";
  return 0;
}

int do_qos_table(const std::string& out) {
  const std::string csv = vrsim::qos::qos_table_csv();
  if (out.empty()) {
    std::cout << csv;
    return 0;
  }
  const auto path = vrsim::expt::resolve_out_path(out);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + path.string());
  f << csv;
  f.flush();
  if (!f) throw std::runtime_error("failed while writing " + path.string());
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int do_validate(const std::string& config_path) {
  const auto spec = vrsim::expt::parse_config(config_path);
  std::cout << "ok: " << config_path << " plans "
            << vrsim::expt::planned_runs(spec) << " runs ("
            << spec.curves.size() << " curves x " << spec.n_users_axis.size()
            << " user counts x " << spec.seeds.size() << " seeds)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downlink VR bitplane-delivery simulator"};
  app.require_subcommand(1);

  std::string run_config, run_out, run_per_run, run_trace;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_duration;
  int jobs = 0;

  auto* run = app.add_subcommand("run", "Run an experiment sweep from a config");
  run->add_option("config", run_config, "experiment config file")->required();
  run->add_option("--seed", run_seed, "replace the seed list with this seed");
  run->add_option("--duration", run_duration, "override duration_s");
  run->add_option("--out", run_out, "override the summary CSV path");
  run->add_option("--per-run", run_per_run, "also write per-run detail CSV here");
  run->add_option("--jobs", jobs, "threads for per-seed runs (0 = runtime default)");
  run->add_option("--trace", run_trace,
                  "per-TTI schedule CSV; requires exactly one planned run");

  std::string qos_out;
  auto* qos = app.add_subcommand(
      "qos-table", "Print the VR service-requirement table as CSV");
  qos->add_option("--out", qos_out, "write to a file instead of stdout");

  std::string val_config;
  auto* val = app.add_subcommand("validate", "Parse and validate a config");
  val->add_option("config", val_config, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad usage is a configuration error
  }

#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif

  try {
    if (run->parsed())
      return do_run(run_config, run_seed, run_duration, run_out, run_per_run,
                    run_trace);
    if (qos->parsed()) return do_qos_table(qos_out);
    return do_validate(val_config);
  } catch (const vrsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
