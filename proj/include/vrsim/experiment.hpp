// Experiment sweeps: plain-text configuration, the sweep plan
// (user count x scheduler x connectivity x traffic kind, or an explicit
// curve list), replicated runs per point, and deterministic CSV output.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vrsim/engine.hpp"

namespace vrsim::expt {

// One legend combination of the success-vs-users plot.
struct Curve {
  sched::Discipline discipline = sched::Discipline::RoundRobin;
  sched::Connectivity connectivity = sched::Connectivity::Single;
  traffic::Kind traffic = traffic::Kind::VR;
  bool operator==(const Curve&) const = default;
};

// Flow keys are kept as overrides so every curve starts from its traffic
// kind's documented defaults; prefetch_ms applies to traditional video only.
struct FlowOverrides {
  std::optional<double> bit_rate_bps;
  std::optional<double> refresh_hz;
  std::optional<std::uint32_t> bitplane_bits;
  std::optional<double> deadline_ms;
  std::optional<double> prefetch_ms;
};

struct ExperimentSpec {
  // duration/warmup/scenario/channel/scheduler shared by every run; the
  // per-curve scheduler and flow fields are filled in by make_sim_config.
  // Parse-level default duration is the 10 s desk scale.
  engine::SimConfig base;
  FlowOverrides flow;
  std::vector<std::size_t> n_users_axis{10};
  std::vector<Curve> curves{Curve{}};
  std::vector<std::uint64_t> seeds{1};
  std::string out_csv = "results.csv";
  std::string per_run_csv;  // per-(run, seed) detail rows when non-empty
};

// Canonical lower-case tokens used in config files and CSV cells.
std::string_view token(sched::Discipline d);
std::string_view token(sched::Connectivity c);
std::string_view token(traffic::Kind k);

// Sections: [sim] [scenario] [channel] [flow] [scheduler] [sweep] [output].
// '#' comments; key = value lines; unknown sections/keys, malformed values,
// duplicates, and invariant violations all throw ConfigError naming the
// offending key. An empty file yields pure defaults (synthetic campus map).
// Relative paths inside the file resolve against `base_dir`.
ExperimentSpec parse_config_text(std::string_view text, const std::string& origin,
                                 const std::filesystem::path& base_dir);
ExperimentSpec parse_config(const std::string& path);

// Whole-spec invariants (positive durations, non-empty axes, every curve's
// resolved config accepted by the engine, at least one scored frame).
// Throws ConfigError naming the offending key. parse_config* call this;
// callers mutating a spec afterwards should re-validate.
void validate_spec(const ExperimentSpec& spec);

// Axis product: curves * user counts * seeds.
std::size_t planned_runs(const ExperimentSpec& spec);

// The fully resolved per-run configuration for one sweep point.
engine::SimConfig make_sim_config(const ExperimentSpec& spec, const Curve& curve,
                                  std::size_t n_users);

struct ExperimentResult {
  std::string summary_csv;  // one aggregate row per sweep point
  std::string per_run_csv;  // empty unless spec.per_run_csv is set
};

// Runs the whole sweep (seeds of one point in parallel when OpenMP is
// enabled) and renders CSVs with a '#' fingerprint header covering every
// value that affects the numbers. Byte-identical for identical specs.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Prefixes relative paths with $VRSIM_OUT_DIR when set.
std::filesystem::path resolve_out_path(const std::string& path);

// run_experiment + file output at the resolved paths; partially written
// files are removed on failure.
void write_experiment(const ExperimentSpec& spec);

}  // namespace vrsim::expt
