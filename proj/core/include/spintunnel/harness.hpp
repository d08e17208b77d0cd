#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spintunnel/model.hpp"

namespace spintunnel {

enum class ExperimentKind { Spectrum, Match, Tunnel, Greens, Minami, Correlator };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

/// Flat key = value experiment description.  Unknown keys are rejected.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Spectrum;

  // model
  int dim = 1;
  int radius = 100;              // host box radius (box center: origin)
  double gamma = 0.1;
  double g = 0.5;
  double W = 0.5;                // uniform disorder half-width
  std::string zeta = "delta0";   // "delta0" or "x1 .. xd:amp; ..."

  // ensemble
  std::uint64_t base_seed = 1;
  int n_seeds = 1;

  // scale sequence (match)
  std::vector<int> u0 = {2};
  int k_max = 2;
  double beta = 0.3;
  double alpha = 0.9;
  double epsilon = 0.1;

  // tunnel
  double min_center_distance = 10;
  double gap_floor = 1e-10;
  double overlap_min = 0.999;
  int points_per_period = 2048;
  int window_points = 64;
  double window_fraction = 0.01;
  int n_max_periods = 4;

  // greens / correlator
  double s = 0.5;
  double energy = 0.0;
  double eta_im = 1e-2;
  std::vector<int> distances = {2, 4, 6, 8, 10};
  int boundary_margin = 8;
  double t_min = 1e-1;
  double t_max = 1e9;
  int n_t = 256;

  // minami
  std::vector<double> epsilons = {1e-3, 1e-2};

  // output
  bool dump_vectors = false;
  std::string out_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const;  // throws std::invalid_argument with the field name
  ModelParams model_params() const;
  DisorderSpec disorder(std::uint64_t seed) const;
  LatticeBox host_box() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
/// Canonical rendering; parse(render(c)) == c.
std::string render_config(const ExperimentConfig& c);

/// FNV-1a 64-bit content hash, hex-encoded.
std::string content_hash(const std::string& bytes);

/// 17-significant-digit float rendering used in every CSV cell.
std::string format_double(double v);

struct SeedStatus {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
};

struct RunManifest {
  std::string config_echo;
  std::string version;
  std::string kind;
  std::vector<SeedStatus> seed_status;
  std::map<std::string, std::string> output_hashes;  // file -> fnv1a hex
  std::map<std::string, double> wall_clock_seconds;
  std::map<std::string, double> summary;

  int failures() const;
  std::string to_json() const;
};

/// Worker-pool degree: SPINTUNNEL_THREADS if set, else hardware concurrency.
int configured_threads();

/// Dispatches the configured experiment, writes its CSV outputs and
/// manifest.json under out_dir, and returns the manifest.
RunManifest run_experiment(const ExperimentConfig& config);

/// Mergeable ensemble summary: counts, sums and extrema per named quantity.
struct SummaryStat {
  long count = 0;
  double sum = 0;
  double sumsq = 0;
  double min = 0;
  double max = 0;

  void add(double v);
  double mean() const { return count ? sum / count : 0; }
};

struct EnsembleSummary {
  std::string kind;
  std::map<std::string, SummaryStat> stats;
};

/// Order-independent merge; rejects mixed experiment kinds.
EnsembleSummary aggregate(const std::vector<EnsembleSummary>& partials);

}  // namespace spintunnel
