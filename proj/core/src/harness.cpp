#include "spintunnel/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "spintunnel/dynamics.hpp"
#include "spintunnel/greens.hpp"
#include "spintunnel/matching.hpp"
#include "spintunnel/spectral.hpp"

namespace spintunnel {

namespace fs = std::filesystem;
using json = nlohmann::json;

static constexpr const char* kVersion = "0.1.0";

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Spectrum: return "spectrum";
    case ExperimentKind::Match: return "match";
    case ExperimentKind::Tunnel: return "tunnel";
    case ExperimentKind::Greens: return "greens";
    case ExperimentKind::Minami: return "minami";
    case ExperimentKind::Correlator: return "correlator";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (ExperimentKind k :
       {ExperimentKind::Spectrum, ExperimentKind::Match, ExperimentKind::Tunnel,
        ExperimentKind::Greens, ExperimentKind::Minami,
        ExperimentKind::Correlator})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("kind: unknown experiment kind '" + s + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  }
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
  }
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, double>)
      out += format_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "kind") c.kind = experiment_kind_from_string(val);
    else if (key == "dim") c.dim = static_cast<int>(parse_int(key, val));
    else if (key == "radius") c.radius = static_cast<int>(parse_int(key, val));
    else if (key == "gamma") c.gamma = parse_double(key, val);
    else if (key == "g") c.g = parse_double(key, val);
    else if (key == "W") c.W = parse_double(key, val);
    else if (key == "zeta") c.zeta = val;
    else if (key == "base_seed")
      c.base_seed = static_cast<std::uint64_t>(parse_int(key, val));
    else if (key == "n_seeds") c.n_seeds = static_cast<int>(parse_int(key, val));
    else if (key == "u0") {
      c.u0.clear();
      for (const auto& t : split(val, ','))
        c.u0.push_back(static_cast<int>(parse_int(key, t)));
    } else if (key == "k_max") c.k_max = static_cast<int>(parse_int(key, val));
    else if (key == "beta") c.beta = parse_double(key, val);
    else if (key == "alpha") c.alpha = parse_double(key, val);
    else if (key == "epsilon") c.epsilon = parse_double(key, val);
    else if (key == "min_center_distance")
      c.min_center_distance = parse_double(key, val);
    else if (key == "gap_floor") c.gap_floor = parse_double(key, val);
    else if (key == "overlap_min") c.overlap_min = parse_double(key, val);
    else if (key == "points_per_period")
      c.points_per_period = static_cast<int>(parse_int(key, val));
    else if (key == "window_points")
      c.window_points = static_cast<int>(parse_int(key, val));
    else if (key == "window_fraction")
      c.window_fraction = parse_double(key, val);
    else if (key == "n_max_periods")
      c.n_max_periods = static_cast<int>(parse_int(key, val));
    else if (key == "s") c.s = parse_double(key, val);
    else if (key == "energy") c.energy = parse_double(key, val);
    else if (key == "eta_im") c.eta_im = parse_double(key, val);
    else if (key == "distances") {
      c.distances.clear();
      for (const auto& t : split(val, ','))
        c.distances.push_back(static_cast<int>(parse_int(key, t)));
    } else if (key == "boundary_margin")
      c.boundary_margin = static_cast<int>(parse_int(key, val));
    else if (key == "t_min") c.t_min = parse_double(key, val);
    else if (key == "t_max") c.t_max = parse_double(key, val);
    else if (key == "n_t") c.n_t = static_cast<int>(parse_int(key, val));
    else if (key == "epsilons") {
      c.epsilons.clear();
      for (const auto& t : split(val, ','))
        c.epsilons.push_back(parse_double(key, t));
    } else if (key == "dump_vectors") {
      if (val == "true") c.dump_vectors = true;
      else if (val == "false") c.dump_vectors = false;
      else throw std::invalid_argument("dump_vectors: expected true or false");
    } else if (key == "out") c.out_dir = val;
    else
      throw std::invalid_argument("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const ExperimentConfig& c) {
  std::string out;
  out += "kind = " + to_string(c.kind) + "\n";
  out += "dim = " + std::to_string(c.dim) + "\n";
  out += "radius = " + std::to_string(c.radius) + "\n";
  out += "gamma = " + format_double(c.gamma) + "\n";
  out += "g = " + format_double(c.g) + "\n";
  out += "W = " + format_double(c.W) + "\n";
  out += "zeta = " + c.zeta + "\n";
  out += "base_seed = " + std::to_string(c.base_seed) + "\n";
  out += "n_seeds = " + std::to_string(c.n_seeds) + "\n";
  out += "u0 = " + join(c.u0) + "\n";
  out += "k_max = " + std::to_string(c.k_max) + "\n";
  out += "beta = " + format_double(c.beta) + "\n";
  out += "alpha = " + format_double(c.alpha) + "\n";
  out += "epsilon = " + format_double(c.epsilon) + "\n";
  out += "min_center_distance = " + format_double(c.min_center_distance) + "\n";
  out += "gap_floor = " + format_double(c.gap_floor) + "\n";
  out += "overlap_min = " + format_double(c.overlap_min) + "\n";
  out += "points_per_period = " + std::to_string(c.points_per_period) + "\n";
  out += "window_points = " + std::to_string(c.window_points) + "\n";
  out += "window_fraction = " + format_double(c.window_fraction) + "\n";
  out += "n_max_periods = " + std::to_string(c.n_max_periods) + "\n";
  out += "s = " + format_double(c.s) + "\n";
  out += "energy = " + format_double(c.energy) + "\n";
  out += "eta_im = " + format_double(c.eta_im) + "\n";
  out += "distances = " + join(c.distances) + "\n";
  out += "boundary_margin = " + std::to_string(c.boundary_margin) + "\n";
  out += "t_min = " + format_double(c.t_min) + "\n";
  out += "t_max = " + format_double(c.t_max) + "\n";
  out += "n_t = " + std::to_string(c.n_t) + "\n";
  out += "epsilons = " + join(c.epsilons) + "\n";
  out += std::string("dump_vectors = ") + (c.dump_vectors ? "true" : "false") +
         "\n";
  out += "out = " + c.out_dir + "\n";
  return out;
}

ModelParams ExperimentConfig::model_params() const {
  ModelParams p;
  p.gamma = gamma;
  p.g = g;
  if (zeta == "delta0") {
    p.zeta = SparseVec::delta(Coord(dim, 0));
  } else {
    for (const auto& term : split(zeta, ';')) {
      if (term.empty()) continue;
      const auto colon = term.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("zeta: expected 'x1,..,xd:amp' terms");
      Coord x;
      for (const auto& t : split(term.substr(0, colon), ','))
        x.push_back(static_cast<int>(parse_int("zeta", t)));
      if (static_cast<int>(x.size()) != dim)
        throw std::invalid_argument("zeta: site dimension mismatch");
      p.zeta.terms.emplace_back(x, parse_double("zeta", term.substr(colon + 1)));
    }
  }
  p.validate();
  return p;
}

DisorderSpec ExperimentConfig::disorder(std::uint64_t seed) const {
  return DisorderSpec::uniform(W, seed);
}

LatticeBox ExperimentConfig::host_box() const {
  return LatticeBox(dim, Coord(dim, 0), radius);
}

void ExperimentConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("dim: must be >= 1");
  if (radius < 1) throw std::invalid_argument("radius: must be >= 1");
  if (!(W > 0)) throw std::invalid_argument("W: must be positive");
  if (n_seeds < 1) throw std::invalid_argument("n_seeds: must be >= 1");
  if (!(s > 0 && s < 1)) throw std::invalid_argument("s: must lie in (0,1)");
  if (!(eta_im > 0)) throw std::invalid_argument("eta_im: must be positive");
  if (!(beta > 0 && beta < 1))
    throw std::invalid_argument("beta: must lie in (0,1)");
  if (!(alpha > 0 && alpha < 1))
    throw std::invalid_argument("alpha: must lie in (0,1)");
  if (!(epsilon >= 0)) throw std::invalid_argument("epsilon: must be >= 0");
  if (k_max < 1) throw std::invalid_argument("k_max: must be >= 1");
  if (static_cast<int>(u0.size()) != dim)
    throw std::invalid_argument("u0: dimension mismatch");
  if (points_per_period < 2)
    throw std::invalid_argument("points_per_period: must be >= 2");
  if (window_points < 2)
    throw std::invalid_argument("window_points: must be >= 2");
  if (n_t < 2) throw std::invalid_argument("n_t: must be >= 2");
  if (!(t_max > t_min) || !(t_min > 0))
    throw std::invalid_argument("t_min/t_max: need 0 < t_min < t_max");
  for (double e : epsilons)
    if (!(e > 0)) throw std::invalid_argument("epsilons: must be positive");
  for (int r : distances)
    if (r < 1) throw std::invalid_argument("distances: must be >= 1");
  host_box();  // throws if the box itself is malformed
  model_params();
  const long n_sites = static_cast<long>(host_box().n_sites());
  if (2 * n_sites > kMaxDenseDim)
    throw std::invalid_argument("radius: spin system exceeds the dense cap");
}

// ---------------------------------------------------------------------------
// run infrastructure

int configured_threads() {
  if (const char* env = std::getenv("SPINTUNNEL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

int RunManifest::failures() const {
  int f = 0;
  for (const auto& s : seed_status)
    if (!s.ok) ++f;
  return f;
}

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["kind"] = kind;
  j["config"] = config_echo;
  json seeds = json::array();
  for (const auto& s : seed_status) {
    json e;
    e["seed"] = s.seed;
    e["ok"] = s.ok;
    if (!s.ok) e["error"] = s.error;
    seeds.push_back(e);
  }
  j["seeds"] = seeds;
  j["output_hashes"] = output_hashes;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

namespace {

class Run {
 public:
  explicit Run(const ExperimentConfig& c) : config_(c) {
    manifest_.config_echo = render_config(c);
    manifest_.version = kVersion;
    manifest_.kind = to_string(c.kind);
    fs::create_directories(c.out_dir);
  }

  void write_output(const std::string& name, const std::string& bytes) {
    const fs::path path = fs::path(config_.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    manifest_.output_hashes[name] = content_hash(bytes);
  }

  // per-seed worker pool; slot i may only be written by its own task
  template <typename F>
  void for_each_seed(F&& body) {
    const int n = config_.n_seeds;
    manifest_.seed_status.resize(n);
    const int threads = std::min(configured_threads(), n);
    auto task = [&](int first, int last) {
      for (int i = first; i < last; ++i) {
        SeedStatus& st = manifest_.seed_status[i];
        st.seed = derive_seed(config_.base_seed, static_cast<std::uint64_t>(i));
        try {
          body(i, st.seed);
        } catch (const std::exception& e) {
          st.ok = false;
          st.error = e.what();
        }
      }
    };
    if (threads <= 1) {
      task(0, n);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (n + threads - 1) / threads;
      for (int w = 0; w < threads; ++w) {
        const int first = w * chunk;
        const int last = std::min(n, first + chunk);
        if (first < last) pool.emplace_back(task, first, last);
      }
      for (auto& t : pool) t.join();
    }
  }

  void time_stage(const std::string& name, const std::function<void()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    manifest_.wall_clock_seconds[name] =
        std::chrono::duration<double>(t1 - t0).count();
  }

  const ExperimentConfig& config_;
  RunManifest manifest_;
};

// hash of the experiment identity: the canonical config with the output
// location stripped, so relocated reruns keep identical data bytes
std::string config_identity_hash(const ExperimentConfig& c) {
  ExperimentConfig id = c;
  id.out_dir = "";
  return content_hash(render_config(id));
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ",";
    row += cells[i];
  }
  return row + "\n";
}

std::string center_header(int dim, const std::string& prefix) {
  std::string h;
  for (int j = 0; j < dim; ++j) h += "," + prefix + std::to_string(j);
  return h;
}

std::string center_cells(const Coord& x) {
  std::string s;
  for (int c : x) s += "," + std::to_string(c);
  return s;
}

void run_spectrum(Run& run) {
  const ExperimentConfig& c = run.config_;
  const LatticeBox box = c.host_box();
  const ModelParams params = c.model_params();
  std::vector<std::string> rows(c.n_seeds);
  std::vector<std::string> dumps(c.n_seeds);
  const std::string chash = config_identity_hash(c);
  run.for_each_seed([&](int i, std::uint64_t seed) {
    const auto V = sample_potential(box, c.disorder(seed));
    const EigenSystem es = diagonalize(build_H_g(box, params, params.g, V));
    std::string r;
    for (int k = 0; k < es.dim(); ++k) {
      const Coord ctr = localization_center(es.eigenvectors.col(k), box);
      r += csv_row({std::to_string(seed), chash, std::to_string(k),
                    format_double(es.eigenvalues(k)) + center_cells(ctr),
                    format_double(participation_ratio(es.eigenvectors.col(k)))});
    }
    rows[i] = r;
    if (c.dump_vectors) {
      std::string bin = "STVEC001";
      auto put_u64 = [&bin](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) bin += static_cast<char>((v >> (8 * b)) & 0xFF);
      };
      put_u64(static_cast<std::uint64_t>(es.dim()));
      put_u64(static_cast<std::uint64_t>(es.dim()));
      for (int col = 0; col < es.dim(); ++col)
        for (int rr = 0; rr < es.dim(); ++rr) {
          const double v = es.eigenvectors(rr, col);
          const char* p = reinterpret_cast<const char*>(&v);
          bin.append(p, 8);  // little-endian f64, column-major
        }
      dumps[i] = bin;
    }
  });
  std::string csv = "seed,config_hash,index,eigenvalue" +
                    center_header(c.dim, "center_") + ",participation\n";
  for (const auto& r : rows) csv += r;
  run.write_output("eigs.csv", csv);
  if (c.dump_vectors)
    for (int i = 0; i < c.n_seeds; ++i)
      run.write_output("vectors_" + std::to_string(i) + ".bin", dumps[i]);
}

void run_minami(Run& run) {
  const ExperimentConfig& c = run.config_;
  const LatticeBox box = c.host_box();
  std::vector<double> delta(c.n_seeds, -1);
  run.for_each_seed([&](int i, std::uint64_t seed) {
    const auto V = sample_potential(box, c.disorder(seed));
    const EigenSystem es = diagonalize(build_H(box, c.gamma, V));
    delta[i] = min_spacing(es.eigenvalues);
  });
  const std::string chash = config_identity_hash(c);
  std::string spacing = "seed,config_hash,box_sites,delta_min\n";
  for (int i = 0; i < c.n_seeds; ++i)
    spacing += csv_row({std::to_string(run.manifest_.seed_status[i].seed),
                        chash, std::to_string(box.n_sites()),
                        format_double(delta[i])});
  run.write_output("spacing.csv", spacing);

  std::string stat = "base_seed,config_hash,epsilon,p_hat,hits,n,ci_low,ci_high\n";
  for (double eps : c.epsilons) {
    int hits = 0, n = 0;
    for (int i = 0; i < c.n_seeds; ++i) {
      if (delta[i] < 0) continue;  // failed seed
      ++n;
      if (delta[i] < eps) ++hits;
    }
    const BinomialEstimate e = binomial_estimate(hits, n);
    stat += csv_row({std::to_string(c.base_seed), chash,
                     format_double(eps), format_double(e.p_hat),
                     std::to_string(e.hits), std::to_string(e.n),
                     format_double(e.ci_low), format_double(e.ci_high)});
    run.manifest_.summary["p_hat_eps_" + format_double(eps)] = e.p_hat;
  }
  run.write_output("minami.csv", stat);
}

void run_match(Run& run) {
  const ExperimentConfig& c = run.config_;
  const ModelParams params = c.model_params();
  const ScaleSequence seq = scale_sequence(c.u0, c.k_max, c.beta, params.zeta);
  // host box: origin-centered, covering every fattened scale box
  int host_radius = 0;
  for (const auto& bp : seq.boxes_plus)
    host_radius = std::max(host_radius, linf_norm(bp.center()) + bp.radius());
  host_radius += 4;
  const LatticeBox host(c.dim, Coord(c.dim, 0), host_radius);
  if (host.n_sites() > static_cast<std::size_t>(kMaxDenseDim))
    throw std::invalid_argument("u0/k_max: host box exceeds the dense cap");

  struct SeedRows {
    std::string pairs, spacing, psi, audit;
  };
  std::vector<SeedRows> rows(c.n_seeds);
  const std::string chash = config_identity_hash(c);
  run.for_each_seed([&](int i, std::uint64_t seed) {
    const auto V = sample_potential(host, c.disorder(seed));
    const EigenSystem plus =
        diagonalize(build_H_g(host, params, params.g, V));
    const EigenSystem minus =
        diagonalize(build_H_g(host, params, -params.g, V));
    const LocalizationProfile plus_prof = localization_profile(plus);
    const LocalizationProfile minus_prof = localization_profile(minus);
    SeedRows& out = rows[i];
    for (int k = 0; k < c.k_max; ++k) {
      const LatticeBox& box = seq.boxes[k];
      const LatticeBox& box_plus = seq.boxes_plus[k];
      const LatticeBox& box_minus = seq.boxes_minus[k];
      // outer operator: Dirichlet restriction on the same realization
      std::vector<double> Vp(box_plus.n_sites());
      for (std::size_t m = 0; m < Vp.size(); ++m)
        Vp[m] = V[host.index_of(box_plus.site(m))];
      const EigenSystem outer = diagonalize(build_H(box_plus, c.gamma, Vp));
      const double outer_spacing = min_spacing(outer.eigenvalues);
      out.spacing += csv_row({std::to_string(seed), chash, std::to_string(k + 1),
                              std::to_string(box_plus.n_sites()),
                              format_double(outer_spacing)});
      for (int sign : {+1, -1}) {
        const EigenSystem& es = sign > 0 ? plus : minus;
        const LocalizationProfile& prof = sign > 0 ? plus_prof : minus_prof;
        const LocalIndexSet local = local_index_set(es, prof, box);
        const SpectralMap map = build_psi_map(es, local, outer);
        for (const PsiAssignment& a : map.assignments)
          out.psi += csv_row(
              {std::to_string(seed), chash, std::to_string(k + 1),
               std::to_string(sign), std::to_string(a.inner_index),
               format_double(a.lambda), format_double(a.eta),
               format_double(a.gap), format_double(a.residual_norm),
               map.injective ? "1" : "0"});
      }
      const auto pairs = find_corresponding_pairs(plus, plus_prof, minus,
                                                  minus_prof, box, c.epsilon);
      for (const auto& p : pairs)
        out.pairs += csv_row(
            {std::to_string(seed), chash, std::to_string(k + 1),
             std::to_string(p.index_plus), std::to_string(p.index_minus),
             format_double(p.overlap),
             format_double(p.eigenvalue_gap) + center_cells(p.center_plus)});
      const PairCountAudit audit =
          pair_count_audit(static_cast<int>(pairs.size()), box, box_plus,
                           box_minus, outer_spacing, c.alpha);
      const char* status =
          audit.status == AuditStatus::Pass        ? "pass"
          : audit.status == AuditStatus::Fail      ? "fail"
          : audit.status == AuditStatus::Vacuous   ? "vacuous"
                                                   : "hypothesis_failed";
      out.audit += csv_row({std::to_string(seed), chash, std::to_string(k + 1),
                            status, std::to_string(audit.count),
                            format_double(audit.lower_bound),
                            format_double(audit.outer_min_spacing),
                            format_double(audit.spacing_threshold)});
    }
  });

  std::string pairs_csv = "seed,config_hash,k,index_plus,index_minus,overlap,gap" +
                          center_header(c.dim, "center_") + "\n";
  std::string spacing_csv = "seed,config_hash,k,box_sites,delta_min\n";
  std::string psi_csv =
      "seed,config_hash,k,g_sign,inner_index,lambda,eta,gap,residual_norm,injective\n";
  std::string audit_csv =
      "seed,config_hash,k,status,count,lower_bound,outer_min_spacing,spacing_threshold\n";
  for (const auto& r : rows) {
    pairs_csv += r.pairs;
    spacing_csv += r.spacing;
    psi_csv += r.psi;
    audit_csv += r.audit;
  }
  run.write_output("pairs.csv", pairs_csv);
  run.write_output("spacing.csv", spacing_csv);
  run.write_output("psi.csv", psi_csv);
  run.write_output("audit.csv", audit_csv);
}

void run_tunnel(Run& run) {
  const ExperimentConfig& c = run.config_;
  const LatticeBox box = c.host_box();
  const ModelParams params = c.model_params();
  // single-realization experiment: the base seed is the disorder seed
  run.manifest_.seed_status.push_back({c.base_seed, true, ""});
  const auto V = sample_potential(box, c.disorder(c.base_seed));
  const EigenSystem plus = diagonalize(build_H_g(box, params, params.g, V));
  const EigenSystem minus = diagonalize(build_H_g(box, params, -params.g, V));
  const LocalizationProfile plus_prof = localization_profile(plus);
  const LocalizationProfile minus_prof = localization_profile(minus);
  const auto pairs = find_corresponding_pairs(plus, plus_prof, minus,
                                              minus_prof, box, c.epsilon);
  const CorrespondencePair* chosen = nullptr;
  for (const auto& p : pairs) {
    if (p.overlap < c.overlap_min) continue;
    if (p.eigenvalue_gap < c.gap_floor) continue;
    if (l1_norm(p.center_plus) < c.min_center_distance) continue;
    if (!chosen || p.overlap > chosen->overlap) chosen = &p;
  }
  if (!chosen)
    throw std::runtime_error(
        "no corresponding pair meets the overlap/gap/distance thresholds");

  const EigenSystem spin_es = diagonalize(build_spin_H(box, params, V));
  GridSpec grid{c.points_per_period, c.window_points, c.window_fraction,
                c.n_max_periods};
  const TunnelingTrace trace = spin_flip_experiment(
      spin_es, plus, minus, *chosen, grid, c.overlap_min);

  const std::string chash = config_identity_hash(c);
  std::string csv = "seed,config_hash,t,fidelity_up,fidelity_down,containment\n";
  double fid_down_tau = 0, fid_up_2tau = 0;
  double best_tau = 1e300, best_2tau = 1e300;
  for (const auto& s : trace.samples) {
    csv += csv_row({std::to_string(c.base_seed), chash,
                    format_double(s.t), format_double(s.fidelity_up),
                    format_double(s.fidelity_down),
                    format_double(s.containment)});
    if (std::abs(s.t - trace.tau) < best_tau) {
      best_tau = std::abs(s.t - trace.tau);
      fid_down_tau = s.fidelity_down;
    }
    if (std::abs(s.t - 2 * trace.tau) < best_2tau) {
      best_2tau = std::abs(s.t - 2 * trace.tau);
      fid_up_2tau = s.fidelity_up;
    }
  }
  run.write_output("trace.csv", csv);
  auto& sum = run.manifest_.summary;
  sum["tau"] = trace.tau;
  sum["overlap"] = chosen->overlap;
  sum["eigenvalue_gap"] = chosen->eigenvalue_gap;
  sum["center_distance"] = l1_norm(chosen->center_plus);
  sum["fidelity_down_at_tau"] = fid_down_tau;
  sum["fidelity_up_at_2tau"] = fid_up_2tau;
  sum["min_containment"] = trace.min_containment;
  sum["max_defect"] = trace.max_defect;
  sum["defect_bound"] = trace.defect_bound;
}

std::vector<std::pair<SpinSite, SpinSite>> greens_pairs(
    const ExperimentConfig& c) {
  const LatticeBox box = c.host_box();
  std::vector<std::pair<SpinSite, SpinSite>> pairs;
  auto site_on_axis = [&](int coord) {
    Coord x(c.dim, 0);
    x[0] = coord;
    return x;
  };
  const int reach = box.radius() - c.boundary_margin;
  for (int r : c.distances) {
    const int a = r / 2;
    const int b = r - a;
    if (std::max(a, b) > reach)
      throw std::invalid_argument(
          "distances: pair escapes the boundary margin");
    pairs.push_back({{site_on_axis(-a), +1}, {site_on_axis(b), +1}});
    pairs.push_back({{site_on_axis(a), +1}, {site_on_axis(-b), -1}});
  }
  return pairs;
}

void run_greens(Run& run) {
  const ExperimentConfig& c = run.config_;
  const MomentEstimate est = fractional_moment_scan(
      c.host_box(), c.model_params(), c.disorder(0), c.s,
      {c.energy, c.eta_im}, greens_pairs(c), c.n_seeds, c.base_seed,
      configured_threads());
  run.manifest_.seed_status.resize(c.n_seeds);
  for (int i = 0; i < c.n_seeds; ++i)
    run.manifest_.seed_status[i] = {
        derive_seed(c.base_seed, static_cast<std::uint64_t>(i)), true, ""};

  const std::string chash = config_identity_hash(c);
  std::string csv =
      "base_seed,config_hash,s,E,eta_im,g,d_gamma_bin,cross_spin,mean,stderr,n\n";
  for (const MomentBin& b : est.bins)
    csv += csv_row({std::to_string(c.base_seed), chash,
                    format_double(c.s), format_double(c.energy),
                    format_double(c.eta_im), format_double(c.g),
                    std::to_string(b.d_gamma), b.cross_spin ? "1" : "0",
                    format_double(b.mean), format_double(b.stderr_mean),
                    std::to_string(b.n)});
  run.write_output("moments.csv", csv);

  json fitj;
  auto fit_to_json = [](const RateFit& f) {
    json j;
    j["ok"] = f.ok;
    j["log_A"] = f.log_A;
    j["mu"] = f.mu;
    j["mu_stderr"] = f.mu_stderr;
    j["mu_ci"] = {f.mu_ci_low, f.mu_ci_high};
    j["n_bins"] = f.n_bins;
    return j;
  };
  fitj["s"] = est.s;
  fitj["g"] = est.g;
  fitj["joint"] = fit_to_json(est.fit_all);
  fitj["same_spin"] = fit_to_json(est.fit_same_spin);
  fitj["cross_spin"] = fit_to_json(est.fit_cross_spin);
  fitj["apriori_envelope"] = est.apriori_envelope;
  fitj["apriori_violated"] = est.apriori_violated;
  run.write_output("fit.json", fitj.dump(2) + "\n");
  run.manifest_.summary["mu_same_spin"] = est.fit_same_spin.mu;
  run.manifest_.summary["mu_cross_spin"] = est.fit_cross_spin.mu;
  run.manifest_.summary["apriori_violated"] = est.apriori_violated ? 1 : 0;
}

void run_correlator(Run& run) {
  const ExperimentConfig& c = run.config_;
  const LatticeBox box = c.host_box();
  const ModelParams params = c.model_params();
  const int n_r = static_cast<int>(c.distances.size());
  for (int r : c.distances)
    if (r > box.radius() - c.boundary_margin)
      throw std::invalid_argument("distances: site escapes the boundary margin");
  Eigen::MatrixXd sup_rate(n_r, c.n_seeds);
  Eigen::MatrixXd sup_amp(n_r, c.n_seeds);
  Eigen::MatrixXd certified(n_r, c.n_seeds);
  run.for_each_seed([&](int i, std::uint64_t seed) {
    const auto V = sample_potential(box, c.disorder(seed));
    const EigenSystem es = diagonalize(build_spin_H(box, params, V));
    for (int k = 0; k < n_r; ++k) {
      Coord x(c.dim, 0);
      x[0] = c.distances[k];
      const CorrelatorResult res =
          spin_correlator(es, x, x, {c.t_min, c.t_max, c.n_t});
      sup_amp(k, i) = res.sup_amp;
      sup_rate(k, i) = res.sup_rate;
      certified(k, i) = res.certified_upper_bound;
    }
  });
  const std::string chash = config_identity_hash(c);
  std::string csv =
      "seed,config_hash,r,d_gamma,sup_amp,sup_rate,certified_upper_bound\n";
  for (int i = 0; i < c.n_seeds; ++i)
    for (int k = 0; k < n_r; ++k)
      csv += csv_row({std::to_string(run.manifest_.seed_status[i].seed), chash,
                      std::to_string(c.distances[k]),
                      std::to_string(1 + 2 * c.distances[k]),
                      format_double(sup_amp(k, i)),
                      format_double(sup_rate(k, i)),
                      format_double(certified(k, i))});
  run.write_output("correlator.csv", csv);

  // decay fit of mean sup_rate against 2r
  std::vector<MomentBin> bins;
  for (int k = 0; k < n_r; ++k) {
    MomentBin b;
    b.d_gamma = 2 * c.distances[k];
    b.n = c.n_seeds;
    b.mean = sup_rate.row(k).mean();
    const double var =
        (sup_rate.row(k).array() - b.mean).square().sum() /
        std::max(1, c.n_seeds - 1);
    b.stderr_mean = std::sqrt(var / c.n_seeds);
    bins.push_back(b);
  }
  const RateFit fit = fit_decay_rate(bins);
  run.manifest_.summary["rate_decay_mu"] = fit.mu;
  run.manifest_.summary["rate_decay_mu_ci_low"] = fit.mu_ci_low;
  run.manifest_.summary["rate_decay_mu_ci_high"] = fit.mu_ci_high;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  Run run(config);
  run.time_stage("experiment", [&] {
    switch (config.kind) {
      case ExperimentKind::Spectrum: run_spectrum(run); break;
      case ExperimentKind::Minami: run_minami(run); break;
      case ExperimentKind::Match: run_match(run); break;
      case ExperimentKind::Tunnel: run_tunnel(run); break;
      case ExperimentKind::Greens: run_greens(run); break;
      case ExperimentKind::Correlator: run_correlator(run); break;
    }
  });
  const fs::path path = fs::path(config.out_dir) / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  const std::string j = run.manifest_.to_json();
  out.write(j.data(), static_cast<std::streamsize>(j.size()));
  return run.manifest_;
}

void SummaryStat::add(double v) {
  if (count == 0) {
    min = max = v;
  } else {
    min = std::min(min, v);
    max = std::max(max, v);
  }
  ++count;
  sum += v;
  sumsq += v * v;
}

EnsembleSummary aggregate(const std::vector<EnsembleSummary>& partials) {
  EnsembleSummary total;
  bool first = true;
  for (const auto& p : partials) {
    if (first) {
      total.kind = p.kind;
      first = false;
    } else if (p.kind != total.kind) {
      throw std::invalid_argument("aggregate: mixed experiment kinds");
    }
    for (const auto& [name, st] : p.stats) {
      SummaryStat& t = total.stats[name];
      if (t.count == 0) {
        t = st;
      } else if (st.count > 0) {
        t.min = std::min(t.min, st.min);
        t.max = std::max(t.max, st.max);
        t.count += st.count;
        t.sum += st.sum;
        t.sumsq += st.sumsq;
      }
    }
  }
  return total;
}

}  // namespace spintunnel
