#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rpca/contamination.hpp"
#include "rpca/oracle.hpp"
#include "rpca/robust_pca.hpp"
#include "rpca/streaming.hpp"

namespace rpca::experiment {

using nlohmann::json;

/// Malformed or invalid configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run failed for a specific (seed, method) (CLI exit code 1).
class RunError : public std::runtime_error {
 public:
  RunError(std::uint64_t seed, std::string method, const std::string& what)
      : std::runtime_error("seed " + std::to_string(seed) + ", method " + method + ": " + what),
        seed_(seed),
        method_(std::move(method)) {}
  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& method() const noexcept { return method_; }

 private:
  std::uint64_t seed_;
  std::string method_;
};

enum class Mode { Batch, Streaming, Both };

struct ExperimentConfig {
  InlierSpec inlier;
  AdversarySpec adversary;
  AlgoConfig algo;
  Mode mode = Mode::Batch;
  bool naive_baseline = false;
  bool oracle_baseline = false;
  std::vector<std::uint64_t> seeds{0};
  std::size_t n = 1000;
  std::uint64_t stream_budget = 0;
  double r_radius = 0.0;  // 0 = family default
  std::string output_path;
  json raw;               // the validated input, echoed into reports

  bool runs_batch() const { return mode != Mode::Streaming; }
  bool runs_streaming() const { return mode != Mode::Batch; }
  double resolved_r() const {
    if (r_radius > 0.0) return r_radius;
    return inlier.family == InlierFamily::BoundedSphereMix ? inlier.radius_r() : 1.0;
  }
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError("field '" + path + "': expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + (path.empty() ? k : path + "." + k) + "'");
}

template <class T>
T field(const json& j, const char* key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + (path.empty() ? std::string(key) : path + "." + key) + "': wrong type");
  }
}

template <class T>
T required(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError("missing field '" + (path.empty() ? std::string(key) : path + "." + key) + "'");
  return field<T>(j, key, path, T{});
}

inline InlierSpec parse_inlier(const json& j) {
  check_keys(j, {"family", "dim", "base_diag", "spikes"}, "inlier");
  InlierSpec s;
  const auto fam = field<std::string>(j, "family", "inlier", "gaussian");
  if (fam == "gaussian") s.family = InlierFamily::Gaussian;
  else if (fam == "bounded_spheremix") s.family = InlierFamily::BoundedSphereMix;
  else throw ConfigError("field 'inlier.family': expected gaussian or bounded_spheremix, got '" + fam + "'");
  const auto dim = required<long long>(j, "dim", "inlier");
  if (dim < 1 || dim > 100000) throw ConfigError("field 'inlier.dim': must be in [1, 100000]");
  s.dim = static_cast<std::size_t>(dim);
  s.base_diag = field<std::vector<double>>(j, "base_diag", "inlier", {});
  if (j.contains("spikes")) {
    if (!j["spikes"].is_array()) throw ConfigError("field 'inlier.spikes': expected an array");
    for (std::size_t i = 0; i < j["spikes"].size(); ++i) {
      const auto& sp = j["spikes"][i];
      const std::string p = "inlier.spikes[" + std::to_string(i) + "]";
      check_keys(sp, {"axis", "direction", "variance"}, p);
      Spike spike;
      spike.variance = required<double>(sp, "variance", p);
      if (sp.contains("axis") == sp.contains("direction")) throw ConfigError("field '" + p + "': give exactly one of axis, direction");
      if (sp.contains("axis")) {
        const auto ax = required<long long>(sp, "axis", p);
        if (ax < 0 || static_cast<std::size_t>(ax) >= s.dim) throw ConfigError("field '" + p + ".axis': out of range");
        spike.direction = unit_vector(s.dim, static_cast<std::size_t>(ax));
      } else {
        spike.direction = required<std::vector<double>>(sp, "direction", p);
      }
      s.spikes.push_back(std::move(spike));
    }
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("inlier: ") + e.what());
  }
  return s;
}

inline AdversarySpec parse_adversary(const json& j) {
  check_keys(j, {"kind", "rate", "spike_axis", "magnitude", "hidden_dirs", "hide_multiplier"}, "adversary");
  AdversarySpec a;
  const auto kind = field<std::string>(j, "kind", "adversary", "none");
  if (kind == "none") a.kind = AdversaryKind::None;
  else if (kind == "orthogonal_spike") a.kind = AdversaryKind::OrthogonalSpike;
  else if (kind == "multi_direction_hide") a.kind = AdversaryKind::MultiDirectionHide;
  else if (kind == "schatten_blind") a.kind = AdversaryKind::SchattenBlind;
  else throw ConfigError("field 'adversary.kind': unknown adversary '" + kind + "'");
  a.rate = field<double>(j, "rate", "adversary", 0.0);
  a.spike_axis = field<int>(j, "spike_axis", "adversary", -1);
  a.magnitude = field<double>(j, "magnitude", "adversary", 2.0);
  a.hidden_dirs = field<int>(j, "hidden_dirs", "adversary", 2);
  a.hide_multiplier = field<double>(j, "hide_multiplier", "adversary", 1.5);
  try {
    a.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("adversary: ") + e.what());
  }
  return a;
}

inline AlgoConfig parse_algo(const json& j, double default_eps) {
  check_keys(j,
             {"eps", "gamma", "gamma_max", "c_outer", "c_inner", "t_end", "k_end", "t_end_cap", "delta_slack", "boost_reps",
              "cert_failure_prob", "c_acc", "c_pi", "c_cert", "c_q", "c_m", "c_batch", "batch_size", "mean_batch",
              "mean_batch_cap", "batch_size_cap", "stream_reps", "memory_budget", "record_potential", "threads"},
             "algo");
  AlgoConfig c;
  const std::string p = "algo";
  c.eps = field<double>(j, "eps", p, default_eps);
  c.gamma = field<double>(j, "gamma", p, AlgoConfig::default_gamma(c.eps));
  c.gamma_max = field<double>(j, "gamma_max", p, c.gamma_max);
  c.c_outer = field<double>(j, "c_outer", p, c.c_outer);
  c.c_inner = field<double>(j, "c_inner", p, c.c_inner);
  c.t_end = field<int>(j, "t_end", p, c.t_end);
  c.k_end = field<int>(j, "k_end", p, c.k_end);
  c.t_end_cap = field<int>(j, "t_end_cap", p, c.t_end_cap);
  c.delta_slack = field<double>(j, "delta_slack", p, c.delta_slack);
  c.boost_reps = field<int>(j, "boost_reps", p, c.boost_reps);
  c.cert_failure_prob = field<double>(j, "cert_failure_prob", p, c.cert_failure_prob);
  c.c_acc = field<double>(j, "c_acc", p, c.c_acc);
  c.c_pi = field<double>(j, "c_pi", p, c.c_pi);
  c.c_cert = field<double>(j, "c_cert", p, c.c_cert);
  c.c_q = field<double>(j, "c_q", p, c.c_q);
  c.c_m = field<double>(j, "c_m", p, c.c_m);
  c.c_batch = field<double>(j, "c_batch", p, c.c_batch);
  c.batch_size = field<std::size_t>(j, "batch_size", p, c.batch_size);
  c.mean_batch = field<std::size_t>(j, "mean_batch", p, c.mean_batch);
  c.mean_batch_cap = field<std::size_t>(j, "mean_batch_cap", p, c.mean_batch_cap);
  c.batch_size_cap = field<std::size_t>(j, "batch_size_cap", p, c.batch_size_cap);
  c.stream_reps = field<int>(j, "stream_reps", p, c.stream_reps);
  c.memory_budget = field<std::size_t>(j, "memory_budget", p, c.memory_budget);
  c.record_potential = field<bool>(j, "record_potential", p, c.record_potential);
  c.threads = field<unsigned>(j, "threads", p, c.threads);
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("algo: ") + e.what());
  }
  return c;
}

}  // namespace detail

/// Parses and validates a config document. Syntax errors carry line/column.
inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  detail::check_keys(j, {"schema_version", "inlier", "adversary", "algo", "mode", "baselines", "seeds", "n",
                         "stream_budget", "r_radius", "output_path"},
                     "");
  const int version = detail::field<int>(j, "schema_version", "", 1);
  if (version != 1) throw ConfigError("field 'schema_version': unsupported version " + std::to_string(version));

  ExperimentConfig c;
  c.raw = j;
  if (!j.contains("inlier")) throw ConfigError("missing field 'inlier'");
  c.inlier = detail::parse_inlier(j["inlier"]);
  c.adversary = j.contains("adversary") ? detail::parse_adversary(j["adversary"]) : AdversarySpec{};
  c.algo = detail::parse_algo(j.contains("algo") ? j["algo"] : json::object(), c.adversary.rate);

  const auto mode = detail::field<std::string>(j, "mode", "", "batch");
  if (mode == "batch") c.mode = Mode::Batch;
  else if (mode == "streaming") c.mode = Mode::Streaming;
  else if (mode == "both") c.mode = Mode::Both;
  else throw ConfigError("field 'mode': expected batch, streaming or both, got '" + mode + "'");

  for (const auto& b : detail::field<std::vector<std::string>>(j, "baselines", "", {})) {
    if (b == "naive_pca") c.naive_baseline = true;
    else if (b == "oracle") c.oracle_baseline = true;
    else throw ConfigError("field 'baselines': unknown baseline '" + b + "'");
  }
  if (c.oracle_baseline && c.inlier.dim > 256) throw ConfigError("field 'baselines': oracle requires dim <= 256");
  if (c.inlier.dim > 256) throw ConfigError("field 'inlier.dim': approx ratios need the dense oracle, dim <= 256");
  c.seeds = detail::field<std::vector<std::uint64_t>>(j, "seeds", "", {0});
  if (c.seeds.empty()) throw ConfigError("field 'seeds': at least one seed required");
  const auto n = detail::field<long long>(j, "n", "", 1000);
  if (n < 1) throw ConfigError("field 'n': must be >= 1");
  c.n = static_cast<std::size_t>(n);
  c.stream_budget = detail::field<std::uint64_t>(j, "stream_budget", "", 0);
  c.r_radius = detail::field<double>(j, "r_radius", "", 0.0);
  c.output_path = detail::field<std::string>(j, "output_path", "", "");
  if (c.runs_streaming()) {
    AlgoConfig strict = c.algo;
    strict.strict_gamma = true;
    try {
      strict.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("algo (streaming): ") + e.what());
    }
    if (!(c.algo.eps > 0.0)) throw ConfigError("field 'algo.eps': streaming mode requires eps > 0");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

struct ReportRow {
  std::uint64_t seed = 0;
  std::string method;
  double approx_ratio = 0.0;
  std::string status;
  double wall_time = 0.0;
  int filters_created = 0;
  std::uint64_t samples_consumed = 0;
  std::size_t peak_resident_scalars = 0;
};

struct Summary {
  std::size_t count = 0;
  double median_ratio = 0.0, iqr_ratio = 0.0;
  double median_time = 0.0, iqr_time = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::map<std::string, Summary> aggregate;
  std::string determinism_hash;
};

/// Linear-interpolated quantile of an unsorted sample.
inline double sample_quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return sample_quantile(std::move(v), 0.5); }

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// FNV-1a over every row field except wall time.
inline std::string determinism_hash(const std::vector<ReportRow>& rows) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& r : rows) {
    mix(std::to_string(r.seed));
    mix(r.method);
    mix(format_double(r.approx_ratio));
    mix(r.status);
    mix(std::to_string(r.filters_created));
    mix(std::to_string(r.samples_consumed));
    mix(std::to_string(r.peak_resident_scalars));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Independent generator streams per (seed, purpose).
inline Rng derive_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

inline double safe_ratio(const Vector& u, const DenseMatrix& sigma) {
  if (u.empty()) return 0.0;
  return std::clamp(oracle::metric_approx_ratio(u, sigma), 0.0, 1.0 + 1e-9);
}

/// All rows for one seed, in a fixed method order.
inline std::vector<ReportRow> run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<ReportRow> rows;
  const DenseMatrix sigma = cfg.inlier.covariance();
  AlgoConfig algo = cfg.algo;
  algo.seed = seed;
  const std::size_t d = cfg.inlier.dim;
  const int p_naive = algo.reference_power(d, algo.resolved_failure_prob(d));
  auto timed = [](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto guard = [&](const char* method, auto&& fn) {
    try {
      fn();
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError(seed, method, e.what());
    }
  };

  if (cfg.runs_batch()) {
    std::optional<PointSet> data;
    guard("generate", [&] {
      Rng gen = derive_rng(seed, 1);
      data = strong_contaminate(gen_inliers(cfg.inlier, cfg.n, gen), cfg.adversary, sigma, gen);
    });
    guard("robust_batch", [&] {
      Rng rng = derive_rng(seed, 2);
      PcaResult r;
      ReportRow row;
      row.seed = seed;
      row.method = "robust_batch";
      row.wall_time = timed([&] { r = robust_pca(*data, algo, rng); });
      row.approx_ratio = safe_ratio(r.u, sigma);
      row.status = to_string(r.status);
      row.filters_created = r.filters_created;
      row.samples_consumed = data->size();
      rows.push_back(row);
    });
    if (cfg.naive_baseline) {
      guard("naive_pca", [&] {
        Rng rng = derive_rng(seed, 3);
        Vector u;
        ReportRow row;
        row.seed = seed;
        row.method = "naive_pca";
        row.wall_time = timed([&] { u = naive_pca(*data, p_naive, rng); });
        row.approx_ratio = safe_ratio(u, sigma);
        row.status = "BASELINE";
        row.samples_consumed = data->size();
        rows.push_back(row);
      });
    }
    if (cfg.oracle_baseline) {
      guard("oracle", [&] {
        ReportRow row;
        row.seed = seed;
        row.method = "oracle";
        Vector u;
        row.wall_time = timed([&] {
          std::vector<double> coords;
          for (std::size_t i = 0; i < data->size(); ++i)
            if (data->label(i) != Label::Outlier) coords.insert(coords.end(), (*data)[i].begin(), (*data)[i].end());
          const PointSet inl(d, std::move(coords));
          u = oracle::dense_spectrum(oracle::dense_second_moment(inl)).vector(0);
        });
        row.approx_ratio = safe_ratio(u, sigma);
        row.status = "BASELINE";
        row.samples_consumed = data->size();
        rows.push_back(row);
      });
    }
  }

  if (cfg.runs_streaming()) {
    guard("robust_streaming", [&] {
      auto src = tv_contaminated_source(cfg.inlier, cfg.adversary, derive_rng(seed, 4)());
      Rng rng = derive_rng(seed, 5);
      AlgoConfig sa = algo;
      sa.max_samples = cfg.stream_budget;
      StreamResult r;
      ReportRow row;
      row.seed = seed;
      row.method = "robust_streaming";
      row.wall_time = timed([&] { r = streaming_robust_pca(*src, sa, cfg.resolved_r(), rng); });
      row.approx_ratio = safe_ratio(r.result.u, sigma);
      row.status = to_string(r.result.status);
      row.filters_created = r.result.filters_created;
      row.samples_consumed = r.stats.samples_consumed;
      row.peak_resident_scalars = r.stats.peak_resident_scalars;
      rows.push_back(row);
    });
    if (cfg.naive_baseline) {
      guard("naive_streaming", [&] {
        auto src = tv_contaminated_source(cfg.inlier, cfg.adversary, derive_rng(seed, 6)());
        CountingSource counted(*src, cfg.stream_budget);
        Rng rng = derive_rng(seed, 7);
        const auto plan = make_stream_plan(algo, d, cfg.resolved_r());
        Vector u;
        ReportRow row;
        row.seed = seed;
        row.method = "naive_streaming";
        row.wall_time = timed([&] { u = streaming_naive_pca(counted, plan.batch_size, p_naive, rng); });
        row.approx_ratio = safe_ratio(u, sigma);
        row.status = "BASELINE";
        row.samples_consumed = counted.consumed();
        row.peak_resident_scalars = 3 * d;
        rows.push_back(row);
      });
    }
  }
  return rows;
}

inline std::map<std::string, Summary> aggregate(const std::vector<ReportRow>& rows) {
  std::map<std::string, std::vector<double>> ratios, times;
  for (const auto& r : rows) {
    ratios[r.method].push_back(r.approx_ratio);
    times[r.method].push_back(r.wall_time);
  }
  std::map<std::string, Summary> out;
  for (const auto& [m, v] : ratios) {
    Summary s;
    s.count = v.size();
    s.median_ratio = median(v);
    s.iqr_ratio = sample_quantile(v, 0.75) - sample_quantile(v, 0.25);
    s.median_time = median(times[m]);
    s.iqr_time = sample_quantile(times[m], 0.75) - sample_quantile(times[m], 0.25);
    out[m] = s;
  }
  return out;
}

/// Runs every seed (optionally on `workers` threads). Rows come back in seed
/// order regardless of scheduling.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, unsigned workers = 1, bool deterministic = true) {
  ExperimentConfig local = cfg;
  if (deterministic) local.algo.threads = 1;
  std::vector<std::vector<ReportRow>> per_seed(local.seeds.size());
  std::vector<std::exception_ptr> errors(local.seeds.size());
  std::size_t next = 0;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= local.seeds.size()) return;
        i = next++;
      }
      try {
        per_seed[i] = run_seed(local, local.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(local.seeds.size())));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentReport rep;
  for (auto& rows : per_seed) rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  rep.aggregate = aggregate(rep.rows);
  rep.determinism_hash = determinism_hash(rep.rows);
  return rep;
}

inline json report_to_json(const ExperimentReport& rep, const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["config"] = cfg.raw;
  j["rows"] = json::array();
  for (const auto& r : rep.rows) {
    j["rows"].push_back({{"seed", r.seed},
                         {"method", r.method},
                         {"approx_ratio", r.approx_ratio},
                         {"status", r.status},
                         {"wall_time", r.wall_time},
                         {"filters_created", r.filters_created},
                         {"samples_consumed", r.samples_consumed},
                         {"peak_resident_scalars", r.peak_resident_scalars}});
  }
  for (const auto& [m, s] : rep.aggregate) {
    j["aggregate"][m] = {{"count", s.count},
                         {"median_ratio", s.median_ratio},
                         {"iqr_ratio", s.iqr_ratio},
                         {"median_time", s.median_time},
                         {"iqr_time", s.iqr_time}};
  }
  j["determinism_hash"] = rep.determinism_hash;
  return j;
}

inline std::string report_to_csv(const ExperimentReport& rep) {
  std::ostringstream out;
  out << "seed,method,approx_ratio,status,wall_time,filters_created,samples_consumed,peak_resident_scalars\n";
  for (const auto& r : rep.rows)
    out << r.seed << ',' << r.method << ',' << format_double(r.approx_ratio) << ',' << r.status << ','
        << format_double(r.wall_time) << ',' << r.filters_created << ',' << r.samples_consumed << ','
        << r.peak_resident_scalars << '\n';
  return out.str();
}

/// Applies RPCA_OUTPUT_DIR, if set, to a relative or absolute output path.
inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (const char* dir = std::getenv("RPCA_OUTPUT_DIR"); dir && *dir) p = std::filesystem::path(dir) / p.filename();
  return p;
}

struct BenchCell {
  std::size_t n = 0;
  std::size_t d = 0;
  double median_time = 0.0;
  double ratio_half_n = 0.0;  // t(n, d) / t(n/2, d); 0 if that cell is absent
  double ratio_half_d = 0.0;  // t(n, d) / t(n, d/2)
  double median_approx_ratio = 0.0;
};

/// "2000x20,4000x20" -> {(2000,20),(4000,20)}.
inline std::vector<std::pair<std::size_t, std::size_t>> parse_grid(const std::string& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto x = cell.find('x');
    if (x == std::string::npos) throw ConfigError("grid cell '" + cell + "': expected NxD");
    try {
      std::size_t used = 0;
      const long long n = std::stoll(cell.substr(0, x), &used);
      if (used != x) throw std::invalid_argument("n");
      const std::string ds = cell.substr(x + 1);
      const long long d = std::stoll(ds, &used);
      if (used != ds.size()) throw std::invalid_argument("d");
      if (n < 1 || d < 1) throw std::invalid_argument("range");
      out.emplace_back(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    } catch (const std::logic_error&) {
      throw ConfigError("grid cell '" + cell + "': expected positive integers NxD");
    }
  }
  if (out.empty()) throw ConfigError("empty grid");
  return out;
}

/// Config with the inlier dimension replaced; spikes must be axis aligned
/// (their axis must exist in the new dimension).
inline ExperimentConfig resize_config(const ExperimentConfig& base, std::size_t n, std::size_t d) {
  ExperimentConfig c = base;
  c.n = n;
  InlierSpec s = base.inlier;
  s.dim = d;
  if (!s.base_diag.empty()) {
    Vector bd(d, 1.0);
    for (std::size_t i = 0; i < std::min(d, base.inlier.base_diag.size()); ++i) bd[i] = base.inlier.base_diag[i];
    s.base_diag = bd;
  }
  for (auto& sp : s.spikes) {
    std::size_t axis = sp.direction.size();
    for (std::size_t i = 0; i < sp.direction.size(); ++i)
      if (sp.direction[i] != 0.0) {
        if (axis != sp.direction.size()) throw ConfigError("bench: spikes must be axis aligned");
        axis = i;
      }
    if (axis >= d) throw ConfigError("bench: spike axis outside the grid dimension");
    sp.direction = unit_vector(d, axis);
  }
  c.inlier = s;
  return c;
}

/// Median wall time of the batch driver per grid cell over `reps` runs
/// (seeds base.seeds[0] + r). Data generation is not timed.
inline std::vector<BenchCell> run_scaling_bench(const ExperimentConfig& base,
                                                const std::vector<std::pair<std::size_t, std::size_t>>& grid,
                                                int reps = 5) {
  if (reps < 1) throw ConfigError("bench: reps must be >= 1");
  std::vector<BenchCell> cells;
  for (const auto& [n, d] : grid) {
    const ExperimentConfig c = resize_config(base, n, d);
    const DenseMatrix sigma = c.inlier.covariance();
    std::vector<double> times, ratios;
    for (int r = 0; r < reps; ++r) {
      const std::uint64_t seed = base.seeds.front() + static_cast<std::uint64_t>(r);
      Rng gen = derive_rng(seed, 1);
      const PointSet data = strong_contaminate(gen_inliers(c.inlier, n, gen), c.adversary, sigma, gen);
      AlgoConfig algo = c.algo;
      algo.threads = 1;
      Rng rng = derive_rng(seed, 2);
      const auto t0 = std::chrono::steady_clock::now();
      const PcaResult res = robust_pca(data, algo, rng);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      ratios.push_back(safe_ratio(res.u, sigma));
    }
    cells.push_back({n, d, median(times), 0.0, 0.0, median(ratios)});
  }
  for (auto& c : cells)
    for (const auto& o : cells) {
      if (o.d == c.d && 2 * o.n == c.n) c.ratio_half_n = c.median_time / o.median_time;
      if (o.n == c.n && 2 * o.d == c.d) c.ratio_half_d = c.median_time / o.median_time;
    }
  return cells;
}

inline std::string bench_to_csv(const std::vector<BenchCell>& cells) {
  std::ostringstream out;
  out << "n,d,median_time,ratio_vs_half_n,ratio_vs_half_d,median_approx_ratio\n";
  for (const auto& c : cells)
    out << c.n << ',' << c.d << ',' << format_double(c.median_time) << ',' << format_double(c.ratio_half_n) << ','
        << format_double(c.ratio_half_d) << ',' << format_double(c.median_approx_ratio) << '\n';
  return out.str();
}

}  // namespace rpca::experiment
