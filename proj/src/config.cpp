#include "rddmk/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

namespace rddmk {

namespace {

using nlohmann::json;

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* a) { return key == a; }))
      continue;
    std::string msg = "unknown key '" + key + "' in " + where;
    const char* best = nullptr;
    int best_d = 4;  // suggest close misses only
    for (const char* a : allowed) {
      int d = levenshtein(key, a);
      if (d < best_d) {
        best_d = d;
        best = a;
      }
    }
    if (best) msg += "; did you mean '" + std::string(best) + "'?";
    fail(ErrorCode::ParseError, msg);
  }
}

struct Problems {
  std::vector<std::string> list;

  void add(std::string msg) { list.push_back(std::move(msg)); }
  void check(bool ok, const std::string& msg) {
    if (!ok) add(msg);
  }
  void raise_if_any() {
    if (list.empty()) return;
    std::string all = list[0];
    for (size_t i = 1; i < list.size(); ++i) all += "; " + list[i];
    fail(ErrorCode::ValidationError, all);
  }
};

double get_double(const json& v, const std::string& path) {
  if (!v.is_number())
    fail(ErrorCode::ParseError, path + ": expected a number");
  return v.get<double>();
}

long long get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail(ErrorCode::ParseError, path + ": expected an integer");
  return v.get<long long>();
}

int get_int(const json& v, const std::string& path) {
  long long x = get_integer(v, path);
  if (x < std::numeric_limits<int>::min() ||
      x > std::numeric_limits<int>::max())
    fail(ErrorCode::ParseError, path + ": out of range");
  return static_cast<int>(x);
}

std::uint64_t get_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  long long x = get_integer(v, path);
  if (x < 0) fail(ErrorCode::ParseError, path + ": seed must be nonnegative");
  return static_cast<std::uint64_t>(x);
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean())
    fail(ErrorCode::ParseError, path + ": expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string())
    fail(ErrorCode::ParseError, path + ": expected a string");
  return v.get<std::string>();
}

template <class T>
struct Named {
  const char* name;
  T value;
};

template <class T>
std::optional<T> parse_enum(const json& v, const std::string& path,
                            std::initializer_list<Named<T>> options,
                            Problems& pr) {
  std::string s = get_string(v, path);
  for (const Named<T>& o : options)
    if (s == o.name) return o.value;
  std::string msg = path + ": unknown value '" + s + "' (expected ";
  bool first = true;
  for (const Named<T>& o : options) {
    if (!first) msg += ", ";
    msg += o.name;
    first = false;
  }
  pr.add(msg + ")");
  return std::nullopt;
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json* section(const json& root, const char* key) {
  const json* s = find(root, key);
  if (s && !s->is_object())
    fail(ErrorCode::ParseError, std::string(key) + ": expected an object");
  return s;
}

RunConfig parse_run(const json& o, Problems& pr) {
  check_keys(o, "run",
             {"k", "b", "kernel", "bandwidth", "model", "mean", "seed",
              "min_tile_size", "bins", "mean_tol", "mean_max_iter", "workers"});
  RunConfig run;
  if (const json* v = find(o, "k")) run.k = get_int(*v, "run.k");
  if (const json* v = find(o, "b")) run.b = get_int(*v, "run.b");
  if (const json* v = find(o, "kernel")) {
    auto k = parse_enum<KernelConfig::Kind>(
        *v, "run.kernel",
        {{"gaussian", KernelConfig::Kind::Gaussian},
         {"tile_indicator", KernelConfig::Kind::TileIndicator}},
        pr);
    if (k) run.kernel.kind = *k;
  }
  if (const json* v = find(o, "bandwidth"))
    run.kernel.bandwidth = get_double(*v, "run.bandwidth");
  if (const json* v = find(o, "model")) {
    auto f = parse_enum<VariogramModel::Family>(
        *v, "run.model",
        {{"spherical", VariogramModel::Family::Spherical},
         {"exponential", VariogramModel::Family::Exponential},
         {"nugget_only", VariogramModel::Family::NuggetOnly}},
        pr);
    if (f) run.family = *f;
  }
  if (const json* v = find(o, "mean")) {
    auto m = parse_enum<MeanStrategy>(
        *v, "run.mean",
        {{"intrinsic", MeanStrategy::Intrinsic},
         {"extrinsic_fallback", MeanStrategy::ExtrinsicFallback}},
        pr);
    if (m) run.mean_strategy = *m;
  }
  if (const json* v = find(o, "seed"))
    run.master_seed = get_seed(*v, "run.seed");
  if (const json* v = find(o, "min_tile_size"))
    run.min_tile_size = get_int(*v, "run.min_tile_size");
  if (const json* v = find(o, "bins"))
    run.bins.n_bins = get_int(*v, "run.bins");
  if (const json* v = find(o, "mean_tol"))
    run.mean_tol = get_double(*v, "run.mean_tol");
  if (const json* v = find(o, "mean_max_iter"))
    run.mean_max_iter = get_int(*v, "run.mean_max_iter");
  if (const json* v = find(o, "workers"))
    run.workers = get_int(*v, "run.workers");

  pr.check(run.k >= 1,
           "run.k: tile count must satisfy 1 <= k <= number of sites");
  pr.check(run.b >= 1, "run.b: need at least one bootstrap iteration");
  if (run.kernel.kind == KernelConfig::Kind::Gaussian)
    pr.check(run.kernel.bandwidth > 0,
             "run.bandwidth: must be positive for the gaussian kernel");
  pr.check(run.min_tile_size >= 1, "run.min_tile_size: must be at least 1");
  pr.check(run.bins.n_bins >= 1, "run.bins: must be at least 1");
  pr.check(run.mean_tol > 0, "run.mean_tol: must be positive");
  pr.check(run.mean_max_iter >= 1, "run.mean_max_iter: must be at least 1");
  pr.check(run.workers >= 1, "run.workers: must be at least 1");
  return run;
}

DataConfig parse_data(const json& o, Problems& pr) {
  check_keys(o, "data",
             {"sites", "observations", "boundary", "distances", "targets",
              "metric"});
  DataConfig d;
  if (const json* v = find(o, "sites")) d.sites = get_string(*v, "data.sites");
  if (const json* v = find(o, "observations"))
    d.observations = get_string(*v, "data.observations");
  if (const json* v = find(o, "boundary"))
    d.boundary = get_string(*v, "data.boundary");
  if (const json* v = find(o, "distances"))
    d.distances = get_string(*v, "data.distances");
  if (const json* v = find(o, "targets"))
    d.targets = get_string(*v, "data.targets");
  d.metric = d.distances.empty() ? DataConfig::Metric::Triangulation
                                 : DataConfig::Metric::Matrix;
  if (const json* v = find(o, "metric")) {
    auto m = parse_enum<DataConfig::Metric>(
        *v, "data.metric",
        {{"triangulation", DataConfig::Metric::Triangulation},
         {"euclidean", DataConfig::Metric::Euclidean},
         {"matrix", DataConfig::Metric::Matrix}},
        pr);
    if (m) d.metric = *m;
  }

  pr.check(!d.sites.empty(), "data.sites: required");
  pr.check(!d.observations.empty(), "data.observations: required");
  if (d.metric == DataConfig::Metric::Matrix)
    pr.check(!d.distances.empty(),
             "data.distances: required when the metric is matrix");
  else
    pr.check(d.distances.empty(),
             "data.distances: only used when data.metric is matrix");
  if (d.metric != DataConfig::Metric::Triangulation)
    pr.check(d.boundary.empty(),
             "data.boundary: only used with the triangulation metric");
  return d;
}

CDomainSpec parse_domain(const json& o, const std::string& where,
                         Problems& pr) {
  check_keys(o, where,
             {"phi_max", "r_min", "r_max", "bend_radius", "n_phi", "n_r"});
  CDomainSpec s;
  if (const json* v = find(o, "phi_max"))
    s.phi_max = get_double(*v, where + ".phi_max");
  if (const json* v = find(o, "r_min"))
    s.r_min = get_double(*v, where + ".r_min");
  if (const json* v = find(o, "r_max"))
    s.r_max = get_double(*v, where + ".r_max");
  if (const json* v = find(o, "bend_radius"))
    s.bend_radius = get_double(*v, where + ".bend_radius");
  if (const json* v = find(o, "n_phi")) s.n_phi = get_int(*v, where + ".n_phi");
  if (const json* v = find(o, "n_r")) s.n_r = get_int(*v, where + ".n_r");

  pr.check(s.phi_max > 0, where + ".phi_max: must be positive");
  pr.check(s.r_max > s.r_min, where + ".r_max: must exceed r_min");
  pr.check(s.bend_radius + s.r_min > 0,
           where + ".bend_radius: bend_radius + r_min must be positive");
  pr.check(s.n_phi >= 2 && s.n_r >= 2,
           where + ": the grid needs at least 2 steps per axis");
  return s;
}

GrfSpec parse_grf(const json& o, const std::string& where, Problems& pr) {
  check_keys(o, where, {"range", "sill", "jitter"});
  GrfSpec g;
  if (const json* v = find(o, "range"))
    g.range = get_double(*v, where + ".range");
  if (const json* v = find(o, "sill")) g.sill = get_double(*v, where + ".sill");
  if (const json* v = find(o, "jitter"))
    g.jitter = get_double(*v, where + ".jitter");

  pr.check(g.range > 0, where + ".range: must be positive");
  pr.check(g.sill > 0, where + ".sill: must be positive");
  pr.check(g.jitter >= 0, where + ".jitter: must be nonnegative");
  return g;
}

SimulateConfig parse_sim(const json& o, Problems& pr) {
  check_keys(o, "simulate",
             {"field", "seed", "n_replicates", "n_sites",
              "new_field_per_replicate", "domain", "grf"});
  SimulateConfig s;
  if (const json* v = find(o, "field")) {
    auto f = parse_enum<ManifoldKind>(*v, "simulate.field",
                                      {{"spd", ManifoldKind::Spd},
                                       {"chol", ManifoldKind::Chol}},
                                      pr);
    if (f) s.field = *f;
  }
  if (const json* v = find(o, "seed")) s.seed = get_seed(*v, "simulate.seed");
  if (const json* v = find(o, "n_replicates"))
    s.n_replicates = get_int(*v, "simulate.n_replicates");
  if (const json* v = find(o, "n_sites"))
    s.n_sites = get_int(*v, "simulate.n_sites");
  if (const json* v = find(o, "new_field_per_replicate"))
    s.new_field_per_replicate = get_bool(*v, "simulate.new_field_per_replicate");
  if (const json* v = section(o, "domain"))
    s.domain = parse_domain(*v, "simulate.domain", pr);
  if (const json* v = section(o, "grf"))
    s.grf = parse_grf(*v, "simulate.grf", pr);

  pr.check(s.n_replicates >= 1,
           "simulate.n_replicates: must be at least 1");
  pr.check(s.n_sites >= 1, "simulate.n_sites: must be at least 1");
  pr.check(s.n_sites <= s.domain.n_phi * s.domain.n_r,
           "simulate.n_sites: cannot exceed the grid size n_phi * n_r");
  return s;
}

StudyConfig parse_study(const json& o, Problems& pr) {
  check_keys(o, "study",
             {"field", "seed", "n_replicates", "n_sites", "k_values",
              "new_field_per_replicate", "squared_errors", "exclude_observed",
              "dump_spe", "domain", "grf"});
  StudyConfig out;
  McConfig& mc = out.mc;
  if (const json* v = find(o, "field")) {
    auto f = parse_enum<ManifoldKind>(*v, "study.field",
                                      {{"spd", ManifoldKind::Spd},
                                       {"chol", ManifoldKind::Chol}},
                                      pr);
    if (f) mc.manifold = *f;
  }
  if (const json* v = find(o, "seed")) mc.seed = get_seed(*v, "study.seed");
  if (const json* v = find(o, "n_replicates"))
    mc.n_replicates = get_int(*v, "study.n_replicates");
  if (const json* v = find(o, "n_sites"))
    mc.n_sites = get_int(*v, "study.n_sites");
  if (const json* v = find(o, "k_values")) {
    if (!v->is_array())
      fail(ErrorCode::ParseError, "study.k_values: expected an array");
    mc.k_values.clear();
    for (const json& e : *v)
      mc.k_values.push_back(get_int(e, "study.k_values"));
  }
  if (const json* v = find(o, "new_field_per_replicate"))
    mc.new_field_per_replicate =
        get_bool(*v, "study.new_field_per_replicate");
  if (const json* v = find(o, "squared_errors"))
    mc.squared_errors = get_bool(*v, "study.squared_errors");
  if (const json* v = find(o, "exclude_observed"))
    mc.exclude_observed = get_bool(*v, "study.exclude_observed");
  if (const json* v = find(o, "dump_spe"))
    out.dump_spe = get_bool(*v, "study.dump_spe");
  if (const json* v = section(o, "domain"))
    mc.domain = parse_domain(*v, "study.domain", pr);
  if (const json* v = section(o, "grf"))
    mc.grf = parse_grf(*v, "study.grf", pr);

  pr.check(mc.n_replicates >= 1, "study.n_replicates: must be at least 1");
  pr.check(mc.n_sites >= 2, "study.n_sites: must be at least 2");
  pr.check(mc.n_sites <= mc.domain.n_phi * mc.domain.n_r,
           "study.n_sites: cannot exceed the grid size n_phi * n_r");
  pr.check(!mc.k_values.empty(), "study.k_values: must not be empty");
  pr.check(std::all_of(mc.k_values.begin(), mc.k_values.end(),
                       [&](int k) { return k >= 1 && k <= mc.n_sites; }),
           "study.k_values: every entry must satisfy 1 <= k <= n_sites");
  return out;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "simulate") return Command::Simulate;
  if (name == "krige") return Command::Krige;
  if (name == "cv") return Command::Cv;
  if (name == "variogram") return Command::Variogram;
  if (name == "mc-study") return Command::McStudy;
  fail(ErrorCode::ParseError,
       "unknown command '" + name +
           "' (expected simulate, krige, cv, variogram, mc-study)");
}

CliConfig parse_config(const std::string& path, Command command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open config '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, e.what(), path);
  }
  if (!root.is_object())
    fail(ErrorCode::ParseError, "the configuration must be a JSON object",
         path);
  check_keys(root, "the top level",
             {"manifold", "run", "data", "simulate", "study"});

  Problems pr;
  CliConfig cfg;
  bool has_manifold = false, has_data = false, has_sim = false,
       has_study = false;
  if (const json* v = find(root, "manifold")) {
    has_manifold = true;
    auto m = parse_enum<ManifoldKind>(*v, "manifold",
                                      {{"spd", ManifoldKind::Spd},
                                       {"sphere", ManifoldKind::Sphere},
                                       {"chol", ManifoldKind::Chol}},
                                      pr);
    if (m) cfg.manifold = *m;
  }
  if (const json* v = section(root, "run")) cfg.run = parse_run(*v, pr);
  if (const json* v = section(root, "data")) {
    has_data = true;
    cfg.data = parse_data(*v, pr);
  }
  if (const json* v = section(root, "simulate")) {
    has_sim = true;
    cfg.sim = parse_sim(*v, pr);
  }
  if (const json* v = section(root, "study")) {
    has_study = true;
    cfg.study = parse_study(*v, pr);
  }
  cfg.study.mc.run = cfg.run;

  switch (command) {
    case Command::Simulate:
      pr.check(has_sim, "simulate: section required by the simulate command");
      break;
    case Command::McStudy:
      pr.check(has_study, "study: section required by the mc-study command");
      break;
    case Command::Krige:
    case Command::Cv:
    case Command::Variogram:
      pr.check(has_manifold, "manifold: required by this command");
      pr.check(has_data, "data: section required by this command");
      break;
  }
  pr.raise_if_any();
  return cfg;
}

}  // namespace rddmk
