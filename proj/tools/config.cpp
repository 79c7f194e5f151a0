#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <cogmtl/csv.hpp>
#include <cogmtl/errors.hpp>
#include <cogmtl/serialize.hpp>

namespace cogmtl::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data", {"features", "targets", "blockmap"}},
      {"run",
       {"method", "harmonization", "partition", "horizons", "seed", "out", "jobs", "repeats", "outer_folds",
        "inner_folds", "harmonize_global", "bootstrap", "ci_level"}},
      {"grid", {"rho1", "rho2", "lambda_count", "lambda_min_ratio", "alpha", "pls_components"}},
      {"solver", {"max_iter", "tolerance"}},
      {"stacking", {"folds", "ridge", "gamma", "lambdas", "alpha"}},
      {"simulate",
       {"groups", "batches", "subjects_per_cell", "cell_sizes", "features", "blocks", "shared_support", "task_support",
        "task_jitter", "feature_correlation", "noise_sd", "batch_shift", "batch_scale", "age_slope", "age_mean",
        "age_sd", "age_batch_offset", "group_offsets", "horizons", "horizon_scale", "missing_rate"}},
      {"harmonize", {"method", "components"}},
      {"fit", {"lambda", "rho1", "rho2"}},
      {"predict", {"model"}},
      {"report", {"input"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  [[nodiscard]] std::optional<std::string> text(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  [[nodiscard]] std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (auto v = text(key)) {
      std::stringstream ss(*v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw error(key, "empty list item");
        out.push_back(item);
      }
    }
    return out;
  }

  template <class T>
  void read(const std::string& key, T& target) const {
    if (auto v = text(key)) target = parse<T>(key, *v);
  }

  template <class T>
  void read_list(const std::string& key, std::vector<T>& target) const {
    if (!text(key)) return;
    target.clear();
    for (const auto& item : list(key)) target.push_back(parse<T>(key, item));
  }

  [[nodiscard]] ConfigError error(const std::string& key, const std::string& what) const {
    return ConfigError("config [" + name_ + "] " + key + ": " + what);
  }

  template <class T>
  [[nodiscard]] T parse(const std::string& key, const std::string& v) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
      if (v == "false" || v == "0" || v == "no" || v == "off") return false;
      throw error(key, "expected a boolean, got '" + v + "'");
    } else if constexpr (std::is_floating_point_v<T>) {
      double d = 0.0;
      if (!csv::parse_double(v, d)) throw error(key, "expected a number, got '" + v + "'");
      return d;
    } else {
      std::size_t used = 0;
      long long n = 0;
      try {
        n = std::stoll(v, &used);
      } catch (const std::exception&) {
        throw error(key, "expected an integer, got '" + v + "'");
      }
      if (used != v.size()) throw error(key, "expected an integer, got '" + v + "'");
      if constexpr (std::is_unsigned_v<T>) {
        if (n < 0) throw error(key, "must be non-negative");
      }
      return static_cast<T>(n);
    }
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_positive(const Section& s, const char* key, long long v) {
  if (v < 1) throw s.error(key, "must be positive");
}

}  // namespace

std::uint64_t RunConfig::require_seed(const char* command) const {
  if (!seed) throw ConfigError(std::string(command) + " requires a seed ([run] seed or --seed)");
  return *seed;
}

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();

  pt::ptree tree;
  try {
    std::istringstream ini(bytes);
    pt::ini_parser::read_ini(ini, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  const auto& allowed = allowed_keys();
  for (const auto& [name, section] : tree) {
    const auto it = allowed.find(name);
    if (it == allowed.end()) throw ConfigError("config: unknown section [" + name + "]");
    if (section.empty() && !section.data().empty()) throw ConfigError("config: key '" + name + "' outside a section");
    for (const auto& [key, value] : section)
      if (!it->second.count(key)) throw ConfigError("config [" + name + "]: unknown key '" + key + "'");
  }
  auto section = [&](const char* name) { return Section(tree.get_child_optional(name).get_ptr(), name); };

  RunConfig cfg;
  cfg.source = path;
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  const Section data = section("data");
  if (auto v = data.text("features")) cfg.features = resolve(base, *v);
  if (auto v = data.text("targets")) cfg.targets = resolve(base, *v);
  if (auto v = data.text("blockmap")) cfg.blockmap = resolve(base, *v);

  const Section run = section("run");
  if (run.text("method")) {
    cfg.methods.clear();
    for (const auto& m : run.list("method")) cfg.methods.push_back(parse_method(m));
  }
  if (run.text("harmonization")) {
    cfg.harmonizations.clear();
    for (const auto& h : run.list("harmonization")) cfg.harmonizations.push_back(parse_harmonization(h));
  }
  if (auto v = run.text("partition")) cfg.partition = parse_partition_scheme(*v);
  cfg.horizons = run.list("horizons");
  if (auto v = run.text("seed")) cfg.seed = run.parse<std::uint64_t>("seed", *v);
  if (auto v = run.text("out")) cfg.out_dir = resolve(base, *v);
  run.read("jobs", cfg.cv.jobs);
  run.read("repeats", cfg.cv.repeats);
  run.read("outer_folds", cfg.cv.outer_folds);
  run.read("inner_folds", cfg.cv.pipeline.inner_folds);
  run.read("harmonize_global", cfg.cv.harmonize_global);
  run.read("bootstrap", cfg.cv.bootstrap_resamples);
  run.read("ci_level", cfg.cv.ci_level);
  require_positive(run, "jobs", cfg.cv.jobs);
  require_positive(run, "repeats", cfg.cv.repeats);
  require_positive(run, "bootstrap", cfg.cv.bootstrap_resamples);
  if (cfg.cv.outer_folds < 2) throw run.error("outer_folds", "must be at least 2");
  if (cfg.cv.pipeline.inner_folds < 2) throw run.error("inner_folds", "must be at least 2");
  if (!(cfg.cv.ci_level > 0.0 && cfg.cv.ci_level < 1.0)) throw run.error("ci_level", "must lie in (0, 1)");

  const Section grid = section("grid");
  Grid& g = cfg.cv.pipeline.grid;
  grid.read_list("rho1", g.rho1);
  grid.read_list("rho2", g.rho2);
  grid.read("lambda_count", g.lambda_count);
  grid.read("lambda_min_ratio", g.lambda_min_ratio);
  grid.read("alpha", g.alpha);
  grid.read_list("pls_components", g.pls_components);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config [grid]: ") + e.what());
  }

  const Section solver = section("solver");
  solver.read("max_iter", cfg.cv.pipeline.solve.max_iter);
  solver.read("tolerance", cfg.cv.pipeline.solve.rel_tol);
  try {
    cfg.cv.pipeline.solve.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config [solver]: ") + e.what());
  }

  const Section stacking = section("stacking");
  StackingOptions& so = cfg.cv.pipeline.stacking;
  stacking.read("folds", so.internal_folds);
  stacking.read("ridge", so.ridge);
  stacking.read("gamma", so.kernel_gamma);
  stacking.read("lambdas", so.combiner_lambdas);
  stacking.read("alpha", so.combiner_alpha);
  if (so.internal_folds < 2) throw stacking.error("folds", "must be at least 2");
  if (!(so.ridge > 0.0)) throw stacking.error("ridge", "must be positive");
  if (!(so.kernel_gamma >= 0.0)) throw stacking.error("gamma", "must be non-negative");

  const Section sim = section("simulate");
  SynthSpec& sp = cfg.synth;
  sim.read_list("groups", sp.groups);
  sim.read_list("batches", sp.batches);
  sim.read("subjects_per_cell", sp.subjects_per_cell);
  sim.read_list("cell_sizes", sp.cell_sizes);
  sim.read("features", sp.features);
  sim.read("blocks", sp.blocks);
  sim.read("shared_support", sp.shared_support);
  sim.read("task_support", sp.task_support);
  sim.read("task_jitter", sp.task_jitter);
  sim.read("feature_correlation", sp.feature_correlation);
  sim.read("noise_sd", sp.noise_sd);
  sim.read_list("batch_shift", sp.batch_shift);
  sim.read_list("batch_scale", sp.batch_scale);
  sim.read("age_slope", sp.age_slope);
  sim.read("age_mean", sp.age_mean);
  sim.read("age_sd", sp.age_sd);
  sim.read("age_batch_offset", sp.age_batch_offset);
  sim.read_list("group_offsets", sp.group_offsets);
  sim.read_list("horizons", sp.horizons);
  sim.read_list("horizon_scale", sp.horizon_scale);
  sim.read_list("missing_rate", sp.missing_rate);

  const Section harm = section("harmonize");
  if (auto v = harm.text("method")) cfg.harmonize_method = parse_harmonization(*v);
  harm.read("components", cfg.harmonize_components);
  require_positive(harm, "components", cfg.harmonize_components);

  const Section fit = section("fit");
  for (const char* key : {"lambda", "rho1", "rho2"}) {
    if (auto v = fit.text(key)) {
      const double d = fit.parse<double>(key, *v);
      if (!(d >= 0.0)) throw fit.error(key, "must be non-negative");
      cfg.fixed.emplace_back(key, d);
    }
  }
  if (auto v = section("predict").text("model")) cfg.model = resolve(base, *v);
  if (auto v = section("report").text("input")) cfg.report = resolve(base, *v);

  if (overrides.seed) cfg.seed = overrides.seed;
  if (overrides.jobs) {
    if (*overrides.jobs < 1) throw ConfigError("--jobs must be positive");
    cfg.cv.jobs = *overrides.jobs;
  }
  if (overrides.out) cfg.out_dir = *overrides.out;
  if (cfg.seed) {
    cfg.synth.seed = *cfg.seed;
    cfg.cv.seed = *cfg.seed;
  }
  // Worker count and output location do not change results, so they stay out of the hash.
  cfg.hash = fnv1a_hex(bytes + "\nseed=" + (cfg.seed ? std::to_string(*cfg.seed) : std::string("none")));
  return cfg;
}

}  // namespace cogmtl::cli
