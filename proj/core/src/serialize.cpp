#include <algorithm>
#include <fstream>
#include <set>

#include "cogmtl/errors.hpp"
#include "cogmtl/serialize.hpp"
#include "cogmtl/csv.hpp"

namespace cogmtl {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string optional_cell(const std::optional<double>& v) { return v ? csv::format(*v) : std::string(); }

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const Json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string("expected an array for '") + what + "'");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(std::string("non-numeric entry in '") + what + "'");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from(const Json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string("expected a nested array for '") + what + "'");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vector r = vector_from(j[static_cast<std::size_t>(i)], what);
    if (r.size() != cols) throw DataError(std::string("ragged rows in '") + what + "'");
    m.row(i) = r.transpose();
  }
  return m;
}

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

Json metric_json(const MetricSummary& s) {
  Json per = Json::array();
  for (const auto& v : s.per_repeat) per.push_back(optional_number(v));
  return {{"mean", optional_number(s.mean)},
          {"ci_lo", optional_number(s.ci_lo)},
          {"ci_hi", optional_number(s.ci_hi)},
          {"per_repeat", per}};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

void write_preamble(std::ostream& out, const EvalReport& report) {
  for (const auto& line : provenance_preamble({report.config_hash, report.seed})) out << "# " << line << '\n';
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return out;
}

std::vector<std::string> provenance_preamble(const Provenance& provenance) {
  return {"config_hash=" + provenance.config_hash, "seed=" + std::to_string(provenance.seed)};
}

Json to_json(const Provenance& provenance) {
  return {{"config_hash", provenance.config_hash}, {"seed", provenance.seed}};
}

Json to_json(const EvalReport& report) {
  Json entries = Json::array();
  for (const auto& e : report.entries) {
    Json groups = Json::array();
    for (const auto& g : e.groups) {
      groups.push_back({{"group", g.group},
                        {"n", g.n},
                        {"low_n", g.low_n},
                        {"R", metric_json(g.r)},
                        {"MAE", metric_json(g.mae)}});
    }
    entries.push_back({{"label", entry_label(e)},
                       {"method", e.method},
                       {"harmonization", e.harmonization},
                       {"partition", e.partition},
                       {"horizon", e.horizon},
                       {"groups", groups},
                       {"selections", e.selections},
                       {"warnings", e.warnings}});
  }
  return {{"provenance", to_json(Provenance{report.config_hash, report.seed})}, {"entries", entries}};
}

namespace {

std::optional<double> optional_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

MetricSummary metric_from(const Json& j) {
  MetricSummary s;
  s.mean = optional_from(field(j, "mean"));
  s.ci_lo = optional_from(field(j, "ci_lo"));
  s.ci_hi = optional_from(field(j, "ci_hi"));
  for (const auto& v : field(j, "per_repeat")) s.per_repeat.push_back(optional_from(v));
  return s;
}

}  // namespace

EvalReport report_from_json(const Json& doc) {
  try {
    EvalReport report;
    const Json& prov = field(doc, "provenance");
    report.config_hash = field(prov, "config_hash").get<std::string>();
    report.seed = field(prov, "seed").get<std::uint64_t>();
    for (const auto& e : field(doc, "entries")) {
      EvalEntry entry;
      entry.method = field(e, "method").get<std::string>();
      entry.harmonization = field(e, "harmonization").get<std::string>();
      entry.partition = field(e, "partition").get<std::string>();
      entry.horizon = field(e, "horizon").get<std::string>();
      entry.selections = field(e, "selections").get<std::vector<std::string>>();
      entry.warnings = field(e, "warnings").get<std::vector<std::string>>();
      for (const auto& g : field(e, "groups")) {
        GroupResult res;
        res.group = field(g, "group").get<std::string>();
        res.n = field(g, "n").get<Index>();
        res.low_n = field(g, "low_n").get<bool>();
        res.r = metric_from(field(g, "R"));
        res.mae = metric_from(field(g, "MAE"));
        entry.groups.push_back(std::move(res));
      }
      report.entries.push_back(std::move(entry));
    }
    return report;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_preamble(out, report);
  out << "label,method,harmonization,partition,horizon,group,n,low_n,metric,mean,ci_lo,ci_hi\n";
  for (const auto& e : report.entries) {
    for (const auto& g : e.groups) {
      for (const auto& [name, s] : {std::pair<const char*, const MetricSummary*>{"R", &g.r}, {"MAE", &g.mae}}) {
        out << csv::quote_if_needed(entry_label(e)) << ',' << csv::quote_if_needed(e.method) << ','
            << csv::quote_if_needed(e.harmonization) << ',' << csv::quote_if_needed(e.partition) << ','
            << csv::quote_if_needed(e.horizon) << ',' << csv::quote_if_needed(g.group) << ',' << g.n << ','
            << (g.low_n ? 1 : 0) << ',' << name << ',' << optional_cell(s->mean) << ',' << optional_cell(s->ci_lo)
            << ',' << optional_cell(s->ci_hi) << '\n';
      }
    }
  }
}

void write_table_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::vector<std::string> groups;
  for (const auto& e : report.entries)
    for (const auto& g : e.groups)
      if (std::find(groups.begin(), groups.end(), g.group) == groups.end() && g.group != "ALL")
        groups.push_back(g.group);
  groups.emplace_back("ALL");

  auto out = open_out(path);
  write_preamble(out, report);
  out << "method,horizon";
  for (const auto& g : groups)
    for (const char* suffix : {"_R", "_R_lo", "_R_hi", "_MAE", "_MAE_lo", "_MAE_hi", "_N", "_lowN"})
      out << ',' << csv::quote_if_needed(g + suffix);
  out << '\n';
  for (const auto& e : report.entries) {
    out << csv::quote_if_needed(entry_label(e)) << ',' << csv::quote_if_needed(e.horizon);
    for (const auto& name : groups) {
      const auto it = std::find_if(e.groups.begin(), e.groups.end(), [&](const GroupResult& g) { return g.group == name; });
      if (it == e.groups.end()) {
        out << ",,,,,,,,";
        continue;
      }
      out << ',' << optional_cell(it->r.mean) << ',' << optional_cell(it->r.ci_lo) << ',' << optional_cell(it->r.ci_hi)
          << ',' << optional_cell(it->mae.mean) << ',' << optional_cell(it->mae.ci_lo) << ','
          << optional_cell(it->mae.ci_hi) << ',' << it->n << ',' << (it->low_n ? 1 : 0);
    }
    out << '\n';
  }
}

Json to_json(const LinearModel& model, const Provenance& provenance) {
  Json hyper = Json::object();
  for (const auto& [k, v] : model.hyperparameters) hyper[k] = v;
  // Column-major M x S, matching Eigen's storage order.
  std::vector<double> weights(model.weights.data(), model.weights.data() + model.weights.size());
  return {{"schema_version", kModelSchemaVersion},
          {"method", std::string(to_string(model.method))},
          {"partition", std::string(to_string(model.partition))},
          {"hyperparameters", hyper},
          {"standardizer", {{"means", vector_json(model.standardizer.means)},
                            {"scales", vector_json(model.standardizer.scales)}}},
          {"weights", {{"rows", model.weights.rows()}, {"cols", model.weights.cols()}, {"data", weights}}},
          {"biases", vector_json(model.biases)},
          {"task_names", model.task_names},
          {"provenance", to_json(provenance)}};
}

LinearModel linear_model_from_json(const Json& doc) {
  try {
    if (field(doc, "schema_version").get<int>() != kModelSchemaVersion)
      throw DataError("unsupported model schema_version " + field(doc, "schema_version").dump());
    LinearModel model;
    model.method = parse_method(field(doc, "method").get<std::string>());
    model.partition = parse_partition_scheme(field(doc, "partition").get<std::string>());
    for (const auto& [k, v] : field(doc, "hyperparameters").items()) model.hyperparameters.emplace_back(k, v.get<double>());
    const Json& st = field(doc, "standardizer");
    model.standardizer.means = vector_from(field(st, "means"), "standardizer.means");
    model.standardizer.scales = vector_from(field(st, "scales"), "standardizer.scales");
    const Json& w = field(doc, "weights");
    const auto rows = field(w, "rows").get<Index>();
    const auto cols = field(w, "cols").get<Index>();
    const Vector data = vector_from(field(w, "data"), "weights.data");
    if (rows < 0 || cols < 0 || data.size() != rows * cols) throw DataError("weights.data does not match rows x cols");
    model.weights = Eigen::Map<const Matrix>(data.data(), rows, cols);
    model.biases = vector_from(field(doc, "biases"), "biases");
    model.task_names = field(doc, "task_names").get<std::vector<std::string>>();
    if (model.biases.size() != cols || static_cast<Index>(model.task_names.size()) != cols)
      throw DataError("biases and task_names must have one entry per weight column");
    if (model.standardizer.means.size() != rows || model.standardizer.scales.size() != rows)
      throw DataError("standardizer length does not match the weight rows");
    return model;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

Json to_json(const CombatParams& p) {
  return {{"batches", p.batches},
          {"grand_mean", vector_json(p.grand_mean)},
          {"covariate_coef", matrix_json(p.covariate_coef)},
          {"covariate_count", p.covariate_count()},
          {"gamma_star", matrix_json(p.gamma_star)},
          {"delta_star", matrix_json(p.delta_star)},
          {"pooled_var", vector_json(p.pooled_var)},
          {"gamma_hat", matrix_json(p.gamma_hat)},
          {"delta_hat", matrix_json(p.delta_hat)},
          {"eb_iterations", p.eb_iterations}};
}

CombatParams combat_params_from_json(const Json& doc) {
  try {
    CombatParams p;
    p.batches = field(doc, "batches").get<std::vector<std::string>>();
    p.grand_mean = vector_from(field(doc, "grand_mean"), "grand_mean");
    p.covariate_coef = matrix_from(field(doc, "covariate_coef"), "covariate_coef");
    const auto c = field(doc, "covariate_count").get<Index>();
    if (p.covariate_coef.rows() == 0) p.covariate_coef.resize(p.grand_mean.size(), c);
    p.gamma_star = matrix_from(field(doc, "gamma_star"), "gamma_star");
    p.delta_star = matrix_from(field(doc, "delta_star"), "delta_star");
    p.pooled_var = vector_from(field(doc, "pooled_var"), "pooled_var");
    p.gamma_hat = matrix_from(field(doc, "gamma_hat"), "gamma_hat");
    p.delta_hat = matrix_from(field(doc, "delta_hat"), "delta_hat");
    p.eb_iterations = field(doc, "eb_iterations").get<int>();
    return p;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed ComBat JSON: ") + e.what());
  }
}

Json to_json(const SynthSpec& s) {
  return {{"groups", s.groups},
          {"batches", s.batches},
          {"subjects_per_cell", s.subjects_per_cell},
          {"cell_sizes", s.cell_sizes},
          {"features", s.features},
          {"blocks", s.blocks},
          {"shared_support", s.shared_support},
          {"task_support", s.task_support},
          {"task_jitter", s.task_jitter},
          {"feature_correlation", s.feature_correlation},
          {"noise_sd", s.noise_sd},
          {"batch_shift", s.batch_shift},
          {"batch_scale", s.batch_scale},
          {"age_slope", s.age_slope},
          {"age_mean", s.age_mean},
          {"age_sd", s.age_sd},
          {"age_batch_offset", s.age_batch_offset},
          {"group_offsets", s.group_offsets},
          {"horizons", s.horizons},
          {"horizon_scale", s.horizon_scale},
          {"missing_rate", s.missing_rate},
          {"seed", s.seed}};
}

Json to_json(const SynthTruth& t) {
  return {{"task_names", t.task_names},
          {"weights", matrix_json(t.weights)},
          {"group_offsets", t.group_offsets},
          {"batch_shift", t.batch_shift},
          {"batch_scale", t.batch_scale},
          {"age_slope", t.age_slope},
          {"age_mean", t.age_mean}};
}

void write_json(const Json& doc, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace cogmtl
