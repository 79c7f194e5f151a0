#include "commands.hpp"

#include <fstream>
#include <iostream>

#include <cogmtl/csv.hpp>
#include <cogmtl/errors.hpp>
#include <cogmtl/harmonize.hpp>
#include <cogmtl/serialize.hpp>

namespace cogmtl::cli {

namespace fs = std::filesystem;

namespace {

Provenance provenance(const RunConfig& cfg) { return {cfg.hash, cfg.seed.value_or(0)}; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

Cohort load_input(const RunConfig& cfg, bool need_targets) {
  if (cfg.features.empty()) throw ConfigError("config [data] features is required");
  if (need_targets && cfg.targets.empty()) throw ConfigError("config [data] targets is required");
  return load_cohort(cfg.features, cfg.targets);
}

std::ofstream open_csv(const fs::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  for (const auto& line : provenance_preamble(provenance(cfg))) out << "# " << line << '\n';
  return out;
}

std::vector<std::string> horizons_of(const RunConfig& cfg, const Cohort& cohort) {
  if (!cfg.horizons.empty()) return cfg.horizons;
  std::vector<std::string> out;
  for (const auto& h : cohort.targets) out.push_back(h.label);
  if (out.empty()) throw DataError("targets file has no horizon columns");
  return out;
}

std::optional<BatchDiagnostic> try_diagnostic(const Matrix& x, const Cohort& cohort) {
  try {
    return batch_t_diagnostic(x, cohort.batch, all_rows(cohort.size()));
  } catch (const std::invalid_argument& e) {
    std::cerr << "note: batch diagnostic skipped: " << e.what() << '\n';
    return std::nullopt;
  }
}

}  // namespace

std::vector<fs::path> cmd_simulate(const RunConfig& cfg) {
  RunConfig local = cfg;
  local.synth.seed = cfg.require_seed("simulate");
  const SynthCohort sim = generate(local.synth);
  ensure_dir(cfg.out_dir);
  const auto prov = provenance(cfg);
  const auto preamble = provenance_preamble(prov);
  const fs::path features = cfg.out_dir / "features.csv";
  const fs::path targets = cfg.out_dir / "targets.csv";
  const fs::path blockmap = cfg.out_dir / "blockmap.csv";
  const fs::path truth = cfg.out_dir / "truth.json";
  write_cohort(sim.cohort, features, targets, preamble);
  write_block_map(sim.blocks, sim.cohort.feature_names, blockmap, preamble);
  write_json({{"spec", to_json(local.synth)}, {"truth", to_json(sim.truth)}, {"provenance", to_json(prov)}}, truth);
  return {features, targets, blockmap, truth};
}

std::vector<fs::path> cmd_harmonize(const RunConfig& cfg) {
  const Cohort cohort = load_input(cfg, false);
  const Harmonization method = cfg.harmonize_method;
  const IndexSet rows = all_rows(cohort.size());
  Json params{{"method", std::string(to_string(method))}, {"provenance", to_json(provenance(cfg))}};

  Matrix harmonized;
  switch (method) {
    case Harmonization::None:
      harmonized = cohort.features;
      break;
    case Harmonization::ComBat:
    case Harmonization::ComBatAge:
    case Harmonization::ComBatRegAge: {
      const Matrix cov = method == Harmonization::ComBat ? Matrix(cohort.size(), 0) : covariate_column(cohort.age);
      const CombatParams fitted = combat_fit(cohort.features, cohort.batch, cov);
      harmonized = combat_apply(cohort.features, cohort.batch, cov, fitted);
      params["combat"] = to_json(fitted);
      if (method == Harmonization::ComBatRegAge) {
        const ResidualizerParams res = fit_residualizer(harmonized, cov, rows);
        harmonized = residualize(harmonized, cov, res);
        params["residualizer"] = {
            {"intercepts", std::vector<double>(res.intercepts.data(), res.intercepts.data() + res.intercepts.size())},
            {"age_coef", std::vector<double>(res.covariate_coef.data(),
                                             res.covariate_coef.data() + res.covariate_coef.size())}};
      }
      break;
    }
    case Harmonization::PLS:
    case Harmonization::PLSAge: {
      const RegionBlocks blocks = cfg.blockmap.empty() ? default_blocks(cohort.feature_count())
                                                       : load_block_map(cfg.blockmap, cohort.feature_names);
      const Standardizer st = fit_standardizer(cohort.features);
      const DomainAdapter adapter =
          fit_domain_adapter(st.apply(cohort.features), cohort.batch,
                             method == Harmonization::PLSAge ? &cohort.age : nullptr, blocks, cfg.harmonize_components);
      harmonized = st.invert(adapter.apply(st.apply(cohort.features)));
      Json comps = Json::array();
      for (const auto& m : adapter.models) comps.push_back(m.components());
      params["pls"] = {{"requested_components", cfg.harmonize_components},
                       {"block_names", blocks.block_names},
                       {"effective_components", comps}};
      break;
    }
  }

  ensure_dir(cfg.out_dir);
  const fs::path features = cfg.out_dir / "harmonized_features.csv";
  const fs::path params_path = cfg.out_dir / "harmonization.json";
  const fs::path diag_path = cfg.out_dir / "diagnostic.csv";
  Cohort out = cohort;
  out.features = harmonized;
  write_cohort(out, features, {}, provenance_preamble(provenance(cfg)));
  std::vector<fs::path> written{features};

  const auto before = try_diagnostic(cohort.features, cohort);
  if (before) {
    const auto after = try_diagnostic(harmonized, cohort);
    auto csv_out = open_csv(diag_path, cfg);
    csv_out << "feature,t_before,t_after\n";
    for (Index j = 0; j < cohort.feature_count(); ++j)
      csv_out << csv::quote_if_needed(cohort.feature_names[static_cast<std::size_t>(j)]) << ','
              << csv::format(before->t(j)) << ',' << csv::format(after->t(j)) << '\n';
    params["diagnostic"] = {{"levels", {before->levels[0], before->levels[1]}},
                            {"threshold", kBatchTThreshold},
                            {"max_abs_t_before", before->max_abs()},
                            {"max_abs_t_after", after->max_abs()},
                            {"count_above_before", before->count_above()},
                            {"count_above_after", after->count_above()}};
  }
  write_json(params, params_path);
  written.push_back(params_path);
  if (before) written.push_back(diag_path);
  return written;
}

std::vector<fs::path> cmd_fit(const RunConfig& cfg) {
  if (cfg.methods.size() != 1) throw ConfigError("fit takes exactly one method");
  if (cfg.harmonizations.size() != 1) throw ConfigError("fit takes exactly one harmonization");
  const Cohort cohort = load_input(cfg, true);
  const auto horizons = horizons_of(cfg, cohort);
  const MethodSpec spec{cfg.methods.front(), cfg.harmonizations.front(), cfg.partition};
  const LinearModel model =
      fit_linear_model(cohort, spec, horizons.front(), cfg.cv.pipeline, cfg.seed.value_or(0), cfg.fixed);
  ensure_dir(cfg.out_dir);
  const fs::path path = cfg.out_dir / "model.json";
  Json doc = to_json(model, provenance(cfg));
  doc["horizon"] = horizons.front();
  write_json(doc, path);
  return {path};
}

std::vector<fs::path> cmd_predict(const RunConfig& cfg) {
  if (cfg.model.empty()) throw ConfigError("config [predict] model is required");
  const LinearModel model = linear_model_from_json(read_json(cfg.model));
  const Cohort cohort = load_input(cfg, false);
  if (cohort.feature_count() != model.weights.rows())
    throw ConfigError("model expects " + std::to_string(model.weights.rows()) + " features but the input has " +
                      std::to_string(cohort.feature_count()));
  const Vector pred = predict(model, cohort);
  ensure_dir(cfg.out_dir);
  const fs::path path = cfg.out_dir / "predictions.csv";
  auto out = open_csv(path, cfg);
  out << "subject_id,group,batch,task,prediction\n";
  for (Index i = 0; i < cohort.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out << csv::quote_if_needed(cohort.subject_ids[s]) << ',' << csv::quote_if_needed(cohort.group[s]) << ','
        << csv::quote_if_needed(cohort.batch[s]) << ','
        << csv::quote_if_needed(task_name(model.partition, cohort.group[s], cohort.batch[s])) << ','
        << csv::format(pred(i)) << '\n';
  }
  return {path};
}

std::vector<fs::path> cmd_evaluate(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed("evaluate");
  const Cohort cohort = load_input(cfg, true);
  CvOptions cv = cfg.cv;
  cv.seed = seed;
  if (!cfg.blockmap.empty()) cv.pipeline.blocks = load_block_map(cfg.blockmap, cohort.feature_names);

  EvalReport report;
  report.config_hash = cfg.hash;
  report.seed = seed;
  for (const auto& horizon : horizons_of(cfg, cohort))
    for (Harmonization h : cfg.harmonizations)
      for (Method m : cfg.methods) {
        EvalEntry entry = nested_cv(cohort, MethodSpec{m, h, cfg.partition}, horizon, cv);
        for (const auto& w : entry.warnings) std::cerr << "warning: " << entry_label(entry) << " " << horizon << ": " << w << '\n';
        report.entries.push_back(std::move(entry));
      }

  ensure_dir(cfg.out_dir);
  const fs::path json_path = cfg.out_dir / "report.json";
  const fs::path long_path = cfg.out_dir / "report.csv";
  const fs::path table_path = cfg.out_dir / "table.csv";
  write_json(to_json(report), json_path);
  write_report_csv(report, long_path);
  write_table_csv(report, table_path);
  return {json_path, long_path, table_path};
}

std::vector<fs::path> cmd_report(const RunConfig& cfg) {
  const fs::path input = cfg.report.empty() ? cfg.out_dir / "report.json" : cfg.report;
  const EvalReport report = report_from_json(read_json(input));
  ensure_dir(cfg.out_dir);
  const fs::path long_path = cfg.out_dir / "report.csv";
  const fs::path table_path = cfg.out_dir / "table.csv";
  write_report_csv(report, long_path);
  write_table_csv(report, table_path);
  return {long_path, table_path};
}

}  // namespace cogmtl::cli
