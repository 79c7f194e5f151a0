#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogmtl/eval.hpp"
#include "cogmtl/harmonize.hpp"
#include "cogmtl/synth.hpp"

namespace cogmtl {

using Json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

/// Identifies the run that produced an artifact.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// "# config_hash=..." and "# seed=..." comment lines for CSV outputs.
std::vector<std::string> provenance_preamble(const Provenance& provenance);
Json to_json(const Provenance& provenance);

Json to_json(const EvalReport& report);
/// Inverse of to_json(EvalReport); throws DataError on a malformed document.
EvalReport report_from_json(const Json& doc);

/// Long format: one row per entry x group x metric.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

/// Wide format: one row per (label, horizon); columns <G>_R, <G>_R_lo, <G>_R_hi,
/// <G>_MAE, <G>_MAE_lo, <G>_MAE_hi, <G>_N, <G>_lowN for each group G and ALL.
/// Missing metrics are empty cells.
void write_table_csv(const EvalReport& report, const std::filesystem::path& path);

Json to_json(const LinearModel& model, const Provenance& provenance);
/// Throws DataError on a malformed document or unsupported schema version.
LinearModel linear_model_from_json(const Json& doc);

Json to_json(const CombatParams& params);
CombatParams combat_params_from_json(const Json& doc);

Json to_json(const SynthSpec& spec);
Json to_json(const SynthTruth& truth);

/// Writes `doc` (pretty-printed, trailing newline); throws ConfigError if the file cannot be written.
void write_json(const Json& doc, const std::filesystem::path& path);
/// Throws ConfigError if unreadable and DataError if not valid JSON.
Json read_json(const std::filesystem::path& path);

}  // namespace cogmtl
