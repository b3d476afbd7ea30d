#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gridse/casegen.hpp"
#include "gridse/linear_se.hpp"
#include "gridse/montecarlo.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// Parse a MATPOWER-style case. Supported tables: baseMVA scalar, bus, gen,
/// branch; columns beyond the documented subset are ignored, unknown mpc
/// fields are skipped. Power columns are converted to per-unit on baseMVA and
/// angles to radians; tap 0 normalizes to 1. Throws ParseError or
/// ValidationError; never returns a partially constructed case.
GridCase parse_case(std::string_view text);

/// Emit case text that re-parses to a structurally equal GridCase
/// (values at 17 significant digits).
std::string serialize_case(const GridCase& c);

GridCase load_case(const std::filesystem::path& path);
void save_case(const GridCase& c, const std::filesystem::path& path);

/// Measurement-set JSON. load resolves the grid through the stored case_name
/// (as given, then relative to the JSON's directory) and cross-validates the
/// devices against it. Throws SchemaError with the JSON path of the first
/// violation.
SeCase load_se_case(const std::filesystem::path& path);
void save_se_case(const SeCase& se, const std::filesystem::path& path);

std::string se_case_to_json_string(const SeCase& se);
SeCase se_case_from_json_string(std::string_view text, GridCase grid);

/// Results JSON: vr, vi, objective, iterations, converged, plus sigma_ss and
/// sigma_max when the case embeds truth.
std::string estimate_result_to_json_string(const EstimateResult& r, const SeCase& se);

/// Power-flow results JSON: vr, vi, iterations.
std::string pf_result_to_json_string(const Vec& vr, const Vec& vi, int iterations);

std::string mc_summary_to_json_string(const McSummary& s, const SeCase& se);

/// One CSV row per bus: bus,<edge_0..edge_B>,<count_1..count_B>. Written as
/// vm_hist.csv and va_hist.csv under dir.
void write_histogram_csvs(const McSummary& s, const SeCase& se,
                          const std::filesystem::path& dir);

PerturbationSpec load_perturbation_spec(const std::filesystem::path& path);

}  // namespace gridse
