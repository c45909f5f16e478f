#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipw/detectors.hpp"
#include "ipw/harness.hpp"

namespace ipw {

/// One JSON-lines record per run. Wall-clock time is left out so records are
/// reproducible byte for byte.
nlohmann::json outcome_to_json(const RunOutcome& outcome);

void write_jsonl(std::ostream& out, std::span<const RunOutcome> outcomes);

/// Per-iteration curve rows: iteration, window, response, kind, source and the
/// counters of extract_curves(), prefixed by detector, scene and trial.
void write_curves_header(std::ostream& out);
void write_curves_csv(std::ostream& out, const RunTrace& trace, const std::string& detector,
                      std::size_t scene, int trial);

/// One row per (budget, detector) with mean/std detection rate, fppi, windows
/// and cost.
void write_summary_csv(std::ostream& out, std::span<const RunOutcome> outcomes,
                       std::span<const DetectorConfig> detectors,
                       std::span<const std::int64_t> budgets);

/// Rows are budgets, columns are detectors, cells are mean detection rates.
void write_compare_csv(std::ostream& out, std::span<const RunOutcome> outcomes,
                       std::span<const DetectorConfig> detectors,
                       std::span<const std::int64_t> budgets);

/// Budget ratio needed to match a reference detector.
struct EfficiencyRow {
  std::string reference;
  std::string detector;
  std::int64_t reference_budget = 0;
  double reference_rate = 0.0;
  /// Smallest grid budget at which `detector` reaches the reference rate; 0
  /// when none does.
  std::int64_t matching_budget = 0;
  double ratio = 0.0;
};

/// Uses the first MPW detector as reference (the first detector if there is
/// no MPW entry). Sliding-window detectors ignore the budget and are skipped.
std::vector<EfficiencyRow> efficiency_table(std::span<const RunOutcome> outcomes,
                                            std::span<const DetectorConfig> detectors,
                                            std::span<const std::int64_t> budgets);

void write_efficiency_csv(std::ostream& out, std::span<const EfficiencyRow> rows);

struct SweepPoint {
  std::string detector;
  std::int64_t budget = 0;
  double threshold = 0.0;
  double detection_rate = 0.0;
  double fppi = 0.0;
};

/// Operating points from re-thresholding the scored windows of each trace.
/// Outcomes must carry traces.
std::vector<SweepPoint> sweep_operating_points(std::span<const RunOutcome> outcomes,
                                               const ExperimentPlan& plan,
                                               std::span<const std::int64_t> budgets,
                                               std::span<const double> thresholds);

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points);

void write_timing_csv(std::ostream& out, std::span<const RunOutcome> outcomes);

/// Shortest round-trip decimal representation.
std::string format_number(double v);

}  // namespace ipw
