#include "ipw/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>

namespace ipw {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json outcome_to_json(const RunOutcome& o) {
  json dets = json::array();
  for (const Detection& d : o.detections)
    dets.push_back({{"cx", d.box.cx}, {"cy", d.box.cy}, {"w", d.box.w}, {"h", d.box.h},
                    {"score", d.score}});
  const Metrics& m = o.metrics;
  return json{{"detector", o.detector_name},
              {"algorithm", to_string(o.algorithm)},
              {"scene", o.job.scene},
              {"trial", o.job.trial},
              {"budget", o.job.budget},
              {"seed", o.seed},
              {"complete", o.complete},
              {"n_rejected", o.n_rejected},
              {"n_accepted", o.n_accepted},
              {"positives", o.positives},
              {"detections", dets},
              {"metrics",
               {{"detection_rate", m.detection_rate},
                {"fppi", m.fppi},
                {"windows_used", m.windows_used},
                {"cost", m.cost},
                {"objects", m.objects},
                {"matched", m.matched},
                {"false_positives", m.false_positives}}}};
}

void write_jsonl(std::ostream& out, std::span<const RunOutcome> outcomes) {
  for (const RunOutcome& o : outcomes) out << outcome_to_json(o).dump() << '\n';
}

void write_curves_header(std::ostream& out) {
  out << "detector,scene,trial,iteration,x,y,s,response,kind,source,n_rejected,n_accepted,"
         "n_unvisited,n_ambiguity,p_uniform,p_gaussian,n_from_uniform,n_from_gaussian,rebuild\n";
}

void write_curves_csv(std::ostream& out, const RunTrace& trace, const std::string& detector,
                      std::size_t scene, int trial) {
  const Curves c = extract_curves(trace);
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const TraceRecord& r = trace.records[i];
    out << detector << ',' << scene << ',' << trial << ',' << r.iteration << ',' << r.window.x << ',' << r.window.y << ',' << r.window.s << ','
        << format_number(r.response) << ',' << to_string(r.kind) << ',' << to_string(r.source)
        << ',' << c.n_rejected[i] << ',' << c.n_accepted[i] << ',' << c.n_unvisited[i] << ','
        << c.n_ambiguity[i] << ',' << format_number(c.p_uniform[i]) << ','
        << format_number(c.p_gaussian[i]) << ',' << c.n_from_uniform[i] << ','
        << c.n_from_gaussian[i] << ',' << (r.rebuild ? 1 : 0) << '\n';
  }
}

namespace {

struct Cell {
  std::vector<double> rate, fppi, windows, cost;
};

std::map<std::pair<std::int64_t, std::size_t>, Cell> collect(std::span<const RunOutcome> outs) {
  std::map<std::pair<std::int64_t, std::size_t>, Cell> cells;
  for (const RunOutcome& o : outs) {
    Cell& c = cells[{o.job.budget, o.job.detector}];
    c.rate.push_back(o.metrics.detection_rate);
    c.fppi.push_back(o.metrics.fppi);
    c.windows.push_back(static_cast<double>(o.metrics.windows_used));
    c.cost.push_back(o.metrics.cost);
  }
  return cells;
}

std::vector<std::int64_t> budget_axis(std::span<const RunOutcome> outs,
                                      std::span<const std::int64_t> budgets) {
  if (!budgets.empty()) return {budgets.begin(), budgets.end()};
  std::vector<std::int64_t> axis;
  for (const RunOutcome& o : outs)
    if (std::find(axis.begin(), axis.end(), o.job.budget) == axis.end())
      axis.push_back(o.job.budget);
  return axis;
}

}  // namespace

void write_summary_csv(std::ostream& out, std::span<const RunOutcome> outcomes,
                       std::span<const DetectorConfig> detectors,
                       std::span<const std::int64_t> budgets) {
  const auto cells = collect(outcomes);
  out << "budget,detector,algorithm,runs,detection_rate_mean,detection_rate_std,fppi_mean,"
         "windows_mean,cost_mean\n";
  for (std::int64_t b : budget_axis(outcomes, budgets)) {
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      const auto it = cells.find({b, d});
      if (it == cells.end()) continue;
      const Cell& c = it->second;
      const MeanStd rate = mean_std(c.rate);
      out << b << ',' << detectors[d].name << ',' << to_string(detectors[d].algorithm) << ','
          << rate.n << ',' << format_number(rate.mean) << ',' << format_number(rate.stddev)
          << ',' << format_number(mean_std(c.fppi).mean) << ','
          << format_number(mean_std(c.windows).mean) << ','
          << format_number(mean_std(c.cost).mean) << '\n';
    }
  }
}

void write_compare_csv(std::ostream& out, std::span<const RunOutcome> outcomes,
                       std::span<const DetectorConfig> detectors,
                       std::span<const std::int64_t> budgets) {
  const auto cells = collect(outcomes);
  out << "budget";
  for (const DetectorConfig& d : detectors) out << ',' << d.name;
  out << '\n';
  for (std::int64_t b : budget_axis(outcomes, budgets)) {
    out << b;
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      const auto it = cells.find({b, d});
      out << ',' << (it == cells.end() ? std::string() : format_number(mean_std(it->second.rate).mean));
    }
    out << '\n';
  }
}

std::vector<EfficiencyRow> efficiency_table(std::span<const RunOutcome> outcomes,
                                            std::span<const DetectorConfig> detectors,
                                            std::span<const std::int64_t> budgets) {
  std::vector<EfficiencyRow> rows;
  if (detectors.empty()) return rows;
  std::size_t ref = 0;
  for (std::size_t d = 0; d < detectors.size(); ++d)
    if (detectors[d].algorithm == Algorithm::kMpw) {
      ref = d;
      break;
    }
  auto axis = budget_axis(outcomes, budgets);
  std::sort(axis.begin(), axis.end());
  const auto cells = collect(outcomes);
  auto rate_at = [&](std::size_t d, std::int64_t b) -> std::optional<double> {
    const auto it = cells.find({b, d});
    if (it == cells.end()) return std::nullopt;
    return mean_std(it->second.rate).mean;
  };
  for (std::int64_t b : axis) {
    const auto ref_rate = rate_at(ref, b);
    if (!ref_rate) continue;
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      if (d == ref || detectors[d].algorithm == Algorithm::kSlidingWindow) continue;
      EfficiencyRow row{detectors[ref].name, detectors[d].name, b, *ref_rate, 0, 0.0};
      for (std::int64_t c : axis) {
        const auto r = rate_at(d, c);
        if (r && *r >= *ref_rate) {
          row.matching_budget = c;
          row.ratio = static_cast<double>(c) / static_cast<double>(b);
          break;
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_efficiency_csv(std::ostream& out, std::span<const EfficiencyRow> rows) {
  out << "reference,detector,reference_budget,reference_rate,matching_budget,ratio\n";
  for (const EfficiencyRow& r : rows) {
    out << r.reference << ',' << r.detector << ',' << r.reference_budget << ','
        << format_number(r.reference_rate) << ',';
    if (r.matching_budget > 0)
      out << r.matching_budget << ',' << format_number(r.ratio);
    else
      out << ',';
    out << '\n';
  }
}

std::vector<SweepPoint> sweep_operating_points(std::span<const RunOutcome> outcomes,
                                               const ExperimentPlan& plan,
                                               std::span<const std::int64_t> budgets,
                                               std::span<const double> thresholds) {
  std::vector<SweepPoint> points;
  const auto axis = budget_axis(outcomes, budgets);
  for (std::int64_t b : axis) {
    for (std::size_t d = 0; d < plan.detectors.size(); ++d) {
      for (double thr : thresholds) {
        std::vector<double> rates, fppis;
        for (const RunOutcome& o : outcomes) {
          if (o.job.budget != b || o.job.detector != d || !o.trace) continue;
          const DetectionSet dets =
              nms(scored_as_detections(*o.trace, thr), plan.detectors[d].nms_threshold);
          const auto gt = plan.scenes[o.job.scene].ground_truth();
          const Metrics m = evaluate(dets, gt, plan.match_threshold);
          rates.push_back(m.detection_rate);
          fppis.push_back(m.fppi);
        }
        if (rates.empty()) continue;
        points.push_back(SweepPoint{plan.detectors[d].name, b, thr, mean_std(rates).mean,
                                    mean_std(fppis).mean});
      }
    }
  }
  return points;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points) {
  out << "detector,budget,threshold,detection_rate,fppi\n";
  for (const SweepPoint& p : points)
    out << p.detector << ',' << p.budget << ',' << format_number(p.threshold) << ','
        << format_number(p.detection_rate) << ',' << format_number(p.fppi) << '\n';
}

void write_timing_csv(std::ostream& out, std::span<const RunOutcome> outcomes) {
  out << "detector,scene,trial,budget,wall_ms\n";
  for (const RunOutcome& o : outcomes)
    out << o.detector_name << ',' << o.job.scene << ',' << o.job.trial << ',' << o.job.budget
        << ',' << format_number(o.wall_ms) << '\n';
}

}  // namespace ipw
