#include "ipw_tools/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "ipw/config.hpp"
#include "ipw/errors.hpp"
#include "ipw/trace_io.hpp"

namespace ipw::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "ipw_out";
  int jobs = 0;
  bool quiet = false;
  std::string detector;
  std::size_t scene = 0;
};

class Session {
 public:
  Session(const Options& opt, std::ostream& out, std::ostream& err)
      : opt_(opt), out_(out), err_(err) {}

  void load() {
    cfg_ = load_config(opt_.config);
    if (opt_.seed) cfg_.seed = *opt_.seed;
    if (!opt_.detector.empty()) {
      const auto it = std::find_if(cfg_.detectors.begin(), cfg_.detectors.end(),
                                   [&](const DetectorConfig& d) { return d.name == opt_.detector; });
      if (it == cfg_.detectors.end())
        throw ConfigError("detector", "no detector named '" + opt_.detector + "'");
      const auto idx = static_cast<std::size_t>(it - cfg_.detectors.begin());
      cfg_.detectors = {cfg_.detectors[idx]};
      cfg_.detector_budget_fractions = {cfg_.detector_budget_fractions[idx]};
    }
    plan_ = make_plan(cfg_);
    for (auto& d : plan_->detectors) d.seed = cfg_.seed;
    budgets_ = resolve_budgets(cfg_, plan_->space);
  }

  int validate() {
    load();
    out_ << "ok: " << opt_.config << " (" << plan_->detectors.size() << " detectors, "
         << plan_->scenes.size() << " scenes, N=" << plan_->space.size() << ")\n";
    return kOk;
  }

  int run_single() {
    load();
    if (plan_->detectors.size() != 1)
      throw ConfigError("detectors", "run needs exactly one detector (use --detector NAME)");
    plan_->keep_traces = true;
    const auto outcomes = execute({});
    std::ofstream curves = open("curves.csv");
    write_curves_header(curves);
    for (const RunOutcome& o : outcomes)
      write_curves_csv(curves, *o.trace, o.detector_name, o.job.scene, o.job.trial);
    finish(outcomes, {});
    return kOk;
  }

  int compare() {
    load();
    if (plan_->detectors.size() < 2)
      throw ConfigError("detectors", "compare needs at least two detectors");
    if (budgets_.empty())
      throw ConfigError("experiment.budgets", "compare needs a budget grid");
    const auto outcomes = execute(budgets_);
    {
      std::ofstream f = open("compare.csv");
      write_compare_csv(f, outcomes, plan_->detectors, budgets_);
    }
    {
      std::ofstream f = open("efficiency.csv");
      const auto rows = efficiency_table(outcomes, plan_->detectors, budgets_);
      write_efficiency_csv(f, rows);
    }
    finish(outcomes, budgets_);
    return kOk;
  }

  int sweep() {
    load();
    if (cfg_.sweep_thresholds.empty())
      throw ConfigError("experiment.sweep_thresholds", "sweep needs at least one threshold");
    plan_->keep_traces = true;
    const auto outcomes = execute(budgets_);
    std::ofstream f = open("sweep.csv");
    const auto points = sweep_operating_points(outcomes, *plan_, budgets_, cfg_.sweep_thresholds);
    write_sweep_csv(f, points);
    finish(outcomes, budgets_);
    return kOk;
  }

  int curves() {
    load();
    if (opt_.scene >= plan_->scenes.size())
      throw ConfigError("scene", "index out of range");
    std::ofstream f = open("curves.csv");
    write_curves_header(f);
    plan_->keep_traces = true;
    for (std::size_t d = 0; d < plan_->detectors.size(); ++d) {
      const RunJob job{d, opt_.scene, 0, plan_->detectors[d].budget};
      const RunOutcome o = run_job(*plan_, job);
      write_curves_csv(f, *o.trace, o.detector_name, o.job.scene, o.job.trial);
    }
    status("wrote " + (out_dir() / "curves.csv").string());
    return kOk;
  }

 private:
  std::vector<RunOutcome> execute(const std::vector<std::int64_t>& budgets) {
    const auto jobs = plan_jobs(*plan_, budgets);
    const int threads = opt_.jobs > 0
                            ? opt_.jobs
                            : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    progress("running " + std::to_string(jobs.size()) + " jobs on " + std::to_string(threads) +
             " threads");
    const auto t0 = std::chrono::steady_clock::now();
    auto outcomes = run_jobs(*plan_, jobs, threads);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    progress("done in " + format_number(std::round(secs * 100.0) / 100.0) + " s");
    return outcomes;
  }

  void finish(const std::vector<RunOutcome>& outcomes, const std::vector<std::int64_t>& budgets) {
    {
      std::ofstream f = open("runs.jsonl");
      write_jsonl(f, outcomes);
    }
    {
      std::ofstream f = open("summary.csv");
      write_summary_csv(f, outcomes, plan_->detectors, budgets);
    }
    {
      std::ofstream f = open("timing.csv");
      write_timing_csv(f, outcomes);
    }
    status("wrote results to " + out_dir().string());
  }

  fs::path out_dir() const { return fs::path(opt_.out_dir); }

  std::ofstream open(const std::string& name) {
    fs::create_directories(out_dir());
    const fs::path p = out_dir() / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  }

  void status(const std::string& msg) {
    if (!opt_.quiet) out_ << msg << '\n';
  }
  void progress(const std::string& msg) {
    if (!opt_.quiet) err_ << msg << '\n';
  }

  const Options& opt_;
  std::ostream& out_;
  std::ostream& err_;
  ExperimentConfig cfg_;
  std::optional<ExperimentPlan> plan_;
  std::vector<std::int64_t> budgets_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Rejection-oriented particle-window sampling experiments"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub, bool outputs) {
    sub->add_option("--config", opt.config, "Experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Override the master seed");
    sub->add_option("--detector", opt.detector, "Restrict to one named detector");
    if (outputs) {
      sub->add_option("--out", opt.out_dir, "Output directory");
      sub->add_option("--jobs", opt.jobs, "Worker threads (0 = hardware concurrency)")
          ->check(CLI::NonNegativeNumber);
      sub->add_flag("--quiet", opt.quiet, "Suppress progress output");
    }
  };

  auto* run_cmd = app.add_subcommand("run", "Run one detector over the configured scenes");
  auto* compare_cmd = app.add_subcommand("compare", "Detection rate per budget and detector");
  auto* sweep_cmd = app.add_subcommand("sweep", "Operating points over score thresholds");
  auto* curves_cmd = app.add_subcommand("curves", "Per-iteration region counters for one scene");
  auto* validate_cmd = app.add_subcommand("validate-config", "Parse and check a config");
  common(run_cmd, true);
  common(compare_cmd, true);
  common(sweep_cmd, true);
  common(curves_cmd, true);
  curves_cmd->add_option("--scene", opt.scene, "Scene index");
  common(validate_cmd, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  Session session(opt, out, err);
  try {
    if (run_cmd->parsed()) return session.run_single();
    if (compare_cmd->parsed()) return session.compare();
    if (sweep_cmd->parsed()) return session.sweep();
    if (curves_cmd->parsed()) return session.curves();
    return session.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace ipw::cli
