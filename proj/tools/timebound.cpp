// timebound — estimate per-action timestamp-update thresholds, group raw
// timeline timestamps into action instances, and bound when each instance
// must have occurred.
//
// Reports go to --out (default stdout); diagnostics go to stderr.

#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "timebound/timebound.hpp"

namespace {

using namespace timebound;

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!std::cout) throw std::runtime_error("write to stdout failed");
  } else {
    spill_file(out_path, content);
  }
}

int run_fit(const std::string& samples_path, double sigma_multiplier,
            std::int64_t initial_threshold, const std::string& out_path) {
  std::istringstream input(slurp_file(samples_path));
  const std::vector<DurationSample> all = parse_samples(input);

  // exploratory association gate: durations beyond it cannot belong to the
  // action being profiled
  std::map<std::string, std::vector<DurationSample>> by_action;
  std::size_t gated = 0;
  for (const DurationSample& s : all) {
    if (s.duration > static_cast<double>(initial_threshold)) {
      ++gated;
      continue;
    }
    by_action[s.action_label].push_back(s);
  }
  if (gated > 0) {
    std::cerr << "timebound: " << gated << " sample(s) beyond "
              << initial_threshold << " s excluded from fitting\n";
  }
  if (by_action.empty()) {
    throw std::runtime_error("no samples within " +
                             std::to_string(initial_threshold) +
                             " s in '" + samples_path + "'");
  }

  std::vector<ActionProfile> profiles;
  for (const auto& [label, samples] : by_action) {
    profiles.push_back(fit_profile(samples, sigma_multiplier));
  }
  emit(out_path, write_profiles_report(profiles));
  return 0;
}

int run_detect(const std::string& bodyfile_path,
               const std::string& profiles_path, const std::string& out_path) {
  std::istringstream body(slurp_file(bodyfile_path));
  const std::vector<TraceObservation> timeline = parse_bodyfile(body);
  const std::vector<ActionProfile> profiles =
      read_profiles_report(slurp_file(profiles_path));
  if (profiles.empty()) {
    throw std::runtime_error("no profiles in '" + profiles_path + "'");
  }

  std::vector<DetectionResult> results;
  for (const ActionProfile& profile : profiles) {
    results.push_back(detect_instances(timeline, profile));
  }
  annotate_ambiguities(results);
  emit(out_path, write_detection_report(results));
  return 0;
}

int run_simulate(const std::string& scenario_path,
                 std::optional<std::uint64_t> seed_override,
                 const std::string& out_path, std::string truth_path) {
  Scenario scenario = read_scenario(slurp_file(scenario_path));
  if (seed_override) scenario.seed = *seed_override;

  const SimulationOutput output = simulate(scenario);
  if (truth_path.empty() && !out_path.empty()) {
    truth_path = out_path + ".truth.json";
  }
  emit(out_path, write_bodyfile(output.timeline));
  if (!truth_path.empty()) {
    spill_file(truth_path, write_truth_report(output.truth));
  } else {
    std::cerr << "timebound: no --out or --truth-out given; "
                 "truth report not written\n";
  }
  return 0;
}

int run_evaluate(const std::string& detection_path,
                 const std::string& truth_path, const std::string& out_path) {
  const std::vector<DetectionResult> results =
      read_detection_report(slurp_file(detection_path));
  if (results.size() != 1) {
    throw std::runtime_error("expected exactly one detection result in '" +
                             detection_path + "', got " +
                             std::to_string(results.size()));
  }
  const GroundTruth truth = read_truth_report(slurp_file(truth_path));
  emit(out_path, write_report(evaluate(results.front(), truth)));
  return 0;
}

int run_histogram(const std::string& samples_path, std::int64_t bin_width,
                  const std::string& out_path) {
  std::istringstream input(slurp_file(samples_path));
  const std::vector<DurationSample> samples = parse_samples(input);
  emit(out_path, write_histogram_csv(build_histogram(samples, bin_width)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "timestamp-update threshold estimation and action-instance "
      "time bounding"};
  app.require_subcommand(1);

  std::string out_path;
  const auto add_out_option = [&out_path](CLI::App* sub) {
    sub->add_option("--out", out_path,
                    "write the report here instead of stdout");
  };

  // fit
  std::string samples_path;
  double sigma_multiplier = 2.0;
  std::int64_t initial_threshold = 120;
  CLI::App* fit = app.add_subcommand(
      "fit", "fit per-action update-threshold profiles from a samples CSV");
  fit->add_option("samples", samples_path,
                  "CSV with header action,source,duration_seconds")
      ->required();
  fit->add_option("--sigma-multiplier", sigma_multiplier,
                  "threshold limiter k in mean + k*std_dev")
      ->capture_default_str();
  fit->add_option("--initial-threshold", initial_threshold,
                  "exclude durations beyond this many seconds before fitting")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_out_option(fit);

  // detect
  std::string bodyfile_path;
  std::string profiles_path;
  CLI::App* detect = app.add_subcommand(
      "detect", "group a bodyfile timeline into bounded action instances");
  detect->add_option("bodyfile", bodyfile_path, "pipe-delimited timeline")
      ->required();
  detect->add_option("profiles", profiles_path, "profile report from fit")
      ->required();
  add_out_option(detect);

  // simulate
  std::string scenario_path;
  std::string truth_path;
  std::optional<std::uint64_t> seed_override;
  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "generate a bodyfile timeline plus ground truth");
  simulate_cmd->add_option("scenario", scenario_path, "scenario JSON file")
      ->required();
  simulate_cmd->add_option("--seed", seed_override,
                           "override the scenario's seed");
  simulate_cmd->add_option(
      "--truth-out", truth_path,
      "truth report path (default: <out>.truth.json when --out is set)");
  add_out_option(simulate_cmd);

  // evaluate
  std::string detection_path;
  std::string truth_in_path;
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "score a detection report against simulator ground truth");
  evaluate_cmd->add_option("detection", detection_path, "report from detect")
      ->required();
  evaluate_cmd->add_option("truth", truth_in_path, "truth report from simulate")
      ->required();
  add_out_option(evaluate_cmd);

  // histogram
  std::string hist_samples_path;
  std::int64_t bin_width = 10;
  CLI::App* histogram_cmd = app.add_subcommand(
      "histogram", "bin update durations into a plot-ready CSV");
  histogram_cmd
      ->add_option("samples", hist_samples_path,
                   "CSV with header action,source,duration_seconds")
      ->required();
  histogram_cmd->add_option("--bin-width", bin_width, "bin width in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_out_option(histogram_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      return run_fit(samples_path, sigma_multiplier, initial_threshold,
                     out_path);
    }
    if (detect->parsed()) {
      return run_detect(bodyfile_path, profiles_path, out_path);
    }
    if (simulate_cmd->parsed()) {
      return run_simulate(scenario_path, seed_override, out_path, truth_path);
    }
    if (evaluate_cmd->parsed()) {
      return run_evaluate(detection_path, truth_in_path, out_path);
    }
    if (histogram_cmd->parsed()) {
      return run_histogram(hist_samples_path, bin_width, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "timebound: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
