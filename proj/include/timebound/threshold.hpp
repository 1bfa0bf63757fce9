#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "timebound/model.hpp"

namespace timebound {

struct HistogramBin {
  std::int64_t lower_edge = 0;
  std::size_t count = 0;
};

/// Fixed-width histogram over update durations. Bins are half-open
/// [edge, edge + bin_width), anchored at 0, and run consecutively from 0
/// through the bin holding the largest duration.
struct Histogram {
  std::int64_t bin_width = 1;
  std::vector<HistogramBin> bins;
  std::size_t total = 0;
};

struct RefinementConfig {
  std::int64_t initial_threshold = 120;
  int passes = 2;
  std::int64_t noise_gap = 120;
};

/// One known execution of an action together with the traces collected
/// after it (the action's own updates plus whatever noise landed nearby).
struct LabeledRun {
  Timestamp action_start;
  std::vector<TraceObservation> observations;
};

/// Threshold = max(0, ceil(mean + sigma_multiplier * std_dev)), whole seconds.
inline std::int64_t compute_threshold(double mean, double std_dev,
                                      double sigma_multiplier) {
  if (std_dev < 0.0) {
    throw std::invalid_argument("std_dev must be non-negative");
  }
  if (sigma_multiplier <= 0.0) {
    throw std::invalid_argument("sigma_multiplier must be positive");
  }
  const double upper = std::ceil(mean + sigma_multiplier * std_dev);
  return std::max<std::int64_t>(0, static_cast<std::int64_t>(upper));
}

/// Fit a normal model to duration samples. std_dev uses the n-1 sample
/// denominator and is 0 for a single sample.
inline ActionProfile fit_profile(const std::vector<DurationSample>& samples,
                                 double sigma_multiplier = 2.0) {
  if (samples.empty()) {
    throw std::invalid_argument("cannot fit a profile from zero samples");
  }
  const std::string& label = samples.front().action_label;
  for (const DurationSample& s : samples) {
    if (s.action_label != label) {
      throw std::invalid_argument("mixed action labels in sample set: '" +
                                  label + "' vs '" + s.action_label + "'");
    }
  }

  const std::size_t n = samples.size();
  double sum = 0.0;
  for (const DurationSample& s : samples) sum += s.duration;
  const double mean = sum / static_cast<double>(n);

  double sq = 0.0;
  for (const DurationSample& s : samples) {
    const double d = s.duration - mean;
    sq += d * d;
  }
  const double std_dev =
      n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;

  return ActionProfile{label,    mean,
                       std_dev,  sigma_multiplier,
                       compute_threshold(mean, std_dev, sigma_multiplier), n};
}

inline Histogram build_histogram(const std::vector<DurationSample>& samples,
                                 std::int64_t bin_width = 10) {
  if (bin_width < 1) {
    throw std::invalid_argument("bin_width must be at least 1");
  }
  Histogram h;
  h.bin_width = bin_width;
  if (samples.empty()) return h;

  std::size_t max_index = 0;
  for (const DurationSample& s : samples) {
    if (s.duration < 0.0) {
      throw std::invalid_argument("negative duration in histogram input");
    }
    const auto idx = static_cast<std::size_t>(s.duration /
                                              static_cast<double>(bin_width));
    max_index = std::max(max_index, idx);
  }
  h.bins.resize(max_index + 1);
  for (std::size_t i = 0; i <= max_index; ++i) {
    h.bins[i].lower_edge = static_cast<std::int64_t>(i) * bin_width;
  }
  for (const DurationSample& s : samples) {
    const auto idx = static_cast<std::size_t>(s.duration /
                                              static_cast<double>(bin_width));
    h.bins[idx].count += 1;
  }
  h.total = samples.size();
  return h;
}

/// Two-pass threshold refinement over known executions. Pass 1 keeps, per
/// run, the observations within initial_threshold of the run's start; the
/// run's update duration is the slowest retained trace. Each further pass
/// refits the model from those per-run durations and re-filters with the new
/// threshold. The filter and the returned threshold never exceed
/// initial_threshold. Runs that retain nothing are dropped (reported through
/// warnings); dropping every run is an error.
inline ActionProfile refine_profile(const std::vector<LabeledRun>& runs,
                                    const RefinementConfig& config = {},
                                    double sigma_multiplier = 2.0,
                                    std::vector<std::string>* warnings = nullptr) {
  if (config.initial_threshold < 1) {
    throw std::invalid_argument("initial_threshold must be at least 1");
  }
  if (config.passes < 1) {
    throw std::invalid_argument("passes must be at least 1");
  }
  if (runs.empty()) {
    throw std::invalid_argument("refinement needs at least one run");
  }

  std::vector<std::vector<DurationSample>> run_durations;
  run_durations.reserve(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].observations.empty()) {
      throw std::invalid_argument("run " + std::to_string(r) +
                                  " has no observations");
    }
    std::vector<DurationSample> durations;
    durations.reserve(runs[r].observations.size());
    for (const TraceObservation& obs : runs[r].observations) {
      // observations before the run start are unrelated activity, never
      // attributable to the action; they are simply not retained
      durations.push_back(DurationSample{
          static_cast<double>(obs.timestamp.seconds -
                              runs[r].action_start.seconds),
          obs.action_label.value_or(""), "run-" + std::to_string(r)});
    }
    run_durations.push_back(std::move(durations));
  }

  std::vector<bool> dropped(runs.size(), false);
  std::int64_t threshold = config.initial_threshold;
  ActionProfile profile;

  for (int pass = 0; pass < config.passes; ++pass) {
    std::vector<DurationSample> per_run_max;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (dropped[r]) continue;
      const DurationSample* slowest = nullptr;
      for (const DurationSample& d : run_durations[r]) {
        if (d.duration < 0.0 ||
            d.duration > static_cast<double>(threshold)) {
          continue;
        }
        if (slowest == nullptr || d.duration > slowest->duration) {
          slowest = &d;
        }
      }
      if (slowest == nullptr) {
        dropped[r] = true;
        if (warnings != nullptr) {
          warnings->push_back("run " + std::to_string(r) +
                              ": no observations within " +
                              std::to_string(threshold) + " s; run dropped");
        }
        continue;
      }
      per_run_max.push_back(*slowest);
    }
    if (per_run_max.empty()) {
      throw std::runtime_error("refinement retained no observations in any run");
    }
    profile = fit_profile(per_run_max, sigma_multiplier);
    threshold = std::min(profile.threshold, config.initial_threshold);
  }

  profile.threshold = threshold;
  return profile;
}

/// Pool per-machine profiles into one representative profile. Reconstructs
/// the combined first and second moments from (mean, std_dev, sample_count)
/// and refits the threshold from the pooled moments.
inline ActionProfile merge_profiles(const std::vector<ActionProfile>& profiles) {
  if (profiles.empty()) {
    throw std::invalid_argument("cannot merge zero profiles");
  }
  const std::string& label = profiles.front().action_label;
  for (const ActionProfile& p : profiles) {
    if (p.action_label != label) {
      throw std::invalid_argument("mixed action labels in merge: '" + label +
                                  "' vs '" + p.action_label + "'");
    }
    if (p.sample_count < 1) {
      throw std::invalid_argument("profile with zero samples in merge");
    }
  }

  long double n_total = 0.0L;
  long double sum = 0.0L;
  long double sum_sq = 0.0L;
  for (const ActionProfile& p : profiles) {
    const auto n = static_cast<long double>(p.sample_count);
    const auto m = static_cast<long double>(p.mean);
    const auto s = static_cast<long double>(p.std_dev);
    n_total += n;
    sum += n * m;
    sum_sq += (n - 1.0L) * s * s + n * m * m;
  }
  const long double mean = sum / n_total;
  long double variance = 0.0L;
  if (n_total > 1.0L) {
    variance = (sum_sq - n_total * mean * mean) / (n_total - 1.0L);
    variance = std::max(variance, 0.0L);
  }
  const double pooled_mean = static_cast<double>(mean);
  const double pooled_sd = static_cast<double>(std::sqrt(variance));
  const double multiplier = profiles.front().sigma_multiplier;

  return ActionProfile{
      label,
      pooled_mean,
      pooled_sd,
      multiplier,
      compute_threshold(pooled_mean, pooled_sd, multiplier),
      static_cast<std::size_t>(n_total)};
}

}  // namespace timebound
