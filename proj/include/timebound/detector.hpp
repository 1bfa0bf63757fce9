#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "timebound/model.hpp"

namespace timebound {

/// Output of running one action profile over a timeline. Every input trace
/// lands in exactly one instance or in unattributed.
struct DetectionResult {
  std::vector<ActionInstance> instances;
  std::vector<TraceObservation> unattributed;
  ActionProfile profile_used;
};

/// Group sorted timestamps into action-instance candidates. The rule is a
/// span bound, not a gap bound: a trace joins the current group iff its
/// timestamp is within `threshold` seconds of the group's oldest timestamp.
/// Ties on equal timestamps are broken by object_id so the scan is
/// deterministic. Concatenating the groups reproduces the sorted input.
inline std::vector<TraceGroup> group_traces(std::vector<TraceObservation> traces,
                                            std::int64_t threshold) {
  if (threshold < 0) {
    throw std::invalid_argument("threshold must be non-negative");
  }
  std::sort(traces.begin(), traces.end(),
            [](const TraceObservation& a, const TraceObservation& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.object_id < b.object_id;
            });

  std::vector<TraceGroup> groups;
  for (TraceObservation& obs : traces) {
    if (groups.empty() ||
        obs.timestamp.seconds - groups.back().oldest().seconds > threshold) {
      groups.emplace_back();
    }
    groups.back().traces.push_back(std::move(obs));
  }
  for (TraceGroup& g : groups) {
    g.span_seconds = g.newest().seconds - g.oldest().seconds;
  }
  return groups;
}

/// Bound the true action time of a grouped instance:
/// newest - threshold <= action time <= oldest, floored at the epoch.
inline TimeSpan bound_instance(const TraceGroup& group, std::int64_t threshold) {
  if (group.traces.empty()) {
    throw std::invalid_argument("cannot bound an empty group");
  }
  if (threshold < 0) {
    throw std::invalid_argument("threshold must be non-negative");
  }
  if (group.newest().seconds - group.oldest().seconds > threshold) {
    throw std::invalid_argument(
        "group span " +
        std::to_string(group.newest().seconds - group.oldest().seconds) +
        " s exceeds threshold " + std::to_string(threshold) + " s");
  }
  TimeSpan span;
  span.lower.seconds = std::max<std::int64_t>(
      0, group.newest().seconds - threshold);
  span.upper = group.oldest();
  return span;
}

/// Detect all instances of one action on a timeline. Unlabeled traces are
/// kept (post-mortem data carries no labels); traces labeled with a
/// different action go to unattributed.
inline DetectionResult detect_instances(
    const std::vector<TraceObservation>& traces, const ActionProfile& profile) {
  if (profile.threshold < 0) {
    throw std::invalid_argument("profile threshold must be non-negative");
  }
  DetectionResult result;
  result.profile_used = profile;

  std::vector<TraceObservation> matching;
  matching.reserve(traces.size());
  for (const TraceObservation& obs : traces) {
    if (!obs.action_label.has_value() ||
        *obs.action_label == profile.action_label) {
      matching.push_back(obs);
    } else {
      result.unattributed.push_back(obs);
    }
  }

  for (TraceGroup& group : group_traces(std::move(matching), profile.threshold)) {
    TimeSpan span = bound_instance(group, profile.threshold);
    result.instances.push_back(ActionInstance{
        profile.action_label, std::move(group), span, {}});
  }
  return result;
}

/// Mark instances of different actions whose time-spans overlap (closed
/// intervals; a shared boundary second counts). Mutates the instances inside
/// the given results.
inline void annotate_ambiguities(std::vector<DetectionResult>& results) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t j = i + 1; j < results.size(); ++j) {
      if (results[i].profile_used.action_label ==
          results[j].profile_used.action_label) {
        throw std::invalid_argument(
            "duplicate action label across detection results: '" +
            results[i].profile_used.action_label + "'");
      }
    }
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t j = i + 1; j < results.size(); ++j) {
      for (ActionInstance& a : results[i].instances) {
        for (ActionInstance& b : results[j].instances) {
          if (a.time_span.overlaps(b.time_span)) {
            a.ambiguous_with.insert(b.action_label);
            b.ambiguous_with.insert(a.action_label);
          }
        }
      }
    }
  }
}

/// Flattened, ambiguity-annotated view over per-action detection results.
inline std::vector<ActionInstance> flag_ambiguities(
    std::vector<DetectionResult> results) {
  annotate_ambiguities(results);
  std::vector<ActionInstance> instances;
  for (DetectionResult& r : results) {
    for (ActionInstance& inst : r.instances) {
      instances.push_back(std::move(inst));
    }
  }
  return instances;
}

}  // namespace timebound
