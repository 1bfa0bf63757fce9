#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace timebound {

/// Whole seconds since the Unix epoch, UTC. Negative values are rejected at
/// every ingest point; sub-second sources must be floored before construction.
struct Timestamp {
  std::int64_t seconds = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

enum class TimestampKind { modified, accessed, changed, created, other };

/// One observed timestamp on one object. category_label is carried verbatim
/// and never interpreted.
struct TraceObservation {
  std::string object_id;
  std::optional<std::string> action_label;
  std::optional<std::string> category_label;
  Timestamp timestamp;
  TimestampKind kind = TimestampKind::other;
};

/// How long after an action start one trace update landed, in seconds.
/// Durations are real-valued; timestamps stay integral.
struct DurationSample {
  double duration = 0.0;
  std::string action_label;
  std::string source_id;
};

/// Fitted update-latency model for one action: normal moments plus the
/// derived whole-second update threshold.
struct ActionProfile {
  std::string action_label;
  double mean = 0.0;
  double std_dev = 0.0;
  double sigma_multiplier = 2.0;
  std::int64_t threshold = 0;
  std::size_t sample_count = 0;
};

/// Closed interval [lower, upper] bounding when an action must have occurred.
struct TimeSpan {
  Timestamp lower;
  Timestamp upper;

  bool contains(Timestamp t) const { return lower <= t && t <= upper; }
  bool overlaps(const TimeSpan& other) const {
    return lower <= other.upper && other.lower <= upper;
  }
};

/// Traces attributed to a single action occurrence, sorted oldest to newest.
struct TraceGroup {
  std::vector<TraceObservation> traces;
  std::int64_t span_seconds = 0;

  // valid only for non-empty groups
  Timestamp oldest() const { return traces.front().timestamp; }
  Timestamp newest() const { return traces.back().timestamp; }
};

struct ActionInstance {
  std::string action_label;
  TraceGroup group;
  TimeSpan time_span;
  std::set<std::string> ambiguous_with;
};

/// An observation predates the action it is attributed to.
class ClockSkewError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Duration of each observation relative to a known action start.
inline std::vector<DurationSample> update_durations(
    const std::vector<TraceObservation>& observations, Timestamp action_start,
    const std::string& source_id = {}) {
  std::vector<DurationSample> samples;
  samples.reserve(observations.size());
  for (const TraceObservation& obs : observations) {
    if (obs.timestamp < action_start) {
      throw ClockSkewError("trace '" + obs.object_id + "' at " +
                           std::to_string(obs.timestamp.seconds) +
                           " predates action start " +
                           std::to_string(action_start.seconds));
    }
    samples.push_back(DurationSample{
        static_cast<double>(obs.timestamp.seconds - action_start.seconds),
        obs.action_label.value_or(""), source_id});
  }
  return samples;
}

}  // namespace timebound
