#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "timebound/model.hpp"
#include "timebound/detector.hpp"
#include "timebound/simulator.hpp"
#include "timebound/threshold.hpp"

namespace timebound {

using json = nlohmann::json;

/// Input rejected at a specific line. Parsing is strict: malformed forensic
/// input fails loudly, it is never silently repaired.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One line of the pipe-delimited body timeline format:
/// MD5|name|inode|mode|UID|GID|size|atime|mtime|ctime|crtime
/// Timestamps are epoch seconds; 0 and -1 both mean "not recorded".
struct BodyfileRecord {
  std::string md5;
  std::string name;
  std::string inode;
  std::string mode;
  std::string uid;
  std::string gid;
  std::string size;
  std::int64_t atime = 0;
  std::int64_t mtime = 0;
  std::int64_t ctime = 0;
  std::int64_t crtime = 0;
};

namespace detail {

inline bool parse_int64(std::string_view text, std::int64_t& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !text.empty();
}

inline bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !text.empty();
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

inline std::string iso8601_utc(std::int64_t epoch_seconds) {
  // civil-from-days on the proleptic Gregorian calendar; inputs are >= 0
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  const std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t day = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t month = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t year = yoe + era * 400 + (month <= 2 ? 1 : 0);

  char buffer[72];
  std::snprintf(buffer, sizeof(buffer),
                "%04lld-%02lld-%02lldT%02lld:%02lld:%02lldZ",
                static_cast<long long>(year), static_cast<long long>(month),
                static_cast<long long>(day), static_cast<long long>(rem / 3600),
                static_cast<long long>((rem % 3600) / 60),
                static_cast<long long>(rem % 60));
  return buffer;
}

// ---------------------------------------------------------------------------
// bodyfile

inline std::vector<BodyfileRecord> parse_bodyfile_records(std::istream& input) {
  std::vector<BodyfileRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty() || line.front() == '#') continue;

    const std::vector<std::string> fields = detail::split(line, '|');
    if (fields.size() != 11) {
      throw ParseError(line_no, "expected 11 pipe-delimited fields, got " +
                                    std::to_string(fields.size()));
    }
    BodyfileRecord record;
    record.md5 = fields[0];
    record.name = fields[1];
    record.inode = fields[2];
    record.mode = fields[3];
    record.uid = fields[4];
    record.gid = fields[5];
    record.size = fields[6];
    if (record.name.empty()) {
      throw ParseError(line_no, "empty name field");
    }

    std::int64_t* const stamps[4] = {&record.atime, &record.mtime,
                                     &record.ctime, &record.crtime};
    for (int i = 0; i < 4; ++i) {
      const std::string& field = fields[7 + i];
      if (!detail::parse_int64(field, *stamps[i])) {
        throw ParseError(line_no, "non-integer timestamp '" + field + "'");
      }
      if (*stamps[i] < -1) {
        throw ParseError(line_no, "negative timestamp '" + field + "'");
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

/// Expand each record into one observation per recorded timestamp, in
/// atime, mtime, ctime, crtime order. 0 and -1 stamps are skipped.
inline std::vector<TraceObservation> parse_bodyfile(std::istream& input) {
  std::vector<TraceObservation> observations;
  for (const BodyfileRecord& record : parse_bodyfile_records(input)) {
    const std::pair<std::int64_t, TimestampKind> stamps[4] = {
        {record.atime, TimestampKind::accessed},
        {record.mtime, TimestampKind::modified},
        {record.ctime, TimestampKind::changed},
        {record.crtime, TimestampKind::created}};
    for (const auto& [value, kind] : stamps) {
      if (value == 0 || value == -1) continue;
      TraceObservation obs;
      obs.object_id = record.name;
      obs.timestamp.seconds = value;
      obs.kind = kind;
      observations.push_back(std::move(obs));
    }
  }
  return observations;
}

inline std::string write_bodyfile(
    const std::vector<TraceObservation>& observations) {
  std::string out;
  for (const TraceObservation& obs : observations) {
    std::int64_t atime = 0, mtime = 0, ctime = 0, crtime = 0;
    switch (obs.kind) {
      case TimestampKind::accessed: atime = obs.timestamp.seconds; break;
      case TimestampKind::modified: mtime = obs.timestamp.seconds; break;
      case TimestampKind::changed:  ctime = obs.timestamp.seconds; break;
      case TimestampKind::created:  crtime = obs.timestamp.seconds; break;
      case TimestampKind::other:
        throw std::invalid_argument(
            "observation '" + obs.object_id +
            "' has no bodyfile column for timestamp kind 'other'");
    }
    out += "0|" + obs.object_id + "|0|-|0|0|0|" + std::to_string(atime) + "|" +
           std::to_string(mtime) + "|" + std::to_string(ctime) + "|" +
           std::to_string(crtime) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// duration samples CSV

inline std::vector<DurationSample> parse_samples(std::istream& input) {
  std::vector<DurationSample> samples;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(input, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "action,source,duration_seconds") {
        throw ParseError(line_no,
                         "expected header 'action,source,duration_seconds'");
      }
      saw_header = true;
      continue;
    }
    const std::vector<std::string> fields = detail::split(line, ',');
    if (fields.size() != 3) {
      throw ParseError(line_no, "expected 3 comma-separated fields, got " +
                                    std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      throw ParseError(line_no, "empty action field");
    }
    double duration = 0.0;
    if (!detail::parse_double(fields[2], duration)) {
      throw ParseError(line_no, "malformed duration '" + fields[2] + "'");
    }
    if (!(duration >= 0.0)) {
      throw ParseError(line_no, "negative duration '" + fields[2] + "'");
    }
    samples.push_back(DurationSample{duration, fields[0], fields[1]});
  }
  if (!saw_header) {
    throw ParseError(1, "missing header 'action,source,duration_seconds'");
  }
  return samples;
}

// ---------------------------------------------------------------------------
// JSON reports
//
// Reports are canonical: keys serialize in sorted order, indentation is two
// spaces, documents end with a newline, and timestamps render as epoch
// seconds plus an ISO-8601 UTC string. serialize -> parse -> serialize is
// byte-identical.

inline std::string canonical_text(const json& document) {
  return document.dump(2) + "\n";
}

inline json timestamp_to_json(Timestamp t) {
  return json{{"epoch_seconds", t.seconds}, {"iso8601", iso8601_utc(t.seconds)}};
}

inline Timestamp timestamp_from_json(const json& j) {
  Timestamp t{j.at("epoch_seconds").get<std::int64_t>()};
  if (t.seconds < 0) {
    throw std::runtime_error("timestamp precedes epoch");
  }
  return t;
}

inline std::string to_string(TimestampKind kind) {
  switch (kind) {
    case TimestampKind::modified: return "modified";
    case TimestampKind::accessed: return "accessed";
    case TimestampKind::changed:  return "changed";
    case TimestampKind::created:  return "created";
    case TimestampKind::other:    return "other";
  }
  return "other";
}

inline TimestampKind kind_from_string(const std::string& name) {
  if (name == "modified") return TimestampKind::modified;
  if (name == "accessed") return TimestampKind::accessed;
  if (name == "changed") return TimestampKind::changed;
  if (name == "created") return TimestampKind::created;
  if (name == "other") return TimestampKind::other;
  throw std::runtime_error("unknown timestamp kind '" + name + "'");
}

inline json observation_to_json(const TraceObservation& obs) {
  json j{{"kind", to_string(obs.kind)},
         {"object_id", obs.object_id},
         {"timestamp", timestamp_to_json(obs.timestamp)}};
  if (obs.action_label) j["action_label"] = *obs.action_label;
  if (obs.category_label) j["category_label"] = *obs.category_label;
  return j;
}

inline TraceObservation observation_from_json(const json& j) {
  TraceObservation obs;
  obs.object_id = j.at("object_id").get<std::string>();
  obs.timestamp = timestamp_from_json(j.at("timestamp"));
  obs.kind = kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("action_label")) {
    obs.action_label = j.at("action_label").get<std::string>();
  }
  if (j.contains("category_label")) {
    obs.category_label = j.at("category_label").get<std::string>();
  }
  return obs;
}

inline json profile_to_json(const ActionProfile& profile) {
  return json{{"action_label", profile.action_label},
              {"mean_seconds", profile.mean},
              {"sample_count", profile.sample_count},
              {"sigma_multiplier", profile.sigma_multiplier},
              {"std_dev_seconds", profile.std_dev},
              {"threshold_seconds", profile.threshold}};
}

inline ActionProfile profile_from_json(const json& j) {
  ActionProfile profile;
  profile.action_label = j.at("action_label").get<std::string>();
  profile.mean = j.at("mean_seconds").get<double>();
  profile.std_dev = j.at("std_dev_seconds").get<double>();
  profile.sigma_multiplier = j.at("sigma_multiplier").get<double>();
  profile.threshold = j.at("threshold_seconds").get<std::int64_t>();
  profile.sample_count = j.at("sample_count").get<std::size_t>();
  if (profile.std_dev < 0 || profile.sigma_multiplier <= 0 ||
      profile.threshold < 0 || profile.sample_count < 1) {
    throw std::runtime_error("invalid profile for action '" +
                             profile.action_label + "'");
  }
  return profile;
}

inline json instance_to_json(const ActionInstance& instance) {
  json traces = json::array();
  for (const TraceObservation& obs : instance.group.traces) {
    traces.push_back(observation_to_json(obs));
  }
  return json{{"action_label", instance.action_label},
              {"ambiguous_with", instance.ambiguous_with},
              {"group",
               {{"span_seconds", instance.group.span_seconds},
                {"traces", traces}}},
              {"time_span",
               {{"lower", timestamp_to_json(instance.time_span.lower)},
                {"upper", timestamp_to_json(instance.time_span.upper)}}}};
}

inline ActionInstance instance_from_json(const json& j) {
  ActionInstance instance;
  instance.action_label = j.at("action_label").get<std::string>();
  for (const json& label : j.at("ambiguous_with")) {
    instance.ambiguous_with.insert(label.get<std::string>());
  }
  const json& group = j.at("group");
  instance.group.span_seconds = group.at("span_seconds").get<std::int64_t>();
  for (const json& obs : group.at("traces")) {
    instance.group.traces.push_back(observation_from_json(obs));
  }
  instance.time_span.lower = timestamp_from_json(j.at("time_span").at("lower"));
  instance.time_span.upper = timestamp_from_json(j.at("time_span").at("upper"));
  return instance;
}

inline json detection_result_to_json(const DetectionResult& result) {
  json instances = json::array();
  for (const ActionInstance& inst : result.instances) {
    instances.push_back(instance_to_json(inst));
  }
  json unattributed = json::array();
  for (const TraceObservation& obs : result.unattributed) {
    unattributed.push_back(observation_to_json(obs));
  }
  return json{{"instances", instances},
              {"profile", profile_to_json(result.profile_used)},
              {"unattributed", unattributed}};
}

inline DetectionResult detection_result_from_json(const json& j) {
  DetectionResult result;
  for (const json& inst : j.at("instances")) {
    result.instances.push_back(instance_from_json(inst));
  }
  for (const json& obs : j.at("unattributed")) {
    result.unattributed.push_back(observation_from_json(obs));
  }
  result.profile_used = profile_from_json(j.at("profile"));
  return result;
}

inline json evaluation_to_json(const EvaluationReport& report) {
  return json{{"containment_rate", report.containment_rate},
              {"containment_vacuous", report.containment_vacuous},
              {"instance_count_detected", report.instance_count_detected},
              {"instance_count_true", report.instance_count_true},
              {"merged_instances", report.merged_instances},
              {"split_instances", report.split_instances}};
}

inline EvaluationReport evaluation_from_json(const json& j) {
  EvaluationReport report;
  report.containment_rate = j.at("containment_rate").get<double>();
  report.containment_vacuous = j.at("containment_vacuous").get<bool>();
  report.instance_count_detected =
      j.at("instance_count_detected").get<std::size_t>();
  report.instance_count_true = j.at("instance_count_true").get<std::size_t>();
  report.merged_instances = j.at("merged_instances").get<std::size_t>();
  report.split_instances = j.at("split_instances").get<std::size_t>();
  return report;
}

inline json latency_to_json(const LatencyModel& model) {
  switch (model.kind) {
    case LatencyKind::normal_truncated_at_zero:
      return json{{"kind", "normal_truncated_at_zero"},
                  {"mean", model.param_a},
                  {"std_dev", model.param_b}};
    case LatencyKind::uniform:
      return json{{"kind", "uniform"},
                  {"lower", model.param_a},
                  {"upper", model.param_b}};
    case LatencyKind::constant:
      return json{{"kind", "constant"}, {"value", model.param_a}};
  }
  throw std::logic_error("unreachable latency kind");
}

inline LatencyModel latency_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  LatencyModel model;
  if (kind == "normal_truncated_at_zero") {
    model.kind = LatencyKind::normal_truncated_at_zero;
    model.param_a = j.at("mean").get<double>();
    model.param_b = j.at("std_dev").get<double>();
  } else if (kind == "uniform") {
    model.kind = LatencyKind::uniform;
    model.param_a = j.at("lower").get<double>();
    model.param_b = j.at("upper").get<double>();
  } else if (kind == "constant") {
    model.kind = LatencyKind::constant;
    model.param_a = j.at("value").get<double>();
  } else {
    throw std::runtime_error("unknown latency kind '" + kind + "'");
  }
  validate_latency_model(model);
  return model;
}

// Scenario files are hand-written input; timestamps stay plain integers.
inline json scenario_to_json(const Scenario& scenario) {
  json actions = json::array();
  for (const ScenarioAction& action : scenario.actions) {
    actions.push_back(json{{"label", action.action_label},
                           {"latency", latency_to_json(action.latency)},
                           {"trace_count", action.trace_count},
                           {"true_time", action.true_time.seconds}});
  }
  json noise = json::array();
  for (const NoiseBurst& burst : scenario.noise) {
    noise.push_back(
        json{{"count", burst.count}, {"timestamp", burst.timestamp.seconds}});
  }
  return json{{"actions", actions}, {"noise", noise}, {"seed", scenario.seed}};
}

inline Scenario scenario_from_json(const json& j) {
  Scenario scenario;
  scenario.seed = j.value("seed", std::uint64_t{0});
  for (const json& entry : j.at("actions")) {
    ScenarioAction action;
    action.action_label = entry.at("label").get<std::string>();
    action.true_time.seconds = entry.at("true_time").get<std::int64_t>();
    action.trace_count = entry.at("trace_count").get<std::size_t>();
    action.latency = latency_from_json(entry.at("latency"));
    scenario.actions.push_back(std::move(action));
  }
  if (j.contains("noise")) {
    for (const json& entry : j.at("noise")) {
      NoiseBurst burst;
      burst.timestamp.seconds = entry.at("timestamp").get<std::int64_t>();
      burst.count = entry.at("count").get<std::size_t>();
      scenario.noise.push_back(burst);
    }
  }
  return scenario;
}

inline json truth_to_json(const GroundTruth& truth) {
  json actions = json::array();
  for (const GroundTruthEntry& entry : truth.actions) {
    actions.push_back(json{{"action_label", entry.action_label},
                           {"object_ids", entry.object_ids},
                           {"true_time", timestamp_to_json(entry.true_time)}});
  }
  return json{{"actions", actions},
              {"noise_object_ids", truth.noise_object_ids}};
}

inline GroundTruth truth_from_json(const json& j) {
  GroundTruth truth;
  for (const json& entry : j.at("actions")) {
    GroundTruthEntry e;
    e.action_label = entry.at("action_label").get<std::string>();
    e.true_time = timestamp_from_json(entry.at("true_time"));
    e.object_ids = entry.at("object_ids").get<std::vector<std::string>>();
    truth.actions.push_back(std::move(e));
  }
  truth.noise_object_ids =
      j.at("noise_object_ids").get<std::vector<std::string>>();
  return truth;
}

// ---------------------------------------------------------------------------
// whole-document writers and readers

inline std::string write_profiles_report(
    const std::vector<ActionProfile>& profiles) {
  json list = json::array();
  for (const ActionProfile& p : profiles) list.push_back(profile_to_json(p));
  return canonical_text(json{{"profiles", list}});
}

inline std::string write_report(const ActionProfile& profile) {
  return write_profiles_report({profile});
}

inline std::vector<ActionProfile> read_profiles_report(const std::string& text) {
  const json document = json::parse(text);
  std::vector<ActionProfile> profiles;
  for (const json& p : document.at("profiles")) {
    profiles.push_back(profile_from_json(p));
  }
  return profiles;
}

inline std::string write_detection_report(
    const std::vector<DetectionResult>& results) {
  json list = json::array();
  for (const DetectionResult& r : results) {
    list.push_back(detection_result_to_json(r));
  }
  return canonical_text(json{{"results", list}});
}

inline std::string write_report(const DetectionResult& result) {
  return write_detection_report({result});
}

inline std::vector<DetectionResult> read_detection_report(
    const std::string& text) {
  const json document = json::parse(text);
  std::vector<DetectionResult> results;
  for (const json& r : document.at("results")) {
    results.push_back(detection_result_from_json(r));
  }
  return results;
}

inline std::string write_report(const EvaluationReport& report) {
  return canonical_text(evaluation_to_json(report));
}

inline EvaluationReport read_evaluation_report(const std::string& text) {
  return evaluation_from_json(json::parse(text));
}

inline std::string write_truth_report(const GroundTruth& truth) {
  return canonical_text(truth_to_json(truth));
}

inline GroundTruth read_truth_report(const std::string& text) {
  return truth_from_json(json::parse(text));
}

inline std::string write_scenario(const Scenario& scenario) {
  return canonical_text(scenario_to_json(scenario));
}

inline Scenario read_scenario(const std::string& text) {
  return scenario_from_json(json::parse(text));
}

inline std::string write_histogram_csv(const Histogram& histogram) {
  std::string out = "bin_lower_seconds,count\n";
  for (const HistogramBin& bin : histogram.bins) {
    out += std::to_string(bin.lower_edge) + "," + std::to_string(bin.count) +
           "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// small file helpers shared by the CLI and the test suites

inline std::string slurp_file(const std::string& path) {
  std::ifstream input(path, std::ios::binary);
  if (!input) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << input.rdbuf();
  return buffer.str();
}

inline void spill_file(const std::string& path, const std::string& content) {
  std::ofstream output(path, std::ios::binary);
  if (!output) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  output << content;
  if (!output) {
    throw std::runtime_error("write failed for '" + path + "'");
  }
}

}  // namespace timebound
