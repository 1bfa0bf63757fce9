#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "timebound/timebound.hpp"
#include "support/helpers.hpp"

using namespace timebound;
using test_support::data_file;
using test_support::make_temp_dir;
using test_support::run_cli;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("cli fit reproduces the survey threshold") {
  const auto result = run_cli({"fit", data_file("ie8_samples.csv")});
  REQUIRE(result.exit_code == 0);
  const auto profiles = read_profiles_report(result.out);
  REQUIRE(profiles.size() == 1);
  CHECK(profiles[0].action_label == "ie8");
  CHECK(profiles[0].threshold == 61);
}

TEST_CASE("cli fit on a missing file names the path") {
  const auto result = run_cli({"fit", "/no/such/samples.csv"});
  CHECK(result.exit_code != 0);
  CHECK_THAT(result.err, ContainsSubstring("/no/such/samples.csv"));
  CHECK(result.out.empty());
}

TEST_CASE("cli fit emits one profile per action label") {
  const std::string dir = make_temp_dir("fit-multi");
  spill_file(dir + "/samples.csv",
             "action,source,duration_seconds\n"
             "ie8,h1,20\n"
             "ff3,h1,10\n"
             "ie8,h2,30\n"
             "ff3,h2,14\n");
  const auto result = run_cli({"fit", dir + "/samples.csv"});
  REQUIRE(result.exit_code == 0);
  const auto profiles = read_profiles_report(result.out);
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].action_label == "ff3");
  CHECK(profiles[1].action_label == "ie8");
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli fit cites the corrupt line") {
  const std::string dir = make_temp_dir("fit-corrupt");
  std::string csv = "action,source,duration_seconds\n";
  for (int i = 0; i < 5; ++i) csv += "ie8,h,20\n";
  csv += "ie8,h,broken\n";  // line 7
  spill_file(dir + "/samples.csv", csv);
  const auto result = run_cli({"fit", dir + "/samples.csv"});
  CHECK(result.exit_code != 0);
  CHECK_THAT(result.err, ContainsSubstring("line 7"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli fit gates durations beyond the initial threshold") {
  const std::string dir = make_temp_dir("fit-gate");
  spill_file(dir + "/samples.csv",
             "action,source,duration_seconds\n"
             "ie8,h1,20\n"
             "ie8,h2,30\n"
             "ie8,h3,150\n");
  const auto gated = run_cli({"fit", dir + "/samples.csv"});
  REQUIRE(gated.exit_code == 0);
  const auto profiles = read_profiles_report(gated.out);
  REQUIRE(profiles.size() == 1);
  CHECK(profiles[0].sample_count == 2);
  CHECK_THAT(gated.err, ContainsSubstring("excluded"));

  const auto open =
      run_cli({"fit", dir + "/samples.csv", "--initial-threshold", "1000"});
  REQUIRE(open.exit_code == 0);
  CHECK(read_profiles_report(open.out)[0].sample_count == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli simulate then detect finds both bursts") {
  const std::string dir = make_temp_dir("detect");
  const auto sim = run_cli({"simulate", data_file("two_bursts.scenario.json"),
                            "--out", dir + "/timeline.body"});
  REQUIRE(sim.exit_code == 0);
  REQUIRE(std::filesystem::exists(dir + "/timeline.body.truth.json"));

  const auto fit = run_cli(
      {"fit", data_file("ie8_samples.csv"), "--out", dir + "/profiles.json"});
  REQUIRE(fit.exit_code == 0);

  const auto detect = run_cli(
      {"detect", dir + "/timeline.body", dir + "/profiles.json"});
  REQUIRE(detect.exit_code == 0);
  const auto results = read_detection_report(detect.out);
  REQUIRE(results.size() == 1);
  // two action bursts plus the noise burst, which forms its own instance
  REQUIRE(results[0].instances.size() == 3);
  CHECK(results[0].instances[0].time_span.contains(Timestamp{1000}));
  CHECK(results[0].instances[1].time_span.contains(Timestamp{1300}));
  CHECK(results[0].instances[2].time_span.upper.seconds == 2000);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli detect on an empty timeline reports no instances") {
  const std::string dir = make_temp_dir("detect-empty");
  spill_file(dir + "/empty.body", "# nothing observed\n");
  const auto fit = run_cli(
      {"fit", data_file("ie8_samples.csv"), "--out", dir + "/profiles.json"});
  REQUIRE(fit.exit_code == 0);
  const auto detect =
      run_cli({"detect", dir + "/empty.body", dir + "/profiles.json"});
  REQUIRE(detect.exit_code == 0);
  const auto results = read_detection_report(detect.out);
  REQUIRE(results.size() == 1);
  CHECK(results[0].instances.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli detect cites a corrupt bodyfile line") {
  const std::string dir = make_temp_dir("detect-corrupt");
  std::string body;
  for (int i = 0; i < 6; ++i) {
    body += "0|/f" + std::to_string(i) + "|5|r|0|0|100|0|1000|0|0\n";
  }
  body += "0|/bad|5|r|0|0|100|0|oops|0|0\n";  // line 7
  spill_file(dir + "/timeline.body", body);
  const auto fit = run_cli(
      {"fit", data_file("ie8_samples.csv"), "--out", dir + "/profiles.json"});
  REQUIRE(fit.exit_code == 0);
  const auto detect =
      run_cli({"detect", dir + "/timeline.body", dir + "/profiles.json"});
  CHECK(detect.exit_code != 0);
  CHECK_THAT(detect.err, ContainsSubstring("line 7"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli simulate is deterministic for a fixed seed") {
  const std::string dir = make_temp_dir("sim-det");
  for (const std::string run : {"a", "b"}) {
    const auto sim = run_cli({"simulate", data_file("two_bursts.scenario.json"),
                              "--out", dir + "/" + run + ".body",
                              "--truth-out", dir + "/" + run + ".truth.json"});
    REQUIRE(sim.exit_code == 0);
  }
  CHECK(slurp_file(dir + "/a.body") == slurp_file(dir + "/b.body"));
  CHECK(slurp_file(dir + "/a.truth.json") == slurp_file(dir + "/b.truth.json"));

  const auto reseeded =
      run_cli({"simulate", data_file("two_bursts.scenario.json"), "--seed",
               "12345", "--out", dir + "/c.body"});
  REQUIRE(reseeded.exit_code == 0);
  CHECK(slurp_file(dir + "/a.body") != slurp_file(dir + "/c.body"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli simulate with constant latency emits equal timestamps") {
  const std::string dir = make_temp_dir("sim-const");
  Scenario scenario;
  scenario.seed = 5;
  scenario.actions.push_back(ScenarioAction{
      "calc", Timestamp{4000}, 4, LatencyModel{LatencyKind::constant, 9.0, 0.0}});
  spill_file(dir + "/scenario.json", write_scenario(scenario));

  const auto sim = run_cli({"simulate", dir + "/scenario.json", "--out",
                            dir + "/timeline.body"});
  REQUIRE(sim.exit_code == 0);
  std::istringstream body(slurp_file(dir + "/timeline.body"));
  for (const TraceObservation& obs : parse_bodyfile(body)) {
    CHECK(obs.timestamp.seconds == 4009);
  }
  const GroundTruth truth =
      read_truth_report(slurp_file(dir + "/timeline.body.truth.json"));
  REQUIRE(truth.actions.size() == 1);
  CHECK(truth.actions[0].object_ids.size() == 4);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli simulate emits one truth entry per executed run") {
  const std::string dir = make_temp_dir("sim-runs");
  Scenario scenario;
  scenario.seed = 31;
  for (int r = 0; r < 10; ++r) {
    scenario.actions.push_back(ScenarioAction{
        "ie8", Timestamp{10000 + r * 600}, 3,
        LatencyModel{LatencyKind::normal_truncated_at_zero, 27.4, 16.76}});
  }
  spill_file(dir + "/scenario.json", write_scenario(scenario));
  const auto sim = run_cli({"simulate", dir + "/scenario.json", "--out",
                            dir + "/timeline.body"});
  REQUIRE(sim.exit_code == 0);
  const GroundTruth truth =
      read_truth_report(slurp_file(dir + "/timeline.body.truth.json"));
  CHECK(truth.actions.size() == 10);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli detect flags overlap between profiles") {
  const std::string dir = make_temp_dir("detect-ambiguous");
  spill_file(dir + "/samples.csv",
             "action,source,duration_seconds\n"
             "ie8,h1,20\nie8,h2,30\nie8,h3,40\n"
             "ff3,h1,15\nff3,h2,25\nff3,h3,35\n");
  REQUIRE(run_cli({"fit", dir + "/samples.csv", "--out",
                   dir + "/profiles.json"})
              .exit_code == 0);

  std::string body;
  for (int i = 0; i < 4; ++i) {
    body += "0|/obj" + std::to_string(i) + "|1|r|0|0|10|0|" +
            std::to_string(1000 + i * 10) + "|0|0\n";
  }
  spill_file(dir + "/timeline.body", body);

  const auto detect =
      run_cli({"detect", dir + "/timeline.body", dir + "/profiles.json"});
  REQUIRE(detect.exit_code == 0);
  const auto results = read_detection_report(detect.out);
  REQUIRE(results.size() == 2);
  for (const auto& result : results) {
    REQUIRE(result.instances.size() == 1);
    CHECK(result.instances[0].ambiguous_with.size() == 1);
  }
  CHECK(results[0].instances[0].ambiguous_with.count("ie8") == 1);
  CHECK(results[1].instances[0].ambiguous_with.count("ff3") == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli simulate rejects an invalid scenario") {
  const std::string dir = make_temp_dir("sim-bad");
  spill_file(dir + "/scenario.json",
             R"({"actions":[{"label":"x","true_time":10,"trace_count":1,
                 "latency":{"kind":"uniform","lower":9.0,"upper":1.0}}],
                 "noise":[],"seed":0})");
  const auto sim = run_cli({"simulate", dir + "/scenario.json"});
  CHECK(sim.exit_code != 0);
  CHECK_THAT(sim.err, ContainsSubstring("upper < lower"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli evaluate scores the full pipeline") {
  const std::string dir = make_temp_dir("evaluate");
  REQUIRE(run_cli({"simulate", data_file("two_bursts.scenario.json"), "--out",
                   dir + "/timeline.body"})
              .exit_code == 0);
  REQUIRE(run_cli({"fit", data_file("ie8_samples.csv"), "--out",
                   dir + "/profiles.json"})
              .exit_code == 0);
  REQUIRE(run_cli({"detect", dir + "/timeline.body", dir + "/profiles.json",
                   "--out", dir + "/detection.json"})
              .exit_code == 0);

  const auto eval = run_cli({"evaluate", dir + "/detection.json",
                             dir + "/timeline.body.truth.json"});
  REQUIRE(eval.exit_code == 0);
  const EvaluationReport report = read_evaluation_report(eval.out);
  CHECK(report.instance_count_true == 2);
  // both bursts plus one noise-only instance
  CHECK(report.instance_count_detected == 3);
  CHECK(report.containment_rate == 1.0);
  CHECK(report.merged_instances == 0);
  CHECK(report.split_instances == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli histogram matches the survey distribution shape") {
  const auto result =
      run_cli({"histogram", data_file("ie8_samples.csv"), "--bin-width", "10"});
  REQUIRE(result.exit_code == 0);

  std::istringstream lines(result.out);
  std::string line;
  std::getline(lines, line);
  REQUIRE(line == "bin_lower_seconds,count");
  std::size_t total = 0;
  while (std::getline(lines, line)) {
    const auto comma = line.find(',');
    const std::int64_t edge = std::stoll(line.substr(0, comma));
    const std::size_t count = std::stoull(line.substr(comma + 1));
    total += count;
    if (count > 0) {
      CHECK(edge <= 50);  // nothing anywhere near the 80 s edge
    }
  }
  CHECK(total == 25);
}

TEST_CASE("cli histogram bin-width variants") {
  const std::string dir = make_temp_dir("hist");
  spill_file(dir + "/samples.csv",
             "action,source,duration_seconds\n"
             "a,h,3\n"
             "a,h,3\n"
             "a,h,7\n");
  const auto unit = run_cli({"histogram", dir + "/samples.csv",
                             "--bin-width", "1"});
  REQUIRE(unit.exit_code == 0);
  // one row per integer edge 0..7 plus header
  CHECK_THAT(unit.out, ContainsSubstring("3,2"));
  CHECK_THAT(unit.out, ContainsSubstring("7,1"));

  const auto wide = run_cli({"histogram", dir + "/samples.csv",
                             "--bin-width", "100"});
  REQUIRE(wide.exit_code == 0);
  CHECK(wide.out == "bin_lower_seconds,count\n0,3\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli fit-then-detect equals the in-process pipeline") {
  const std::string dir = make_temp_dir("compose");
  REQUIRE(run_cli({"simulate", data_file("two_bursts.scenario.json"), "--out",
                   dir + "/timeline.body"})
              .exit_code == 0);
  REQUIRE(run_cli({"fit", data_file("ie8_samples.csv"), "--out",
                   dir + "/profiles.json"})
              .exit_code == 0);
  const auto detect =
      run_cli({"detect", dir + "/timeline.body", dir + "/profiles.json"});
  REQUIRE(detect.exit_code == 0);

  std::istringstream csv(slurp_file(data_file("ie8_samples.csv")));
  const ActionProfile profile = fit_profile(parse_samples(csv), 2.0);
  std::istringstream body(slurp_file(dir + "/timeline.body"));
  const DetectionResult in_process =
      detect_instances(parse_bodyfile(body), profile);

  CHECK(detect.out == write_report(in_process));
  std::filesystem::remove_all(dir);
}
