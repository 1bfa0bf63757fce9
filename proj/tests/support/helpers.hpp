#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "timebound/io.hpp"
#include "timebound/model.hpp"

namespace test_support {

// ---------------------------------------------------------------------------
// Independent brute-force grouping oracle.
//
// Enumerates every contiguous partition of the sorted timestamp list and
// keeps the ones where (a) every block's span is within the threshold and
// (b) the first element of each following block is more than the threshold
// away from the first element of the block before it. This characterizes the
// greedy scan without running it; exactly one partition should qualify.

inline std::vector<std::vector<std::vector<std::int64_t>>>
brute_force_partitions(std::vector<std::int64_t> sorted_ts,
                       std::int64_t threshold) {
  std::vector<std::vector<std::vector<std::int64_t>>> valid;
  const std::size_t n = sorted_ts.size();
  if (n == 0) {
    valid.push_back({});
    return valid;
  }
  const std::uint64_t masks = std::uint64_t{1} << (n - 1);
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    std::vector<std::vector<std::int64_t>> blocks(1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && (mask & (std::uint64_t{1} << (i - 1)))) {
        blocks.emplace_back();
      }
      blocks.back().push_back(sorted_ts[i]);
    }
    bool ok = true;
    for (const auto& block : blocks) {
      if (block.back() - block.front() > threshold) {
        ok = false;
        break;
      }
    }
    for (std::size_t b = 0; ok && b + 1 < blocks.size(); ++b) {
      if (blocks[b + 1].front() - blocks[b].front() <= threshold) {
        ok = false;
      }
    }
    if (ok) valid.push_back(std::move(blocks));
  }
  return valid;
}

inline std::vector<timebound::TraceObservation> observations_at(
    const std::vector<std::int64_t>& timestamps,
    const std::string& id_prefix = "obj") {
  std::vector<timebound::TraceObservation> obs;
  char buf[32];
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%03zu", id_prefix.c_str(), i);
    timebound::TraceObservation o;
    o.object_id = buf;
    o.timestamp.seconds = timestamps[i];
    o.kind = timebound::TimestampKind::modified;
    obs.push_back(std::move(o));
  }
  return obs;
}

inline std::vector<std::vector<std::int64_t>> group_timestamps(
    const std::vector<timebound::TraceGroup>& groups) {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& g : groups) {
    std::vector<std::int64_t> ts;
    for (const auto& t : g.traces) ts.push_back(t.timestamp.seconds);
    out.push_back(std::move(ts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CLI subprocess runner

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& arg) {
  std::string quoted = "'";
  for (char c : arg) {
    if (c == '\'') {
      quoted += "'\\''";
    } else {
      quoted += c;
    }
  }
  quoted += "'";
  return quoted;
}

inline CliResult run_cli(const std::vector<std::string>& args) {
  namespace fs = std::filesystem;
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() /
      ("timebound-cli-" + std::to_string(::getpid()) + "-" +
       std::to_string(counter++));
  fs::create_directories(dir);
  const fs::path out_file = dir / "stdout";
  const fs::path err_file = dir / "stderr";

  std::string command = shell_quote(TIMEBOUND_CLI_PATH);
  for (const std::string& arg : args) command += " " + shell_quote(arg);
  command += " > " + shell_quote(out_file.string()) + " 2> " +
             shell_quote(err_file.string());

  const int status = std::system(command.c_str());

  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = timebound::slurp_file(out_file.string());
  result.err = timebound::slurp_file(err_file.string());
  fs::remove_all(dir);
  return result;
}

inline std::string make_temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() /
      ("timebound-" + tag + "-" + std::to_string(::getpid()) + "-" +
       std::to_string(counter++));
  fs::create_directories(dir);
  return dir.string();
}

inline std::string data_file(const std::string& name) {
  return std::string(TIMEBOUND_TEST_DATA_DIR) + "/" + name;
}

}  // namespace test_support
