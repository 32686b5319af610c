#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

// Experiment orchestration behind the mte_lab command line.
namespace mte::run {

struct RunOptions {
    std::string command;
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed; // overrides the config seed
    unsigned threads = 0;              // 0: MTE_THREADS or 1
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitError = 2;

const std::vector<std::string>& commands();

// Runs one command, writes its artifacts and manifest.json under out, and
// returns the exit status: 0 when every check passed, 1 when a report is
// flagged FAIL, 2 on an error, which is also written as JSON to err and to
// out/error.json.
int execute(const RunOptions& opts, std::ostream& err);

} // namespace mte::run
