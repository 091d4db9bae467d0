#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtrap/errors.hpp"

namespace qtrap {

inline constexpr const char* kToolVersion = "1.0.0";

// Exit codes: 0 success, 1 validation failure, 2 compute failure.
int exit_code_for(const Error& e);

struct RunOptions {
    std::string config_path;
    std::string out_dir;
    int workers = 1;
    bool resume = false;  // resumption is automatic; accepted for explicitness
    bool exact = false;   // force exact_mode on top of the config
};

struct AnalyzeOptions {
    std::vector<std::string> run_dirs;
    std::string out_dir;
    std::optional<std::pair<double, double>> window;  // rescaled tau, overrides per-run defaults
};

struct ChainBenchOptions {
    int n = 100;
    double gamma = 1e-3;
    std::string out_dir;  // optional: dump survival.csv and spectrum.csv
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err);
int cmd_chain_bench(const ChainBenchOptions& options, std::ostream& out, std::ostream& err);

}  // namespace qtrap
