#pragma once

#include <string>
#include <vector>

#include "heavyclip/config.hpp"

namespace heavyclip {

struct RunOutcome {
    int exit_code = 0;  // 0 pass, 1 check failure, 2 config error
    std::string run_dir;
    std::vector<std::string> failed_checks;
    std::string summary_csv;  // the bytes written to summary.csv
};

// Executes every requested ensemble and check for the parsed config; writes
// config-echo.json, trials/*.csv, reports/*.json and summary.csv under
// out_dir/run-<fnv64 of the raw config bytes>.
RunOutcome run_experiment(const ExperimentConfig& config, const std::string& raw_config_bytes,
                          int threads);

}  // namespace heavyclip
