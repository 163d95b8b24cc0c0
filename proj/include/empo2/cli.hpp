#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace empo2 {

// Entry point shared by the executable and the tests. Returns the process
// exit code: 0 on success, 1 on runtime failure, 2 on bad usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Resolves a relative output path against $EMPO2_OUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& p);

// metrics.jsonl -> CSV rows (iteration, series, value). Returns the row count.
std::size_t export_metrics_csv(std::istream& metrics, std::ostream& csv);

}  // namespace empo2
