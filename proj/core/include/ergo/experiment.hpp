#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ergo::experiment {

struct RunOptions {
  std::optional<int> threads;              // caps workers; results do not depend on it
  std::optional<std::string> out_dir;      // overrides the config "out" field
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> expected_kind;  // CLI subcommand cross-check
};

// Executes the experiment described by a JSON config and writes its artifacts
// plus a manifest (config hash, seed, artifact hashes) into the output
// directory. Exit-code contract: 0 success, 2 validation failure, 3 numeric
// failure; diagnostics go to stderr. The environment variable
// ERGO_SEED_OVERRIDE (integer) takes precedence over the config seed.
int run(const std::string& config_path, const RunOptions& opts = {});

// Merges homogeneous decay-study result JSONs into one summary CSV: one row
// per study with model id, rho, fitted rate, and the bound check. Duplicate
// model ids get numeric suffixes (with a stderr warning); mixed experiment
// kinds are rejected.
void report_merge(const std::vector<std::string>& inputs, const std::string& out_csv);

std::uint64_t fnv1a64(const void* data, std::size_t n);

}  // namespace ergo::experiment
