#pragma once

// Command implementations behind the mprbench executable. Each returns a
// process exit code and writes human-readable output to the given streams.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mpr/caption.hpp"

namespace mpr {

enum class Command { Ingest, Eval, Reproduce, Caption };

struct RunConfig {
  Command command = Command::Eval;
  std::filesystem::path probes;
  std::filesystem::path gallery;
  std::filesystem::path truth;
  std::filesystem::path reference;
  std::filesystem::path published;
  std::filesystem::path catalog;
  std::filesystem::path vocabulary;
  std::filesystem::path out_dir = "out";
  std::vector<std::size_t> ks = {1, 3, 5};
  int token_budget = kDefaultTokenBudget;
  EndpointConfig endpoint;
  int workers = 0;  // 0: all available threads
  bool audit_only = false;
  std::size_t review_sample = 0;
  std::vector<std::uint64_t> review_seeds = {1, 2};
};

/// Checks paths and numeric settings for the selected command. Throws
/// InvalidArgument (or IoFailure for missing inputs).
void check_config(const RunConfig& config);

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_reproduce(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_caption(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Dispatches on config.command; converts exceptions to "error: ..." plus exit 1.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace mpr
