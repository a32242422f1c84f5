#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ctxspot::cli {

// sysexits-style codes.
inline constexpr int kExitOk = 0;
/// A check ran to completion but failed (gradcheck).
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitDataError = 65;
inline constexpr int kExitSoftware = 70;
inline constexpr int kExitIoError = 74;

std::string tool_version();

/// Parses argv and runs one subcommand. Errors are reported as a single JSON
/// object on `err`; the return value is the process exit code.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config_hash;
  std::string data_hash;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

/// Writes <dir>/run_manifest.json.
void write_manifest(const RunManifest& m, const std::filesystem::path& dir);

/// FNV-1a over the relative names and bytes of every regular file given (and
/// every regular file below the given directories), in sorted order.
std::uint64_t hash_inputs(const std::vector<std::filesystem::path>& paths);

/// Parses "0,0.1,1.5". Throws ConfigError on an empty or malformed list.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace ctxspot::cli
