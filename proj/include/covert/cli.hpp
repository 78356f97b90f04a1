#pragma once

// Command-line workflows: plan, simulate, eavesdrop, validate.
//
// Each command reads one JSON run configuration, writes its outputs into an
// output directory (temp file + rename), and is a pure function of the
// configuration and the seed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "covert/planner.hpp"
#include "covert/simulator.hpp"

namespace covert::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitInfeasible = 3,
  kExitSecurityFail = 4,
};

inline constexpr int kSchemaVersion = 1;

struct SimulateOptions {
  std::uint64_t runs = 1;
};

struct EavesdropOptions {
  std::uint64_t trials = 10'000;
  std::optional<std::uint64_t> desk_signals;     ///< rescale so that d is about this
  double mu_scale = 1.0;                         ///< negative controls inflate mu
  std::optional<std::uint64_t> override_signals; ///< force d (0 = Alice never sends)
  double monitor_duration_s = 60.0;
  double monitor_interval_s = 1.0;
  std::optional<double> eve_noise;
};

struct RunConfig {
  std::string name;
  std::string message;
  double epsilon = 0.0;
  double target_error = 0.0;
  double tau = 0.0;
  double noise_alice = 0.0;
  double noise_bob = 0.0;
  double rep_rate_hz = 0.0;
  std::optional<std::uint64_t> seed;
  bool strict = false;  ///< refuse to run without an explicit seed
  MuGrid mu_grid;
  double rescale = 1.0;
  SimulateOptions simulate;
  EavesdropOptions eavesdrop;
};

/// Schema-checks a configuration document. Unknown keys, missing physical
/// constants and out-of-range values raise ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& cfg);

PlanRequest make_request(const RunConfig& cfg);

nlohmann::json params_to_json(const ProtocolParams& p);
ProtocolParams params_from_json(const nlohmann::json& doc);

/// Writes `contents` to `path` through a temporary sibling and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

int cmd_plan(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir,
                 const std::optional<std::filesystem::path>& plan_file, std::ostream& log);

int cmd_eavesdrop(const RunConfig& cfg, const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& plan_file, std::ostream& log);

int cmd_validate(const RunConfig& cfg, const std::filesystem::path& out_dir,
                 const std::filesystem::path& plan_file, std::ostream& log);

/// Entry point shared by the covertctl binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covert::cli
