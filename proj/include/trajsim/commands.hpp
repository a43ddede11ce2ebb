#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "trajsim/llm_adapter.hpp"

namespace trajsim {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitPartial = 4,
};

struct CommandEnv {
  // Replaces HttpTransport for every network-backed model.
  std::shared_ptr<Transport> transport;
  std::ostream* out = nullptr;  // defaults to std::cout
  std::ostream* err = nullptr;  // defaults to std::cerr
};

struct GenPersonasArgs {
  std::string stats;
  std::string pois;
  std::size_t count = 10;
  std::uint64_t seed = 1;
  std::string out;
  bool llm = false;
  std::string config;  // persona and llm sections; required with --llm
};

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> agents;
  std::optional<int> days;
  std::optional<int> workers;
  std::optional<std::string> out;
};

struct ExportArgs {
  std::string trace;
  std::string out;
};

struct MetricsArgs {
  std::string trace;
  std::string reference;  // check-in CSV, optional
  std::string pois;       // locates the reference check-ins
  std::string out;
};

// Each returns an ExitCode; errors are reported on env.err.
int cmd_gen_personas(const GenPersonasArgs& args, const CommandEnv& env = {});
int cmd_simulate(const SimulateArgs& args, const CommandEnv& env = {});
int cmd_export_geojson(const ExportArgs& args, const CommandEnv& env = {});
int cmd_metrics(const MetricsArgs& args, const CommandEnv& env = {});

// Parses argv and dispatches to a subcommand.
int run_cli(int argc, const char* const* argv, const CommandEnv& env = {});

}  // namespace trajsim
