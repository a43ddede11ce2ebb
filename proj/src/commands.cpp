#include "trajsim/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trajsim/config.hpp"
#include "trajsim/errors.hpp"
#include "trajsim/sim_runner.hpp"

namespace trajsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ostream& out_of(const CommandEnv& env) { return env.out ? *env.out : std::cout; }
std::ostream& err_of(const CommandEnv& env) { return env.err ? *env.err : std::cerr; }

template <typename Fn>
int guarded(const CommandEnv& env, Fn&& fn) {
  std::ostream& err = err_of(env);
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CategoryError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

void write_json_file(const std::string& path, const json& j) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("error writing '" + path + "'");
}

}  // namespace

int cmd_gen_personas(const GenPersonasArgs& args, const CommandEnv& env) {
  return guarded(env, [&] {
    if (args.count == 0) throw ConfigError("--count must be > 0");
    PersonaGenOptions options;
    options.count = args.count;
    options.seed = args.seed;
    if (!args.config.empty()) {
      json j;
      {
        std::ifstream in(args.config);
        if (!in) throw ConfigError("cannot open config file '" + args.config + "'");
        j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError("config file is not valid JSON");
      }
      // Only persona and llm matter here; the rest is checked but unused.
      SimConfig config =
          SimConfig::from_json(j, fs::absolute(args.config).parent_path().string());
      options.persona = config.persona;
      if (args.llm) {
        config.llm.validate();
        std::shared_ptr<ChatModel> model;
        if (!config.llm_mock_script.empty()) {
          model = std::make_shared<ScriptedChatModel>(load_mock_script(config.llm_mock_script));
        } else {
          auto transport = env.transport ? env.transport : std::make_shared<HttpTransport>();
          model = std::make_shared<OpenAiChatModel>(config.llm, transport);
        }
        options.llm = std::make_shared<LlmAdapter>(model, config.llm);
      }
    } else if (args.llm) {
      throw ConfigError("--llm needs --config with an llm section");
    }
    const PopulationStats stats = PopulationStats::load(args.stats);
    const PoiStore store = load_pois_file(args.pois);
    const auto personas = generate_personas(stats, store, options);
    write_personas(args.out, personas);
    out_of(env) << "wrote " << personas.size() << " personas to " << args.out << '\n';
    return kExitOk;
  });
}

int cmd_simulate(const SimulateArgs& args, const CommandEnv& env) {
  return guarded(env, [&] {
    SimConfig config = SimConfig::load(args.config);
    if (args.seed) config.seed = *args.seed;
    if (args.agents) config.agents = *args.agents;
    if (args.days) config.days = *args.days;
    if (args.workers) config.workers = *args.workers;
    if (args.out) config.paths.out = *args.out;
    RunOptions options;
    options.transport = env.transport;
    const RunResult result = run_simulation(config, options);
    out_of(env) << "wrote " << result.records << " records for " << result.agent_days
                << " agent-days to " << result.trace_path << " (hash "
                << result.trace_hash << ")\n";
    if (result.failed_agent_days > 0) {
      err_of(env) << result.failed_agent_days << " agent-days failed; see "
                  << result.failures_path << '\n';
      return kExitPartial;
    }
    return kExitOk;
  });
}

int cmd_export_geojson(const ExportArgs& args, const CommandEnv& env) {
  return guarded(env, [&] {
    const auto records = read_trace(args.trace);
    const json collection = export_geojson(records);
    write_json_file(args.out, collection);
    out_of(env) << "wrote " << collection["features"].size() << " features to "
                << args.out << '\n';
    return kExitOk;
  });
}

int cmd_metrics(const MetricsArgs& args, const CommandEnv& env) {
  return guarded(env, [&] {
    if (!args.reference.empty() && args.pois.empty()) {
      throw ConfigError("--reference needs --pois to locate the check-ins");
    }
    std::vector<double> reference;
    if (!args.reference.empty()) {
      reference = reference_jump_lengths(load_checkins_file(args.reference),
                                         load_pois_file(args.pois));
    }
    const auto records = read_trace(args.trace);
    const MetricsReport report =
        compute_metrics(records, args.reference.empty() ? nullptr : &reference);
    write_json_file(args.out, to_json(report));
    out_of(env) << "wrote metrics for " << report.visits << " visits to " << args.out
                << '\n';
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, const CommandEnv& env) {
  CLI::App app{"Agent-based mobility trace simulator", "trajsim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenPersonasArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-personas", "Sample personas into a JSONL file");
  gen_cmd->add_option("--stats", gen.stats, "Population statistics JSON")->required();
  gen_cmd->add_option("--pois", gen.pois, "POI CSV")->required();
  gen_cmd->add_option("--count", gen.count, "Number of personas")->required();
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output personas JSONL")->required();
  gen_cmd->add_flag("--llm", gen.llm, "Ask the configured LLM for goals and activity lists");
  gen_cmd->add_option("--config", gen.config, "Config file (persona and llm sections)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the simulation");
  sim_cmd->add_option("--config", sim.config, "Config file or run manifest")->required();
  sim_cmd->add_option("--seed", sim.seed, "Override simulation.seed");
  sim_cmd->add_option("--agents", sim.agents, "Override simulation.agents");
  sim_cmd->add_option("--days", sim.days, "Override simulation.days");
  sim_cmd->add_option("--workers", sim.workers, "Override simulation.workers");
  sim_cmd->add_option("--out", sim.out, "Override paths.out");

  ExportArgs exp;
  auto* exp_cmd = app.add_subcommand("export-geojson", "Convert a trace to GeoJSON");
  exp_cmd->add_option("--trace", exp.trace, "Trace JSONL")->required();
  exp_cmd->add_option("--out", exp.out, "Output GeoJSON")->required();

  MetricsArgs met;
  auto* met_cmd = app.add_subcommand("metrics", "Summarize a trace");
  met_cmd->add_option("--trace", met.trace, "Trace JSONL")->required();
  met_cmd->add_option("--reference", met.reference, "Reference check-in CSV");
  met_cmd->add_option("--pois", met.pois, "POI CSV for the reference check-ins");
  met_cmd->add_option("--out", met.out, "Output metrics JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_of(env), err_of(env));
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*gen_cmd) return cmd_gen_personas(gen, env);
  if (*sim_cmd) return cmd_simulate(sim, env);
  if (*exp_cmd) return cmd_export_geojson(exp, env);
  return cmd_metrics(met, env);
}

}  // namespace trajsim
