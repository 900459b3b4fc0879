// Command-line front end: simulate, stability, sweep, reproduce.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wncs/config.hpp"
#include "wncs/error.hpp"
#include "wncs/presets.hpp"
#include "wncs/report.hpp"
#include "wncs/simulation.hpp"
#include "wncs/stability.hpp"

namespace fs = std::filesystem;
using namespace wncs;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::string> seeds;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format;
  long long horizon = -1;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_preset) {
  cmd->add_option("--config", o.config_path, "Config JSON file")->check(CLI::ExistingFile);
  if (with_preset) cmd->add_option("--preset", o.preset, "Named preset instead of --config");
  cmd->add_option("--seed", o.seed, "Single seed (overrides the config)");
  cmd->add_option("--seeds", o.seeds, "Comma-separated seeds (overrides the config)");
  cmd->add_option("--out", o.out_dir, "Output directory (overrides the config)");
  cmd->add_option("--format", o.format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--horizon", o.horizon, "Slots per run (overrides the config)");
  cmd->add_option("--threads", o.threads, "Worker threads for multi-seed runs (0 = all cores)");
}

// "" gives an empty list, which validation then rejects.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || item[0] == '-') {
      throw Error(ErrorCode::kInvalidArgument, "seeds must be nonnegative integers, got '" + item + "'", "seeds");
    }
    seeds.push_back(v);
  }
  return seeds;
}

SimConfig resolve(const CommonOptions& o) {
  SimConfig c;
  if (!o.config_path.empty() && !o.preset.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give either --config or --preset, not both", "config");
  }
  if (!o.config_path.empty()) {
    c = load_config(o.config_path);
  } else if (!o.preset.empty()) {
    c = presets::preset_config(o.preset);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "a config is required (--config or --preset)", "config");
  }
  if (o.seeds) c.seeds = parse_seeds(*o.seeds);
  if (o.seed) c.seeds = {*o.seed};
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (o.format == "csv") c.format = TraceFormat::kCsv;
  if (o.format == "json") c.format = TraceFormat::kJson;
  if (o.horizon >= 0) c.horizon = o.horizon;
  return c;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'", "out");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'", "out");
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + dir + "': " + ec.message(), "out");
  return fs::path(dir);
}

// Keeps the file and writer alive for the duration of one run.
struct TraceFile {
  std::ofstream stream;
  std::unique_ptr<TraceWriter> writer;
  ~TraceFile() {
    if (writer) writer->finish();
  }
};

std::vector<RunSummary> simulate(const SimConfig& c, unsigned threads, const std::string& tag) {
  validate(c, true);
  const fs::path dir = prepare_dir(c.out_dir);
  const int n = static_cast<int>(c.subsystems.size());
  const int m = static_cast<int>(c.q.cols());
  const std::string ext = c.format == TraceFormat::kCsv ? ".csv" : ".json";
  std::function<TraceSink(std::uint64_t)> sink_for;
  if (c.write_trace) {
    sink_for = [&](std::uint64_t seed) -> TraceSink {
      auto file = std::make_shared<TraceFile>();
      const fs::path path = dir / (tag + "trace_seed" + std::to_string(seed) + ext);
      file->stream.open(path, std::ios::binary);
      if (!file->stream) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'", "out");
      file->writer = c.format == TraceFormat::kCsv ? make_csv_writer(file->stream, n, m)
                                                   : make_json_writer(file->stream, n, m);
      return [file](const TraceRecord& r) { file->writer->write(r); };
    };
  }
  const auto runs = run_many(c, threads, sink_for);
  for (const auto& r : runs) {
    write_file(dir / (tag + "summary_seed" + std::to_string(r.seed) + ".json"), dump_json(summary_to_json(r)) + "\n");
  }
  write_file(dir / (tag + "summary.json"), dump_json(aggregate_to_json(runs)) + "\n");
  return runs;
}

StabilityAnalysis stability(const SimConfig& c) {
  validate(c, false);
  if (c.q.cols() != 1) {
    throw Error(ErrorCode::kInvalidConfig, "q: stability analysis needs a single channel (one column)", "q");
  }
  std::vector<SubsystemModel> models;
  for (const auto& s : c.subsystems) models.emplace_back(s);
  auto a = analyze_stability(models, c.q.col(0), c.stability.m_bar, c.stability.params);
  const fs::path dir = prepare_dir(c.out_dir);
  write_file(dir / "stability_report.json", dump_json(stability_to_json(a, c)) + "\n");
  return a;
}

void print_runs(const std::vector<RunSummary>& runs, const std::string& label) {
  double cost = 0.0, tail = 0.0, tail_cost = 0.0;
  for (const auto& r : runs) {
    cost += r.average_cost;
    tail += r.tail_regret;
    tail_cost += r.tail_cost_regret;
  }
  const double k = static_cast<double>(runs.size());
  std::cout << label << ": seeds=" << runs.size() << " mean_cost=" << format_double(cost / k)
            << " tail_regret=" << format_double(tail / k) << " tail_cost_regret=" << format_double(tail_cost / k)
            << "\n";
}

int reproduce(const std::string& name, const CommonOptions& o, CLI::App* cmd) {
  CommonOptions po = o;
  po.preset = name;
  po.config_path.clear();
  SimConfig c = resolve(po);
  if (o.out_dir.empty()) c.out_dir = "out/" + name;

  if (name == "fig6-stable" || name == "fig7-unstable") {
    const auto a = stability(c);
    std::cout << name << ": " << (a.certified ? "certified-stable" : "not-certified") << "\n";
    for (std::size_t i = 0; i < a.verdicts.size(); ++i) {
      std::cout << "  subsystem " << i << ": " << a.verdicts[i].reason << "\n";
    }
    print_runs(simulate(c, o.threads, ""), "  simulation (" + to_string(c.policy) + ")");
    return 0;
  }
  if (name == "table1-learning") {
    const auto runs = simulate(c, o.threads, "");
    print_runs(runs, name);
    Eigen::MatrixXd plays = Eigen::MatrixXd::Zero(c.q.rows(), c.q.cols());
    for (const auto& r : runs) plays += r.plays;
    std::cout << "  plays (rows subsystems, columns channels):\n";
    for (Eigen::Index i = 0; i < plays.rows(); ++i) {
      std::cout << "   ";
      for (Eigen::Index j = 0; j < plays.cols(); ++j) std::cout << ' ' << static_cast<long long>(plays(i, j));
      std::cout << "\n";
    }
    return 0;
  }
  // fig5-regret: learning policy against the baselines under common random numbers.
  for (Policy p : {Policy::kCoilQhat, Policy::kQhatOnly, Policy::kQ0Baseline, Policy::kKnownQ}) {
    SimConfig pc = c;
    pc.policy = p;
    print_runs(simulate(pc, o.threads, to_string(p) + "_"), to_string(p));
  }
  return 0;
}

void print_error(const std::string& code, const std::string& message, const std::string& field) {
  nlohmann::json j = {{"error", code}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduling and stability analysis for control loops sharing lossy wireless channels"};
  app.require_subcommand(1);

  CommonOptions sim_o, stab_o, sweep_o, rep_o;
  auto* sim = app.add_subcommand("simulate", "Run a config over its seeds; write traces and summaries");
  add_common(sim, sim_o, true);
  auto* stab = app.add_subcommand("stability", "Build the age chain and emit a stability report");
  add_common(stab, stab_o, true);
  auto* swp = app.add_subcommand("sweep", "Grid over q scale or subsystem count");
  add_common(swp, sweep_o, true);
  auto* rep = app.add_subcommand("reproduce", "Run a named experiment");
  std::string rep_name;
  rep->add_option("name", rep_name, "Experiment name")->required()->check(CLI::IsMember(presets::names()));
  add_common(rep, rep_o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), "");
    return 2;
  }

  try {
    if (*sim) {
      const SimConfig c = resolve(sim_o);
      print_runs(simulate(c, sim_o.threads, ""), "simulate " + to_string(c.policy));
      std::cout << "wrote " << c.out_dir << "\n";
    } else if (*stab) {
      const SimConfig c = resolve(stab_o);
      const auto a = stability(c);
      std::cout << (a.certified ? "certified-stable" : "not-certified") << "\n";
      for (std::size_t i = 0; i < a.verdicts.size(); ++i) {
        std::cout << "subsystem " << i << ": " << a.verdicts[i].reason << "\n";
      }
      std::cout << "wrote " << (fs::path(c.out_dir) / "stability_report.json").string() << "\n";
    } else if (*swp) {
      const SimConfig c = resolve(sweep_o);
      validate(c, true);
      const auto points = sweep(c, sweep_o.threads);
      const fs::path dir = prepare_dir(c.out_dir);
      write_file(dir / "sweep.json", dump_json(sweep_to_json(points, c)) + "\n");
      std::string csv = "value,policy,subsystems,channels,mean_cost,cost_stderr,mean_cumulative_regret,"
                        "mean_cumulative_cost_regret,diverged\n";
      for (const auto& p : points) {
        csv += format_double(p.value) + "," + to_string(p.policy) + "," + std::to_string(p.subsystems) + "," +
               std::to_string(p.channels) + "," + format_double(p.mean_cost) + "," + format_double(p.cost_stderr) +
               "," + format_double(p.mean_regret) + "," + format_double(p.mean_cost_regret) + "," +
               (p.diverged ? "1" : "0") + "\n";
      }
      write_file(dir / "sweep.csv", csv);
      std::cout << csv;
    } else if (*rep) {
      return reproduce(rep_name, rep_o, rep);
    }
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what(), std::string(e.field()));
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), "");
    return 1;
  }
  return 0;
}
