// casper: run visual-search simulations and export their results.
//
//   casper replicate <sim1..sim10> [--seed N] [--out DIR] [--subjects N] [--trials N]
//                                  [--reference CSV] [--trace] [--threads N] [--dump-spec]
//   casper run <file.exp> [same flags]
//   casper replay <manifest.json> [--out DIR] [--threads N]
//   casper tables [--out DIR]
//
// Exit status: 0 when every trial finished without hitting the iteration cap,
// 1 when some did, 2 on usage, parse or I/O errors.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "casper/casper.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subjects;
  std::optional<std::size_t> trials;
  std::string out;
  std::string reference;
  bool trace = false;
  bool dump_spec = false;
  bool include_target_only = false;
  unsigned threads = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw casper::Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a sibling temporary and renames it into place.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw casper::Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw casper::Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fixed(double v, int digits = 2) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

json params_json(const casper::EngineParams& p) {
  json out = json::object();
  for (auto key : casper::EngineParams::kKeys) out[std::string(key)] = p.get(key);
  return out;
}

void print_headline(const casper::ExperimentResult& result, const std::vector<casper::RTCurve>& curves,
                    bool include_target_only) {
  std::cout << "experiment " << result.spec.name << " (seed " << result.spec.seed << ", " << result.spec.subjects
            << " subjects x " << result.spec.trials << " trials)\n";
  for (const auto& c : curves) {
    std::cout << "  " << c.condition << "\n    mean rt:";
    for (const auto& p : c.points) std::cout << ' ' << p.set_size << '=' << fixed(p.mean_rt);
    std::cout << '\n';
    try {
      const auto lin = casper::fit_linear(c, include_target_only);
      const auto lg = casper::fit_log(c, include_target_only);
      std::cout << "    linear slope " << fixed(lin.slope, 3) << " it/item (R2 " << fixed(lin.r2, 4) << "), log slope "
                << fixed(lg.slope, 3) << " it/ln-unit (R2 " << fixed(lg.r2, 4) << ")\n";
    } catch (const casper::Error&) {
      std::cout << "    too few set sizes for slope fits\n";
    }
    if (c.at(2) && c.at(8)) std::cout << "    slope 2->8: " << fixed(casper::slope_between(c, 2, 8), 3) << " it/item\n";
  }
  const std::size_t timeouts = result.total_timeouts();
  if (timeouts > 0) std::cout << "  WARNING: " << timeouts << " trials hit the iteration cap\n";
}

struct Artifacts {
  json paths = json::object();
};

int execute(casper::ExperimentSpec spec, const RunFlags& flags, const std::vector<std::string>& command,
            const std::string& default_out) {
  if (flags.seed) spec.seed = *flags.seed;
  if (flags.subjects) spec.subjects = *flags.subjects;
  if (flags.trials) spec.trials = *flags.trials;
  spec.validate();
  const std::string canonical = casper::serialize_experiment(spec);
  if (flags.dump_spec) {
    std::cout << canonical;
    return 0;
  }

  const fs::path out_dir = flags.out.empty() ? fs::path(default_out) : fs::path(flags.out);
  fs::create_directories(out_dir);

  std::optional<std::vector<casper::ReferenceSeries>> refs;
  if (!flags.reference.empty()) refs = casper::parse_reference_csv(read_file(flags.reference));

  const auto started = std::chrono::steady_clock::now();
  casper::RunOptions options;
  options.threads = flags.threads;
  std::size_t last_decile = 0;
  options.progress = [&](const casper::CellResult&, std::size_t done, std::size_t total) {
    const std::size_t decile = done * 10 / total;
    if (decile != last_decile) {
      last_decile = decile;
      std::cerr << "\r" << done << "/" << total << " cells" << (done == total ? "\n" : "") << std::flush;
    }
  };
  const casper::ExperimentResult result = casper::run_experiment(spec, options);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const bool include_t1 = flags.include_target_only || casper::include_target_only_by_default(spec.name);
  const auto curves = casper::make_curves(result);

  Artifacts art;
  auto emit = [&](const std::string& key, const std::string& name, const std::string& content) {
    write_atomic(out_dir / name, content);
    art.paths[key] = name;
  };
  emit("results", "results.csv", casper::results_csv(result));
  emit("aggregate", "aggregate.csv", casper::aggregate_csv(result));
  try {
    emit("analysis", "analysis.csv", casper::analysis_csv(curves, include_t1));
  } catch (const casper::Error& e) {
    std::cerr << "analysis.csv skipped: " << e.what() << '\n';
  }
  emit("plot", "plot.svg", casper::render_svg(curves, spec.name));

  print_headline(result, curves, include_t1);

  if (refs) {
    const auto report = casper::fit_r2_vs_reference(curves, *refs, !include_t1);
    emit("reference_fit", "reference_fit.csv", casper::reference_fit_csv(report));
    std::cout << "  reference fit:\n";
    for (const auto& c : report.conditions) {
      std::cout << "    " << c.condition << ": R2 " << fixed(c.r2, 3) << ", " << fixed(c.ms_per_iteration, 2)
                << " ms/iteration\n";
    }
    std::cout << "    concatenated: R2 " << fixed(report.concatenated_r2, 3) << ", "
              << fixed(report.concatenated_ms_per_iteration, 2) << " ms/iteration\n";
  }

  if (flags.trace) {
    fs::create_directories(out_dir / "traces");
    json traces = json::array();
    for (std::size_t ci = 0; ci < spec.conditions.size(); ++ci) {
      for (std::size_t si = 0; si < spec.set_sizes.size(); ++si) {
        casper::TraceRecorder recorder;
        casper::replay_trial(spec, result.params, ci, si, 0, 0, recorder.observer());
        const std::string name = "traces/" + spec.conditions[ci].name + "_n" + std::to_string(spec.set_sizes[si]) + ".csv";
        write_atomic(out_dir / name, recorder.csv());
        traces.push_back(name);
      }
    }
    art.paths["traces"] = traces;
  }

  json manifest;
  manifest["version"] = casper::kVersion;
  manifest["command"] = command;
  manifest["experiment"] = spec.name;
  manifest["spec"] = canonical;
  manifest["params"] = params_json(result.params);
  manifest["seed"] = spec.seed;
  manifest["include_target_only"] = include_t1;
  manifest["artifacts"] = art.paths;
  manifest["timeouts"] = result.total_timeouts();
  manifest["wall_time_seconds"] = wall;
  write_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << out_dir.string() << "/\n";

  return result.total_timeouts() == 0 ? 0 : 1;
}

int replay(const fs::path& manifest_path, const RunFlags& flags, const std::vector<std::string>& command) {
  const json manifest = json::parse(read_file(manifest_path));
  const casper::ExperimentSpec spec = casper::parse_experiment(manifest.at("spec").get<std::string>());
  const fs::path source_dir = manifest_path.parent_path();
  RunFlags f;
  f.threads = flags.threads;
  f.out = flags.out.empty() ? (source_dir / "replay").string() : flags.out;
  f.include_target_only = manifest.value("include_target_only", false);
  const int status = execute(spec, f, command, f.out);

  const auto& arts = manifest.at("artifacts");
  if (arts.contains("results")) {
    const fs::path original = source_dir / arts.at("results").get<std::string>();
    if (fs::exists(original)) {
      const bool same = read_file(original) == read_file(fs::path(f.out) / "results.csv");
      std::cout << "results.csv " << (same ? "reproduced byte-for-byte" : "DIFFERS from the original run") << '\n';
      if (!same) return 2;
    }
  }
  return status;
}

int tables(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  write_atomic(dir / "colors.csv", casper::color_table_csv());
  write_atomic(dir / "shapes.csv", casper::shape_table_csv());
  std::cout << "wrote " << casper::kColorTable.size() << " colors and " << casper::kShapeTable.size()
            << " shapes to " << dir.string() << "/\n";
  return 0;
}

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Master seed (overrides the definition)");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--subjects", flags.subjects, "Virtual subjects per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--trials", flags.trials, "Trials per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--reference", flags.reference, "Human reference CSV (label,set_size,mean_rt_ms)");
  cmd->add_flag("--trace", flags.trace, "Export a per-iteration trace of trial 0, subject 0 per cell");
  cmd->add_flag("--dump-spec", flags.dump_spec, "Print the canonical definition and exit");
  cmd->add_flag("--include-target-only", flags.include_target_only, "Include set size 1 in slope fits");
  cmd->add_option("--threads", flags.threads, "Worker threads (0 = hardware concurrency)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual search simulator: presets, custom experiments, encoding tables"};
  app.set_version_flag("--version", casper::kVersion);
  app.require_subcommand(1);

  RunFlags flags;
  std::string target;

  auto* rep = app.add_subcommand("replicate", "Run a shipped simulation preset");
  rep->add_option("sim", target, "Preset id (sim1..sim10)")->required();
  add_run_flags(rep, flags);

  auto* run = app.add_subcommand("run", "Run an experiment definition file");
  run->add_option("file", target, "Definition file")->required();
  add_run_flags(run, flags);

  auto* rp = app.add_subcommand("replay", "Re-run the experiment recorded in a manifest and compare results");
  rp->add_option("manifest", target, "manifest.json of an earlier run")->required();
  rp->add_option("--out", flags.out, "Output directory (default: <manifest dir>/replay)");
  rp->add_option("--threads", flags.threads, "Worker threads (0 = hardware concurrency)");

  auto* tab = app.add_subcommand("tables", "Export the color and shape encoding tables");
  tab->add_option("--out", flags.out, "Output directory");

  CLI11_PARSE(app, argc, argv);
  const std::vector<std::string> command(argv, argv + argc);

  try {
    if (*rep) return execute(casper::preset(target), flags, command, "casper_out/" + target);
    if (*run) {
      casper::ExperimentSpec spec;
      try {
        spec = casper::parse_experiment(read_file(target));
      } catch (const casper::ParseError& e) {
        std::cerr << target << ':' << e.what() << '\n';
        return 2;
      }
      return execute(std::move(spec), flags, command, "casper_out/" + fs::path(target).stem().string());
    }
    if (*rp) return replay(target, flags, command);
    if (*tab) return tables(flags.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
