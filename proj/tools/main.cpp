// mintime command line: synth, cluster, assemble, train, infer, eval, stats,
// plot. Thin shell over the C API in mintime/mintime.h; all pipeline knobs
// are config keys settable via --config, --set, or dedicated flags.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mintime/mintime.h"

namespace {

struct SessionGuard {
  mintime_session* s = nullptr;
  ~SessionGuard() { mintime_session_destroy(s); }
};

int fail(mintime_session* s, mintime_status status) {
  std::fprintf(stderr, "mintime: error: %s\n", mintime_last_error(s));
  return static_cast<int>(status);
}

int apply(mintime_session* s, mintime_status status) {
  return status == MINTIME_OK ? 0 : fail(s, status);
}

std::string dump_config(mintime_session* s) {
  size_t size = 0;
  if (mintime_config_dump(s, nullptr, &size) != MINTIME_OK) return {};
  std::string buf(size, '\0');
  if (mintime_config_dump(s, buf.data(), &size) != MINTIME_OK) return {};
  buf.resize(size - 1);  // drop the NUL
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  SessionGuard session;
  if (mintime_session_create(&session.s) != MINTIME_OK) {
    std::fprintf(stderr, "mintime: failed to create session\n");
    return static_cast<int>(MINTIME_ERROR_INTERNAL);
  }
  mintime_session* s = session.s;

  CLI::App app{"multi-identity size-invariant video deepfake detection toolkit"};
  app.require_subcommand(0, 1);

  std::string config_file;
  std::vector<std::string> sets;
  std::string seed, jobs;
  bool do_dump = false, show_version = false;
  app.add_option("--config", config_file, "key=value config file");
  app.add_option("--set", sets, "override a config key, e.g. --set model.depth=3");
  app.add_option("--seed", seed, "root seed (config key 'seed')");
  app.add_option("--jobs", jobs, "worker threads (config key 'jobs')");
  app.add_flag("--dump-config", do_dump, "print the resolved configuration and exit");
  app.add_flag("--version", show_version, "print the library version and exit");

  std::string out_dir, manifest, checkpoint, out = "-", detections, sequences, scores;
  std::string report = "-", localization, epoch;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  synth->add_option("--out-dir", out_dir, "dataset output directory")->required();

  CLI::App* cluster = app.add_subcommand("cluster", "group raw detections into identity tracks");
  cluster->add_option("--in", detections, "detections manifest (faces, no tracks)")->required();
  cluster->add_option("--out", manifest, "track manifest output path")->required();

  CLI::App* assemble = app.add_subcommand("assemble", "build model input sequences");
  assemble->add_option("--manifest", manifest, "track manifest")->required();
  assemble->add_option("--out", sequences, "sequence file output path")->required();
  assemble->add_option("--epoch", epoch, "sampling epoch (config key 'assemble.epoch')");

  CLI::App* train = app.add_subcommand("train", "train the toy model");
  train->add_option("--manifest", manifest, "track manifest")->required();
  train->add_option("--checkpoint", checkpoint, "checkpoint output directory")->required();

  CLI::App* infer = app.add_subcommand("infer", "score videos with a trained model");
  infer->add_option("--manifest", manifest, "track manifest")->required();
  infer->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  infer->add_option("--out", out, "output JSON path, '-' for stdout");

  CLI::App* eval = app.add_subcommand("eval", "compute metrics and localization reports");
  eval->add_option("--manifest", manifest, "track manifest")->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval->add_option("--report", report, "metrics report path, '-' for stdout");
  eval->add_option("--localization", localization, "per-video localization JSON path");

  CLI::App* stats = app.add_subcommand("stats", "face-frame area ratio statistics");
  stats->add_option("--manifest", manifest, "track manifest")->required();
  stats->add_option("--out", out, "output JSON path, '-' for stdout");

  CLI::App* plot = app.add_subcommand("plot", "render attention histograms as SVG");
  plot->add_option("--scores", scores, "JSON produced by infer or eval --localization")->required();
  plot->add_option("--out-dir", out_dir, "SVG output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return static_cast<int>(MINTIME_ERROR_CONFIG);
  }

  if (show_version) {
    std::printf("mintime %s\n", mintime_version());
    return 0;
  }

  // Precedence: config file, then --set pairs, then dedicated flags.
  if (!config_file.empty()) {
    if (int rc = apply(s, mintime_config_load_file(s, config_file.c_str()))) return rc;
  }
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "mintime: error: --set expects key=value, got '%s'\n", kv.c_str());
      return static_cast<int>(MINTIME_ERROR_CONFIG);
    }
    if (int rc = apply(s, mintime_config_set(s, kv.substr(0, eq).c_str(),
                                             kv.substr(eq + 1).c_str())))
      return rc;
  }
  if (!seed.empty())
    if (int rc = apply(s, mintime_config_set(s, "seed", seed.c_str()))) return rc;
  if (!jobs.empty())
    if (int rc = apply(s, mintime_config_set(s, "jobs", jobs.c_str()))) return rc;
  if (!epoch.empty())
    if (int rc = apply(s, mintime_config_set(s, "assemble.epoch", epoch.c_str()))) return rc;

  if (do_dump) {
    std::fputs(dump_config(s).c_str(), stdout);
    return 0;
  }

  if (synth->parsed()) return apply(s, mintime_run_synth(s, out_dir.c_str()));
  if (cluster->parsed())
    return apply(s, mintime_run_cluster(s, detections.c_str(), manifest.c_str()));
  if (assemble->parsed())
    return apply(s, mintime_run_assemble(s, manifest.c_str(), sequences.c_str()));
  if (train->parsed())
    return apply(s, mintime_run_train(s, manifest.c_str(), checkpoint.c_str()));
  if (infer->parsed())
    return apply(s, mintime_run_infer(s, manifest.c_str(), checkpoint.c_str(), out.c_str()));
  if (eval->parsed()) {
    std::string loc = localization;
    if (loc.empty() && report != "-") loc = report + ".localization.json";
    return apply(s, mintime_run_eval(s, manifest.c_str(), checkpoint.c_str(), report.c_str(),
                                     loc.empty() ? nullptr : loc.c_str()));
  }
  if (stats->parsed()) return apply(s, mintime_run_stats(s, manifest.c_str(), out.c_str()));
  if (plot->parsed()) return apply(s, mintime_run_plot(s, scores.c_str(), out_dir.c_str()));

  std::fputs(app.help().c_str(), stderr);
  return static_cast<int>(MINTIME_ERROR_CONFIG);
}
