#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* kCli = MINTIME_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run(const std::string& args, const std::string& extra_env = "") {
  const fs::path out = fs::temp_directory_path() / "mintime_cli_stdout.txt";
  const std::string cmd =
      extra_env + " " + std::string(kCli) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(out);
  r.stdout_text.assign((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  fs::remove(out);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string tiny_synth_flags() {
  return "--set synth.num_videos=4 --set synth.frames=6 --set synth.crop_size=8 "
         "--set cluster.min_cluster_size=3 --jobs 1";
}

}  // namespace

TEST_CASE("dump-config prints every default") {
  RunResult r = run("--dump-config");
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("seed=42") != std::string::npos);
  CHECK(r.stdout_text.find("assemble.sequence_length=16") != std::string::npos);
  CHECK(r.stdout_text.find("train.lr_max=0.01") != std::string::npos);

  // overrides show up in the dump
  r = run("--set model.depth=5 --dump-config");
  CHECK(r.stdout_text.find("model.depth=5") != std::string::npos);
}

TEST_CASE("config errors exit with code 2") {
  CHECK(run("--set bogus.key=1 --dump-config").exit_code == 2);
  CHECK(run("synth").exit_code == 2);                        // missing --out-dir
  CHECK(run("stats --manifest missing.jsonl").exit_code == 2);  // missing input file
  CHECK(run("definitely-not-a-subcommand").exit_code == 2);
}

TEST_CASE("data validation errors exit with code 3") {
  const fs::path dir = fresh_dir("cli_data_err");
  const fs::path bad = dir / "bad.jsonl";
  std::ofstream(bad) << "{\"embedding_dim\":2}\n{\"video_id\":\"v\",\"label\":\"pristine\","
                     << "\"tracks\":[{\"identity_id\":0,\"faces\":[{\"frame_index\":0,"
                     << "\"bbox\":[0,0,0,5],\"frame_size\":[64,48],\"embedding\":[1,0],"
                     << "\"feature_ref\":\"\"}]}]}\n";
  CHECK(run("stats --manifest " + bad.string()).exit_code == 3);
  fs::remove_all(dir);
}

TEST_CASE("seed fallback comes from MINTIME_SEED") {
  RunResult r = run("--dump-config", "MINTIME_SEED=777");
  CHECK(r.stdout_text.find("seed=777") != std::string::npos);
  // explicit flag wins over the environment
  r = run("--seed 5 --dump-config", "MINTIME_SEED=777");
  CHECK(r.stdout_text.find("seed=5") != std::string::npos);
}

TEST_CASE("synth then stats and determinism of artifacts") {
  const fs::path a = fresh_dir("cli_synth_a");
  const fs::path b = fresh_dir("cli_synth_b");
  CHECK(run(tiny_synth_flags() + " synth --out-dir " + a.string()).exit_code == 0);
  CHECK(run(tiny_synth_flags() + " synth --out-dir " + b.string()).exit_code == 0);

  auto bytes = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  };
  CHECK(bytes(a / "manifest.jsonl") == bytes(b / "manifest.jsonl"));

  RunResult stats = run("stats --manifest " + (a / "manifest.jsonl").string());
  CHECK(stats.exit_code == 0);
  CHECK(stats.stdout_text.find("\"variance\"") != std::string::npos);

  // different seed, different dataset
  const fs::path c = fresh_dir("cli_synth_c");
  CHECK(run(tiny_synth_flags() + " --seed 7 synth --out-dir " + c.string()).exit_code == 0);
  CHECK(bytes(a / "manifest.jsonl") != bytes(c / "manifest.jsonl"));

  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("cluster and assemble pipeline stages") {
  const fs::path dir = fresh_dir("cli_pipeline");
  REQUIRE(run(tiny_synth_flags() + " synth --out-dir " + dir.string()).exit_code == 0);

  const fs::path clustered = dir / "clustered.jsonl";
  CHECK(run(tiny_synth_flags() + " cluster --in " + (dir / "detections.jsonl").string() +
            " --out " + clustered.string())
            .exit_code == 0);
  CHECK(fs::exists(clustered));

  const fs::path seqs = dir / "sequences.mnsq";
  CHECK(run(tiny_synth_flags() +
            " --set model.crop_size=8 --set model.feature_grid=2 --set model.dim=16 "
            "assemble --manifest " +
            (dir / "manifest.jsonl").string() + " --out " + seqs.string())
            .exit_code == 0);
  CHECK(fs::exists(seqs));
  fs::remove_all(dir);
}

TEST_CASE("end-to-end train, infer, eval, plot on a tiny config") {
  const fs::path dir = fresh_dir("cli_e2e");
  const std::string model_flags =
      " --set synth.num_videos=12 --set model.crop_size=8 --set model.feature_grid=2 "
      "--set model.dim=16 --set model.heads=2 --set model.depth=1 "
      "--set assemble.sequence_length=4 --set model.max_frames=8 --set train.epochs=2 "
      "--set train.batch_size=4 ";
  const std::string flags = tiny_synth_flags() + model_flags;
  REQUIRE(run(flags + " synth --out-dir " + dir.string()).exit_code == 0);

  const fs::path ckpt = dir / "ckpt";
  REQUIRE(run(flags + " train --manifest " + (dir / "manifest.jsonl").string() +
              " --checkpoint " + ckpt.string())
              .exit_code == 0);
  CHECK(fs::exists(ckpt / "config.txt"));
  CHECK(fs::exists(ckpt / "TE.mnt"));
  CHECK(fs::exists(ckpt / "SE.mnt"));

  RunResult infer = run(flags + " infer --manifest " + (dir / "manifest.jsonl").string() +
                        " --checkpoint " + ckpt.string());
  CHECK(infer.exit_code == 0);
  CHECK(infer.stdout_text.find("\"score\"") != std::string::npos);
  CHECK(infer.stdout_text.find("\"suspect_identity\"") != std::string::npos);

  const fs::path scores = dir / "scores.json";
  REQUIRE(run(flags + " infer --manifest " + (dir / "manifest.jsonl").string() +
              " --checkpoint " + ckpt.string() + " --out " + scores.string())
              .exit_code == 0);

  const fs::path report = dir / "report.json";
  RunResult eval = run(flags + " eval --manifest " + (dir / "manifest.jsonl").string() +
                       " --checkpoint " + ckpt.string() + " --report " + report.string());
  CHECK(eval.exit_code == 0);
  std::ifstream is(report);
  std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  CHECK(content.find("\"accuracy\"") != std::string::npos);
  CHECK(content.find("\"auc\"") != std::string::npos);
  CHECK(content.find("\"fpr\"") != std::string::npos);
  CHECK(content.find("\"mav\"") != std::string::npos);
  CHECK(content.find("\"per_class\"") != std::string::npos);
  CHECK(fs::exists(dir / "report.json.localization.json"));

  const fs::path plots = dir / "plots";
  CHECK(run(flags + " plot --scores " + scores.string() + " --out-dir " + plots.string())
            .exit_code == 0);
  bool any_svg = false;
  for (const auto& entry : fs::directory_iterator(plots))
    any_svg = any_svg || entry.path().extension() == ".svg";
  CHECK(any_svg);
  fs::remove_all(dir);
}
