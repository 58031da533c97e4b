// End-to-end tests driving the installed binary through its subcommands.
// The binary path arrives via the PWCLUST_BIN environment variable.

#include <sys/wait.h>
#include <unistd.h>

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pwclust/io.hpp"

namespace fs = std::filesystem;
using pwclust::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

struct CliFixture {
  fs::path dir;
  std::string bin;

  CliFixture() {
    const char* env = std::getenv("PWCLUST_BIN");
    REQUIRE(env != nullptr);
    bin = env;
    dir = fs::temp_directory_path() /
          ("pwclust_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~CliFixture() { fs::remove_all(dir); }

  RunResult run(const std::string& args) const {
    fs::path out_file = dir / "stdout.txt";
    fs::path err_file = dir / "stderr.txt";
    std::string cmd = bin + " " + args + " > " + out_file.string() + " 2> " +
                      err_file.string();
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path write(const std::string& name, const std::string& text) const {
    fs::path p = dir / name;
    std::ofstream out(p);
    out << text;
    return p;
  }
};

const char* kSpecJson = R"({
  "samples": [
    {"id": "a0", "class": "A", "thetas": [0.5, 1.0],
     "segments": [
       {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.9, 0.1]},
       {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.1, 0.9]}]},
    {"id": "a1", "class": "A", "thetas": [0.4, 1.0],
     "segments": [
       {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.1, 0.9]},
       {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.9, 0.1]}]},
    {"id": "b0", "class": "B", "thetas": [1.0],
     "segments": [
       {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.9, 0.1]}]},
    {"id": "b1", "class": "B", "thetas": [1.0],
     "segments": [
       {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.9, 0.1]}]},
    {"id": "c0", "class": "C", "thetas": [1.0],
     "segments": [
       {"kind": "markov_finite", "values": [0.25, 0.75],
        "transition": [[0.95, 0.05], [0.05, 0.95]]}]},
    {"id": "c1", "class": "C", "thetas": [1.0],
     "segments": [
       {"kind": "markov_finite", "values": [0.25, 0.75],
        "transition": [[0.95, 0.05], [0.05, 0.95]]}]}
  ]})";

}  // namespace

TEST_CASE_METHOD(CliFixture, "generate writes samples and truth") {
  fs::path spec = write("spec.json", kSpecJson);
  fs::path out = dir / "samples.jsonl";
  RunResult r = run("generate --spec " + spec.string() +
                    " --n 2048 --seed 7 --out " + out.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(out));
  std::vector<pwclust::TimeSeries> samples = pwclust::read_sample_file(out);
  CHECK(samples.size() == 6);
  CHECK(samples[0].size() == 2048);

  pwclust::TruthFile truth =
      pwclust::load_truth(out.string() + ".truth.json");
  REQUIRE(truth.samples.size() == 6);
  CHECK(truth.samples[0].change_points == std::vector<std::size_t>{1024});
  CHECK(truth.samples[2].change_points.empty());
  CHECK(truth.alpha == 0.4);

  // Rerun with the same seed: byte-identical outputs.
  fs::path out2 = dir / "samples2.jsonl";
  RunResult r2 = run("generate --spec " + spec.string() +
                     " --n 2048 --seed 7 --out " + out2.string());
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(out) == slurp(out2));
}

TEST_CASE_METHOD(CliFixture, "changepoints emits a report per sample") {
  fs::path spec = write("spec.json", kSpecJson);
  fs::path out = dir / "samples.jsonl";
  REQUIRE(run("generate --spec " + spec.string() +
              " --n 2048 --seed 3 --out " + out.string())
              .exit_code == 0);
  fs::path report = dir / "cp.json";
  RunResult r = run("changepoints --input " + out.string() +
                    " --lambda 0.25 --out " + report.string());
  REQUIRE(r.exit_code == 0);
  json body = pwclust::load_report_body(report);
  CHECK(body["command"] == "changepoints");
  REQUIRE(body["samples"].size() == 6);
  // The two-segment samples have a change near the middle.
  auto candidates = body["samples"][0]["candidates"];
  REQUIRE_FALSE(candidates.empty());
  bool near = false;
  for (const auto& c : candidates)
    near = near || std::abs(c.get<double>() - 1024.0) < 0.05 * 2048;
  CHECK(near);
}

TEST_CASE_METHOD(CliFixture, "delta prints a nonnegative estimate") {
  fs::path spec = write("spec.json", kSpecJson);
  fs::path out = dir / "samples.jsonl";
  REQUIRE(run("generate --spec " + spec.string() +
              " --n 2048 --seed 3 --out " + out.string())
              .exit_code == 0);
  RunResult same = run("delta --input " + out.string() +
                       " --pair b0,b0 --lambda 0.25");
  REQUIRE(same.exit_code == 0);
  CHECK(std::stod(same.out) == 0.0);
  RunResult cross = run("delta --input " + out.string() +
                        " --pair a0,b0 --lambda 0.25");
  REQUIRE(cross.exit_code == 0);
  CHECK(std::stod(cross.out) > 0.0);
  RunResult missing = run("delta --input " + out.string() +
                          " --pair a0,zz --lambda 0.25");
  CHECK(missing.exit_code == 2);
}

TEST_CASE_METHOD(CliFixture, "cluster plus evaluate recovers easy classes") {
  fs::path spec = write("spec.json", kSpecJson);
  fs::path out = dir / "samples.jsonl";
  REQUIRE(run("generate --spec " + spec.string() +
              " --n 4096 --seed 11 --out " + out.string())
              .exit_code == 0);
  fs::path report = dir / "cluster.json";
  RunResult r = run("cluster --input " + out.string() +
                    " --m 3 --lambda 0.25 --out " + report.string());
  REQUIRE(r.exit_code == 0);
  json body = pwclust::load_report_body(report);
  CHECK(body["ids"].size() == 6);
  CHECK(body["centers"].size() == 3);
  CHECK(body["distance_matrix"].size() == 6);

  RunResult ev = run("evaluate --report " + report.string() + " --truth " +
                     out.string() + ".truth.json");
  REQUIRE(ev.exit_code == 0);
  json verdict = json::parse(ev.out);
  CHECK(verdict["exact_match"] == true);
  CHECK(verdict["pair_accuracy"] == 1.0);
}

TEST_CASE_METHOD(CliFixture, "cluster rejects m greater than N") {
  fs::path spec = write("spec.json", kSpecJson);
  fs::path out = dir / "samples.jsonl";
  REQUIRE(run("generate --spec " + spec.string() +
              " --n 1024 --seed 1 --out " + out.string())
              .exit_code == 0);
  RunResult r = run("cluster --input " + out.string() +
                    " --m 9 --lambda 0.25 --out " + (dir / "x.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("exceeds the sample count") != std::string::npos);
}

TEST_CASE_METHOD(CliFixture, "experiment emits a reproducible table") {
  fs::path spec = write("spec.json", kSpecJson);
  fs::path config = write("config.json", std::string(R"({
    "specs": "spec.json",
    "n_list": [512, 1024],
    "seeds": [1, 2],
    "lambda": 0.25,
    "m": 3
  })"));
  fs::path table = dir / "table.tsv";
  RunResult r = run("experiment --config " + config.string() + " --out " +
                    table.string());
  REQUIRE(r.exit_code == 0);
  std::string content = slurp(table);
  std::size_t lines = std::count(content.begin(), content.end(), '\n');
  CHECK(lines == 5);  // header + 4 cells
  CHECK(content.rfind("n\tseed\t", 0) == 0);

  fs::path table2 = dir / "table2.tsv";
  RunResult r2 = run("experiment --config " + config.string() + " --out " +
                     table2.string());
  REQUIRE(r2.exit_code == 0);
  CHECK(content == slurp(table2));
}

TEST_CASE_METHOD(CliFixture, "shared seed mode reuses one noise stream") {
  const char* shared_spec = R"({
    "seed_mode": "shared",
    "samples": [
      {"id": "b0", "class": "B", "thetas": [1.0],
       "segments": [
         {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.9, 0.1]}]},
      {"id": "b1", "class": "B", "thetas": [1.0],
       "segments": [
         {"kind": "iid_finite", "support": [0.25, 0.75], "probs": [0.9, 0.1]}]}
    ]})";
  fs::path spec = write("shared.json", shared_spec);
  fs::path out = dir / "shared.jsonl";
  REQUIRE(run("generate --spec " + spec.string() +
              " --n 256 --seed 4 --out " + out.string())
              .exit_code == 0);
  auto samples = pwclust::read_sample_file(out);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].values == samples[1].values);
}

TEST_CASE_METHOD(CliFixture, "lambda above alpha warns without failing") {
  fs::path spec = write("spec.json", kSpecJson);
  fs::path config = write("config.json", std::string(R"({
    "specs": "spec.json",
    "n_list": [512],
    "seeds": [1],
    "lambda": 0.45,
    "m": 2
  })"));
  fs::path table = dir / "warn.tsv";
  RunResult r = run("experiment --config " + config.string() + " --out " +
                    table.string());
  CHECK(r.exit_code == 0);  // warns, does not fail
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(r.err.find("alpha") != std::string::npos);
}

TEST_CASE_METHOD(CliFixture, "usage and data errors use distinct exit codes") {
  CHECK(run("frobnicate").exit_code == 1);
  CHECK(run("cluster --input missing.jsonl --m 2 --lambda 0.2 --out x.json")
            .exit_code == 2);
  CHECK(run("--version").exit_code == 0);
}
