// Command-line front end: data generation, change-point scans, delta
// estimates, clustering runs, evaluation against ground truth, and seeded
// convergence experiments.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pwclust/clustering.hpp"
#include "pwclust/detail/parallel.hpp"
#include "pwclust/detail/rng.hpp"
#include "pwclust/io.hpp"
#include "pwclust/processes.hpp"
#include "pwclust/version.hpp"

namespace fs = std::filesystem;
using pwclust::json;

namespace {

class StageTimer {
 public:
  void start(const std::string& stage) {
    stage_ = stage;
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    auto end = std::chrono::steady_clock::now();
    timings_[stage_] =
        std::chrono::duration<double, std::milli>(end - begin_).count();
  }
  json to_json() const { return timings_; }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point begin_;
  std::map<std::string, double> timings_;
};

struct GenerateArgs {
  std::string spec_path;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string truth_path;
};

struct GeneratedSet {
  std::vector<pwclust::TimeSeries> samples;
  pwclust::TruthFile truth;
};

GeneratedSet generate_set(const pwclust::GeneratorSpec& spec, std::size_t n,
                          std::uint64_t seed) {
  GeneratedSet set;
  set.truth.alpha = spec.alpha();
  for (std::size_t i = 0; i < spec.samples.size(); ++i) {
    const pwclust::SampleSpec& s = spec.samples[i];
    std::uint64_t sample_seed =
        spec.shared_seed ? seed : pwclust::detail::derive_seed(seed, i);
    pwclust::GeneratedSample g =
        pwclust::generate_piecewise(s.piecewise, n, sample_seed, s.id);
    set.truth.samples.push_back(pwclust::TruthEntry{
        s.id, s.class_name, g.series.size(), g.change_points});
    set.samples.push_back(std::move(g.series));
  }
  return set;
}

int cmd_generate(const GenerateArgs& args) {
  StageTimer timer;
  timer.start("generate");
  pwclust::GeneratorSpec spec = pwclust::load_generator_spec(args.spec_path);
  GeneratedSet set = generate_set(spec, args.n, args.seed);
  timer.stop();
  timer.start("write");
  pwclust::write_sample_file(args.out_path, set.samples);
  fs::path truth_path = args.truth_path.empty()
                            ? fs::path(args.out_path + ".truth.json")
                            : fs::path(args.truth_path);
  pwclust::write_file_atomic(truth_path,
                             pwclust::truth_to_json(set.truth).dump(2) + "\n");
  timer.stop();
  return 0;
}

struct ChangepointArgs {
  std::string input;
  double lambda = 0.0;
  std::string out;
};

int cmd_changepoints(const ChangepointArgs& args) {
  StageTimer timer;
  timer.start("ingest");
  auto [samples, norm] = pwclust::ingest(args.input);
  timer.stop();
  timer.start("scan");
  std::vector<pwclust::CandidateList> lists(samples.size());
  pwclust::detail::parallel_for(samples.size(), [&](std::size_t i) {
    lists[i] = pwclust::list_estimate(samples[i], args.lambda);
  });
  timer.stop();
  json body = pwclust::report_body("changepoints",
                                   json{{"lambda", args.lambda}});
  body["normalization"] = norm.to_json();
  body["samples"] = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i)
    body["samples"].push_back(json{{"id", samples[i].id},
                                   {"n", samples[i].size()},
                                   {"candidates", lists[i].candidates},
                                   {"scores", lists[i].scores}});
  pwclust::write_report(args.out, body,
                        json{{"input", args.input},
                             {"timings_ms", timer.to_json()}});
  return 0;
}

struct DeltaArgs {
  std::string input;
  std::string pair;
  double lambda = 0.0;
};

int cmd_delta(const DeltaArgs& args) {
  auto comma = args.pair.find(',');
  if (comma == std::string::npos)
    throw std::runtime_error("--pair expects two ids separated by a comma");
  std::string id_a = args.pair.substr(0, comma);
  std::string id_b = args.pair.substr(comma + 1);
  auto [samples, norm] = pwclust::ingest(args.input);
  const pwclust::TimeSeries* a = nullptr;
  const pwclust::TimeSeries* b = nullptr;
  for (const auto& s : samples) {
    if (s.id == id_a) a = &s;
    if (s.id == id_b) b = &s;
  }
  if (!a || !b)
    throw std::runtime_error("pair ids not found in " + args.input);
  std::cout << pwclust::format_double(
                   pwclust::delta_hat(*a, *b, args.lambda))
            << "\n";
  return 0;
}

struct ClusterArgs {
  std::string input;
  std::size_t m = 0;
  double lambda = 0.0;
  std::string out;
};

json matrix_to_json(const pwclust::DistanceMatrix& d) {
  json rows = json::array();
  for (std::size_t i = 0; i < d.n; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < d.n; ++j) row.push_back(d.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json policy_stats_to_json(const pwclust::PairPolicyStats& s) {
  return json{{"pairs", s.pairs},
              {"u_max_range", {s.u_min, s.u_max}},
              {"v_max_range", {s.v_min, s.v_max}},
              {"n_eff_range", {s.n_eff_min, s.n_eff_max}}};
}

int cmd_cluster(const ClusterArgs& args) {
  StageTimer timer;
  timer.start("ingest");
  auto [samples, norm] = pwclust::ingest(args.input);
  timer.stop();
  if (args.m > samples.size())
    throw std::invalid_argument(
        "m (" + std::to_string(args.m) + ") exceeds the sample count N (" +
        std::to_string(samples.size()) + ")");
  timer.start("distances");
  pwclust::PairwiseDeltaResult pd =
      pwclust::pairwise_delta_detailed(samples, args.lambda);
  timer.stop();
  timer.start("assign");
  pwclust::ClusteringResult result = pwclust::assign_remaining(
      pd.matrix, pwclust::farthest_point_init(pd.matrix, args.m));
  timer.stop();

  json body = pwclust::report_body(
      "cluster", json{{"lambda", args.lambda}, {"m", args.m}});
  body["normalization"] = norm.to_json();
  body["policy"] = policy_stats_to_json(pd.policy_stats);
  json ids = json::array();
  for (const auto& s : samples) ids.push_back(s.id);
  body["ids"] = ids;
  body["candidates"] = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i)
    body["candidates"].push_back(json{{"id", samples[i].id},
                                      {"positions", pd.candidates[i].candidates},
                                      {"scores", pd.candidates[i].scores}});
  body["distance_matrix"] = matrix_to_json(pd.matrix);
  body["centers"] = result.centers;
  body["assignment"] = result.assignment;
  pwclust::write_report(args.out, body,
                        json{{"input", args.input},
                             {"timings_ms", timer.to_json()}});
  return 0;
}

struct EvaluateArgs {
  std::string report;
  std::string truth;
};

int cmd_evaluate(const EvaluateArgs& args) {
  json body = pwclust::load_report_body(args.report);
  pwclust::TruthFile truth = pwclust::load_truth(args.truth);
  if (!body.contains("ids") || !body.contains("assignment"))
    throw std::runtime_error(args.report + ": not a cluster report");
  if (body.contains("params") && body["params"].contains("lambda") &&
      truth.alpha > 0.0 &&
      body["params"]["lambda"].get<double>() > truth.alpha)
    std::cerr << "warning: report lambda "
              << pwclust::format_double(
                     body["params"]["lambda"].get<double>())
              << " exceeds the declared alpha "
              << pwclust::format_double(truth.alpha)
              << "; consistency needs lambda in (0, alpha]\n";

  std::map<std::string, std::string> class_of;
  for (const auto& e : truth.samples) class_of[e.id] = e.class_name;
  std::vector<std::size_t> truth_labels;
  std::vector<std::string> class_order;
  for (const auto& id : body["ids"]) {
    auto it = class_of.find(id.get<std::string>());
    if (it == class_of.end())
      throw std::runtime_error("sample '" + id.get<std::string>() +
                               "' missing from truth file");
    auto pos = std::find(class_order.begin(), class_order.end(), it->second);
    if (pos == class_order.end()) {
      class_order.push_back(it->second);
      pos = class_order.end() - 1;
    }
    truth_labels.push_back(
        static_cast<std::size_t>(pos - class_order.begin()));
  }
  std::vector<std::size_t> assignment =
      body["assignment"].get<std::vector<std::size_t>>();
  pwclust::PartitionComparison cmp =
      pwclust::compare_partitions(assignment, truth_labels);
  json out{{"exact_match", cmp.exact_match},
           {"pair_accuracy", cmp.pair_accuracy}};
  std::cout << out.dump() << "\n";
  return 0;
}

struct ExperimentArgs {
  std::string config;
  std::string out;
};

struct ExperimentConfig {
  pwclust::GeneratorSpec spec;
  std::vector<std::size_t> n_list;
  std::vector<std::uint64_t> seeds;
  double lambda = 0.0;
  std::size_t m = 0;
};

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  ExperimentConfig cfg;
  const json& specs = j.at("specs");
  if (specs.is_string()) {
    fs::path spec_path = specs.get<std::string>();
    if (spec_path.is_relative()) spec_path = path.parent_path() / spec_path;
    cfg.spec = pwclust::load_generator_spec(spec_path);
  } else {
    cfg.spec = pwclust::parse_generator_spec(specs);
  }
  cfg.n_list = j.at("n_list").get<std::vector<std::size_t>>();
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.m = j.at("m").get<std::size_t>();
  if (cfg.n_list.empty() || cfg.seeds.empty())
    throw std::runtime_error("experiment config: empty n_list or seeds");
  return cfg;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
}

int cmd_experiment(const ExperimentArgs& args) {
  ExperimentConfig cfg = load_experiment_config(args.config);
  if (cfg.lambda > cfg.spec.alpha())
    std::cerr << "warning: lambda " << pwclust::format_double(cfg.lambda)
              << " exceeds the spec alpha "
              << pwclust::format_double(cfg.spec.alpha())
              << "; consistency needs lambda in (0, alpha]\n";
  if (cfg.m > cfg.spec.samples.size())
    throw std::invalid_argument("experiment: m exceeds the sample count");

  struct Cell {
    std::size_t n;
    std::uint64_t seed;
    double delta_same = 0.0, delta_cross = 0.0, pair_accuracy = 0.0;
    bool exact = false;
  };
  std::vector<Cell> cells;
  for (std::size_t n : cfg.n_list)
    for (std::uint64_t seed : cfg.seeds) cells.push_back(Cell{n, seed});

  pwclust::detail::parallel_for(cells.size(), [&](std::size_t k) {
    Cell& cell = cells[k];
    GeneratedSet set = generate_set(cfg.spec, cell.n, cell.seed);
    pwclust::normalize_in_place(set.samples);
    pwclust::PairwiseDeltaResult pd =
        pwclust::pairwise_delta_detailed(set.samples, cfg.lambda);
    std::vector<double> same, cross;
    for (std::size_t i = 0; i < set.samples.size(); ++i)
      for (std::size_t j = i + 1; j < set.samples.size(); ++j) {
        bool same_class = set.truth.samples[i].class_name ==
                          set.truth.samples[j].class_name;
        (same_class ? same : cross).push_back(pd.matrix.at(i, j));
      }
    cell.delta_same = median(same);
    cell.delta_cross = median(cross);
    pwclust::ClusteringResult result = pwclust::assign_remaining(
        pd.matrix, pwclust::farthest_point_init(pd.matrix, cfg.m));
    std::vector<std::size_t> truth_labels;
    std::vector<std::string> class_order;
    for (const auto& e : set.truth.samples) {
      auto pos =
          std::find(class_order.begin(), class_order.end(), e.class_name);
      if (pos == class_order.end()) {
        class_order.push_back(e.class_name);
        pos = class_order.end() - 1;
      }
      truth_labels.push_back(
          static_cast<std::size_t>(pos - class_order.begin()));
    }
    pwclust::PartitionComparison cmp =
        pwclust::compare_partitions(result.assignment, truth_labels);
    cell.exact = cmp.exact_match;
    cell.pair_accuracy = cmp.pair_accuracy;
  });

  std::string table =
      "n\tseed\tdelta_same_median\tdelta_cross_median\texact_match\tpair_"
      "accuracy\n";
  for (const Cell& cell : cells) {
    table += std::to_string(cell.n) + "\t" + std::to_string(cell.seed) + "\t" +
             pwclust::format_double(cell.delta_same) + "\t" +
             pwclust::format_double(cell.delta_cross) + "\t" +
             (cell.exact ? "1" : "0") + "\t" +
             pwclust::format_double(cell.pair_accuracy) + "\n";
  }
  pwclust::write_file_atomic(args.out, table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering of piecewise stationary time series by "
               "distributional distance"};
  app.set_version_flag("--version", pwclust::kVersion);
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate synthetic samples plus a ground-truth sidecar");
  generate->add_option("--spec", gen.spec_path, "Generator spec (JSON)")
      ->required();
  generate->add_option("--n", gen.n, "Length scale")->required();
  generate->add_option("--seed", gen.seed, "Base seed")->required();
  generate->add_option("--out", gen.out_path, "Output sample file")
      ->required();
  generate->add_option("--truth", gen.truth_path,
                       "Truth sidecar path (default: <out>.truth.json)");

  ChangepointArgs cp;
  CLI::App* changepoints = app.add_subcommand(
      "changepoints", "Candidate change points per sample");
  changepoints->add_option("--input", cp.input, "Sample file")->required();
  changepoints->add_option("--lambda", cp.lambda, "Minimum segment fraction")
      ->required();
  changepoints->add_option("--out", cp.out, "Report path")->required();

  DeltaArgs del;
  CLI::App* delta = app.add_subcommand(
      "delta", "Distance estimate between two samples");
  delta->add_option("--input", del.input, "Sample file")->required();
  delta->add_option("--pair", del.pair, "Two sample ids, comma separated")
      ->required();
  delta->add_option("--lambda", del.lambda, "Minimum segment fraction")
      ->required();

  ClusterArgs cl;
  CLI::App* cluster = app.add_subcommand("cluster", "Cluster a sample file");
  cluster->add_option("--input", cl.input, "Sample file")->required();
  cluster->add_option("--m", cl.m, "Number of clusters")->required();
  cluster->add_option("--lambda", cl.lambda, "Minimum segment fraction")
      ->required();
  cluster->add_option("--out", cl.out, "Report path")->required();

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Compare a cluster report against ground truth");
  evaluate->add_option("--report", ev.report, "Cluster report")->required();
  evaluate->add_option("--truth", ev.truth, "Truth sidecar")->required();

  ExperimentArgs ex;
  CLI::App* experiment = app.add_subcommand(
      "experiment", "Seeded convergence sweep over n; emits a TSV table");
  experiment->add_option("--config", ex.config, "Experiment config (JSON)")
      ->required();
  experiment->add_option("--out", ex.out, "Output table path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (changepoints->parsed()) return cmd_changepoints(cp);
    if (delta->parsed()) return cmd_delta(del);
    if (cluster->parsed()) return cmd_cluster(cl);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (experiment->parsed()) return cmd_experiment(ex);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
