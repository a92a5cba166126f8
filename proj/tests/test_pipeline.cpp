#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "vergm/pipeline.hpp"

using namespace vergm;
namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
  atomic_write_file(path, content);
}

/// 50-node synthetic data set with independent Poisson flows, written in the
/// CLI's CSV schema together with a model and scenario configuration.
struct SyntheticData {
  fs::path dir;
  fs::path nodes_csv, edges_csv, model_json, scenarios_json;
};

SyntheticData make_synthetic_data(const std::string& name, int n = 50,
                                  std::uint64_t seed = 20260810) {
  SyntheticData data;
  data.dir = ts::scratch_dir(name);
  const auto nodes = ts::make_nodes(n, seed);

  // independent flows from a gravity-flavored rate
  Rng rng(seed + 1);
  CountNetwork net(n);
  const auto& pd = nodes.numeric("p_democrat");
  for (NodeIndex i = 0; i < n; ++i)
    for (NodeIndex j = 0; j < n; ++j) {
      if (i == j) continue;
      const double eta = -0.6 + 0.5 * pd[static_cast<std::size_t>(i)] -
                         0.8 * std::abs(pd[static_cast<std::size_t>(i)] -
                                        pd[static_cast<std::size_t>(j)]);
      const double rate = std::exp(eta);
      double u = uniform01(rng), cum = 0;
      Count k = 0;
      for (; k < 1000; ++k) {
        cum += std::exp(static_cast<double>(k) * std::log(rate) - rate -
                        std::lgamma(static_cast<double>(k) + 1));
        if (u < cum) break;
      }
      if (k > 0) net.set_edge(i, j, k);
    }

  data.nodes_csv = data.dir / "nodes.csv";
  data.edges_csv = data.dir / "edges.csv";
  ts::write_nodes_csv(data.nodes_csv, nodes);
  ts::write_edges_csv(data.edges_csv, net, nodes);

  data.model_json = data.dir / "model.json";
  write_file(data.model_json, R"({"terms": [
    {"kind": "sum"},
    {"kind": "origin", "covariate": "p_democrat", "group": "political"},
    {"kind": "dissimilarity", "covariate": "p_democrat", "group": "political"},
    {"kind": "sign_direction", "covariate": "p_democrat", "group": "political"}
  ]})");

  data.scenarios_json = data.dir / "scenarios.json";
  write_file(data.scenarios_json, R"({
    "group_by": "state",
    "focal_group": "A",
    "scenarios": [
      {"name": "full_model", "actions": []},
      {"name": "remove_political", "actions":
        [{"scope": "node", "covariate": "p_democrat", "rule": "population_weighted_mean"}]}
    ]})");
  return data;
}

}  // namespace

TEST_CASE("validate: out-of-range share cites the row and column") {
  const auto dir = ts::scratch_dir("validate_share");
  write_file(dir / "nodes.csv",
             "node_id,lat,lon,population,state,region,p_democrat\n"
             "A,10,10,100,S1,R1,0.5\n"
             "B,11,11,100,S1,R1,1.3\n");
  write_file(dir / "edges.csv", "origin,dest,count\nA,B,2\n");
  const auto loaded = load_inputs(dir / "edges.csv", dir / "nodes.csv", false);
  REQUIRE(loaded.report.issues.size() == 1);
  const auto& issue = loaded.report.issues[0];
  CHECK(issue.code == IssueCode::OutOfRangeShare);
  CHECK(issue.line == 3);
  CHECK(issue.column == "p_democrat");
}

TEST_CASE("validate: unknown edge endpoint is a referential-integrity error") {
  const auto dir = ts::scratch_dir("validate_unknown");
  write_file(dir / "nodes.csv",
             "node_id,lat,lon,population,state,region\nA,10,10,100,S1,R1\nB,11,11,100,S1,R1\n");
  write_file(dir / "edges.csv", "origin,dest,count\nA,99999,2\n");
  const auto loaded = load_inputs(dir / "edges.csv", dir / "nodes.csv", false);
  REQUIRE(loaded.report.issues.size() == 1);
  CHECK(loaded.report.issues[0].code == IssueCode::UnknownId);
}

TEST_CASE("validate: clean fixture reports counts and zero violations") {
  const auto dir = ts::scratch_dir("validate_clean");
  write_file(dir / "nodes.csv",
             "node_id,lat,lon,population,state,region,p_democrat\n"
             "A,10,10,100,S1,R1,0.5\n"
             "B,11,11,200,S2,R1,0.25\n"
             "C,12,12,300,S2,R1,0.75\n");
  write_file(dir / "edges.csv", "origin,dest,count\nA,B,2\nB,C,0\nC,A,7\n");
  const auto loaded = load_inputs(dir / "edges.csv", dir / "nodes.csv");
  CHECK(loaded.report.ok());
  CHECK(loaded.report.n_nodes == 3);
  CHECK(loaded.report.n_edges == 2);  // the zero-count row stores nothing
  CHECK(loaded.report.total_count == 9);
  CHECK(loaded.report.covariates == std::vector<std::string>{"p_democrat"});
}

TEST_CASE("validate: violation classes are distinctly coded") {
  const auto dir = ts::scratch_dir("validate_codes");
  write_file(dir / "nodes.csv",
             "node_id,lat,lon,population,state,region\nA,10,10,100,S1,R1\nB,11,11,100,S1,R1\n");
  write_file(dir / "edges.csv",
             "origin,dest,count\n"
             "A,B,2\n"
             "A,B,3\n"      // duplicate dyad
             "A,A,1\n"      // self-loop
             "A,B,2.5\n"    // non-integer count
             "B,A,-1\n");   // negative count
  const auto loaded = load_inputs(dir / "edges.csv", dir / "nodes.csv", false);
  std::vector<IssueCode> codes;
  for (const auto& issue : loaded.report.issues) codes.push_back(issue.code);
  CHECK(std::count(codes.begin(), codes.end(), IssueCode::DuplicateDyad) == 1);
  CHECK(std::count(codes.begin(), codes.end(), IssueCode::SelfLoop) == 1);
  CHECK(std::count(codes.begin(), codes.end(), IssueCode::NonIntegerCount) == 1);
  CHECK(std::count(codes.begin(), codes.end(), IssueCode::NegativeCount) == 1);
}

TEST_CASE("validate: missing required column") {
  const auto dir = ts::scratch_dir("validate_missing_col");
  write_file(dir / "nodes.csv", "node_id,lat,lon,population,state\nA,1,1,10,S1\n");
  write_file(dir / "edges.csv", "origin,dest,count\n");
  const auto loaded = load_inputs(dir / "edges.csv", dir / "nodes.csv", false);
  REQUIRE_FALSE(loaded.report.ok());
  CHECK(loaded.report.issues[0].code == IssueCode::MissingColumn);
  CHECK(loaded.report.issues[0].column == "region");
}

TEST_CASE("metrics subcommand: three-node fixture matches hand computation") {
  const auto dir = ts::scratch_dir("metrics_fixture");
  write_file(dir / "nodes.csv",
             "node_id,lat,lon,population,state,region\n"
             "A,10,10,1000,S1,R1\n"
             "B,11,11,500,S2,R1\n"
             "C,12,12,250,S3,R1\n");
  write_file(dir / "edges.csv", "origin,dest,count\nA,B,6\nB,A,2\nB,C,1\n");

  RunConfig config;
  config.subcommand = "metrics";
  config.edges_path = (dir / "edges.csv").string();
  config.nodes_path = (dir / "nodes.csv").string();
  config.out_dir = (dir / "out").string();
  const auto result = run_pipeline(config);
  REQUIRE(result.exit_code == 0);

  const auto table = read_csv(dir / "out" / "metrics.csv");
  REQUIRE(table.rows.size() == 3);
  // S1: in 2, out 6, net -4, rate -0.004, mii -0.5
  CHECK(table.cell(0, table.column("group")) == "S1");
  CHECK(table.cell(0, table.column("in_migrants")) == "2");
  CHECK(table.cell(0, table.column("out_migrants")) == "6");
  CHECK(table.cell(0, table.column("net_count")) == "-4");
  CHECK(table.cell(0, table.column("net_rate")) == "-0.004");
  CHECK(table.cell(0, table.column("mii")) == "-0.5");
  // scalars live in the comment header
  bool found_scalars = false;
  for (const auto& comment : table.comments)
    found_scalars |= comment.find("total_migrants=9") != std::string::npos &&
                     comment.find("dyad_asymmetry=5") != std::string::npos &&
                     comment.find("node_asymmetry=4") != std::string::npos;
  CHECK(found_scalars);
}

TEST_CASE("pipeline: fit, simulate, knockout, ffgrid, metrics end-to-end") {
  const auto data = make_synthetic_data("end_to_end");
  const fs::path out = data.dir / "run1";

  RunConfig fit_config;
  fit_config.subcommand = "fit";
  fit_config.edges_path = data.edges_csv.string();
  fit_config.nodes_path = data.nodes_csv.string();
  fit_config.model_path = data.model_json.string();
  fit_config.out_dir = (out / "fit").string();
  fit_config.seed = 11;
  REQUIRE(run_pipeline(fit_config).exit_code == 0);
  REQUIRE(fs::exists(out / "fit" / "fit.csv"));
  REQUIRE(fs::exists(out / "fit" / "fit_log.csv"));
  REQUIRE(fs::exists(out / "fit" / "manifest.json"));

  // recovered coefficients should be near the generator's values
  const ModelSpec fitted = load_fit_file(out / "fit" / "fit.csv");
  REQUIRE(fitted.terms.size() == 4);
  CHECK_THAT(*fitted.terms[0].coefficient, Catch::Matchers::WithinAbs(-0.6, 0.15));
  CHECK_THAT(*fitted.terms[1].coefficient, Catch::Matchers::WithinAbs(0.5, 0.25));
  CHECK_THAT(*fitted.terms[2].coefficient, Catch::Matchers::WithinAbs(-0.8, 0.25));

  RunConfig sim_config;
  sim_config.subcommand = "simulate";
  sim_config.edges_path = data.edges_csv.string();
  sim_config.nodes_path = data.nodes_csv.string();
  sim_config.fit_path = (out / "fit" / "fit.csv").string();
  sim_config.out_dir = (out / "sim").string();
  sim_config.samples = 3;
  sim_config.burn_in = 10;
  sim_config.thin = 2;
  sim_config.seed = 22;
  REQUIRE(run_pipeline(sim_config).exit_code == 0);
  REQUIRE(fs::exists(out / "sim" / "trace.csv"));
  REQUIRE(fs::exists(out / "sim" / "sample_002.csv"));

  // simulated edge lists parse and feed back into metrics
  RunConfig metrics_config;
  metrics_config.subcommand = "metrics";
  metrics_config.edges_path = (out / "sim" / "sample_000.csv").string();
  metrics_config.nodes_path = data.nodes_csv.string();
  metrics_config.out_dir = (out / "metrics").string();
  metrics_config.focal_group = "A";
  REQUIRE(run_pipeline(metrics_config).exit_code == 0);
  REQUIRE(fs::exists(out / "metrics" / "metrics.csv"));
  REQUIRE(fs::exists(out / "metrics" / "quantiles.csv"));

  RunConfig knockout_config;
  knockout_config.subcommand = "knockout";
  knockout_config.edges_path = data.edges_csv.string();
  knockout_config.nodes_path = data.nodes_csv.string();
  knockout_config.fit_path = (out / "fit" / "fit.csv").string();
  knockout_config.scenarios_path = data.scenarios_json.string();
  knockout_config.out_dir = (out / "knockout").string();
  knockout_config.samples = 2;
  knockout_config.burn_in = 5;
  knockout_config.thin = 1;
  knockout_config.seed = 33;
  REQUIRE(run_pipeline(knockout_config).exit_code == 0);
  const auto summary = read_csv(out / "knockout" / "knockout_summary.csv");
  REQUIRE(summary.rows.size() == 6);  // 2 scenarios x 3 metrics
  for (std::size_t r = 0; r < summary.rows.size(); ++r)
    if (summary.cell(r, summary.column("scenario")) == "full_model")
      CHECK(summary.cell(r, summary.column("rank_change")) == "0");

  RunConfig ffgrid_config;
  ffgrid_config.subcommand = "ffgrid";
  ffgrid_config.nodes_path = data.nodes_csv.string();
  ffgrid_config.fit_path = (out / "fit" / "fit.csv").string();
  ffgrid_config.ffgrid_group = "political";
  ffgrid_config.out_dir = (out / "ffgrid").string();
  ffgrid_config.grid_resolution = 21;
  ffgrid_config.focal_value = 0.4;
  REQUIRE(run_pipeline(ffgrid_config).exit_code == 0);
  REQUIRE(fs::exists(out / "ffgrid" / "ffgrid_political_total.csv"));
  REQUIRE(fs::exists(out / "ffgrid" / "focal_political.csv"));
  const auto total = read_csv(out / "ffgrid" / "ffgrid_political_total.csv");
  CHECK(total.rows.size() == 21 * 21);
}

TEST_CASE("pipeline: identical config and seed reproduce artifacts byte-for-byte") {
  const auto data = make_synthetic_data("determinism", 20, 555);

  // a re-run references the same input paths; the shared fit file is
  // byte-identical between runs (checked below) so overwriting is a no-op
  const fs::path shared_fit = data.dir / "fit_shared.csv";

  auto run_all = [&](const std::string& tag) {
    const fs::path out = data.dir / tag;
    RunConfig fit_config;
    fit_config.subcommand = "fit";
    fit_config.edges_path = data.edges_csv.string();
    fit_config.nodes_path = data.nodes_csv.string();
    fit_config.model_path = data.model_json.string();
    fit_config.out_dir = (out / "fit").string();
    fit_config.seed = 7;
    fit_config.workers = tag == "a" ? 1 : 4;  // worker count must not matter
    REQUIRE(run_pipeline(fit_config).exit_code == 0);
    fs::copy_file(out / "fit" / "fit.csv", shared_fit, fs::copy_options::overwrite_existing);

    RunConfig sim_config;
    sim_config.subcommand = "simulate";
    sim_config.edges_path = data.edges_csv.string();
    sim_config.nodes_path = data.nodes_csv.string();
    sim_config.fit_path = shared_fit.string();
    sim_config.out_dir = (out / "sim").string();
    sim_config.samples = 2;
    sim_config.burn_in = 5;
    sim_config.thin = 1;
    sim_config.seed = 7;
    REQUIRE(run_pipeline(sim_config).exit_code == 0);

    RunConfig ko_config;
    ko_config.subcommand = "knockout";
    ko_config.edges_path = data.edges_csv.string();
    ko_config.nodes_path = data.nodes_csv.string();
    ko_config.fit_path = shared_fit.string();
    ko_config.scenarios_path = data.scenarios_json.string();
    ko_config.out_dir = (out / "knockout").string();
    ko_config.samples = 2;
    ko_config.burn_in = 3;
    ko_config.thin = 1;
    ko_config.seed = 7;
    ko_config.workers = tag == "a" ? 2 : 1;
    REQUIRE(run_pipeline(ko_config).exit_code == 0);
    return out;
  };

  const auto a = run_all("a");
  const auto b = run_all("b");
  for (const auto* artifact :
       {"fit/fit.csv", "fit/fit_log.csv", "sim/trace.csv", "sim/sample_000.csv",
        "sim/sample_001.csv", "knockout/knockout_summary.csv", "knockout/knockout_samples.csv"}) {
    INFO(artifact);
    CHECK(slurp(a / artifact) == slurp(b / artifact));
  }
  // the stamp comment embeds the seed and config digest
  const auto stamp = slurp(a / "fit" / "fit.csv");
  CHECK(stamp.find("seed=7") != std::string::npos);
  CHECK(stamp.find("config=") != std::string::npos);
}

TEST_CASE("pipeline: validation failure yields a nonzero exit and error record") {
  const auto dir = ts::scratch_dir("pipeline_invalid");
  write_file(dir / "nodes.csv",
             "node_id,lat,lon,population,state,region\nA,10,10,100,S1,R1\nB,11,11,100,S1,R1\n");
  write_file(dir / "edges.csv", "origin,dest,count\nA,Z,1\n");
  RunConfig config;
  config.subcommand = "metrics";
  config.edges_path = (dir / "edges.csv").string();
  config.nodes_path = (dir / "nodes.csv").string();
  config.out_dir = (dir / "out").string();
  const auto result = run_pipeline(config);
  CHECK(result.exit_code == 1);
  CHECK(result.error.find("unknown_id") != std::string::npos);
}

TEST_CASE("model config: parse errors are informative") {
  const auto dir = ts::scratch_dir("model_config");
  write_file(dir / "bad_kind.json", R"({"terms": [{"kind": "sparkle"}]})");
  CHECK_THROWS_WITH(load_model_spec(dir / "bad_kind.json"),
                    Catch::Matchers::ContainsSubstring("unknown term kind"));
  write_file(dir / "no_cov.json", R"({"terms": [{"kind": "origin"}]})");
  CHECK_THROWS_WITH(load_model_spec(dir / "no_cov.json"),
                    Catch::Matchers::ContainsSubstring("requires a covariate"));
  write_file(dir / "dup.json",
             R"({"terms": [{"kind": "sum"}, {"kind": "sum"}]})");
  CHECK_THROWS_WITH(load_model_spec(dir / "dup.json"),
                    Catch::Matchers::ContainsSubstring("duplicate term"));
}

TEST_CASE("fit file round-trip preserves terms and coefficients") {
  ModelSpec spec;
  spec.terms = {{.kind = TermKind::Sum},
                {.kind = TermKind::MutualityMin},
                {.kind = TermKind::Origin, .covariate = "p_democrat", .group = "political"},
                {.kind = TermKind::RegionFixedEffect, .level = "West",
                 .role = EndpointRole::Destination}};
  FitResult fit;
  fit.theta = {-1.25, 0.047, 0.024, 0.384};
  fit.std_err = {0.04, 0.002, 0.009, 0.004};
  fit.converged = true;
  const std::string csv = fit_result_csv(spec, fit, {"seed=1 config=feedface tool=vergm 0.1.0"});

  const auto dir = ts::scratch_dir("fit_roundtrip");
  write_file(dir / "fit.csv", csv);
  const ModelSpec loaded = load_fit_file(dir / "fit.csv");
  REQUIRE(loaded.terms.size() == spec.terms.size());
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    CHECK(loaded.terms[t].name() == spec.terms[t].name());
    CHECK(*loaded.terms[t].coefficient == fit.theta[t]);
  }
}
