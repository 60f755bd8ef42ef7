#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "opstat/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
  json j() const { return json::parse(out); }
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "opstat");
  std::ostringstream out, err;
  const int code = opstat::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("opstat_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }

  fs::path dir_;
};

void expect_usage_error(const Outcome& r) {
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  ASSERT_FALSE(r.err.empty());
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  EXPECT_TRUE(json::parse(r.err).contains("error"));
}

const char* kGistParams = R"({"iota_t":0,"sigma_t":1,"nu_r":0,"sigma_r":1})";
const char* kMixedParams = R"({"iota_t":0.6,"sigma_t":0.5,"nu_r":0.4,"sigma_r":0.5})";

}  // namespace

TEST_F(Cli, DemoInterferenceGistOnly) {
  const auto r = run({"demo", "interference", "--params", kGistParams});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = r.j();
  EXPECT_EQ(j["sums"]["sum_T"], 2.0);
  EXPECT_EQ(j["sums"]["sum_R"], 2.0);
  EXPECT_EQ(j["sums"]["sum_U"], 1.0);
  EXPECT_FALSE(j["consistent"].get<bool>());
  ASSERT_EQ(j["violations"].size(), 2u);
  EXPECT_EQ(j["violations"][0]["op_index"], 0);
  EXPECT_EQ(j["violations"][0]["excess"], 1.0);
  EXPECT_EQ(j["manual"]["operations"].size(), 12u);
}

TEST_F(Cli, DemoInterferenceVerbatimIsConsistent) {
  const auto r = run({"demo", "interference", "--params", R"({"iota_t":1,"sigma_t":0.3,"nu_r":1,"sigma_r":0.8})"});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.j()["consistent"].get<bool>());
  EXPECT_TRUE(r.j()["violations"].empty());
}

TEST_F(Cli, FttPredictJsonAndCsv) {
  auto r = run({"ftt", "predict", "--params", kGistParams});
  ASSERT_EQ(r.code, 0);
  const json p = r.j()["predictions"];
  EXPECT_EQ(p["T|T"], 1.0);
  EXPECT_EQ(p["R|T"], 1.0);
  EXPECT_EQ(p["U|T"], 0.0);
  EXPECT_EQ(p["U|U"], 1.0);

  r = run({"ftt", "predict", "--params", kMixedParams, "--format", "csv"});
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "discrimination,probe_type,probability");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 9);
}

TEST_F(Cli, FttSumsTruInterference) {
  auto r = run({"ftt", "sums", "--params", kMixedParams});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(r.j()["sum_T"].get<double>(), 1.2, 1e-15);
  EXPECT_NEAR(r.j()["sum_R"].get<double>(), 1.3, 1e-15);

  r = run({"ftt", "interference", "--params", kGistParams});
  EXPECT_EQ(r.j()["excess_T"], 1.0);

  r = run({"ftt", "tru", "--params", kGistParams});
  EXPECT_EQ(r.j()["T"], json::array({0.0, 1.0, 0.0}));
  r = run({"ftt", "tru", "--params", kGistParams, "--split", "0.5"});
  EXPECT_EQ(r.j()["T"], json::array({0.5, 0.5, 0.0}));
}

TEST_F(Cli, FttCanonicalColumns) {
  const auto r = run({"ftt", "canonical"});
  ASSERT_EQ(r.code, 0);
  const json j = r.j();
  EXPECT_EQ(j["omega_p"]["weights"]["T_T"], 1.0);
  EXPECT_EQ(j["omega_p"]["weights"]["R_T"], 0.0);
  EXPECT_EQ(j["omega_0"]["weights"]["U_T"], 1.0);
  EXPECT_EQ(j["omega_g"]["weights"]["R_T"], 1.0);
  EXPECT_EQ(j["omega_g"]["weights"]["U_U"], 1.0);
}

TEST_F(Cli, SuperpositionFromCanonicalDocuments) {
  const auto p = write("p.json", run({"ftt", "canonical", "--state", "p"}).out);
  const auto z = write("0.json", run({"ftt", "canonical", "--state", "0"}).out);
  const auto g = write("g.json", run({"ftt", "canonical", "--state", "g"}).out);
  const auto r = run({"weights", "superposition", p, "--generator", z, "--generator", g});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.j()["superposition"].get<bool>());
  EXPECT_EQ(r.j()["common_zero_set"], json::array({"R_U", "T_U", "U'_U"}));
  EXPECT_FALSE(run({"weights", "superposition", p, "--generator", z}).j()["superposition"].get<bool>());
}

TEST_F(Cli, PredictOutputFeedsWeightCommands) {
  const auto doc = write("pred.json", run({"ftt", "predict", "--params", kMixedParams}).out);
  EXPECT_EQ(run({"weights", "check", doc}).code, 0);
  const auto r = run({"weights", "event-prob", doc, "--event", "T_T"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.j()["probability"].get<double>(), 0.8, 1e-15);
  EXPECT_EQ(run({"weights", "event-prob", doc, "--event", ""}).j()["probability"], 0.0);
  EXPECT_EQ(run({"weights", "event-prob", doc, "--event", "T_T,R_T"}).code, 1);
}

TEST_F(Cli, WeightsCheckReportsViolation) {
  const auto g = run({"ftt", "canonical", "--state", "g"}).j();
  json on_combined = {{"manual", run({"demo", "interference", "--params", kGistParams}).j()["manual"]},
                      {"weights", g["weights"]}};
  const auto r = run({"weights", "check", write("bad.json", on_combined.dump())});
  EXPECT_EQ(r.code, 1);
  const json j = r.j();
  EXPECT_FALSE(j["valid"].get<bool>());
  EXPECT_EQ(j["first"]["error"], "OperationSumViolation");
  EXPECT_EQ(j["first"]["op_index"], 0);
  EXPECT_EQ(j["first"]["sum"], 2.0);
}

TEST_F(Cli, ManualValidate) {
  auto r = run({"manual", "validate", write("m.json", R"({"operations": [["a","b"],["b","c"]]})")});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.j()["valid"].get<bool>());
  EXPECT_TRUE(r.j()["weight_space_dof"].is_null());

  r = run({"manual", "validate", write("sub.json", R"({"operations": [["a","b","c"],["a","b"]]})")});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.j()["valid"].get<bool>());
  EXPECT_EQ(r.j()["error"], "RedundantOperation");

  r = run({"manual", "validate", write("empty.json", R"({"operations": [[]]})")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.j()["error"], "EmptyOperation");
}

TEST_F(Cli, ManualLogicCoarsenIdentify) {
  const auto tri = write("tri.json", R"({"operations": [["x","y","z"]]})");
  auto r = run({"manual", "logic", tri});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.j()["element_count"], 8);
  EXPECT_EQ(r.j()["atom_count"], 3);
  EXPECT_TRUE(r.j()["orthomodular"]["holds"].get<bool>());

  EXPECT_EQ(run({"manual", "logic", tri, "--event-cap", "3"}).code, 1);

  r = run({"manual", "coarsen", tri, "--op", "0", "--pack", "y,z", "--new-id", "w"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.j()["operations"], json::parse(R"([["x","w"]])"));

  const auto two = write("two.json", R"({"operations": [["a","b"],["c","d"]]})");
  r = run({"manual", "identify", two, "--map", write("map.json", R"({"identify": {"c": "a"}})")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.j()["operations"].size(), 2u);
}

TEST_F(Cli, SpinPipelineRecoversDensity) {
  const auto frames = write("frames.json", run({"spin", "frames", "--seed", "5", "--count", "6"}).out);
  const auto density = write("rho.json", run({"spin", "density", "--seed", "6"}).out);
  const auto w = run({"spin", "weights", "--density", density, "--frames", frames});
  ASSERT_EQ(w.code, 0) << w.err;
  ASSERT_EQ(w.j()["weights"].size(), 6u);
  const auto fit = run({"spin", "fit-density", "--frames", frames, "--weights", write("w.json", w.out)});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const auto rho = opstat::io::matrix_from_json(fit.j()["rho"]);
  const auto truth = opstat::io::matrix_from_json(json::parse(std::ifstream(density)));
  EXPECT_LT(opstat::spin::max_abs_diff(rho, truth), 1e-6);
  EXPECT_LE(fit.j()["residual"].get<double>(), 1e-10);
}

TEST_F(Cli, SpinMergeAndUnderdetermined) {
  const auto frames = write("frames.json", run({"spin", "frames", "--seed", "1", "--count", "1"}).out);
  const auto density = write("rho.json", run({"spin", "density", "--seed", "2"}).out);
  const auto fine = run({"spin", "weights", "--density", density, "--frames", frames}).j()["weights"][0];
  const auto coarse = run({"spin", "weights", "--density", density, "--frames", frames, "--merge", "1,2"});
  ASSERT_EQ(coarse.code, 0) << coarse.err;
  const auto c = coarse.j()["weights"][0];
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[1].get<double>(), fine[1].get<double>() + fine[2].get<double>(), 1e-12);

  const auto w = write("w.json", run({"spin", "weights", "--density", density, "--frames", frames}).out);
  const auto r = run({"spin", "fit-density", "--frames", frames, "--weights", w});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.j()["error"], "Underdetermined");
  EXPECT_EQ(r.j()["null_space_dimension"], 6);
}

TEST_F(Cli, DemoSpinAdditivity) {
  const auto r = run({"demo", "spin-additivity", "--seed", "3", "--trials", "200"});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.j()["additive"].get<bool>());
  EXPECT_LE(r.j()["max_merge_error"].get<double>(), 1e-10);
  EXPECT_EQ(r.out, run({"demo", "spin-additivity", "--seed", "3", "--trials", "200"}).out);
}

TEST_F(Cli, EstimationPipeline) {
  const auto sim = run({"est", "simulate", "--params", kMixedParams, "--n", "100000", "--seed", "11"});
  ASSERT_EQ(sim.code, 0) << sim.err;
  EXPECT_EQ(sim.out.rfind("discrimination,probe_type,yes,total\n", 0), 0u);
  EXPECT_EQ(sim.out, run({"est", "simulate", "--params", kMixedParams, "--n", "100000", "--seed", "11"}).out);
  EXPECT_NE(sim.out, run({"est", "simulate", "--params", kMixedParams, "--n", "100000", "--seed", "12"}).out);

  const auto counts = write("counts.csv", sim.out);
  const auto fit = run({"est", "fit", counts});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const json p = fit.j()["params"];
  EXPECT_NEAR(p["iota_t"].get<double>(), 0.6, 0.01);
  EXPECT_NEAR(p["sigma_t"].get<double>(), 0.5, 0.01);
  EXPECT_NEAR(p["nu_r"].get<double>(), 0.4, 0.01);
  EXPECT_NEAR(p["sigma_r"].get<double>(), 0.5, 0.01);
  EXPECT_TRUE(fit.j()["converged"].get<bool>());

  const auto gof = run({"est", "gof", counts, "--fit", write("fit.json", fit.out)});
  ASSERT_EQ(gof.code, 0) << gof.err;
  EXPECT_EQ(gof.j()["dof"], 2);
  EXPECT_EQ(gof.j()["cells"].size(), 9u);
  EXPECT_EQ(gof.out, run({"est", "gof", counts}).out);

  const auto moment = run({"est", "moment", counts});
  ASSERT_EQ(moment.code, 0);
  EXPECT_NEAR(moment.j()["params"]["iota_t"].get<double>(), 0.6, 0.01);

  const auto seven = run({"est", "fit", counts, "--model", "7"});
  ASSERT_EQ(seven.code, 0) << seven.err;
  EXPECT_TRUE(seven.j().contains("bias"));

  const auto sim_json = run({"est", "simulate", "--params", kMixedParams, "--n", "10", "--seed", "1", "--format", "json"});
  EXPECT_EQ(sim_json.j()["seed"], 1);
  EXPECT_EQ(sim_json.j()["counts"].size(), 9u);
}

TEST_F(Cli, InfeasibleFitIsDomainError) {
  const auto counts = write("c.csv",
                            "discrimination,probe_type,yes,total\n"
                            "T,T,50,100\nR,T,20,100\nU,T,30,100\nT,R,20,100\nR,R,50,100\nU,R,30,100\n"
                            "T,U,30,100\nR,U,0,100\nU,U,100,100\n");
  const auto r = run({"est", "fit", counts});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.j()["feasible"].get<bool>());
  EXPECT_TRUE(r.j()["log_likelihood"].is_null());
}

TEST_F(Cli, UsageErrors) {
  expect_usage_error(run({}));
  expect_usage_error(run({"bogus"}));
  expect_usage_error(run({"ftt", "predict", "--params", kGistParams, "--nope"}));
  expect_usage_error(run({"spin", "frames", "--count", "2"}));
  expect_usage_error(run({"ftt", "predict", "--params", "{\"iota_t\": "}));
  expect_usage_error(run({"manual", "validate", (dir_ / "missing.json").string()}));
  expect_usage_error(run({"manual", "validate", write("bad.json", "{not json")}));
  expect_usage_error(run({"est", "fit", write("bad.csv", "a,b\n1,2\n")}));
  expect_usage_error(run({"ftt", "predict", "--params", kGistParams, "--format", "xml"}));
}

TEST_F(Cli, DomainErrorsFromParameters) {
  const auto r = run({"ftt", "predict", "--params", R"({"iota_t":1.5,"sigma_t":0,"nu_r":0,"sigma_r":0})"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.j()["error"], "ParamOutOfRange");
  EXPECT_EQ(json::parse(r.err)["error"], "ParamOutOfRange");
}

TEST_F(Cli, HelpAndVersion) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("manual"), std::string::npos);
  r = run({"est", "fit", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--max-iter"), std::string::npos);
  r = run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1.0.0"), std::string::npos);
}

TEST_F(Cli, ParamsFromFile) {
  const auto path = write("params.json", kGistParams);
  EXPECT_EQ(run({"ftt", "sums", "--params", path}).out, run({"ftt", "sums", "--params", kGistParams}).out);
}
