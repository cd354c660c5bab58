#include <gtest/gtest.h>

#include "blmchain/blmchain.hpp"
#include "helpers.hpp"

using namespace blmchain;
using testing_support::RunResult;

RunResult run_cli(const std::vector<std::string>& args) { return testing_support::cli(args); }

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) { return read_file(p.string()); }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

fs::path write_config(const fs::path& dir, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j{
      {"miners", 3},
      {"seed", 5},
      {"blocks", 6},
      {"speed", 2e4},
      {"problem", {{"kind", "tsp"}, {"cities", 9}, {"instance_seed", 3}, {"t", 3}}},
      {"difficulty", {{"k_min", 4}, {"k_max", 8}}},
  };
  j.update(extra);
  const auto path = dir / "config.json";
  write_file(path.string(), j.dump(2));
  return path;
}

}  // namespace

TEST(GenTsp, DeterministicFile) {
  const auto dir = testing_support::scratch_dir("gen");
  const auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
  ASSERT_EQ(run_cli({"gen-tsp", "--n", "25", "--seed", "7", "--out", a}).code, 0);
  ASSERT_EQ(run_cli({"gen-tsp", "--n", "25", "--seed", "7", "--out", b}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(GenTsp, TenCitiesRoundTrip) {
  const auto dir = testing_support::scratch_dir("gen10");
  const auto path = (dir / "i.json").string();
  const auto r = run_cli({"gen-tsp", "--n", "10", "--seed", "1", "--out", path});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("10 cities"), std::string::npos);
  const auto inst = tsp::instance_from_json(nlohmann::json::parse(slurp(path)));
  EXPECT_EQ(inst.size(), 10u);
}

TEST(GenTsp, TooFewCitiesIsUsageError) {
  const auto dir = testing_support::scratch_dir("gen1");
  EXPECT_EQ(run_cli({"gen-tsp", "--n", "1", "--out", (dir / "x.json").string()}).code, 2);
}

TEST(SolveExact, UnitSquare) {
  const auto dir = testing_support::scratch_dir("square");
  const auto path = (dir / "sq.json").string();
  write_file(path, tsp::instance_to_json(testing_support::unit_square()).dump());
  const auto r = run_cli({"solve-exact", path});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "4.000000\n0 1 2 3 0\n");
}

TEST(SolveExact, OverCapIsUsageError) {
  const auto dir = testing_support::scratch_dir("big");
  const auto path = (dir / "i.json").string();
  ASSERT_EQ(run_cli({"gen-tsp", "--n", "20", "--out", path}).code, 0);
  const auto r = run_cli({"solve-exact", path});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(SolveExact, TwelveCitiesMatchBruteForce) {
  const auto dir = testing_support::scratch_dir("twelve");
  const auto path = (dir / "i.json").string();
  ASSERT_EQ(run_cli({"gen-tsp", "--n", "12", "--seed", "4", "--out", path}).code, 0);
  const auto r = run_cli({"solve-exact", path});
  ASSERT_EQ(r.code, 0);
  const auto inst = tsp::instance_from_json(nlohmann::json::parse(slurp(path)));
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), format_fixed(tsp::brute_force_tsp(inst).length, 6));
}

TEST(Mine, TspProofValidates) {
  const auto dir = testing_support::scratch_dir("mine");
  const auto path = (dir / "i.json").string();
  ASSERT_EQ(run_cli({"gen-tsp", "--n", "12", "--seed", "2", "--out", path}).code, 0);
  const auto r = run_cli({"mine", "--instance", path, "--k", "6", "--t", "3", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("validation accept (exhaustive)"), std::string::npos) << r.out;
  EXPECT_EQ(r.out, run_cli({"mine", "--instance", path, "--k", "6", "--t", "3", "--seed", "9"}).out);
}

TEST(Mine, ContinuousDemo) {
  const auto r = run_cli({"mine", "--objective", "demo", "--k", "1", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("validation accept"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli({"mine", "--objective", "demo", "--k", "2"}).code, 2);  // K above dimension
}

TEST(Simulate, WritesArtifactsAndValidates) {
  const auto dir = testing_support::scratch_dir("sim");
  const auto config = write_config(dir);
  const auto out = dir / "run";
  const auto r = run_cli({"simulate", "--config", config.string(), "--out", out.string(), "--exact"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gap_pct"), std::string::npos);
  const auto csv = slurp(out / "results.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "height,miner_id,k,block_time_s,pow_value,chain_best");
  EXPECT_EQ(count_lines(csv), 7u);
  EXPECT_EQ(slurp(out / "rejections.csv").substr(0, 28), "virtual_time,block_id,reason");

  const auto inst = (dir / "inst.json").string();
  write_file(inst, tsp::instance_to_json(tsp::generate_instance(9, 3)).dump());
  const auto v = run_cli({"validate", (out / "chain.json").string(), "--instance", inst});
  EXPECT_EQ(v.code, 0) << v.out << v.err;
  EXPECT_EQ(v.out, "VALID (6 blocks)\n");
}

TEST(Simulate, FlagOverridesAndRowCount) {
  const auto dir = testing_support::scratch_dir("sim60");
  const auto config = write_config(dir);
  const auto r = run_cli({"simulate", "--config", config.string(), "--out", dir.string(), "--miners", "3", "--blocks", "12"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "results.csv")), 13u);
}

TEST(Simulate, RepeatRunsAreByteIdentical) {
  const auto dir = testing_support::scratch_dir("simrep");
  const auto config = write_config(dir);
  for (const char* run : {"a", "b"}) {
    ASSERT_EQ(run_cli({"simulate", "--config", config.string(), "--out", (dir / run).string()}).code, 0);
  }
  for (const char* file : {"chain.json", "results.csv", "rejections.csv"}) {
    EXPECT_EQ(slurp(dir / "a" / file), slurp(dir / "b" / file)) << file;
  }
}

TEST(Simulate, FraudIsLogged) {
  const auto dir = testing_support::scratch_dir("simfraud");
  const auto config = write_config(dir, {{"fraud_heights", {3}}});
  ASSERT_EQ(run_cli({"simulate", "--config", config.string(), "--out", dir.string()}).code, 0);
  const auto log = slurp(dir / "rejections.csv");
  EXPECT_GE(count_lines(log), 2u);
  EXPECT_NE(log.find(",counterexample\n"), std::string::npos) << log;
}

TEST(Simulate, BadConfigIsUsageError) {
  const auto dir = testing_support::scratch_dir("simbad");
  EXPECT_EQ(run_cli({"simulate", "--config", (dir / "missing.json").string()}).code, 2);
  const auto config = write_config(dir, {{"miners", 0}});
  EXPECT_EQ(run_cli({"simulate", "--config", config.string(), "--out", dir.string()}).code, 2);
  write_file((dir / "junk.json").string(), "{not json");
  EXPECT_EQ(run_cli({"simulate", "--config", (dir / "junk.json").string()}).code, 2);
}

class ValidateCmd : public ::testing::Test {
 protected:
  fs::path dir = testing_support::scratch_dir("validate");
  std::string chain_path = (dir / "chain.json").string();
  std::string instance_path = (dir / "inst.json").string();

  void SetUp() override {
    const auto config = write_config(dir);
    ASSERT_EQ(run_cli({"simulate", "--config", config.string(), "--out", dir.string()}).code, 0);
    write_file(instance_path, tsp::instance_to_json(tsp::generate_instance(9, 3)).dump());
  }

  testing_support::RunResult validate(const std::string& text) {
    const auto path = (dir / "edited.json").string();
    write_file(path, text);
    return run_cli({"validate", path, "--instance", instance_path});
  }
};

TEST_F(ValidateCmd, HexEditNamesTheHeight) {
  auto j = nlohmann::json::parse(slurp(chain_path));
  std::string root = j[4]["merkle_root"];
  root[10] = root[10] == 'a' ? 'b' : 'a';
  j[4]["merkle_root"] = root;
  const auto r = validate(j.dump() + "\n");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out.rfind("INVALID at height 4", 0), 0u) << r.out;
}

TEST_F(ValidateCmd, TruncatedJsonIsUsageError) {
  const auto text = slurp(chain_path);
  EXPECT_EQ(validate(text.substr(0, text.size() - 20)).code, 2);
}

TEST_F(ValidateCmd, InstanceMustMatch) {
  EXPECT_EQ(run_cli({"validate", chain_path}).code, 2);
  const auto other = (dir / "other.json").string();
  write_file(other, tsp::instance_to_json(tsp::generate_instance(9, 4)).dump());
  EXPECT_EQ(run_cli({"validate", chain_path, "--instance", other}).code, 2);
}

TEST_F(ValidateCmd, NonCanonicalSpellingIsRejected) {
  const auto text = slurp(chain_path);
  EXPECT_EQ(validate(text).code, 0);
  EXPECT_NE(validate(text.substr(0, text.size() - 1) + " ").code, 0);
  EXPECT_NE(validate(nlohmann::json::parse(text).dump(1) + "\n").code, 0);
}

TEST(Usage, UnknownSubcommandAndBinary) {
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  const auto help = testing_support::shell(std::string(BLMCHAIN_CLI_PATH) + " --help");
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("simulate"), std::string::npos);
  const auto bad = testing_support::shell(std::string(BLMCHAIN_CLI_PATH) + " gen-tsp --n 1 --out /dev/null 2>&1");
  EXPECT_EQ(bad.code, 2);
}

TEST(Defaults, TspDifficultyRange) {
  EXPECT_EQ(cli::tsp_k_min(25), 12);
  EXPECT_EQ(cli::tsp_k_max(25), 23);
  EXPECT_EQ(cli::tsp_k_max(12), 10);
  EXPECT_EQ(cli::tsp_k_max(3), 1);
  EXPECT_EQ(cli::tsp_k_max(2), 1);
}
