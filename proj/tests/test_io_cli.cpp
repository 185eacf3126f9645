#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "bandcone/cli.hpp"
#include "support.hpp"

using namespace bandcone;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("bandcone_test_" + name);
  std::ofstream(path) << content;
  return path.string();
}

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run_cfg(const RunConfig& cfg) {
  std::ostringstream out, err;
  const int code = run(cfg, out, err);
  return {code, out.str(), err.str()};
}

RunResult run_binary(const std::string& args) {
  const std::string cmd = std::string(BANDCONE_CLI_PATH) + " " + args + " 2>&1";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  std::string text;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe.get())) text.append(buf.data(), n);
  const int status = pclose(pipe.release());
  return {WEXITSTATUS(status), text, ""};
}

}  // namespace

TEST(ReadDataset, DoseResponseFile) {
  const DatasetFile f = read_dataset_file(testkit::data_path("lavelle_9aa.csv"));
  ASSERT_EQ(f.predictors.size(), 1u);
  EXPECT_EQ(f.predictors[0], "logdose");
  EXPECT_EQ(f.data.dim(), 2u);
  EXPECT_EQ(f.data.design()(0, 1), -1.374);
  EXPECT_EQ(f.data.successes()[0], 7);
  EXPECT_EQ(f.data.trials()[0], 96);
}

TEST(ReadDataset, BernoulliWithoutTrials) {
  std::istringstream in("# comment\n\nx,successes\n0,0\n1,1\n2,0\n3,1\n");
  const DatasetFile f = read_dataset(in);
  EXPECT_EQ(f.data.rows(), 4u);
  for (int t : f.data.trials()) EXPECT_EQ(t, 1);
  const DatasetFile icu = read_dataset_file(testkit::data_path("icu_age_sys.csv"));
  EXPECT_EQ(icu.data.rows(), 200u);
  EXPECT_EQ(icu.predictors, (std::vector<std::string>{"age", "sys"}));
}

TEST(ReadDataset, Rejections) {
  auto fails = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      read_dataset(in, "d.csv");
    } catch (const ValidationError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  EXPECT_TRUE(fails("x,successes,trials\n0.5,3,10\n", ""));               // single row
  EXPECT_TRUE(fails("x,successes,trials\n0,1,96\n1,97,96\n", "d.csv:3"));  // 97 > 96
  EXPECT_TRUE(fails("x,successes,trials\n0,1,96\n1,2\n", "d.csv:3"));
  EXPECT_TRUE(fails("x,successes,trials\n0,1,96\nabc,2,96\n", "d.csv:3"));
  EXPECT_TRUE(fails("x,successes,trials\n0,1,96\n1,-2,96\n", "d.csv:3"));
  EXPECT_TRUE(fails("x,y\n0,1\n1,0\n", "successes"));
  EXPECT_TRUE(fails("x,trials,successes\n0,1,1\n1,1,0\n", "trials"));
  EXPECT_TRUE(fails("", "header"));
}

TEST(RegionJson, Types) {
  EXPECT_TRUE(std::holds_alternative<Unrestricted>(region_from_json({{"type", "unrestricted"}})));
  const Region iv = region_from_json({{"type", "interval"}, {"lower", -1.3}, {"upper", 0.8}});
  ASSERT_TRUE(std::holds_alternative<IntervalCone>(iv));
  EXPECT_EQ(std::get<IntervalCone>(iv).upper, 0.8);
  const Region rect = region_from_json(
      {{"type", "rectangle"}, {"bounds", json::array({json::array({16, 92}), json::array({36, 256})})}});
  EXPECT_EQ(std::get<ConvexHull>(rect).generators.size(), 4u);
  const Region sub = region_from_json(
      {{"type", "subspace"}, {"Z", json::array({json::array({1.0}), json::array({0.0})})}, {"a", 0.5}});
  EXPECT_TRUE(std::holds_alternative<SubspaceCone>(sub));
  // Round trip through the writer.
  EXPECT_EQ(to_json(region_from_json(to_json(iv))), to_json(iv));
}

TEST(RegionJson, Errors) {
  EXPECT_THROW(region_from_json(json::array()), ValidationError);
  EXPECT_THROW(region_from_json({{"type", "ellipse"}}), ValidationError);
  EXPECT_THROW(region_from_json({{"type", "interval"}, {"lower", 1.0}}), ValidationError);
  EXPECT_THROW(region_from_json({{"type", "interval"}, {"lower", 1.0}, {"upper", 0.0}}),
               ValidationError);
  EXPECT_THROW(region_from_json({{"type", "rectangle"}}), ValidationError);
  EXPECT_THROW(region_from_json({{"type", "subspace"}, {"Z", json::array({json::array({1.0})})},
                                 {"a", 2.0}}),
               Error);
}

TEST(BandTable, CsvRoundTripAndColumns) {
  const FittedModel m = fit_logistic(parse_dataset(testkit::data_path("lavelle_9aa.csv")));
  const Region region = make_interval(-1.3, 0.8);
  const BandSpec spec(m, critical_value(0.05, summarize(region, m.fisher_inv)), region);
  const auto pts = band_curve(spec, interval_grid(-1.3, 0.8, 17));
  std::stringstream csv;
  write_band_csv(csv, pts);
  std::string header;
  std::getline(std::istringstream(csv.str()) >> std::ws, header);
  EXPECT_EQ(header, "x1,eta_hat,se,lin_lo,lin_hi,p_lo,p_hi");
  const auto back = read_band_csv(csv);
  ASSERT_EQ(back.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(back[i].x[1], pts[i].x[1], 1e-12);
    EXPECT_NEAR(back[i].eta_hat, pts[i].eta_hat, 1e-12);
    EXPECT_NEAR(back[i].se, pts[i].se, 1e-12);
    EXPECT_NEAR(back[i].lin_lo, pts[i].lin_lo, 1e-12);
    EXPECT_NEAR(back[i].p_hi, pts[i].p_hi, 1e-12);
  }
  const auto from_json = band_from_json(json::parse(band_to_json(pts).dump()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(from_json[i].lin_lo, pts[i].lin_lo);
    EXPECT_EQ(from_json[i].p_lo, pts[i].p_lo);
    EXPECT_EQ(from_json[i].x, pts[i].x);
  }
}

TEST(Run, CriticalValues) {
  RunConfig cfg;
  cfg.command = Command::critval;
  cfg.p = 2, cfg.r = 1, cfg.a = 0.9193;
  RunResult r = run_cfg(cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NEAR(json::parse(r.out).at("c").get<double>(), 2.206, 1e-3);
  cfg.a = 0.0;
  r = run_cfg(cfg);
  EXPECT_NEAR(json::parse(r.out).at("c").get<double>(), 2.447, 1e-3);
  cfg.format = Format::csv;
  r = run_cfg(cfg);
  EXPECT_EQ(r.out.rfind("p,r,a,alpha,c\n2,1,0,0.05", 0), 0u) << r.out;
}

TEST(Run, RegionWithBundledFisherInverse) {
  RunConfig cfg;
  cfg.command = Command::region;
  cfg.fisher_inv_path = testkit::data_path("icu_fisher_inv.json");
  cfg.rectangle = Bounds{{16, 92}, {36, 256}};
  cfg.search = SearchConfig{500, 0};
  const RunResult r = run_cfg(cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j.at("summary").at("a").get<double>(), 0.2383, 1e-3);
  EXPECT_NEAR(j.at("critical").at("c").get<double>(), 2.789, 2e-3);
}

TEST(Run, ExitCodes) {
  RunConfig bad;
  bad.command = Command::critval;
  bad.alpha = 1.5;
  RunResult r = run_cfg(bad);
  EXPECT_EQ(r.code, kExitValidation);
  const json e = json::parse(r.err);
  EXPECT_EQ(e.at("error").at("exit_code").get<int>(), kExitValidation);
  EXPECT_FALSE(e.at("error").at("message").get<std::string>().empty());

  RunConfig missing;
  missing.command = Command::fit;
  missing.data_path = "/nonexistent/data.csv";
  EXPECT_EQ(run_cfg(missing).code, kExitValidation);

  RunConfig separated;
  separated.command = Command::fit;
  separated.data_path = temp_file("separated.csv", "x,successes\n0,0\n1,0\n2,0\n3,1\n4,1\n5,1\n");
  r = run_cfg(separated);
  EXPECT_EQ(r.code, kExitNumerical) << r.err;
  EXPECT_EQ(json::parse(r.err).at("error").at("kind"), "numerical");

  RunConfig mismatch;
  mismatch.command = Command::reproduce;
  mismatch.table = "3.3";
  mismatch.printed_fisher_inv = true;
  EXPECT_EQ(run_cfg(mismatch).code, kExitMismatch);

  RunConfig table;
  table.command = Command::reproduce;
  table.table = "3.2";
  r = run_cfg(table);
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_TRUE(json::parse(r.out).is_object());
}

TEST(Run, OutputFile) {
  RunConfig cfg;
  cfg.command = Command::critval;
  cfg.output_path = temp_file("critval.json", "");
  std::ostringstream out, err;
  ASSERT_EQ(run(cfg, out, err), kExitOk);
  EXPECT_TRUE(out.str().empty());
  EXPECT_NEAR(load_json_file(cfg.output_path).at("c").get<double>(), 2.447, 1e-3);
}

TEST(SeedOverride, Parsing) {
  RunConfig cfg;
  apply_seed_override(cfg, nullptr);
  EXPECT_EQ(cfg.seed, kDefaultSeed);
  apply_seed_override(cfg, "");
  EXPECT_EQ(cfg.seed, kDefaultSeed);
  apply_seed_override(cfg, "18446744073709551615");
  EXPECT_EQ(cfg.seed, 18446744073709551615ull);
  EXPECT_THROW(apply_seed_override(cfg, "12x"), ValidationError);
  EXPECT_THROW(apply_seed_override(cfg, "-3"), ValidationError);
}

TEST(Binary, SimulateDeterministicUnderSeedEnv) {
  const std::string args = "simulate --beta '[0,1.5]' --interval-class wide --n 25 --reps 50";
  setenv("BANDCONE_SEED", "42", 1);
  const RunResult x = run_binary(args), y = run_binary(args);
  setenv("BANDCONE_SEED", "43", 1);
  const RunResult z = run_binary(args);
  unsetenv("BANDCONE_SEED");
  ASSERT_EQ(x.code, 0) << x.out;
  EXPECT_EQ(x.out, y.out);
  EXPECT_EQ(json::parse(x.out).at("seed").get<std::uint64_t>(), 42u);
  EXPECT_EQ(json::parse(z.out).at("seed").get<std::uint64_t>(), 43u);

  setenv("BANDCONE_SEED", "nope", 1);
  const RunResult bad = run_binary(args);
  unsetenv("BANDCONE_SEED");
  EXPECT_EQ(bad.code, kExitValidation);
}

TEST(Binary, UsageErrorsAreValidation) {
  const RunResult r = run_binary("critval --p two");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.out.find("\"error\""), std::string::npos);
  EXPECT_EQ(run_binary("critval --p 2 --r 1 --a 0.9193").code, kExitOk);
}
