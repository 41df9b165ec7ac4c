#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "isoperim/cli.hpp"

using namespace isoperim;
namespace fs = std::filesystem;

namespace {

const std::string kEuclid = R"({"h": {"kind": "euclidean"}, "f": {"kind": "constant"}})";
const std::string kHyper = R"({"h": {"kind": "hyperbolic"}, "f": {"kind": "constant"}})";
const std::string kBorell = R"({"h": {"kind": "hyperbolic"}, "f": {"kind": "exp_power", "params": {"a": 1, "p": 2}}})";
const std::string kGauss = R"({"h": {"kind": "euclidean"}, "f": {"kind": "exp_power", "params": {"a": 1, "p": 2}}})";
const std::string kGaussG1 =
    R"({"h": {"kind": "euclidean"}, "f": {"kind": "exp_power", "params": {"a": 1, "p": 2}}, "g": {"kind": "constant"}})";
const std::string kOnePlusR = R"({"h": {"kind": "euclidean"},
  "f": {"kind": "custom-series", "params": {"terms": [{"coef": 1, "basis": "power", "k": 0}, {"coef": 1, "basis": "power", "k": 1}]}}})";

struct Run {
  int code;
  std::string out, err;
};

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("isoperim_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double value_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  if (pos == std::string::npos) throw std::runtime_error("missing " + key);
  return std::stod(text.substr(pos + key.size()));
}

}  // namespace

TEST(CliThresholds, BorellV0Area) {
  const auto d = fresh_dir("th_borell");
  const auto r = run({"--surface", kBorell, "--out", d.string(), "thresholds"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(std::fabs(value_after(r.out, "V0_area = ") - 31.098) / 31.098, 0.005);
  EXPECT_NEAR(value_after(r.out, "r0 = "), std::asinh(1.0 / std::sqrt(2.0)), 1e-9);
  const auto j = json::parse(slurp(d / "thresholds.json"));
  for (const char* k : {"r0", "M", "r_star", "V0", "minimizer_r"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(CliThresholds, FlatPlaneExitTwo) {
  const auto r = run({"--surface", kEuclid, "--out", fresh_dir("th_flat").string(), "thresholds"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no log-convexity onset"), std::string::npos) << r.err;
}

TEST(CliThresholds, GaussianJsonInvariants) {
  const auto d = fresh_dir("th_gauss");
  ASSERT_EQ(run({"--surface", kGauss, "--out", d.string(), "thresholds"}).code, 0);
  const auto j = json::parse(slurp(d / "thresholds.json"));
  const auto s = gaussian_euclidean();
  const double r0 = j["r0"], M = j["M"], rs = j["r_star"], V0 = j["V0"];
  EXPECT_NEAR(r0, 1.0 / std::sqrt(2.0), 1e-9);
  EXPECT_GT(rs, r0);
  EXPECT_NEAR(logderiv_fh(s, rs), M, 1e-9);
  EXPECT_NEAR(V0, 2 * std::numbers::pi * s.area_primitive(rs), 1e-12 * V0);
  // JSON numbers re-parse to the in-process report exactly.
  const auto rep = thresholds(s);
  EXPECT_EQ(M, rep.M);
  EXPECT_EQ(rs, rep.r_star);
}

TEST(CliShoot, EuclideanCrossingAtPi) {
  const auto d = fresh_dir("sh_euclid");
  const auto r = run({"--surface", kEuclid, "--out", d.string(), "shoot", "--r-start", "1", "--kappa", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(d / "shot.json"));
  EXPECT_EQ(j["termination"], "axis-crossing");
  EXPECT_NEAR(j["crossing_theta"].get<double>(), std::numbers::pi, 1e-10);
  EXPECT_TRUE(fs::exists(d / "trajectory.csv"));
}

TEST(CliShoot, BorellCircle) {
  const auto d = fresh_dir("sh_borell");
  const auto r = run({"--surface", kBorell, "--out", d.string(), "shoot", "--r-start", "2", "--alpha-prime0", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(d / "shot.json"));
  EXPECT_TRUE(j["is_circle"].get<bool>());
  EXPECT_EQ(j["closure_defect"].get<double>(), 0.0);
}

TEST(CliShoot, BorellAlphaMonotoneAboveOnset) {
  const auto d = fresh_dir("sh_borell3");
  ASSERT_EQ(run({"--surface", kBorell, "--out", d.string(), "shoot", "--r-start", "3", "--alpha-prime0", "0.5"}).code, 0);
  std::ifstream in(d / "trajectory.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("t,r,theta,alpha", 0), 0u) << line;
  const double r0 = std::asinh(1.0 / std::sqrt(2.0));
  double prev = -1e300;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_GE(v.size(), 4u);
    if (v[1] >= r0) {
      EXPECT_GE(v[3], prev - 1e-9) << "t = " << v[0];
      prev = v[3];
    } else {
      prev = -1e300;
    }
    ++rows;
  }
  EXPECT_GT(rows, 10);
}

TEST(CliShoot, ArgumentErrors) {
  const auto d = fresh_dir("sh_err").string();
  EXPECT_EQ(run({"--surface", kEuclid, "--out", d, "shoot", "--r-start", "1"}).code, 1);
  EXPECT_EQ(run({"--surface", kEuclid, "--out", d, "shoot", "--r-start", "1", "--kappa", "1", "--alpha-prime0", "0"}).code, 1);
  EXPECT_EQ(run({"--surface", kEuclid, "--out", d, "shoot", "--r-start", "0", "--kappa", "1"}).code, 1);
  EXPECT_EQ(run({"--surface", kEuclid, "--out", d, "--rtol", "-1", "shoot", "--r-start", "1", "--kappa", "1"}).code, 1);
}

TEST(CliClose, EuclideanPi) {
  const auto d = fresh_dir("cl_euclid");
  const auto r = run({"--surface", kEuclid, "--out", d.string(), "close", "--volume", std::to_string(std::numbers::pi),
                      "--scan-count", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("winner: centered circle"), std::string::npos) << r.out;
  EXPECT_NEAR(value_after(r.out, "P = "), 2 * std::numbers::pi, 1e-6);
}

TEST(CliClose, HyperbolicUnitBall) {
  const auto d = fresh_dir("cl_hyper");
  const double V = 2 * std::numbers::pi * (std::cosh(1.0) - 1.0);
  const auto r = run({"--surface", kHyper, "--out", d.string(), "close", "--volume", cli::detail::opt_num(V),
                      "--scan-count", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("winner: centered circle"), std::string::npos) << r.out;
  EXPECT_NEAR(value_after(r.out, "P = "), 2 * std::numbers::pi * std::sinh(1.0), 1e-8);
  // candidates.json re-parses to numbers equal to the in-process records.
  const auto j = json::parse(slurp(d / "candidates.json"));
  ASSERT_FALSE(j.empty());
  const auto c = circle_candidate(hyperbolic_plane(), j[0]["r_start"].get<double>());
  EXPECT_EQ(j[0]["is_circle"].get<bool>(), true);
  EXPECT_NEAR(j[0]["P"].get<double>(), c.P, 1e-12 * c.P);
}

TEST(CliClose, BorellFortyCircleWins) {
  const auto d = fresh_dir("cl_borell");
  const auto r = run({"--surface", kBorell, "--out", d.string(), "close", "--volume", "40", "--scan-count", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("winner: centered circle,"), std::string::npos) << r.out;
}

TEST(CliClose, VolumeBeyondCapExitTwo) {
  const auto r = run({"--surface", kEuclid, "--out", fresh_dir("cl_cap").string(), "close", "--volume", "1e9"});
  EXPECT_EQ(r.code, 2);
}

TEST(CliAudit, Examples) {
  EXPECT_EQ(run({"--surface", kGauss, "--out", fresh_dir("au1").string(), "audit", "--n", "2"}).code, 0);
  EXPECT_EQ(run({"--surface", kGaussG1, "--out", fresh_dir("au2").string(), "audit"}).code, 3);
  const auto d = fresh_dir("au3");
  const auto r = run({"--surface", kOnePlusR, "--out", d.string(), "audit"});
  const auto j = json::parse(slurp(d / "audit.json"));
  const std::string ex = j["existence"]["overall"], bd = j["boundedness"]["overall"];
  const int expect = (ex == "holds" && bd == "holds") ? 0 : (ex == "fails" || bd == "fails") ? 3 : 4;
  EXPECT_EQ(r.code, expect) << r.out;
}

TEST(CliCircle, ClosedForms) {
  const auto r = run({"--surface", kHyper, "circle", "--radius", "1"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(value_after(r.out, "kappa_f = "), 1.0 / std::tanh(1.0), 1e-14);
  EXPECT_NEAR(value_after(r.out, "P = "), 2 * std::numbers::pi * std::sinh(1.0), 1e-13);
  EXPECT_NEAR(value_after(r.out, "V = "), 2 * std::numbers::pi * (std::cosh(1.0) - 1.0), 1e-12);
}

TEST(Cli, SpecErrorsExitOne) {
  EXPECT_EQ(run({"--surface", R"({"h": {"kind": "euclidean"}, "f": {"kind": "constant"}, "bogus": 1})", "circle", "--radius", "1"}).code,
            1);
  EXPECT_EQ(run({"--surface", "/nonexistent/spec.json", "thresholds"}).code, 1);
  EXPECT_EQ(run({"thresholds"}).code, 1);
  EXPECT_EQ(run({"--surface", kEuclid}).code, 1);
  EXPECT_EQ(run({"--surface", kEuclid, "frobnicate"}).code, 1);
}

TEST(Cli, SurfaceFromFile) {
  const auto d = fresh_dir("file");
  {
    std::ofstream(d / "borell.json") << kBorell;
  }
  const auto r = run({"--surface", (d / "borell.json").string(), "circle", "--radius", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(value_after(r.out, "kappa_f = "), 4.0 + 1.0 / std::tanh(2.0), 1e-13);
}

TEST(Cli, BinaryOutputsAreByteIdentical) {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  for (const auto& d : {a, b}) {
    const std::string base = std::string(ISOPERIM_CLI_PATH) + " --surface '" + kBorell + "' --out " + d.string();
    ASSERT_EQ(std::system((base + " thresholds > " + (d / "th.txt").string()).c_str()), 0);
    ASSERT_EQ(std::system((base + " shoot --r-start 3 --alpha-prime0 0.5 > " + (d / "sh.txt").string()).c_str()), 0);
  }
  for (const char* f : {"thresholds.json", "trajectory.csv", "shot.json", "th.txt", "sh.txt"}) {
    const auto x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
}

TEST(Cli, BinaryExitCodes) {
  const std::string base = std::string(ISOPERIM_CLI_PATH) + " --out " + fresh_dir("bin").string() + " --surface '";
  auto code = [](const std::string& cmd) {
    const int st = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  EXPECT_EQ(code(base + kEuclid + "' thresholds"), 2);
  EXPECT_EQ(code(base + kGaussG1 + "' audit"), 3);
  EXPECT_EQ(code(base + kGauss + "' audit"), 0);
  EXPECT_EQ(code(base + kEuclid + "' circle"), 1);
  EXPECT_EQ(code(std::string(ISOPERIM_CLI_PATH) + " --help"), 0);
}
