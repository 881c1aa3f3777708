#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "repmut/cli.hpp"

using namespace repmut;
namespace fs = std::filesystem;

#ifndef REPMUT_SOURCE_DIR
#define REPMUT_SOURCE_DIR "."
#endif

namespace {

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "repmut");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("repmut_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

}  // namespace

TEST(Projection, Corners) {
  const auto a = simplex_project(1.0, 0.0);
  EXPECT_DOUBLE_EQ(a.X, 1.0);
  EXPECT_DOUBLE_EQ(a.Y, 0.0);
  const auto b = simplex_project(0.0, 1.0);
  EXPECT_DOUBLE_EQ(b.X, 0.5);
  EXPECT_DOUBLE_EQ(b.Y, std::sqrt(3.0) / 2);
  const auto c = simplex_project(0.0, 0.0);
  EXPECT_DOUBLE_EQ(c.X, 0.0);
  EXPECT_DOUBLE_EQ(c.Y, 0.0);
}

TEST(Projection, CentroidMapsToCentroid) {
  const auto p = simplex_project(1.0 / 3, 1.0 / 3);
  EXPECT_NEAR(p.X, 0.5, 1e-15);
  EXPECT_NEAR(p.Y, std::sqrt(3.0) / 6, 1e-15);
}

TEST(Projection, AffineOnConvexCombinations) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto point = [&] {
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
    return std::pair{a, b};
  };
  for (int k = 0; k < 1000; ++k) {
    const auto p = point(), q = point(), r = point();
    double w[3] = {u(rng), u(rng), u(rng)};
    const double sum = w[0] + w[1] + w[2];
    for (double& v : w) v /= sum;
    const double x = w[0] * p.first + w[1] * q.first + w[2] * r.first;
    const double y = w[0] * p.second + w[1] * q.second + w[2] * r.second;
    const auto lhs = simplex_project(x, y);
    const auto pp = simplex_project(p.first, p.second), pq = simplex_project(q.first, q.second),
               pr = simplex_project(r.first, r.second);
    EXPECT_NEAR(lhs.X, w[0] * pp.X + w[1] * pq.X + w[2] * pr.X, 1e-14);
    EXPECT_NEAR(lhs.Y, w[0] * pp.Y + w[1] * pq.Y + w[2] * pr.Y, 1e-14);
  }
}

TEST(Portrait, CycleAndCornersDrawn) {
  const auto f = VectorField::named(SystemId::alld_to_allc, 0.08, 0.04);
  const auto svg = render_phase_portrait(f, {SimplexState(0.3, 0.3), SimplexState(0.9, 0.05)});
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_TRUE(contains(svg, "viewBox=\"0 0 800 700\""));
  EXPECT_TRUE(contains(svg, "width=\"800\""));
  EXPECT_TRUE(contains(svg, "height=\"700\""));
  EXPECT_TRUE(contains(svg, ">ALLD<"));
  EXPECT_TRUE(contains(svg, ">TFT<"));
  EXPECT_TRUE(contains(svg, ">ALLC<"));
  EXPECT_EQ(count_of(svg, "class=\"corner\""), 3u);
  EXPECT_TRUE(contains(svg, "<g class=\"limit-cycle\">"));
  EXPECT_EQ(count_of(svg, "<polyline"), 3u);
  EXPECT_TRUE(contains(svg, "class=\"unstable_spiral\""));
  EXPECT_TRUE(contains(svg, "class=\"stable_node\""));
  EXPECT_TRUE(contains(svg, "</svg>\n"));
  EXPECT_FALSE(contains(svg, "href=\"http"));
}

TEST(Portrait, EdgeOfNeutralPointsWithoutMutation) {
  const auto f = VectorField::named(SystemId::replicator, 0.0, 0.0);
  const auto svg = render_phase_portrait(f, {SimplexState(0.2, 0.5)});
  EXPECT_FALSE(contains(svg, "limit-cycle"));
  EXPECT_GE(count_of(svg, "class=\"nonhyperbolic\""), 10u);
}

TEST(Portrait, EmptyStartsWithCycleOverlay) {
  const auto f = VectorField::named(SystemId::alld_to_allc, 0.08, 0.04);
  PortraitOptions o;
  o.cycle = detect_limit_cycle(f);
  ASSERT_TRUE(o.cycle.has_value());
  o.detect_cycle = false;
  const auto svg = render_phase_portrait(f, {}, o);
  EXPECT_TRUE(contains(svg, "<g class=\"trajectories\">\n</g>"));
  EXPECT_TRUE(contains(svg, "<g class=\"limit-cycle\">"));
  EXPECT_TRUE(contains(svg, "<g class=\"equilibria\">"));
  EXPECT_TRUE(contains(svg, "</svg>\n"));
}

TEST(Portrait, NoEquilibriaLayerWhenDisabled) {
  PortraitOptions o;
  o.show_equilibria = false;
  o.detect_cycle = false;
  const auto svg = render_phase_portrait(VectorField::named(SystemId::uniform, 0.01, 0.3), {}, o);
  EXPECT_FALSE(contains(svg, "class=\"equilibria\""));
  EXPECT_FALSE(contains(svg, "limit-cycle"));
}

TEST(Diagram, SvgCarriesRegionCells) {
  DiagramOptions o;
  o.mu_max = 0.15;
  o.c_max = 0.7;
  o.grid = 6;
  o.resolution = 40;
  o.homoclinic_samples = 0;
  const auto d = stability_diagram(VectorField::named(SystemId::tft_to_allc, 0.0, 0.0), o);
  const auto svg = render_diagram(d);
  EXPECT_EQ(count_of(svg, "data-region=\""), 36u);
  for (int id : d.region_ids()) EXPECT_TRUE(contains(svg, "data-region=\"" + std::to_string(id) + "\""));
  EXPECT_TRUE(contains(svg, "</svg>\n"));
}

TEST(HomoclinicCsv, HeaderAndPrecision) {
  HomoclinicResult r;
  r.mu = 0.05;
  r.c = 0.1 + 1e-16;
  r.c_cycle = 0.1;
  r.c_absent = 0.2;
  r.period_near = 80.0;
  r.period_reference = 17.0;
  std::ostringstream os;
  write_homoclinic_csv(os, {r});
  std::istringstream is(os.str());
  std::string head, row;
  std::getline(is, head);
  std::getline(is, row);
  EXPECT_EQ(head, "mu,c,c_cycle,c_absent,period_near,period_reference");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
  EXPECT_EQ(std::stod(row.substr(row.find(',') + 1)), r.c);
}

TEST(Config, ShippedConfigsLoad) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(REPMUT_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".json") continue;
    ++n;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
  }
  EXPECT_GE(n, 5u);
}

TEST(Config, NamedPatternsPickNamedSystems) {
  const auto rc = config_from_json(nlohmann::json::parse(R"({"cost": 0.04, "mu": 0.08,
      "mutation": {"pattern": "alld_to_allc"}})"));
  EXPECT_EQ(rc.system, SystemId::alld_to_allc);
  EXPECT_DOUBLE_EQ(rc.params.mu, 0.08);
  EXPECT_DOUBLE_EQ(rc.params.cost, 0.04);
  EXPECT_EQ(config_from_json(nlohmann::json::parse(R"({"mutation": {"matrix":
      [[1, -0.5, -0.5], [0, 0.6, -0.6], [-0.3, 0, 0.3]]}})")).system,
            SystemId::general);
}

TEST(Config, RoundTrip) {
  for (const char* text : {R"({"payoffs": {"T": 6, "R": 4, "P": 1, "S": 0}, "cost": 0.3, "mu": 0.01,
                                "mutation": {"pattern": "uniform"}})",
                           R"({"cost": 0.02, "mu": 0.01, "mutation": {"matrix":
                                [[1, -0.5, -0.5], [0, 0.6, -0.6], [-0.3, 0, 0.3]]}})"}) {
    const auto a = config_from_json(nlohmann::json::parse(text));
    const auto j = to_json(a);
    const auto b = config_from_json(j);
    EXPECT_EQ(to_json(b), j);
    EXPECT_EQ(a.system, b.system);
  }
}

TEST(Config, RejectsMalformedInput) {
  for (const char* text : {R"([1, 2])", R"({"mu": "high"})", R"({"mu": -0.1})", R"({"cost": -1})",
                           R"({"mutation": {"pattern": "sideways"}})", R"({"mutation": {"matrix": [[1, 0], [0, 1]]}})",
                           R"({"mutation": {}})"}) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(text)), InvalidArgument) << text;
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), InvalidArgument);
  TempDir t;
  const auto p = t.path() / "bad.json";
  cli::write_text(p, "{not json");
  EXPECT_THROW(load_config(p.string()), InvalidArgument);
}

TEST(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_TRUE(contains(r.out, "simulate"));
  EXPECT_TRUE(contains(r.out, "conjecture"));
}

TEST(Cli, UsageErrorsExitOne) {
  TempDir t;
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"--out", t.str(), "equilibria"}).code, kExitUsage);
  EXPECT_EQ(run({"--system", "tft_to_allc", "--bogus", "1", "equilibria"}).code, kExitUsage);
  EXPECT_EQ(run({"--system", "sideways", "--out", t.str(), "equilibria"}).code, kExitUsage);
  EXPECT_EQ(run({"--system", "replicator", "--mu", "0.1", "--out", t.str(), "equilibria"}).code, kExitUsage);
  EXPECT_EQ(run({"--system", "uniform", "--mu", "-0.1", "--out", t.str(), "equilibria"}).code, kExitUsage);
  EXPECT_EQ(run({"--config", "/nonexistent.json", "equilibria"}).code, kExitUsage);
  EXPECT_EQ(run({"--system", "uniform", "--out", t.str(), "simulate", "--x0", "0.3"}).code, kExitUsage);
  const auto r = run({"--system", "replicator", "--mu", "0.1", "--out", t.str(), "equilibria"});
  EXPECT_TRUE(contains(r.err, "error:"));
}

TEST(Cli, SimulateReachesCooperativeEdgeWithoutCost) {
  TempDir t;
  const auto r = run({"--system", "replicator", "--mu", "0", "--cost", "0", "--out", t.str(), "simulate", "--x0",
                      "0.3", "--y0", "0.4", "--t-max", "5000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0]["final"][0].get<double>(), 0.0, 1e-4);
  const auto csv = slurp(t.path() / "trajectory.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x_alld,y_tft,z_allc");
}

TEST(Cli, SimulateIsDeterministicForASeed) {
  TempDir a, b, c;
  const std::vector<std::string> base = {"--system", "uniform", "--mu", "0.01", "--cost", "0.3", "--seed", "42"};
  auto with_out = [&](const TempDir& d) {
    auto v = base;
    v.insert(v.end(), {"--out", d.str(), "simulate", "--starts", "3", "--t-max", "50"});
    return v;
  };
  ASSERT_EQ(run(with_out(a)).code, kExitOk);
  ASSERT_EQ(run(with_out(b)).code, kExitOk);
  for (int i = 0; i < 3; ++i) {
    const auto name = "trajectory_" + std::to_string(i) + ".csv";
    const auto sa = slurp(a.path() / name);
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, slurp(b.path() / name));
  }
  auto other = with_out(c);
  other[7] = "43";
  ASSERT_EQ(run(other).code, kExitOk);
  EXPECT_NE(slurp(a.path() / "trajectory_0.csv"), slurp(c.path() / "trajectory_0.csv"));
}

TEST(Cli, EquilibriaJson) {
  TempDir t;
  const auto r = run({"--system", "tft_to_allc", "--mu", "0.05", "--cost", "0.1", "--out", t.str(), "equilibria"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(t.path() / "equilibria.json"));
  EXPECT_EQ(j["config"]["mutation"]["pattern"], "tft_to_allc");
  EXPECT_GE(j["equilibria"].size(), 3u);
  EXPECT_EQ(j["equilibria"], nlohmann::json::parse(r.out));
}

TEST(Cli, ConfigFileAndOverride) {
  TempDir t;
  const std::string cfg = std::string(REPMUT_SOURCE_DIR) + "/configs/fig7_alld_to_allc.json";
  ASSERT_EQ(run({"--config", cfg, "--cost", "0.05", "--out", t.str(), "equilibria"}).code, kExitOk);
  const auto j = nlohmann::json::parse(slurp(t.path() / "equilibria.json"));
  EXPECT_DOUBLE_EQ(j["config"]["cost"].get<double>(), 0.05);
  EXPECT_DOUBLE_EQ(j["config"]["mu"].get<double>(), 0.08);
  EXPECT_EQ(j["config"]["mutation"]["pattern"], "alld_to_allc");
}

TEST(Cli, CycleReportsStableCycle) {
  TempDir t;
  const auto r = run({"--system", "alld_to_allc", "--mu", "0.08", "--cost", "0.04", "--out", t.str(), "cycle"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(t.path() / "cycle.json"));
  EXPECT_TRUE(j["cycle"].get<bool>());
  EXPECT_EQ(j["metrics"]["stability"], "stable");
  EXPECT_GT(j["metrics"]["period"].get<double>(), 1.0);
  const auto csv = slurp(t.path() / "cycle.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,y,z");
}

TEST(Cli, CycleAbsentIsStillSuccess) {
  TempDir t;
  const auto r = run({"--system", "uniform", "--mu", "0.01", "--cost", "0.8", "--out", t.str(), "cycle"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_FALSE(nlohmann::json::parse(slurp(t.path() / "cycle.json"))["cycle"].get<bool>());
  EXPECT_FALSE(fs::exists(t.path() / "cycle.csv"));
}

TEST(Cli, PortraitWritesSvg) {
  TempDir t;
  const auto r = run({"--system", "alld_to_allc", "--mu", "0.08", "--cost", "0.04", "--out", t.str(), "portrait",
                      "--starts", "4", "--t-max", "50"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto svg = slurp(t.path() / "portrait.svg");
  EXPECT_TRUE(contains(svg, "limit-cycle"));
  EXPECT_EQ(count_of(svg, "<polyline"), 5u);
}

TEST(Cli, DiagramWritesJsonAndSvg) {
  TempDir t;
  const auto r = run({"--system", "uniform", "--out", t.str(), "diagram", "--mu-max", "0.05", "--c-max", "0.7",
                      "--grid", "5", "--resolution", "40", "--homoclinic-samples", "0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(t.path() / "diagram.json"));
  EXPECT_FALSE(j.empty());
  const auto svg = slurp(t.path() / "diagram.svg");
  EXPECT_TRUE(contains(svg, "data-region"));
  EXPECT_TRUE(contains(r.out, "BT("));
  EXPECT_TRUE(contains(r.out, "CP("));
}

TEST(Cli, HomoclinicCsv) {
  TempDir t;
  const auto r = run({"--system", "tft_to_allc", "--out", t.str(), "homoclinic", "--mu-min", "0.03", "--mu-max",
                      "0.05", "--samples", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = slurp(t.path() / "homoclinic.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(run({"--system", "tft_to_allc", "--out", t.str(), "homoclinic", "--mu-min", "0.05", "--mu-max", "0.03"})
                .code,
            kExitUsage);
}

TEST(Cli, ConjectureIsDeterministic) {
  TempDir a, b;
  for (const auto* d : {&a, &b}) {
    const auto r = run({"--seed", "9", "--out", d->str(), "conjecture", "--matrices", "2", "--grid", "2"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  const auto sa = slurp(a.path() / "conjecture.json");
  EXPECT_EQ(sa, slurp(b.path() / "conjecture.json"));
  EXPECT_EQ(nlohmann::json::parse(sa)["trials"].size(), 2u);
}
