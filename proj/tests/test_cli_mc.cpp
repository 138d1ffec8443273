#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "riesz/lab.hpp"

using namespace riesz;

namespace {

struct Outcome {
  int rc;
  std::string out, err;
  Json json() const { return Json::parse(out); }
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "riesz_lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = lab::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str(), err.str()};
}

std::string temp_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("riesz_test_" + name);
  std::filesystem::remove_all(d);
  return d.string();
}

McConfig small(std::uint64_t seed) {
  McConfig c;
  c.seed = seed;
  c.replicas = 4;
  c.paths = 20000;
  return c;
}

}  // namespace

TEST(Cli, GreenAtRoot) {
  const auto o = run({"kernels", "--q", "2", "--green", "o", "o"});
  ASSERT_EQ(o.rc, 0) << o.err;
  EXPECT_EQ(o.json()["results"]["queries"][0]["value"]["exact"], "2");
}

TEST(Cli, VerifyGreenTheorem) {
  const auto o = run({"verify", "--theorem", "green", "--q", "2", "--ends", "0:(0)", "--t", "1/4"});
  ASSERT_EQ(o.rc, 0) << o.err;
  EXPECT_TRUE(o.json()["pass"].get<bool>());
}

TEST(Cli, EmptyConfigIsInvalid) {
  EXPECT_EQ(run({"verify"}).rc, 2);
  const std::string path = temp_dir("empty.cfg");
  std::ofstream(path) << "# nothing here\n";
  EXPECT_EQ(run({"kernels", "--config", path}).rc, 2);
}

TEST(Cli, BadValuesAreInvalid) {
  EXPECT_EQ(run({"kernels", "--q", "1", "--green", "o", "o"}).rc, 2);
  EXPECT_EQ(run({"kernels", "--q", "2", "--green", "o", "7"}).rc, 2);
  EXPECT_EQ(run({"verify", "--theorem", "green", "--q", "2", "--ends", "0:(0)", "--t", "2"}).rc, 2);
  EXPECT_EQ(run({"nosuch"}).rc, 2);
}

TEST(Cli, FailedCheckExitsOne) {
  // bounded u cannot satisfy the lower bound of the converse
  const auto o = run({"verify", "--theorem", "converse", "--q", "2", "--ends", "o:(0)", "--psi", "power", "1", "1", "--u",
                      "constant", "--radius", "6"});
  EXPECT_EQ(o.rc, 1);
}

TEST(Config, ParseRules) {
  std::istringstream ok("q = 3  # comment\nt = 1/9\n\n");
  const auto c = lab::Config::parse(ok);
  EXPECT_EQ(c.get("q"), "3");
  std::istringstream dup("q = 3\nq = 2\n");
  EXPECT_THROW(lab::Config::parse(dup), Error);
  std::istringstream unknown("colour = red\n");
  EXPECT_THROW(lab::Config::parse(unknown), Error);
  std::istringstream empty("q =\n");
  EXPECT_THROW(lab::Config::parse(empty), Error);
}

TEST(Config, HashIgnoresOutput) {
  lab::Config a, b;
  a.set("q", "2");
  b.set("q", "2");
  b.set("out", "/tmp/x");
  EXPECT_EQ(a.hash(), b.hash());
  b.set("t", "1/4");
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Cli, OutputsAndDeterminism) {
  const std::vector<std::string> args{"simulate", "--mc-target", "cylinder", "--q", "2", "--x", "o", "--y", "0",
                                      "--mc-paths", "5000", "--mc-replicas", "4"};
  auto with_out = args;
  const std::string dir = temp_dir("sim");
  with_out.insert(with_out.end(), {"--out", dir});
  const auto a = run(with_out);
  ASSERT_EQ(a.rc, 0) << a.err;
  EXPECT_TRUE(std::filesystem::exists(dir + "/report.json"));
  setenv("RIESZ_LAB_THREADS", "3", 1);
  const auto b = run(with_out);
  unsetenv("RIESZ_LAB_THREADS");
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.json()["config_hash"], run(args).json()["config_hash"]);
}

TEST(MonteCarlo, SeedsAreDistinct) {
  EXPECT_NE(replica_seed(1, 0), replica_seed(1, 1));
  EXPECT_NE(replica_seed(1, 0), replica_seed(2, 0));
  EXPECT_EQ(replica_seed(7, 3), replica_seed(7, 3));
}

TEST(MonteCarlo, CylinderMeasure) {
  const TreeParams p(2);
  EXPECT_TRUE(srw_cylinder_measure(p, Vertex(), Vertex::parse("1"), small(1)).covers(1.0 / 3));
  EXPECT_TRUE(srw_cylinder_measure(p, Vertex::parse("0/1"), Vertex::parse("0/1"), small(2)).covers(2.0 / 3));
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResult) {
  const TreeParams p(3);
  auto c1 = small(3), c4 = small(3);
  c4.threads = 4;
  const auto a = srw_expected_visits(p, Vertex(), Vertex::parse("1"), c1, nullptr);
  const auto b = srw_expected_visits(p, Vertex(), Vertex::parse("1"), c4, nullptr);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.variance, b.variance);
  EXPECT_TRUE(a.covers(to_double(green(Vertex(), Vertex::parse("1"), p))));
}

TEST(MonteCarlo, WeightedVisits) {
  const ConductanceTree t(TreeParams(2), {{Vertex::parse("0"), Rational(10)}});
  const auto est = weighted_visits(t, Vertex(), Vertex(), small(4));
  EXPECT_TRUE(est.covers(44.0 / 7));
  const auto hit = weighted_hit(t, Vertex::parse("0"), Vertex(), small(5));
  EXPECT_TRUE(hit.covers(10.0 / 11));
}

TEST(MonteCarlo, WalkOnSpheres) {
  const auto full = wos_harmonic_measure(0.0, {{0.0, std::numbers::pi / 2}}, small(6));
  EXPECT_TRUE(full.covers(0.25));
  const auto none = wos_truncated_green_disk(0.5, {}, 0.1, small(7));
  EXPECT_NEAR(none.mean, std::log(2.0), 1e-12);
  const auto cut = wos_truncated_green_disk(-0.3, {1.0}, 0.05, small(8));
  EXPECT_GE(cut.mean + 3 * cut.ci99, std::log(1 / 0.3) / 18);
  EXPECT_LE(cut.mean - 3 * cut.ci99, std::log(1 / 0.3));
}
