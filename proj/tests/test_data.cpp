#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "sosekf/data.hpp"
#include "sosekf/linalg.hpp"
#include "sosekf/rng.hpp"

using namespace sosekf;

namespace {

StreamSpec sphere_spec(int n, int d, double radius, std::uint64_t seed) {
  StreamSpec spec;
  spec.n = n;
  spec.d = d;
  spec.scheme = Scheme::kWellspecified;
  spec.theta_true = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  spec.feature_law = FeatureLaw::kUniformSphere;
  spec.radius = radius;
  spec.seed = seed;
  return spec;
}

std::filesystem::path temp_csv(const std::string& stem) {
  return std::filesystem::temp_directory_path() / (stem + ".csv");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("stream spec validation rejects bad configurations") {
  StreamSpec spec = sphere_spec(10, 2, 1.0, 0);
  CHECK_NOTHROW(spec.validate());

  StreamSpec bad = spec;
  bad.n = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.d = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.theta_true.reset();
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.theta_true = Vector::Zero(3);  // d = 2
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.radius = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.scheme = Scheme::kFixedReplay;
  CHECK_THROWS_AS(bad.validate(), ConfigError);  // empty fixed_list
}

TEST_CASE("splitmix64 matches the published reference sequence") {
  // First outputs for seed 0 from the reference implementation.
  SplitMix64 rng(0);
  CHECK(rng.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng.next_u64() == 0x06c45d188009454fULL);

  SplitMix64 u(42);
  for (int i = 0; i < 1000; ++i) {
    double v = u.uniform01();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("identical specs generate bit-identical streams") {
  StreamSpec spec = sphere_spec(200, 3, 1.0, 99);
  Stream a = generate(spec);
  Stream b = generate(spec);
  REQUIRE(a.observations.size() == b.observations.size());
  for (std::size_t i = 0; i < a.observations.size(); ++i) {
    CHECK(a.observations[i].y == b.observations[i].y);
    for (int j = 0; j < spec.d; ++j) {
      CHECK(a.observations[i].x(j) == b.observations[i].x(j));
    }
  }
  CHECK(a.d_x == b.d_x);

  StreamSpec other = spec;
  other.seed = 100;
  Stream c = generate(other);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.observations.size() && !any_difference; ++i) {
    any_difference = (a.observations[i].x - c.observations[i].x).norm() > 0.0;
  }
  CHECK(any_difference);
}

TEST_CASE("generated features respect the envelope") {
  StreamSpec spec = sphere_spec(2000, 4, 1.5, 7);
  Stream stream = generate(spec);
  for (const auto& obs : stream.observations) {
    REQUIRE(obs.x.norm() <= spec.radius + 1e-12);
    REQUIRE(std::abs(obs.x.norm() - spec.radius) <= 1e-12);  // sphere surface
  }
  CHECK(stream.d_x <= spec.radius + 1e-12);

  spec.feature_law = FeatureLaw::kUniformCube;
  Stream cube = generate(spec);
  for (const auto& obs : cube.observations) {
    for (int j = 0; j < spec.d; ++j) REQUIRE(std::abs(obs.x(j)) <= spec.radius + 1e-12);
  }
}

TEST_CASE("sphere law has the expected second-moment spectrum") {
  const int n = 100000;
  const int d = 3;
  const double radius = 2.0;
  Stream stream = generate(sphere_spec(n, d, radius, 12345));
  Matrix second = Matrix::Zero(d, d);
  for (const auto& obs : stream.observations) {
    second += obs.x * obs.x.transpose();
  }
  second /= static_cast<double>(n);
  double target = radius * radius / static_cast<double>(d);
  CHECK(min_eigenvalue_sym(second) >= 0.5 * target);
  CHECK(std::abs(max_eigenvalue_sym(second) - target) <= 0.1 * target);
}

TEST_CASE("labels are a fair coin with a zero parameter") {
  const int n = 100000;
  StreamSpec spec = sphere_spec(n, 2, 1.0, 31);
  spec.theta_true = Vector::Zero(2);
  Stream stream = generate(spec);
  double mean = 0.0;
  for (const auto& obs : stream.observations) mean += obs.y;
  mean /= static_cast<double>(n);
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("a saturated margin forces every label") {
  StreamSpec spec;
  spec.n = 1000;
  spec.d = 1;
  spec.scheme = Scheme::kWellspecified;
  spec.theta_true = Vector::Constant(1, 50.0);
  spec.feature_law = FeatureLaw::kFixedList;
  spec.fixed_list.emplace_back(Vector::Constant(1, 1.0), 1);
  spec.seed = 3;
  Stream stream = gen_wellspecified(spec);
  for (const auto& obs : stream.observations) REQUIRE(obs.y == 1);
}

TEST_CASE("label frequency at a fixed feature matches the model") {
  const int n = 100000;
  StreamSpec spec;
  spec.n = n;
  spec.d = 2;
  spec.scheme = Scheme::kWellspecified;
  spec.theta_true = Vector::Zero(2);
  (*spec.theta_true)(0) = 0.8;
  spec.feature_law = FeatureLaw::kFixedList;
  Vector x(2);
  x << 1.0, -0.5;
  spec.fixed_list.emplace_back(x, 1);
  spec.seed = 77;
  Stream stream = gen_wellspecified(spec);

  double p = sigmoid(spec.theta_true->dot(x));
  int plus = 0;
  for (const auto& obs : stream.observations) plus += (obs.y == 1);
  double freq = static_cast<double>(plus) / n;
  double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(freq - p) <= 3.0 * se);
}

TEST_CASE("alternating stream cycles signed basis vectors") {
  StreamSpec spec;
  spec.n = 6;
  spec.d = 2;
  spec.scheme = Scheme::kAlternating;
  spec.radius = 1.5;
  spec.seed = 123;  // must be irrelevant
  Stream stream = gen_adversarial(spec);

  REQUIRE(stream.observations.size() == 6);
  CHECK(stream.observations[0].y == -1);
  CHECK(stream.observations[1].y == +1);
  CHECK(stream.observations[2].y == -1);
  CHECK(stream.observations[3].y == +1);

  CHECK(stream.observations[0].x(0) == 1.5);
  CHECK(stream.observations[1].x(1) == 1.5);
  CHECK(stream.observations[2].x(0) == -1.5);
  CHECK(stream.observations[3].x(1) == -1.5);
  CHECK(stream.observations[4].x(0) == 1.5);  // cycle restarts
  CHECK(stream.d_x == 1.5);                   // exact, not approximate

  spec.seed = 456;
  Stream again = gen_adversarial(spec);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(again.observations[i].y == stream.observations[i].y);
    CHECK((again.observations[i].x - stream.observations[i].x).norm() == 0.0);
  }
}

TEST_CASE("fixed replay cycles its list") {
  StreamSpec spec;
  spec.n = 7;
  spec.d = 1;
  spec.scheme = Scheme::kFixedReplay;
  spec.fixed_list.emplace_back(Vector::Constant(1, 0.5), 1);
  spec.fixed_list.emplace_back(Vector::Constant(1, -0.25), -1);
  spec.fixed_list.emplace_back(Vector::Constant(1, 1.0), 1);
  Stream stream = gen_adversarial(spec);
  REQUIRE(stream.observations.size() == 7);
  CHECK(stream.observations[3].x(0) == 0.5);
  CHECK(stream.observations[6].x(0) == 0.5);
  CHECK(stream.observations[4].y == -1);
}

TEST_CASE("generate refuses the csv scheme") {
  StreamSpec spec = sphere_spec(5, 2, 1.0, 0);
  spec.scheme = Scheme::kCsv;
  CHECK_THROWS_AS(generate(spec), ConfigError);
}

TEST_CASE("csv loading parses well-formed files") {
  auto path = temp_csv("sosekf_wellformed");
  write_file(path, "y,x1,x2\n1,0.5,-0.25\n-1,1.0,2.0\n");
  Stream stream = load_csv(path.string());
  REQUIRE(stream.observations.size() == 2);
  CHECK(stream.spec.d == 2);
  CHECK(stream.observations[0].y == 1);
  CHECK(stream.observations[0].x(1) == -0.25);
  CHECK(stream.observations[1].y == -1);
  CHECK(stream.d_x == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
  std::filesystem::remove(path);
}

TEST_CASE("csv loading maps 0/1 labels onto -1/+1") {
  auto path = temp_csv("sosekf_binary_labels");
  write_file(path, "y,x1\n0,0.5\n1,-0.5\n0,0.25\n");
  Stream stream = load_csv(path.string());
  REQUIRE(stream.observations.size() == 3);
  CHECK(stream.observations[0].y == -1);
  CHECK(stream.observations[1].y == +1);
  CHECK(stream.observations[2].y == -1);
  std::filesystem::remove(path);
}

TEST_CASE("csv round-trip preserves observations") {
  StreamSpec spec = sphere_spec(50, 3, 1.0, 2024);
  Stream original = generate(spec);
  auto path = temp_csv("sosekf_roundtrip");
  save_csv(original, path.string());
  Stream loaded = load_csv(path.string());
  REQUIRE(loaded.observations.size() == original.observations.size());
  for (std::size_t i = 0; i < original.observations.size(); ++i) {
    CHECK(loaded.observations[i].y == original.observations[i].y);
    CHECK((loaded.observations[i].x - original.observations[i].x).norm() <= 1e-12);
  }
  std::filesystem::remove(path);
}

TEST_CASE("csv loading reports parse errors with line numbers") {
  auto path = temp_csv("sosekf_bad_number");
  write_file(path, "y,x1\n1,0.5\n1,oops\n");
  try {
    load_csv(path.string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  std::filesystem::remove(path);

  path = temp_csv("sosekf_bad_width");
  write_file(path, "y,x1,x2\n1,0.5\n");
  try {
    load_csv(path.string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  std::filesystem::remove(path);

  path = temp_csv("sosekf_bad_label");
  write_file(path, "y,x1\n2,0.5\n");
  CHECK_THROWS_AS(load_csv(path.string()), ParseError);
  std::filesystem::remove(path);

  path = temp_csv("sosekf_bad_header");
  write_file(path, "label,x1\n1,0.5\n");
  CHECK_THROWS_AS(load_csv(path.string()), ParseError);
  std::filesystem::remove(path);

  path = temp_csv("sosekf_empty");
  write_file(path, "");
  CHECK_THROWS_AS(load_csv(path.string()), ParseError);
  std::filesystem::remove(path);

  path = temp_csv("sosekf_header_only");
  write_file(path, "y,x1\n");
  CHECK_THROWS_AS(load_csv(path.string()), ParseError);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_csv("/nonexistent/definitely_missing.csv"), ParseError);
}
