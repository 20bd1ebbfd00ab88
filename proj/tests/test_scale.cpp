#include <doctest.h>

#include <cmath>

#include "idbr/rng.hpp"
#include "idbr/scale.hpp"

using namespace idbr;

TEST_SUITE("scale") {

TEST_CASE("0-10 scale arithmetic") {
  const ScaleSpec s(0, 10, 1);
  CHECK(s.levels() == 11);
  CHECK(s.h() == doctest::Approx(1.0 / 11));
  CHECK(to_reduced(0, s) == 1.0 / 11);
  CHECK(to_reduced(10, s) == 1.0);
  CHECK(to_reduced(5, s) == 6.0 / 11);
  CHECK(from_reduced(1.0, s) == 10.0);
  CHECK(from_reduced(1.0 / 11, s) == 0.0);
  CHECK(from_reduced(6.0 / 11, s) == 5.0);
  CHECK(grid_index(1.0 / 11, s) == 1);
  CHECK(grid_index(1.0, s) == 11);
  CHECK(grid_index(6.0 / 11, s) == 6);
}

TEST_CASE("off-grid values are rejected with the value and row") {
  const ScaleSpec s(0, 10, 1);
  CHECK_THROWS_AS(to_reduced(11, s), ValidationError);
  CHECK_THROWS_AS(to_reduced(2.5, s), ValidationError);
  CHECK_THROWS_AS(from_reduced(0.0, s), ValidationError);
  CHECK_THROWS_AS(grid_index(0.5, s), ValidationError);
  try {
    to_reduced(11, s, 7);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("11") != std::string::npos);
    CHECK(msg.find("row 7") != std::string::npos);
  }
}

TEST_CASE("values within grid tolerance snap to the grid") {
  const ScaleSpec s(0, 1, 0.1);
  CHECK(s.levels() == 11);
  CHECK(to_reduced(0.30000000000000004, s) == 4.0 / 11);
  CHECK(grid_index(4.0 / 11 + 1e-14, s) == 4);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(ScaleSpec(0, 10, 0), ValidationError);
  CHECK_THROWS_AS(ScaleSpec(0, 10, 3), ValidationError);
  CHECK_THROWS_AS(ScaleSpec(5, 5, 1), ValidationError);
  CHECK_THROWS_AS(ScaleSpec(0, 10, 1, 10.5), ValidationError);
  CHECK_THROWS_AS(ScaleSpec(1, 3, 1, std::nullopt, {"a", "b"}), ValidationError);
}

TEST_CASE("inflated level and labels") {
  const ScaleSpec s(1, 5, 1, 3.0, {"never", "rarely", "sometimes", "often", "always"});
  REQUIRE(s.inflated_k().has_value());
  CHECK(*s.inflated_k() == 3);
  CHECK(s.label(3) == "sometimes");
  CHECK(s.original(3) == 3.0);
  const ScaleSpec t(0, 10, 1, 0.0);
  CHECK(*t.inflated_k() == 1);
  CHECK(t.label(11) == "10");
}

TEST_CASE("round trip on random scales and strict monotonicity") {
  RngState rng(99, 0);
  for (int t = 0; t < 1000; ++t) {
    const double a = std::round(-50 + 100 * draw_uniform(rng)) / 4.0;
    const double h_star = std::vector<double>{0.1, 0.25, 0.5, 1.0, 2.0, 5.0}[static_cast<std::size_t>(t % 6)];
    const int levels = 2 + static_cast<int>(draw_uniform(rng) * 30);
    const double b = a + (levels - 1) * h_star;
    const ScaleSpec s(a, b, h_star);
    REQUIRE(s.levels() == levels);
    double prev = -1.0;
    for (int k = 1; k <= levels; ++k) {
      const double y_star = a + (k - 1) * h_star;
      const double y = to_reduced(y_star, s);
      CHECK(y > prev);
      prev = y;
      CHECK(std::fabs(y - static_cast<double>(k) / levels) < 1e-12);
      CHECK(std::fabs(from_reduced(y, s) - y_star) <= 1e-9 * std::max(1.0, std::fabs(y_star)));
      CHECK(grid_index(y, s) == k);
    }
  }
}

}  // TEST_SUITE
