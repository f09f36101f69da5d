#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "citequant/errors.hpp"
#include "citequant/model.hpp"

using namespace citequant;

namespace {

FittedQuantileModel tiny_model(double c, double beta, double gamma) {
  FittedQuantileModel m;
  m.spec.quantile_grid = {0.5, 0.8, 0.95};
  m.coefficients = {{0.5, c, beta, gamma},
                    {0.8, c + 0.3, beta, gamma},
                    {0.95, c + 0.9, beta, gamma}};
  return m;
}

}  // namespace

TEST_CASE("quantile grid is built from decimal endpoints without drift") {
  auto grid = make_quantile_grid(0.50, 0.99, 0.01);
  REQUIRE(grid.size() == 50);
  CHECK(grid.front() == 0.5);
  CHECK(grid.back() == 0.99);
  // every point is the double closest to its two-digit decimal
  CHECK(grid[7] == 0.57);
  CHECK(grid[31] == 0.81);

  auto coarse = make_quantile_grid(0.1, 0.9, 0.2);
  REQUIRE(coarse.size() == 5);
  CHECK(coarse[2] == 0.5);
}

TEST_CASE("grid bounds are validated") {
  CHECK_THROWS_AS(make_quantile_grid(0.9, 0.5, 0.1), InvalidSpec);
  CHECK_THROWS_AS(make_quantile_grid(0.5, 0.9, 0.0), InvalidSpec);
  CHECK_THROWS_AS(make_quantile_grid(0.5, 0.9, -0.1), InvalidSpec);
}

TEST_CASE("spec validation rejects bad fields") {
  ModelSpec spec;
  spec.quantile_grid = {0.5};
  CHECK_NOTHROW(validate_spec(spec));

  spec.k0 = 0.0;
  CHECK_THROWS_AS(validate_spec(spec), InvalidSpec);
  spec.k0 = 0.5;

  spec.response_offset = -1.0;
  CHECK_THROWS_AS(validate_spec(spec), InvalidSpec);
  spec.response_offset = 1.0;

  spec.quantile_grid = {0.5, 0.5};
  CHECK_THROWS_AS(validate_spec(spec), InvalidSpec);
  spec.quantile_grid = {0.5, 0.4};
  CHECK_THROWS_AS(validate_spec(spec), InvalidSpec);
  spec.quantile_grid = {0.0, 0.5};
  CHECK_THROWS_AS(validate_spec(spec), InvalidSpec);
  spec.quantile_grid.clear();
  CHECK_THROWS_AS(validate_spec(spec), InvalidSpec);
}

TEST_CASE("grid lookup is exact") {
  auto m = tiny_model(0.0, 1.0, 1.0);
  CHECK(m.grid_index(0.8) == 1);
  CHECK_THROWS_AS(m.grid_index(0.81), UnknownQuantile);
  CHECK_THROWS_AS(m.grid_index(0.8 + 1e-12), UnknownQuantile);
}

TEST_CASE("prediction reproduces the closed form") {
  // C=0, beta=1, gamma=1, k0=0.5, offset=1: q(p|IF=2, c1=1) = 2*1.5 - 1 = 2
  auto m = tiny_model(0.0, 1.0, 1.0);
  CHECK(predict_quantile(m, 0.5, 2.0, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(predict_quantile_pre_offset(m, 0.5, 2.0, 1.0) ==
        doctest::Approx(3.0).epsilon(1e-12));

  // zero coefficients silence their covariate entirely
  auto if_only = tiny_model(1.0, 0.5, 0.0);
  double q1 = predict_quantile(if_only, 0.5, 3.0, 1.0);
  double q2 = predict_quantile(if_only, 0.5, 3.0, 999.0);
  CHECK(q1 == q2);
}

TEST_CASE("impact factor is floored, not rejected, at zero") {
  auto m = tiny_model(0.0, 1.0, 0.0);
  double at_zero = predict_quantile(m, 0.5, 0.0, 1.0);
  double at_floor = predict_quantile(m, 0.5, m.spec.if_floor, 1.0);
  CHECK(at_zero == at_floor);
  CHECK(at_zero > 0.0 - 1e-15);
}

TEST_CASE("covariate validation") {
  auto m = tiny_model(0.0, 1.0, 1.0);
  CHECK_THROWS_AS(predict_quantile(m, 0.5, -1.0, 1.0), InvalidCovariate);
  CHECK_THROWS_AS(predict_quantile(m, 0.5, 1.0, -2.0), InvalidCovariate);
  CHECK_THROWS_AS(predict_quantile(m, 0.5, std::nan(""), 1.0), InvalidCovariate);
}

TEST_CASE("negative pre-offset predictions clamp to zero") {
  auto m = tiny_model(-5.0, 0.0, 0.0);  // exp(-5) - 1 < 0
  CHECK(predict_quantile(m, 0.5, 1.0, 1.0) == 0.0);
}

TEST_CASE("monotone curve is the running maximum") {
  // force a crossing: drop the intercept at p=0.8
  FittedQuantileModel m;
  m.spec.quantile_grid = {0.5, 0.8, 0.95};
  m.coefficients = {{0.5, 2.0, 0.0, 0.0}, {0.8, 1.5, 0.0, 0.0}, {0.95, 2.5, 0.0, 0.0}};
  auto curve = predict_conditional_cdf(m, 1.0, 1.0);
  REQUIRE(curve.size() == 3);
  CHECK(curve[1].first == curve[0].first);  // held flat through the dip
  CHECK(curve[2].first > curve[1].first);
  CHECK(predict_quantile_monotone(m, 0.8, 1.0, 1.0) == curve[1].first);
  // raw prediction still shows the dip
  CHECK(predict_quantile(m, 0.8, 1.0, 1.0) < predict_quantile(m, 0.5, 1.0, 1.0));
}

TEST_CASE("normalized models consume and produce count units") {
  auto m = tiny_model(0.0, 1.0, 1.0);
  NormalizationConstants c;
  c.mean_c1 = 2.0;
  c.mean_if = 4.0;
  c.mean_c_future = 10.0;
  m.normalization = c;

  // manual: IF 8 -> 2, c1 4 -> 2; exp(ln 2 + ln 2.5) = 5; minus offset -> 4;
  // back to counts -> 40
  CHECK(predict_quantile(m, 0.5, 8.0, 4.0) == doctest::Approx(40.0).epsilon(1e-12));

  // the fit-scale entry point skips the stored constants
  CHECK(predict_quantile_fit_scale(m, 0.5, 2.0, 2.0) ==
        doctest::Approx(4.0).epsilon(1e-12));

  SUBCASE("impact factor left raw when if_normalized is off") {
    m.normalization->if_normalized = false;
    CHECK(predict_quantile(m, 0.5, 2.0, 4.0) == doctest::Approx(40.0).epsilon(1e-12));
  }
}

TEST_CASE("model JSON round trip is bit exact") {
  auto m = tiny_model(0.123456789012345678, 0.7000000000000001, 0.6);
  m.diagnostics = {{0.5, 1.25, 0.4999, 3}, {0.8, 0.75, 0.8001, 2}, {0.95, 0.25, 0.95, 1}};
  NormalizationConstants c;
  c.mean_c1 = 3.1400000000000001;
  c.mean_if = 1.0 / 3.0;
  c.mean_c_future = 17.0;
  c.cohort_label = "phys \"1984\"\n";
  m.normalization = c;

  auto text = model_to_json(m);
  auto back = model_from_json(text);
  REQUIRE(back.coefficients.size() == m.coefficients.size());
  for (std::size_t i = 0; i < m.coefficients.size(); ++i) {
    CHECK(back.coefficients[i].p == m.coefficients[i].p);
    CHECK(back.coefficients[i].c == m.coefficients[i].c);
    CHECK(back.coefficients[i].beta == m.coefficients[i].beta);
    CHECK(back.coefficients[i].gamma == m.coefficients[i].gamma);
  }
  REQUIRE(back.normalization.has_value());
  CHECK(back.normalization->mean_if == c.mean_if);
  CHECK(back.normalization->cohort_label == c.cohort_label);
  REQUIRE(back.diagnostics.size() == 3);
  CHECK(back.diagnostics[1].n_zero_residuals == 2);

  // serialization itself is deterministic
  CHECK(model_to_json(back) == text);
}

TEST_CASE("model JSON rejects malformed input") {
  CHECK_THROWS_AS(model_from_json("not json"), ParseError);
  CHECK_THROWS_AS(model_from_json("{}"), ParseError);
  // grid and coefficients out of step
  auto m = tiny_model(0.0, 1.0, 1.0);
  auto text = model_to_json(m);
  auto pos = text.find("\"p\": 0.8");
  REQUIRE(pos != std::string::npos);
  auto broken = text;
  broken.replace(pos, 8, "\"p\": 0.7");
  CHECK_THROWS_AS(model_from_json(broken), Error);
}

TEST_CASE("variant names round trip") {
  for (auto v : {Variant::if_only, Variant::c1_only, Variant::full}) {
    CHECK(variant_from_name(variant_name(v)) == v);
  }
  CHECK_THROWS_AS(variant_from_name("both"), InvalidSpec);
}
