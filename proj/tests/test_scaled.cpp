#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "spreadcert/scaled.hpp"

using spreadcert::ScaledValue;

TEST_CASE("round trip through doubles") {
  for (double v : {0.0, 1.0, -3.25, 6.02e23, -1.7e-300, 12345.678}) {
    CHECK(ScaledValue::from_double(v).to_double() == v);
  }
}

TEST_CASE("mantissa stays normalized") {
  ScaledValue v(1536.0, -4);
  CHECK(std::fabs(v.mantissa) >= 0.5);
  CHECK(std::fabs(v.mantissa) < 1.0);
  CHECK(v.to_double() == 96.0);
}

TEST_CASE("arithmetic across huge exponent ranges") {
  ScaledValue big(0.75, 2000);
  ScaledValue small(0.5, -2000);
  ScaledValue sum = big + small;
  CHECK(sum.mantissa == big.mantissa);
  CHECK(sum.exp2 == big.exp2);

  ScaledValue prod = big * small;
  CHECK(prod.log2_abs() == Catch::Approx(std::log2(0.375)).margin(1e-12));

  CHECK(big > small);
  CHECK(small < big);
  CHECK((big - big).is_zero());
}

TEST_CASE("integer powers and roots") {
  ScaledValue v = ScaledValue::from_double(3.0);
  CHECK(v.pow_int(5).to_double() == Catch::Approx(243.0));
  CHECK(v.pow_int(0).to_double() == 1.0);

  ScaledValue huge(0.9, 900);  // far beyond double range
  ScaledValue r = huge.pow_int(3).root(3);
  CHECK(r.log2_abs() == Catch::Approx(huge.log2_abs()).epsilon(1e-12));

  CHECK_THROWS_AS(ScaledValue::from_double(-2.0).root(2), spreadcert::DomainError);
}

TEST_CASE("relative gap") {
  ScaledValue a = ScaledValue::from_double(1.0);
  ScaledValue b = ScaledValue::from_double(1.0 + 1e-9);
  CHECK(ScaledValue::relative_gap(a, b) == Catch::Approx(1e-9).epsilon(1e-3));
  CHECK(ScaledValue::relative_gap(a, a) == 0.0);
  CHECK(ScaledValue::relative_gap(ScaledValue(), ScaledValue()) == 0.0);
}

TEST_CASE("negative values order correctly") {
  ScaledValue neg = ScaledValue::from_double(-5.0);
  ScaledValue pos = ScaledValue::from_double(2.0);
  CHECK(neg < pos);
  CHECK((-pos) < pos);
  CHECK(neg.is_negative());
}
