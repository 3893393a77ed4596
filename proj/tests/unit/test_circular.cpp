#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "circphase/circular.hpp"
#include "circphase/error.hpp"

using namespace circphase;

TEST_CASE("wrap_two_pi reduces into [0, 2pi)") {
  CHECK(wrap_two_pi(0.0) == 0.0);
  CHECK(wrap_two_pi(kTwoPi) == doctest::Approx(0.0));
  CHECK(wrap_two_pi(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_two_pi(7 * kTwoPi + 1.0) == doctest::Approx(1.0));
  CHECK(wrap_two_pi(-1e-18) < kTwoPi);
  CHECK_THROWS_AS(wrap_two_pi(NAN), Error);
}

TEST_CASE("encode and decode round trip") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int i = 0; i < 10000; ++i) {
    const double theta = u(gen);
    const EncodedTarget e = encode_phase(theta);
    CHECK(oracle::angular_distance(decode_phase(e.y_sin, e.y_cos), theta) < 1e-12);
  }
  const EncodedTarget z = encode_phase(0.0);
  CHECK(z.y_sin == 0.0);
  CHECK(z.y_cos == 1.0);
  CHECK(decode_phase(1.0, 0.0) == doctest::Approx(kTwoPi / 4));
  CHECK(decode_phase(-1.0, 0.0) == doctest::Approx(3 * kTwoPi / 4));
  CHECK(decode_phase(0.0, -1.0) == doctest::Approx(kTwoPi / 2));
}

TEST_CASE("decode ignores vector length") {
  for (double c : {1e-6, 1.0, 1e6}) {
    CHECK(decode_phase(0.3 * c, -0.7 * c) == decode_phase(0.3, -0.7));
  }
  CHECK(decode_phase(0.5, 0.5) == doctest::Approx(kTwoPi / 8));
}

TEST_CASE("zero vector") {
  CHECK_THROWS_AS(decode_phase(0.0, 0.0), Error);
  bool zero = false;
  CHECK(decode_phase_or_zero(0.0, 0.0, zero) == 0.0);
  CHECK(zero);
  decode_phase_or_zero(1.0, 0.0, zero);
  CHECK_FALSE(zero);
}

TEST_CASE("hour conversion") {
  CHECK(phase_to_hours(kTwoPi) == doctest::Approx(24.0));
  CHECK(hours_to_phase(6.0) == doctest::Approx(kTwoPi / 4));
}

TEST_CASE("wrapped error takes the short way round") {
  CHECK(phase_to_hours(wrapped_abs_error(hours_to_phase(23.5), hours_to_phase(0.5))) == doctest::Approx(1.0));
  CHECK(wrapped_abs_error_hours(hours_to_phase(23.5), hours_to_phase(0.5)) == 1.0);
  CHECK(wrapped_abs_error_hours(hours_to_phase(0.5), hours_to_phase(23.5)) == 1.0);
  CHECK(wrapped_abs_error_hours(0.0, kTwoPi / 2) == 12.0);
  CHECK(wrapped_abs_error(0.1, kTwoPi - 0.1) == doctest::Approx(0.2));
  CHECK(wrapped_abs_error(1.0, 1.0) == 0.0);
  CHECK(wrapped_abs_error(0.0, kTwoPi / 2) == doctest::Approx(kTwoPi / 2));
}

TEST_CASE("circular moments match a direct sum") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-10.0, 20.0);
  std::vector<double> p(500), r(500);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = u(gen);
    r[i] = u(gen);
  }
  for (double q : {0.5, 1.0, 2.0, 3.0}) {
    CHECK(circular_moment(p, r, q) == doctest::Approx(oracle::circular_moment(p, r, q)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(circular_moment(p, std::vector<double>(3), 1.0), Error);
  CHECK_THROWS_AS(circular_moment(std::vector<double>{}, std::vector<double>{}, 1.0), Error);
  CHECK_THROWS_AS(circular_moment(p, r, 0.0), Error);
}

TEST_CASE("metrics report") {
  const std::vector<double> ref{0.0, 0.0, 0.0, 0.0};
  const std::vector<double> pred{hours_to_phase(0.5), hours_to_phase(1.0), hours_to_phase(2.0), hours_to_phase(21.0)};
  const MetricsReport m = metrics_report(pred, ref);
  CHECK(m.n == 4);
  CHECK(m.cmae_hours == doctest::Approx((0.5 + 1.0 + 2.0 + 3.0) / 4));
  CHECK(m.within_1h == doctest::Approx(0.5));  // 1.0 h counts as within
  CHECK(m.within_2h == doctest::Approx(0.75));
  CHECK(m.xi.at(1) == doctest::Approx(hours_to_phase(m.cmae_hours)));
  CHECK(m.xi.count(2) == 1);
}
