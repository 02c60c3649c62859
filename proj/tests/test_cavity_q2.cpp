#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ztsbm/cavity_q2.hpp"

using namespace ztsbm;

namespace {

// Brute-force Skellam tail sums straight from factorial-form Poisson pmfs;
// the map implementations never see this code path.
struct TailOracle {
  double p0, pos, neg;
};

TailOracle skellam_tails_oracle(long double l1, long double l2) {
  const auto pois = [](long double lam, int k) {
    long double fact = 1.0L;
    for (int i = 2; i <= k; ++i) fact *= i;
    return std::exp(-lam) * std::pow(lam, k) / fact;
  };
  const auto pmf = [&](int k) {
    long double sum = 0.0L;
    for (int j = 0; j < 250; ++j) {
      const int i = k + j;
      if (i < 0) continue;
      sum += pois(l1, i) * pois(l2, j);
    }
    return sum;
  };
  TailOracle t{static_cast<double>(pmf(0)), 0.0, 0.0};
  long double pos = 0.0L, neg = 0.0L;
  for (int k = 1; k < 120; ++k) pos += pmf(k);
  for (int k = -1; k > -120; --k) neg += pmf(k);
  t.pos = static_cast<double>(pos);
  t.neg = static_cast<double>(neg);
  return t;
}

}  // namespace

TEST_CASE("q2 parameter and state validation") {
  CHECK_THROWS_AS(Q2Params(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Q2Params(4.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(Q2Params(4.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(Q2State(0.5, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(Q2State(0.0, 1.2), std::invalid_argument);
}

TEST_CASE("vote-count means") {
  // symmetric state: both means c/2
  {
    const auto [l1, l2] = lambdas_q2({4.0, 3.0}, {0.0, 1.0});
    CHECK_THAT(l1, Catch::Matchers::WithinAbs(2.0, 1e-14));
    CHECK_THAT(l2, Catch::Matchers::WithinAbs(2.0, 1e-14));
  }
  // perfect state with all-internal links
  {
    const auto [l1, l2] = lambdas_q2({4.0, 4.0}, {1.0, 1.0});
    CHECK_THAT(l1, Catch::Matchers::WithinAbs(4.0, 1e-14));
    CHECK(l2 == 0.0);
  }
  // generic point: the two linear identities pin both values
  {
    const Q2Params p{4.0, 2.0};
    const Q2State s{0.5, 0.8};
    const auto [l1, l2] = lambdas_q2(p, s);
    CHECK_THAT(l1, Catch::Matchers::WithinAbs(2.1, 1e-14));
    CHECK_THAT(l2, Catch::Matchers::WithinAbs(1.1, 1e-14));
    CHECK_THAT(l1 + l2, Catch::Matchers::WithinAbs(p.c * s.q_tilde, 1e-13));
    CHECK_THAT(l1 - l2, Catch::Matchers::WithinAbs(p.delta * s.m, 1e-13));
  }
}

TEST_CASE("no-tiebreak map against convolution oracle") {
  // odd series vanishes at m = 0
  for (double qt : {0.3, 0.8, 1.0}) {
    const auto img = rhs_no_tiebreak({5.0, 3.0}, {0.0, qt});
    CHECK(img.m == 0.0);
  }
  // degenerate paramagnetic input is the exact limit
  {
    const auto img = rhs_no_tiebreak({5.0, 3.0}, {0.0, 0.0});
    CHECK(img.m == 0.0);
    CHECK(img.q_tilde == 0.0);
  }
  // all links internal, perfect state: lambda_2 = 0
  {
    const auto img = rhs_no_tiebreak({4.0, 4.0}, {1.0, 1.0});
    CHECK_THAT(img.m,
               Catch::Matchers::WithinAbs(1.0 - std::exp(-4.0), 1e-13));
    CHECK_THAT(img.q_tilde,
               Catch::Matchers::WithinAbs(1.0 - std::exp(-4.0), 1e-13));
  }
  // generic state
  {
    const auto img = rhs_no_tiebreak({4.0, 2.0}, {0.5, 0.8});
    const auto o = skellam_tails_oracle(2.1L, 1.1L);
    CHECK_THAT(img.m, Catch::Matchers::WithinAbs(o.pos - o.neg, 1e-12));
    CHECK_THAT(img.q_tilde, Catch::Matchers::WithinAbs(1.0 - o.p0, 1e-12));
  }
}

TEST_CASE("no-tiebreak map: skellam and bessel routes agree") {
  const Q2Params p{6.0, 4.0};
  for (double m : {0.0, 0.1, 0.45, 0.7}) {
    for (double qt : {0.75, 0.9, 1.0}) {
      const auto a = rhs_no_tiebreak(p, {m, qt});
      const auto b = rhs_no_tiebreak_bessel(p, {m, qt});
      CHECK_THAT(a.m, Catch::Matchers::WithinAbs(b.m, 1e-10));
      CHECK_THAT(a.q_tilde, Catch::Matchers::WithinAbs(b.q_tilde, 1e-10));
      // 1 - q_tilde' is exactly the Skellam mass at zero
      const auto [l1, l2] = lambdas_q2(p, {m, qt});
      CHECK_THAT(1.0 - a.q_tilde,
                 Catch::Matchers::WithinAbs(skellam_pmf({l1, l2}, 0), 1e-12));
    }
  }
}

TEST_CASE("maps are odd in the magnetization") {
  const Q2Params p{7.0, 4.5};
  for (double m : {0.05, 0.3, 0.6}) {
    for (double qt : {0.8, 1.0}) {
      const auto up = rhs_no_tiebreak(p, {m, qt});
      const auto dn = rhs_no_tiebreak(p, {-m, qt});
      CHECK_THAT(up.m, Catch::Matchers::WithinAbs(-dn.m, 1e-13));
      CHECK_THAT(up.q_tilde, Catch::Matchers::WithinAbs(dn.q_tilde, 1e-13));
    }
    CHECK_THAT(rhs_tiebreak_m(p, m),
               Catch::Matchers::WithinAbs(-rhs_tiebreak_m(p, -m), 1e-13));
  }
  CHECK(rhs_tiebreak_m(p, 0.0) == 0.0);
}

TEST_CASE("tiebreak map against convolution oracle") {
  // lambda_2 = 0: the margin is a plain Poisson(4)
  CHECK_THAT(rhs_tiebreak_m({4.0, 4.0}, 1.0),
             Catch::Matchers::WithinAbs(1.0 - std::exp(-4.0), 1e-13));
  // generic point
  {
    const auto o = skellam_tails_oracle(6.5L, 3.5L);  // (10 + 6*0.5)/2, ...
    CHECK_THAT(rhs_tiebreak_m({10.0, 6.0}, 0.5),
               Catch::Matchers::WithinAbs(o.pos - o.neg, 1e-12));
  }
  // dual-route agreement
  for (double m : {0.0, 0.2, 0.5, 0.9}) {
    for (double c : {2.0, 10.0, 40.0}) {
      const Q2Params p{c, 0.6 * c};
      CHECK_THAT(rhs_tiebreak_m(p, m),
                 Catch::Matchers::WithinAbs(rhs_tiebreak_m_bessel(p, m), 1e-10));
    }
  }
}

TEST_CASE("tiebreak linearization slope") {
  for (double c : {2.0, 5.0, 15.0}) {
    for (double delta : {0.5 * c, 0.9 * c}) {
      const Q2Params p{c, delta};
      const double h = 1e-6;
      const double fd =
          (rhs_tiebreak_m(p, h) - rhs_tiebreak_m(p, -h)) / (2.0 * h);
      CHECK_THAT(fd, Catch::Matchers::WithinAbs(tiebreak_slope_at_zero(p), 1e-6));
    }
  }
}

TEST_CASE("edwards-anderson solver") {
  CHECK(solve_q_tilde(1e-4) == 0.0);
  CHECK(solve_q_tilde(0.9) == 0.0);

  const double q4 = solve_q_tilde(4.0);
  REQUIRE(q4 > 0.0);
  CHECK(std::abs((1.0 - q4) - bessel_i_scaled(0, 4.0 * q4)) < 1e-12);

  // monotone in c on a grid
  double prev = 0.0;
  for (double c : {1.2, 2.0, 4.0, 10.0, 25.0, 50.0}) {
    const double qt = solve_q_tilde(c);
    CHECK(qt > prev);
    prev = qt;
  }
  CHECK(solve_q_tilde(10.0) > q4);
}

TEST_CASE("detection thresholds") {
  CHECK_FALSE(threshold_no_tiebreak(0.5).has_value());
  CHECK_FALSE(threshold_no_tiebreak(1.0).has_value());

  const auto d4 = threshold_no_tiebreak(4.0);
  REQUIRE(d4.has_value());
  CHECK(*d4 < 4.0);

  // crossing point delta_c = c
  const double cross = tiebreak_threshold_crossing();
  CHECK_THAT(cross, Catch::Matchers::WithinAbs(1.84943254, 1e-6));
  CHECK_THAT(threshold_tiebreak(cross),
             Catch::Matchers::WithinAbs(cross, 1e-9));

  // large-c asymptote
  CHECK_THAT(threshold_tiebreak(1000.0) / std::sqrt(1000.0),
             Catch::Matchers::WithinAbs(std::sqrt(M_PI / 2.0), 0.05));

  // tiebreaking threshold sits above the no-tiebreak one everywhere
  for (int i = 0; i <= 40; ++i) {
    const double c = 1.1 + i * (50.0 - 1.1) / 40.0;
    const auto nt = threshold_no_tiebreak(c);
    REQUIRE(nt.has_value());
    CHECK(threshold_tiebreak(c) >= *nt);
  }
}

TEST_CASE("damped iteration finds the magnetized branch only above threshold") {
  for (double c : {4.0, 10.0}) {
    const double dc = threshold_tiebreak(c);
    const auto above = tiebreak_fixed_point({c, std::min(c, dc * 1.05)});
    CHECK(above.m > 0.01);
    CHECK(std::abs(above.residual) < 1e-10);
    const auto below = tiebreak_fixed_point({c, dc * 0.95});
    CHECK(std::abs(below.m) < 1e-6);
  }
}
