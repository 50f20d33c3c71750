#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "oracles.hpp"
#include "platoon/controller.hpp"

using namespace platoon;

namespace {

ControllerGains gains(double p0, double p1) { return {0.1, p0, p1}; }

struct GainCase {
  const char* name;
  double p0, p1;
  RootKind kind;
};

const GainCase kCases[] = {
    {"distinct", 0.02, 0.3, RootKind::real_distinct},
    {"repeated", 0.01, 0.2, RootKind::repeated},
    {"complex", 0.02, 0.2, RootKind::complex_pair},
};

}  // namespace

TEST(Controller, ErrorDefinitions) {
  EXPECT_NEAR(velocity_error(10.0, 8.0), 0.1 - 0.125, 1e-15);
  EXPECT_THROW(velocity_error(0.0, 8.0), Error);
  EXPECT_NEAR(time_gap_error(12.0, 10.0, 1.74), 0.26, 1e-12);
  EXPECT_NEAR(time_gap_error_slope(8.0, 10.0, 0.01), 0.125 - 0.1 - 0.01, 1e-15);
}

TEST(Controller, LeadControlExamples) {
  EXPECT_NEAR(lead_control(20.0, 0.02, 0.0, {0.1, 0.01, 0.2}), 16.0, 1e-12);
  EXPECT_NEAR(lead_control(10.0, 0.01, 0.001, {0.1, 0.01, 0.2}), 0.0, 1e-12);
}

TEST(Controller, FollowerControlExample) {
  const ErrorState err{0.0, 0.5, 0.0};
  EXPECT_NEAR(follower_control({5.0, 10.0}, 10.0, 1.0, err, 0.0, {0.1, 0.01, 0.2}), 6.0, 1e-12);
  const ErrorState err2{0.0, 0.0, 0.01};
  EXPECT_NEAR(follower_control({5.0, 10.0}, 10.0, 0.0, err2, 0.001, {0.1, 0.01, 0.2}), 1.0, 1e-12);
}

TEST(Controller, LeadErrorDecaysExactly) {
  // With u0 applied, de0/ds = -u0/v0^3 - d(1/v_des)/ds must equal -p e0.
  const ControllerGains g{0.3, 0.01, 0.2};
  for (double v0 : {5.0, 12.0, 25.0}) {
    for (double e0 : {-0.02, 0.0, 0.015}) {
      for (double slope : {-1e-3, 0.0, 4e-4}) {
        const double u0 = lead_control(v0, e0, slope, g);
        EXPECT_NEAR(-u0 / (v0 * v0 * v0) - slope, -g.p * e0, 1e-15);
      }
    }
  }
}

TEST(Controller, FollowerGapErrorIsLinear) {
  // Delta'' = -u_i/v_i^3 + u_pred/v_pred^3 - tau'' must collapse to -p0 Delta - p1 Delta'.
  const ControllerGains g{0.1, 0.03, 0.4};
  for (double v : {6.0, 14.0}) {
    for (double vp : {8.0, 19.0}) {
      for (double up : {-3.0, 0.7}) {
        const ErrorState err{0.0, 0.21, -0.013};
        const double curvature = -2e-4;
        const double u = follower_control({0.0, v}, vp, up, err, curvature, g);
        const double lhs = -u / (v * v * v) + up / (vp * vp * vp) - curvature;
        EXPECT_NEAR(lhs, -g.p0 * err.delta - g.p1 * err.delta_slope, 1e-15);
      }
    }
  }
}

TEST(Controller, StallBelowFloor) {
  try {
    (void)lead_control(0.4, 0.0, 0.0, {});
    FAIL();
  } catch (const Error& ex) {
    EXPECT_EQ(ex.kind(), ErrorKind::stall);
  }
  EXPECT_THROW((void)follower_control({0.0, 10.0}, 0.3, 0.0, {}, 0.0, {}), Error);
  EXPECT_THROW((void)follower_control({0.0, kVelocityFloor}, 10.0, 0.0, {}, 0.0, {}), Error);
}

TEST(Controller, GainValidation) {
  EXPECT_NO_THROW(ControllerGains{}.validate());
  EXPECT_THROW((ControllerGains{0.0, 0.01, 0.2}.validate()), Error);
  EXPECT_THROW((ControllerGains{0.1, -0.01, 0.2}.validate()), Error);
  EXPECT_THROW((ControllerGains{0.1, 0.01, INFINITY}.validate()), Error);
}

TEST(Roots, ThreeCases) {
  const auto distinct = characteristic_roots(gains(0.02, 0.3));
  EXPECT_EQ(distinct.kind, RootKind::real_distinct);
  EXPECT_NEAR(distinct.r1.real(), -0.2, 1e-15);
  EXPECT_NEAR(distinct.r2.real(), -0.1, 1e-15);

  const auto repeated = characteristic_roots(gains(0.01, 0.2));
  EXPECT_EQ(repeated.kind, RootKind::repeated);
  EXPECT_NEAR(repeated.r1.real(), -0.1, 1e-15);

  const auto pair = characteristic_roots(gains(0.02, 0.2));
  EXPECT_EQ(pair.kind, RootKind::complex_pair);
  EXPECT_NEAR(pair.r1.real(), -0.1, 1e-15);
  EXPECT_NEAR(std::abs(pair.r1.imag()), 0.1, 1e-15);
  EXPECT_NEAR(pair.r2.imag(), -pair.r1.imag(), 1e-15);
}

TEST(Roots, SatisfyCharacteristicPolynomial) {
  for (const auto& c : kCases) {
    const auto roots = characteristic_roots(gains(c.p0, c.p1));
    for (const auto r : {roots.r1, roots.r2}) EXPECT_LT(std::abs(r * r + c.p1 * r + c.p0), 1e-15) << c.name;
    EXPECT_EQ(roots.kind, c.kind) << c.name;
  }
}

TEST(Roots, CramerMatchesInitialConditions) {
  for (const auto& c : {kCases[0], kCases[2]}) {
    const auto roots = characteristic_roots(gains(c.p0, c.p1));
    const auto m = cramer_coefficients(0.5, -0.03, roots);
    EXPECT_LT(std::abs(m.a + m.b - 0.5), 1e-14) << c.name;
    EXPECT_LT(std::abs(roots.r1 * m.a + roots.r2 * m.b + 0.03), 1e-14) << c.name;
  }
  EXPECT_THROW((void)cramer_coefficients(0.5, 0.0, characteristic_roots(gains(0.01, 0.2))), Error);
}

TEST(DeltaSolution, FrozenValues) {
  // 2 e^-1 - e^-2 and 2 e^-1.
  EXPECT_NEAR(delta_solution(1.0, 0.0, gains(0.02, 0.3), 10.0), 0.600423599106271951, 1e-14);
  EXPECT_NEAR(delta_solution(1.0, 0.0, gains(0.01, 0.2), 10.0), 0.735758882342884643, 1e-14);
  EXPECT_NEAR(lead_error_solution(0.02, 0.1, 10.0), 0.00735758882342884643, 1e-17);
}

TEST(DeltaSolution, MatchesDirectIntegration) {
  for (const auto& c : kCases) {
    for (const auto& [d0, ds0] : {std::pair{0.5, 0.0}, std::pair{-0.2, 0.03}, std::pair{0.0, -0.01}}) {
      const DeltaSolution sol(d0, ds0, gains(c.p0, c.p1));
      for (double s : {0.0, 1.3, 7.0, 25.0, 60.0}) {
        const auto ref = oracle::damped_oscillator(d0, ds0, c.p0, c.p1, s);
        EXPECT_NEAR(sol.value(s), ref[0], 1e-11) << c.name << " s=" << s;
        EXPECT_NEAR(sol.slope(s), ref[1], 1e-11) << c.name << " s=" << s;
      }
    }
  }
}

TEST(DeltaSolution, DecaysForPositiveGains) {
  for (const auto& c : kCases) {
    const DeltaSolution sol(0.5, 0.1, gains(c.p0, c.p1));
    EXPECT_LT(std::abs(sol.value(300.0)), 1e-9) << c.name;
  }
}

TEST(Induction, TelescopesFollowerErrors) {
  // e_i = Delta_i' + e_{i-1} + tau_i'  summed down to the lead.
  const auto g = gains(0.02, 0.3);
  const auto roots = characteristic_roots(g);
  const std::vector<std::pair<double, double>> initial{{0.5, 0.0}, {-0.1, 0.02}, {0.3, -0.01}, {0.0, 0.005}};
  const std::vector<double> dtau{-0.01, 0.01, -0.01, 0.01};
  std::vector<std::complex<double>> a, b;
  for (const auto& [d0, ds0] : initial) {
    const auto m = cramer_coefficients(d0, ds0, roots);
    a.push_back(m.a);
    b.push_back(m.b);
  }
  for (double s : {0.0, 4.0, 17.0}) {
    double expected = 0.003;
    for (std::size_t j = 0; j < initial.size(); ++j)
      expected += oracle::damped_oscillator(initial[j].first, initial[j].second, g.p0, g.p1, s)[1] + dtau[j];
    EXPECT_NEAR(follower_error_induction(0.003, a, b, roots, dtau, s), expected, 1e-11) << s;
  }
}

TEST(Induction, RejectsRepeatedRootsAndRaggedLists) {
  const std::vector<std::complex<double>> a{1.0}, b{1.0};
  const std::vector<double> dtau{0.0};
  EXPECT_THROW((void)follower_error_induction(0.0, a, b, characteristic_roots(gains(0.01, 0.2)), dtau, 1.0), Error);
  const std::vector<double> two{0.0, 0.0};
  EXPECT_THROW((void)follower_error_induction(0.0, a, b, characteristic_roots(gains(0.02, 0.3)), two, 1.0), Error);
}
