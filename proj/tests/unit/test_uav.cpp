#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cmdp_gas/env/uav.hpp"

using namespace cmdp;
using namespace cmdp::env;
using doctest::Approx;

// Golden values from tests/oracles/uav_golden.py (independent scipy evaluation).
TEST_CASE("coverage golden values") {
  const UavConfig c;
  CHECK(coverage_probability(1000, 28, 34, c) == Approx(0.9660219004850903).epsilon(1e-12));
  CHECK(coverage_probability(1000, 56, 38, c) == Approx(0.9531537293435796).epsilon(1e-12));
  CHECK(coverage_probability(500, 28, 34, c) == Approx(0.9930758327791727).epsilon(1e-12));
  CHECK(coverage_probability(1500, 56, 34, c) == Approx(0.9505293537174433).epsilon(1e-12));
}

TEST_CASE("coverage limits") {
  UavConfig c;
  CHECK(coverage_probability(1000, 28, 400, c) == Approx(1.0));
  // Identical LoS and NLoS shadowing makes P_LoS irrelevant.
  c.mu_nlos_db = c.mu_los_db;
  c.g1 = c.k1;
  c.g2 = c.k2;
  UavConfig d = c;
  d.zeta = 0.1;
  CHECK(coverage_probability(900, 56, 34, c) == Approx(coverage_probability(900, 56, 34, d)).epsilon(1e-12));
}

TEST_CASE("antenna gain and LoS probability") {
  CHECK(antenna_gain_db(28) == Approx(15.6808).epsilon(1e-5));
  CHECK(antenna_gain_db(56) == Approx(9.6602).epsilon(1e-5));
  CHECK(antenna_gain_db(std::sqrt(29000.0)) == Approx(0.0).epsilon(1e-12));
  CHECK(p_los(1000, 250, 0.6, 0.11) == Approx(0.942994).epsilon(1e-6));
  CHECK(p_los(250 * std::tan(16 * M_PI / 180), 250, 0.6, 0.0) == Approx(0.6));
  CHECK(p_los(250 * std::tan(10 * M_PI / 180), 250, 0.6, 0.11) == 0.0);
}

TEST_CASE("solar energy branches") {
  const UavConfig c;
  CHECK(solar_energy(1400, 1400, c) == Approx(5468.0));
  CHECK(solar_energy(1300, 1300, c) == Approx(5468.0));
  CHECK(solar_energy(600, 700, c) == Approx(5468.0 * std::exp(-6.0)));
  CHECK(solar_energy(600, 700, c) == Approx(13.5538).epsilon(1e-5));
  CHECK(solar_energy(1000, 1000, c) == Approx(5468.0 * std::exp(-3.0)));
}

TEST_CASE("uav energy golden values") {
  const UavConfig c;
  CHECK(uav_energy(0, 34, c) == Approx(3770.9303073167844).epsilon(1e-12));
  CHECK(uav_energy(4, 38, c) == Approx(5376.907177449708).epsilon(1e-12));
  CHECK(uav_energy(-4, 34, c) == Approx(2202.930307316784).epsilon(1e-12));
  CHECK(uav_energy(4, 34, c) - uav_energy(0, 34, c) == Approx(1568.0));
  CHECK(uav_energy(0, 38, c) - uav_energy(0, 34, c) == Approx((std::pow(10.0, 0.8) - std::pow(10.0, 0.4)) * 10));
}

TEST_CASE("battery rows") {
  const UavConfig c;
  const double eu = c.level_energy_j();
  auto z = battery_transition_row(10, 2 * eu, 0.0, c);
  CHECK(z[8] == 1.0);
  auto low = battery_transition_row(1, 2 * eu, 0.0, c);
  CHECK(low[0] == 1.0);
  auto one = battery_transition_row(10, eu, eu, c);
  CHECK(one[9] == Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(one[10] == Approx(std::exp(-1.0)).epsilon(1e-14));
  for (int b = 0; b < c.n_battery; ++b) {
    auto r = battery_transition_row(b, 3770.0, 5468.0, c);
    CHECK(std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0) <= 1e-12);
  }
}

TEST_CASE("built model shape and invariants") {
  const UavConfig c;
  const auto u = make_uav(c);
  CHECK(u.cmdp.n_states() == 3025);
  CHECK(u.cmdp.n_actions() == 12);
  CHECK(u.cmdp.valid());
  CHECK(u.cmdp.constraint_bound() == -1.67);
  const auto& p = u.cmdp.transitions();
  double worst = 0;
  for (Index r = 0; r < p.rows(); ++r) worst = std::max(worst, std::abs(p.row(r).sum() - 1.0));
  CHECK(worst <= 1e-12);
  CHECK((u.cmdp.rewards().array() >= 0).all());
  CHECK((u.cmdp.rewards().array() <= 1).all());

  // Expected drift identity for interior levels.
  for (int b = 1; b < c.n_battery - 1; b += 5)
    for (Index a = 0; a < 12; ++a) {
      const Index s = u.state(b, 60);
      double drift = 0;
      for (Cmdpd::TransitionMatrix::InnerIterator it(p, u.cmdp.row(s, a)); it; ++it)
        drift += it.value() * (b - u.battery_of(it.col())) * c.level_energy_wh();
      CHECK(std::abs(drift - u.cmdp.costs()(s, a)) <= 1e-9);
    }
}

TEST_CASE("altitude moves on the lattice and clamps") {
  const UavConfig c;
  const auto u = make_uav(c);
  CHECK(c.next_altitude_index(60, 4) == 65);
  CHECK(c.next_altitude_index(60, -4) == 55);
  CHECK(c.next_altitude_index(60, 0) == 60);
  CHECK(c.next_altitude_index(120, 4) == 120);
  CHECK(c.next_altitude_index(0, -4) == 0);
  // Action 11 is (+4 m/s, 38 dBm, 56 deg).
  const auto act = u.action(11);
  CHECK(act.climb_rate == 4);
  CHECK(act.tx_power_dbm == 38);
  CHECK(act.beamwidth_deg == 56);
  const Index s = u.state(12, 120);
  for (Cmdpd::TransitionMatrix::InnerIterator it(u.cmdp.transitions(), u.cmdp.row(s, 11)); it; ++it)
    CHECK(u.altitude_of(it.col()) == 120);
}

TEST_CASE("config checks") {
  UavConfig c;
  c.cloud_bottom_m = 1400;
  CHECK_THROWS_AS(make_uav(c), PreconditionError);
  c = UavConfig{};
  c.n_battery = 1;
  CHECK_THROWS_AS(make_uav(c), PreconditionError);
  c = UavConfig{};
  c.climb_rates = {-8, 0, 8};
  CHECK_THROWS_AS(make_uav(c), PreconditionError);
}
