#include "cmdp_gas/env/uav.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cmdp_gas/errors.hpp"

namespace cmdp::env {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

double q_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

void UavConfig::check() const {
  auto fail = [](const std::string& what) { throw PreconditionError("uav config: " + what); };
  if (n_altitude < 2 || n_battery < 2) fail("n_altitude and n_battery must be >= 2");
  if (!(z_min_m < cloud_bottom_m && cloud_bottom_m < cloud_top_m && cloud_top_m < z_max_m))
    fail("need z_min < cloud_bottom < cloud_top < z_max");
  if (!(z_min_m > 0)) fail("z_min must be positive");
  for (double v : {battery_capacity_wh, slot_s, panel_area_m2, carrier_hz, weight_n, air_density, rotor_area_m2,
                   snr_threshold, cell_radius_m, path_loss_exponent, k1, g1})
    if (!(v > 0) || !std::isfinite(v)) fail("physical parameters must be positive and finite");
  for (double v : {harvest_efficiency, solar_intensity, static_power_w, cloud_absorption, k2, g2, zeta, eta,
                   off_lobe_gain})
    if (!(v >= 0) || !std::isfinite(v)) fail("rates and efficiencies must be non-negative and finite");
  if (!(discount >= 0 && discount < 1)) fail("discount must lie in [0, 1)");
  if (!std::isfinite(battery_increase_wh)) fail("battery_increase_wh must be finite");
  if (!(dz_min_m <= 0 && 0 <= dz_max_m)) fail("need dz_min <= 0 <= dz_max");
  if (climb_rates.empty() || tx_powers_dbm.empty() || beamwidths_deg.empty()) fail("action sets must be non-empty");
  for (double v : climb_rates) {
    const double dz = v * slot_s;
    if (!std::isfinite(v) || dz < dz_min_m - 1e-9 || dz > dz_max_m + 1e-9)
      fail("climb rate " + std::to_string(v) + " exceeds the per-slot altitude change bounds");
  }
  for (double p : tx_powers_dbm)
    if (!std::isfinite(p)) fail("transmit powers must be finite");
  for (double t : beamwidths_deg)
    if (!(t > 0 && t < 180)) fail("beamwidths must lie in (0, 180) degrees");
  if (start.kind == UavStart::Kind::Point &&
      (start.battery_level < 0 || start.battery_level >= n_battery || start.altitude_index < 0 ||
       start.altitude_index >= n_altitude))
    fail("start state out of range");
}

int UavConfig::next_altitude_index(int index, double climb_rate) const {
  const double level = (z_max_m - z_min_m) / (n_altitude - 1);
  const double target = std::clamp(altitude(index) + climb_rate * slot_s, z_min_m, z_max_m);
  return std::clamp(static_cast<int>(std::lround((target - z_min_m) / level)), 0, n_altitude - 1);
}

double antenna_gain_db(double beamwidth_deg) {
  if (!(beamwidth_deg > 0)) throw PreconditionError("antenna_gain_db: beamwidth must be positive");
  return 10.0 * std::log10(29000.0 / (beamwidth_deg * beamwidth_deg));
}

double p_los(double z, double cell_radius, double zeta, double eta) {
  const double psi = degrees(std::atan(z / cell_radius));
  if (psi <= 15.0) return 0.0;
  return std::clamp(zeta * std::pow(psi - 15.0, eta), 0.0, 1.0);
}

double coverage_probability(double z, double beamwidth_deg, double tx_power_dbm, const UavConfig& c) {
  const double psi = degrees(std::atan(z / c.cell_radius_m));
  const double los = p_los(z, c.cell_radius_m, c.zeta, c.eta);
  const double path_loss_db = 10.0 * c.path_loss_exponent *
                              std::log10(4.0 * std::numbers::pi * c.carrier_hz *
                                         std::hypot(c.cell_radius_m, z) / kSpeedOfLight);
  const double p_min_dbm = 10.0 * std::log10(std::pow(10.0, c.noise_dbm / 10.0) * c.snr_threshold);
  const double base = -tx_power_dbm - antenna_gain_db(beamwidth_deg) + path_loss_db + p_min_dbm;
  const double sigma_los = c.k1 * std::exp(-c.k2 * psi);
  const double sigma_nlos = c.g1 * std::exp(-c.g2 * psi);
  const double cov = los * q_tail((base + c.mu_los_db) / sigma_los) +
                     (1.0 - los) * q_tail((base + c.mu_nlos_db) / sigma_nlos);
  return std::clamp(cov, 0.0, 1.0);
}

double solar_energy(double z_now, double z_next, const UavConfig& c) {
  const double clear = c.harvest_efficiency * c.panel_area_m2 * c.solar_intensity * c.slot_s;
  const double mean = 0.5 * (z_now + z_next);
  if (mean >= c.cloud_top_m) return clear;
  if (mean >= c.cloud_bottom_m) return clear * std::exp(-c.cloud_absorption * (c.cloud_top_m - mean));
  return clear * std::exp(-c.cloud_absorption * (c.cloud_top_m - c.cloud_bottom_m));
}

double uav_energy(double climb_rate, double tx_power_dbm, const UavConfig& c) {
  const double hover_speed = std::sqrt(c.weight_n / (2.0 * c.air_density * c.rotor_area_m2));
  const double induced = c.weight_n * c.weight_n / (std::numbers::sqrt2 * c.air_density * c.rotor_area_m2) /
                         (std::numbers::sqrt2 * hover_speed);
  const double tx_w = std::pow(10.0, (tx_power_dbm - 30.0) / 10.0);
  const double e = (induced + c.weight_n * climb_rate + c.static_power_w + tx_w) * c.slot_s;
  return std::max(e, c.static_power_w * c.slot_s);
}

std::vector<double> battery_transition_row(int level, double consumed_j, double harvested_j, const UavConfig& c) {
  if (level < 0 || level >= c.n_battery) throw PreconditionError("battery_transition_row: level out of range");
  if (!(consumed_j > 0) || !(harvested_j >= 0))
    throw PreconditionError("battery_transition_row: need consumed > 0 and harvested >= 0");
  const int top = c.n_battery - 1;
  const long departures = std::max(1L, std::lround(consumed_j / c.level_energy_j()));
  const double lambda = harvested_j / consumed_j * static_cast<double>(departures);

  std::vector<double> row(static_cast<std::size_t>(c.n_battery), 0.0);
  double pmf = std::exp(-lambda), used = 0.0;
  for (long k = 0;; ++k) {
    const long next = level - departures + k;
    if (next >= top) {
      row[static_cast<std::size_t>(top)] += std::max(0.0, 1.0 - used);
      break;
    }
    row[static_cast<std::size_t>(std::max(0L, next))] += pmf;
    used += pmf;
    pmf *= lambda / static_cast<double>(k + 1);
  }
  return row;
}

UavAction UavModel::action(Index a) const {
  const Index np = Index(config.tx_powers_dbm.size()), nt = Index(config.beamwidths_deg.size());
  return UavAction{config.climb_rates[static_cast<std::size_t>(a / (np * nt))],
                   config.tx_powers_dbm[static_cast<std::size_t>((a / nt) % np)],
                   config.beamwidths_deg[static_cast<std::size_t>(a % nt)]};
}

RolloutHooks UavModel::rollout_hooks() const {
  const int nz = config.n_altitude;
  RolloutHooks hooks;
  hooks.success.push_back({"battery", [nz](std::span<const Index> path) {
                             for (Index s : path)
                               if (s / nz == 0) return false;
                             return true;
                           }});
  return hooks;
}

UavModel make_uav(const UavConfig& config) {
  config.check();
  const int nz = config.n_altitude, nb = config.n_battery;

  // The edge user must sit inside the main lobe; with half-angle theta / 2
  // the narrow beam misses it at low altitude, so fall back to theta.
  bool half_angle_ok = true, full_angle_ok = true;
  for (double theta : config.beamwidths_deg)
    for (int z = 0; z < nz; ++z) {
      const double need = config.cell_radius_m / config.altitude(z);
      half_angle_ok = half_angle_ok && std::tan(radians(theta / 2.0)) >= need;
      full_angle_ok = full_angle_ok && (theta >= 90.0 || std::tan(radians(theta)) >= need);
    }
  if (!half_angle_ok && !full_angle_ok)
    throw ConfigError("uav: the cell edge falls outside the main lobe for some beamwidth and altitude");

  UavModel model{config, Cmdpd({}, {}, {}, {}, 0.0, 0.0)};
  const Index n_states = Index(nb) * nz, n_actions = config.n_actions();
  const double level_wh = config.level_energy_wh();

  TransitionBuilder<double> builder(n_states, n_actions);
  builder.reserve(static_cast<std::size_t>(n_states * n_actions * 8));
  Cmdpd::Matrix rewards(n_states, n_actions), costs(n_states, n_actions);

  std::vector<double> consumed(static_cast<std::size_t>(n_actions));
  std::vector<double> coverage(static_cast<std::size_t>(nz * n_actions));
  for (Index a = 0; a < n_actions; ++a) {
    const UavAction act = model.action(a);
    consumed[static_cast<std::size_t>(a)] = uav_energy(act.climb_rate, act.tx_power_dbm, config);
    for (int z = 0; z < nz; ++z)
      coverage[static_cast<std::size_t>(z * n_actions + a)] =
          coverage_probability(config.altitude(z), act.beamwidth_deg, act.tx_power_dbm, config);
  }

  for (int b = 0; b < nb; ++b)
    for (int z = 0; z < nz; ++z) {
      const Index s = model.state(b, z);
      for (Index a = 0; a < n_actions; ++a) {
        const UavAction act = model.action(a);
        const int z_next = config.next_altitude_index(z, act.climb_rate);
        const double harvested = solar_energy(config.altitude(z), config.altitude(z_next), config);
        const auto row = battery_transition_row(b, consumed[static_cast<std::size_t>(a)], harvested, config);
        double drop = 0;
        for (int b_next = 0; b_next < nb; ++b_next) {
          const double p = row[static_cast<std::size_t>(b_next)];
          if (p == 0.0) continue;
          builder.add(s, a, model.state(b_next, z_next), p);
          drop += p * (b - b_next);
        }
        rewards(s, a) = coverage[static_cast<std::size_t>(z * n_actions + a)];
        costs(s, a) = level_wh * drop;
      }
    }

  Cmdpd::Vector beta;
  if (config.start.kind == UavStart::Kind::Uniform) {
    beta = Cmdpd::Vector::Constant(n_states, 1.0 / static_cast<double>(n_states));
  } else {
    beta = Cmdpd::Vector::Zero(n_states);
    beta(model.state(config.start.battery_level, config.start.altitude_index)) = 1.0;
  }
  model.cmdp = Cmdpd(builder.build(), std::move(rewards), std::move(costs), std::move(beta), config.discount,
                     -config.battery_increase_wh);
  model.cmdp.require_valid();
  return model;
}

Cmdpd build_uav_cmdp(const UavConfig& config) { return make_uav(config).cmdp; }

}  // namespace cmdp::env
