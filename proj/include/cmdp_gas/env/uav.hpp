#pragma once

#include <vector>

#include "cmdp_gas/cmdp.hpp"
#include "cmdp_gas/rollout.hpp"

namespace cmdp::env {

/// Where episodes start.
struct UavStart {
  enum class Kind { Uniform, Point };
  Kind kind = Kind::Uniform;
  int battery_level = 24;  ///< Point only
  int altitude_index = 0;  ///< Point only
};

/// Solar-powered UAV base station. SI units unless the name says otherwise.
struct UavConfig {
  int n_altitude = 121;                  ///< N_z
  int n_battery = 25;                    ///< N_b
  double path_loss_exponent = 2.5;       ///< alpha
  double harvest_efficiency = 0.4;       ///< tau
  double battery_capacity_wh = 100;      ///< B_max
  double battery_increase_wh = 1.67;     ///< Delta B; E = -Delta B
  double slot_s = 10;                    ///< Delta t
  double panel_area_m2 = 1;
  double carrier_hz = 2e9;
  double solar_intensity = 1367;         ///< W / m^2
  double off_lobe_gain = 0;              ///< g(phi), linear
  double weight_n = 39.2;                ///< W
  double noise_dbm = -100;               ///< n0
  double air_density = 1.225;            ///< rho
  double rotor_area_m2 = 0.18;           ///< A
  double static_power_w = 5;
  double snr_threshold = 5;              ///< linear
  double cell_radius_m = 250;            ///< R_c
  double cloud_absorption = 0.01;        ///< per metre
  double k1 = 10.39, k2 = 0.05;          ///< shadowing sigma(psi) = k1 exp(-k2 psi)
  double cloud_top_m = 1300, cloud_bottom_m = 700;
  double dz_min_m = -40, dz_max_m = 40;  ///< per-slot altitude change bounds
  double z_min_m = 500, z_max_m = 1500;
  double g1 = 29.06, g2 = 0.03;          ///< NLoS shadowing sigma(psi) = g1 exp(-g2 psi)
  double mu_los_db = 1, mu_nlos_db = 20;
  double zeta = 0.6, eta = 0.11;         ///< LoS probability zeta (psi - 15)^eta
  double discount = 0.99;
  std::vector<double> climb_rates = {-4, 0, 4};       ///< m / s
  std::vector<double> tx_powers_dbm = {34, 38};
  std::vector<double> beamwidths_deg = {28, 56};
  UavStart start;

  void check() const;
  double level_energy_j() const { return battery_capacity_wh * 3600.0 / n_battery; }  ///< e_u
  double level_energy_wh() const { return battery_capacity_wh / n_battery; }
  double altitude(int index) const { return z_min_m + (z_max_m - z_min_m) * index / (n_altitude - 1); }
  /// Altitude index after one slot at climb rate v (clamped, snapped to nearest level).
  int next_altitude_index(int index, double climb_rate) const;
  Index n_actions() const {
    return Index(climb_rates.size()) * Index(tx_powers_dbm.size()) * Index(beamwidths_deg.size());
  }
};

struct UavAction {
  double climb_rate;
  double tx_power_dbm;
  double beamwidth_deg;
};

double antenna_gain_db(double beamwidth_deg);
double p_los(double z, double cell_radius, double zeta, double eta);
/// Probability that the edge user's SNR exceeds the threshold.
double coverage_probability(double z, double beamwidth_deg, double tx_power_dbm, const UavConfig& c);
/// Harvested energy over one slot moving from z_now to z_next, Joules.
double solar_energy(double z_now, double z_next, const UavConfig& c);
/// Consumed energy over one slot, Joules, floored at P_static Delta t.
double uav_energy(double climb_rate, double tx_power_dbm, const UavConfig& c);
/// Next-level distribution from `level` given slot consumption and harvest.
std::vector<double> battery_transition_row(int level, double consumed_j, double harvested_j, const UavConfig& c);

/// Built UAV model: the CMDP plus the state and action encodings.
struct UavModel {
  UavConfig config;
  Cmdpd cmdp;

  /// State index b * N_z + z.
  Index state(int battery_level, int altitude_index) const {
    return Index(battery_level) * config.n_altitude + altitude_index;
  }
  int battery_of(Index s) const { return int(s / config.n_altitude); }
  int altitude_of(Index s) const { return int(s % config.n_altitude); }
  /// Action index (v * |P| + p) * |theta| + theta.
  UavAction action(Index a) const;
  /// Predicate "battery" holds when the battery never reaches level 0.
  RolloutHooks rollout_hooks() const;
};

UavModel make_uav(const UavConfig& config);

/**
 * |S| = N_b N_z, |A| = |A_z| |A_P| |A_theta|. Altitude moves deterministically
 * by v Delta t on the level lattice; the battery follows
 * battery_transition_row. R = coverage at the current altitude, C = expected
 * battery drop in Wh, E = -Delta B.
 */
Cmdpd build_uav_cmdp(const UavConfig& config);

}  // namespace cmdp::env
