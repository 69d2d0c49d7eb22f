// Physical models of one ion node: cavity coupling of a two-ion string,
// recoil heating during Loop 2, spin-echo visibility, Ramsey decay.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <numbers>
#include <optional>
#include <vector>

namespace qrep {

struct CavityGeometry {
  double g_max = 2 * std::numbers::pi * 1.53e6;  // rad/s
  double waist_um = 12.31;
  double wavelength_nm = 854;
  double ion_separation_um = 5.8;
  double axis_angle_deg = 85.5;

  // Ion-ion separation projected onto the cavity axis.
  double projected_separation_nm() const;
  // Distance of each ion from the cavity axis.
  double transverse_offset_um() const { return ion_separation_um / 2; }
  void validate() const;
};

// Relative coupling |cos(2 pi z / lambda)| exp(-r^2 / w^2).
double cavity_coupling(double axial_offset_nm, double transverse_offset_um, const CavityGeometry& geom);

struct EqualizedCoupling {
  double offset_nm;  // axial position of ion 1 relative to an antinode
  double coupling;   // common value for both ions
};
// Cavity position where both ions couple equally and as strongly as possible.
// When the projected separation is a multiple of lambda/2 the couplings agree
// everywhere and the antinode (offset 0) is returned.
EqualizedCoupling equalize_coupling(const CavityGeometry& geom);

struct CouplingSample {
  double offset_nm, g_ion1, g_ion2;
};
std::vector<CouplingSample> coupling_scan(const CavityGeometry& geom, double step_nm);

// --- motion -------------------------------------------------------------------

enum MotionalMode { kRadialCom = 0, kRadialRock = 1, kAxialCom = 2, kAxialStr = 3 };
inline constexpr int kModes = 4;
using ModeArray = std::array<double, kModes>;

struct MotionalState {
  ModeArray frequencies_MHz{2.155, 1.928, 0.963, 1.668};
  ModeArray nbar{};
  std::optional<ModeArray> eta;

  void validate() const;
};

// Number of Loop-2 attempts over which the heating rates were calibrated.
inline constexpr int kHeatingSpan = 210;

MotionalState loop2_start_state();
MotionalState loop2_end_state();
// Phonons per attempt, from the start and end temperatures over kHeatingSpan.
ModeArray heating_rates();
MotionalState heating_trajectory(int k_attempts, const ModeArray& rates, const MotionalState& start);

// --- spin echo ------------------------------------------------------------------

// Levels of the qutrit: 0 = S, 1 = S', 2 = D'.
using Qutrit = Eigen::Matrix3cd;

// Pulse of area theta between levels a and b with laser phase phi:
// U(a,a)=U(b,b)=cos(theta/2), U(a,b)=i e^{i phi} sin(theta/2), U(b,a)=i e^{-i phi} sin(theta/2).
Qutrit qutrit_pulse(int a, int b, double theta, double phi);
// S-D', S'-D', S-D' with the given phases, all with pulse area theta.
Qutrit echo_unitary(double theta, const std::array<double, 3>& phases);
// Empties D' into an equal mixture of S and S'. Coherences with D' are lost.
Qutrit repump(const Qutrit& rho);

struct SpinEchoConfig {
  int n_echoes = 40;
  int grid_max = 40;
  double C0 = 0.99;
  MotionalState pulse_calibration = loop2_start_state();
  double miscalibration = 0;  // fractional pulse-length error
  std::array<double, 3> pulse_phases{0, std::numbers::pi, 0};
};

struct SpinEchoResult {
  double C;
  double weight_coverage;  // thermal probability mass inside the grid, all modes
};

// Fringe amplitude 2|rho_SS'| after n_echoes echoes from (|S>+|S'>)/sqrt(2),
// averaged over thermal occupations of the four modes.
SpinEchoResult spin_echo_visibility(const MotionalState& temps, const SpinEchoConfig& cfg);

// Lamb-Dicke template proportional to 1/sqrt(frequency) with unit weights.
ModeArray lamb_dicke_template(const MotionalState& m);
// Smallest scale s such that eta = s * template gives visibility `target`
// at the calibration temperatures.
double calibrate_lamb_dicke_scale(const SpinEchoConfig& cfg, double target = 0.92);

double ramsey_amplitude(double t, double tau, double C0);

}  // namespace qrep
