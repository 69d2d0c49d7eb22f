#include "qrepeater/nodephysics.hpp"

#include "qrepeater/parallel.hpp"
#include "qrepeater/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace qrep {

using std::numbers::pi;

double CavityGeometry::projected_separation_nm() const {
  return ion_separation_um * 1e3 * std::cos(axis_angle_deg * pi / 180);
}

void CavityGeometry::validate() const {
  if (!(waist_um > 0 && wavelength_nm > 0 && ion_separation_um > 0))
    throw std::invalid_argument("cavity geometry: waist, wavelength and separation must be positive");
}

double cavity_coupling(double axial_offset_nm, double transverse_offset_um, const CavityGeometry& geom) {
  geom.validate();
  const double r = transverse_offset_um / geom.waist_um;
  return std::abs(std::cos(2 * pi * axial_offset_nm / geom.wavelength_nm)) * std::exp(-r * r);
}

namespace {

struct PairCoupling {
  double g1, g2;
};

PairCoupling pair_at(double offset_nm, const CavityGeometry& geom) {
  const double r = geom.transverse_offset_um();
  return {cavity_coupling(offset_nm, r, geom),
          cavity_coupling(offset_nm + geom.projected_separation_nm(), r, geom)};
}

}  // namespace

EqualizedCoupling equalize_coupling(const CavityGeometry& geom) {
  geom.validate();
  const double half = geom.wavelength_nm / 2;
  const double d = std::fmod(geom.projected_separation_nm(), half);
  const double transverse = cavity_coupling(0, geom.transverse_offset_um(), geom);
  if (std::min(d, half - d) < 1e-9 * half) return {0, transverse};

  // min(g1, g2) is periodic with period lambda/2; scan one period and refine
  // the best cell by bisection on g1 - g2.
  const int n = 4000;
  auto worst = [&](double x) {
    const PairCoupling p = pair_at(x, geom);
    return std::min(p.g1, p.g2);
  };
  int best = 0;
  double best_val = -1;
  for (int i = 0; i < n; ++i) {
    const double x = -half / 2 + half * i / n;
    const double v = worst(x);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = -half / 2 + half * (best - 1) / n, hi = -half / 2 + half * (best + 1) / n;
  auto diff = [&](double x) {
    const PairCoupling p = pair_at(x, geom);
    return p.g1 - p.g2;
  };
  if (diff(lo) * diff(hi) <= 0) {
    for (int it = 0; it < 100; ++it) {
      const double mid = (lo + hi) / 2;
      (diff(lo) * diff(mid) <= 0 ? hi : lo) = mid;
    }
  }
  const double x = (lo + hi) / 2;
  return {x, worst(x)};
}

std::vector<CouplingSample> coupling_scan(const CavityGeometry& geom, double step_nm) {
  geom.validate();
  if (!(step_nm > 0)) throw std::invalid_argument("coupling_scan: step must be positive");
  std::vector<CouplingSample> out;
  const double half = geom.wavelength_nm / 2;
  const int n = static_cast<int>(std::floor(half / step_nm));
  for (int i = -n; i <= n; ++i) {
    const double x = i * step_nm;
    const PairCoupling p = pair_at(x, geom);
    out.push_back({x, p.g1, p.g2});
  }
  return out;
}

void MotionalState::validate() const {
  for (double n : nbar)
    if (!(n >= 0)) throw std::invalid_argument("motional state: negative phonon number");
  if (eta)
    for (double e : *eta)
      if (!(e >= 0 && e < 0.3)) throw std::invalid_argument("motional state: Lamb-Dicke parameter outside [0, 0.3)");
}

MotionalState loop2_start_state() {
  MotionalState m;
  m.nbar = {8, 9, 0, 11};
  return m;
}

MotionalState loop2_end_state() {
  MotionalState m;
  m.nbar = {29, 34, 9.2, 16};
  return m;
}

ModeArray heating_rates() {
  const auto a = loop2_start_state().nbar, b = loop2_end_state().nbar;
  ModeArray r{};
  for (int i = 0; i < kModes; ++i) r[i] = (b[i] - a[i]) / kHeatingSpan;
  return r;
}

MotionalState heating_trajectory(int k_attempts, const ModeArray& rates, const MotionalState& start) {
  if (k_attempts < 0) throw std::invalid_argument("heating_trajectory: negative attempt count");
  MotionalState m = start;
  for (int i = 0; i < kModes; ++i) m.nbar[i] = start.nbar[i] + k_attempts * rates[i];
  m.validate();
  return m;
}

Qutrit qutrit_pulse(int a, int b, double theta, double phi) {
  using C = std::complex<double>;
  Qutrit u = Qutrit::Identity();
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  u(a, a) = c;
  u(b, b) = c;
  u(a, b) = C(0, 1) * std::exp(C(0, phi)) * s;
  u(b, a) = C(0, 1) * std::exp(C(0, -phi)) * s;
  return u;
}

Qutrit echo_unitary(double theta, const std::array<double, 3>& phases) {
  return qutrit_pulse(0, 2, theta, phases[2]) * qutrit_pulse(1, 2, theta, phases[1]) *
         qutrit_pulse(0, 2, theta, phases[0]);
}

Qutrit repump(const Qutrit& rho) {
  Qutrit out = rho;
  const double d = rho(2, 2).real();
  out.row(2).setZero();
  out.col(2).setZero();
  out(0, 0) += d / 2;
  out(1, 1) += d / 2;
  return out;
}

namespace {

using C = std::complex<double>;

// One echo followed by repump, restricted to the S/S' block
// B = [[a, z], [conj(z), 1-a]]. The map is affine in (a, z).
struct EchoMap {
  C a_a, a_z, a_zc, a_1;  // a' = a_a a + a_z z + a_zc conj(z) + a_1
  C z_a, z_z, z_zc, z_1;  // z' likewise

  explicit EchoMap(const Qutrit& u) {
    const Eigen::Matrix<C, 3, 2> v = u.leftCols<2>();
    auto image = [&](const Eigen::Matrix2cd& x) {
      return repump(v * x * v.adjoint()).topLeftCorner<2, 2>().eval();
    };
    Eigen::Matrix2cd e00 = Eigen::Matrix2cd::Zero(), e11 = e00, e01 = e00, e10 = e00;
    e00(0, 0) = 1;
    e11(1, 1) = 1;
    e01(0, 1) = 1;
    e10(1, 0) = 1;
    const auto l00 = image(e00), l11 = image(e11), l01 = image(e01), l10 = image(e10);
    a_a = l00(0, 0) - l11(0, 0);
    a_1 = l11(0, 0);
    a_z = l01(0, 0);
    a_zc = l10(0, 0);
    z_a = l00(0, 1) - l11(0, 1);
    z_1 = l11(0, 1);
    z_z = l01(0, 1);
    z_zc = l10(0, 1);
  }

  void apply(C& a, C& z) const {
    const C zc = std::conj(z);
    const C a2 = a_a * a + a_z * z + a_zc * zc + a_1;
    const C z2 = z_a * a + z_z * z + z_zc * zc + z_1;
    a = C(a2.real(), 0);
    z = z2;
  }
};

C coherence_after_echoes(double theta, const SpinEchoConfig& cfg) {
  const EchoMap map(echo_unitary(theta, cfg.pulse_phases));
  C a(0.5), z(0.5);
  for (int i = 0; i < cfg.n_echoes; ++i) map.apply(a, z);
  return z;
}

// Thermal occupation distribution truncated to [0, n_max]; returns the raw
// probabilities (not renormalized).
std::vector<double> thermal_weights(double nbar, int n_max) {
  std::vector<double> w(n_max + 1, 0.0);
  if (nbar <= 0) {
    w[0] = 1;
    return w;
  }
  const double log_ratio = std::log(nbar / (nbar + 1)), log_norm = std::log(nbar + 1);
  for (int n = 0; n <= n_max; ++n) w[n] = std::exp(n * log_ratio - log_norm);
  return w;
}

}  // namespace

SpinEchoResult spin_echo_visibility(const MotionalState& temps, const SpinEchoConfig& cfg) {
  temps.validate();
  cfg.pulse_calibration.validate();
  if (!temps.eta) throw std::invalid_argument("spin_echo_visibility: Lamb-Dicke parameters missing");
  if (cfg.n_echoes < 1 || cfg.grid_max < 1) throw std::invalid_argument("spin_echo_visibility: echoes and grid must be >= 1");
  if (!(cfg.C0 >= 0 && cfg.C0 <= 1)) throw std::invalid_argument("spin_echo_visibility: C0 outside [0,1]");
  const ModeArray& eta = *temps.eta;
  const int n_max = cfg.grid_max;

  // Pulse length set so that the area is pi at the calibration temperatures.
  double cal = 1;
  for (int i = 0; i < kModes; ++i) cal *= 1 - eta[i] * eta[i] * cfg.pulse_calibration.nbar[i];
  const double area = pi / cal * (1 + cfg.miscalibration);

  std::array<std::vector<double>, kModes> w, f;
  double coverage = 1;
  for (int i = 0; i < kModes; ++i) {
    w[i] = thermal_weights(temps.nbar[i], n_max);
    double mass = 0;
    for (double x : w[i]) mass += x;
    coverage *= mass;
    f[i].resize(n_max + 1);
    for (int n = 0; n <= n_max; ++n) f[i][n] = 1 - eta[i] * eta[i] * n;
  }

  // Outer mode split across workers; each worker sums over the other three.
  const std::size_t outer = n_max + 1;
  std::vector<C> partial(outer, C(0));
  std::vector<double> partial_w(outer, 0);
  parallel_for(outer, [&](std::size_t n0) {
    C acc(0);
    double wsum = 0;
    for (int n1 = 0; n1 <= n_max; ++n1)
      for (int n2 = 0; n2 <= n_max; ++n2) {
        const double w012 = w[0][n0] * w[1][n1] * w[2][n2];
        if (w012 == 0) continue;
        const double f012 = f[0][n0] * f[1][n1] * f[2][n2];
        for (int n3 = 0; n3 <= n_max; ++n3) {
          const double weight = w012 * w[3][n3];
          if (weight == 0) continue;
          acc += weight * coherence_after_echoes(area * f012 * f[3][n3], cfg);
          wsum += weight;
        }
      }
    partial[n0] = acc;
    partial_w[n0] = wsum;
  });
  C total(0);
  double total_w = 0;
  for (std::size_t i = 0; i < outer; ++i) {
    total += partial[i];
    total_w += partial_w[i];
  }
  return {cfg.C0 * 2 * std::abs(total / total_w), coverage};
}

ModeArray lamb_dicke_template(const MotionalState& m) {
  ModeArray t{};
  for (int i = 0; i < kModes; ++i) {
    if (!(m.frequencies_MHz[i] > 0)) throw std::invalid_argument("lamb_dicke_template: frequencies must be positive");
    t[i] = 1 / std::sqrt(m.frequencies_MHz[i]);
  }
  return t;
}

double calibrate_lamb_dicke_scale(const SpinEchoConfig& cfg, double target) {
  if (!(target > 0 && target < cfg.C0)) throw std::invalid_argument("calibrate_lamb_dicke_scale: target must be in (0, C0)");
  MotionalState probe = cfg.pulse_calibration;
  const ModeArray tmpl = lamb_dicke_template(probe);
  double max_scale = 0.3 / *std::max_element(tmpl.begin(), tmpl.end());
  auto visibility = [&](double s) {
    ModeArray e{};
    for (int i = 0; i < kModes; ++i) e[i] = s * tmpl[i];
    probe.eta = e;
    return spin_echo_visibility(probe, cfg).C;
  };
  // First crossing of the target on a coarse scan, then bisection.
  const int steps = 60;
  double lo = 0, hi = -1;
  for (int i = 1; i <= steps; ++i) {
    const double s = max_scale * i / steps * 0.999;
    if (visibility(s) <= target) {
      hi = s;
      break;
    }
    lo = s;
  }
  if (hi < 0) throw NumericalError("calibrate_lamb_dicke_scale: target visibility not reachable");
  for (int it = 0; it < 50; ++it) {
    const double mid = (lo + hi) / 2;
    (visibility(mid) > target ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

double ramsey_amplitude(double t, double tau, double C0) {
  if (!(tau > 0)) throw std::invalid_argument("ramsey_amplitude: tau must be positive");
  return C0 * std::exp(-(t * t) / (tau * tau));
}

}  // namespace qrep
