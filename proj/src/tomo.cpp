#include "qrepeater/tomo.hpp"

#include "qrepeater/optimize.hpp"
#include "qrepeater/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace qrep {

using std::numbers::pi;
using C = std::complex<double>;

const char* to_string(Basis b) {
  switch (b) {
    case Basis::HV: return "HV";
    case Basis::DA: return "DA";
    case Basis::RL: return "RL";
  }
  return "?";
}

const char* to_string(Projector p) { return p == Projector::plus ? "plus" : "minus"; }

Basis parse_basis(const std::string& s) {
  if (s == "HV") return Basis::HV;
  if (s == "DA") return Basis::DA;
  if (s == "RL") return Basis::RL;
  throw std::invalid_argument("unknown basis '" + s + "'");
}

Projector parse_projector(const std::string& s) {
  if (s == "plus") return Projector::plus;
  if (s == "minus") return Projector::minus;
  throw std::invalid_argument("unknown projector '" + s + "'");
}

int ProjectorSetting::index() const {
  return ((int(basisA) * 3 + int(basisB)) * 2 + int(projA)) * 2 + int(projB);
}

ProjectorSetting ProjectorSetting::from_index(int i) {
  if (i < 0 || i >= 36) throw std::out_of_range("setting index");
  ProjectorSetting s;
  s.projB = Projector(i % 2);
  s.projA = Projector((i / 2) % 2);
  s.basisB = Basis((i / 4) % 3);
  s.basisA = Basis(i / 12);
  return s;
}

Eigen::Vector2cd polarization(Basis b, Projector p) {
  const double r = 1 / std::sqrt(2.0);
  const double sign = p == Projector::plus ? 1 : -1;
  switch (b) {
    case Basis::HV: return p == Projector::plus ? Eigen::Vector2cd(1, 0) : Eigen::Vector2cd(0, 1);
    case Basis::DA: return Eigen::Vector2cd(r, sign * r);
    case Basis::RL: return Eigen::Vector2cd(r, C(0, sign * r));
  }
  return {};
}

Eigen::Matrix4cd setting_projector(const ProjectorSetting& s) {
  const Eigen::Vector2cd a = polarization(s.basisA, s.projA), b = polarization(s.basisB, s.projB);
  Eigen::Vector4cd v;
  v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
  return v * v.adjoint();
}

void TomoDataset::validate() const {
  std::array<int, 36> seen{};
  for (const auto& s : settings) {
    if (++seen[s.setting.index()] > 1) throw std::invalid_argument("dataset: duplicate setting");
    std::uint64_t sum = 0;
    for (auto c : s.C) sum += c;
    if (s.N_A > s.M_A) throw std::invalid_argument("dataset: more Loop-1 detections than pulses");
    if (sum > s.N_A || sum > s.M_B_given_A)
      throw std::invalid_argument("dataset: coincidences exceed the heralds or pulses they require");
  }
  for (int n : seen)
    if (n == 0) throw std::invalid_argument("dataset: missing projector setting");
}

const SettingCounts& TomoDataset::at(const ProjectorSetting& s) const {
  for (const auto& x : settings)
    if (x.setting == s) return x;
  throw std::invalid_argument("dataset: missing projector setting");
}

namespace {

ProbabilityTable probabilities_from(const TomoDataset& data, int outcome) {
  ProbabilityTable out;
  for (Basis a : kBases)
    for (Basis b : kBases) {
      BasisPairProbabilities bp;
      bp.basisA = a;
      bp.basisB = b;
      double total = 0;
      for (int j = 0; j < 4; ++j) {
        const ProjectorSetting s{a, b, Projector(j / 2), Projector(j % 2)};
        const SettingCounts& sc = data.at(s);
        if (sc.M_A == 0 || sc.M_B_given_A == 0)
          throw std::invalid_argument("dataset: zero pulse counter for a setting");
        bp.p[j] = double(sc.C[outcome]) * double(sc.N_A) / double(sc.M_A) / double(sc.M_B_given_A);
        bp.weight += double(sc.C[outcome]);
        total += bp.p[j];
      }
      if (!(total > 0)) throw std::invalid_argument("dataset: basis pair without counts");
      for (double& p : bp.p) p /= total;
      out.push_back(bp);
    }
  return out;
}

int outcome_index(BellLabel b) { return static_cast<int>(b); }

}  // namespace

ProbabilityTable bayes_probabilities(const TomoDataset& data, BellLabel ion_outcome) {
  return probabilities_from(data, outcome_index(ion_outcome));
}

std::vector<MeasurementGroup> measurement_groups(const ProbabilityTable& probs) {
  std::vector<MeasurementGroup> groups;
  for (const auto& bp : probs) {
    MeasurementGroup g;
    for (int j = 0; j < 4; ++j)
      g.projectors[j] = setting_projector({bp.basisA, bp.basisB, Projector(j / 2), Projector(j % 2)});
    g.frequencies = bp.p;
    g.weight = bp.weight;
    groups.push_back(g);
  }
  return groups;
}

double log_likelihood(std::span<const MeasurementGroup> groups, const Eigen::Matrix4cd& rho) {
  double total_w = 0, ll = 0;
  for (const auto& g : groups) total_w += g.weight;
  for (const auto& g : groups)
    for (int j = 0; j < 4; ++j) {
      if (g.frequencies[j] <= 0) continue;
      const double p = std::max((g.projectors[j] * rho).trace().real(), 1e-300);
      ll += g.weight / total_w * g.frequencies[j] * std::log(p);
    }
  return ll;
}

MleResult mle_reconstruct(std::span<const MeasurementGroup> groups, const MleOptions& opt) {
  if (groups.empty()) throw std::invalid_argument("mle_reconstruct: no measurements");
  double total_w = 0;
  for (const auto& g : groups) {
    if (!(g.weight >= 0)) throw std::invalid_argument("mle_reconstruct: negative weight");
    total_w += g.weight;
  }
  if (!(total_w > 0)) throw std::invalid_argument("mle_reconstruct: all weights are zero");

  auto r_operator = [&](const Eigen::Matrix4cd& rho) {
    Eigen::Matrix4cd R = Eigen::Matrix4cd::Zero();
    for (const auto& g : groups)
      for (int j = 0; j < 4; ++j) {
        if (g.frequencies[j] <= 0) continue;
        const double p = std::max((g.projectors[j] * rho).trace().real(), 1e-300);
        R += (g.weight / total_w * g.frequencies[j] / p) * g.projectors[j];
      }
    return R;
  };
  auto normalized = [](const Eigen::Matrix4cd& m) {
    Eigen::Matrix4cd h = (m + m.adjoint()) / 2;
    return Eigen::Matrix4cd(h / h.trace().real());
  };

  MleResult res;
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Identity() / 4;
  double ll = log_likelihood(groups, rho);
  if (opt.record_trace) res.trace.push_back(ll);
  const Eigen::Matrix4cd id = Eigen::Matrix4cd::Identity();
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::Matrix4cd R = r_operator(rho);
    Eigen::Matrix4cd next = normalized(R * rho * R);
    double next_ll = log_likelihood(groups, next);
    // Diluted steps (I + eps R) guarantee an increase for small eps.
    double eps = 1;
    while (next_ll < ll && eps > 1e-12) {
      const Eigen::Matrix4cd step = id + eps * R;
      next = normalized(step * rho * step);
      next_ll = log_likelihood(groups, next);
      eps /= 2;
    }
    if (next_ll < ll) {  // stationary to machine precision
      res.converged = true;
      break;
    }
    const double gain = next_ll - ll;
    rho = next;
    ll = next_ll;
    if (opt.record_trace) res.trace.push_back(ll);
    if (gain < opt.tolerance) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.log_likelihood = ll;
  res.rho = DensityMatrix(ComplexMatrix(rho));
  return res;
}

MleResult mle_reconstruct(const ProbabilityTable& probs, const MleOptions& opt) {
  const auto groups = measurement_groups(probs);
  return mle_reconstruct(std::span<const MeasurementGroup>(groups), opt);
}

// --- local rotations ---------------------------------------------------------

namespace {

Eigen::Matrix2cd unitary_from(const Eigen::VectorXd& x, int offset) {
  return zyz_unitary<double>(x(offset), x(offset + 1), x(offset + 2));
}

Eigen::Matrix4cd local(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  return kron2<double>(a, b);
}

double rotated_fidelity(const Eigen::Matrix4cd& u, const DensityMatrix& rho, BellLabel target) {
  const Eigen::Vector4cd psi = u.adjoint() * bell_vector<double>(target);
  return (psi.adjoint() * rho.matrix() * psi)(0, 0).real();
}

}  // namespace

BellFormResult bell_form_search(const std::array<DensityMatrix, 4>& states, int restarts, std::uint64_t seed) {
  for (const auto& s : states) detail::require_dim(s, 4, "bell_form_search");
  auto objective = [&](const Eigen::VectorXd& x) {
    const Eigen::Matrix4cd u = local(unitary_from(x, 0), unitary_from(x, 3));
    double sum = 0;
    for (int i = 0; i < 4; ++i) {
      const double f = rotated_fidelity(u, states[i], kBellLabels[i]);
      sum += f * f;
    }
    return 4 - sum;
  };
  NelderMeadOptions nm;
  const MinimizeResult best =
      multistart_minimize(objective, Eigen::VectorXd::Zero(6), std::max(restarts, kMinRestarts), seed, nm);
  BellFormResult r;
  r.u1 = unitary_from(best.x, 0);
  r.u2 = unitary_from(best.x, 3);
  const Eigen::Matrix4cd u = local(r.u1, r.u2);
  for (int i = 0; i < 4; ++i) r.fidelities[i] = rotated_fidelity(u, states[i], kBellLabels[i]);
  r.objective = best.value;
  return r;
}

namespace {

struct RestrictedParams {
  double theta_A, theta_B;
  Eigen::Matrix2cd u_a, u_b;
};

RestrictedParams restricted_from(const Eigen::VectorXd& x) {
  return {x(0), x(1), unitary_from(x, 2), unitary_from(x, 5)};
}

Eigen::Matrix4cd restricted_u(const RestrictedParams& p, int i) {
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  switch (i) {
    case 0: return local(id, p.u_a);
    case 1: return local(z_rotation<double>(p.theta_A), p.u_b);
    case 2: return local(z_rotation<double>(p.theta_B), p.u_a);
    default: return local(id, p.u_b);
  }
}

double wrap_pi(double theta) {
  double t = std::fmod(theta, pi);
  if (t < 0) t += pi;
  return t;
}

}  // namespace

Eigen::Matrix4cd restricted_rotation(const RestrictedFit& fit, int i) {
  return restricted_u({fit.theta_Amem, fit.theta_Bmem, fit.u_a, fit.u_b}, i);
}

RestrictedFit restricted_rotation_fit(const std::array<DensityMatrix, 4>& states, int restarts,
                                      std::uint64_t seed) {
  for (const auto& s : states) detail::require_dim(s, 4, "restricted_rotation_fit");
  auto objective = [&](const Eigen::VectorXd& x) {
    const RestrictedParams p = restricted_from(x);
    double sum = 0;
    for (int i = 0; i < 4; ++i) sum += rotated_fidelity(restricted_u(p, i), states[i], BellLabel::PhiPlus);
    return 4 - sum;
  };
  const MinimizeResult best =
      multistart_minimize(objective, Eigen::VectorXd::Zero(8), std::max(restarts, kMinRestarts), seed);
  const RestrictedParams p = restricted_from(best.x);
  RestrictedFit r;
  r.theta_Amem = wrap_pi(p.theta_A);
  r.theta_Bmem = wrap_pi(p.theta_B);
  r.u_a = p.u_a;
  r.u_b = p.u_b;
  for (int i = 0; i < 4; ++i)
    r.fidelities[i] = rotated_fidelity(restricted_u(p, i), states[i], BellLabel::PhiPlus);
  r.objective = best.value;
  return r;
}

std::array<double, 4> restricted_overlaps(const std::array<DensityMatrix, 4>& states, const RestrictedFit& fit) {
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector4cd target = restricted_rotation(fit, i).adjoint() * bell_vector<double>(BellLabel::PhiPlus);
    const Eigen::Vector4cd nearest = nearest_max_entangled(states[i]).first;
    out[i] = std::norm(target.dot(nearest));
  }
  return out;
}

// --- feedforward ---------------------------------------------------------------

MleResult feedforward_reconstruct(std::span<const FeedforwardGroup> groups, const Eigen::Matrix4cd& U_A,
                                  const Eigen::Matrix4cd& U_B, const MleOptions& opt) {
  if (groups.empty()) throw std::invalid_argument("feedforward_reconstruct: no data sets");
  if (!is_unitary(U_A) || !is_unitary(U_B)) throw std::invalid_argument("feedforward_reconstruct: non-unitary rotation");
  std::vector<MeasurementGroup> all;
  for (const auto& g : groups) {
    if (g.probs.size() != 9) throw std::invalid_argument("feedforward_reconstruct: each data set needs 9 basis pairs");
    const Eigen::Matrix4cd W =
        pauli_frame<double>(correction_for(g.outcome)) * (g.memory == MemoryIon::A ? U_A : U_B);
    for (MeasurementGroup m : measurement_groups(g.probs)) {
      for (auto& o : m.projectors) o = W * o * W.adjoint();
      all.push_back(m);
    }
  }
  return mle_reconstruct(std::span<const MeasurementGroup>(all), opt);
}

// --- Monte-Carlo error bars -----------------------------------------------------

void MCConfig::validate() const {
  if (resamples < 2) throw std::invalid_argument("MCConfig: need at least 2 resamples");
  if (!(quantile > 0 && quantile < 0.5)) throw std::invalid_argument("MCConfig: quantile must be in (0, 0.5)");
  if (zero_substitute < 0) throw std::invalid_argument("MCConfig: negative zero substitute");
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * double(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - double(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + frac * (v[i + 1] - v[i]);
}

}  // namespace

ErrorBars mc_error_bars(const TomoDataset& data, BellLabel ion_outcome, const StateStatistic& statistic,
                        const MCConfig& cfg) {
  cfg.validate();
  data.validate();
  ErrorBars out;
  out.value = statistic(mle_reconstruct(bayes_probabilities(data, ion_outcome)).rho);

  const int n = cfg.resamples;
  std::vector<double> values(n, 0);
  std::vector<char> ok(n, 0);
  parallel_for(n, [&](std::size_t r) {
    auto rng = substream(cfg.seed, r);
    auto draw = [&](std::uint64_t observed) -> std::uint64_t {
      const double mean = observed == 0 ? double(cfg.zero_substitute) : double(observed);
      if (mean <= 0) return 0;
      return std::poisson_distribution<std::uint64_t>(mean)(rng);
    };
    TomoDataset copy = data;
    for (auto& s : copy.settings) {
      for (auto& c : s.C) c = draw(c);
      s.N_A = draw(s.N_A);
    }
    try {
      const MleResult m = mle_reconstruct(bayes_probabilities(copy, ion_outcome));
      if (!m.converged) return;
      values[r] = statistic(m.rho);
      ok[r] = 1;
    } catch (const std::exception&) {
      // counted as dropped below
    }
  });
  std::vector<double> kept;
  for (int r = 0; r < n; ++r)
    if (ok[r]) kept.push_back(values[r]);
  out.dropped = n - static_cast<int>(kept.size());
  if (out.dropped > 0.05 * n)
    throw NumericalError("mc_error_bars: more than 5% of the resamples failed to reconstruct");
  std::sort(kept.begin(), kept.end());
  out.median = quantile_sorted(kept, 0.5);
  out.delta_minus = out.median - quantile_sorted(kept, cfg.quantile);
  out.delta_plus = quantile_sorted(kept, 1 - cfg.quantile) - out.median;
  return out;
}

// --- ideal-model checks ------------------------------------------------------------

int distinct_state_count(double theta_A, double theta_B) {
  // Qubit order (ion A, photon a, ion B, photon b); each pair starts in Phi+.
  const Eigen::Vector4cd phi = bell_vector<double>(BellLabel::PhiPlus);
  std::vector<Eigen::Vector4cd> photon_states;
  for (MemoryIon memory : {MemoryIon::A, MemoryIon::B}) {
    // The ion that is not in memory picks up the memory ion's phase rotation.
    const Eigen::Matrix2cd rA = memory == MemoryIon::B ? z_rotation<double>(theta_B) : Eigen::Matrix2cd::Identity();
    const Eigen::Matrix2cd rB = memory == MemoryIon::A ? z_rotation<double>(theta_A) : Eigen::Matrix2cd::Identity();
    const Eigen::Vector4cd pa = kron2<double>(rA, Eigen::Matrix2cd::Identity()) * phi;
    const Eigen::Vector4cd pb = kron2<double>(rB, Eigen::Matrix2cd::Identity()) * phi;
    for (BellLabel outcome : kBellLabels) {
      const Eigen::Vector4cd beta = bell_vector<double>(outcome);
      Eigen::Vector4cd out = Eigen::Vector4cd::Zero();
      for (int A = 0; A < 2; ++A)
        for (int B = 0; B < 2; ++B)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              out(2 * a + b) += std::conj(beta(2 * A + B)) * pa(2 * A + a) * pb(2 * B + b);
      photon_states.push_back(out.normalized());
    }
  }
  std::vector<Eigen::Vector4cd> reps;
  for (const auto& s : photon_states) {
    const bool known = std::any_of(reps.begin(), reps.end(),
                                   [&](const Eigen::Vector4cd& r) { return std::norm(r.dot(s)) >= 1 - 1e-9; });
    if (!known) reps.push_back(s);
  }
  return static_cast<int>(reps.size());
}

double fit_memory_tau(std::span<const FidelityPoint> points, const DensityMatrix& rho0) {
  detail::require_dim(rho0, 4, "fit_memory_tau");
  if (points.size() < 2) throw std::invalid_argument("fit_memory_tau: need at least two points");
  const auto [tmin, tmax] = std::minmax_element(points.begin(), points.end(),
                                                [](const auto& a, const auto& b) { return a.t < b.t; });
  if (tmin->t < 0) throw std::invalid_argument("fit_memory_tau: negative time");
  if (tmax->t - tmin->t <= 0) throw std::invalid_argument("fit_memory_tau: all points share one time");

  // F(t) = F_keep - w(t) (F_keep - F_flip): affine in the flip weight.
  const DensityMatrix target = nearest_max_entangled_state(rho0);
  const double f_keep = fidelity(rho0, target);
  const double f_flip = fidelity(dephase(rho0, 1.0), target);
  auto sse = [&](double tau) {
    double s = 0;
    for (const auto& p : points) {
      const double model = f_keep - gaussian_flip_weight(p.t, tau) * (f_keep - f_flip);
      s += (model - p.F) * (model - p.F);
    }
    return s;
  };
  // Log grid over tau, then golden-section refinement around the best cell.
  const double lo_tau = 1e-3 * tmax->t, hi_tau = 1e3 * tmax->t;
  const int n = 2000;
  auto grid = [&](int i) { return lo_tau * std::pow(hi_tau / lo_tau, double(i) / n); };
  int best = 0;
  double best_sse = sse(grid(0));
  for (int i = 1; i <= n; ++i) {
    const double v = sse(grid(i));
    if (v < best_sse) {
      best_sse = v;
      best = i;
    }
  }
  if (best == n || best == 0)
    throw NumericalError("fit_memory_tau: no decay resolved within the sampled time range");
  double a = grid(best - 1), b = grid(best + 1);
  const double g = (std::sqrt(5.0) - 1) / 2;
  while (b - a > 1e-7) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    (sse(c) < sse(d) ? b : a) = sse(c) < sse(d) ? d : c;
  }
  return (a + b) / 2;
}

TomoDataset synthesize_dataset(const std::array<DensityMatrix, 4>& states, double counts_per_setting,
                               std::optional<std::uint64_t> seed) {
  if (!(counts_per_setting > 0)) throw std::invalid_argument("synthesize_dataset: counts must be positive");
  TomoDataset data;
  std::mt19937_64 rng = substream(seed.value_or(0), 0);
  for (int k = 0; k < 36; ++k) {
    SettingCounts sc;
    sc.setting = ProjectorSetting::from_index(k);
    const Eigen::Matrix4cd o = setting_projector(sc.setting);
    for (int i = 0; i < 4; ++i) {
      const double mean = counts_per_setting * std::max((o * states[i].matrix()).trace().real(), 0.0);
      sc.C[i] = seed ? std::poisson_distribution<std::uint64_t>(std::max(mean, 1e-12))(rng)
                     : static_cast<std::uint64_t>(std::llround(mean));
    }
    // Counters do not depend on the outcome; equal values make the Bayes
    // correction a constant factor.
    sc.N_A = sc.M_A = sc.M_B_given_A = static_cast<std::uint64_t>(std::ceil(counts_per_setting)) * 10;
    data.settings.push_back(sc);
  }
  return data;
}

}  // namespace qrep
