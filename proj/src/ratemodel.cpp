#include "qrepeater/ratemodel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qrep {

NodeParams current_node() { return NodeParams{}; }

NodeParams enhanced_node() {
  NodeParams n;
  n.P0_link = 0.21;
  n.tau = 0.63;
  n.F0 = 0.99;
  n.F_swap_ions = 0.99;
  n.V = 0.98;
  n.K.reset();
  return n;
}

double channel_eta(double gamma, double L) {
  if (gamma < 0 || L < 0) throw std::invalid_argument("channel_eta: negative gamma or length");
  return std::pow(10.0, -gamma * L);
}

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument(std::string(name) + " outside [0,1]");
}

// Success probability and expected length of a Loop-2 run capped at K.
struct Loop2 {
  double success;
  double attempts;
};

Loop2 loop2(double p, std::optional<int> K) {
  if (!K) {
    if (p <= 0) return {0, std::numeric_limits<double>::infinity()};
    return {1, 1 / p};
  }
  if (*K <= 0) return {0, 0};
  if (p <= 0) return {0, double(*K)};
  // 1-(1-p)^K without cancellation for small p.
  const double success = -std::expm1(*K * std::log1p(-p));
  return {success, success / p};
}

}  // namespace

RenewalStats renewal(const ArmProbabilities& p) {
  check_probability(p.pA1, "pA1");
  check_probability(p.pB1, "pB1");
  check_probability(p.pA2, "pA2");
  check_probability(p.pB2, "pB2");
  if (p.K && *p.K < 0) throw std::invalid_argument("renewal: negative Loop-2 cap");

  RenewalStats s;
  s.q1 = 1 - (1 - p.pA1) * (1 - p.pB1);
  if (s.q1 <= 0) {
    s.nbar = std::numeric_limits<double>::infinity();
    return s;
  }
  const double both = p.pA1 * p.pB1;
  const double only_a = p.pA1 * (1 - p.pB1);  // B keeps trying in Loop 2
  const double only_b = p.pB1 * (1 - p.pA1);
  const Loop2 wait_b = loop2(p.pB2, p.K);
  const Loop2 wait_a = loop2(p.pA2, p.K);

  const double single = only_a + only_b;
  s.P2 = single > 0 ? (only_a * wait_b.success + only_b * wait_a.success) / single : 0;
  s.round_success = (both + only_a * wait_b.success + only_b * wait_a.success) / s.q1;
  auto part = [](double w, double n) { return w > 0 ? w * n : 0.0; };
  s.round_attempts = 1 / s.q1 + (part(only_a, wait_b.attempts) + part(only_b, wait_a.attempts)) / s.q1;
  if (s.round_success <= 0) {
    s.nbar = std::numeric_limits<double>::infinity();
    return s;
  }
  s.nbar = s.round_attempts / s.round_success;
  s.P_s = 1 / s.nbar;
  return s;
}

std::vector<double> storage_distribution(const ArmProbabilities& p, int K) {
  if (K < 0) throw std::invalid_argument("storage_distribution: negative cap");
  std::vector<double> w{p.pA1 * p.pB1};
  const double only_a = p.pA1 * (1 - p.pB1);
  const double only_b = p.pB1 * (1 - p.pA1);
  double fail_a = 1, fail_b = 1;  // (1-p)^(k-1)
  for (int k = 1; k <= K; ++k) {
    w.push_back(only_a * p.pB2 * fail_b + only_b * p.pA2 * fail_a);
    fail_a *= 1 - p.pA2;
    fail_b *= 1 - p.pB2;
    // Very long caps: stop once the remaining tail is below double resolution.
    if (k > 1000 && std::max(fail_a, fail_b) < 1e-18) break;
  }
  double total = 0;
  for (double x : w) total += x;
  if (total <= 0) throw NumericalError("storage_distribution: no successful outcome");
  for (double& x : w) x /= total;
  return w;
}

double rkr_direct(const NodeParams& node, const LinkParams& link) {
  if (!(link.L >= 0)) throw std::invalid_argument("rkr_direct: negative length");
  const double p = node.P0_link * channel_eta(link.gamma, link.L);
  const double success = 1 - (1 - p) * (1 - p);
  const double T = node.T0_direct + 2 * link.L / link.c_km();
  if (!(T > 0)) throw std::invalid_argument("rkr_direct: zero attempt time");
  return success / T;
}

double rkr_repeater(const NodeParams& node, const LinkParams& link, std::optional<int> K) {
  if (!(link.L >= 0)) throw std::invalid_argument("rkr_repeater: negative length");
  const double p = node.P0_link * std::sqrt(channel_eta(link.gamma, link.L));
  const RenewalStats s = renewal(ArmProbabilities::symmetric(p, K));
  const double T = node.T0 + link.L / link.c_km();
  if (!std::isfinite(s.nbar)) return 0;
  return 1 / (s.nbar * T + node.T_swap);
}

double rkr_repeater(const NodeParams& node, const LinkParams& link) {
  return rkr_repeater(node, link, node.K);
}

double bound_min_length(double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("bound_min_length: gamma must be positive");
  return -2 * std::log10(2.0 / 3.0) / gamma;
}

double bound_storage_time(const NodeParams& node, const LinkParams& link) {
  if (!(node.P0_link > 0 && node.P0_link <= 1))
    throw std::invalid_argument("bound_storage_time: P0 outside (0,1]");
  return 3 * std::log10(1.5) / (node.P0_link * link.c_km() * link.gamma);
}

double bound_khat(const NodeParams& node) {
  if (!(node.P0_link > 0 && node.P0_link <= 1))
    throw std::invalid_argument("bound_khat: P0 outside (0,1]");
  return 3 / (2 * node.P0_link);
}

PerfectBound bound_perfect(const NodeParams& node, const LinkParams& link) {
  const double p0 = node.P0_link;
  if (!(p0 > 0)) throw std::invalid_argument("bound_perfect: P0 must be positive");
  const double root_eta = 2 * p0 / 3;
  if (root_eta >= 1)
    throw std::domain_error("bound_perfect: 2*P0/3 >= 1, every length gives an advantage");
  return {root_eta * root_eta, -3 * std::log10(root_eta) / (p0 * p0 * link.gamma * link.c_km())};
}

double chain_time(int n_levels, const NodeParams& node, const LinkParams& link) {
  if (n_levels < 0) throw std::invalid_argument("chain_time: negative nesting level");
  const double eta_t = std::pow(10.0, -link.gamma * link.L0 / 2);
  const double per_attempt = link.L0 / link.c_km() + node.T0_two_photon;
  const double p = node.P0_link * eta_t;
  if (!(p > 0)) throw std::invalid_argument("chain_time: zero link probability");
  if (n_levels == 0) return per_attempt / (p * p);
  return per_attempt * std::pow(3.0, n_levels) / (std::pow(2.0, n_levels - 1) * p * p);
}

DensityMatrix chain_link_state(double F0, double V) {
  const double F = (1 + V * (1 - 2 * F0) * (1 - 2 * F0)) / 2;
  Eigen::Vector4d w(0, 0, 1 - F, F);
  return bell_diagonal<double>(w);
}

double chain_fidelity(int n_levels, double F0, double F_swap_ions, double V) {
  for (double x : {F0, F_swap_ions, V})
    if (!(x >= 0 && x <= 1)) throw std::invalid_argument("chain_fidelity: parameter outside [0,1]");
  if (n_levels < 0) throw std::invalid_argument("chain_fidelity: negative nesting level");
  DensityMatrix rho = chain_link_state(F0, V);
  for (int level = 0; level < n_levels; ++level) {
    rho = entanglement_swap(rho, rho, BellLabel::PhiPlus).state;
    rho = depolarize(rho, F_swap_ions);
  }
  return nearest_max_entangled_fidelity(rho);
}

double binary_entropy(double x) {
  if (x <= 0 || x >= 1) return 0;
  return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

double skf_six_state(double eX, double eY, double eZ) {
  constexpr double slack = 1e-12;
  for (double e : {eX, eY, eZ})
    if (!(e >= -slack && e <= 0.5 + slack))
      throw std::invalid_argument("skf_six_state: QBER outside [0, 0.5]");
  eX = std::clamp(eX, 0.0, 0.5);
  eY = std::clamp(eY, 0.0, 0.5);
  eZ = std::clamp(eZ, 0.0, 0.5);

  auto argument = [](double v) {
    if (v < -1e-9 || v > 1 + 1e-9)
      throw std::invalid_argument("skf_six_state: QBER triple is not realizable by a two-qubit state");
    return std::clamp(v, 0.0, 1.0);
  };
  double r;
  if (eZ < 1e-9) {
    r = 1 - binary_entropy(argument(1 - (eX + eY) / 2));
  } else {
    const double a = argument((1 + (eX - eY) / eZ) / 2);
    const double b = argument((1 - (eX + eY + eZ) / 2) / (1 - eZ));
    r = 1 - binary_entropy(eZ) - eZ * binary_entropy(a) - (1 - eZ) * binary_entropy(b);
  }
  return std::clamp(r, 0.0, 1.0);
}

double skf_six_state(const Qber& q) { return skf_six_state(q.x, q.y, q.z); }

namespace {

DensityMatrix stored_state_from_weight(const NodeParams& node, double flip) {
  const DensityMatrix fresh = depolarize(bell_state(BellLabel::PhiPlus), node.F0);
  return depolarize(dephase(fresh, flip), node.F_swap_ions);
}

double stored_skf(const NodeParams& node, double flip) {
  return skf_six_state(qber(stored_state_from_weight(node, flip), BellLabel::PhiPlus));
}

}  // namespace

DensityMatrix skr_stored_state(const NodeParams& node, double t) {
  return stored_state_from_weight(node, gaussian_flip_weight(t, node.tau));
}

SkrResult skr_pipeline(const NodeParams& node, const LinkParams& link) {
  if (!(link.L >= 0)) throw std::invalid_argument("skr_pipeline: negative length");
  const double T = node.T0 + link.L / link.c_km();
  auto skf_at = [&](long k) { return stored_skf(node, gaussian_flip_weight(k * T, node.tau)); };

  SkrResult out;
  // Stage 1: memory cutoff. The secret fraction only falls with storage time.
  if (skf_at(1) < kSkfCutoff) {
    out.rkr = rkr_repeater(node, link, 0);
    return out;
  }
  long lo = 1, hi = 2;
  while (hi <= kMaxCutoff && skf_at(hi) >= kSkfCutoff) {
    lo = hi;
    hi *= 2;
  }
  std::optional<int> cap;
  if (hi > kMaxCutoff && skf_at(kMaxCutoff) >= kSkfCutoff) {
    out.K_cutoff = kMaxCutoff;  // no useful cutoff, run with unbounded memory
  } else {
    hi = std::min<long>(hi, kMaxCutoff);
    while (hi - lo > 1) {
      const long mid = lo + (hi - lo) / 2;
      (skf_at(mid) >= kSkfCutoff ? lo : hi) = mid;
    }
    out.K_cutoff = static_cast<int>(lo);
    cap = out.K_cutoff;
  }

  // Stage 2: raw rate and storage-time distribution under that cutoff.
  const double p = node.P0_link * std::sqrt(channel_eta(link.gamma, link.L));
  out.rkr = rkr_repeater(node, link, cap);

  // The stored state is affine in the dephasing weight, so averaging the
  // weight over the distribution averages the state.
  double mean_flip = 0;
  if (std::isfinite(node.tau)) {
    double total = p * p, acc = 0;
    const double single = 2 * p * (1 - p);
    double tail = 1;  // (1-p)^(k-1)
    const long last = cap ? *cap : kMaxCutoff;
    for (long k = 1; k <= last; ++k) {
      const double w = single * p * tail;
      total += w;
      acc += w * gaussian_flip_weight(k * T, node.tau);
      tail *= 1 - p;
      if (!cap && tail < 1e-17) break;
    }
    mean_flip = acc / total;
  }

  // Stage 3: key fraction of the averaged state.
  out.skf = stored_skf(node, mean_flip);
  out.skr = out.rkr * out.skf;
  return out;
}

double skr_bound(const LinkParams& link) {
  if (!(link.L > 0)) throw std::invalid_argument("skr_bound: L must be positive");
  const double eta = channel_eta(link.gamma, link.L);
  return -std::log1p(-eta) / std::numbers::ln2 * link.c_km() / link.L;
}

RepeaterlessRequirement repeaterless_requirements(const LinkParams& link, double target_rate) {
  if (!(link.L > 0 && target_rate > 0))
    throw std::invalid_argument("repeaterless_requirements: L and rate must be positive");
  const double rate = target_rate / channel_eta(link.gamma, link.L);
  return {rate, rate * 2 * link.L / link.c_km()};
}

Budget efficiency_budget(std::span<const Factor> factors) {
  double product = 1, rel2 = 0;
  for (const Factor& f : factors) {
    if (!(f.value >= 0 && f.value <= 1) || !(f.sigma >= 0))
      throw std::invalid_argument("efficiency_budget: value outside [0,1] or negative sigma");
    if (f.value == 0) {
      if (f.sigma > 0)
        throw std::invalid_argument("efficiency_budget: zero factor with nonzero uncertainty");
      product = 0;
      continue;
    }
    product *= f.value;
    rel2 += (f.sigma / f.value) * (f.sigma / f.value);
  }
  return {product, product * std::sqrt(rel2)};
}

}  // namespace qrep
