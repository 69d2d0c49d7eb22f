#include "qrepeater/protosim.hpp"

#include "qrepeater/parallel.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qrep {

ProtocolConfig ProtocolConfig::repeater_for(const NodeParams& node, const LinkParams& link) {
  ProtocolConfig cfg;
  const double p = node.P0_link * std::sqrt(channel_eta(link.gamma, link.L));
  cfg.p_A1 = cfg.p_B1 = cfg.p_A2 = cfg.p_B2 = p;
  cfg.t_attempt_loop1 = cfg.t_attempt_loop2 = node.T0;
  cfg.t_wait = link.L / link.c_km();
  cfg.t_swap = node.T_swap;
  cfg.loop2_max = node.K ? *node.K : INT_MAX;
  cfg.L = link.L;
  cfg.c = link.c;
  return cfg;
}

ProtocolConfig ProtocolConfig::direct_for(const NodeParams& node, const LinkParams& link) {
  ProtocolConfig cfg;
  cfg.mode = ProtocolMode::direct;
  const double p = node.P0_link * channel_eta(link.gamma, link.L);
  cfg.p_A1 = cfg.p_B1 = cfg.p_A2 = cfg.p_B2 = p;
  cfg.t_attempt_loop1 = node.T0_direct;
  cfg.t_wait = 0;
  cfg.L = link.L;
  cfg.c = link.c;
  return cfg;
}

void ProtocolConfig::validate() const {
  for (double p : {p_A1, p_B1, p_A2, p_B2})
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("protocol: probability outside [0,1]");
  for (double t : {t_attempt_loop1, t_attempt_loop2, t_wait, t_swap, t_init, loop1_overhead_time,
                   loop2_overhead_time, L})
    if (!(t >= 0)) throw std::invalid_argument("protocol: negative time or length");
  if (loop1_max < 1 || loop2_max < 1) throw std::invalid_argument("protocol: loop caps must be >= 1");
  if (loop1_overhead_every < 0 || loop2_overhead_every < 0)
    throw std::invalid_argument("protocol: negative overhead period");
  if (!(c > 0)) throw std::invalid_argument("protocol: light speed must be positive");
}

namespace {

constexpr std::uint64_t kChunk = 1 << 15;

// Number of failures before the first success, or `cap` if none within cap.
long failures_before_success(std::mt19937_64& rng, double p, long cap) {
  if (p <= 0) return cap;
  if (p >= 1) return 0;
  std::geometric_distribution<long> g(p);
  return std::min(g(rng), cap);
}

double overhead(long attempts, int every, double time) {
  return every > 0 ? double(attempts / every) * time : 0.0;
}

struct Partial {
  std::uint64_t trials = 0, successes = 0, attempts = 0, loop2_entries = 0, loop2_successes = 0;
  std::vector<std::uint64_t> hist;
  double active = 0, init = 0, storage = 0;
};

void merge(Partial& into, const Partial& p) {
  into.trials += p.trials;
  into.successes += p.successes;
  into.attempts += p.attempts;
  into.loop2_entries += p.loop2_entries;
  into.loop2_successes += p.loop2_successes;
  if (into.hist.size() < p.hist.size()) into.hist.resize(p.hist.size(), 0);
  for (std::size_t i = 0; i < p.hist.size(); ++i) into.hist[i] += p.hist[i];
  into.active += p.active;
  into.init += p.init;
  into.storage += p.storage;
}

template <typename Trial>
Partial run_chunks(std::uint64_t trials, std::uint64_t seed, Trial trial) {
  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<Partial> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    auto rng = substream(seed, c);
    const std::uint64_t begin = c * kChunk, end = std::min(trials, begin + kChunk);
    for (std::uint64_t i = begin; i < end; ++i) trial(rng, parts[c]);
  });
  Partial total;
  for (const auto& p : parts) merge(total, p);  // fixed order, thread-count independent
  return total;
}

SimStats finish(const ProtocolConfig& cfg, const Partial& t) {
  SimStats s;
  s.trials = t.trials;
  s.successes = t.successes;
  s.attempts = t.attempts;
  s.loop2_entries = t.loop2_entries;
  s.loop2_successes = t.loop2_successes;
  s.k_histogram = t.hist;
  s.P_s = t.attempts ? double(t.successes) / double(t.attempts) : 0;
  s.P2 = t.loop2_entries ? double(t.loop2_successes) / double(t.loop2_entries) : 0;
  s.active_time = t.active;
  s.total_time = t.active + t.init;
  s.active_rate = t.active > 0 ? double(t.successes) / t.active : 0;
  s.absolute_rate = s.total_time > 0 ? double(t.successes) / s.total_time : 0;
  s.mean_storage_time = t.loop2_successes ? t.storage / double(t.loop2_successes) : 0;
  if (cfg.mode == ProtocolMode::repeater && cfg.p_A1 > 0 && cfg.p_B1 > 0) {
    const Enhancement e = enhancement_factors(cfg.p_A1, cfg.p_B1, s.P2);
    s.alpha = e.alpha;
    s.alpha_max = e.alpha_max;
  }
  return s;
}

}  // namespace

SimStats simulate_repeater(const ProtocolConfig& cfg, std::uint64_t trials, std::uint64_t seed) {
  cfg.validate();
  if (cfg.mode != ProtocolMode::repeater) throw std::invalid_argument("simulate_repeater: mode is not repeater");
  if (trials == 0) throw std::invalid_argument("simulate_repeater: zero trials");

  const double q1 = 1 - (1 - cfg.p_A1) * (1 - cfg.p_B1);
  const double both = cfg.p_A1 * cfg.p_B1;
  const double only_a = cfg.p_A1 * (1 - cfg.p_B1);
  const double t1 = cfg.t_attempt_loop1 + cfg.t_wait;
  const double t2 = cfg.t_attempt_loop2 + cfg.t_wait;
  Partial total = run_chunks(trials, seed, [&](std::mt19937_64& rng, Partial& acc) {
    ++acc.trials;
    acc.init += cfg.t_init;
    const long fail1 = failures_before_success(rng, q1, cfg.loop1_max);
    if (fail1 >= cfg.loop1_max) {
      acc.attempts += cfg.loop1_max;
      acc.active += cfg.loop1_max * t1 + overhead(cfg.loop1_max, cfg.loop1_overhead_every, cfg.loop1_overhead_time);
      return;
    }
    const long n1 = fail1 + 1;
    acc.attempts += n1;
    acc.active += n1 * t1 + overhead(n1, cfg.loop1_overhead_every, cfg.loop1_overhead_time);

    const double u = std::uniform_real_distribution<double>(0, q1)(rng);
    if (u < both) {
      ++acc.successes;
      acc.active += cfg.t_swap;
      return;
    }
    const double p2 = u < both + only_a ? cfg.p_B2 : cfg.p_A2;
    ++acc.loop2_entries;
    const long fail2 = failures_before_success(rng, p2, cfg.loop2_max);
    const long n2 = std::min<long>(fail2 + 1, cfg.loop2_max);
    acc.attempts += n2;
    acc.active += n2 * t2 + overhead(n2, cfg.loop2_overhead_every, cfg.loop2_overhead_time);
    if (fail2 >= cfg.loop2_max) return;
    ++acc.successes;
    ++acc.loop2_successes;
    acc.active += cfg.t_swap;
    acc.storage += n2 * t2;
    if (acc.hist.size() < std::size_t(n2)) acc.hist.resize(n2, 0);
    ++acc.hist[n2 - 1];
  });
  return finish(cfg, total);
}

SimStats simulate_direct(const ProtocolConfig& cfg, std::uint64_t trials, std::uint64_t seed) {
  cfg.validate();
  if (cfg.mode != ProtocolMode::direct) throw std::invalid_argument("simulate_direct: mode is not direct");
  if (trials == 0) throw std::invalid_argument("simulate_direct: zero trials");
  const double q = 1 - (1 - cfg.p_A1) * (1 - cfg.p_B1);
  const double t = cfg.t_attempt_loop1 + 2 * cfg.L / (cfg.c / 1e3);
  Partial total = run_chunks(trials, seed, [&](std::mt19937_64& rng, Partial& acc) {
    ++acc.trials;
    acc.init += cfg.t_init;
    const long fail = failures_before_success(rng, q, cfg.loop1_max);
    const long n = std::min<long>(fail + 1, cfg.loop1_max);
    acc.attempts += n;
    acc.active += n * t + overhead(n, cfg.loop1_overhead_every, cfg.loop1_overhead_time);
    if (fail < cfg.loop1_max) ++acc.successes;
  });
  return finish(cfg, total);
}

SimStats simulate(const ProtocolConfig& cfg, std::uint64_t trials, std::uint64_t seed) {
  return cfg.mode == ProtocolMode::repeater ? simulate_repeater(cfg, trials, seed)
                                            : simulate_direct(cfg, trials, seed);
}

Enhancement enhancement_factors(double p_A1, double p_B1, double P2) {
  if (!(p_A1 > 0 && p_A1 <= 1 && p_B1 > 0 && p_B1 <= 1))
    throw std::invalid_argument("enhancement_factors: probabilities must be in (0,1]");
  if (!(P2 >= 0 && P2 <= 1)) throw std::invalid_argument("enhancement_factors: P2 outside [0,1]");
  const double alpha_max = (p_A1 + p_B1) / (2 * p_A1 * p_B1);
  return {alpha_max * P2, alpha_max};
}

namespace {
ArmProbabilities arms_of(const ProtocolConfig& cfg) {
  return {cfg.p_A1, cfg.p_B1, cfg.p_A2, cfg.p_B2, cfg.loop2_max};
}
}  // namespace

double analytic_P2(const ProtocolConfig& cfg) { return renewal(arms_of(cfg)).P2; }

double predicted_final_fidelity(const ProtocolConfig& cfg, double F0, double tau, double t_attempt) {
  if (!(F0 >= 0 && F0 <= 1)) throw std::invalid_argument("predicted_final_fidelity: F0 outside [0,1]");
  if (!(t_attempt >= 0)) throw std::invalid_argument("predicted_final_fidelity: negative attempt time");
  const DensityMatrix pair = dephase(bell_state(BellLabel::PhiPlus), 1 - F0);  // ion (x) photon
  const Eigen::Matrix4cd swap_qubits =
      (Eigen::Matrix4cd() << 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1).finished();
  const DensityMatrix fresh = pair;  // ion B (x) photon b, ions are the inner qubits
  const std::vector<double> w = storage_distribution(arms_of(cfg), cfg.loop2_max);

  Eigen::Matrix4cd mixed = Eigen::Matrix4cd::Zero();
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] == 0) continue;
    const DensityMatrix stored = dephase_gaussian(pair, double(k) * t_attempt, tau);
    const DensityMatrix photon_ion(ComplexMatrix(swap_qubits * stored.matrix() * swap_qubits));
    mixed += w[k] * entanglement_swap(photon_ion, fresh, BellLabel::PhiPlus).state.matrix();
  }
  return fidelity(DensityMatrix(ComplexMatrix(mixed)), bell_state(BellLabel::PhiPlus));
}

}  // namespace qrep
