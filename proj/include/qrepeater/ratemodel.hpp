// Analytic rate models for a single repeater node and for chains of nodes.
//
// Units: lengths in km, times in s, rates in Hz. LinkParams::c is in m/s to
// match how fiber light speed is usually quoted; every formula uses km/s.
#pragma once

#include "qrepeater/qmath.hpp"

#include <optional>
#include <span>
#include <vector>

namespace qrep {

struct NodeParams {
  double P0_link = 0.018;
  double tau = 0.062;
  double F0 = 0.96;
  double F_swap_ions = 0.95;
  double V = 0.38;               // two-photon interference visibility
  double T0 = 123e-6;            // single-photon attempt time (Loop 2, rate model)
  double T0_two_photon = 175e-6; // Loop-1 attempt generating one photon per arm
  double T0_direct = 201e-6;     // attempt time of the direct-transmission setup
  double T_swap = 2157e-6;
  std::optional<int> K = 190;    // Loop-2 cap; empty means unbounded
};

struct LinkParams {
  double L = 50;          // km, end node to end node
  double gamma = 0.0173;  // 1/km, 10^(-gamma L) transmission
  double c = 2e8;         // m/s
  double L0 = 50;         // km, elementary link length in a chain

  double c_km() const { return c / 1e3; }
};

// Present-day node (photonic swap fidelity 0.69, so V = 0.38).
NodeParams current_node();
// Improved node used for the key-rate and chain projections.
NodeParams enhanced_node();

double channel_eta(double gamma, double L);

// --- truncated Loop-1 / Loop-2 renewal process ---------------------------

struct ArmProbabilities {
  double pA1 = 0, pB1 = 0;  // Loop 1, per attempt and node
  double pA2 = 0, pB2 = 0;  // Loop 2, the node still waiting
  std::optional<int> K;     // Loop-2 cap, empty = unbounded

  static ArmProbabilities symmetric(double p, std::optional<int> K) { return {p, p, p, p, K}; }
};

struct RenewalStats {
  double q1 = 0;              // P(at least one photon in a Loop-1 attempt)
  double P2 = 0;              // P(Loop 2 succeeds | entered), weighted over which node waits
  double round_success = 0;   // P(a Loop-1 + Loop-2 round ends in a swap)
  double round_attempts = 0;  // expected attempts per round
  double nbar = 0;            // expected attempts per success
  double P_s = 0;             // successes per attempt, 1/nbar
};

// Closed-form expectations of the restart process: each round runs Loop 1
// until a photon arrives, then Loop 2 for at most K attempts if only one did.
RenewalStats renewal(const ArmProbabilities& p);

// Probability that a success happened after k memory attempts, k = 0..K
// (k = 0 is the double Loop-1 success that needs no storage).
std::vector<double> storage_distribution(const ArmProbabilities& p, int K);

double rkr_direct(const NodeParams& node, const LinkParams& link);
double rkr_repeater(const NodeParams& node, const LinkParams& link);
// Same with an explicit Loop-2 cap (empty = unbounded).
double rkr_repeater(const NodeParams& node, const LinkParams& link, std::optional<int> K);

// --- repeater-advantage bounds ---------------------------------------------

double bound_min_length(double gamma);
double bound_storage_time(const NodeParams& node, const LinkParams& link);
double bound_khat(const NodeParams& node);

struct PerfectBound {
  double eta_star;
  double t_perfect;
};
// Throws std::domain_error when 2 P0 / 3 >= 1 (the bound is vacuous).
PerfectBound bound_perfect(const NodeParams& node, const LinkParams& link);

// --- chains ----------------------------------------------------------------

double chain_time(int n_levels, const NodeParams& node, const LinkParams& link);
double chain_fidelity(int n_levels, double F0, double F_swap_ions, double V);
// The two-photon state each elementary link starts from.
DensityMatrix chain_link_state(double F0, double V);

// --- secret key ------------------------------------------------------------

double binary_entropy(double x);
double skf_six_state(double eX, double eY, double eZ);
double skf_six_state(const Qber& q);

struct SkrResult {
  double skr = 0;
  int K_cutoff = 0;
  double rkr = 0;
  double skf = 0;
};

// Minimum secret-key fraction a stored state must retain to be kept.
inline constexpr double kSkfCutoff = 0.1;
// Memory window is searched up to this many attempts; beyond it the cap is
// treated as unbounded.
inline constexpr int kMaxCutoff = 10'000'000;

// Stored-state model: start at depolarize(Phi+, F0), dephase for k attempts,
// then depolarize by the ion swap fidelity.
DensityMatrix skr_stored_state(const NodeParams& node, double t);
SkrResult skr_pipeline(const NodeParams& node, const LinkParams& link);
double skr_bound(const LinkParams& link);

struct RepeaterlessRequirement {
  double attempt_rate;
  double modes;
};
RepeaterlessRequirement repeaterless_requirements(const LinkParams& link, double target_rate);

struct Factor {
  double value;
  double sigma;
};
struct Budget {
  double product;
  double sigma;
};
Budget efficiency_budget(std::span<const Factor> factors);

}  // namespace qrep
