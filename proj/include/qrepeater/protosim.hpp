// Monte-Carlo model of the Loop 1 / Loop 2 / swap protocol and of the
// direct-transmission configuration.
#pragma once

#include "qrepeater/ratemodel.hpp"

#include <cstdint>
#include <vector>

namespace qrep {

enum class ProtocolMode { repeater, direct };

struct ProtocolConfig {
  double p_A1 = 3.06e-3, p_B1 = 2.36e-3;  // Loop 1 detection probability per node
  double p_A2 = 2.64e-3, p_B2 = 1.81e-3;  // Loop 2, node still waiting
  int loop1_max = 29;
  int loop2_max = 190;
  double t_attempt_loop1 = 175e-6;
  double t_attempt_loop2 = 123e-6;
  double t_wait = 250e-6;   // photon flight + herald return, added to every repeater attempt
  double t_swap = 2157e-6;
  double t_init = 7.24e-3;  // Doppler + sample-and-hold + ground-state cooling + pumping
  // Periodic insertions (sideband cooling in Loop 1, spin echoes in Loop 2);
  // zero `every` disables them.
  int loop1_overhead_every = 0;
  double loop1_overhead_time = 0;
  int loop2_overhead_every = 0;
  double loop2_overhead_time = 0;
  ProtocolMode mode = ProtocolMode::repeater;
  double L = 50;   // km
  double c = 2e8;  // m/s

  // Repeater with node in the middle of `link`: arm probability P0*sqrt(eta),
  // attempt time T0 plus the arm round trip L/c.
  static ProtocolConfig repeater_for(const NodeParams& node, const LinkParams& link);
  // Direct transmission over the full link: p = P0*eta, attempt T0 + 2L/c.
  static ProtocolConfig direct_for(const NodeParams& node, const LinkParams& link);

  void validate() const;
};

struct SimStats {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  std::uint64_t attempts = 0;       // Loop 1 + Loop 2 photon attempts
  std::uint64_t loop2_entries = 0;
  std::uint64_t loop2_successes = 0;
  double P_s = 0;                   // successes per attempt
  double P2 = 0;                    // Loop 2 success given entered
  std::vector<std::uint64_t> k_histogram;  // bin k-1 counts successes at Loop-2 attempt k
  double active_time = 0;           // s
  double total_time = 0;            // s, including initialization
  double active_rate = 0;           // Hz
  double absolute_rate = 0;         // Hz
  double alpha = 0, alpha_max = 0;
  double mean_storage_time = 0;     // s, over Loop-2 successes
};

SimStats simulate_repeater(const ProtocolConfig& cfg, std::uint64_t trials, std::uint64_t seed);
SimStats simulate_direct(const ProtocolConfig& cfg, std::uint64_t trials, std::uint64_t seed);
// Dispatches on cfg.mode.
SimStats simulate(const ProtocolConfig& cfg, std::uint64_t trials, std::uint64_t seed);

struct Enhancement {
  double alpha;
  double alpha_max;
};
// alpha_max = (pA+pB)/(2 pA pB), alpha = alpha_max * P2.
Enhancement enhancement_factors(double p_A1, double p_B1, double P2);

// Analytic P2 for the configuration (renewal model with cap loop2_max).
double analytic_P2(const ProtocolConfig& cfg);

// Photon-photon fidelity with Phi+ after the swap, averaged over storage
// times k*t_attempt drawn from the configuration's storage distribution.
// Each ion-photon pair starts as F0 Phi+ + (1-F0) Phi-.
double predicted_final_fidelity(const ProtocolConfig& cfg, double F0, double tau, double t_attempt);

}  // namespace qrep
