// Two-photon and ion-photon tomography: probabilities from heralded counts,
// maximum-likelihood states, local rotation searches and error bars.
#pragma once

#include "qrepeater/qmath.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace qrep {

enum class Basis { HV, DA, RL };
enum class Projector { plus, minus };
inline constexpr std::array<Basis, 3> kBases = {Basis::HV, Basis::DA, Basis::RL};

const char* to_string(Basis b);
const char* to_string(Projector p);
Basis parse_basis(const std::string& s);
Projector parse_projector(const std::string& s);

struct ProjectorSetting {
  Basis basisA = Basis::HV, basisB = Basis::HV;
  Projector projA = Projector::plus, projB = Projector::plus;

  bool operator==(const ProjectorSetting&) const = default;
  // 0..35, basis pair major, then projA, then projB.
  int index() const;
  static ProjectorSetting from_index(int i);
};

// Single-qubit polarization state: H, V, D=(H+V)/sqrt2, A=(H-V)/sqrt2,
// R=(H+iV)/sqrt2, L=(H-iV)/sqrt2.
Eigen::Vector2cd polarization(Basis b, Projector p);
Eigen::Matrix4cd setting_projector(const ProjectorSetting& s);

struct SettingCounts {
  ProjectorSetting setting;
  std::array<std::uint64_t, 4> C{};  // per ion outcome PhiPlus, PhiMinus, PsiPlus, PsiMinus
  std::uint64_t N_A = 0;             // Loop-1 detections at node A
  std::uint64_t M_A = 0;             // Raman pulses on ion A
  std::uint64_t M_B_given_A = 0;     // Loop-2 pulses on ion B after an A detection
};

struct TomoDataset {
  std::vector<SettingCounts> settings;

  // All 36 settings present once, counters consistent.
  void validate() const;
  const SettingCounts& at(const ProjectorSetting& s) const;
};

// Outcome probabilities of one basis pair, ordered ++, +-, -+, --.
struct BasisPairProbabilities {
  Basis basisA = Basis::HV, basisB = Basis::HV;
  std::array<double, 4> p{};
  double weight = 0;  // raw counts behind the four numbers
};
using ProbabilityTable = std::vector<BasisPairProbabilities>;

ProbabilityTable bayes_probabilities(const TomoDataset& data, BellLabel ion_outcome);

// Four outcome projectors measured together, with observed frequencies.
struct MeasurementGroup {
  std::array<Eigen::Matrix4cd, 4> projectors;
  std::array<double, 4> frequencies{};
  double weight = 1;
};
std::vector<MeasurementGroup> measurement_groups(const ProbabilityTable& probs);

struct MleOptions {
  int max_iterations = 10'000;
  double tolerance = 1e-10;  // stop when the log-likelihood gain falls below this
  bool record_trace = false;
};

struct MleResult {
  DensityMatrix rho;
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0;       // weight-normalized
  std::vector<double> trace;       // per-iteration log-likelihood if requested
};

double log_likelihood(std::span<const MeasurementGroup> groups, const Eigen::Matrix4cd& rho);
MleResult mle_reconstruct(std::span<const MeasurementGroup> groups, const MleOptions& opt = {});
MleResult mle_reconstruct(const ProbabilityTable& probs, const MleOptions& opt = {});

// --- local rotations --------------------------------------------------------

inline constexpr int kMinRestarts = 32;

struct BellFormResult {
  Eigen::Matrix2cd u1, u2;
  std::array<double, 4> fidelities{};  // state i against Bell state i after rotation
  double objective = 0;                // 4 - sum F_i^2
};
// One (u1 (x) u2) bringing state i as close as possible to Bell state i
// (PhiPlus, PhiMinus, PsiPlus, PsiMinus order).
BellFormResult bell_form_search(const std::array<DensityMatrix, 4>& states,
                                int restarts = kMinRestarts, std::uint64_t seed = 0);

struct RestrictedFit {
  double theta_Amem = 0, theta_Bmem = 0;  // in [0, pi); a z rotation by pi is a global sign
  Eigen::Matrix2cd u_a, u_b;
  std::array<double, 4> fidelities{};
  double objective = 0;  // 4 - sum F_i
};
// States ordered [Amem_Aa, Amem_Bb, Bmem_Aa, Bmem_Bb], ion (x) photon.
// Rotations I(x)u_a, Z(theta_A)(x)u_b, Z(theta_B)(x)u_a, I(x)u_b bring each to Phi+.
RestrictedFit restricted_rotation_fit(const std::array<DensityMatrix, 4>& states,
                                      int restarts = kMinRestarts, std::uint64_t seed = 0);
// |<restricted target|nearest maximally entangled state>|^2 per input state.
std::array<double, 4> restricted_overlaps(const std::array<DensityMatrix, 4>& states,
                                          const RestrictedFit& fit);
// The local unitary the fit applies to state i.
Eigen::Matrix4cd restricted_rotation(const RestrictedFit& fit, int i);

// --- feedforward ---------------------------------------------------------------

enum class MemoryIon { A, B };

struct FeedforwardGroup {
  ProbabilityTable probs;
  MemoryIon memory = MemoryIon::A;
  BellLabel outcome = BellLabel::PhiPlus;
};
// One MLE over all groups with projectors mapped through S_i U, where U is
// U_A or U_B by memory ion and S_i takes Bell state i to Phi+.
MleResult feedforward_reconstruct(std::span<const FeedforwardGroup> groups,
                                  const Eigen::Matrix4cd& U_A, const Eigen::Matrix4cd& U_B,
                                  const MleOptions& opt = {});

// --- Monte-Carlo error bars -----------------------------------------------------

struct MCConfig {
  int resamples = 500;
  double quantile = 0.1590;
  int zero_substitute = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ErrorBars {
  double value = 0;        // statistic of the point estimate
  double median = 0;
  double delta_minus = 0;  // median - lower quantile
  double delta_plus = 0;   // upper quantile - median
  int dropped = 0;         // resamples whose reconstruction did not converge
};

using StateStatistic = std::function<double(const DensityMatrix&)>;
ErrorBars mc_error_bars(const TomoDataset& data, BellLabel ion_outcome, const StateStatistic& statistic,
                        const MCConfig& cfg = {});

// --- ideal-model checks ------------------------------------------------------------

int distinct_state_count(double theta_A, double theta_B);

struct FidelityPoint {
  double t;
  double F;
};
// Gaussian coherence time that best explains the fidelity decay of rho0.
double fit_memory_tau(std::span<const FidelityPoint> points, const DensityMatrix& rho0);

// Counts for a source that emits states[i] after ion outcome i:
// C_i = counts_per_setting * Tr(O rho_i), so each basis pair collects about
// counts_per_setting heralds per outcome. All pulse counters are equal to
// 10 * counts_per_setting. With a seed the counts are Poisson draws.
TomoDataset synthesize_dataset(const std::array<DensityMatrix, 4>& states, double counts_per_setting,
                               std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace qrep
