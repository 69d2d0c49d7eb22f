#include <doctest.h>

#include "qrepeater/tomo.hpp"
#include "qrepeater/tomo_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

using namespace qrep;

namespace {

Eigen::Matrix2cd random_u2(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Matrix2cd g;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = {n(rng), n(rng)};
  Eigen::HouseholderQR<Eigen::Matrix2cd> qr(g);
  return qr.householderQ();
}

DensityMatrix random_mixed(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Matrix4cd g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = {n(rng), n(rng)};
  Eigen::Matrix4cd m = g * g.adjoint();
  return DensityMatrix(ComplexMatrix(m / m.trace().real()));
}

DensityMatrix conj_by(const Eigen::Matrix4cd& w, const DensityMatrix& rho) {
  return DensityMatrix(ComplexMatrix(w * rho.matrix() * w.adjoint()));
}

// Distance between two angles defined modulo pi.
double mod_pi_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

std::array<DensityMatrix, 4> all_same(const DensityMatrix& r) { return {r, r, r, r}; }

double uhlmann(const DensityMatrix& a, const DensityMatrix& b) {
  const Eigen::Matrix4cd s = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd>(a.matrix()).operatorSqrt();
  const Eigen::Matrix4cd m = s * b.matrix() * s;
  const double t = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd>(m).eigenvalues().cwiseMax(0).cwiseSqrt().sum();
  return t * t;
}

}  // namespace

TEST_CASE("setting index round trip and projector completeness") {
  for (int i = 0; i < 36; ++i) CHECK(ProjectorSetting::from_index(i).index() == i);
  for (Basis a : kBases)
    for (Basis b : kBases) {
      Eigen::Matrix4cd sum = Eigen::Matrix4cd::Zero();
      for (Projector pa : {Projector::plus, Projector::minus})
        for (Projector pb : {Projector::plus, Projector::minus}) sum += setting_projector({a, b, pa, pb});
      CHECK((sum - Eigen::Matrix4cd::Identity()).norm() < 1e-12);
    }
  const Eigen::Vector2cd R = polarization(Basis::RL, Projector::plus);
  CHECK(std::abs(R(1) - std::complex<double>(0, 1 / std::sqrt(2.0))) < 1e-15);
  CHECK(parse_basis("DA") == Basis::DA);
  CHECK_THROWS_AS(parse_basis("XY"), std::invalid_argument);
}

TEST_CASE("Bayes correction") {
  SUBCASE("uniform counters reduce to relative frequencies") {
    const TomoDataset d = synthesize_dataset(all_same(bell_state(BellLabel::PhiPlus)), 1000);
    for (const auto& bp : bayes_probabilities(d, BellLabel::PhiPlus)) {
      CHECK(bp.p[0] + bp.p[1] + bp.p[2] + bp.p[3] == doctest::Approx(1));
      if (bp.basisA == Basis::HV && bp.basisB == Basis::HV) {
        CHECK(bp.p[0] == doctest::Approx(0.5));
        CHECK(bp.p[3] == doctest::Approx(0.5));
        CHECK(bp.p[1] == 0);
      }
    }
  }
  SUBCASE("unequal pulse counters are divided out") {
    TomoDataset d = synthesize_dataset(all_same(bell_state(BellLabel::PhiPlus)), 1000);
    const std::array<double, 4> truth{0.1, 0.2, 0.3, 0.4};
    const std::array<std::uint64_t, 4> MB{1000, 2000, 4000, 500}, NA{5000, 2000, 5000, 5000};
    for (int j = 0; j < 4; ++j) {
      auto& sc = const_cast<SettingCounts&>(d.at({Basis::DA, Basis::RL, Projector(j / 2), Projector(j % 2)}));
      sc.M_A = 5000;
      sc.N_A = NA[j];
      sc.M_B_given_A = MB[j];
      sc.C = {static_cast<std::uint64_t>(std::llround(truth[j] * MB[j] * 5000.0 / NA[j])), 0, 0, 0};
    }
    d.validate();
    for (const auto& bp : bayes_probabilities(d, BellLabel::PhiPlus))
      if (bp.basisA == Basis::DA && bp.basisB == Basis::RL)
        for (int j = 0; j < 4; ++j) CHECK(bp.p[j] == doctest::Approx(truth[j]));
  }
  SUBCASE("inconsistent data is rejected") {
    TomoDataset d = synthesize_dataset(all_same(bell_state(BellLabel::PhiPlus)), 100);
    d.settings[3].N_A = d.settings[3].M_A + 1;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = synthesize_dataset(all_same(bell_state(BellLabel::PhiPlus)), 100);
    d.settings.pop_back();
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = synthesize_dataset(all_same(bell_state(BellLabel::PhiPlus)), 100);
    d.settings[0].M_B_given_A = 0;
    CHECK_THROWS_AS(bayes_probabilities(d, BellLabel::PhiPlus), std::invalid_argument);
  }
}

TEST_CASE("maximum-likelihood reconstruction") {
  SUBCASE("exact Bell data") {
    const TomoDataset d = synthesize_dataset(all_same(bell_state(BellLabel::PhiPlus)), 1e5);
    const MleResult r = mle_reconstruct(bayes_probabilities(d, BellLabel::PhiPlus));
    CHECK(r.converged);
    CHECK(fidelity(r.rho, bell_state(BellLabel::PhiPlus)) >= 0.9999);
  }
  SUBCASE("maximally mixed data") {
    const TomoDataset d = synthesize_dataset(all_same(DensityMatrix::maximally_mixed(4)), 1e4);
    const MleResult r = mle_reconstruct(bayes_probabilities(d, BellLabel::PsiMinus));
    CHECK(r.rho.purity() == doctest::Approx(0.25).epsilon(1e-3));
  }
  SUBCASE("random state with Poisson counts") {
    std::mt19937_64 rng(5);
    const DensityMatrix truth = random_mixed(rng);
    const TomoDataset d = synthesize_dataset(all_same(truth), 1e5, 9);
    MleOptions opt;
    opt.record_trace = true;
    const MleResult r = mle_reconstruct(bayes_probabilities(d, BellLabel::PsiPlus), opt);
    const double F = uhlmann(truth, r.rho);
    CHECK(F >= 0.999);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-12);
    CHECK(log_likelihood(measurement_groups(bayes_probabilities(d, BellLabel::PsiPlus)), r.rho.matrix()) ==
          doctest::Approx(r.log_likelihood));
  }
  CHECK_THROWS_AS(mle_reconstruct(std::span<const MeasurementGroup>{}), std::invalid_argument);
}

TEST_CASE("Bell-form search recovers hidden local rotations") {
  std::mt19937_64 rng(17);
  const Eigen::Matrix2cd u1 = random_u2(rng), u2 = random_u2(rng);
  const Eigen::Matrix4cd W = kron2<double>(u1, u2);
  std::array<DensityMatrix, 4> states, rotated;
  for (int i = 0; i < 4; ++i) {
    states[i] = depolarize(bell_state(kBellLabels[i]), 0.97);
    rotated[i] = conj_by(W.adjoint(), states[i]);
  }
  const BellFormResult plain = bell_form_search(states);
  const BellFormResult hidden = bell_form_search(rotated, kMinRestarts, 3);
  for (double F : hidden.fidelities) CHECK(F == doctest::Approx(0.97).epsilon(1e-5));
  CHECK(hidden.objective == doctest::Approx(plain.objective).epsilon(1e-6));
  CHECK(is_unitary(hidden.u1));
  CHECK(is_unitary(hidden.u2));
}

TEST_CASE("restricted rotation fit") {
  std::mt19937_64 rng(23);
  const Eigen::Matrix2cd ua = random_u2(rng), ub = random_u2(rng);
  for (double thetaA : {0.0, 1.4}) {
    const double thetaB = 0.7;
    auto R = [&](int i) -> Eigen::Matrix4cd {
      const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity();
      switch (i) {
        case 0: return kron2<double>(I, ua);
        case 1: return kron2<double>(z_rotation<double>(thetaA), ub);
        case 2: return kron2<double>(z_rotation<double>(thetaB), ua);
        default: return kron2<double>(I, ub);
      }
    };
    std::array<DensityMatrix, 4> states;
    for (int i = 0; i < 4; ++i) states[i] = conj_by(R(i).adjoint(), depolarize(bell_state(BellLabel::PhiPlus), 0.98));
    const RestrictedFit fit = restricted_rotation_fit(states);
    CAPTURE(thetaA);
    CHECK(mod_pi_distance(fit.theta_Amem, thetaA) < 0.05);
    CHECK(mod_pi_distance(fit.theta_Bmem, thetaB) < 0.05);
    CHECK(fit.theta_Amem >= 0);
    CHECK(fit.theta_Amem < std::numbers::pi);
    for (double F : fit.fidelities) CHECK(F == doctest::Approx(0.98).epsilon(1e-4));
    for (double o : restricted_overlaps(states, fit)) CHECK(o >= 0.99);
    for (int i = 0; i < 4; ++i) CHECK(is_unitary(restricted_rotation(fit, i)));
  }
}

TEST_CASE("feedforward reconstruction pools all eight data sets") {
  std::mt19937_64 rng(31);
  const Eigen::Matrix4cd UA = kron2<double>(random_u2(rng), random_u2(rng));
  const Eigen::Matrix4cd UB = kron2<double>(random_u2(rng), random_u2(rng));
  const DensityMatrix truth = depolarize(bell_state(BellLabel::PhiPlus), 0.9);
  std::vector<FeedforwardGroup> groups;
  for (MemoryIon mem : {MemoryIon::A, MemoryIon::B}) {
    std::array<DensityMatrix, 4> states;
    for (int i = 0; i < 4; ++i) {
      const Eigen::Matrix4cd W = pauli_frame<double>(correction_for(kBellLabels[i])) * (mem == MemoryIon::A ? UA : UB);
      states[i] = conj_by(W.adjoint(), truth);
    }
    const TomoDataset d = synthesize_dataset(states, 2e4);
    for (BellLabel b : kBellLabels) groups.push_back({bayes_probabilities(d, b), mem, b});
  }
  const MleResult r = feedforward_reconstruct(groups, UA, UB);
  CHECK(uhlmann(r.rho, truth) >= 0.999);
  CHECK(fidelity(r.rho, bell_state(BellLabel::PhiPlus)) == doctest::Approx(0.9).epsilon(1e-3));

  Eigen::Matrix4cd bad = UA;
  bad(0, 0) *= 2;
  CHECK_THROWS_AS(feedforward_reconstruct(groups, bad, UB), std::invalid_argument);
}

TEST_CASE("Monte-Carlo error bars") {
  const DensityMatrix truth = depolarize(bell_state(BellLabel::PhiPlus), 0.9);
  MCConfig cfg;
  cfg.resamples = 100;
  SUBCASE("constant statistic has no spread") {
    const TomoDataset d = synthesize_dataset(all_same(truth), 1000, 1);
    const ErrorBars e = mc_error_bars(d, BellLabel::PhiPlus, [](const DensityMatrix& r) { return r.matrix().trace().real(); }, cfg);
    CHECK(e.value == doctest::Approx(1));
    CHECK(e.delta_minus == doctest::Approx(0).scale(1));
    CHECK(e.delta_plus == doctest::Approx(0).scale(1));
  }
  SUBCASE("width shrinks as one over root N") {
    auto width = [&](double n) {
      const TomoDataset d = synthesize_dataset(all_same(truth), n, 2);
      const ErrorBars e = mc_error_bars(d, BellLabel::PhiPlus, [](const DensityMatrix& r) { return concurrence(r); }, cfg);
      return e.delta_minus + e.delta_plus;
    };
    const double ratio = width(2000) / width(8000);
    CHECK(ratio == doctest::Approx(2).epsilon(0.15));
  }
  SUBCASE("same seed, same bars; median near the point estimate") {
    const TomoDataset d = synthesize_dataset(all_same(truth), 4000, 3);
    auto stat = [](const DensityMatrix& r) { return fidelity(r, bell_state(BellLabel::PhiPlus)); };
    const ErrorBars a = mc_error_bars(d, BellLabel::PhiPlus, stat, cfg);
    const ErrorBars b = mc_error_bars(d, BellLabel::PhiPlus, stat, cfg);
    CHECK(a.median == b.median);
    CHECK(a.delta_plus == b.delta_plus);
    CHECK(a.dropped == 0);
    CHECK(std::abs(a.median - a.value) < a.delta_minus + a.delta_plus);
    // Interior point: the bars are close to symmetric.
    CHECK(a.delta_minus == doctest::Approx(a.delta_plus).epsilon(0.5));
  }
  cfg.resamples = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("distinct photon states of the ideal model") {
  CHECK(distinct_state_count(0, 0) == 4);
  CHECK(distinct_state_count(0.9, 0.9) == 6);
  CHECK(distinct_state_count(0.9, 0) == distinct_state_count(0, 0.9));
  CHECK(distinct_state_count(0.9, 0.4) == 8);
  CHECK(distinct_state_count(0.9, 0.4) == distinct_state_count(0.4, 0.9));
}

TEST_CASE("memory coherence time from a fidelity decay") {
  const DensityMatrix rho0 = depolarize(bell_state(BellLabel::PhiPlus), 0.95);
  const double tau = 0.062;
  std::vector<FidelityPoint> pts;
  for (double t = 0; t <= 0.15; t += 0.01)
    pts.push_back({t, fidelity(dephase_gaussian(rho0, t, tau), bell_state(BellLabel::PhiPlus))});
  CHECK(fit_memory_tau(pts, rho0) == doctest::Approx(tau).epsilon(0.5e-3 / tau));

  // Measured decay of a dephased pair with initial fidelity 0.96.
  const DensityMatrix dephased = dephase(bell_state(BellLabel::PhiPlus), 0.04);
  const std::vector<FidelityPoint> measured{{0, 0.96}, {21.3e-3, 0.87}, {42.7e-3, 0.74}, {64e-3, 0.64}};
  const double tau_fit = fit_memory_tau(measured, dephased);
  CHECK(tau_fit >= 0.050);
  CHECK(tau_fit <= 0.070);

  std::vector<FidelityPoint> flat{{0, 0.95}, {1e-6, 0.95}, {2e-6, 0.95}};
  CHECK_THROWS_AS(fit_memory_tau(flat, rho0), NumericalError);
  std::vector<FidelityPoint> one{{0.1, 0.9}};
  CHECK_THROWS_AS(fit_memory_tau(one, rho0), std::invalid_argument);
}

TEST_CASE("dataset JSON round trip") {
  const TomoDataset d = synthesize_dataset(all_same(bell_state(BellLabel::PsiPlus)), 500, 4);
  const TomoDataset back = dataset_from_json(dataset_to_json(d));
  REQUIRE(back.settings.size() == d.settings.size());
  for (std::size_t i = 0; i < d.settings.size(); ++i) {
    CHECK(back.settings[i].setting == d.settings[i].setting);
    CHECK(back.settings[i].C == d.settings[i].C);
    CHECK(back.settings[i].M_B_given_A == d.settings[i].M_B_given_A);
  }
  const auto path = (std::filesystem::temp_directory_path() / "qrep_tomo_roundtrip.json").string();
  save_dataset(d, path);
  CHECK(load_dataset(path).settings.size() == 36);
  std::remove(path.c_str());

  nlohmann::json j = dataset_to_json(d);
  j["settings"][0]["C"] = "many";
  CHECK_THROWS_AS(dataset_from_json(j), std::invalid_argument);
  CHECK_THROWS_AS(load_dataset("/nonexistent/qrep.json"), std::invalid_argument);

  const ComplexMatrix m = bell_state(BellLabel::PsiMinus).matrix();
  CHECK((matrix_from_json(matrix_to_json(m)) - m).norm() == 0);
}
