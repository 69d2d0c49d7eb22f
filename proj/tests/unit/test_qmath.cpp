#include <doctest.h>

#include "qrepeater/qmath.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace qrep;
using Eigen::Matrix4cd;
using cd = std::complex<double>;

namespace {

// Random full-rank state rho = G G^dagger / Tr, G Ginibre.
DensityMatrix random_state(std::mt19937_64& rng, int dim = 4) {
  std::normal_distribution<double> n;
  ComplexMatrix g(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = {n(rng), n(rng)};
  ComplexMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

Eigen::Matrix2cd random_unitary(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.2, 3.2);
  return zyz_unitary<double>(u(rng), u(rng), u(rng)) * std::exp(cd(0, u(rng)));
}

// Concurrence from the eigenvalues of rho * rho_tilde, computed without the
// library's Hermitian route.
double concurrence_oracle(const Matrix4cd& rho) {
  Matrix4cd yy = Matrix4cd::Zero();
  yy(0, 3) = -1;
  yy(1, 2) = 1;
  yy(2, 1) = 1;
  yy(3, 0) = -1;
  const Matrix4cd tilde = yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Matrix4cd> es(rho * tilde);
  std::array<double, 4> l;
  for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  std::sort(l.rbegin(), l.rend());
  return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

// Projects qubits 2,3 of rhoAB (x) rhoCD onto the Bell outcome by explicit
// index loops, traces them out and applies the Pauli correction.
Matrix4cd swap_oracle(const Matrix4cd& ab, const Matrix4cd& cd_, BellLabel outcome, double& prob) {
  const Eigen::Vector4cd beta = bell_vector<double>(outcome);
  Matrix4cd out = Matrix4cd::Zero();
  for (int a = 0; a < 2; ++a)
    for (int d = 0; d < 2; ++d)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int d2 = 0; d2 < 2; ++d2) {
          cd s = 0;
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
              for (int b2 = 0; b2 < 2; ++b2)
                for (int c2 = 0; c2 < 2; ++c2)
                  s += std::conj(beta(2 * b + c)) * beta(2 * b2 + c2) * ab(2 * a + b, 2 * a2 + b2) *
                       cd_(2 * c + d, 2 * c2 + d2);
          out(2 * a + d, 2 * a2 + d2) = s;
        }
  prob = out.trace().real();
  out /= prob;
  const Matrix4cd S = pauli_frame<double>(correction_for(outcome));
  return S * out * S.adjoint();
}

}  // namespace

TEST_CASE("Bell states are orthonormal and follow the H=|0> convention") {
  for (BellLabel a : kBellLabels)
    for (BellLabel b : kBellLabels)
      CHECK(fidelity(bell_state(a), bell_state(b)) == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
  const Eigen::Vector4cd phi = bell_vector<double>(BellLabel::PhiPlus);
  CHECK(std::abs(phi(0) - 1 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(phi(3) - 1 / std::sqrt(2.0)) < 1e-15);

  const Matrix4cd x2 = kron2<double>(Eigen::Matrix2cd::Identity(), pauli_x<double>());
  const DensityMatrix flipped(ComplexMatrix(x2 * bell_state(BellLabel::PhiPlus).matrix() * x2.adjoint()));
  CHECK(fidelity(flipped, bell_state(BellLabel::PsiPlus)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("corrections map every Bell state to Phi+ and square to identity") {
  for (BellLabel b : kBellLabels) {
    const Matrix4cd S = pauli_frame<double>(correction_for(b));
    CHECK((S * S).isApprox(Matrix4cd::Identity(), 1e-14));
    const Eigen::Vector4cd v = S * bell_vector<double>(b);
    CHECK(std::norm(v.dot(bell_vector<double>(BellLabel::PhiPlus))) == doctest::Approx(1.0));
  }
}

TEST_CASE("density matrix validation") {
  ComplexMatrix m = ComplexMatrix::Identity(4, 4) / 4;
  CHECK_NOTHROW(DensityMatrix{m});
  m(0, 1) = 0.1;  // not Hermitian
  CHECK_THROWS_AS(DensityMatrix{m}, std::invalid_argument);
  CHECK_THROWS_AS(DensityMatrix{ComplexMatrix(ComplexMatrix::Identity(4, 4) / 2)}, std::invalid_argument);
  ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
  neg(0, 0) = 1.2;
  neg(1, 1) = -0.2;
  CHECK_THROWS_AS(DensityMatrix{neg}, std::invalid_argument);
  // Tiny negative eigenvalues are clipped.
  ComplexMatrix tiny = ComplexMatrix::Zero(2, 2);
  tiny(0, 0) = 1 + 1e-12;
  tiny(1, 1) = -1e-12;
  const DensityMatrix clipped(tiny);
  CHECK(clipped.matrix()(1, 1).real() >= 0);
  CHECK(clipped.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("single precision instantiation") {
  const auto rho = bell_state<float>(BellLabel::PsiMinus);
  CHECK(rho.purity() == doctest::Approx(1.0f).epsilon(1e-5));
  CHECK(concurrence(rho) == doctest::Approx(1.0f).epsilon(1e-4));
  const auto d = depolarize(rho, 0.8f);
  CHECK(fidelity(d, rho) == doctest::Approx(0.8f).epsilon(1e-5));
}

TEST_CASE("fidelity and purity bound on reference states") {
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(4);
  CHECK(fidelity(mixed, bell_state(BellLabel::PhiPlus)) == doctest::Approx(0.25));
  CHECK(purity_bound(mixed) == doctest::Approx(0.5));
  CHECK(purity_bound(bell_state(BellLabel::PhiMinus)) == doctest::Approx(1.0));
  CHECK(fidelity(depolarize(bell_state(BellLabel::PhiPlus), 0.9), bell_state(BellLabel::PhiPlus)) ==
        doctest::Approx(0.9));
  CHECK_THROWS_AS(fidelity(mixed, DensityMatrix::maximally_mixed(2)), std::invalid_argument);
  CHECK_THROWS_AS(fidelity(bell_state(BellLabel::PhiPlus), mixed), std::invalid_argument);
}

TEST_CASE("concurrence matches the eigenvalue oracle") {
  for (double F : {0.6, 0.8, 0.95}) {
    const DensityMatrix w = depolarize(bell_state(BellLabel::PhiPlus), F);
    const double expected = std::max(0.0, 2 * F - 1);
    CHECK(concurrence(w) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(concurrence_oracle(w.matrix()) == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(concurrence(DensityMatrix::maximally_mixed(4)) == doctest::Approx(0.0));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix r = random_state(rng);
    CHECK(concurrence(r) == doctest::Approx(concurrence_oracle(r.matrix())).epsilon(1e-8));
  }
  CHECK_THROWS_AS(concurrence(DensityMatrix::maximally_mixed(2)), std::invalid_argument);
}

TEST_CASE("depolarize gives the Bell-diagonal form and preserves trace") {
  const DensityMatrix d = depolarize(bell_state(BellLabel::PhiPlus), 0.7);
  const Eigen::Vector4d w = bell_weights(d);
  CHECK(w(0) == doctest::Approx(0.7));
  for (int i = 1; i < 4; ++i) CHECK(w(i) == doctest::Approx(0.1));
  CHECK_THROWS_AS(depolarize(d, 1.1), std::invalid_argument);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix r = random_state(rng);
    CHECK(depolarize(r, 1.0).matrix().isApprox(r.matrix(), 1e-14));
    const DensityMatrix out = depolarize(r, 0.37);
    CHECK(std::abs(out.matrix().trace().real() - 1) < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<ComplexMatrix>(out.matrix()).eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("Gaussian dephasing acts on the first qubit") {
  const DensityMatrix phi = bell_state(BellLabel::PhiPlus);
  const double tau = 0.062;
  CHECK(dephase_gaussian(phi, 0.0, tau).matrix().isApprox(phi.matrix(), 1e-15));
  // Coherence <00|rho|11> falls as exp(-t^2/tau^2).
  CHECK(dephase_gaussian(phi, tau, tau).matrix()(0, 3).real() == doctest::Approx(0.5 * std::exp(-1.0)));
  const DensityMatrix late = dephase_gaussian(phi, 50 * tau, tau);
  CHECK(fidelity(late, phi) == doctest::Approx(0.5));
  CHECK(fidelity(late, bell_state(BellLabel::PhiMinus)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(dephase_gaussian(phi, 0.01, 0.0), std::invalid_argument);
  CHECK(gaussian_flip_weight(1e-9, 1.0) == doctest::Approx(0.5e-18).epsilon(1e-6));

  // The second qubit is untouched: a state with coherence only on it keeps it.
  Eigen::Vector4cd plus2(1, 1, 0, 0);
  plus2 /= std::sqrt(2.0);
  const DensityMatrix p2 = DensityMatrix::pure(plus2);
  CHECK(dephase_gaussian(p2, tau, tau).matrix().isApprox(p2.matrix(), 1e-15));

  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    const DensityMatrix out = dephase_gaussian(random_state(rng), 0.03, tau);
    CHECK(std::abs(out.matrix().trace().real() - 1) < 1e-12);
  }
}

TEST_CASE("QBER of reference states") {
  const DensityMatrix phi = bell_state(BellLabel::PhiPlus);
  const Qber q0 = qber(phi, BellLabel::PhiPlus);
  CHECK(q0.x == doctest::Approx(0.0));
  CHECK(q0.y == doctest::Approx(0.0));
  CHECK(q0.z == doctest::Approx(0.0));
  const Qber qd = qber(depolarize(phi, 0.85), BellLabel::PhiPlus);
  for (double e : {qd.x, qd.y, qd.z}) CHECK(e == doctest::Approx(2 * 0.15 / 3));
  const double t = 0.04, tau = 0.062;
  const Qber qg = qber(dephase_gaussian(phi, t, tau), BellLabel::PhiPlus);
  CHECK(qg.z == doctest::Approx(0.0));
  CHECK(qg.x == doctest::Approx((1 - std::exp(-t * t / (tau * tau))) / 2));
  CHECK(qg.y == doctest::Approx(qg.x));
  for (BellLabel b : kBellLabels) {
    const Qber own = qber(bell_state(b), b);
    CHECK(own.x + own.y + own.z == doctest::Approx(0.0));
  }
}

TEST_CASE("local rotations") {
  std::mt19937_64 rng(21);
  const DensityMatrix r = random_state(rng);
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  CHECK(local_rotate(r, id, id).matrix().isApprox(r.matrix(), 1e-14));
  CHECK(fidelity(local_rotate(bell_state(BellLabel::PhiPlus), pauli_x<double>(), id),
                 bell_state(BellLabel::PsiPlus)) == doctest::Approx(1.0));
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix s = random_state(rng);
    const DensityMatrix rot = local_rotate(s, random_unitary(rng), random_unitary(rng));
    CHECK(std::abs(concurrence(rot) - concurrence(s)) < 1e-9);
  }
  Eigen::Matrix2cd bad = id;
  bad(0, 0) = 2;
  CHECK_THROWS_AS(local_rotate(r, bad, id), std::invalid_argument);
}

TEST_CASE("entanglement swap against the index-contraction oracle") {
  const DensityMatrix phi = bell_state(BellLabel::PhiPlus);
  for (BellLabel o : kBellLabels) {
    const auto res = entanglement_swap(phi, phi, o);
    CHECK(res.probability == doctest::Approx(0.25));
    CHECK(fidelity(res.state, phi) == doctest::Approx(1.0));
  }

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const DensityMatrix a = random_state(rng), b = random_state(rng);
    double total = 0;
    for (BellLabel o : kBellLabels) {
      double p = 0;
      const Matrix4cd expected = swap_oracle(a.matrix(), b.matrix(), o, p);
      const auto res = entanglement_swap(a, b, o);
      CHECK(res.probability == doctest::Approx(p).epsilon(1e-12));
      CHECK(res.state.matrix().isApprox(expected, 1e-10));
      total += res.probability;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }

  // Bell-diagonal inputs give an outcome-independent output.
  const DensityMatrix x = bell_diagonal<double>(Eigen::Vector4d(0.7, 0.1, 0.15, 0.05));
  const DensityMatrix y = bell_diagonal<double>(Eigen::Vector4d(0.6, 0.2, 0.05, 0.15));
  const Matrix4cd first = entanglement_swap(x, y, BellLabel::PhiPlus).state.matrix();
  for (BellLabel o : kBellLabels) CHECK(entanglement_swap(x, y, o).state.matrix().isApprox(first, 1e-10));
}

TEST_CASE("first stage of the chain cascade") {
  const DensityMatrix psi = bell_diagonal<double>(Eigen::Vector4d(0, 0, 1 - 0.9706, 0.9706));
  const Eigen::Vector4d w = bell_weights(entanglement_swap(psi, psi, BellLabel::PhiPlus).state);
  CHECK(w(0) == doctest::Approx(0.94297).epsilon(1e-4));
  CHECK(w(1) == doctest::Approx(0.05707).epsilon(1e-3));
}

TEST_CASE("swap of a null outcome is rejected") {
  const DensityMatrix phi = bell_state(BellLabel::PhiPlus);
  // |00><00| on both pairs never gives Psi on the middle qubits.
  ComplexMatrix zz = ComplexMatrix::Zero(4, 4);
  zz(0, 0) = 1;
  const DensityMatrix ground(zz);
  CHECK_THROWS_AS(entanglement_swap(ground, ground, BellLabel::PsiPlus), NumericalError);
  CHECK_NOTHROW(entanglement_swap(ground, phi, BellLabel::PhiPlus));
}

TEST_CASE("nearest maximally entangled state") {
  CHECK(nearest_max_entangled_fidelity(bell_state(BellLabel::PhiMinus)) == doctest::Approx(1.0));
  CHECK(nearest_max_entangled_fidelity(DensityMatrix::maximally_mixed(4)) == doctest::Approx(0.25));
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  for (double th : {0.3, 1.1, 2.7})
    CHECK(nearest_max_entangled_fidelity(local_rotate(bell_state(BellLabel::PhiPlus), id,
                                                      z_rotation<double>(th))) == doctest::Approx(1.0));

  // Random local unitaries never beat the closed form, and the best of many
  // samples gets close to it. It also dominates the Bell-basis diagonal and
  // stays below the purity bound.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const DensityMatrix r = random_state(rng);
    const double closed = nearest_max_entangled_fidelity(r);
    CHECK(closed >= bell_weights(r).maxCoeff() - 1e-12);
    CHECK(closed <= purity_bound(r) + 1e-10);
    double best = 0;
    for (int s = 0; s < 20000; ++s) {
      const Eigen::Vector4cd v =
          kron2<double>(random_unitary(rng), random_unitary(rng)) * bell_vector<double>(BellLabel::PhiPlus);
      best = std::max(best, fidelity(r, CVector<double>(v)));
    }
    CHECK(best <= closed + 1e-10);
    CHECK(best >= closed - 0.02);
    const DensityMatrix target = nearest_max_entangled_state(r);
    CHECK(fidelity(r, target) == doctest::Approx(closed).epsilon(1e-10));
    // Square roots of near-zero eigenvalues turn 1e-16 rounding into ~1e-8.
    CHECK(concurrence(target) == doctest::Approx(1.0).epsilon(1e-6));
  }
}
