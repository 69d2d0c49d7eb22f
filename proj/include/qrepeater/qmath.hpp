// Dense two-qubit state algebra on top of Eigen.
//
// Conventions: tensor order is (qubit 1) (x) (qubit 2), basis |00>,|01>,|10>,|11>
// with |0> = H. Everything is templated on the real scalar so the same code
// runs in float for quick sweeps and in double for the reference numbers.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace qrep {

// Raised when an iteration fails to converge or a result is not finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using CMatrix2 = Eigen::Matrix<std::complex<Real>, 2, 2>;
template <typename Real>
using CMatrix4 = Eigen::Matrix<std::complex<Real>, 4, 4>;
template <typename Real>
using CVector4 = Eigen::Matrix<std::complex<Real>, 4, 1>;

using ComplexMatrix = CMatrix<double>;
using ComplexVector = CVector<double>;

enum class BellLabel { PhiPlus, PhiMinus, PsiPlus, PsiMinus };
inline constexpr std::array<BellLabel, 4> kBellLabels = {
    BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlus, BellLabel::PsiMinus};

// Second-qubit corrections I(x)I, I(x)Z, I(x)X, I(x)Y.
enum class PauliFrame { II, IZ, IX, IY };

inline const char* to_string(BellLabel b) {
  switch (b) {
    case BellLabel::PhiPlus: return "PhiPlus";
    case BellLabel::PhiMinus: return "PhiMinus";
    case BellLabel::PsiPlus: return "PsiPlus";
    case BellLabel::PsiMinus: return "PsiMinus";
  }
  return "?";
}

template <typename Real>
constexpr Real state_tolerance() {
  if constexpr (sizeof(Real) <= 4) return Real(1e-5);
  else return Real(1e-10);
}

// ---------------------------------------------------------------------------
// Elementary operators

template <typename Real = double>
CMatrix2<Real> pauli_x() {
  CMatrix2<Real> m;
  m << 0, 1, 1, 0;
  return m;
}

template <typename Real = double>
CMatrix2<Real> pauli_y() {
  using C = std::complex<Real>;
  CMatrix2<Real> m;
  m << C(0), C(0, -1), C(0, 1), C(0);
  return m;
}

template <typename Real = double>
CMatrix2<Real> pauli_z() {
  CMatrix2<Real> m;
  m << 1, 0, 0, -1;
  return m;
}

template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                            a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename Real>
CMatrix4<Real> kron2(const CMatrix2<Real>& a, const CMatrix2<Real>& b) {
  // Element-wise on purpose: g++ 11 at -O3 mis-vectorizes the 2x2 block
  // assignment for complex<float>.
  CMatrix4<Real> out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  const auto id = Derived::PlainObject::Identity(u.rows(), u.cols());
  return ((u.adjoint() * u).eval() - id).cwiseAbs().maxCoeff() <= tol;
}

// u = Rz(a) Ry(b) Rz(c), the parameterization used by every rotation search.
template <typename Real = double>
CMatrix2<Real> zyz_unitary(Real a, Real b, Real c) {
  using C = std::complex<Real>;
  using std::cos;
  using std::sin;
  using std::exp;
  CMatrix2<Real> rz_a, ry, rz_c;
  rz_a << exp(C(0, -a / 2)), C(0), C(0), exp(C(0, a / 2));
  ry << C(cos(b / 2)), C(-sin(b / 2)), C(sin(b / 2)), C(cos(b / 2));
  rz_c << exp(C(0, -c / 2)), C(0), C(0), exp(C(0, c / 2));
  return rz_a * ry * rz_c;
}

// exp(i*theta*sigma_z)
template <typename Real = double>
CMatrix2<Real> z_rotation(Real theta) {
  using C = std::complex<Real>;
  CMatrix2<Real> m;
  m << std::exp(C(0, theta)), C(0), C(0), std::exp(C(0, -theta));
  return m;
}

template <typename Real = double>
CMatrix4<Real> pauli_frame(PauliFrame f) {
  const CMatrix2<Real> id = CMatrix2<Real>::Identity();
  switch (f) {
    case PauliFrame::II: return CMatrix4<Real>::Identity();
    case PauliFrame::IZ: return kron2<Real>(id, pauli_z<Real>());
    case PauliFrame::IX: return kron2<Real>(id, pauli_x<Real>());
    case PauliFrame::IY: return kron2<Real>(id, pauli_y<Real>());
  }
  return CMatrix4<Real>::Identity();
}

// The frame element that maps the given Bell state onto Phi+ (up to phase).
inline PauliFrame correction_for(BellLabel b) {
  switch (b) {
    case BellLabel::PhiPlus: return PauliFrame::II;
    case BellLabel::PhiMinus: return PauliFrame::IZ;
    case BellLabel::PsiPlus: return PauliFrame::IX;
    case BellLabel::PsiMinus: return PauliFrame::IY;
  }
  return PauliFrame::II;
}

template <typename Real = double>
CVector4<Real> bell_vector(BellLabel b) {
  const Real s = Real(1) / std::sqrt(Real(2));
  CVector4<Real> v = CVector4<Real>::Zero();
  switch (b) {
    case BellLabel::PhiPlus: v(0) = s; v(3) = s; break;
    case BellLabel::PhiMinus: v(0) = s; v(3) = -s; break;
    case BellLabel::PsiPlus: v(1) = s; v(2) = s; break;
    case BellLabel::PsiMinus: v(1) = s; v(2) = -s; break;
  }
  return v;
}

// Columns |Phi+>, |Phi->, |Psi+>, |Psi->.
template <typename Real = double>
CMatrix4<Real> bell_basis() {
  CMatrix4<Real> m;
  for (int i = 0; i < 4; ++i) m.col(i) = bell_vector<Real>(kBellLabels[i]);
  return m;
}

// ---------------------------------------------------------------------------
// DensityMatrix

template <typename Real>
class BasicDensityMatrix {
 public:
  using Matrix = CMatrix<Real>;

  BasicDensityMatrix() : m_(Matrix::Identity(1, 1)) {}

  // Validates Hermiticity, unit trace and positivity; eigenvalues in
  // (-tol, 0) are clipped and the state renormalized, below -tol throws.
  explicit BasicDensityMatrix(const Matrix& m) : m_(m) { validate(); }

  template <typename Derived>
  static BasicDensityMatrix pure(const Eigen::MatrixBase<Derived>& psi) {
    CVector<Real> v = psi.template cast<std::complex<Real>>();
    const Real n = v.norm();
    if (!(n > 0)) throw std::invalid_argument("pure: zero state vector");
    v /= n;
    return BasicDensityMatrix(Matrix(v * v.adjoint()));
  }

  static BasicDensityMatrix maximally_mixed(Eigen::Index dim) {
    return BasicDensityMatrix(Matrix(Matrix::Identity(dim, dim) / Real(dim)));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  std::complex<Real> operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  Real purity() const { return (m_ * m_).trace().real(); }

  template <typename Other>
  BasicDensityMatrix<Other> cast() const {
    return BasicDensityMatrix<Other>(m_.template cast<std::complex<Other>>());
  }

 private:
  void validate() {
    const Real tol = state_tolerance<Real>();
    if (m_.rows() != m_.cols() || m_.rows() == 0)
      throw std::invalid_argument("density matrix must be square and non-empty");
    if (!m_.allFinite()) throw NumericalError("density matrix has non-finite entries");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(m_.trace() - std::complex<Real>(1)) > tol)
      throw std::invalid_argument("density matrix trace differs from 1");
    m_ = (m_ + m_.adjoint()).eval() / Real(2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_);
    const auto& ev = es.eigenvalues();
    if (ev.minCoeff() < -tol)
      throw std::invalid_argument("density matrix has a negative eigenvalue");
    if (ev.minCoeff() < 0) {
      auto clipped = ev.cwiseMax(Real(0)).eval();
      m_ = es.eigenvectors() * clipped.template cast<std::complex<Real>>().asDiagonal() *
           es.eigenvectors().adjoint();
      m_ /= m_.trace().real();
    }
  }

  Matrix m_;
};

using DensityMatrix = BasicDensityMatrix<double>;

template <typename Real = double>
BasicDensityMatrix<Real> bell_state(BellLabel b) {
  return BasicDensityMatrix<Real>::pure(bell_vector<Real>(b));
}

namespace detail {
template <typename Real>
void require_dim(const BasicDensityMatrix<Real>& rho, Eigen::Index d, const char* what) {
  if (rho.dim() != d)
    throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(d));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Figures of merit

// Tr(psi rho) for a pure reference state psi.
template <typename Real>
Real fidelity(const BasicDensityMatrix<Real>& rho, const BasicDensityMatrix<Real>& psi) {
  if (rho.dim() != psi.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  if (std::abs(psi.purity() - Real(1)) > Real(1e3) * state_tolerance<Real>())
    throw std::invalid_argument("fidelity: reference state is not pure");
  const Real f = (psi.matrix() * rho.matrix()).trace().real();
  return std::clamp(f, Real(0), Real(1));
}

template <typename Real>
Real fidelity(const BasicDensityMatrix<Real>& rho, const CVector<Real>& psi) {
  if (rho.dim() != psi.size()) throw std::invalid_argument("fidelity: dimension mismatch");
  const Real f = (psi.adjoint() * rho.matrix() * psi)(0, 0).real() / psi.squaredNorm();
  return std::clamp(f, Real(0), Real(1));
}

// Upper bound on the fidelity with any pure state, sqrt(Tr rho^2).
template <typename Real>
Real purity_bound(const BasicDensityMatrix<Real>& rho) {
  return std::sqrt(std::max(rho.purity(), Real(0)));
}

// Wootters concurrence.
template <typename Real>
Real concurrence(const BasicDensityMatrix<Real>& rho) {
  detail::require_dim(rho, 4, "concurrence");
  const CMatrix4<Real> r = rho.matrix();
  const CMatrix4<Real> yy = kron2<Real>(pauli_y<Real>(), pauli_y<Real>());
  const CMatrix4<Real> tilde = yy * r.conjugate() * yy;
  // The eigenvalues of rho*tilde are real and nonnegative; take square roots.
  Eigen::ComplexEigenSolver<CMatrix4<Real>> es(r * tilde, false);
  std::array<Real, 4> l{};
  for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(es.eigenvalues()(i).real(), Real(0)));
  std::sort(l.begin(), l.end(), std::greater<>());
  return std::clamp(l[0] - l[1] - l[2] - l[3], Real(0), Real(1));
}

// Diagonal of rho in the (Phi+, Phi-, Psi+, Psi-) basis.
template <typename Real>
Eigen::Matrix<Real, 4, 1> bell_weights(const BasicDensityMatrix<Real>& rho) {
  detail::require_dim(rho, 4, "bell_weights");
  const CMatrix4<Real> b = bell_basis<Real>();
  const CMatrix4<Real> rb = b.adjoint() * rho.matrix() * b;
  return rb.diagonal().real();
}

template <typename Real = double>
BasicDensityMatrix<Real> bell_diagonal(const Eigen::Matrix<Real, 4, 1>& w) {
  const CMatrix4<Real> b = bell_basis<Real>();
  const CMatrix4<Real> m = b * w.template cast<std::complex<Real>>().asDiagonal() * b.adjoint();
  return BasicDensityMatrix<Real>(CMatrix<Real>(m));
}

// ---------------------------------------------------------------------------
// Channels

template <typename Real>
BasicDensityMatrix<Real> depolarize(const BasicDensityMatrix<Real>& rho, Real F) {
  detail::require_dim(rho, 4, "depolarize");
  if (!(F >= 0 && F <= 1)) throw std::invalid_argument("depolarize: F outside [0,1]");
  const CMatrix4<Real> r = rho.matrix();
  CMatrix4<Real> acc = CMatrix4<Real>::Zero();
  for (PauliFrame f : {PauliFrame::IZ, PauliFrame::IY, PauliFrame::IX}) {
    const CMatrix4<Real> s = pauli_frame<Real>(f);
    acc.noalias() += s * r * s.adjoint();
  }
  const CMatrix4<Real> out = F * r + (Real(1) - F) / Real(3) * acc;
  return BasicDensityMatrix<Real>(CMatrix<Real>(out));
}

// sigma_z on the first (ion) factor with flip weight p.
template <typename Real>
BasicDensityMatrix<Real> dephase(const BasicDensityMatrix<Real>& rho, Real p) {
  detail::require_dim(rho, 4, "dephase");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("dephase: weight outside [0,1]");
  const CMatrix4<Real> sz = kron2<Real>(pauli_z<Real>(), CMatrix2<Real>::Identity());
  const CMatrix4<Real> r = rho.matrix();
  const CMatrix4<Real> out = (Real(1) - p) * r + p * sz * r * sz;
  return BasicDensityMatrix<Real>(CMatrix<Real>(out));
}

template <typename Real>
Real gaussian_flip_weight(Real t, Real tau) {
  if (!(tau > 0)) throw std::invalid_argument("dephase_gaussian: tau must be positive");
  if (t < 0) throw std::invalid_argument("dephase_gaussian: negative time");
  if (std::isinf(tau)) return Real(0);
  return -std::expm1(-(t * t) / (tau * tau)) / Real(2);
}

// Gaussian memory dephasing; coherences decay as exp(-t^2/tau^2).
template <typename Real>
BasicDensityMatrix<Real> dephase_gaussian(const BasicDensityMatrix<Real>& rho, Real t, Real tau) {
  return dephase(rho, gaussian_flip_weight(t, tau));
}

struct Qber {
  double x = 0, y = 0, z = 0;
};

// Error rates relative to the correlations of the target Bell state.
template <typename Real>
Qber qber(const BasicDensityMatrix<Real>& rho, BellLabel target) {
  detail::require_dim(rho, 4, "qber");
  const CVector4<Real> t = bell_vector<Real>(target);
  const std::array<CMatrix2<Real>, 3> paulis = {pauli_x<Real>(), pauli_y<Real>(), pauli_z<Real>()};
  std::array<double, 3> e{};
  for (int b = 0; b < 3; ++b) {
    const CMatrix4<Real> bb = kron2<Real>(paulis[b], paulis[b]);
    const Real sign = (t.adjoint() * bb * t)(0, 0).real() > 0 ? Real(1) : Real(-1);
    const Real corr = (bb * rho.matrix()).trace().real();
    e[b] = static_cast<double>(std::clamp((Real(1) - sign * corr) / Real(2), Real(0), Real(1)));
  }
  return {e[0], e[1], e[2]};
}

template <typename Real>
BasicDensityMatrix<Real> local_rotate(const BasicDensityMatrix<Real>& rho, const CMatrix2<Real>& u1,
                                      const CMatrix2<Real>& u2) {
  detail::require_dim(rho, 4, "local_rotate");
  if (!is_unitary(u1) || !is_unitary(u2))
    throw std::invalid_argument("local_rotate: non-unitary input");
  const CMatrix4<Real> u = kron2<Real>(u1, u2);
  const CMatrix4<Real> out = u * rho.matrix() * u.adjoint();
  return BasicDensityMatrix<Real>(CMatrix<Real>(out));
}

template <typename Real>
BasicDensityMatrix<Real> apply_frame(const BasicDensityMatrix<Real>& rho, PauliFrame f) {
  detail::require_dim(rho, 4, "apply_frame");
  const CMatrix4<Real> s = pauli_frame<Real>(f);
  return BasicDensityMatrix<Real>(CMatrix<Real>(s * rho.matrix() * s.adjoint()));
}

template <typename Real>
struct SwapResult {
  BasicDensityMatrix<Real> state;
  Real probability;
};

// Bell measurement on the inner qubits B,C of rhoAB (x) rhoCD followed by the
// teleportation correction on D. Returns the corrected state on A,D.
template <typename Real>
SwapResult<Real> entanglement_swap(const BasicDensityMatrix<Real>& rhoAB,
                                   const BasicDensityMatrix<Real>& rhoCD, BellLabel outcome) {
  detail::require_dim(rhoAB, 4, "entanglement_swap");
  detail::require_dim(rhoCD, 4, "entanglement_swap");
  using C = std::complex<Real>;
  const CVector4<Real> beta = bell_vector<Real>(outcome);
  const auto& ab = rhoAB.matrix();
  const auto& cd = rhoCD.matrix();
  CMatrix4<Real> out = CMatrix4<Real>::Zero();
  // out(a d, a' d') = sum beta*(b c) beta(b' c') ab(a b, a' b') cd(c d, c' d')
  for (int a = 0; a < 2; ++a)
    for (int d = 0; d < 2; ++d)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int d2 = 0; d2 < 2; ++d2) {
          C s(0);
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
              for (int b2 = 0; b2 < 2; ++b2)
                for (int c2 = 0; c2 < 2; ++c2)
                  s += std::conj(beta(2 * b + c)) * beta(2 * b2 + c2) *
                       ab(2 * a + b, 2 * a2 + b2) * cd(2 * c + d, 2 * c2 + d2);
          out(2 * a + d, 2 * a2 + d2) = s;
        }
  const Real prob = out.trace().real();
  if (!(prob >= Real(1e-14)))
    throw NumericalError(std::string("entanglement_swap: outcome ") + to_string(outcome) +
                         " has vanishing probability");
  out /= prob;
  const CMatrix4<Real> s = pauli_frame<Real>(correction_for(outcome));
  out = (s * out * s.adjoint()).eval();
  return {BasicDensityMatrix<Real>(CMatrix<Real>(out)), prob};
}

// Magic basis: maximally entangled states are exactly the real combinations
// of these columns up to a global phase.
template <typename Real = double>
CMatrix4<Real> magic_basis() {
  using C = std::complex<Real>;
  CMatrix4<Real> m;
  m.col(0) = bell_vector<Real>(BellLabel::PhiPlus);
  m.col(1) = C(0, 1) * bell_vector<Real>(BellLabel::PhiMinus);
  m.col(2) = C(0, 1) * bell_vector<Real>(BellLabel::PsiPlus);
  m.col(3) = bell_vector<Real>(BellLabel::PsiMinus);
  return m;
}

// Nearest maximally entangled pure state and its fidelity, in closed form:
// the top eigenpair of Re(M^dag rho M).
template <typename Real>
std::pair<CVector4<Real>, Real> nearest_max_entangled(const BasicDensityMatrix<Real>& rho) {
  detail::require_dim(rho, 4, "nearest_max_entangled");
  const CMatrix4<Real> m = magic_basis<Real>();
  const Eigen::Matrix<Real, 4, 4> re = (m.adjoint() * rho.matrix() * m).real();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Real, 4, 4>> es(re);
  const Eigen::Matrix<Real, 4, 1> x = es.eigenvectors().col(3);
  CVector4<Real> psi = m * x.template cast<std::complex<Real>>();
  return {psi, std::clamp(es.eigenvalues()(3), Real(0), Real(1))};
}

template <typename Real>
Real nearest_max_entangled_fidelity(const BasicDensityMatrix<Real>& rho) {
  return nearest_max_entangled(rho).second;
}

template <typename Real>
BasicDensityMatrix<Real> nearest_max_entangled_state(const BasicDensityMatrix<Real>& rho) {
  return BasicDensityMatrix<Real>::pure(nearest_max_entangled(rho).first);
}

}  // namespace qrep
