#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hypmass/models.hpp"

namespace hypmass {

using Cx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Selects the pair (Killing connection nabla^+-, boundary projector P^+-) as one token,
/// so the two signs cannot be mixed.
enum class KillingSign { plus = 1, minus = -1 };

inline double sign_value(KillingSign s) { return s == KillingSign::plus ? 1.0 : -1.0; }

/// Complex Clifford module of R^n, n even, with c(e_i)^2 = -1 and skew-Hermitian generators.
class CliffordRep {
 public:
  static CliffordRep build(int n);

  int dim() const { return n_; }
  int spinor_dim() const { return int(chirality_.rows()); }
  const CMat& gamma(int i) const { return gammas_[size_t(i)]; }
  const CMat& chirality() const { return chirality_; }
  /// sum_i x_i gamma_i for frame components x.
  CMat clifford(const Vec& x) const;
  /// Largest violation of the defining relations.
  double invariant_defect() const;

 private:
  int n_ = 0;
  std::vector<CMat> gammas_;
  CMat chirality_;
};

/// <a, b> conjugate-linear in the second slot.
inline Cx herm(const CVec& a, const CVec& b) { return b.dot(a); }

struct BoundaryOp {
  double theta = 0.0;
  Vec normal;  // unit frame components of the inward normal
  CMat matrix;
};

/// kappa omega c(nu) + tau i c(nu).
BoundaryOp q_theta(const CliffordRep& rep, double theta, const Vec& normal);

struct AlgFormResiduals {
  double involution = 0.0;          // Q_theta self-adjoint with square I
  double chirality = 0.0;           // {omega, Q_theta}
  double symbol = 0.0;              // {c(X)c(nu), Q_theta}, tangent X
  double normal = 0.0;              // {c(nu), Q_theta} + 2 tau i
  double max() const;
};

AlgFormResiduals verify_alg_form(const CliffordRep& rep, double theta, const Vec& normal);

struct Projections {
  CMat plus, minus;
};

Projections projections(const BoundaryOp& op);

/// Unitary B = [B+, i c(nu) B+] with B+ spanning the omega = +1 eigenspace.
CMat chiral_block_basis(const CliffordRep& rep, const Vec& normal);
/// Deviation of Q_theta from (Psi1, Psi2) -> (-i e^{i theta} Psi2, i e^{-i theta} Psi1) in that basis.
double block_formula_defect(const CliffordRep& rep, double theta, const Vec& normal);

struct BoundaryDiracCheck {
  double zeroth_order = 0.0;  // <+-((n-1)i/2) c(nu) Psi, Psi> - ((n-1) tau / 2)|Psi|^2
  double symbol = 0.0;        // |<c(X)c(nu) Psi, Psi>| over a tangent basis
};

/// Psi must satisfy Q_theta Psi = +-Psi for the given sign.
BoundaryDiracCheck boundary_dirac_identity_check(const CliffordRep& rep, double theta, const Vec& normal,
                                                 const CVec& psi, KillingSign sign);

struct KillingSpinorSeed {
  CVec u;
  KillingSign sign = KillingSign::plus;
};

/// Omega^-1/2 (I -+ i c(y)) u in the flat trivialization of the ball.
CVec killing_spinor(const CliffordRep& rep, const KillingSpinorSeed& seed, const Vec& y);

/// Clifford multiplication by a coordinate vector of the ball model at y.
CMat clifford_at(const CliffordRep& rep, const Vec& y, const Vec& x);

/// Spin connection 1/4 sum_ab omega_ab(d_i) c(e_a) c(e_b) of the ball model, frame e_a = Omega d_a.
CMat spin_connection(const CliffordRep& rep, const Vec& y, int i);

/// Covariant derivative of a spinor field along a coordinate vector, by central differences.
template <class Field>
CVec covariant_derivative(const CliffordRep& rep, const Field& psi, const Vec& y, const Vec& x, double step) {
  const double h = step * 0.5 * (1.0 - y.squaredNorm()) / x.norm();
  CVec d = (psi(Vec(y + h * x)) - psi(Vec(y - h * x))) / (2.0 * h);
  const CVec p = psi(y);
  for (int i = 0; i < y.size(); ++i)
    if (x(i) != 0.0) d += x(i) * spin_connection(rep, y, i) * p;
  return d;
}

/// max_a |nabla^+-_{e_a} Phi| / |Phi| over the orthonormal frame.
double killing_residual(const CliffordRep& rep, const KillingSpinorSeed& seed, const Vec& y, double step = 1e-4);

/// |Phi|^4 + sum_a <c(e_a)Phi, Phi>^2.
double q_invariant(const CliffordRep& rep, const CVec& phi);
/// Same quantity for a constant seed (evaluated at the origin, frame = coordinate basis).
double seed_q_invariant(const CliffordRep& rep, const CVec& u);

double v_phi(const CliffordRep& rep, const KillingSpinorSeed& seed, const Vec& y);
/// |u|^2 V_(0) -+ i sum_j <c(d_j)u, u> V_(j).
StaticPotential v_phi_coefficients(const CliffordRep& rep, const KillingSpinorSeed& seed);
/// Ratio |Phi|^2 / expansion, measured at the given points; returns mean and spread.
std::pair<double, double> v_phi_normalization(const CliffordRep& rep, const KillingSpinorSeed& seed,
                                              const std::vector<Vec>& points);

/// Unit frame components of the inward normal of the domain boundary at a ball point.
Vec ball_inward_normal(const DomainSpec& domain, const Vec& y);

/// Constant involution on seeds whose +-1 eigenspace yields Q_theta Phi = +-Phi on the boundary.
CMat seed_involution(const CliffordRep& rep, const DomainSpec& domain);

/// Orthonormal seeds spanning the Killing spinors compatible with the boundary condition.
std::vector<KillingSpinorSeed> killing_space_basis(const CliffordRep& rep, const DomainSpec& domain,
                                                   KillingSign sign);

/// |Q_theta Phi -+ Phi| / |Phi| at a boundary point (ball coordinates).
double boundary_condition_residual(const CliffordRep& rep, const DomainSpec& domain,
                                   const KillingSpinorSeed& seed, const Vec& y);

/// Intrinsic Killing equation on the boundary, nabla^T_X Psi -+ (kappa i / 2) c(X)c(nu) omega Psi,
/// maximized over a unit tangent basis; relative to |Psi|.
double boundary_killing_residual(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                                 const Vec& y, double step = 1e-4);

/// Witten boundary operator -(nabla^+-_nu + c(nu) D^+-) applied to Phi, relative to |Phi|.
double witten_boundary_residual(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                                const Vec& y, double step = 1e-4);

/// |c(nabla_X nu + tau X) Phi| / |Phi| over a unit tangent basis at a boundary point.
double umbilic_spinor_residual(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                               const Vec& y, double step = 1e-4);

/// Densities of the Witten identity for the model metric, each divided by |Phi|^2:
/// |nabla^+-Phi|^2 and (R + n(n-1))/4 |Phi|^2 at an interior point, (H - (n-1) lambda)/2 |Phi|^2 at a
/// boundary point (ball coordinates).
struct WittenIntegrands {
  double gradient = 0.0;
  double scalar = 0.0;
  double boundary = 0.0;
};

WittenIntegrands witten_integrands(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                                   const Vec& interior, const Vec& boundary, double step = 1e-4);

}  // namespace hypmass
