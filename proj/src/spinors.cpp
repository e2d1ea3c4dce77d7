#include "hypmass/spinors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "hypmass/tensors.hpp"

namespace hypmass {

namespace {

const Cx I(0.0, 1.0);

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double norm_max(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Euclidean-orthonormal basis of the complement of v.
Mat complement_basis(const Vec& v) {
  const int n = int(v.size());
  Eigen::HouseholderQR<Mat> qr{Mat(v)};
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  return q.rightCols(n - 1);
}

double omega_ball(const Vec& y) { return 0.5 * (1.0 - y.squaredNorm()); }

void check_ball(const Vec& y) {
  if (!(y.squaredNorm() < 1.0)) throw DomainError("spinor field evaluated outside the ball");
}

}  // namespace

CliffordRep CliffordRep::build(int n) {
  if (n % 2 != 0) throw std::invalid_argument("spinors require even n");
  if (n < 2 || n > 6) throw std::invalid_argument("spinor module supports 2 <= n <= 6");
  const int k = n / 2;
  CMat s1(2, 2), s2(2, 2), s3(2, 2);
  s1 << 0, 1, 1, 0;
  s2 << 0, -I, I, 0;
  s3 << 1, 0, 0, -1;
  const CMat id2 = CMat::Identity(2, 2);

  CliffordRep rep;
  rep.n_ = n;
  for (int j = 0; j < k; ++j) {
    for (const CMat* s : {&s1, &s2}) {
      CMat m = CMat::Identity(1, 1);
      for (int l = 0; l < k; ++l) m = kron(m, l < j ? s3 : (l == j ? *s : id2));
      rep.gammas_.push_back(I * m);
    }
  }
  const int d = 1 << k;
  CMat w = CMat::Identity(d, d);
  for (const CMat& g : rep.gammas_) w = w * g;
  rep.chirality_ = std::pow(I, k) * w;
  return rep;
}

CMat CliffordRep::clifford(const Vec& x) const {
  if (x.size() != n_) throw std::invalid_argument("vector dimension does not match the Clifford module");
  CMat out = CMat::Zero(spinor_dim(), spinor_dim());
  for (int i = 0; i < n_; ++i) out += x(i) * gammas_[size_t(i)];
  return out;
}

double CliffordRep::invariant_defect() const {
  const int d = spinor_dim();
  const CMat id = CMat::Identity(d, d);
  double worst = 0.0;
  for (int i = 0; i < n_; ++i) {
    const CMat& gi = gammas_[size_t(i)];
    worst = std::max(worst, norm_max(gi + gi.adjoint()));
    worst = std::max(worst, norm_max(chirality_ * gi + gi * chirality_));
    for (int j = 0; j < n_; ++j) {
      const CMat& gj = gammas_[size_t(j)];
      worst = std::max(worst, norm_max(gi * gj + gj * gi + (i == j ? 2.0 : 0.0) * id));
    }
  }
  worst = std::max(worst, norm_max(chirality_ * chirality_ - id));
  worst = std::max(worst, norm_max(chirality_ - chirality_.adjoint()));
  return worst;
}

BoundaryOp q_theta(const CliffordRep& rep, double theta, const Vec& normal) {
  if (std::abs(normal.norm() - 1.0) > 1e-10) throw std::invalid_argument("boundary normal must be a unit vector");
  const CMat c = rep.clifford(normal);
  return {theta, normal, std::cos(theta) * rep.chirality() * c + std::sin(theta) * I * c};
}

double AlgFormResiduals::max() const { return std::max({involution, chirality, symbol, normal}); }

AlgFormResiduals verify_alg_form(const CliffordRep& rep, double theta, const Vec& normal) {
  const BoundaryOp op = q_theta(rep, theta, normal);
  const CMat& q = op.matrix;
  const int d = rep.spinor_dim();
  const CMat id = CMat::Identity(d, d);
  const CMat c = rep.clifford(normal);
  AlgFormResiduals r;
  r.involution = std::max(norm_max(q - q.adjoint()), norm_max(q * q - id));
  r.chirality = norm_max(rep.chirality() * q + q * rep.chirality());
  const Mat tangent = complement_basis(normal);
  for (int a = 0; a < tangent.cols(); ++a) {
    const CMat ct = rep.clifford(tangent.col(a)) * c;
    r.symbol = std::max(r.symbol, norm_max(ct * q + q * ct));
  }
  r.normal = norm_max(c * q + q * c + 2.0 * std::sin(theta) * I * id);
  return r;
}

Projections projections(const BoundaryOp& op) {
  const int d = int(op.matrix.rows());
  const CMat id = CMat::Identity(d, d);
  return {0.5 * (id + op.matrix), 0.5 * (id - op.matrix)};
}

CMat chiral_block_basis(const CliffordRep& rep, const Vec& normal) {
  Eigen::SelfAdjointEigenSolver<CMat> es(rep.chirality());
  const int d = rep.spinor_dim();
  const int h = d / 2;
  // Eigenvalues ascend: the last h belong to +1.
  const CMat plus = es.eigenvectors().rightCols(h);
  CMat b(d, d);
  b.leftCols(h) = plus;
  b.rightCols(h) = I * rep.clifford(normal) * plus;
  return b;
}

double block_formula_defect(const CliffordRep& rep, double theta, const Vec& normal) {
  const CMat b = chiral_block_basis(rep, normal);
  const int d = rep.spinor_dim();
  const int h = d / 2;
  const CMat q = b.adjoint() * q_theta(rep, theta, normal).matrix * b;
  CMat expected = CMat::Zero(d, d);
  expected.topRightCorner(h, h) = -I * std::exp(I * theta) * CMat::Identity(h, h);
  expected.bottomLeftCorner(h, h) = I * std::exp(-I * theta) * CMat::Identity(h, h);
  double worst = norm_max(q - expected);
  // Clifford multiplication by the normal is -i offdiag(I, I), omega is diag(I, -I).
  CMat cn = CMat::Zero(d, d);
  cn.topRightCorner(h, h) = -I * CMat::Identity(h, h);
  cn.bottomLeftCorner(h, h) = -I * CMat::Identity(h, h);
  worst = std::max(worst, norm_max(b.adjoint() * rep.clifford(normal) * b - cn));
  CMat w = CMat::Identity(d, d);
  w.bottomRightCorner(h, h) *= -1.0;
  worst = std::max(worst, norm_max(b.adjoint() * rep.chirality() * b - w));
  return worst;
}

BoundaryDiracCheck boundary_dirac_identity_check(const CliffordRep& rep, double theta, const Vec& normal,
                                                 const CVec& psi, KillingSign sign) {
  const double s = sign_value(sign);
  const CMat q = q_theta(rep, theta, normal).matrix;
  if ((q * psi - s * psi).norm() > 1e-10 * std::max(1.0, psi.norm()))
    throw std::invalid_argument("spinor is not an eigenvector of the boundary operator");
  const int n = rep.dim();
  const CMat c = rep.clifford(normal);
  BoundaryDiracCheck out;
  const Cx zeroth = herm(s * 0.5 * (n - 1) * I * c * psi, psi);
  out.zeroth_order = std::abs(zeroth - 0.5 * (n - 1) * std::sin(theta) * psi.squaredNorm());
  const Mat tangent = complement_basis(normal);
  for (int a = 0; a < tangent.cols(); ++a)
    out.symbol = std::max(out.symbol, std::abs(herm(rep.clifford(tangent.col(a)) * c * psi, psi)));
  return out;
}

CVec killing_spinor(const CliffordRep& rep, const KillingSpinorSeed& seed, const Vec& y) {
  check_ball(y);
  const double s = sign_value(seed.sign);
  return (seed.u - s * I * (rep.clifford(y) * seed.u)) / std::sqrt(omega_ball(y));
}

CMat clifford_at(const CliffordRep& rep, const Vec& y, const Vec& x) { return rep.clifford(x) / omega_ball(y); }

CMat spin_connection(const CliffordRep& rep, const Vec& y, int i) {
  check_ball(y);
  const int n = rep.dim();
  const double om = omega_ball(y);
  const Christoffel gam = christoffel(MetricField::model(Chart::ball, n), y);
  // nabla_i e_a for e_a = Omega d_a, paired with e_b.
  Mat conn(n, n);
  for (int a = 0; a < n; ++a) {
    Vec v(n);
    for (int l = 0; l < n; ++l) v(l) = om * gam[size_t(l)](i, a);
    v(a) -= y(i);
    conn.row(a) = v.transpose() / om;
  }
  const int d = rep.spinor_dim();
  CMat out = CMat::Zero(d, d);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (conn(a, b) != 0.0) out += 0.25 * conn(a, b) * rep.gamma(a) * rep.gamma(b);
  return out;
}

double killing_residual(const CliffordRep& rep, const KillingSpinorSeed& seed, const Vec& y, double step) {
  const double s = sign_value(seed.sign);
  const int n = rep.dim();
  const double om = omega_ball(y);
  auto field = [&](const Vec& p) { return killing_spinor(rep, seed, p); };
  const CVec phi = field(y);
  double worst = 0.0;
  for (int a = 0; a < n; ++a) {
    const Vec x = om * Vec::Unit(n, a);
    const CVec r = covariant_derivative(rep, field, y, x, step) + s * 0.5 * I * (rep.gamma(a) * phi);
    worst = std::max(worst, r.norm() / phi.norm());
  }
  return worst;
}

double q_invariant(const CliffordRep& rep, const CVec& phi) {
  Cx q = phi.squaredNorm() * phi.squaredNorm();
  for (int a = 0; a < rep.dim(); ++a) {
    const Cx c = herm(rep.gamma(a) * phi, phi);
    q += c * c;
  }
  return q.real();
}

double seed_q_invariant(const CliffordRep& rep, const CVec& u) { return q_invariant(rep, u); }

double v_phi(const CliffordRep& rep, const KillingSpinorSeed& seed, const Vec& y) {
  return killing_spinor(rep, seed, y).squaredNorm();
}

StaticPotential v_phi_coefficients(const CliffordRep& rep, const KillingSpinorSeed& seed) {
  const int n = rep.dim();
  const double s = sign_value(seed.sign);
  StaticPotential v{Vec::Zero(n + 1)};
  v.coeffs(0) = seed.u.squaredNorm();
  for (int j = 0; j < n; ++j) v.coeffs(j + 1) = (-s * I * herm(rep.gamma(j) * seed.u, seed.u)).real();
  return v;
}

std::pair<double, double> v_phi_normalization(const CliffordRep& rep, const KillingSpinorSeed& seed,
                                              const std::vector<Vec>& points) {
  const StaticPotential v = v_phi_coefficients(rep, seed);
  std::vector<double> ratios;
  for (const Vec& y : points) {
    const double e = eval_potential(v, {Chart::ball, y});
    if (std::abs(e) < 1e-12) continue;
    ratios.push_back(v_phi(rep, seed, y) / e);
  }
  if (ratios.empty()) throw std::invalid_argument("no usable normalization points");
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= double(ratios.size());
  double spread = 0.0;
  for (double r : ratios) spread = std::max(spread, std::abs(r - mean));
  return {mean, spread};
}

Vec ball_inward_normal(const DomainSpec& domain, const Vec& y) {
  const Vec g = potential_gradient(domain.defining_potential(int(y.size())), Chart::ball, y);
  return -g / g.norm();
}

CMat seed_involution(const CliffordRep& rep, const DomainSpec& domain) {
  // Boundary normals at the ball point closest to the origin: -e_1 for every model domain.
  if (domain.kind() == DomainKind::equidistant) return -rep.chirality() * rep.gamma(0);
  return I * rep.gamma(0);
}

std::vector<KillingSpinorSeed> killing_space_basis(const CliffordRep& rep, const DomainSpec& domain,
                                                   KillingSign sign) {
  Eigen::SelfAdjointEigenSolver<CMat> es(seed_involution(rep, domain));
  std::vector<KillingSpinorSeed> out;
  for (int k = 0; k < es.eigenvalues().size(); ++k)
    if (std::abs(es.eigenvalues()(k) - sign_value(sign)) < 1e-8) out.push_back({es.eigenvectors().col(k), sign});
  return out;
}

double boundary_condition_residual(const CliffordRep& rep, const DomainSpec& domain,
                                   const KillingSpinorSeed& seed, const Vec& y) {
  const CMat q = q_theta(rep, domain.theta(), ball_inward_normal(domain, y)).matrix;
  const CVec phi = killing_spinor(rep, seed, y);
  return (q * phi - sign_value(seed.sign) * phi).norm() / phi.norm();
}

namespace {

// Inward unit normal as a coordinate vector field, and its covariant derivative along x.
Vec normal_field(const DomainSpec& domain, const Vec& y) { return omega_ball(y) * ball_inward_normal(domain, y); }

Vec covariant_normal_derivative(const DomainSpec& domain, const Vec& y, const Vec& x, double step) {
  const int n = int(y.size());
  const double h = step * omega_ball(y) / x.norm();
  Vec d = (normal_field(domain, y + h * x) - normal_field(domain, y - h * x)) / (2.0 * h);
  const Christoffel gam = christoffel(MetricField::model(Chart::ball, n), y);
  const Vec nu = normal_field(domain, y);
  for (int l = 0; l < n; ++l) d(l) += x.dot(gam[size_t(l)] * nu);
  return d;
}

}  // namespace

double boundary_killing_residual(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                                 const Vec& y, double step) {
  const Vec nhat = ball_inward_normal(domain, y);
  const CMat cnu = rep.clifford(nhat);
  const double om = omega_ball(y);
  auto field = [&](const Vec& p) { return killing_spinor(rep, seed, p); };
  const CVec psi = field(y);
  const Mat tangent = complement_basis(nhat);
  double worst = 0.0;
  for (int a = 0; a < tangent.cols(); ++a) {
    const Vec x = om * tangent.col(a);
    const Vec dnu = covariant_normal_derivative(domain, y, x, step);
    CVec r = covariant_derivative(rep, field, y, x, step) + 0.5 * (clifford_at(rep, y, dnu) * (cnu * psi));
    // Intrinsic Clifford multiplication on the boundary spinor bundle: c(X)c(nu)omega.
    r -= 0.5 * domain.kappa() * I * (rep.clifford(tangent.col(a)) * (cnu * (rep.chirality() * psi)));
    worst = std::max(worst, r.norm() / psi.norm());
  }
  return worst;
}

double witten_boundary_residual(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                                const Vec& y, double step) {
  const int n = rep.dim();
  const double s = sign_value(seed.sign);
  const double om = omega_ball(y);
  auto field = [&](const Vec& p) { return killing_spinor(rep, seed, p); };
  const CVec psi = field(y);
  auto killing_derivative = [&](const Vec& x) {
    return CVec(covariant_derivative(rep, field, y, x, step) + s * 0.5 * I * (clifford_at(rep, y, x) * psi));
  };
  CVec dirac = CVec::Zero(psi.size());
  for (int a = 0; a < n; ++a) dirac += rep.gamma(a) * killing_derivative(om * Vec::Unit(n, a));
  const Vec nhat = ball_inward_normal(domain, y);
  const CVec w = -(killing_derivative(om * nhat) + rep.clifford(nhat) * dirac);
  return w.norm() / psi.norm();
}

double umbilic_spinor_residual(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                               const Vec& y, double step) {
  const Vec nhat = ball_inward_normal(domain, y);
  const double om = omega_ball(y);
  const CVec psi = killing_spinor(rep, seed, y);
  const Mat tangent = complement_basis(nhat);
  double worst = 0.0;
  for (int a = 0; a < tangent.cols(); ++a) {
    const Vec x = om * tangent.col(a);
    const Vec v = covariant_normal_derivative(domain, y, x, step) + domain.tau() * x;
    worst = std::max(worst, (clifford_at(rep, y, v) * psi).norm() / psi.norm());
  }
  return worst;
}

WittenIntegrands witten_integrands(const CliffordRep& rep, const DomainSpec& domain, const KillingSpinorSeed& seed,
                                   const Vec& interior, const Vec& boundary, double step) {
  const int n = rep.dim();
  const double s = sign_value(seed.sign);
  WittenIntegrands out;
  auto field = [&](const Vec& p) { return killing_spinor(rep, seed, p); };
  const CVec phi = field(interior);
  const double om = omega_ball(interior);
  for (int a = 0; a < n; ++a) {
    const Vec x = om * Vec::Unit(n, a);
    const CVec r = covariant_derivative(rep, field, interior, x, step) + s * 0.5 * I * (rep.gamma(a) * phi);
    out.gradient += r.squaredNorm();
  }
  out.gradient /= phi.squaredNorm();

  const MetricField b = MetricField::model(Chart::ball, n);
  out.scalar = 0.25 * (curvature(b, interior).scalar + n * (n - 1.0));

  const ScalarField f = potential_field(domain.defining_potential(n), Chart::ball);
  const HypersurfaceGeometry geo = hypersurface_geometry(b, f, domain.level(), boundary);
  out.boundary = 0.5 * (geo.mean_curvature - (n - 1.0) * domain.lambda());
  return out;
}

}  // namespace hypmass
