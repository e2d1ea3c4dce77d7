#include "hypmass/models.hpp"

#include <sstream>

namespace hypmass {

const char* chart_name(Chart c) {
  switch (c) {
    case Chart::hyperboloid:
      return "hyperboloid";
    case Chart::ball:
      return "ball";
    case Chart::half_space:
      return "half-space";
  }
  return "?";
}

void check_valid(const ModelPoint& p) {
  if (!p.coords.allFinite()) throw DomainError("non-finite coordinates");
  switch (p.chart) {
    case Chart::hyperboloid: {
      const double q = minkowski_inner(p.coords, p.coords);
      if (std::abs(q + 1.0) > 1e-9 * std::max(1.0, p.coords(0) * p.coords(0)) || p.coords(0) <= 0.0)
        throw DomainError("point is not on the upper hyperboloid");
      break;
    }
    case Chart::ball:
      if (p.coords.squaredNorm() >= 1.0) throw DomainError("ball point with |y| >= 1");
      break;
    case Chart::half_space:
      if (p.coords(0) <= 0.0) throw DomainError("half-space point with z_1 <= 0");
      break;
  }
}

Vec to_ball(const ModelPoint& p) {
  check_valid(p);
  switch (p.chart) {
    case Chart::ball:
      return p.coords;
    case Chart::hyperboloid:
      return hyperboloid_to_ball<double>(p.coords);
    case Chart::half_space:
      return half_space_to_ball<double>(p.coords);
  }
  return p.coords;
}

Vec to_hyperboloid(const ModelPoint& p) {
  if (p.chart == Chart::hyperboloid) {
    check_valid(p);
    return p.coords;
  }
  return ball_to_hyperboloid<double>(to_ball(p));
}

ModelPoint convert(const ModelPoint& p, Chart target) {
  if (p.chart == target) {
    check_valid(p);
    return p;
  }
  // Direct maps avoid a detour through the ball where possible.
  if (p.chart == Chart::hyperboloid && target == Chart::half_space) {
    check_valid(p);
    const Vec& x = p.coords;
    const double vh = x(0) - x(1);
    Vec z(x.size() - 1);
    z(0) = 1.0 / vh;
    z.tail(z.size() - 1) = x.tail(x.size() - 2) / vh;
    return {target, z};
  }
  if (p.chart == Chart::half_space && target == Chart::hyperboloid) {
    check_valid(p);
    const Vec& z = p.coords;
    const double q = z.squaredNorm();
    Vec x(z.size() + 1);
    x(0) = (q + 1.0) / (2.0 * z(0));
    x(1) = (q - 1.0) / (2.0 * z(0));
    x.tail(z.size() - 1) = z.tail(z.size() - 1) / z(0);
    return {target, x};
  }
  const Vec y = to_ball(p);
  switch (target) {
    case Chart::ball:
      return {target, y};
    case Chart::hyperboloid:
      return {target, ball_to_hyperboloid<double>(y)};
    case Chart::half_space:
      return {target, ball_to_half_space<double>(y)};
  }
  return {target, y};
}

Mat ball_embedding_jacobian(const Vec& y) {
  const int n = int(y.size());
  const double d = 1.0 - y.squaredNorm();
  Mat j(n + 1, n);
  j.row(0) = 4.0 * y.transpose() / (d * d);
  j.bottomRows(n) = 2.0 / d * Mat::Identity(n, n) + 4.0 / (d * d) * y * y.transpose();
  return j;
}

Mat half_space_embedding_jacobian(const Vec& z) {
  const int n = int(z.size());
  const double z1 = z(0);
  const double q = z.squaredNorm();
  Mat j = Mat::Zero(n + 1, n);
  for (int k = 0; k < n; ++k) {
    j(0, k) = z(k) / z1;
    j(1, k) = z(k) / z1;
  }
  j(0, 0) -= (q + 1.0) / (2.0 * z1 * z1);
  j(1, 0) -= (q - 1.0) / (2.0 * z1 * z1);
  for (int a = 1; a < n; ++a) {
    j(a + 1, a) = 1.0 / z1;
    j(a + 1, 0) = -z(a) / (z1 * z1);
  }
  return j;
}

Mat embedding_jacobian(Chart chart, const Vec& coords) {
  switch (chart) {
    case Chart::ball:
      return ball_embedding_jacobian(coords);
    case Chart::half_space:
      return half_space_embedding_jacobian(coords);
    case Chart::hyperboloid:
      break;
  }
  throw std::invalid_argument("embedding_jacobian needs the ball or half-space chart");
}

Vec ambient_to_chart(Chart chart, const Vec& coords, const Vec& ambient) {
  const Mat j = embedding_jacobian(chart, coords);
  // Exact for tangent vectors; the pseudo-inverse uses the Minkowski-orthogonal complement.
  const Mat eta = minkowski_metric(int(coords.size()));
  const Mat gram = j.transpose() * eta * j;
  return gram.ldlt().solve(j.transpose() * eta * ambient);
}

double conformal_factor(Chart chart, const Vec& coords) {
  switch (chart) {
    case Chart::ball:
      return 0.5 * (1.0 - coords.squaredNorm());
    case Chart::half_space:
      return coords(0);
    case Chart::hyperboloid:
      break;
  }
  throw std::invalid_argument("conformal factor is defined for the ball and half-space charts");
}

StaticPotential StaticPotential::basis(int n, int i) {
  if (i < 0 || i > n) throw std::out_of_range("potential index out of range");
  StaticPotential v{Vec::Zero(n + 1)};
  v.coeffs(i) = 1.0;
  return v;
}

StaticPotential StaticPotential::horospherical(int n) {
  StaticPotential v{Vec::Zero(n + 1)};
  v.coeffs(0) = 1.0;
  v.coeffs(1) = -1.0;
  return v;
}

double eval_potential(const StaticPotential& v, const ModelPoint& p) {
  if (v.dim() != p.dim()) throw std::invalid_argument("potential and point dimensions differ");
  if (p.chart == Chart::half_space) {
    check_valid(p);
    const Vec& z = p.coords;
    const double q = z.squaredNorm();
    double out = v.coeffs(0) * (q + 1.0) / (2.0 * z(0)) + v.coeffs(1) * (q - 1.0) / (2.0 * z(0));
    for (int j = 1; j < z.size(); ++j) out += v.coeffs(j + 1) * z(j) / z(0);
    return out;
  }
  return v.coeffs.dot(to_hyperboloid(p));
}

namespace {

// Gradient/Hessian of V_(i) in the ball chart.
void ball_basis_derivs(int i, const Vec& y, Vec& g, Mat& h) {
  const int n = int(y.size());
  const double d = 1.0 - y.squaredNorm();
  if (i == 0) {
    g = 4.0 * y / (d * d);
    h = 4.0 / (d * d) * Mat::Identity(n, n) + 16.0 / (d * d * d) * y * y.transpose();
    return;
  }
  const int j = i - 1;
  g = 4.0 * y(j) / (d * d) * y;
  g(j) += 2.0 / d;
  h = 16.0 * y(j) / (d * d * d) * y * y.transpose();
  for (int k = 0; k < n; ++k) {
    h(j, k) += 4.0 * y(k) / (d * d);
    h(k, j) += 4.0 * y(k) / (d * d);
    h(k, k) += 4.0 * y(j) / (d * d);
  }
}

void half_basis_derivs(int i, const Vec& z, Vec& g, Mat& h) {
  const int n = int(z.size());
  const double z1 = z(0);
  g = Vec::Zero(n);
  h = Mat::Zero(n, n);
  if (i <= 1) {
    const double q = z.squaredNorm() + (i == 0 ? 1.0 : -1.0);
    g = z / z1;
    g(0) -= q / (2.0 * z1 * z1);
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) {
        double v = (k == l ? 1.0 / z1 : 0.0);
        if (l == 0) v -= z(k) / (z1 * z1);
        if (k == 0) v -= z(l) / (z1 * z1);
        if (k == 0 && l == 0) v += q / (z1 * z1 * z1);
        h(k, l) = v;
      }
    }
    return;
  }
  const int j = i - 1;
  g(j) = 1.0 / z1;
  g(0) -= z(j) / (z1 * z1);
  h(j, 0) -= 1.0 / (z1 * z1);
  h(0, j) -= 1.0 / (z1 * z1);
  h(0, 0) += 2.0 * z(j) / (z1 * z1 * z1);
}

}  // namespace

Vec potential_gradient(const StaticPotential& v, Chart chart, const Vec& coords) {
  Vec out = Vec::Zero(coords.size());
  Vec g;
  Mat h;
  for (int i = 0; i < v.coeffs.size(); ++i) {
    if (v.coeffs(i) == 0.0) continue;
    if (chart == Chart::ball)
      ball_basis_derivs(i, coords, g, h);
    else if (chart == Chart::half_space)
      half_basis_derivs(i, coords, g, h);
    else
      throw std::invalid_argument("potential derivatives need the ball or half-space chart");
    out += v.coeffs(i) * g;
  }
  return out;
}

Mat potential_hessian(const StaticPotential& v, Chart chart, const Vec& coords) {
  const int n = int(coords.size());
  Mat out = Mat::Zero(n, n);
  Vec g;
  Mat h;
  for (int i = 0; i < v.coeffs.size(); ++i) {
    if (v.coeffs(i) == 0.0) continue;
    if (chart == Chart::ball)
      ball_basis_derivs(i, coords, g, h);
    else if (chart == Chart::half_space)
      half_basis_derivs(i, coords, g, h);
    else
      throw std::invalid_argument("potential derivatives need the ball or half-space chart");
    out += v.coeffs(i) * h;
  }
  return out;
}

double grad_potential_inner(int i, int j, const Vec& x) {
  const double eta = (i == j) ? (i == 0 ? -1.0 : 1.0) : 0.0;
  return eta + x(i) * x(j);
}

double lorentz_defect(const Mat& a) {
  const Mat eta = minkowski_metric(int(a.rows()) - 1);
  return (a.transpose() * eta * a - eta).cwiseAbs().maxCoeff();
}

LorentzIsometry::LorentzIsometry(Mat a) : matrix(std::move(a)) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 2) throw std::invalid_argument("isometry must be square");
  if (lorentz_defect(matrix) > 1e-10 * std::max(1.0, matrix.squaredNorm()))
    throw std::invalid_argument("matrix is not a Lorentz transformation");
  if (matrix(0, 0) <= 0.0) throw std::invalid_argument("matrix reverses time orientation");
}

Mat LorentzIsometry::inverse() const {
  const Mat eta = minkowski_metric(dim());
  return eta * matrix.transpose() * eta;
}

LorentzIsometry LorentzIsometry::identity(int n) { return LorentzIsometry(Mat::Identity(n + 1, n + 1)); }

Mat boost_matrix(int n, double rapidity) {
  Mat b = Mat::Identity(n + 1, n + 1);
  b(0, 0) = b(1, 1) = std::cosh(rapidity);
  b(0, 1) = b(1, 0) = std::sinh(rapidity);
  return b;
}

Mat translation_matrix(const Vec& u) {
  const int m = int(u.size());
  const double h = 0.5 * u.squaredNorm();
  Mat a = Mat::Identity(m + 2, m + 2);
  a(0, 0) = 1.0 + h;
  a(0, 1) = -h;
  a(1, 0) = h;
  a(1, 1) = 1.0 - h;
  a.block(0, 2, 1, m) = u.transpose();
  a.block(1, 2, 1, m) = u.transpose();
  a.block(2, 0, m, 1) = u;
  a.block(2, 1, m, 1) = -u;
  return a;
}

Mat rotation_matrix(const Mat& r) {
  const int m = int(r.rows());
  Mat a = Mat::Identity(m + 2, m + 2);
  a.bottomRightCorner(m, m) = r;
  return a;
}

ParabolicElement ParabolicElement::identity(int n) {
  return {Mat::Identity(n - 1, n - 1), 0.0, Vec::Zero(n - 1)};
}

LorentzIsometry ParabolicElement::assemble() const {
  if ((rotation.transpose() * rotation - Mat::Identity(rotation.rows(), rotation.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("parabolic rotation block is not orthogonal");
  const int n = dim();
  return LorentzIsometry(rotation_matrix(rotation) * boost_matrix(n, boost) * translation_matrix(translation));
}

ModelPoint apply_isometry(const LorentzIsometry& a, const ModelPoint& p) {
  if (a.dim() != p.dim()) throw std::invalid_argument("isometry and point dimensions differ");
  const Vec x = to_hyperboloid(p);
  return convert({Chart::hyperboloid, a.matrix * x}, p.chart);
}

ModelPoint apply_isometry(const ParabolicElement& a, const ModelPoint& p) {
  return apply_isometry(a.assemble(), p);
}

Mat isometry_ball_jacobian(const LorentzIsometry& a, const Vec& y) {
  const Vec x = ball_to_hyperboloid<double>(y);
  const Vec ax = a.matrix * x;
  const int n = int(y.size());
  Mat dy_dx = Mat::Zero(n, n + 1);
  const double q = 1.0 + ax(0);
  dy_dx.col(0) = -ax.tail(n) / (q * q);
  dy_dx.rightCols(n) = Mat::Identity(n, n) / q;
  return dy_dx * a.matrix * ball_embedding_jacobian(y);
}

DomainSpec DomainSpec::equidistant(double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("non-finite s");
  return DomainSpec(DomainKind::equidistant, s, 0.0, s / std::sqrt(1.0 + s * s));
}

DomainSpec DomainSpec::horoball(double chi) {
  if (!(chi > 0.0)) throw std::invalid_argument("chi must be positive");
  return DomainSpec(DomainKind::horoball, 0.0, chi, 1.0);
}

DomainSpec DomainSpec::horoball_complement(double chi) {
  if (!(chi > 0.0)) throw std::invalid_argument("chi must be positive");
  return DomainSpec(DomainKind::horoball_complement, 0.0, chi, -1.0);
}

StaticPotential DomainSpec::defining_potential(int n) const {
  switch (kind_) {
    case DomainKind::equidistant:
      return StaticPotential::basis(n, 1);
    case DomainKind::horoball:
      return StaticPotential::horospherical(n);
    case DomainKind::horoball_complement: {
      StaticPotential v = StaticPotential::horospherical(n);
      v.coeffs = -v.coeffs;
      return v;
    }
  }
  return StaticPotential::basis(n, 1);
}

double DomainSpec::level() const {
  switch (kind_) {
    case DomainKind::equidistant:
      return s_;
    case DomainKind::horoball:
      return chi_;
    case DomainKind::horoball_complement:
      return -chi_;
  }
  return 0.0;
}

bool DomainSpec::contains(const ModelPoint& p, double slack) const {
  return eval_potential(defining_potential(p.dim()), p) <= level() + slack;
}

ModelPoint DomainSpec::boundary_point(const Vec& w) const {
  const int n = int(w.size()) + 1;
  if (kind_ == DomainKind::equidistant) {
    Vec x(n + 1);
    x(1) = s_;
    x.tail(n - 1) = w;
    x(0) = std::sqrt(1.0 + s_ * s_ + w.squaredNorm());
    return {Chart::hyperboloid, x};
  }
  Vec z(n);
  z(0) = 1.0 / chi_;
  z.tail(n - 1) = w;
  return {Chart::half_space, z};
}

std::string DomainSpec::name() const {
  std::ostringstream os;
  switch (kind_) {
    case DomainKind::equidistant:
      os << "equidistant(s=" << s_ << ")";
      break;
    case DomainKind::horoball:
      os << "horoball(chi=" << chi_ << ")";
      break;
    case DomainKind::horoball_complement:
      os << "horoball-complement(chi=" << chi_ << ")";
      break;
  }
  return os.str();
}

Mat rho_matrix(const LorentzIsometry& a) {
  // V(x) = c.x, so V o A^-1 has coefficients A^-T c.
  return a.inverse().transpose();
}

StaticPotential rho_action(const LorentzIsometry& a, const StaticPotential& v, PotentialVariant variant) {
  if (a.dim() != v.dim()) throw std::invalid_argument("isometry and potential dimensions differ");
  const int n = a.dim();
  const Mat& m = a.matrix;
  if (variant == PotentialVariant::equidistant) {
    Vec e1 = Vec::Zero(n + 1);
    e1(1) = 1.0;
    if ((m.row(1).transpose() - e1).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("isometry does not preserve the equidistant foliation");
  } else {
    Vec h = StaticPotential::horospherical(n).coeffs;
    if ((m.transpose() * h - h).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("isometry does not preserve the horospherical foliation");
  }
  StaticPotential out{rho_matrix(a) * v.coeffs};
  if (variant == PotentialVariant::horospherical && (v.coeffs - StaticPotential::horospherical(n).coeffs).cwiseAbs().maxCoeff() == 0.0)
    out = v;
  return out;
}

}  // namespace hypmass
