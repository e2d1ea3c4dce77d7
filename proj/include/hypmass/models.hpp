#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hypmass {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Chart { hyperboloid, ball, half_space };

const char* chart_name(Chart c);

/// Point of hyperbolic n-space with raw chart coordinates.
/// Hyperboloid coordinates have n+1 entries, the other charts n.
struct ModelPoint {
  Chart chart = Chart::ball;
  Vec coords;

  int dim() const {
    return chart == Chart::hyperboloid ? int(coords.size()) - 1 : int(coords.size());
  }
};

template <typename Scalar>
Scalar minkowski_inner(const VecT<Scalar>& x, const VecT<Scalar>& y) {
  return -x(0) * y(0) + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

inline double minkowski_inner(const Vec& x, const Vec& y) { return minkowski_inner<double>(x, y); }

inline Mat minkowski_metric(int n) {
  Mat eta = Mat::Identity(n + 1, n + 1);
  eta(0, 0) = -1.0;
  return eta;
}

// Central projection from (-1,0,...,0).
template <typename Scalar>
VecT<Scalar> ball_to_hyperboloid(const VecT<Scalar>& y) {
  const Scalar d = Scalar(1) - y.squaredNorm();
  VecT<Scalar> x(y.size() + 1);
  x(0) = (Scalar(1) + y.squaredNorm()) / d;
  x.tail(y.size()) = Scalar(2) * y / d;
  return x;
}

template <typename Scalar>
VecT<Scalar> hyperboloid_to_ball(const VecT<Scalar>& x) {
  return x.tail(x.size() - 1) / (Scalar(1) + x(0));
}

template <typename Scalar>
VecT<Scalar> ball_to_half_space(const VecT<Scalar>& y) {
  VecT<Scalar> w = -y;
  w(0) += Scalar(1);
  const Scalar q = w.squaredNorm();
  VecT<Scalar> z = Scalar(2) * y / q;
  z(0) = (Scalar(1) - y.squaredNorm()) / q;
  return z;
}

template <typename Scalar>
VecT<Scalar> half_space_to_ball(const VecT<Scalar>& z) {
  VecT<Scalar> w = z;
  w(0) += Scalar(1);
  const Scalar q = w.squaredNorm();
  VecT<Scalar> y = Scalar(2) * z / q;
  y(0) = (z.squaredNorm() - Scalar(1)) / q;
  return y;
}

void check_valid(const ModelPoint& p);
ModelPoint convert(const ModelPoint& p, Chart target);
Vec to_ball(const ModelPoint& p);
Vec to_hyperboloid(const ModelPoint& p);

/// d(chart coords)/d(hyperboloid coords) restricted to tangent vectors, and the inverse.
Mat ball_embedding_jacobian(const Vec& y);       // (n+1) x n, dx/dy
Mat half_space_embedding_jacobian(const Vec& z); // (n+1) x n, dx/dz
Mat embedding_jacobian(Chart chart, const Vec& coords);
/// Chart components of an ambient vector tangent to the hyperboloid at the point.
Vec ambient_to_chart(Chart chart, const Vec& coords, const Vec& ambient);

/// Conformal factor of the model metric Omega^-2 delta in the ball and half-space charts.
double conformal_factor(Chart chart, const Vec& coords);

/// Combination sum_i c_i V_(i) of hyperboloid coordinate functions.
struct StaticPotential {
  Vec coeffs;

  int dim() const { return int(coeffs.size()) - 1; }

  static StaticPotential basis(int n, int i);
  static StaticPotential horospherical(int n);
};

double eval_potential(const StaticPotential& v, const ModelPoint& p);
/// Coordinate gradient and Hessian of a potential in the ball or half-space chart.
Vec potential_gradient(const StaticPotential& v, Chart chart, const Vec& coords);
Mat potential_hessian(const StaticPotential& v, Chart chart, const Vec& coords);

/// <grad V_i, grad V_j>_b on the hyperboloid.
double grad_potential_inner(int i, int j, const Vec& x);

struct LorentzIsometry {
  Mat matrix;

  explicit LorentzIsometry(Mat a);
  int dim() const { return int(matrix.rows()) - 1; }
  Mat inverse() const;
  static LorentzIsometry identity(int n);
};

double lorentz_defect(const Mat& a);

/// Element of the parabolic subgroup fixing the isotropic line [d_0 + d_1].
struct ParabolicElement {
  Mat rotation;   // (n-1) x (n-1)
  double boost = 0.0;
  Vec translation;  // n-1

  static ParabolicElement identity(int n);
  int dim() const { return int(translation.size()) + 1; }
  LorentzIsometry assemble() const;
};

Mat boost_matrix(int n, double rapidity);
Mat translation_matrix(const Vec& u);
Mat rotation_matrix(const Mat& r);

ModelPoint apply_isometry(const LorentzIsometry& a, const ModelPoint& p);
ModelPoint apply_isometry(const ParabolicElement& a, const ModelPoint& p);
/// Jacobian of the isometry in ball coordinates at y.
Mat isometry_ball_jacobian(const LorentzIsometry& a, const Vec& y);

enum class DomainKind { equidistant, horoball, horoball_complement };

/// Model domain; the boundary geometry parameters are derived, never set.
class DomainSpec {
 public:
  static DomainSpec equidistant(double s);
  static DomainSpec horoball(double chi);
  static DomainSpec horoball_complement(double chi);

  DomainKind kind() const { return kind_; }
  double s() const { return s_; }
  double chi() const { return chi_; }
  /// Umbilicity factor of the boundary (lambda_s, or +-1 for the horospherical cases).
  double lambda() const { return lambda_; }
  double theta() const { return std::asin(lambda_); }
  double kappa() const { return std::sqrt(std::max(0.0, 1.0 - lambda_ * lambda_)); }
  double tau() const { return lambda_; }

  /// The domain is {f <= level}, with f a static potential.
  StaticPotential defining_potential(int n) const;
  double level() const;
  /// Canonical chart for integrals over this domain.
  Chart chart() const { return kind_ == DomainKind::equidistant ? Chart::ball : Chart::half_space; }
  bool contains(const ModelPoint& p, double slack = 0.0) const;
  /// Boundary point parametrized by w in R^(n-1): transverse hyperboloid coordinates for
  /// the equidistant case, horizontal half-space coordinates for the horospherical ones.
  ModelPoint boundary_point(const Vec& w) const;
  std::string name() const;

 private:
  DomainSpec(DomainKind k, double s, double chi, double lambda)
      : kind_(k), s_(s), chi_(chi), lambda_(lambda) {}
  DomainKind kind_;
  double s_;
  double chi_;
  double lambda_;
};

enum class PotentialVariant { equidistant, horospherical };

/// rho_A(V) = V o A^-1; errors if A does not preserve the relevant boundary structure.
StaticPotential rho_action(const LorentzIsometry& a, const StaticPotential& v, PotentialVariant variant);
/// Matrix of rho_A acting on coefficient vectors.
Mat rho_matrix(const LorentzIsometry& a);

}  // namespace hypmass
