#pragma once

#include <functional>
#include <vector>

#include "hypmass/models.hpp"

namespace hypmass {

using SymField = std::function<Mat(const Vec&)>;

/// Central-difference steps, relative to the local chart length scale.
struct FiniteDifference {
  double first = 1e-3;
  double second = 2e-3;
};

/// Sign conventions shared by every hypersurface and flux integrand.
struct Conventions {
  /// +1: eta is the outward normal of {f <= c}.  -1 flips it (used by mutation tests).
  int normal_sign = 1;
};

/// g, dg[k] = d_k g, ddg[k][l] = d_k d_l g at a point.
struct MetricJet {
  Mat g;
  std::vector<Mat> dg;
  std::vector<std::vector<Mat>> ddg;
};

struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // optional
  std::function<Mat(const Vec&)> hessian;   // optional
  FiniteDifference fd{};

  Vec grad(const Vec& p, double scale = 1.0) const;
  Mat hess(const Vec& p, double scale = 1.0) const;
};

struct VectorField {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;  // optional, J(i,k) = d_k X^i
  FiniteDifference fd{};

  Mat jac(const Vec& p, double scale = 1.0) const;
};

ScalarField potential_field(const StaticPotential& v, Chart chart);

/// Smooth symmetric-matrix field with analytic (model) or finite-difference derivatives.
class MetricField {
 public:
  static MetricField flat(int n);
  /// b = Omega^-2 delta in the ball or half-space chart, analytic derivatives.
  static MetricField model(Chart chart, int n);
  /// Arbitrary field, finite differences only.
  static MetricField general(int n, SymField g, FiniteDifference fd = {});
  /// base + e, analytic derivatives of the base plus finite differences of e.
  MetricField perturbed(SymField e, FiniteDifference fd = {}) const;

  int dim() const { return n_; }
  Chart chart() const { return chart_; }
  bool is_model() const { return kind_ != Kind::general && !perturbation_; }
  bool analytic() const { return !perturbation_ && kind_ != Kind::general; }
  double length_scale(const Vec& p) const;
  Mat value(const Vec& p) const;
  /// order 0, 1 or 2; throws if the metric is not positive definite at p.
  MetricJet jet(const Vec& p, int order) const;
  const SymField& perturbation() const { return perturbation_; }

  double decay_rate = 0.0;

 private:
  enum class Kind { flat, conformal, general };
  MetricField(Kind k, Chart c, int n) : kind_(k), chart_(c), n_(n) {}
  MetricJet base_jet(const Vec& p, int order) const;

  Kind kind_;
  Chart chart_;
  int n_;
  SymField general_;
  SymField perturbation_;
  FiniteDifference fd_{};
};

MetricJet sym_field_jet(const SymField& f, const Vec& p, int order, double h1, double h2);

/// gamma[k](i,j) = Gamma^k_ij.
using Christoffel = std::vector<Mat>;

Christoffel christoffel(const MetricJet& j);
Christoffel christoffel(const MetricField& g, const Vec& p);
/// d_m Gamma^k_ij as out[m][k](i,j); needs a second-order jet.
std::vector<Christoffel> christoffel_derivative(const MetricJet& j);

struct CurvatureData {
  int n = 0;
  std::vector<double> riemann;  // R_abcd = <R(d_c, d_d) d_b, d_a>
  Mat ricci;
  double scalar = 0.0;

  double riem(int a, int b, int c, int d) const { return riemann[((a * n + b) * n + c) * n + d]; }
};

CurvatureData curvature(const MetricJet& j);
CurvatureData curvature(const MetricField& g, const Vec& p);

struct HypersurfaceGeometry {
  Vec point;
  Vec eta;      // unit normal (outward under the default convention)
  Vec nu;       // -eta
  Mat tangent;  // n x (n-1) coordinate basis of the tangent space
  Mat gamma;    // induced metric in that basis
  Mat second_form;
  double mean_curvature = 0.0;
  double grad_norm = 0.0;  // |grad f|_g
};

HypersurfaceGeometry hypersurface_geometry(const MetricField& g, const ScalarField& f, double level, const Vec& p,
                                           Conventions conv = {});
/// Second fundamental form evaluated on arbitrary coordinate vectors tangent to the level set.
double second_form_on(const MetricField& g, const ScalarField& f, const Vec& p, const Vec& x, const Vec& y);

/// Covariant Hessian of a scalar field.
Mat covariant_hessian(const MetricField& g, const ScalarField& v, const Vec& p);

struct StaticResidual {
  Mat tensor;
  double scalar = 0.0;
};

StaticResidual static_residual(const ScalarField& v, const MetricField& g, double cosmological, const Vec& p);
StaticResidual boundary_static_residual(const ScalarField& v, const MetricField& g, double lambda,
                                        const HypersurfaceGeometry& geo);

/// (L_X g)_ij.
Mat lie_derivative_metric(const VectorField& x, const MetricField& g, const Vec& p);

/// Sign-pattern symmetry defects of a Riemann tensor (max over components).
double riemann_symmetry_defect(const CurvatureData& c);

}  // namespace hypmass
