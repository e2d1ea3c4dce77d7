#pragma once

#include <string>
#include <vector>

#include "hypmass/models.hpp"
#include "hypmass/tensors.hpp"

namespace hypmass {

/// Worker threads used by quadrature loops. Results do not depend on this value.
void set_worker_threads(int k);
int worker_threads();

/// Perturbation e = g - b in the canonical chart of the domain.
struct AsymptoticData {
  DomainSpec domain = DomainSpec::equidistant(0.0);
  int n = 3;
  SymField e;          // empty means e = 0
  double decay = 0.0;  // sigma
  double r0 = 1.0;
  FiniteDifference fd{};

  bool is_zero() const { return !e; }
  Chart chart() const { return domain.chart(); }
  Mat value(const Vec& p) const { return e ? e(p) : Mat::Zero(n, n); }
  MetricField metric() const;
};

/// Origin of the ball (equidistant) or the point e_1/chi of the half-space.
Vec base_point(const DomainSpec& domain, int n);
/// Point of Sigma closest to the base point, in the canonical chart.
Vec boundary_base_point(const DomainSpec& domain, int n);

/// Radius function whose level sets are the integration surfaces of the domain:
/// sinh of the distance to the origin (equidistant) or to the point e_1/chi (complement),
/// and the Euclidean distance to e_1/chi in the half-space (horoball).
double surface_radius(const DomainSpec& domain, const Vec& p);
/// sinh of the hyperbolic distance to the base point of the domain; used for decay rates.
double geodesic_radius(const DomainSpec& domain, const Vec& p);

/// max |e|_b r^sigma over random samples with r in [r0, 8 r0], split into the inner and outer halves.
struct DecayCheck {
  double inner = 0.0;  // r in [r0, 2 r0]
  double outer = 0.0;  // r in [4 r0, 8 r0]
};
DecayCheck decay_check(const AsymptoticData& data, int samples = 200, unsigned seed = 0);

struct QuadratureOrders {
  int polar = 12;      // Gauss-Legendre nodes per polar panel
  int azimuthal = 16;  // nodes per angle of the boundary sphere
  int grading = -1;    // geometric panels at each polar end; -1 chooses from r
};

/// Nodes on the part of an integration surface inside the domain (the hemisphere) and on its
/// boundary sphere inside Sigma (the corner), with b-area weights and unit normals.
struct QuadratureRule {
  double r = 0.0;
  std::vector<Vec> points;
  std::vector<double> weights;
  std::vector<Vec> normals;  // mu, outward unit normal of the surface
  std::vector<Vec> corner_points;
  std::vector<double> corner_weights;
  std::vector<Vec> corner_conormals;  // vartheta, outward unit conormal inside Sigma
  std::vector<Vec> corner_normals;    // eta, outward unit normal of Sigma
};

QuadratureRule build_rule(const DomainSpec& domain, int n, double r, QuadratureOrders orders = {});
double exact_hemisphere_area(const DomainSpec& domain, int n, double r);
double exact_corner_area(const DomainSpec& domain, int n, double r);

/// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int m, double a, double b, std::vector<double>& x, std::vector<double>& w);
/// Nodes and weights on the unit sphere S^m in R^(m+1) (S^0 is the two points +-1).
void sphere_rule(int m, int order, std::vector<Vec>& x, std::vector<double>& w);

enum class CornerNormal { domain_outward, horospherical };

/// Sign and orientation choices shared by every flux integrand.
struct MassConventions {
  int normal_sign = 1;  // flips eta (mutation tests)
  bool include_corner = true;
  CornerNormal corner_normal = CornerNormal::domain_outward;
};

/// V(div e - d tr e) - e(grad V, .) + tr e dV, all with respect to the model metric.
Vec charge_form(const StaticPotential& v, const AsymptoticData& data, const Vec& p);
/// Same, for several potentials sharing one jet of e.
std::vector<Vec> charge_forms(const std::vector<StaticPotential>& vs, const AsymptoticData& data, const Vec& p);

/// V(X_i;k - X_k;i) + 2(X_k V_i - X_i V_k) in the chart of the domain.
Mat boundary_two_form(const StaticPotential& v, const VectorField& x, Chart chart, const Vec& p);
/// (div V)_i = b^{jk} nabla_k V_ij, by finite differences of the two-form.
Vec boundary_two_form_divergence(const StaticPotential& v, const VectorField& x, Chart chart, const Vec& p,
                                 double step = 1e-4);

struct RadiusRow {
  double r = 0.0;
  double hemisphere = 0.0;
  double corner = 0.0;
  double total = 0.0;
};

/// Admissible potentials: no V_(1) component (equidistant); V_h and V_(j>=2) only (horospherical).
void check_admissible(const DomainSpec& domain, const StaticPotential& v);

std::vector<RadiusRow> mass_at_radius(const AsymptoticData& data, const std::vector<StaticPotential>& vs, double r,
                                      QuadratureOrders orders = {}, MassConventions conv = {});
RadiusRow mass_at_radius(const AsymptoticData& data, const StaticPotential& v, double r, QuadratureOrders orders = {},
                         MassConventions conv = {});

struct MassLimit {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

std::vector<double> radius_schedule(double r0, int count = 6);
/// Polynomial extrapolation in 1/r to 1/r = 0.
MassLimit extrapolate(const std::vector<double>& radii, const std::vector<double>& values);

struct MassSeries {
  StaticPotential potential;
  std::vector<RadiusRow> rows;
  MassLimit limit;
};

std::vector<MassSeries> mass_series(const AsymptoticData& data, const std::vector<StaticPotential>& vs,
                                    const std::vector<double>& radii, QuadratureOrders orders = {},
                                    MassConventions conv = {});
MassLimit mass_limit(const AsymptoticData& data, const StaticPotential& v, const std::vector<double>& radii,
                     QuadratureOrders orders = {}, MassConventions conv = {});

/// Potentials indexing the mass vector: V_(0), V_(2..n) or V_h, V_(2..n).
std::vector<StaticPotential> mass_basis(const DomainSpec& domain, int n);

struct MassVector {
  Vec components;  // P_0, P_2..P_n  or  m_h, C^2..C^n
  Vec errors;
  bool converged = true;
  std::string classification;  // zero | timelike | null | spacelike (equidistant only)
};

MassVector mass_vector(const AsymptoticData& data, const std::vector<double>& radii, QuadratureOrders orders = {},
                       MassConventions conv = {}, double tol = 1e-6);
/// sqrt(P_0^2 - sum P_a^2); negative when spacelike.
double lorentz_norm(const MassVector& p);
std::string classify(const Vec& p, double tol);

struct HoroInvariants {
  double mass = 0.0;
  Vec center;
  double error = 0.0;
  bool converged = true;
};

HoroInvariants horo_invariants(const AsymptoticData& data, const std::vector<double>& radii,
                               QuadratureOrders orders = {}, MassConventions conv = {});

struct ModifiedTensors {
  Mat einstein;  // Ric - R/2 g - (n-1)(n-2)/2 g
  Mat newton;    // Pi - H gamma + (n-2) gamma on the tangent basis of the level set (empty off Sigma)
  HypersurfaceGeometry geometry;
};

ModifiedTensors modified_tensors(const MetricField& g, const Vec& p);
ModifiedTensors modified_tensors(const MetricField& g, const ScalarField& f, double level, const Vec& p,
                                 Conventions conv = {});
/// Modified Newton tensor evaluated on two coordinate vectors tangent to the level set.
double modified_newton_on(const MetricField& g, const ScalarField& f, double level, const Vec& p, const Vec& x,
                          const Vec& y, Conventions conv = {});

enum class ChaiField { mass, center };

/// Conformal fields X (mass) or X_a (center, a = 2..n) as half-space coordinate vectors.
Vec chai_field(ChaiField which, int a, const Vec& z);

/// Raw bracket of the Chai-type flux at one radius, and its extrapolated limit (no c_n applied).
RadiusRow chai_flux_at_radius(const AsymptoticData& data, ChaiField which, int a, double r,
                              QuadratureOrders orders = {}, MassConventions conv = {});
MassLimit chai_flux(const AsymptoticData& data, ChaiField which, int a, const std::vector<double>& radii,
                    QuadratureOrders orders = {}, MassConventions conv = {});

struct EnergyScan {
  double scalar_margin = 0.0;    // min R_g + n(n-1)
  double boundary_margin = 0.0;  // min H_g - (n-1) lambda
  double scalar_decay = 0.0;     // max r |R_g + n(n-1)| on the outermost shell
  double boundary_decay = 0.0;   // max r |H_g - (n-1) lambda| on the outermost shell
  Vec worst_boundary_point;
  int interior_samples = 0;
  int boundary_samples = 0;
};

/// Samples the region between radii r_min and r_max and the boundary inside r_max.
EnergyScan energy_scan(const AsymptoticData& data, double r_min, double r_max, int shells = 6, int per_shell = 60,
                       int boundary_samples = 400, unsigned seed = 0, Conventions conv = {});

/// Point of the integration surface of radius r at polar angle phi and boundary-sphere direction w.
Vec surface_point(const DomainSpec& domain, int n, double r, double phi, const Vec& w);
/// Polar angle where the surface meets Sigma.
double corner_angle(const DomainSpec& domain, double r);

}  // namespace hypmass
