#pragma once

#include <string>

#include "hypmass/mass.hpp"

namespace hypmass {

enum class FamilyId { conformal_decay, traceless_decay, compact_bump, boundary_graph, lie_gauge };

const char* family_name(FamilyId id);
/// Accepts the dashed ids used in configs ("conformal-decay", ...).
FamilyId parse_family(const std::string& name);

/// Radial shape of a generator: (1 + R^2)^(-sigma/2) with R the surface radius about the base
/// point, or a smooth bump exp(1 - 1/(1 - t^2)), t = (cosh d - 1)/width, about a boundary point.
/// R = sinh d except in the horoball, where it is the Euclidean radius of the hemispheres.
enum class Profile { decaying, compact };

struct FamilyParams {
  double amplitude = 0.0;
  double decay = 0.0;
  double width = 1.0;
  Profile profile = Profile::decaying;
  Vec center;  // boundary coordinates of the profile center; empty: base point (decaying), boundary base point (bump)
  unsigned seed = 0;
};

/// cosh of the hyperbolic distance to c and its coordinate gradient.
std::pair<double, Vec> cosh_distance(Chart chart, const Vec& p, const Vec& c);

/// Scalar profile with analytic gradient.
struct RadialProfile {
  Chart chart = Chart::ball;
  Profile kind = Profile::decaying;
  Vec center;
  double decay = 0.0;
  double width = 1.0;
  bool euclidean = false;

  double value(const Vec& p) const;
  Vec gradient(const Vec& p) const;
};

RadialProfile make_profile(const DomainSpec& domain, int n, const FamilyParams& params);

/// Gauge vector field: amplitude * profile * Omega * (tangential projection of w + M p).
VectorField gauge_field(const DomainSpec& domain, int n, const FamilyParams& params);

/// Boundary-pushing map p + amplitude * profile * Omega * (outward unit normal of the level sets).
struct GraphMap {
  DomainSpec domain = DomainSpec::equidistant(0.0);
  int n = 3;
  RadialProfile profile;
  double amplitude = 0.0;

  Vec value(const Vec& p) const;
  Mat jacobian(const Vec& p) const;
  /// Psi^* b - b, assembled without cancelling large terms.
  Mat perturbation(const Vec& p) const;
};

GraphMap graph_map(const DomainSpec& domain, int n, const FamilyParams& params);

AsymptoticData make_family(FamilyId id, const DomainSpec& domain, int n, const FamilyParams& params, double r0);

/// Chart map of an isometry A and its Jacobian (any chart).
Vec isometry_chart_map(const LorentzIsometry& a, Chart chart, const Vec& p);
Mat isometry_chart_jacobian(const LorentzIsometry& a, Chart chart, const Vec& p);
/// Data pulled back by the isometry: e'(p) = J^T e(A p) J.
AsymptoticData pull_back(const AsymptoticData& data, const LorentzIsometry& a);

}  // namespace hypmass
