#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <numbers>

#include "hypmass/families.hpp"
#include "support.hpp"

using namespace hypmass;
using testing::max_abs;

namespace {

const double pi = std::numbers::pi;

const DomainSpec kAllDomains[] = {DomainSpec::equidistant(0.5), DomainSpec::equidistant(-0.8),
                                  DomainSpec::horoball(1.0), DomainSpec::horoball_complement(1.0)};

double sphere_area(int m) { return 2.0 * std::pow(pi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1)); }

AsymptoticData conformal(const DomainSpec& d, int n, double amp, double sigma, double r0 = 2.0) {
  FamilyParams p;
  p.amplitude = amp;
  p.decay = sigma;
  return make_family(FamilyId::conformal_decay, d, n, p, r0);
}

// Compact fields are bumps about the boundary base point; the seed draws the direction field.
AsymptoticData gauge(const DomainSpec& d, int n, unsigned seed, Profile profile, double decay = 3.0,
                     double width = 2.0) {
  FamilyParams p;
  p.amplitude = 0.05;
  p.decay = decay;
  p.profile = profile;
  p.width = width;
  p.seed = seed;
  return make_family(FamilyId::lie_gauge, d, n, p, 2.0);
}

AsymptoticData sum(const AsymptoticData& a, const AsymptoticData& b) {
  AsymptoticData out = a;
  const SymField ea = a.e, eb = b.e;
  out.e = [=](const Vec& p) { return Mat(ea(p) + eb(p)); };
  return out;
}

// Boost in the (x_0, x_2) plane composed with a rotation of x_2..x_n; fixes x_1.
LorentzIsometry random_equidistant_isometry(int n, double max_rapidity = 0.6) {
  Mat rot = Mat::Identity(n + 1, n + 1);
  rot.block(2, 2, n - 1, n - 1) = testing::orthogonal(n - 1);
  const double a = testing::uniform(-max_rapidity, max_rapidity);
  Mat boost = Mat::Identity(n + 1, n + 1);
  boost(0, 0) = boost(2, 2) = std::cosh(a);
  boost(0, 2) = boost(2, 0) = std::sinh(a);
  return LorentzIsometry(rot * boost);
}

// Mass of V from the components of the mass vector (V has no V_(1) part).
double mass_of(const StaticPotential& v, const Vec& p) {
  double out = v.coeffs(0) * p(0);
  for (int a = 2; a < v.coeffs.size(); ++a) out += v.coeffs(a) * p(a - 1);
  return out;
}

Vec predicted_vector(const LorentzIsometry& a, const Vec& p, int n) {
  Vec out(n);
  const auto basis = mass_basis(DomainSpec::equidistant(0.0), n);
  for (int k = 0; k < n; ++k) out(k) = mass_of(rho_action(a, basis[size_t(k)], PotentialVariant::equidistant), p);
  return out;
}

}  // namespace

TEST_CASE("Gauss-Legendre and sphere rules") {
  std::vector<double> x, w;
  gauss_legendre(8, -1.0, 2.0, x, w);
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 15);
  CHECK(s == doctest::Approx((std::pow(2.0, 16) - 1.0) / 16.0).epsilon(1e-13));
  for (int m = 0; m <= 4; ++m) {
    std::vector<Vec> pts;
    sphere_rule(m, 24, pts, w);
    double area = 0.0, second = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      area += w[i];
      second += w[i] * pts[i](0) * pts[i](0);
      CHECK(std::abs(pts[i].norm() - 1.0) < 1e-14);
    }
    CHECK(area == doctest::Approx(sphere_area(m)).epsilon(1e-10));
    CHECK(second == doctest::Approx(sphere_area(m) / (m + 1)).epsilon(1e-10));
  }
}

TEST_CASE("hemisphere and corner areas") {
  // closed form for n = 3: 2 pi r (r + s) and 2 pi (r^2 - s^2)
  for (double s : {-1.0, 0.0, 0.5}) {
    for (double r : {2.0, 10.0, 64.0}) {
      const DomainSpec d = DomainSpec::equidistant(s);
      CHECK(exact_hemisphere_area(d, 3, r) == doctest::Approx(2 * pi * r * (r + s)).epsilon(1e-12));
      CHECK(exact_corner_area(d, 3, r) == doctest::Approx(2 * pi * std::sqrt(r * r - s * s)).epsilon(1e-12));
    }
  }
  for (int n : {2, 3, 4}) {
    for (const DomainSpec& d : {DomainSpec::equidistant(0.7), DomainSpec::equidistant(-1.2), DomainSpec::horoball(1.0),
                                DomainSpec::horoball(0.5), DomainSpec::horoball_complement(1.5)}) {
      for (double r : {2.0, 8.0, 40.0}) {
        const QuadratureRule q = build_rule(d, n, r);
        double a = 0.0, c = 0.0;
        for (double w : q.weights) a += w;
        for (double w : q.corner_weights) c += w;
        const double exact = exact_hemisphere_area(d, n, r);
        CHECK(std::abs(a - exact) < 1e-8 * exact);
        CHECK(std::abs(c - exact_corner_area(d, n, r)) < 1e-8 * c);
      }
    }
  }
}

TEST_CASE("normals of the quadrature rule") {
  const int n = 3;
  const MetricField b = MetricField::model(Chart::ball, n);
  for (const DomainSpec& d : {DomainSpec::equidistant(0.4), DomainSpec::horoball_complement(1.0)}) {
    const QuadratureRule q = build_rule(d, n, 5.0, {6, 6});
    const Chart chart = d.chart();
    const MetricField g = MetricField::model(chart, n);
    const ScalarField f = potential_field(d.defining_potential(n), chart);
    for (size_t i = 0; i < q.corner_points.size(); ++i) {
      const Vec& p = q.corner_points[i];
      const Mat gm = g.value(p);
      CHECK(q.corner_normals[i].dot(gm * q.corner_normals[i]) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(q.corner_conormals[i].dot(gm * q.corner_conormals[i]) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(std::abs(q.corner_normals[i].dot(gm * q.corner_conormals[i])) < 1e-10);
      // outward: f grows along eta
      CHECK(f.grad(p).dot(q.corner_normals[i]) > 0.0);
      CHECK(surface_radius(d, Vec(p + 1e-6 * q.corner_conormals[i])) > surface_radius(d, p));
    }
    for (size_t i = 0; i < q.points.size(); i += 7) {
      const Vec& p = q.points[i];
      CHECK(q.normals[i].dot(g.value(p) * q.normals[i]) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(surface_radius(d, Vec(p + 1e-6 * q.normals[i])) > surface_radius(d, p));
    }
  }
  (void)b;
}

TEST_CASE("charge form") {
  const int n = 3;
  const DomainSpec d = DomainSpec::equidistant(0.3);
  const StaticPotential v = StaticPotential::basis(n, 0);
  SUBCASE("zero and linear") {
    const AsymptoticData zero = conformal(d, n, 0.0, 3.0);
    const AsymptoticData a = conformal(d, n, 0.02, 3.0);
    const AsymptoticData b = gauge(d, n, 4, Profile::decaying);
    const AsymptoticData ab = sum(a, b);
    for (int k = 0; k < 20; ++k) {
      const Vec p = testing::ball_point(n, 0.8);
      CHECK(charge_form(v, zero, p).norm() == 0.0);
      const Vec lhs = charge_form(v, ab, p);
      const Vec rhs = charge_form(v, a, p) + charge_form(v, b, p);
      CHECK(max_abs(lhs - rhs) < 1e-12 * std::max(1.0, lhs.norm()));
    }
  }
  SUBCASE("against covariant finite differences") {
    // V (div e - d tr e) - e(grad V, .) + tr e dV from the Christoffel symbols of b
    const AsymptoticData data = gauge(d, n, 9, Profile::decaying);
    const MetricField b = MetricField::model(Chart::ball, n);
    for (int k = 0; k < 20; ++k) {
      const Vec p = testing::ball_point(n, 0.8);
      const double h = 1e-4;
      std::vector<Mat> de(static_cast<size_t>(n));
      for (int l = 0; l < n; ++l) {
        const Vec dp = h * Vec::Unit(n, l);
        de[size_t(l)] = (data.e(p + dp) - data.e(p - dp)) / (2 * h);
      }
      const Christoffel gam = christoffel(b, p);
      const Mat e = data.e(p);
      const Mat binv = b.value(p).inverse();
      auto cov = [&](int l, int i, int j) {  // nabla_l e_ij
        double t = de[size_t(l)](i, j);
        for (int m = 0; m < n; ++m) t -= gam[size_t(m)](l, i) * e(m, j) + gam[size_t(m)](l, j) * e(i, m);
        return t;
      };
      const double tr = (binv * e).trace();
      Vec dtr(n), div = Vec::Zero(n);
      for (int i = 0; i < n; ++i) {
        double t = 0.0;
        for (int a = 0; a < n; ++a)
          for (int c = 0; c < n; ++c) t += binv(a, c) * cov(i, a, c);
        dtr(i) = t;
        for (int a = 0; a < n; ++a)
          for (int c = 0; c < n; ++c) div(i) += binv(a, c) * cov(a, c, i);
      }
      const double val = eval_potential(v, {Chart::ball, p});
      const Vec dv = potential_gradient(v, Chart::ball, p);
      const Vec expected = val * (div - dtr) - e * (binv * dv) + tr * dv;
      CHECK(max_abs(charge_form(v, data, p) - expected) < 1e-6 * std::max(1.0, expected.norm()));
    }
  }
}

TEST_CASE("boundary two-form") {
  const int n = 3;
  for (const DomainSpec& d : {DomainSpec::equidistant(0.5), DomainSpec::horoball(1.0)}) {
    const Chart chart = d.chart();
    FamilyParams p;
    p.amplitude = 0.3;
    p.profile = Profile::compact;
    p.width = 3.0;
    p.seed = 2;
    const VectorField x = gauge_field(d, n, p);
    const MetricField b = MetricField::model(chart, n);
    AsymptoticData lie;
    lie.domain = d;
    lie.n = n;
    lie.e = [&](const Vec& q) { return lie_derivative_metric(x, b, q); };
    VectorField zero;
    zero.value = [&](const Vec&) { return Vec::Zero(n); };
    zero.jacobian = [&](const Vec&) { return Mat::Zero(n, n); };
    const StaticPotential v0 = StaticPotential::basis(n, 0);
    const StaticPotential v2 = StaticPotential::basis(n, 2);
    const StaticPotential vz{Vec::Zero(n + 1)};
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vec q = to_ball(d.boundary_point(0.6 * testing::gaussian(n - 1)));
      const Vec pt = chart == Chart::ball ? Vec(q * 0.9) : Vec(ball_to_half_space<double>(Vec(q * 0.9)));
      const Mat w = boundary_two_form(v0, x, chart, pt);
      CHECK(max_abs(w + w.transpose()) < 1e-14 * std::max(1.0, max_abs(w)));
      CHECK(max_abs(boundary_two_form(v0, zero, chart, pt)) == 0.0);
      CHECK(max_abs(boundary_two_form(vz, x, chart, pt)) == 0.0);
      for (const auto& v : {v0, v2}) {
        const Vec lhs = boundary_two_form_divergence(v, x, chart, pt);
        const Vec rhs = charge_form(v, lie, pt);
        worst = std::max(worst, (lhs - rhs).norm() / std::max(1.0, rhs.norm()));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("mass at a radius: trivial cases and admissibility") {
  const int n = 3;
  const DomainSpec d = DomainSpec::equidistant(0.2);
  const AsymptoticData zero = conformal(d, n, 0.0, 3.0);
  for (double r : {2.0, 5.0, 33.0}) {
    const RadiusRow row = mass_at_radius(zero, StaticPotential::basis(n, 0), r);
    CHECK(row.hemisphere == 0.0);
    CHECK(row.corner == 0.0);
    CHECK(row.total == 0.0);
  }
  const MassVector mv = mass_vector(zero, radius_schedule(2.0, 4));
  CHECK(mv.components.cwiseAbs().maxCoeff() == 0.0);
  CHECK(mv.classification == "zero");
  const AsymptoticData data = conformal(d, n, 0.01, 3.0);
  CHECK_THROWS(mass_at_radius(data, StaticPotential::basis(n, 1), 4.0));
  CHECK_THROWS(mass_at_radius(data, StaticPotential::basis(n, 0), 1.0));
  const AsymptoticData horo = conformal(DomainSpec::horoball(1.0), n, 0.01, 3.0);
  CHECK_THROWS(mass_at_radius(horo, StaticPotential::basis(n, 0), 4.0));
  CHECK_THROWS(mass_at_radius(horo, StaticPotential::basis(n, 1), 4.0));
  CHECK_NOTHROW(mass_at_radius(horo, StaticPotential::horospherical(n), 4.0));
  CHECK_NOTHROW(mass_at_radius(horo, StaticPotential::basis(n, 2), 4.0));
}

TEST_CASE("Richardson extrapolation") {
  std::vector<double> r = radius_schedule(2.0, 6), v;
  for (double x : r) v.push_back(1.5 + 2.0 / x - 3.0 / (x * x) + 0.5 / (x * x * x));
  const MassLimit m = extrapolate(r, v);
  CHECK(m.value == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(m.converged);
  v.clear();
  for (double x : r) v.push_back(std::sqrt(x));
  CHECK_FALSE(extrapolate(r, v).converged);
  CHECK_THROWS(extrapolate({1.0, 2.0}, {0.0, 0.0}));
  CHECK_THROWS(extrapolate({1.0, 3.0, 2.0}, {0.0, 0.0, 1.0}));
}

TEST_CASE("conformal data: closed-form mass") {
  // (n^2 - 1) A |S^(n-1)| / 2 for A Omega^-2 (1 + R^2)^(-n/2) delta on any equidistant domain
  for (int n : {3, 4}) {
    const double amp = 0.01;
    const double expected = (n * n - 1.0) * amp * sphere_area(n - 1) / 2.0;
    for (double s : {-0.5, 0.0, 1.0}) {
      const AsymptoticData data = conformal(DomainSpec::equidistant(s), n, amp, n);
      const MassVector p = mass_vector(data, radius_schedule(2.0, 6));
      CHECK(p.converged);
      CHECK(std::abs(p.components(0) - expected) < 1e-5);
      CHECK(p.components.tail(n - 1).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(p.classification == "timelike");
      CHECK(lorentz_norm(p) == doctest::Approx(expected).epsilon(1e-5));
    }
  }
}

TEST_CASE("faster decay against an adaptive quadrature oracle") {
  // sigma = n + 1, n = 3: the bracket at r = 10 r0 by nested Gauss-Kronrod on the polar and azimuthal angles.
  const int n = 3;
  const double s = 0.3, r0 = 2.0, r = 10.0 * r0;
  const DomainSpec d = DomainSpec::equidistant(s);
  const AsymptoticData data = conformal(d, n, 0.01, n + 1.0, r0);
  const StaticPotential v = StaticPotential::basis(n, 0);
  const StaticPotential f = d.defining_potential(n);
  const double rad = (std::sqrt(1.0 + r * r) - 1.0) / r;
  const double phic = std::acos(s / r);
  using boost::math::quadrature::gauss_kronrod;
  auto point = [&](double phi, double th) {
    return Vec(Eigen::Vector3d(rad * std::cos(phi), rad * std::sin(phi) * std::cos(th), rad * std::sin(phi) * std::sin(th)));
  };
  auto inner = [&](double phi) {
    return gauss_kronrod<double, 61>::integrate(
        [&](double th) {
          const Vec p = point(phi, th);
          const double om = conformal_factor(Chart::ball, p);
          const Vec mu = om * p / rad;
          return charge_form(v, data, p).dot(mu) * rad * rad * std::sin(phi) / (om * om);
        },
        0.0, 2 * pi, 8, 1e-13);
  };
  const double hemi = gauss_kronrod<double, 61>::integrate(inner, phic, pi, 10, 1e-12);
  const double corner = gauss_kronrod<double, 61>::integrate(
      [&](double th) {
        const Vec p = point(phic, th);
        const double om = conformal_factor(Chart::ball, p);
        const Vec grad = potential_gradient(f, Chart::ball, p);
        const Vec eta = om * grad / grad.norm();
        Vec t = p - p.dot(grad) / grad.squaredNorm() * grad;
        const Vec theta = om * t / t.norm();
        return eval_potential(v, {Chart::ball, p}) * eta.dot(data.e(p) * theta) * rad * std::sin(phic) / om;
      },
      0.0, 2 * pi, 8, 1e-13);
  const double oracle = hemi - corner;
  const RadiusRow row = mass_at_radius(data, v, r);
  CHECK(std::abs(row.total - oracle) < 1e-5);
  CHECK(std::abs(row.hemisphere - hemi) < 1e-5);
  // the limit vanishes for sigma > n
  const MassLimit lim = mass_limit(data, v, radius_schedule(r0, 6));
  CHECK(lim.converged);
  CHECK(std::abs(lim.value) < 1e-5);
}

TEST_CASE("compactly supported data") {
  const int n = 3;
  const DomainSpec d = DomainSpec::equidistant(0.0);
  FamilyParams p;
  p.amplitude = 0.05;
  p.profile = Profile::compact;
  p.width = 1.0;
  const AsymptoticData data = make_family(FamilyId::compact_bump, d, n, p, 2.0);
  const auto radii = radius_schedule(4.0, 4);
  const auto series = mass_series(data, mass_basis(d, n), radii, {8, 8});
  for (const auto& s : series) {
    for (const auto& row : s.rows) CHECK(row.total == 0.0);
    CHECK(s.limit.value == 0.0);
  }
}

TEST_CASE("symmetric data has a pure time component") {
  const int n = 3;
  FamilyParams p;
  p.amplitude = 0.02;
  p.decay = 3.5;
  p.seed = 1;
  // traceless S is not reflection symmetric, so symmetrize over x_a -> -x_a by hand
  const AsymptoticData base = make_family(FamilyId::conformal_decay, DomainSpec::equidistant(0.0), n, p, 2.0);
  AsymptoticData data = base;
  data.e = [&](const Vec& q) {
    const double w = 1.0 + q(1) * q(1) + 0.5 * q(2) * q(2);
    return Mat(base.e(q) * w);
  };
  const MassVector mv = mass_vector(data, radius_schedule(2.0, 5), {8, 12});
  CHECK(std::abs(mv.components(0)) > 1e-3);
  CHECK(mv.components.tail(n - 1).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gauge invariance") {
  const int n = 3;
  const auto radii = radius_schedule(2.0, 5);
  int count = 0;
  for (const DomainSpec& d : kAllDomains) {
    for (unsigned seed = 0; seed < 5; ++seed, ++count) {
      const AsymptoticData data = gauge(d, n, 100 + seed, Profile::compact, 0.0, testing::uniform(1.0, 2.5));
      const MassVector mv = mass_vector(data, radii, {8, 12});
      CHECK(mv.components.cwiseAbs().maxCoeff() < 1e-4);
    }
  }
  CHECK(count == 20);
  // smooth decaying fields: the bracket already vanishes at every radius
  for (const DomainSpec& d : kAllDomains) {
    for (unsigned seed : {7u, 8u}) {
      const AsymptoticData data = gauge(d, n, seed, Profile::decaying, 2.0);
      const MassVector mv = mass_vector(data, radii, {8, 12});
      CHECK(mv.components.cwiseAbs().maxCoeff() < 1e-4);
      for (double r : {2.0, 5.0}) CHECK(std::abs(mass_at_radius(data, mass_basis(d, n)[0], r, {8, 12}).total) < 1e-8);
    }
  }
}

TEST_CASE("corner orientation in the horoball complement") {
  // only the domain-outward normal keeps gauge invariance
  const int n = 3;
  const DomainSpec d = DomainSpec::horoball_complement(1.0);
  const AsymptoticData data = gauge(d, n, 3, Profile::decaying, 1.6);
  MassConventions horo;
  horo.corner_normal = CornerNormal::horospherical;
  const auto radii = radius_schedule(2.0, 5);
  const StaticPotential vh = StaticPotential::horospherical(n);
  CHECK(std::abs(mass_limit(data, vh, radii, {8, 12}).value) < 1e-4);
  CHECK(std::abs(mass_limit(data, vh, radii, {8, 12}, horo).value) > 1e-3);
}

TEST_CASE("isometry covariance and the corner term") {
  const int n = 3;
  const DomainSpec d = DomainSpec::equidistant(0.5);
  const AsymptoticData data = sum(conformal(d, n, 0.01, n), gauge(d, n, 5, Profile::decaying, 2.0));
  const auto radii = radius_schedule(2.0, 5);
  const QuadratureOrders q{8, 12};
  const MassVector p = mass_vector(data, radii, q);
  for (int k = 0; k < 10; ++k) {
    const LorentzIsometry a = random_equidistant_isometry(n);
    const MassVector moved = mass_vector(pull_back(data, a), radii, q);
    CHECK(max_abs(moved.components - predicted_vector(a, p.components, n)) < 1e-4);
    CHECK(lorentz_norm(moved) == doctest::Approx(lorentz_norm(p)).epsilon(1e-4));
  }
}

TEST_CASE("the corner integral is needed for covariance") {
  // the gauge part only cancels against its corner flux
  const int n = 3;
  const DomainSpec d = DomainSpec::equidistant(0.5);
  const AsymptoticData data = sum(conformal(d, n, 0.01, n), gauge(d, n, 5, Profile::decaying, 1.6));
  const auto radii = radius_schedule(2.0, 5);
  const QuadratureOrders q{8, 12};
  MassConventions no_corner;
  no_corner.include_corner = false;
  const MassVector p = mass_vector(data, radii, q);
  const MassVector pc = mass_vector(data, radii, q, no_corner);
  double with = 0.0, without = 0.0;
  for (int k = 0; k < 3; ++k) {
    const LorentzIsometry a = random_equidistant_isometry(n);
    const AsymptoticData moved = pull_back(data, a);
    with = std::max(with, max_abs(mass_vector(moved, radii, q).components - predicted_vector(a, p.components, n)));
    without = std::max(without, max_abs(mass_vector(moved, radii, q, no_corner).components -
                                        predicted_vector(a, pc.components, n)));
  }
  CHECK(with < 1e-4);
  CHECK(without > 1e-3);
}

TEST_CASE("sign audit") {
  const int n = 3;
  const AsymptoticData data = gauge(DomainSpec::equidistant(0.5), n, 5, Profile::decaying, 2.0);
  MassConventions flipped;
  flipped.normal_sign = -1;
  const auto radii = radius_schedule(2.0, 5);
  const double good = mass_limit(data, StaticPotential::basis(n, 0), radii, {8, 12}).value;
  const double bad = mass_limit(data, StaticPotential::basis(n, 0), radii, {8, 12}, flipped).value;
  CHECK(std::abs(good) < 1e-6);
  CHECK(std::abs(bad) > 1e-3);
}

TEST_CASE("horospherical invariants") {
  SUBCASE("rotations fix the mass and rotate the center") {
    // rotations about the vertical axis map each hemisphere to itself, so every bracket transforms
    const int n = 3;
    const DomainSpec d = DomainSpec::horoball(1.0);
    FamilyParams p;
    p.amplitude = 0.1;
    p.decay = 1.0;
    p.seed = 3;
    p.center = Eigen::Vector2d(0.5, -0.3);
    const AsymptoticData data = make_family(FamilyId::traceless_decay, d, n, p, 2.0);
    const auto radii = radius_schedule(2.0, 5);
    const QuadratureOrders q{8, 12};
    const HoroInvariants h = horo_invariants(data, radii, q);
    CHECK(h.center.norm() > 1e-3);
    const StaticPotential vh = StaticPotential::horospherical(n);
    for (int k = 0; k < 2; ++k) {
      const Mat rot = testing::orthogonal(n - 1);
      const ParabolicElement pe{rot, 0.0, Vec::Zero(n - 1)};
      const LorentzIsometry a = pe.assemble();
      const HoroInvariants moved = horo_invariants(pull_back(data, a), radii, q);
      CHECK(std::abs(moved.mass - h.mass) < 1e-4);
      Vec predicted(n - 1);
      for (int j = 2; j <= n; ++j) {
        const StaticPotential w = rho_action(a, StaticPotential::basis(n, j), PotentialVariant::horospherical);
        double m = w.coeffs(0) / vh.coeffs(0) * h.mass;
        for (int b = 2; b <= n; ++b) m += w.coeffs(b) * h.center(b - 2);
        predicted(j - 2) = m;
      }
      CHECK(max_abs(moved.center - predicted) < 1e-4);
      CHECK(moved.center.norm() == doctest::Approx(h.center.norm()).epsilon(1e-4));
    }
  }
  SUBCASE("translations fix the mass") {
    const int n = 4;
    const DomainSpec d = DomainSpec::horoball(1.0);
    FamilyParams p;
    p.amplitude = 0.01;
    p.decay = 1.0;
    const AsymptoticData data = make_family(FamilyId::boundary_graph, d, n, p, 2.0);
    const auto radii = radius_schedule(2.0, 6);
    const StaticPotential vh = StaticPotential::horospherical(n);
    const MassLimit m = mass_limit(data, vh, radii, {8, 8});
    CHECK(std::abs(m.value) > 0.1);
    const ParabolicElement pe{Mat::Identity(n - 1, n - 1), 0.0, 0.4 * testing::gaussian(n - 1)};
    const MassLimit moved = mass_limit(pull_back(data, pe.assemble()), vh, radii, {8, 8});
    CHECK(std::abs(moved.value - m.value) < 1e-4);
  }
  CHECK_THROWS(horo_invariants(conformal(DomainSpec::equidistant(0.0), 3, 0.01, 3.0), radius_schedule(2.0, 3)));
}

TEST_CASE("modified tensors on the model") {
  for (int n : {3, 4}) {
    const MetricField b = MetricField::model(Chart::ball, n);
    for (int k = 0; k < 50; ++k) CHECK(max_abs(modified_tensors(b, testing::ball_point(n)).einstein) < 1e-9);
    const MetricField bh = MetricField::model(Chart::half_space, n);
    const DomainSpec horo = DomainSpec::horoball(1.0);
    const ScalarField fh = potential_field(horo.defining_potential(n), Chart::half_space);
    for (int k = 0; k < 20; ++k) {
      const ModifiedTensors t = modified_tensors(bh, fh, horo.level(), testing::horosphere_point(n, 1.0));
      CHECK(max_abs(t.newton) < 1e-7 * max_abs(t.geometry.gamma));
    }
    for (double s : {-1.0, 0.5, 2.0}) {
      const DomainSpec d = DomainSpec::equidistant(s);
      const ScalarField f = potential_field(d.defining_potential(n), Chart::ball);
      for (int k = 0; k < 20; ++k) {
        const Vec p = to_ball(d.boundary_point(testing::gaussian(n - 1)));
        const ModifiedTensors t = modified_tensors(b, f, d.level(), p);
        const Mat expected = (n - 2.0) * (1.0 - d.lambda()) * t.geometry.gamma;
        CHECK(max_abs(t.newton - expected) < 1e-7 * max_abs(t.geometry.gamma));
      }
    }
  }
}

TEST_CASE("Chai-type fluxes") {
  const int n = 4;
  const DomainSpec d = DomainSpec::horoball(1.0);
  const StaticPotential vh = StaticPotential::horospherical(n);
  SUBCASE("fields are tangent to the unit horosphere") {
    for (int k = 0; k < 50; ++k) {
      const Vec z = testing::horosphere_point(n, 1.0, 3.0);
      const Vec dv = potential_gradient(vh, Chart::half_space, z);
      CHECK(std::abs(chai_field(ChaiField::mass, 0, z).dot(dv)) < 1e-10);
      for (int a = 2; a <= n; ++a) CHECK(std::abs(chai_field(ChaiField::center, a, z).dot(dv)) < 1e-10);
    }
    CHECK_THROWS(chai_field(ChaiField::center, 1, testing::horosphere_point(n, 1.0)));
  }
  SUBCASE("domain restrictions") {
    CHECK(chai_flux_at_radius(conformal(d, n, 0.0, 3.0), ChaiField::mass, 0, 4.0).total == 0.0);
    CHECK_THROWS(chai_flux_at_radius(conformal(DomainSpec::equidistant(0.0), n, 0.01, 3.0), ChaiField::mass, 0, 4.0));
    CHECK_THROWS(chai_flux_at_radius(conformal(DomainSpec::horoball(2.0), n, 0.01, 3.0), ChaiField::mass, 0, 4.0));
  }
  SUBCASE("graph data: flux and mass brackets are proportional at every radius") {
    FamilyParams p;
    p.amplitude = 0.01;
    p.decay = 1.0;
    const AsymptoticData data = make_family(FamilyId::boundary_graph, d, n, p, 2.0);
    std::vector<double> ratios;
    for (double r : {4.0, 8.0}) {
      const double m = mass_at_radius(data, vh, r, {8, 8}).total;
      const RadiusRow c = chai_flux_at_radius(data, ChaiField::mass, 0, r, {8, 8});
      CHECK(std::abs(c.hemisphere) < 1e-3 * std::abs(c.corner));
      ratios.push_back(m / c.total);
    }
    CHECK(ratios[0] == doctest::Approx(ratios[1]).epsilon(1e-2));
  }
}

TEST_CASE("energy scan") {
  SUBCASE("model") {
    for (const DomainSpec& d : {DomainSpec::equidistant(0.5), DomainSpec::horoball(1.0),
                                DomainSpec::horoball_complement(1.0)}) {
      const EnergyScan e = energy_scan(conformal(d, 3, 0.0, 3.0), 1.0, 8.0, 3, 10, 50);
      CHECK(std::abs(e.scalar_margin) < 1e-5);
      CHECK(std::abs(e.boundary_margin) < 1e-5);
    }
  }
  SUBCASE("outward bump lowers the boundary mean curvature somewhere") {
    const int n = 3;
    FamilyParams p;
    p.amplitude = 0.1;
    p.profile = Profile::compact;
    p.width = 1.0;
    p.center = Eigen::Vector2d(0.3, -0.2);
    const AsymptoticData data = make_family(FamilyId::boundary_graph, DomainSpec::equidistant(0.3), n, p, 2.0);
    const EnergyScan e = energy_scan(data, 1.0, 4.0, 3, 10, 400);
    CHECK(e.boundary_margin < -1e-3);
  }
  SUBCASE("conformal data: scalar curvature against its linearization") {
    // g = (1 + u) b: R + n(n-1) = n(n-1) u - (n-1) Laplacian_b u + O(u^2)
    const int n = 3;
    const DomainSpec d = DomainSpec::equidistant(0.0);
    for (double amp : {-0.01, 0.01}) {
      const AsymptoticData data = conformal(d, n, amp, 2.0);
      auto u = [&](const Vec& q) {
        const double om = conformal_factor(Chart::ball, q);
        return om * om * data.e(q)(0, 0);
      };
      const MetricField g = data.metric();
      double min_oracle = 1e300;
      for (int k = 0; k < 20; ++k) {
        const Vec q = testing::ball_point(n, 0.7);
        const double om = conformal_factor(Chart::ball, q);
        const double h = 1e-3;
        double lap = 0.0;
        Vec du(n);
        for (int i = 0; i < n; ++i) {
          const Vec dq = h * Vec::Unit(n, i);
          lap += (u(q + dq) - 2 * u(q) + u(q - dq)) / (h * h);
          du(i) = (u(q + dq) - u(q - dq)) / (2 * h);
        }
        const double lap_b = om * om * lap - (n - 2.0) * om * (-q).dot(du);
        const double oracle = n * (n - 1.0) * u(q) - (n - 1.0) * lap_b;
        const double got = curvature(g, q).scalar + n * (n - 1.0);
        CHECK(std::abs(got - oracle) < 20.0 * amp * amp + 1e-6);
        min_oracle = std::min(min_oracle, oracle);
      }
      const EnergyScan e = energy_scan(data, 0.5, 4.0, 4, 20, 20);
      CHECK((e.scalar_margin < 0.0) == (min_oracle < 0.0));
    }
  }
  SUBCASE("complement uses H + (n-1)") {
    const EnergyScan e = energy_scan(conformal(DomainSpec::horoball_complement(1.0), 3, 0.0, 3.0), 1.0, 4.0, 2, 5, 30);
    CHECK(std::abs(e.boundary_margin) < 1e-6);
  }
}

TEST_CASE("decay check") {
  const int n = 3;
  const AsymptoticData data = conformal(DomainSpec::equidistant(0.5), n, 0.01, 3.0);
  const DecayCheck c = decay_check(data);
  CHECK(c.outer > 0.0);
  CHECK(c.outer < 2.0 * c.inner);
}

TEST_CASE("results do not depend on the thread count") {
  const int n = 3;
  const AsymptoticData data = sum(conformal(DomainSpec::equidistant(0.5), n, 0.01, n),
                                  gauge(DomainSpec::equidistant(0.5), n, 1, Profile::decaying));
  const auto basis = mass_basis(data.domain, n);
  set_worker_threads(1);
  const auto a = mass_at_radius(data, basis, 6.0, {6, 8});
  set_worker_threads(3);
  const auto b = mass_at_radius(data, basis, 6.0, {6, 8});
  set_worker_threads(1);
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].hemisphere == b[k].hemisphere);
    CHECK(a[k].corner == b[k].corner);
  }
}
