#include <doctest.h>

#include <numbers>

#include "hypmass/families.hpp"
#include "support.hpp"

using namespace hypmass;
using testing::max_abs;

namespace {

Vec interior_point(const DomainSpec& d, int n) {
  const Vec w = testing::gaussian(n - 1);
  const double r = testing::uniform(1.0, 6.0);
  const double phi = corner_angle(d, r) + (std::numbers::pi - corner_angle(d, r)) * testing::uniform(0.05, 0.95);
  return surface_point(d, n, r, phi, Vec(w / w.norm()));
}

const DomainSpec kDomains[] = {DomainSpec::equidistant(0.4), DomainSpec::equidistant(-1.0), DomainSpec::horoball(1.0),
                               DomainSpec::horoball_complement(2.0)};

}  // namespace

TEST_CASE("family names") {
  for (FamilyId id : {FamilyId::conformal_decay, FamilyId::traceless_decay, FamilyId::compact_bump,
                      FamilyId::boundary_graph, FamilyId::lie_gauge})
    CHECK(parse_family(family_name(id)) == id);
  CHECK(std::string(family_name(FamilyId::traceless_decay)) == "transverse-traceless-decay");
  CHECK_THROWS(parse_family("wiggle"));
}

TEST_CASE("profiles") {
  for (const DomainSpec& d : kDomains) {
    const int n = 3;
    for (Profile kind : {Profile::decaying, Profile::compact}) {
      FamilyParams p;
      p.decay = 2.5;
      p.width = 4.0;
      p.profile = kind;
      const RadialProfile pr = make_profile(d, n, p);
      for (int k = 0; k < 20; ++k) {
        const Vec q = interior_point(d, n);
        const double h = 1e-6 * conformal_factor(d.chart(), q);
        Vec fd(n);
        for (int i = 0; i < n; ++i)
          fd(i) = (pr.value(q + h * Vec::Unit(n, i)) - pr.value(q - h * Vec::Unit(n, i))) / (2 * h);
        CHECK(max_abs(pr.gradient(q) - fd) < 1e-6 * std::max(1.0, fd.norm()));
        CHECK(pr.value(q) >= 0.0);
        CHECK(pr.value(q) <= 1.0);
      }
    }
  }
  FamilyParams bad;
  bad.profile = Profile::compact;
  bad.width = 0.0;
  CHECK_THROWS(make_profile(DomainSpec::equidistant(0.0), 3, bad));
}

TEST_CASE("cosh distance") {
  for (Chart chart : {Chart::ball, Chart::half_space}) {
    for (int k = 0; k < 20; ++k) {
      const Vec a = convert({Chart::ball, testing::ball_point(3)}, chart).coords;
      const Vec b = convert({Chart::ball, testing::ball_point(3)}, chart).coords;
      const double direct = -minkowski_inner(to_hyperboloid({chart, a}), to_hyperboloid({chart, b}));
      CHECK(cosh_distance(chart, a, b).first == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("lie-gauge family is the Lie derivative of the model metric") {
  for (const DomainSpec& d : kDomains) {
    for (int n : {3, 4}) {
      FamilyParams p;
      p.amplitude = 0.1;
      p.decay = 2.0;
      p.seed = 11;
      const AsymptoticData data = make_family(FamilyId::lie_gauge, d, n, p, 2.0);
      VectorField x = gauge_field(d, n, p);
      VectorField x_fd{x.value, nullptr, {}};
      const MetricField b = MetricField::model(d.chart(), n);
      for (int k = 0; k < 10; ++k) {
        const Vec q = interior_point(d, n);
        const Mat expected = lie_derivative_metric(x_fd, b, q);
        CHECK(max_abs(data.e(q) - expected) < 1e-6 * std::max(1.0, max_abs(expected)));
        CHECK(max_abs(x.jacobian(q) - x_fd.jac(q, conformal_factor(d.chart(), q))) <
              1e-7 * std::max(1.0, max_abs(x.jacobian(q))));
      }
      // tangent to the boundary
      const StaticPotential f = d.defining_potential(n);
      for (int k = 0; k < 10; ++k) {
        const Vec q = convert(d.boundary_point(testing::gaussian(n - 1)), d.chart()).coords;
        CHECK(std::abs(x.value(q).dot(potential_gradient(f, d.chart(), q))) < 1e-12 * std::max(1.0, x.value(q).norm()));
      }
    }
  }
}

TEST_CASE("boundary-graph family is the pull-back of the model metric") {
  for (const DomainSpec& d : kDomains) {
    const int n = 3;
    for (Profile kind : {Profile::decaying, Profile::compact}) {
      FamilyParams p;
      p.amplitude = 0.05;
      p.decay = 2.0;
      p.width = 3.0;
      p.profile = kind;
      const GraphMap g = graph_map(d, n, p);
      AsymptoticData data = make_family(FamilyId::boundary_graph, d, n, p, 2.0);
      data.fd = {2.5e-4, 5e-4};  // bump edges need finer stencils
      const MetricField b = MetricField::model(d.chart(), n);
      for (int k = 0; k < 10; ++k) {
        const Vec q = interior_point(d, n);
        const double h = 1e-6 * conformal_factor(d.chart(), q);
        Mat jac(n, n);
        for (int i = 0; i < n; ++i)
          jac.col(i) = (g.value(q + h * Vec::Unit(n, i)) - g.value(q - h * Vec::Unit(n, i))) / (2 * h);
        CHECK(max_abs(g.jacobian(q) - jac) < 1e-6);
        const Mat expected = jac.transpose() * b.value(g.value(q)) * jac - b.value(q);
        CHECK(max_abs(data.e(q) - expected) < 1e-5 * max_abs(b.value(q)));
        // exactly hyperbolic
        CHECK(std::abs(curvature(data.metric(), q).scalar + n * (n - 1.0)) < 1e-5);
      }
    }
  }
}

TEST_CASE("conformal and traceless families") {
  const int n = 4;
  const DomainSpec d = DomainSpec::equidistant(0.5);
  FamilyParams p;
  p.amplitude = 0.02;
  p.decay = 3.0;
  p.seed = 4;
  const AsymptoticData c = make_family(FamilyId::conformal_decay, d, n, p, 2.0);
  const AsymptoticData t = make_family(FamilyId::traceless_decay, d, n, p, 2.0);
  for (int k = 0; k < 10; ++k) {
    const Vec q = interior_point(d, n);
    const double om = conformal_factor(Chart::ball, q);
    const Mat ec = om * om * c.e(q);
    CHECK(max_abs(ec - ec(0, 0) * Mat::Identity(n, n)) < 1e-15);
    CHECK(std::abs(t.e(q).trace()) < 1e-12);
    CHECK(max_abs(t.e(q) - t.e(q).transpose()) == 0.0);
    CHECK(std::abs(om * om * t.e(q).norm() - std::abs(ec(0, 0))) < 1e-12);
  }
  const DecayCheck dc = decay_check(c);
  CHECK(dc.outer < 1.5 * dc.inner);
  p.amplitude = 0.0;
  for (FamilyId id : {FamilyId::conformal_decay, FamilyId::traceless_decay, FamilyId::compact_bump,
                      FamilyId::boundary_graph, FamilyId::lie_gauge})
    CHECK(make_family(id, d, n, p, 2.0).is_zero());
  CHECK_THROWS(make_family(FamilyId::conformal_decay, d, 1, p, 2.0));
}

TEST_CASE("pull-back by an isometry") {
  const int n = 3;
  const DomainSpec d = DomainSpec::equidistant(0.0);
  const MetricField b = MetricField::model(Chart::ball, n);
  Mat boost = Mat::Identity(n + 1, n + 1);
  boost(0, 0) = boost(2, 2) = std::cosh(0.4);
  boost(0, 2) = boost(2, 0) = std::sinh(0.4);
  const LorentzIsometry a(boost);
  for (int k = 0; k < 10; ++k) {
    const Vec q = testing::ball_point(n, 0.7);
    const Mat j = isometry_chart_jacobian(a, Chart::ball, q);
    // isometries pull b back to itself
    CHECK(max_abs(j.transpose() * b.value(isometry_chart_map(a, Chart::ball, q)) * j - b.value(q)) <
          1e-10 * max_abs(b.value(q)));
  }
  FamilyParams p;
  p.amplitude = 0.01;
  p.decay = 3.0;
  const AsymptoticData data = make_family(FamilyId::conformal_decay, d, n, p, 2.0);
  const AsymptoticData moved = pull_back(data, a);
  for (int k = 0; k < 10; ++k) {
    const Vec q = testing::ball_point(n, 0.7);
    const Vec img = isometry_chart_map(a, Chart::ball, q);
    // conformal data stays conformal with the profile evaluated at the image point
    const double om = conformal_factor(Chart::ball, q), om2 = conformal_factor(Chart::ball, img);
    const Mat expected = om2 * om2 * data.e(img)(0, 0) / (om * om) * Mat::Identity(n, n);
    CHECK(max_abs(moved.e(q) - expected) < 1e-10 * max_abs(expected));
  }
}
