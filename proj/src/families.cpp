#include "hypmass/families.hpp"

#include <cmath>
#include <random>

namespace hypmass {

namespace {

Vec omega_gradient(Chart chart, const Vec& p) {
  if (chart == Chart::half_space) {
    Vec g = Vec::Zero(p.size());
    g(0) = 1.0;
    return g;
  }
  return -p;
}

Vec boundary_center(const DomainSpec& domain, int n, const Vec& w) {
  if (w.size() == 0) return boundary_base_point(domain, n);
  if (w.size() != n - 1) throw std::invalid_argument("bump center needs n-1 boundary coordinates");
  return convert(domain.boundary_point(w), domain.chart()).coords;
}

// Unit outward normal of the level sets of f and its derivative D(i,k) = d_k nhat_i.
std::pair<Vec, Mat> level_normal_jet(const DomainSpec& domain, int n, const Vec& p) {
  const StaticPotential f = domain.defining_potential(n);
  const Vec g = potential_gradient(f, domain.chart(), p);
  const Mat h = potential_hessian(f, domain.chart(), p);
  const double norm = g.norm();
  const Vec nh = g / norm;
  const Mat d = (Mat::Identity(n, n) - nh * nh.transpose()) * h / norm;
  return {nh, d};
}

}  // namespace

const char* family_name(FamilyId id) {
  switch (id) {
    case FamilyId::conformal_decay: return "conformal-decay";
    case FamilyId::traceless_decay: return "transverse-traceless-decay";
    case FamilyId::compact_bump: return "compact-bump";
    case FamilyId::boundary_graph: return "boundary-graph";
    case FamilyId::lie_gauge: return "lie-gauge";
  }
  return "?";
}

FamilyId parse_family(const std::string& name) {
  for (FamilyId id : {FamilyId::conformal_decay, FamilyId::traceless_decay, FamilyId::compact_bump,
                      FamilyId::boundary_graph, FamilyId::lie_gauge})
    if (name == family_name(id)) return id;
  throw std::invalid_argument("unknown perturbation family '" + name + "'");
}

std::pair<double, Vec> cosh_distance(Chart chart, const Vec& p, const Vec& c) {
  const Vec d = p - c;
  const double d2 = d.squaredNorm();
  if (chart == Chart::half_space) {
    const double val = 1.0 + d2 / (2.0 * p(0) * c(0));
    Vec g = d / (p(0) * c(0));
    g(0) -= d2 / (2.0 * p(0) * p(0) * c(0));
    return {val, g};
  }
  const double a = 1.0 - p.squaredNorm(), b = 1.0 - c.squaredNorm();
  const double val = 1.0 + 2.0 * d2 / (a * b);
  const Vec g = 4.0 * (d * a + d2 * p) / (a * a * b);
  return {val, g};
}

double RadialProfile::value(const Vec& p) const {
  if (kind == Profile::decaying && euclidean) return std::pow(1.0 + (p - center).squaredNorm(), -0.5 * decay);
  const double ch = cosh_distance(chart, p, center).first;
  if (kind == Profile::decaying) return std::pow(ch, -decay);
  const double t = (ch - 1.0) / width;
  if (t >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

Vec RadialProfile::gradient(const Vec& p) const {
  if (kind == Profile::decaying && euclidean)
    return -decay * std::pow(1.0 + (p - center).squaredNorm(), -0.5 * decay - 1.0) * (p - center);
  const auto [ch, dch] = cosh_distance(chart, p, center);
  if (kind == Profile::decaying) return -decay * std::pow(ch, -decay - 1.0) * dch;
  const double t = (ch - 1.0) / width;
  if (t >= 1.0) return Vec::Zero(p.size());
  const double q = 1.0 - t * t;
  const double b = std::exp(1.0 - 1.0 / q);
  return b * (-2.0 * t / (q * q)) / width * dch;
}

RadialProfile make_profile(const DomainSpec& domain, int n, const FamilyParams& params) {
  RadialProfile pr;
  pr.chart = domain.chart();
  pr.kind = params.profile;
  pr.decay = params.decay;
  pr.width = params.width;
  pr.euclidean = domain.kind() == DomainKind::horoball;
  if (params.profile == Profile::decaying && params.center.size() == 0)
    pr.center = base_point(domain, n);
  else
    pr.center = boundary_center(domain, n, params.center);
  if (pr.kind == Profile::compact && !(pr.width > 0.0)) throw std::invalid_argument("bump width must be positive");
  return pr;
}

VectorField gauge_field(const DomainSpec& domain, int n, const FamilyParams& params) {
  const RadialProfile pr = make_profile(domain, n, params);
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss;
  Vec w(n);
  Mat m(n, n);
  for (int i = 0; i < n; ++i) w(i) = gauss(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = gauss(rng) / std::sqrt(double(n));
  const double eps = params.amplitude;
  const Chart chart = domain.chart();

  VectorField x;
  x.value = [=](const Vec& p) {
    const auto [nh, d] = level_normal_jet(domain, n, p);
    const Vec u = w + m * p;
    return Vec(eps * pr.value(p) * conformal_factor(chart, p) * (u - nh * nh.dot(u)));
  };
  x.jacobian = [=](const Vec& p) {
    const auto [nh, d] = level_normal_jet(domain, n, p);
    const Vec u = w + m * p;
    const Vec pu = u - nh * nh.dot(u);
    const double om = conformal_factor(chart, p);
    const double beta = pr.value(p);
    const Vec dbo = om * pr.gradient(p) + beta * omega_gradient(chart, p);
    const Mat proj = Mat::Identity(n, n) - nh * nh.transpose();
    const Mat dpu = proj * m - d * nh.dot(u) - nh * (u.transpose() * d);
    return Mat(eps * (pu * dbo.transpose() + beta * om * dpu));
  };
  return x;
}

Vec GraphMap::value(const Vec& p) const {
  const auto [nh, d] = level_normal_jet(domain, n, p);
  return p + amplitude * profile.value(p) * conformal_factor(domain.chart(), p) * nh;
}

Mat GraphMap::jacobian(const Vec& p) const {
  const auto [nh, d] = level_normal_jet(domain, n, p);
  const double om = conformal_factor(domain.chart(), p);
  const double beta = profile.value(p);
  const Vec dbo = om * profile.gradient(p) + beta * omega_gradient(domain.chart(), p);
  return Mat::Identity(n, n) + amplitude * (nh * dbo.transpose() + beta * om * d);
}

Mat GraphMap::perturbation(const Vec& p) const {
  const auto [nh, d] = level_normal_jet(domain, n, p);
  const Chart chart = domain.chart();
  const double om = conformal_factor(chart, p);
  const double beta = profile.value(p);
  const Vec shift = amplitude * beta * om * nh;
  const Vec q = p + shift;
  double om_q = 0.0;
  double diff = 0.0;  // Omega(p) - Omega(q)
  if (chart == Chart::half_space) {
    om_q = q(0);
    diff = -shift(0);
  } else {
    diff = 0.5 * (2.0 * p.dot(shift) + shift.squaredNorm());
    om_q = om - diff;
  }
  if (!(om_q > 0.0)) throw DomainError("graph map leaves the model");
  const Vec dbo = om * profile.gradient(p) + beta * omega_gradient(chart, p);
  const Mat k = amplitude * (nh * dbo.transpose() + beta * om * d);
  const double dinv = diff * (om + om_q) / (om * om * om_q * om_q);  // Omega(q)^-2 - Omega(p)^-2
  Mat e = dinv * Mat::Identity(n, n) + (k + k.transpose() + k.transpose() * k) / (om_q * om_q);
  return 0.5 * (e + e.transpose());
}

GraphMap graph_map(const DomainSpec& domain, int n, const FamilyParams& params) {
  GraphMap g;
  g.domain = domain;
  g.n = n;
  g.profile = make_profile(domain, n, params);
  g.amplitude = params.amplitude;
  return g;
}

AsymptoticData make_family(FamilyId id, const DomainSpec& domain, int n, const FamilyParams& params, double r0) {
  if (n < 2) throw std::invalid_argument("dimension must be at least 2");
  AsymptoticData data;
  data.domain = domain;
  data.n = n;
  data.r0 = r0;
  data.decay = params.decay;
  if (params.amplitude == 0.0) return data;
  const Chart chart = domain.chart();
  const double amp = params.amplitude;

  switch (id) {
    case FamilyId::conformal_decay:
    case FamilyId::compact_bump: {
      FamilyParams pp = params;
      pp.profile = id == FamilyId::compact_bump ? Profile::compact : Profile::decaying;
      const RadialProfile pr = make_profile(domain, n, pp);
      data.e = [=](const Vec& p) {
        const double om = conformal_factor(chart, p);
        return Mat(amp * pr.value(p) / (om * om) * Mat::Identity(n, n));
      };
      if (id == FamilyId::compact_bump) data.decay = 0.0;
      break;
    }
    case FamilyId::traceless_decay: {
      FamilyParams pp = params;
      pp.profile = Profile::decaying;
      const RadialProfile pr = make_profile(domain, n, pp);
      std::mt19937_64 rng(params.seed);
      std::normal_distribution<double> gauss;
      Mat s(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = gauss(rng);
      s = Mat(0.5 * (s + s.transpose()));
      s.diagonal().array() -= s.trace() / n;
      s /= s.norm();
      data.e = [=](const Vec& p) {
        const double om = conformal_factor(chart, p);
        return Mat(amp * pr.value(p) / (om * om) * s);
      };
      break;
    }
    case FamilyId::boundary_graph: {
      const GraphMap g = graph_map(domain, n, params);
      data.e = [g](const Vec& p) { return g.perturbation(p); };
      if (params.profile == Profile::compact) data.decay = 0.0;
      break;
    }
    case FamilyId::lie_gauge: {
      const VectorField x = gauge_field(domain, n, params);
      data.e = [=](const Vec& p) {
        const double om = conformal_factor(chart, p);
        const Vec z = x.value(p);
        const Mat j = x.jacobian(p);
        // L_X (Omega^-2 delta)
        const double dz = -2.0 * z.dot(omega_gradient(chart, p)) / (om * om * om);
        return Mat((j + j.transpose()) / (om * om) + dz * Mat::Identity(n, n));
      };
      if (params.profile == Profile::compact) data.decay = 0.0;
      break;
    }
  }
  return data;
}

Vec isometry_chart_map(const LorentzIsometry& a, Chart chart, const Vec& p) {
  if (chart == Chart::ball) return hyperboloid_to_ball<double>(Vec(a.matrix * ball_to_hyperboloid<double>(p)));
  return apply_isometry(a, {chart, p}).coords;
}

Mat isometry_chart_jacobian(const LorentzIsometry& a, Chart chart, const Vec& p) {
  if (chart == Chart::ball) return isometry_ball_jacobian(a, p);
  const Vec q = isometry_chart_map(a, chart, p);
  const Mat ej = embedding_jacobian(chart, p);
  const int n = int(p.size());
  Mat out(n, n);
  for (int k = 0; k < n; ++k) out.col(k) = ambient_to_chart(chart, q, a.matrix * ej.col(k));
  return out;
}

AsymptoticData pull_back(const AsymptoticData& data, const LorentzIsometry& a) {
  AsymptoticData out = data;
  if (!data.e) return out;
  const Chart chart = data.chart();
  const SymField e = data.e;
  out.e = [=](const Vec& p) {
    const Mat j = isometry_chart_jacobian(a, chart, p);
    const Mat m = j.transpose() * e(isometry_chart_map(a, chart, p)) * j;
    return Mat(0.5 * (m + m.transpose()));
  };
  return out;
}

}  // namespace hypmass
