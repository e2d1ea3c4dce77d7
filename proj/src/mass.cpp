#include "hypmass/mass.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hypmass {

namespace {

std::atomic<int> g_threads{1};

template <class F>
void parallel_for(size_t count, F&& body) {
  const int t = std::max(1, std::min<int>(g_threads.load(), int(count)));
  if (t <= 1) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      for (size_t i = size_t(w); i < count; i += size_t(t)) body(i);
    });
}

double sphere_area(int m) {
  // |S^m|
  const double k = 0.5 * (m + 1);
  return 2.0 * std::pow(std::numbers::pi, k) / std::tgamma(k);
}

Vec omega_gradient(Chart chart, const Vec& p) {
  if (chart == Chart::half_space) {
    Vec g = Vec::Zero(p.size());
    g(0) = 1.0;
    return g;
  }
  return -p;
}

// Gamma^k_ij of Omega^-2 delta.
Christoffel conformal_christoffel(Chart chart, const Vec& p) {
  const int n = int(p.size());
  const double om = conformal_factor(chart, p);
  const Vec d = omega_gradient(chart, p) / om;
  Christoffel gam(size_t(n), Mat::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    gam[size_t(k)].row(k) -= d.transpose();
    gam[size_t(k)].col(k) -= d;
    gam[size_t(k)].diagonal().array() += d(k);
  }
  return gam;
}

struct SurfaceFrame {
  Vec center;
  double radius = 0.0;
  double axis = 1.0;
  double phi_c = 0.0;
};

SurfaceFrame surface_frame(const DomainSpec& domain, int n, double r) {
  if (!(r > 0.0)) throw DomainError("surface radius must be positive");
  SurfaceFrame s;
  s.center = Vec::Zero(n);
  switch (domain.kind()) {
    case DomainKind::equidistant: {
      if (!(r > std::abs(domain.s()))) throw DomainError("surface radius must exceed |s|");
      s.radius = (std::sqrt(1.0 + r * r) - 1.0) / r;
      s.axis = 1.0;
      s.phi_c = std::acos(domain.s() / r);
      break;
    }
    case DomainKind::horoball: {
      s.center(0) = 1.0 / domain.chi();
      s.radius = r;
      s.axis = -1.0;
      s.phi_c = 0.5 * std::numbers::pi;
      break;
    }
    case DomainKind::horoball_complement: {
      const double a = 1.0 / domain.chi();
      s.center(0) = a * std::sqrt(1.0 + r * r);
      s.radius = a * r;
      s.axis = 1.0;
      s.phi_c = std::acos((1.0 - std::sqrt(1.0 + r * r)) / r);
      break;
    }
  }
  return s;
}

Vec frame_point(const SurfaceFrame& s, double phi, const Vec& w) {
  Vec p = s.center;
  p(0) += s.radius * s.axis * std::cos(phi);
  p.tail(p.size() - 1) += s.radius * std::sin(phi) * w;
  return p;
}

// Outward unit (Euclidean) normal of the domain boundary level sets.
Vec level_normal(const DomainSpec& domain, int n, const Vec& p) {
  const Vec g = potential_gradient(domain.defining_potential(n), domain.chart(), p);
  return g / g.norm();
}

}  // namespace

Vec base_point(const DomainSpec& domain, int n) {
  Vec c = Vec::Zero(n);
  if (domain.kind() != DomainKind::equidistant) c(0) = 1.0 / domain.chi();
  return c;
}

Vec boundary_base_point(const DomainSpec& domain, int n) {
  Vec c = base_point(domain, n);
  if (domain.kind() == DomainKind::equidistant) c(0) = domain.s() / (1.0 + std::sqrt(1.0 + domain.s() * domain.s()));
  return c;
}

void set_worker_threads(int k) { g_threads = std::max(1, k); }
int worker_threads() { return g_threads.load(); }

MetricField AsymptoticData::metric() const {
  MetricField b = MetricField::model(chart(), n);
  if (!e) return b;
  MetricField g = b.perturbed(e, fd);
  g.decay_rate = decay;
  return g;
}

double geodesic_radius(const DomainSpec& domain, const Vec& p) {
  if (domain.chart() == Chart::ball) {
    const double q = p.squaredNorm();
    return 2.0 * std::sqrt(q) / (1.0 - q);
  }
  const double a = 1.0 / domain.chi();
  Vec d = p;
  d(0) -= a;
  const double ch = 1.0 + d.squaredNorm() / (2.0 * a * p(0));
  return std::sqrt(std::max(0.0, ch * ch - 1.0));
}

double surface_radius(const DomainSpec& domain, const Vec& p) {
  if (domain.kind() == DomainKind::horoball) {
    Vec d = p;
    d(0) -= 1.0 / domain.chi();
    return d.norm();
  }
  return geodesic_radius(domain, p);
}

double corner_angle(const DomainSpec& domain, double r) { return surface_frame(domain, 2, r).phi_c; }

Vec surface_point(const DomainSpec& domain, int n, double r, double phi, const Vec& w) {
  return frame_point(surface_frame(domain, n, r), phi, w);
}

DecayCheck decay_check(const AsymptoticData& data, int samples, unsigned seed) {
  DecayCheck out;
  if (!data.e) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const int n = data.n;
  for (int i = 0; i < samples; ++i) {
    const double t = double(i) / std::max(1, samples - 1);
    const double r = data.r0 * std::pow(8.0, t);
    const SurfaceFrame f = surface_frame(data.domain, n, r);
    const double phi = f.phi_c + (std::numbers::pi - f.phi_c) * uni(rng);
    Vec w(n - 1);
    for (int k = 0; k < n - 1; ++k) w(k) = gauss(rng);
    w /= w.norm();
    const Vec p = frame_point(f, phi, w);
    const double om = conformal_factor(data.chart(), p);
    const double val = om * om * data.e(p).norm() * std::pow(surface_radius(data.domain, p), data.decay);
    if (r <= 2.0 * data.r0) out.inner = std::max(out.inner, val);
    if (r >= 4.0 * data.r0) out.outer = std::max(out.outer, val);
  }
  return out;
}

// ---- quadrature ----

void gauss_legendre(int m, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.assign(size_t(m), 0.0);
  w.assign(size_t(m), 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= m; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    x[size_t(i)] = -z;
    x[size_t(m - 1 - i)] = z;
    w[size_t(i)] = w[size_t(m - 1 - i)] = wt;
  }
  for (int i = 0; i < m; ++i) {
    x[size_t(i)] = 0.5 * (a + b) + 0.5 * (b - a) * x[size_t(i)];
    w[size_t(i)] *= 0.5 * (b - a);
  }
}

void sphere_rule(int m, int order, std::vector<Vec>& x, std::vector<double>& w) {
  x.clear();
  w.clear();
  if (m == 0) {
    x = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    w = {1.0, 1.0};
    return;
  }
  if (m == 1) {
    const int k = 2 * order;
    for (int i = 0; i < k; ++i) {
      const double a = 2.0 * std::numbers::pi * i / k;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      x.push_back(v);
      w.push_back(2.0 * std::numbers::pi / k);
    }
    return;
  }
  std::vector<Vec> sx;
  std::vector<double> sw, ax, aw;
  sphere_rule(m - 1, order, sx, sw);
  gauss_legendre(order, 0.0, std::numbers::pi, ax, aw);
  for (size_t i = 0; i < ax.size(); ++i) {
    const double s = std::sin(ax[i]);
    for (size_t j = 0; j < sx.size(); ++j) {
      Vec v(m + 1);
      v(0) = std::cos(ax[i]);
      v.tail(m) = s * sx[j];
      x.push_back(v);
      w.push_back(aw[i] * std::pow(s, m - 1) * sw[j]);
    }
  }
}

QuadratureRule build_rule(const DomainSpec& domain, int n, double r, QuadratureOrders orders) {
  if (n < 2) throw std::invalid_argument("dimension must be at least 2");
  const SurfaceFrame f = surface_frame(domain, n, r);
  const Chart chart = domain.chart();
  QuadratureRule rule;
  rule.r = r;

  const int levels = orders.grading >= 0 ? orders.grading
                                         : std::clamp(int(std::ceil(std::log2(2.0 + r))), 1, 14);
  std::vector<double> breaks{0.0};
  for (int j = levels; j >= 1; --j) breaks.push_back(0.5 * std::ldexp(1.0, -j));
  breaks.push_back(0.5);
  for (int j = 1; j <= levels; ++j) breaks.push_back(1.0 - 0.5 * std::ldexp(1.0, -j));
  breaks.push_back(1.0);
  const double len = std::numbers::pi - f.phi_c;

  std::vector<double> phis, pw;
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    std::vector<double> x, w;
    gauss_legendre(orders.polar, f.phi_c + len * breaks[k], f.phi_c + len * breaks[k + 1], x, w);
    phis.insert(phis.end(), x.begin(), x.end());
    pw.insert(pw.end(), w.begin(), w.end());
  }

  std::vector<Vec> dirs;
  std::vector<double> dw;
  sphere_rule(n - 2, orders.azimuthal, dirs, dw);

  for (size_t i = 0; i < phis.size(); ++i) {
    const double s = std::sin(phis[i]);
    for (size_t j = 0; j < dirs.size(); ++j) {
      const Vec p = frame_point(f, phis[i], dirs[j]);
      const double om = conformal_factor(chart, p);
      rule.points.push_back(p);
      rule.weights.push_back(pw[i] * dw[j] * std::pow(f.radius * s / om, n - 2) * f.radius / om);
      rule.normals.push_back(om * (p - f.center) / f.radius);
    }
  }

  const double sc = std::sin(f.phi_c);
  for (size_t j = 0; j < dirs.size(); ++j) {
    const Vec p = frame_point(f, f.phi_c, dirs[j]);
    const double om = conformal_factor(chart, p);
    const Vec eta = level_normal(domain, n, p);
    Vec out = (p - f.center);
    out -= eta * eta.dot(out);
    rule.corner_points.push_back(p);
    rule.corner_weights.push_back(dw[j] * std::pow(f.radius * sc / om, n - 2));
    rule.corner_conormals.push_back(om * out / out.norm());
    rule.corner_normals.push_back(om * eta);
  }
  return rule;
}

double exact_hemisphere_area(const DomainSpec& domain, int n, double r) {
  const SurfaceFrame f = surface_frame(domain, n, r);
  const double sph = n == 2 ? 2.0 : sphere_area(n - 2);
  if (domain.kind() == DomainKind::equidistant) {
    // integral of sin^m over [phi_c, pi] by the reduction formula
    const int m = n - 2;
    const double c = std::cos(f.phi_c), s = std::sin(f.phi_c);
    double lo = std::numbers::pi - f.phi_c;  // m = 0
    double hi = 1.0 + c;                      // m = 1
    double val = m == 0 ? lo : hi;
    for (int k = 2; k <= m; ++k) {
      const double prev = (k % 2 == 0) ? lo : hi;
      val = std::pow(s, k - 1) * c / k + (k - 1.0) / k * prev;
      if (k % 2 == 0) lo = val; else hi = val;
    }
    return std::pow(r, n - 1) * sph * val;
  }
  // Conformal factor along the polar angle is C_1 + axis*Rad*cos(phi); exact 1-D reduction.
  auto integrand = [&](double phi) {
    const double om = f.center(0) + f.axis * f.radius * std::cos(phi);
    return std::pow(f.radius / om, n - 1) * std::pow(std::sin(phi), n - 2);
  };
  double err = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, f.phi_c, std::numbers::pi, 12, 1e-14, &err);
  return sph * val;
}

double exact_corner_area(const DomainSpec& domain, int n, double r) {
  const SurfaceFrame f = surface_frame(domain, n, r);
  const double sph = n == 2 ? 2.0 : sphere_area(n - 2);
  const double om = f.center(0) + f.axis * f.radius * std::cos(f.phi_c);
  const double om_c = domain.chart() == Chart::ball ? 0.5 * (1.0 - f.radius * f.radius) : om;
  return sph * std::pow(f.radius * std::sin(f.phi_c) / om_c, n - 2);
}

// ---- charge form ----

std::vector<Vec> charge_forms(const std::vector<StaticPotential>& vs, const AsymptoticData& data, const Vec& p) {
  const int n = data.n;
  std::vector<Vec> out(vs.size(), Vec::Zero(n));
  if (!data.e) return out;
  const Chart chart = data.chart();
  const double om = conformal_factor(chart, p);
  const double om2 = om * om;
  const MetricJet ej = sym_field_jet(data.e, p, 1, data.fd.first * om, data.fd.second * om);
  const Christoffel gam = conformal_christoffel(chart, p);
  const Vec dom = omega_gradient(chart, p);

  const Mat& e = ej.g;
  const double tr_flat = e.trace();
  const double tr = om2 * tr_flat;
  Vec dtr(n), div = Vec::Zero(n);
  for (int i = 0; i < n; ++i) dtr(i) = 2.0 * om * dom(i) * tr_flat + om2 * ej.dg[size_t(i)].trace();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      // nabla_k e_ik
      double v = ej.dg[size_t(k)](i, k);
      for (int l = 0; l < n; ++l) v -= gam[size_t(l)](k, i) * e(l, k) + gam[size_t(l)](k, k) * e(i, l);
      div(i) += om2 * v;
    }
  for (size_t a = 0; a < vs.size(); ++a) {
    const double v = eval_potential(vs[a], {chart, p});
    const Vec dv = potential_gradient(vs[a], chart, p);
    out[a] = v * (div - dtr) - om2 * (e * dv) + tr * dv;
  }
  return out;
}

Vec charge_form(const StaticPotential& v, const AsymptoticData& data, const Vec& p) {
  return charge_forms({v}, data, p)[0];
}

Mat boundary_two_form(const StaticPotential& v, const VectorField& x, Chart chart, const Vec& p) {
  const int n = int(p.size());
  const double om = conformal_factor(chart, p);
  const Vec dom = omega_gradient(chart, p);
  const Vec xv = x.value(p);
  const Mat jac = x.jac(p, om);
  const Christoffel gam = conformal_christoffel(chart, p);
  const Vec xl = xv / (om * om);
  // d_k X_i
  Mat dxl = jac / (om * om);
  for (int i = 0; i < n; ++i) dxl.row(i) -= 2.0 * xv(i) / (om * om * om) * dom.transpose();
  Mat cov = dxl;  // cov(i,k) = X_i;k
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) cov(i, k) -= gam[size_t(l)](k, i) * xl(l);
  const double val = eval_potential(v, {chart, p});
  const Vec dv = potential_gradient(v, chart, p);
  Mat out = val * (cov - cov.transpose());
  out += 2.0 * (dv * xl.transpose() - xl * dv.transpose());
  return out;
}

Vec boundary_two_form_divergence(const StaticPotential& v, const VectorField& x, Chart chart, const Vec& p,
                                 double step) {
  const int n = int(p.size());
  const double om = conformal_factor(chart, p);
  const double h = step * om;
  const Mat w = boundary_two_form(v, x, chart, p);
  const Christoffel gam = conformal_christoffel(chart, p);
  Vec out = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    Vec a = p, b = p;
    a(k) += h;
    b(k) -= h;
    const Mat dw = (boundary_two_form(v, x, chart, a) - boundary_two_form(v, x, chart, b)) / (2.0 * h);
    for (int i = 0; i < n; ++i) {
      double t = dw(i, k);
      for (int l = 0; l < n; ++l) t -= gam[size_t(l)](k, i) * w(l, k) + gam[size_t(l)](k, k) * w(i, l);
      out(i) += om * om * t;
    }
  }
  return out;
}

// ---- mass ----

void check_admissible(const DomainSpec& domain, const StaticPotential& v) {
  const Vec& c = v.coeffs;
  if (domain.kind() == DomainKind::equidistant) {
    if (std::abs(c(1)) > 1e-14 * std::max(1.0, c.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("V_(1) is not in the admissible potential space of the equidistant model");
  } else if (std::abs(c(0) + c(1)) > 1e-14 * std::max(1.0, c.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("horospherical mass admits only V_h and V_(j), j >= 2");
  }
}

std::vector<RadiusRow> mass_at_radius(const AsymptoticData& data, const std::vector<StaticPotential>& vs, double r,
                                      QuadratureOrders orders, MassConventions conv) {
  for (const auto& v : vs) {
    if (v.dim() != data.n) throw std::invalid_argument("potential dimension does not match the data");
    check_admissible(data.domain, v);
  }
  if (r < data.r0) throw std::invalid_argument("radius below the inner cutoff r0");
  const size_t k = vs.size();
  std::vector<RadiusRow> rows(k);
  for (auto& row : rows) row.r = r;
  if (!data.e) return rows;

  const QuadratureRule rule = build_rule(data.domain, data.n, r, orders);
  const Chart chart = data.chart();
  std::vector<double> hemi(rule.points.size() * k), corner(rule.corner_points.size() * k);
  parallel_for(rule.points.size(), [&](size_t i) {
    const auto u = charge_forms(vs, data, rule.points[i]);
    for (size_t a = 0; a < k; ++a) hemi[i * k + a] = rule.weights[i] * u[a].dot(rule.normals[i]);
  });
  if (conv.include_corner) {
    double orient = double(conv.normal_sign);
    if (conv.corner_normal == CornerNormal::horospherical && data.domain.kind() == DomainKind::horoball_complement)
      orient = -orient;
    parallel_for(rule.corner_points.size(), [&](size_t i) {
      const Vec& p = rule.corner_points[i];
      const Mat e = data.e(p);
      const double evt = orient * rule.corner_normals[i].dot(e * rule.corner_conormals[i]);
      for (size_t a = 0; a < k; ++a)
        corner[i * k + a] = rule.corner_weights[i] * eval_potential(vs[a], {chart, p}) * evt;
    });
  }
  for (size_t a = 0; a < k; ++a) {
    double h = 0.0, c = 0.0;
    for (size_t i = 0; i < rule.points.size(); ++i) h += hemi[i * k + a];
    for (size_t i = 0; i < rule.corner_points.size(); ++i) c += corner[i * k + a];
    rows[a].hemisphere = h;
    rows[a].corner = -c;
    rows[a].total = h - c;
  }
  return rows;
}

RadiusRow mass_at_radius(const AsymptoticData& data, const StaticPotential& v, double r, QuadratureOrders orders,
                         MassConventions conv) {
  return mass_at_radius(data, std::vector<StaticPotential>{v}, r, orders, conv)[0];
}

std::vector<double> radius_schedule(double r0, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(r0 * std::ldexp(1.0, k));
  return out;
}

MassLimit extrapolate(const std::vector<double>& radii, const std::vector<double>& values) {
  if (radii.size() < 3 || radii.size() != values.size()) throw std::invalid_argument("need at least three radii");
  for (size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("radius schedule must be increasing");
  const size_t m = values.size();
  MassLimit out;
  if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) return out;
  // integrand identically zero beyond a compact support
  if (values[m - 1] == values[m - 2] && values[m - 2] == values[m - 3]) {
    out.value = values[m - 1];
    return out;
  }
  // Neville tableau in x = 1/r, evaluated at x = 0.
  std::vector<std::vector<double>> t(m, std::vector<double>(m, 0.0));
  for (size_t i = 0; i < m; ++i) t[i][0] = values[i];
  for (size_t j = 1; j < m; ++j)
    for (size_t i = j; i < m; ++i) {
      const double xi = 1.0 / radii[i], xj = 1.0 / radii[i - j];
      t[i][j] = (xj * t[i][j - 1] - xi * t[i - 1][j - 1]) / (xj - xi);
    }
  out.value = t[m - 1][m - 1];
  out.error = std::abs(t[m - 1][m - 1] - t[m - 1][m - 2]);
  const double d1 = std::abs(values[m - 1] - values[m - 2]);
  const double d0 = std::abs(values[m - 2] - values[m - 3]);
  const double floor = 1e-9 * (1.0 + std::abs(values[m - 1]));
  out.converged = d1 <= floor || d1 < 0.75 * d0;
  return out;
}

std::vector<MassSeries> mass_series(const AsymptoticData& data, const std::vector<StaticPotential>& vs,
                                    const std::vector<double>& radii, QuadratureOrders orders, MassConventions conv) {
  std::vector<MassSeries> out(vs.size());
  for (size_t a = 0; a < vs.size(); ++a) out[a].potential = vs[a];
  for (double r : radii) {
    const auto rows = mass_at_radius(data, vs, r, orders, conv);
    for (size_t a = 0; a < vs.size(); ++a) out[a].rows.push_back(rows[a]);
  }
  for (auto& s : out) {
    std::vector<double> vals;
    for (const auto& row : s.rows) vals.push_back(row.total);
    s.limit = extrapolate(radii, vals);
  }
  return out;
}

MassLimit mass_limit(const AsymptoticData& data, const StaticPotential& v, const std::vector<double>& radii,
                     QuadratureOrders orders, MassConventions conv) {
  return mass_series(data, {v}, radii, orders, conv)[0].limit;
}

std::vector<StaticPotential> mass_basis(const DomainSpec& domain, int n) {
  std::vector<StaticPotential> out;
  if (domain.kind() == DomainKind::equidistant)
    out.push_back(StaticPotential::basis(n, 0));
  else
    out.push_back(StaticPotential::horospherical(n));
  for (int a = 2; a <= n; ++a) out.push_back(StaticPotential::basis(n, a));
  return out;
}

std::string classify(const Vec& p, double tol) {
  if (p.cwiseAbs().maxCoeff() <= tol) return "zero";
  const double q = p(0) * p(0) - p.tail(p.size() - 1).squaredNorm();
  const double scale = std::max(tol, p.cwiseAbs().maxCoeff());
  if (std::abs(q) <= 2.0 * tol * scale) return "null";
  return q > 0.0 ? "timelike" : "spacelike";
}

MassVector mass_vector(const AsymptoticData& data, const std::vector<double>& radii, QuadratureOrders orders,
                       MassConventions conv, double tol) {
  const auto basis = mass_basis(data.domain, data.n);
  const auto series = mass_series(data, basis, radii, orders, conv);
  MassVector out;
  out.components.resize(Eigen::Index(series.size()));
  out.errors.resize(Eigen::Index(series.size()));
  for (size_t a = 0; a < series.size(); ++a) {
    out.components(Eigen::Index(a)) = series[a].limit.value;
    out.errors(Eigen::Index(a)) = series[a].limit.error;
    out.converged = out.converged && series[a].limit.converged;
  }
  if (data.domain.kind() == DomainKind::equidistant) out.classification = classify(out.components, tol);
  return out;
}

double lorentz_norm(const MassVector& p) {
  const double q = p.components(0) * p.components(0) - p.components.tail(p.components.size() - 1).squaredNorm();
  return q >= 0.0 ? std::sqrt(q) : -std::sqrt(-q);
}

HoroInvariants horo_invariants(const AsymptoticData& data, const std::vector<double>& radii, QuadratureOrders orders,
                               MassConventions conv) {
  if (data.domain.kind() == DomainKind::equidistant)
    throw std::invalid_argument("horospherical invariants need a horoball or its complement");
  const MassVector v = mass_vector(data, radii, orders, conv);
  HoroInvariants out;
  out.mass = v.components(0);
  out.center = v.components.tail(v.components.size() - 1);
  out.error = v.errors.cwiseAbs().maxCoeff();
  out.converged = v.converged;
  return out;
}

// ---- modified tensors and Chai-type fluxes ----

ModifiedTensors modified_tensors(const MetricField& g, const Vec& p) {
  const int n = g.dim();
  const MetricJet j = g.jet(p, 2);
  const CurvatureData c = curvature(j);
  ModifiedTensors out;
  out.einstein = c.ricci - 0.5 * c.scalar * j.g - 0.5 * (n - 1.0) * (n - 2.0) * j.g;
  return out;
}

ModifiedTensors modified_tensors(const MetricField& g, const ScalarField& f, double level, const Vec& p,
                                 Conventions conv) {
  ModifiedTensors out = modified_tensors(g, p);
  out.geometry = hypersurface_geometry(g, f, level, p, conv);
  const int n = g.dim();
  const auto& geo = out.geometry;
  out.newton = geo.second_form - geo.mean_curvature * geo.gamma + (n - 2.0) * geo.gamma;
  return out;
}

double modified_newton_on(const MetricField& g, const ScalarField& f, double level, const Vec& p, const Vec& x,
                          const Vec& y, Conventions conv) {
  const int n = g.dim();
  const HypersurfaceGeometry geo = hypersurface_geometry(g, f, level, p, conv);
  const Mat hess = covariant_hessian(g, f, p);
  const Mat gm = g.value(p);
  const double pi = double(conv.normal_sign) * x.dot(hess * y) / geo.grad_norm;
  const double gam = x.dot(gm * y);
  return pi - geo.mean_curvature * gam + (n - 2.0) * gam;
}

Vec chai_field(ChaiField which, int a, const Vec& z) {
  const int n = int(z.size());
  const Vec x = half_space_to_ball<double>(z);
  const Vec amb = ball_to_hyperboloid<double>(x);
  Vec c = Vec::Zero(n + 1);
  c(0) = 1.0;
  c(1) = 1.0;
  if (which == ChaiField::center) {
    if (a < 2 || a > n) throw std::out_of_range("center index must lie in 2..n");
    c(a) += 1.0;
  }
  Vec field = c + minkowski_inner(c, amb) * amb;
  field(0) -= amb(1);
  field(1) -= amb(0);
  if (which == ChaiField::center) {
    field(0) -= amb(a);
    field(a) -= amb(0);
  }
  return ambient_to_chart(Chart::half_space, z, field);
}

namespace {

void check_chai_domain(const AsymptoticData& data) {
  if (data.domain.kind() != DomainKind::horoball)
    throw std::invalid_argument("Chai-type fluxes are defined for the horoball model only");
  if (std::abs(data.domain.chi() - 1.0) > 1e-12)
    throw std::invalid_argument("Chai-type fluxes need the unit horosphere (chi = 1)");
}

}  // namespace

RadiusRow chai_flux_at_radius(const AsymptoticData& data, ChaiField which, int a, double r, QuadratureOrders orders,
                              MassConventions conv) {
  check_chai_domain(data);
  RadiusRow row;
  row.r = r;
  if (!data.e) return row;
  const int n = data.n;
  const QuadratureRule rule = build_rule(data.domain, n, r, orders);
  const MetricField g = data.metric();
  const ScalarField f = potential_field(data.domain.defining_potential(n), Chart::half_space);

  for (const Vec& p : rule.corner_points) {
    const Vec x = chai_field(which, a, p);
    const Vec dv = f.grad(p);
    if (std::abs(x.dot(dv)) > 1e-10 * std::max(1.0, x.norm() * dv.norm()))
      throw std::runtime_error("conformal field is not tangent to the horosphere");
  }

  std::vector<double> hemi(rule.points.size()), corner(rule.corner_points.size());
  parallel_for(rule.points.size(), [&](size_t i) {
    const Vec& p = rule.points[i];
    const Mat et = modified_tensors(g, p).einstein;
    hemi[i] = rule.weights[i] * chai_field(which, a, p).dot(et * rule.normals[i]);
  });
  if (conv.include_corner) {
    Conventions c;
    c.normal_sign = conv.normal_sign;
    parallel_for(rule.corner_points.size(), [&](size_t i) {
      const Vec& p = rule.corner_points[i];
      corner[i] = rule.corner_weights[i] *
                  modified_newton_on(g, f, data.domain.level(), p, chai_field(which, a, p), rule.corner_conormals[i], c);
    });
  }
  for (double v : hemi) row.hemisphere += v;
  for (double v : corner) row.corner -= v;
  row.total = row.hemisphere + row.corner;
  return row;
}

MassLimit chai_flux(const AsymptoticData& data, ChaiField which, int a, const std::vector<double>& radii,
                    QuadratureOrders orders, MassConventions conv) {
  std::vector<double> vals;
  for (double r : radii) vals.push_back(chai_flux_at_radius(data, which, a, r, orders, conv).total);
  return extrapolate(radii, vals);
}

// ---- energy conditions ----

EnergyScan energy_scan(const AsymptoticData& data, double r_min, double r_max, int shells, int per_shell,
                       int boundary_samples, unsigned seed, Conventions conv) {
  const int n = data.n;
  const MetricField g = data.metric();
  const DomainSpec& dom = data.domain;
  const ScalarField f = potential_field(dom.defining_potential(n), data.chart());
  const double target_r = -double(n) * (n - 1.0);
  const double target_h = (n - 1.0) * dom.lambda();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss;
  auto random_dir = [&] {
    Vec w(n - 1);
    for (int k = 0; k < n - 1; ++k) w(k) = gauss(rng);
    return Vec(w / w.norm());
  };

  // Interior: points fixed serially from the seed, evaluated in parallel.
  std::vector<Vec> pts;
  std::vector<double> radius;
  for (int s = 0; s < shells; ++s) {
    const double t = shells > 1 ? double(s) / (shells - 1) : 1.0;
    const double r = r_min * std::pow(r_max / r_min, t);
    const SurfaceFrame fr = surface_frame(dom, n, r);
    for (int i = 0; i < per_shell; ++i) {
      const double phi = fr.phi_c + (std::numbers::pi - fr.phi_c) * (0.02 + 0.96 * uni(rng));
      pts.push_back(frame_point(fr, phi, random_dir()));
      radius.push_back(r);
    }
  }
  std::vector<double> rvals(pts.size());
  parallel_for(pts.size(), [&](size_t i) { rvals[i] = curvature(g, pts[i]).scalar - target_r; });

  // Boundary: corner spheres of radii clustered toward the base point.
  const double r_lo = dom.kind() == DomainKind::equidistant ? std::abs(dom.s()) : 0.0;
  std::vector<Vec> bpts;
  std::vector<double> bradius;
  for (int i = 0; i < boundary_samples; ++i) {
    const double t = (i + 0.5) / boundary_samples;
    const double r = r_lo + (r_max - r_lo) * t * t + 1e-9 * (1.0 + r_lo);
    const SurfaceFrame fr = surface_frame(dom, n, r);
    bpts.push_back(frame_point(fr, fr.phi_c, random_dir()));
    bradius.push_back(r);
  }
  std::vector<double> hvals(bpts.size());
  parallel_for(bpts.size(), [&](size_t i) {
    hvals[i] = hypersurface_geometry(g, f, dom.level(), bpts[i], conv).mean_curvature - target_h;
  });

  EnergyScan out;
  out.interior_samples = int(pts.size());
  out.boundary_samples = int(bpts.size());
  out.scalar_margin = rvals.empty() ? 0.0 : *std::min_element(rvals.begin(), rvals.end());
  for (size_t i = 0; i < rvals.size(); ++i)
    if (radius[i] >= r_max * (1.0 - 1e-12)) out.scalar_decay = std::max(out.scalar_decay, radius[i] * std::abs(rvals[i]));
  if (!hvals.empty()) {
    const auto it = std::min_element(hvals.begin(), hvals.end());
    out.boundary_margin = *it;
    out.worst_boundary_point = bpts[size_t(it - hvals.begin())];
  }
  for (size_t i = 0; i < hvals.size(); ++i)
    if (bradius[i] >= 0.5 * r_max) out.boundary_decay = std::max(out.boundary_decay, bradius[i] * std::abs(hvals[i]));
  return out;
}

}  // namespace hypmass
