#include "hypmass/tensors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace hypmass {

Vec ScalarField::grad(const Vec& p, double scale) const {
  if (gradient) return gradient(p);
  const double h = fd.first * scale;
  Vec out(p.size());
  for (int k = 0; k < p.size(); ++k) {
    auto at = [&](double t) {
      Vec q = p;
      q(k) += t;
      return value(q);
    };
    out(k) = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
  }
  return out;
}

Mat ScalarField::hess(const Vec& p, double scale) const {
  if (hessian) return hessian(p);
  const int n = int(p.size());
  const double h0 = fd.second * scale;
  const double f0 = value(p);
  auto at = [&](int k, double a, int l, double b) {
    Vec q = p;
    q(k) += a;
    if (l >= 0) q(l) += b;
    return value(q);
  };
  Mat out(n, n);
  for (int k = 0; k < n; ++k) {
    auto diag = [&](double h) { return (at(k, h, -1, 0) - 2.0 * f0 + at(k, -h, -1, 0)) / (h * h); };
    out(k, k) = (4.0 * diag(h0) - diag(2.0 * h0)) / 3.0;
    for (int l = k + 1; l < n; ++l) {
      auto mixed = [&](double h) {
        return (at(k, h, l, h) - at(k, h, l, -h) - at(k, -h, l, h) + at(k, -h, l, -h)) / (4.0 * h * h);
      };
      out(k, l) = out(l, k) = (4.0 * mixed(h0) - mixed(2.0 * h0)) / 3.0;
    }
  }
  return out;
}

Mat VectorField::jac(const Vec& p, double scale) const {
  if (jacobian) return jacobian(p);
  const double h = fd.first * scale;
  const Vec x0 = value(p);
  Mat out(x0.size(), p.size());
  for (int k = 0; k < p.size(); ++k) {
    auto at = [&](double t) {
      Vec q = p;
      q(k) += t;
      return value(q);
    };
    out.col(k) = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
  }
  return out;
}

ScalarField potential_field(const StaticPotential& v, Chart chart) {
  ScalarField f;
  f.value = [v, chart](const Vec& p) { return eval_potential(v, {chart, p}); };
  f.gradient = [v, chart](const Vec& p) { return potential_gradient(v, chart, p); };
  f.hessian = [v, chart](const Vec& p) { return potential_hessian(v, chart, p); };
  return f;
}

MetricField MetricField::flat(int n) { return MetricField(Kind::flat, Chart::ball, n); }

MetricField MetricField::model(Chart chart, int n) {
  if (chart == Chart::hyperboloid) throw std::invalid_argument("the model metric lives in the ball or half-space chart");
  return MetricField(Kind::conformal, chart, n);
}

MetricField MetricField::general(int n, SymField g, FiniteDifference fd) {
  MetricField m(Kind::general, Chart::ball, n);
  m.general_ = std::move(g);
  m.fd_ = fd;
  return m;
}

MetricField MetricField::perturbed(SymField e, FiniteDifference fd) const {
  if (perturbation_) throw std::invalid_argument("metric is already perturbed");
  MetricField m = *this;
  m.perturbation_ = std::move(e);
  m.fd_ = fd;
  return m;
}

double MetricField::length_scale(const Vec& p) const {
  if (kind_ == Kind::conformal) return conformal_factor(chart_, p);
  return 1.0;
}

// Fourth-order central stencils: the raw second-order quotients at h and 2h, combined.
MetricJet sym_field_jet(const SymField& f, const Vec& p, int order, double h1, double h2) {
  const int n = int(p.size());
  MetricJet j;
  j.g = f(p);
  auto shifted = [&](int k, double hk, int l = -1, double hl = 0.0) {
    Vec q = p;
    q(k) += hk;
    if (l >= 0) q(l) += hl;
    return f(q);
  };
  if (order >= 1) {
    j.dg.resize(n);
    for (int k = 0; k < n; ++k) {
      const Mat d1 = shifted(k, h1) - shifted(k, -h1);
      const Mat d2 = shifted(k, 2.0 * h1) - shifted(k, -2.0 * h1);
      j.dg[k] = (8.0 * d1 - d2) / (12.0 * h1);
    }
  }
  if (order >= 2) {
    j.ddg.assign(n, std::vector<Mat>(n));
    for (int k = 0; k < n; ++k) {
      const Mat s1 = (shifted(k, h2) - 2.0 * j.g + shifted(k, -h2)) / (h2 * h2);
      const Mat s2 = (shifted(k, 2.0 * h2) - 2.0 * j.g + shifted(k, -2.0 * h2)) / (4.0 * h2 * h2);
      j.ddg[k][k] = (4.0 * s1 - s2) / 3.0;
      for (int l = k + 1; l < n; ++l) {
        auto mixed = [&](double h) {
          return Mat((shifted(k, h, l, h) - shifted(k, h, l, -h) - shifted(k, -h, l, h) + shifted(k, -h, l, -h)) /
                     (4.0 * h * h));
        };
        j.ddg[k][l] = (4.0 * mixed(h2) - mixed(2.0 * h2)) / 3.0;
        j.ddg[l][k] = j.ddg[k][l];
      }
    }
  }
  return j;
}

MetricJet MetricField::base_jet(const Vec& p, int order) const {
  const int n = n_;
  if (kind_ == Kind::general) {
    return sym_field_jet(general_, p, order, fd_.first, fd_.second);
  }
  MetricJet j;
  const Mat id = Mat::Identity(n, n);
  if (kind_ == Kind::flat) {
    j.g = id;
    if (order >= 1) j.dg.assign(n, Mat::Zero(n, n));
    if (order >= 2) j.ddg.assign(n, std::vector<Mat>(n, Mat::Zero(n, n)));
    return j;
  }
  double om;
  Vec dom(n);
  Mat ddom(n, n);
  if (chart_ == Chart::ball) {
    om = 0.5 * (1.0 - p.squaredNorm());
    dom = -p;
    ddom = -id;
  } else {
    om = p(0);
    dom = Vec::Zero(n);
    dom(0) = 1.0;
    ddom = Mat::Zero(n, n);
  }
  if (!(om > 0.0)) throw DomainError("point outside the model chart");
  j.g = id / (om * om);
  if (order >= 1) {
    j.dg.resize(n);
    for (int k = 0; k < n; ++k) j.dg[k] = -2.0 * dom(k) / (om * om * om) * id;
  }
  if (order >= 2) {
    j.ddg.assign(n, std::vector<Mat>(n));
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        j.ddg[k][l] = (6.0 * dom(k) * dom(l) / std::pow(om, 4) - 2.0 * ddom(k, l) / std::pow(om, 3)) * id;
  }
  return j;
}

MetricJet MetricField::jet(const Vec& p, int order) const {
  if (p.size() != n_) throw std::invalid_argument("point dimension does not match the metric");
  MetricJet j = base_jet(p, order);
  if (perturbation_) {
    const double s = length_scale(p);
    MetricJet e = sym_field_jet(perturbation_, p, order, fd_.first * s, fd_.second * s);
    j.g += e.g;
    for (size_t k = 0; k < j.dg.size(); ++k) j.dg[k] += e.dg[k];
    for (size_t k = 0; k < j.ddg.size(); ++k)
      for (size_t l = 0; l < j.ddg[k].size(); ++l) j.ddg[k][l] += e.ddg[k][l];
  }
  Eigen::LLT<Mat> llt(0.5 * (j.g + j.g.transpose()));
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  return j;
}

Mat MetricField::value(const Vec& p) const { return jet(p, 0).g; }

Christoffel christoffel(const MetricJet& j) {
  const int n = int(j.g.rows());
  const Mat gi = j.g.inverse();
  Christoffel out(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj) {
      Vec a(n);
      for (int l = 0; l < n; ++l) a(l) = j.dg[i](jj, l) + j.dg[jj](i, l) - j.dg[l](i, jj);
      const Vec c = 0.5 * gi * a;
      for (int k = 0; k < n; ++k) out[k](i, jj) = c(k);
    }
  return out;
}

Christoffel christoffel(const MetricField& g, const Vec& p) { return christoffel(g.jet(p, 1)); }

std::vector<Christoffel> christoffel_derivative(const MetricJet& j) {
  const int n = int(j.g.rows());
  const Mat gi = j.g.inverse();
  std::vector<Christoffel> out(n, Christoffel(n, Mat::Zero(n, n)));
  for (int m = 0; m < n; ++m) {
    const Mat dgi = -gi * j.dg[m] * gi;
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj) {
        Vec a(n), da(n);
        for (int l = 0; l < n; ++l) {
          a(l) = j.dg[i](jj, l) + j.dg[jj](i, l) - j.dg[l](i, jj);
          da(l) = j.ddg[m][i](jj, l) + j.ddg[m][jj](i, l) - j.ddg[m][l](i, jj);
        }
        const Vec c = 0.5 * (dgi * a + gi * da);
        for (int k = 0; k < n; ++k) out[m][k](i, jj) = c(k);
      }
  }
  return out;
}

CurvatureData curvature(const MetricJet& j) {
  const int n = int(j.g.rows());
  const Christoffel gam = christoffel(j);
  const std::vector<Christoffel> dgam = christoffel_derivative(j);
  // up[a][b][c][d] = R^a_bcd
  std::vector<double> up(size_t(n) * n * n * n, 0.0);
  auto idx = [n](int a, int b, int c, int d) { return size_t(((a * n + b) * n + c) * n + d); };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = dgam[c][a](d, b) - dgam[d][a](c, b);
          for (int e = 0; e < n; ++e) v += gam[a](c, e) * gam[e](d, b) - gam[a](d, e) * gam[e](c, b);
          up[idx(a, b, c, d)] = v;
        }
  CurvatureData out;
  out.n = n;
  out.riemann.assign(up.size(), 0.0);
  out.ricci = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = 0.0;
          for (int e = 0; e < n; ++e) v += j.g(a, e) * up[idx(e, b, c, d)];
          out.riemann[idx(a, b, c, d)] = v;
        }
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double v = 0.0;
      for (int a = 0; a < n; ++a) v += up[idx(a, b, a, d)];
      out.ricci(b, d) = v;
    }
  out.ricci = Mat(0.5 * (out.ricci + out.ricci.transpose()));
  out.scalar = (j.g.inverse().cwiseProduct(out.ricci)).sum();
  return out;
}

CurvatureData curvature(const MetricField& g, const Vec& p) { return curvature(g.jet(p, 2)); }

double riemann_symmetry_defect(const CurvatureData& c) {
  const int n = c.n;
  double worst = 0.0;
  double size = 1.0;
  for (double v : c.riemann) size = std::max(size, std::abs(v));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int cc = 0; cc < n; ++cc)
        for (int d = 0; d < n; ++d) {
          const double r = c.riem(a, b, cc, d);
          worst = std::max(worst, std::abs(r + c.riem(b, a, cc, d)));
          worst = std::max(worst, std::abs(r + c.riem(a, b, d, cc)));
          worst = std::max(worst, std::abs(r - c.riem(cc, d, a, b)));
          worst = std::max(worst, std::abs(r + c.riem(a, cc, d, b) + c.riem(a, d, b, cc)));
        }
  return worst / size;
}

Mat covariant_hessian(const MetricField& g, const ScalarField& v, const Vec& p) {
  const double s = g.length_scale(p);
  const Vec dv = v.grad(p, s);
  Mat h = v.hess(p, s);
  const Christoffel gam = christoffel(g, p);
  for (int k = 0; k < int(p.size()); ++k) h -= dv(k) * gam[k];
  return 0.5 * (h + h.transpose());
}

HypersurfaceGeometry hypersurface_geometry(const MetricField& g, const ScalarField& f, double level, const Vec& p,
                                           Conventions conv) {
  const int n = int(p.size());
  const double s = g.length_scale(p);
  const Vec df = f.grad(p, s);
  const Mat gm = g.value(p);
  const Mat gi = gm.inverse();
  const double norm2 = df.dot(gi * df);
  if (!(norm2 > 1e-24)) throw DomainError("critical point of the defining function");
  const double fv = f.value(p);
  if (std::abs(fv - level) > 1e-6 * std::max(1.0, std::abs(level))) throw DomainError("point is not on the level set");
  HypersurfaceGeometry out;
  out.point = p;
  out.grad_norm = std::sqrt(norm2);
  out.eta = double(conv.normal_sign) * gi * df / out.grad_norm;
  out.nu = -out.eta;
  Eigen::HouseholderQR<Mat> qr(df);
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  out.tangent = q.rightCols(n - 1);
  out.gamma = out.tangent.transpose() * gm * out.tangent;
  const Mat hess = covariant_hessian(g, f, p);
  out.second_form = double(conv.normal_sign) * out.tangent.transpose() * hess * out.tangent / out.grad_norm;
  out.second_form = Mat(0.5 * (out.second_form + out.second_form.transpose()));
  out.mean_curvature = (out.gamma.inverse().cwiseProduct(out.second_form)).sum();
  return out;
}

double second_form_on(const MetricField& g, const ScalarField& f, const Vec& p, const Vec& x, const Vec& y) {
  const double s = g.length_scale(p);
  const Vec df = f.grad(p, s);
  const double nrm = std::sqrt(df.dot(g.value(p).inverse() * df));
  return x.dot(covariant_hessian(g, f, p) * y) / nrm;
}

StaticResidual static_residual(const ScalarField& v, const MetricField& g, double cosmological, const Vec& p) {
  const MetricJet j = g.jet(p, 2);
  const CurvatureData c = curvature(j);
  const double val = v.value(p);
  const Mat hess = covariant_hessian(g, v, p);
  StaticResidual r;
  r.tensor = hess + cosmological * val * j.g - val * c.ricci;
  r.scalar = (j.g.inverse().cwiseProduct(hess)).sum() + cosmological * val;
  return r;
}

StaticResidual boundary_static_residual(const ScalarField& v, const MetricField& g, double lambda,
                                        const HypersurfaceGeometry& geo) {
  StaticResidual r;
  r.tensor = geo.second_form - lambda * geo.gamma;
  const Vec dv = v.grad(geo.point, g.length_scale(geo.point));
  r.scalar = dv.dot(geo.eta) - lambda * v.value(geo.point);
  return r;
}

Mat lie_derivative_metric(const VectorField& x, const MetricField& g, const Vec& p) {
  const MetricJet j = g.jet(p, 1);
  const Vec xv = x.value(p);
  const Mat jac = x.jac(p, g.length_scale(p));
  Mat out = jac.transpose() * j.g + j.g * jac;
  for (int k = 0; k < int(p.size()); ++k) out += xv(k) * j.dg[k];
  return 0.5 * (out + out.transpose());
}

}  // namespace hypmass
