#include "hypmass/masslab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "hypmass/spinors.hpp"

namespace hypmass::lab {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---- text helpers ----

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

long to_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"run", {"name", "n", "seed", "threads", "tags"}},
      {"domain", {"kind", "s", "chi"}},
      {"perturbation", {"family", "amplitude", "decay", "width", "profile", "center"}},
      {"quadrature", {"polar", "azimuthal", "grading"}},
      {"radii", {"r0", "count"}},
      {"sweep", {"axis", "values"}},
      {"verify", {"normal_sign", "corner", "corner_normal", "spinors", "points"}},
      {"output", {"dir", "format"}},
  };
  return s;
}

void require_one_of(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : " | ") + a;
  throw ConfigError(key + ": '" + value + "' is not one of " + list);
}

// ---- random samples ----

Vec gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

Vec unit(std::mt19937_64& rng, int n) {
  const Vec v = gaussian(rng, n);
  return v / v.norm();
}

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

Vec ball_point(std::mt19937_64& rng, int n, double max_radius) {
  return unit(rng, n) * max_radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / n);
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Boost in the (x_0, x_2) plane composed with a rotation of x_2..x_n; fixes x_1.
LorentzIsometry transverse_isometry(std::mt19937_64& rng, int n) {
  const double t = uniform(rng, -0.6, 0.6);
  Mat boost = Mat::Identity(n + 1, n + 1);
  boost(0, 0) = boost(2, 2) = std::cosh(t);
  boost(0, 2) = boost(2, 0) = std::sinh(t);
  Mat a(n - 1, n - 1);
  for (int j = 0; j < n - 1; ++j) a.col(j) = gaussian(rng, n - 1);
  const Mat q = Eigen::HouseholderQR<Mat>(a).householderQ() * Mat::Identity(n - 1, n - 1);
  Mat rot = Mat::Identity(n + 1, n + 1);
  rot.bottomRightCorner(n - 1, n - 1) = q;
  return LorentzIsometry(Mat(boost * rot));
}

std::string domain_label(const DomainSpec& d) { return d.name(); }

void write_file(const fs::path& path, const std::string& text, std::vector<std::string>& files) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  files.push_back(path.string());
}

fs::path output_dir(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
  return dir;
}

json report_json(const Report& r) {
  json lines = json::array();
  for (const auto& l : r.lines)
    lines.push_back({{"suite", l.suite},
                     {"name", l.name},
                     {"anchor", l.anchor},
                     {"residual", l.residual},
                     {"tolerance", l.tolerance},
                     {"passed", l.passed}});
  return {{"passed", r.passed()}, {"checks", lines}};
}

std::string report_csv(const Report& r) {
  std::string out = "suite,name,anchor,residual,tolerance,passed\n";
  for (const auto& l : r.lines)
    out += l.suite + ",\"" + l.name + "\",\"" + l.anchor + "\"," + fmt17(l.residual) + "," + fmt17(l.tolerance) +
           "," + (l.passed ? "1" : "0") + "\n";
  return out;
}

void append(Report& into, const Report& from) { into.lines.insert(into.lines.end(), from.lines.begin(), from.lines.end()); }

}  // namespace

// ---- config ----

bool ExperimentConfig::has_tag(const std::string& t) const { return std::find(tags.begin(), tags.end(), t) != tags.end(); }

DomainSpec ExperimentConfig::domain() const {
  if (domain_kind == "equidistant") return DomainSpec::equidistant(s);
  if (domain_kind == "horoball") return DomainSpec::horoball(chi);
  if (domain_kind == "horoball-complement") return DomainSpec::horoball_complement(chi);
  throw ConfigError("domain.kind: unknown domain '" + domain_kind + "'");
}

FamilyParams ExperimentConfig::family_params() const {
  FamilyParams p;
  p.amplitude = amplitude;
  p.decay = decay_rate();
  p.width = width;
  p.profile = profile == "compact" ? Profile::compact : Profile::decaying;
  if (!center.empty()) p.center = Eigen::Map<const Vec>(center.data(), Eigen::Index(center.size()));
  p.seed = seed;
  return p;
}

AsymptoticData ExperimentConfig::data() const {
  FamilyId id;
  try {
    id = parse_family(family);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("perturbation.family: ") + e.what());
  }
  try {
    return make_family(id, domain(), n, family_params(), r0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("perturbation: ") + e.what());
  }
}

MassConventions ExperimentConfig::conventions() const {
  MassConventions c;
  c.normal_sign = normal_sign;
  c.include_corner = corner;
  c.corner_normal = corner_normal == "horospherical" ? CornerNormal::horospherical : CornerNormal::domain_outward;
  return c;
}

std::vector<double> ExperimentConfig::radii() const { return radius_schedule(r0, radius_count); }

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (body.empty()) throw ConfigError("key '" + section + "' outside of a section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
  }

  ExperimentConfig c;
  auto get = [&](const std::string& key) { return tree.get_optional<std::string>(pt::ptree::path_type(key, '.')); };
  if (auto v = get("run.name")) c.name = trim(*v);
  if (auto v = get("run.n")) c.n = int(to_int("run.n", *v));
  if (auto v = get("run.seed")) {
    const long s = to_int("run.seed", *v);
    if (s < 0) throw ConfigError("run.seed must be non-negative");
    c.seed = unsigned(s);
  }
  if (auto v = get("run.threads")) c.threads = int(to_int("run.threads", *v));
  if (auto v = get("run.tags")) c.tags = split_list(*v);
  if (auto v = get("domain.kind")) c.domain_kind = trim(*v);
  if (auto v = get("domain.s")) c.s = to_double("domain.s", *v);
  if (auto v = get("domain.chi")) c.chi = to_double("domain.chi", *v);
  if (auto v = get("perturbation.family")) c.family = trim(*v);
  if (auto v = get("perturbation.amplitude")) c.amplitude = to_double("perturbation.amplitude", *v);
  if (auto v = get("perturbation.decay")) c.decay = to_double("perturbation.decay", *v);
  if (auto v = get("perturbation.width")) c.width = to_double("perturbation.width", *v);
  if (auto v = get("perturbation.profile")) c.profile = trim(*v);
  if (auto v = get("perturbation.center")) {
    c.center.clear();
    for (const auto& item : split_list(*v)) c.center.push_back(to_double("perturbation.center", item));
  }
  if (auto v = get("quadrature.polar")) c.orders.polar = int(to_int("quadrature.polar", *v));
  if (auto v = get("quadrature.azimuthal")) c.orders.azimuthal = int(to_int("quadrature.azimuthal", *v));
  if (auto v = get("quadrature.grading")) c.orders.grading = int(to_int("quadrature.grading", *v));
  if (auto v = get("radii.r0")) c.r0 = to_double("radii.r0", *v);
  if (auto v = get("radii.count")) c.radius_count = int(to_int("radii.count", *v));
  if (auto v = get("sweep.axis")) c.sweep_axis = trim(*v);
  if (auto v = get("sweep.values")) {
    c.sweep_values.clear();
    for (const auto& item : split_list(*v)) c.sweep_values.push_back(to_double("sweep.values", item));
  }
  if (auto v = get("verify.normal_sign")) c.normal_sign = int(to_int("verify.normal_sign", *v));
  if (auto v = get("verify.corner")) c.corner = to_bool("verify.corner", *v);
  if (auto v = get("verify.corner_normal")) c.corner_normal = trim(*v);
  if (auto v = get("verify.spinors")) c.spinors = trim(*v);
  if (auto v = get("verify.points")) c.points = int(to_int("verify.points", *v));
  if (auto v = get("output.dir")) c.out_dir = trim(*v);
  if (auto v = get("output.format")) c.format = trim(*v);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  std::string tags;
  for (const auto& t : c.tags) tags += (tags.empty() ? "" : ", ") + t;
  o << "[run]\n"
    << "name = " << c.name << "\n"
    << "n = " << c.n << "\n"
    << "seed = " << c.seed << "\n"
    << "threads = " << c.threads << "\n"
    << "tags = " << tags << "\n\n"
    << "[domain]\n"
    << "kind = " << c.domain_kind << "\n"
    << "s = " << fmt(c.s) << "\n"
    << "chi = " << fmt(c.chi) << "\n\n"
    << "[perturbation]\n"
    << "family = " << c.family << "\n"
    << "amplitude = " << fmt(c.amplitude) << "\n"
    << "decay = " << fmt(c.decay_rate()) << "\n"
    << "width = " << fmt(c.width) << "\n"
    << "profile = " << c.profile << "\n"
    << "center = " << join(c.center) << "\n\n"
    << "[quadrature]\n"
    << "polar = " << c.orders.polar << "\n"
    << "azimuthal = " << c.orders.azimuthal << "\n"
    << "grading = " << c.orders.grading << "\n\n"
    << "[radii]\n"
    << "r0 = " << fmt(c.r0) << "\n"
    << "count = " << c.radius_count << "\n\n"
    << "[sweep]\n"
    << "axis = " << c.sweep_axis << "\n"
    << "values = " << join(c.sweep_values) << "\n\n"
    << "[verify]\n"
    << "normal_sign = " << c.normal_sign << "\n"
    << "corner = " << (c.corner ? "true" : "false") << "\n"
    << "corner_normal = " << c.corner_normal << "\n"
    << "spinors = " << c.spinors << "\n"
    << "points = " << c.points << "\n\n"
    << "[output]\n"
    << "dir = " << c.out_dir << "\n"
    << "format = " << c.format << "\n";
  return o.str();
}

double min_metric_eigenvalue(const ExperimentConfig& cfg) {
  const AsymptoticData data = cfg.data();
  if (data.is_zero()) return 1.0;
  const DomainSpec d = cfg.domain();
  const MetricField b = MetricField::model(d.chart(), cfg.n);
  double lo = 1.0;
  auto visit = [&](const Vec& p) {
    const Mat bp = b.value(p);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Mat(bp + data.value(p)), bp, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  };
  visit(base_point(d, cfg.n));
  visit(boundary_base_point(d, cfg.n));
  std::vector<double> radii = cfg.radii();
  // the bump family lives near the boundary base point, inside the first radius
  for (double f : {0.25, 0.5, 0.75}) radii.push_back(f * cfg.r0);
  for (double r : radii) {
    if (d.kind() == DomainKind::equidistant && r <= 1.05 * std::abs(d.s())) continue;
    const QuadratureRule rule = build_rule(d, cfg.n, r, {6, 8});
    for (const Vec& p : rule.points) visit(p);
    for (const Vec& p : rule.corner_points) visit(p);
  }
  return lo;
}

void validate(const ExperimentConfig& c) {
  if (c.n < 2) throw ConfigError("run.n must be at least 2");
  if (c.n > 8) throw ConfigError("run.n above 8 is not supported");
  if (c.threads < 1) throw ConfigError("run.threads must be positive");
  require_one_of("domain.kind", c.domain_kind, {"equidistant", "horoball", "horoball-complement"});
  if (c.domain_kind != "equidistant" && !(c.chi > 0.0)) throw ConfigError("domain.chi must be positive");
  require_one_of("perturbation.family", c.family,
                 {"conformal-decay", "transverse-traceless-decay", "compact-bump", "boundary-graph", "lie-gauge"});
  require_one_of("perturbation.profile", c.profile, {"decaying", "compact"});
  require_one_of("sweep.axis", c.sweep_axis, {"sigma", "amplitude", "radius-order"});
  require_one_of("verify.corner_normal", c.corner_normal, {"domain-outward", "horospherical"});
  require_one_of("verify.spinors", c.spinors, {"auto", "yes", "no"});
  require_one_of("output.format", c.format, {"csv", "json"});
  if (c.normal_sign != 1 && c.normal_sign != -1) throw ConfigError("verify.normal_sign must be 1 or -1");
  if (c.points < 1) throw ConfigError("verify.points must be positive");
  if (c.orders.polar < 2 || c.orders.azimuthal < 2) throw ConfigError("quadrature orders must be at least 2");
  if (!(c.r0 > 0.0)) throw ConfigError("radii.r0 must be positive");
  if (c.radius_count < 3 || c.radius_count > 8) throw ConfigError("radii.count must lie in 3..8");
  if (!(c.width > 0.0)) throw ConfigError("perturbation.width must be positive");
  if (!c.center.empty() && int(c.center.size()) != c.n - 1)
    throw ConfigError("perturbation.center needs n-1 = " + std::to_string(c.n - 1) + " entries");
  if (c.spinors == "yes" && c.n % 2 != 0) throw ConfigError("spinors require even n");

  const bool compact = c.family == "compact-bump" || c.profile == "compact";
  if (!compact && !c.divergence_demo() && !(c.decay_rate() > 0.5 * c.n))
    throw ConfigError("perturbation.decay = " + fmt(c.decay_rate()) + " must exceed n/2 = " + fmt(0.5 * c.n) +
                      " (tag the run divergence-demo to allow it)");
  if (!compact && !(c.decay_rate() > 0.0)) throw ConfigError("perturbation.decay must be positive");

  const double lo = min_metric_eigenvalue(c);
  if (!(lo > 0.0))
    throw ConfigError("amplitude too large: g = b + e is not positive definite on the sample grid (eigenvalue " +
                      sci(lo) + ")");
}

// ---- reports ----

bool Report::passed() const {
  return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.passed; });
}

void Report::add(const std::string& suite, const std::string& name, const std::string& anchor, double residual,
                 double tolerance) {
  lines.push_back({suite, name, anchor, residual, tolerance, std::isfinite(residual) && residual < tolerance});
}

void Report::add_lower(const std::string& suite, const std::string& name, const std::string& anchor, double value,
                       double threshold) {
  lines.push_back({suite, name, anchor, value, threshold, std::isfinite(value) && value > threshold});
}

std::string Report::text() const {
  std::string out;
  for (const auto& l : lines)
    out += std::string(l.passed ? "PASS" : "FAIL") + "  " + l.suite + " | " + l.name + " | residual " +
           sci(l.residual) + " tol " + sci(l.tolerance) + " | " + l.anchor + "\n";
  return out;
}

// ---- invariant suites ----

Report verify_models(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  std::mt19937_64 rng(cfg.seed);
  Report r;
  const Chart charts[] = {Chart::hyperboloid, Chart::ball, Chart::half_space};
  double trip = 0.0, half = 0.0, agree = 0.0;
  for (int k = 0; k < cfg.points; ++k) {
    const ModelPoint b{Chart::ball, ball_point(rng, n, 0.95)};
    for (Chart c1 : charts) {
      const ModelPoint p = convert(b, c1);
      for (Chart c2 : charts) {
        const ModelPoint back = convert(convert(p, c2), c1);
        trip = std::max(trip, max_abs(back.coords - p.coords) / std::max(1.0, max_abs(p.coords)));
      }
    }
    const Vec z = convert(b, Chart::half_space).coords;
    half = std::max(half, std::abs(eval_potential(StaticPotential::horospherical(n), {Chart::half_space, z}) -
                                   1.0 / z(0)) * z(0));
    for (int j = 2; j <= n; ++j)
      half = std::max(half, std::abs(eval_potential(StaticPotential::basis(n, j), {Chart::half_space, z}) -
                                     z(j - 1) / z(0)) /
                                std::max(1.0, std::abs(z(j - 1) / z(0))));
    for (int i = 0; i <= n; ++i) {
      const StaticPotential v = StaticPotential::basis(n, i);
      const double vb = eval_potential(v, b);
      agree = std::max(agree, std::abs(vb - eval_potential(v, convert(b, Chart::half_space))) /
                                  std::max(1.0, std::abs(vb)));
    }
  }
  r.add("models", "chart round trips", "hyperboloid, ball and half-space charts are mutually inverse", trip, 1e-10);
  r.add("models", "half-space potentials", "V_h = 1/z_1 and V_(j) = z_j/z_1 on the upper half-space", half, 1e-10);
  r.add("models", "potentials agree across charts", "static potentials are chart-independent functions", agree,
        1e-10);

  double lorentz = 0.0, rho = 0.0;
  for (int k = 0; k < 10; ++k) {
    const LorentzIsometry a = transverse_isometry(rng, n);
    lorentz = std::max(lorentz, lorentz_defect(a.matrix));
    ParabolicElement par = ParabolicElement::identity(n);
    par.boost = uniform(rng, -0.5, 0.5);
    par.translation = gaussian(rng, n - 1);
    lorentz = std::max(lorentz, lorentz_defect(par.assemble().matrix));
    // rho_A V = V o A^-1, checked pointwise
    const StaticPotential v{gaussian(rng, n + 1)};
    StaticPotential vv = v;
    vv.coeffs(1) = 0.0;
    const StaticPotential moved = rho_action(a, vv, PotentialVariant::equidistant);
    const LorentzIsometry inv(a.inverse());
    for (int m = 0; m < 5; ++m) {
      const ModelPoint p{Chart::ball, ball_point(rng, n, 0.9)};
      const double lhs = eval_potential(moved, p);
      const double rhs = eval_potential(vv, apply_isometry(inv, p));
      rho = std::max(rho, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
  }
  r.add("models", "Lorentz isometries", "transverse boosts and parabolic elements preserve the Minkowski form",
        lorentz, 1e-12);
  r.add("models", "potential representation", "rho_A V = V o A^-1 on the transverse potentials", rho, 1e-9);
  return r;
}

Report verify_tensors(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  std::mt19937_64 rng(cfg.seed + 1);
  const Conventions conv{cfg.normal_sign};
  Report r;

  const MetricField bb = MetricField::model(Chart::ball, n);
  double grad = 0.0, umbilic = 0.0, mean = 0.0, robin = 0.0;
  for (double s : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const DomainSpec d = DomainSpec::equidistant(s);
    const ScalarField f = potential_field(d.defining_potential(n), Chart::ball);
    for (int k = 0; k < cfg.points; ++k) {
      const Vec y = to_ball(d.boundary_point(1.5 * gaussian(rng, n - 1)));
      const HypersurfaceGeometry geo = hypersurface_geometry(bb, f, d.level(), y, conv);
      grad = std::max(grad, std::abs(geo.grad_norm - std::sqrt(1 + s * s)));
      umbilic = std::max(umbilic, max_abs(geo.second_form - d.lambda() * geo.gamma) / std::max(1.0, max_abs(geo.gamma)));
      mean = std::max(mean, std::abs(geo.mean_curvature - (n - 1) * d.lambda()));
      for (int i = 0; i <= n; ++i) {
        if (i == 1) continue;
        const ScalarField v = potential_field(StaticPotential::basis(n, i), Chart::ball);
        const StaticResidual res = boundary_static_residual(v, bb, d.lambda(), geo);
        robin = std::max(robin, std::abs(res.scalar) / std::max(1.0, std::abs(v.value(y))));
      }
    }
  }
  r.add("tensors", "gradient of the height potential", "|grad V_(1)| = sqrt(1 + s^2) on the equidistant boundary",
        grad, 1e-6);
  r.add("tensors", "umbilic check", "second fundamental form of the equidistant boundary equals lambda_s gamma",
        umbilic, 1e-6);
  r.add("tensors", "mean curvature", "H = (n-1) lambda_s on the equidistant boundary", mean, 1e-6);
  r.add("tensors", "Robin condition", "dV_(i)/d eta = lambda_s V_(i) on the equidistant boundary, i != 1", robin,
        1e-6);

  const MetricField bh = MetricField::model(Chart::half_space, n);
  const ScalarField fh = potential_field(StaticPotential::horospherical(n), Chart::half_space);
  double shape = 0.0, hmean = 0.0, hrobin = 0.0;
  for (int k = 0; k < cfg.points; ++k) {
    Vec z(n);
    z(0) = 1.0 / cfg.chi;
    z.tail(n - 1) = 1.5 * gaussian(rng, n - 1);
    const HypersurfaceGeometry geo = hypersurface_geometry(bh, fh, cfg.chi, z, conv);
    shape = std::max(shape, max_abs(geo.second_form - geo.gamma) / max_abs(geo.gamma));
    hmean = std::max(hmean, std::abs(geo.mean_curvature - (n - 1)));
    hrobin = std::max(hrobin, std::abs(boundary_static_residual(fh, bh, 1.0, geo).scalar) / fh.value(z));
  }
  r.add("tensors", "horosphere shape operator", "nabla_X eta = X on the horosphere", shape, 1e-6);
  r.add("tensors", "horosphere mean curvature", "H = n - 1 on the horosphere", hmean, 1e-6);
  r.add("tensors", "horospherical Robin condition", "dV_h/d eta = V_h on the horosphere", hrobin, 1e-6);

  double ricci = 0.0, scalar = 0.0, stat = 0.0;
  for (int k = 0; k < std::min(cfg.points, 20); ++k) {
    const Vec y = ball_point(rng, n, 0.8);
    const CurvatureData c = curvature(bb, y);
    const Mat by = bb.value(y);
    ricci = std::max(ricci, max_abs(c.ricci + (n - 1) * by) / max_abs(by));
    scalar = std::max(scalar, std::abs(c.scalar + n * (n - 1.0)));
    for (int i = 0; i <= n; ++i) {
      const ScalarField v = potential_field(StaticPotential::basis(n, i), Chart::ball);
      const StaticResidual res = static_residual(v, bb, -n, y);
      stat = std::max(stat, max_abs(res.tensor) / (std::max(1.0, std::abs(v.value(y))) * max_abs(by)));
    }
  }
  r.add("tensors", "model Ricci tensor", "Ric_b = -(n-1) b", ricci, 1e-8);
  r.add("tensors", "model scalar curvature", "R_b = -n(n-1)", scalar, 1e-8);
  r.add("tensors", "static equations", "Hess V - V Ric - Delta V b = 0 for the hyperboloid coordinate potentials", stat,
        1e-8);
  return r;
}

bool spinors_requested(const ExperimentConfig& cfg) {
  if (cfg.spinors == "yes") return true;
  if (cfg.spinors == "no") return false;
  return cfg.n % 2 == 0;
}

Report verify_spinors(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  if (n % 2 != 0) throw ConfigError("spinors require even n");
  std::mt19937_64 rng(cfg.seed + 2);
  const CliffordRep rep = CliffordRep::build(n);
  Report r;

  double alg = 0.0, block = 0.0;
  for (int k = 0; k < cfg.points; ++k) {
    const double th = uniform(rng, -M_PI / 2, M_PI / 2);
    const Vec nu = unit(rng, n);
    alg = std::max(alg, verify_alg_form(rep, th, nu).max());
    block = std::max(block, block_formula_defect(rep, th, nu));
  }
  r.add("spinors", "Clifford relations", "c(e_i)c(e_j) + c(e_j)c(e_i) = -2 delta_ij, chirality squares to one",
        rep.invariant_defect(), 1e-12);
  r.add("spinors", "theta boundary operator",
        "Q_theta is a self-adjoint involution anticommuting with omega, c(X)c(nu) and c(nu) up to 2 tau i", alg, 1e-12);
  r.add("spinors", "chiral block formula", "Q_theta swaps the chiral halves with phases -i e^{i theta}, i e^{-i theta}",
        block, 1e-12);

  const size_t expected = size_t(1) << (n / 2 - 1);
  const DomainSpec domains[] = {cfg.domain_kind == "equidistant" ? cfg.domain() : DomainSpec::equidistant(0.5),
                                DomainSpec::equidistant(-1.0), DomainSpec::horoball(cfg.chi),
                                DomainSpec::horoball_complement(cfg.chi)};
  double count = 0.0, killing = 0.0, bc = 0.0, qconst = 0.0, stat = 0.0, height = 0.0, horo = 0.0;
  double w_grad = 0.0, w_scalar = 0.0, w_bdy = 0.0, w_op = 0.0;
  const MetricField bb = MetricField::model(Chart::ball, n);
  const int samples = std::min(cfg.points, 20);
  for (const DomainSpec& d : domains) {
    const bool equi = d.kind() == DomainKind::equidistant;
    for (KillingSign sign : {KillingSign::plus, KillingSign::minus}) {
      const auto basis = killing_space_basis(rep, d, sign);
      count = std::max(count, std::abs(double(basis.size()) - double(expected)));
      for (const auto& seed : basis) {
        double q0 = 0.0;
        for (int k = 0; k < samples; ++k) {
          const Vec y = ball_point(rng, n, 0.9);
          const Vec yb = to_ball(d.boundary_point(gaussian(rng, n - 1)));
          killing = std::max(killing, killing_residual(rep, seed, y));
          bc = std::max(bc, boundary_condition_residual(rep, d, seed, yb));
          const double q = q_invariant(rep, killing_spinor(rep, seed, y));
          if (k == 0) q0 = q;
          qconst = std::max(qconst, std::abs(q - q0) / std::max(1.0, std::abs(q0)));
          const WittenIntegrands w = witten_integrands(rep, d, seed, y, yb);
          w_grad = std::max(w_grad, w.gradient);
          w_scalar = std::max(w_scalar, std::abs(w.scalar));
          w_bdy = std::max(w_bdy, std::abs(w.boundary));
          w_op = std::max(w_op, witten_boundary_residual(rep, d, seed, yb));
        }
        const StaticPotential v = v_phi_coefficients(rep, seed);
        const ScalarField f = potential_field(v, Chart::ball);
        for (int k = 0; k < 5; ++k) {
          const Vec y = ball_point(rng, n, 0.8);
          const StaticResidual res = static_residual(f, bb, -n, y);
          stat = std::max(stat, max_abs(res.tensor) / (std::max(1.0, f.value(y)) * max_abs(bb.value(y))));
        }
        if (equi) {
          height = std::max(height, std::abs(v.coeffs(1)));
        } else {
          horo = std::max(horo, std::abs(v.coeffs(0) + v.coeffs(1)));
          horo = std::max(horo, v.coeffs.tail(n - 1).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  r.add("spinors", "Killing spinor space dimension", "compatible imaginary Killing spinors form a 2^(n/2-1) space",
        count, 0.5);
  r.add("spinors", "Killing equation", "nabla_X Phi +- (i/2) c(X) Phi = 0", killing, 1e-5);
  r.add("spinors", "boundary condition", "Q_theta Phi = +-Phi on the boundary", bc, 1e-8);
  r.add("spinors", "q invariant", "|Phi|^4 + sum <c(e_a)Phi, Phi>^2 is constant", qconst, 1e-8);
  r.add("spinors", "squared norm is static", "|Phi|^2 is a static potential", stat, 1e-5);
  r.add("spinors", "no height component", "|Phi|^2 has no V_(1) component for equidistant boundaries", height, 1e-8);
  r.add("spinors", "MIT bag potential", "|Phi|^2 is a positive multiple of V_h under the MIT bag condition", horo,
        1e-8);
  r.add("spinors", "Witten gradient density", "|nabla^+- Phi|^2 vanishes for model Killing spinors", w_grad, 1e-5);
  r.add("spinors", "Witten scalar density", "(R + n(n-1))/4 |Phi|^2 vanishes on the model", w_scalar, 1e-5);
  r.add("spinors", "Witten boundary density", "(H - (n-1) lambda)/2 |Phi|^2 vanishes on the model boundary", w_bdy,
        1e-5);
  r.add("spinors", "Witten boundary operator", "(nabla^+-_nu + c(nu) D^+-) Phi = 0 on the boundary", w_op, 1e-5);
  return r;
}

Report verify_mass(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  const DomainSpec d = cfg.domain();
  const MassConventions conv = cfg.conventions();
  Report r;

  const double rr = 2.0 * cfg.r0;
  const QuadratureRule rule = build_rule(d, n, rr, cfg.orders);
  double area = 0.0, corner = 0.0;
  for (double w : rule.weights) area += w;
  for (double w : rule.corner_weights) corner += w;
  const double ea = exact_hemisphere_area(d, n, rr), ec = exact_corner_area(d, n, rr);
  r.add("mass", "hemisphere area", "quadrature integrates 1 over the hemisphere", std::abs(area - ea) / ea, 1e-8);
  r.add("mass", "corner area", "quadrature integrates 1 over the corner sphere",
        ec > 0 ? std::abs(corner - ec) / ec : std::abs(corner), 1e-8);

  AsymptoticData zero;
  zero.domain = d;
  zero.n = n;
  double z = 0.0;
  for (const auto& row : mass_at_radius(zero, mass_basis(d, n), rr, cfg.orders, conv))
    z = std::max({z, std::abs(row.hemisphere), std::abs(row.corner), std::abs(row.total)});
  r.add("mass", "zero perturbation", "e = 0 gives exact zero rows", z, 1e-300);

  // The hemisphere flux of a gauge perturbation equals the corner flux at every radius.
  FamilyParams gp;
  gp.amplitude = 0.05;
  gp.decay = 2.0;
  gp.seed = cfg.seed;
  const AsymptoticData gauge = make_family(FamilyId::lie_gauge, d, n, gp, cfg.r0);
  double stokes = 0.0, scale = 0.0;
  for (double radius : {cfg.r0, rr})
    for (const auto& row : mass_at_radius(gauge, mass_basis(d, n), radius, cfg.orders, conv)) {
      stokes = std::max(stokes, std::abs(row.total));
      scale = std::max(scale, std::abs(row.hemisphere));
    }
  r.add("mass", "sign audit", "gauge flux through the hemisphere cancels the corner flux (normals mu, vartheta, eta)",
        stokes / std::max(scale, 1e-12), 1e-8);

  if (d.kind() != DomainKind::equidistant) {
    std::mt19937_64 rng(cfg.seed + 3);
    double tang = 0.0;
    for (int k = 0; k < cfg.points; ++k) {
      Vec p(n);
      p(0) = 1.0 / d.chi();
      p.tail(n - 1) = 1.5 * gaussian(rng, n - 1);
      Vec x = chai_field(ChaiField::mass, 0, p);
      tang = std::max(tang, std::abs(x(0)) / x.norm());
      for (int a = 2; a <= n; ++a) {
        x = chai_field(ChaiField::center, a, p);
        tang = std::max(tang, std::abs(x(0)) / x.norm());
      }
    }
    r.add("mass", "conformal fields tangent to the horosphere", "X and X_a stay tangent to the horosphere", tang,
          1e-10);
  }

  const EnergyScan scan = energy_scan(zero, cfg.r0, 4.0 * cfg.r0, 3, 20, 100, cfg.seed, Conventions{cfg.normal_sign});
  r.add("mass", "model energy margins", "R + n(n-1) = 0 and H - (n-1) lambda = 0 for the model",
        std::max(std::abs(scan.scalar_margin), std::abs(scan.boundary_margin)), 1e-5);
  return r;
}

// ---- runners ----

std::string radius_table_csv(const std::vector<MassSeries>& series) {
  std::string out = "potential,r,hemisphere,corner,total\n";
  for (size_t a = 0; a < series.size(); ++a)
    for (const auto& row : series[a].rows)
      out += std::to_string(a) + "," + fmt17(row.r) + "," + fmt17(row.hemisphere) + "," + fmt17(row.corner) + "," +
             fmt17(row.total) + "\n";
  return out;
}

namespace {

json radius_table_json(const std::vector<MassSeries>& series) {
  json rows = json::array();
  for (size_t a = 0; a < series.size(); ++a)
    for (const auto& row : series[a].rows)
      rows.push_back({{"potential", a},
                      {"r", row.r},
                      {"hemisphere", row.hemisphere},
                      {"corner", row.corner},
                      {"total", row.total}});
  return rows;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> component_names(const DomainSpec& d, int n) {
  std::vector<std::string> out;
  out.push_back(d.kind() == DomainKind::equidistant ? "P0" : "m_h");
  for (int a = 2; a <= n; ++a) out.push_back((d.kind() == DomainKind::equidistant ? "P" : "C") + std::to_string(a));
  return out;
}

MassVector collect(const DomainSpec& d, const std::vector<MassSeries>& series) {
  MassVector out;
  out.components.resize(Eigen::Index(series.size()));
  out.errors.resize(Eigen::Index(series.size()));
  for (size_t a = 0; a < series.size(); ++a) {
    out.components(Eigen::Index(a)) = series[a].limit.value;
    out.errors(Eigen::Index(a)) = series[a].limit.error;
    out.converged = out.converged && series[a].limit.converged;
  }
  if (d.kind() == DomainKind::equidistant) out.classification = classify(out.components, 1e-6);
  return out;
}

}  // namespace

RunResult run_verify(const ExperimentConfig& cfg) {
  validate(cfg);
  set_worker_threads(cfg.threads);
  Report all;
  append(all, verify_models(cfg));
  append(all, verify_tensors(cfg));
  if (spinors_requested(cfg)) append(all, verify_spinors(cfg));
  append(all, verify_mass(cfg));

  RunResult out;
  const fs::path dir = output_dir(cfg);
  if (cfg.format == "json")
    write_file(dir / "verify.json", dump(report_json(all)), out.files);
  else
    write_file(dir / "verify.csv", report_csv(all), out.files);
  out.summary = all.text() + (all.passed() ? "all invariants hold\n" : "invariant failures\n");
  out.exit_code = all.passed() ? exit_ok : exit_invariant_failure;
  return out;
}

RunResult run_mass(const ExperimentConfig& cfg) {
  validate(cfg);
  set_worker_threads(cfg.threads);
  const DomainSpec d = cfg.domain();
  const AsymptoticData data = cfg.data();
  const auto radii = cfg.radii();
  const auto series = mass_series(data, mass_basis(d, cfg.n), radii, cfg.orders, cfg.conventions());
  const MassVector p = collect(d, series);
  const auto names = component_names(d, cfg.n);

  json summary;
  summary["name"] = cfg.name;
  summary["n"] = cfg.n;
  summary["domain"] = domain_label(d);
  summary["family"] = cfg.family;
  summary["amplitude"] = cfg.amplitude;
  summary["decay"] = cfg.decay_rate();
  summary["radii"] = radii;
  json comps = json::object(), errs = json::object();
  for (size_t a = 0; a < names.size(); ++a) {
    comps[names[a]] = p.components(Eigen::Index(a));
    errs[names[a]] = p.errors(Eigen::Index(a));
  }
  summary["components"] = comps;
  summary["errors"] = errs;
  summary["converged"] = p.converged;
  if (d.kind() == DomainKind::equidistant) {
    summary["classification"] = p.classification;
    summary["lorentz_norm"] = lorentz_norm(p);
  } else {
    summary["horospherical_mass"] = p.components(0);
    summary["center"] = std::vector<double>(p.components.data() + 1, p.components.data() + p.components.size());
  }

  const double r_last = radii.back();
  const EnergyScan scan = energy_scan(data, cfg.r0, r_last, 6, 60, 400, cfg.seed, Conventions{cfg.normal_sign});
  summary["energy_scan"] = {{"scalar_margin", scan.scalar_margin},
                            {"boundary_margin", scan.boundary_margin},
                            {"scalar_decay", scan.scalar_decay},
                            {"boundary_decay", scan.boundary_decay},
                            {"interior_samples", scan.interior_samples},
                            {"boundary_samples", scan.boundary_samples}};
  const bool violates = scan.scalar_margin < -1e-8 || scan.boundary_margin < -1e-8;
  summary["energy_conditions_hold"] = !violates;
  summary["note"] = "mass values are reported as computed; no positivity is claimed";

  RunResult out;
  const fs::path dir = output_dir(cfg);
  if (cfg.format == "json")
    write_file(dir / "radii.json", dump(radius_table_json(series)), out.files);
  else
    write_file(dir / "radii.csv", radius_table_csv(series), out.files);
  write_file(dir / "summary.json", dump(summary), out.files);
  write_file(dir / "config.ini", render_config(cfg), out.files);

  std::ostringstream s;
  for (size_t a = 0; a < names.size(); ++a)
    s << names[a] << " = " << fmt17(p.components(Eigen::Index(a))) << "  (+- " << sci(p.errors(Eigen::Index(a)))
      << ")\n";
  if (d.kind() == DomainKind::equidistant)
    s << "classification: " << p.classification << ", Lorentz norm " << fmt17(lorentz_norm(p)) << "\n";
  s << "energy scan: min R + n(n-1) = " << sci(scan.scalar_margin) << ", min H - (n-1)lambda = "
    << sci(scan.boundary_margin) << (violates ? "  (energy conditions violated; mass sign carries no positivity claim)"
                                              : "")
    << "\n";
  if (!p.converged) s << "NOT CONVERGED: the radius sequence did not settle\n";
  out.summary = s.str();
  out.exit_code = p.converged ? exit_ok : exit_non_convergence;
  return out;
}

RunResult run_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  set_worker_threads(cfg.threads);
  std::vector<double> values = cfg.sweep_values;
  if (values.empty()) {
    if (cfg.sweep_axis == "sigma")
      values = {0.5 * cfg.n + 0.1, double(cfg.n), cfg.n + 1.0};
    else if (cfg.sweep_axis == "amplitude")
      values = {0.25 * cfg.amplitude, 0.5 * cfg.amplitude, cfg.amplitude, 2.0 * cfg.amplitude};
    else
      values = {4, 6, 8, 12, 16};
  }
  const DomainSpec d = cfg.domain();
  const auto names = component_names(d, cfg.n);

  struct Point {
    double value;
    MassVector p;
    std::vector<MassSeries> series;
  };
  std::vector<Point> points;
  for (double v : values) {
    ExperimentConfig c = cfg;
    if (cfg.sweep_axis == "sigma") c.decay = v;
    if (cfg.sweep_axis == "amplitude") c.amplitude = v;
    if (cfg.sweep_axis == "radius-order") {
      if (v < 2 || v != std::floor(v)) throw ConfigError("radius-order sweep values must be integers >= 2");
      c.orders.polar = int(v);
      c.orders.azimuthal = int(std::lround(v * 4.0 / 3.0));
    }
    validate(c);
    auto series = mass_series(c.data(), mass_basis(d, c.n), c.radii(), c.orders, c.conventions());
    MassVector p = collect(d, series);
    points.push_back({v, p, std::move(series)});
  }

  std::string header = cfg.sweep_axis;
  for (const auto& nm : names) header += "," + nm;
  for (const auto& nm : names) header += ",err_" + nm;
  header += ",magnitude,converged,extra";
  json rows = json::array();
  std::string csv = header + "\n";
  for (size_t k = 0; k < points.size(); ++k) {
    const Point& pt = points[k];
    double extra = 0.0;
    if (cfg.sweep_axis == "amplitude") {
      // departure from linear scaling, relative to the smallest amplitude
      const Point& ref = points.front();
      extra = ref.value != 0.0
                  ? (pt.p.components - pt.value / ref.value * ref.p.components).cwiseAbs().maxCoeff()
                  : 0.0;
    } else if (cfg.sweep_axis == "radius-order") {
      // quadrature error against the finest order, radius by radius
      const Point& best = points.back();
      for (size_t a = 0; a < pt.series.size(); ++a)
        for (size_t i = 0; i < pt.series[a].rows.size(); ++i)
          extra = std::max(extra, std::abs(pt.series[a].rows[i].total - best.series[a].rows[i].total));
    } else {
      extra = pt.p.errors.cwiseAbs().maxCoeff();
    }
    std::string line = fmt17(pt.value);
    for (Eigen::Index a = 0; a < pt.p.components.size(); ++a) line += "," + fmt17(pt.p.components(a));
    for (Eigen::Index a = 0; a < pt.p.errors.size(); ++a) line += "," + fmt17(pt.p.errors(a));
    const double mag = pt.p.components.cwiseAbs().maxCoeff();
    line += "," + fmt17(mag) + "," + (pt.p.converged ? "1" : "0") + "," + fmt17(extra);
    csv += line + "\n";
    rows.push_back({{cfg.sweep_axis, pt.value},
                    {"components", std::vector<double>(pt.p.components.data(),
                                                       pt.p.components.data() + pt.p.components.size())},
                    {"errors", std::vector<double>(pt.p.errors.data(), pt.p.errors.data() + pt.p.errors.size())},
                    {"magnitude", mag},
                    {"converged", pt.p.converged},
                    {"extra", extra}});
  }

  RunResult out;
  const fs::path dir = output_dir(cfg);
  const std::string stem = "sweep_" + cfg.sweep_axis;
  if (cfg.format == "json")
    write_file(dir / (stem + ".json"), dump(rows), out.files);
  else
    write_file(dir / (stem + ".csv"), csv, out.files);
  write_file(dir / "config.ini", render_config(cfg), out.files);
  out.summary = csv;
  return out;
}

RunResult run_spinor_check(const ExperimentConfig& cfg) {
  if (cfg.n % 2 != 0) throw ConfigError("spinors require even n");
  validate(cfg);
  const Report rep = verify_spinors(cfg);

  const CliffordRep cl = CliffordRep::build(cfg.n);
  const DomainSpec d = cfg.domain();
  std::string csv = "sign,index";
  for (int i = 0; i <= cfg.n; ++i) csv += ",V" + std::to_string(i);
  csv += "\n";
  for (KillingSign sign : {KillingSign::plus, KillingSign::minus}) {
    const auto basis = killing_space_basis(cl, d, sign);
    for (size_t k = 0; k < basis.size(); ++k) {
      const StaticPotential v = v_phi_coefficients(cl, basis[k]);
      csv += std::string(sign == KillingSign::plus ? "+" : "-") + "," + std::to_string(k);
      for (Eigen::Index i = 0; i < v.coeffs.size(); ++i) csv += "," + fmt17(v.coeffs(i));
      csv += "\n";
    }
  }

  RunResult out;
  const fs::path dir = output_dir(cfg);
  if (cfg.format == "json")
    write_file(dir / "spinors.json", dump(report_json(rep)), out.files);
  else
    write_file(dir / "spinors.csv", report_csv(rep), out.files);
  write_file(dir / "killing_potentials.csv", csv, out.files);
  out.summary = rep.text();
  out.exit_code = rep.passed() ? exit_ok : exit_invariant_failure;
  return out;
}

}  // namespace hypmass::lab
