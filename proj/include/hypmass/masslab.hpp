#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypmass/families.hpp"

namespace hypmass::lab {

enum ExitCode { exit_ok = 0, exit_invariant_failure = 1, exit_config_error = 2, exit_non_convergence = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // [run]
  std::string name = "experiment";
  int n = 4;
  unsigned seed = 0;
  int threads = 1;
  std::vector<std::string> tags;
  // [domain]
  std::string domain_kind = "equidistant";  // equidistant | horoball | horoball-complement
  double s = 0.5;
  double chi = 1.0;
  // [perturbation]
  std::string family = "conformal-decay";
  double amplitude = 0.01;
  std::optional<double> decay;  // defaults to n
  double width = 1.0;
  std::string profile = "decaying";  // decaying | compact
  std::vector<double> center;
  // [quadrature]
  QuadratureOrders orders{};
  // [radii]
  double r0 = 2.0;
  int radius_count = 6;
  // [sweep]
  std::string sweep_axis = "sigma";  // sigma | amplitude | radius-order
  std::vector<double> sweep_values;  // empty: axis defaults
  // [verify]
  int normal_sign = 1;
  bool corner = true;
  std::string corner_normal = "domain-outward";  // domain-outward | horospherical
  std::string spinors = "auto";                  // auto | yes | no
  int points = 50;
  // [output]
  std::string out_dir = ".";
  std::string format = "csv";  // csv | json

  double decay_rate() const { return decay.value_or(double(n)); }
  bool has_tag(const std::string& t) const;
  bool divergence_demo() const { return has_tag("divergence-demo"); }
  DomainSpec domain() const;
  FamilyParams family_params() const;
  AsymptoticData data() const;
  MassConventions conventions() const;
  std::vector<double> radii() const;
};

/// INI text with sections [run] [domain] [perturbation] [quadrature] [radii] [sweep] [verify] [output].
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Every field written out, including defaults.
std::string render_config(const ExperimentConfig& cfg);
/// Schema and physics checks; throws ConfigError.
void validate(const ExperimentConfig& cfg);
/// Smallest eigenvalue of b^-1 (b + e) over the sample grid of the radius schedule.
double min_metric_eigenvalue(const ExperimentConfig& cfg);

struct CheckLine {
  std::string suite;
  std::string name;
  std::string anchor;  // statement being checked
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

struct Report {
  std::vector<CheckLine> lines;
  bool passed() const;
  void add(const std::string& suite, const std::string& name, const std::string& anchor, double residual,
           double tolerance);
  /// Adds a line that passes when value > threshold.
  void add_lower(const std::string& suite, const std::string& name, const std::string& anchor, double value,
                 double threshold);
  std::string text() const;
};

Report verify_models(const ExperimentConfig& cfg);
Report verify_tensors(const ExperimentConfig& cfg);
Report verify_spinors(const ExperimentConfig& cfg);  // throws ConfigError for odd n
Report verify_mass(const ExperimentConfig& cfg);
bool spinors_requested(const ExperimentConfig& cfg);

struct RunResult {
  int exit_code = exit_ok;
  std::string summary;             // printed to stdout
  std::vector<std::string> files;  // written artifacts
};

RunResult run_verify(const ExperimentConfig& cfg);
RunResult run_mass(const ExperimentConfig& cfg);
RunResult run_sweep(const ExperimentConfig& cfg);
RunResult run_spinor_check(const ExperimentConfig& cfg);

/// Per-radius table rows: potential index, r, hemisphere, corner, total.
std::string radius_table_csv(const std::vector<MassSeries>& series);

}  // namespace hypmass::lab
