#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "marx/estimator.hpp"
#include "marx/rls.hpp"
#include "marx/simulators.hpp"

namespace marx {

using nlohmann::json;

/// Named prior preset or fully custom matrix-normal-Wishart prior.
/// Presets (for output dimension dy and regressor dimension dx):
///   marx-ui: M0 = 0, Lambda0 = 1e-4 I, Omega0 = 1e-5 I, nu0 = dy + 2
///   marx-wi: M0 = 0, Lambda0 = 1e-1 I, Omega0 = 1e-1 I, nu0 = dy + 2
struct PriorSpec {
  std::string preset = "marx-wi";  // "marx-ui", "marx-wi" or "custom"
  std::optional<MatrixXd> M0, Lambda0, Omega0;
  std::optional<double> nu0;

  MnwBelief build(int dx, int dy) const;  // throws ConfigError on bad preset
};

struct VerificationSimConfig {
  int n_y_lags = 2, n_u_lags = 3, dim_y = 2, dim_u = 2;
  double cutoff_hz = 20.0;
  double sample_rate_hz = 100.0;
  double cross_std = 0.1;
  MatrixXd w_true = (MatrixXd(2, 2) << 300.0, 100.0, 100.0, 200.0).finished();
  InputSignalConfig input;
};

struct ValidationSimConfig {
  MsdParams msd;
  double obs_noise_precision = 1e4;  // scale on the 2x2 identity
  int n_y_lags = 2, n_u_lags = 2;    // fitted model orders; dim_y = dim_u = 2
  InputSignalConfig input;
};

enum class ExperimentKind { verification, validation, stream };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::verification;
  std::vector<int> train_sizes = {2,  4,  6,  8,  10, 12, 14, 16, 18, 20, 22,
                                  24, 26, 28, 30, 32, 34, 36, 38, 40, 42, 44,
                                  46, 48, 50, 52, 54, 56, 58, 60, 62, 64};
  int t_test = 100;
  int n_mc = 600;
  std::uint64_t master_seed = 2025;
  int threads = 0;  // 0 = all hardware threads

  VerificationSimConfig verification;
  ValidationSimConfig validation;

  PriorSpec stream_prior;
  int stream_n_y_lags = 2, stream_n_u_lags = 2;

  std::string out_path;         // empty = stdout
  std::string format = "json";  // "json" or "csv"

  void validate() const;  // throws ConfigError
};

struct TrackedElement {
  int row = 0, col = 0;
};

struct PerRunRecord {
  int run = 0;
  int train_size = 0;
  std::string estimator;
  double rmse = 0.0;
  std::optional<double> frob_A, frob_W;
  std::vector<double> tracked_A_sd;  // MARX estimators only
};

struct Aggregate {
  std::string estimator;
  int train_size = 0;
  double rmse_mean = 0.0, rmse_stderr = 0.0;
  std::optional<double> frob_A_mean, frob_A_stderr, frob_W_mean, frob_W_stderr;
};

struct ElementTrace {
  TrackedElement element;
  std::vector<double> mean;  // posterior mean per training step, averaged over runs
  std::vector<double> sd;    // posterior standard deviation band, averaged over runs
};

struct StreamResult {
  std::vector<VectorXd> predictions;  // one-step-ahead predictive means
  std::vector<double> log_scores;     // per-step predictive log-densities
  double cumulative_log_evidence = 0.0;
  json final_checkpoint;
};

struct RunReport {
  std::string experiment;
  json config_echo;
  long stability_rejections = 0;
  std::vector<Aggregate> aggregates;
  std::vector<PerRunRecord> per_run;
  std::map<std::string, std::vector<double>> mean_log_evidence_trace;
  std::map<std::string, std::vector<ElementTrace>> element_traces_A;
  std::map<std::string, std::vector<ElementTrace>> element_traces_W;
  std::optional<StreamResult> stream;
};

/// Pooled prediction RMSE: sqrt of the mean squared error over all steps and
/// output dimensions. Lengths must match.
double rmse(const std::vector<VectorXd>& predictions, const std::vector<VectorXd>& truths);

double frobenius_distance(const MatrixXd& a, const MatrixXd& b);

RunReport run_verification(const ExperimentConfig& config);
RunReport run_validation(const ExperimentConfig& config);
RunReport run_stream(const ExperimentConfig& config, const std::string& csv_path);

json report_to_json(const RunReport& report);
void validate_report_json(const json& j);  // throws DataError if schema-invalid
std::string report_to_csv(const RunReport& report);
std::vector<PerRunRecord> read_report_csv(std::istream& in);

json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const json& j, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});
json parse_toml_subset(std::istream& in);

/// Writes the report to config.out_path (or stdout) in config.format.
void write_report(const RunReport& report, const ExperimentConfig& config);

}  // namespace marx
