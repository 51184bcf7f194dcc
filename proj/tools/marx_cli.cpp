#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marx/harness.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::vector<int> train_sizes;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_mc, t_test, threads;
  std::string out_path, format, prior;
  std::optional<int> n_y_lags, n_u_lags;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "Config file (JSON or TOML)");
  cmd->add_option("--seed", o.seed, "Master seed for the Monte Carlo runs");
  cmd->add_option("--n-mc", o.n_mc, "Number of Monte Carlo runs");
  cmd->add_option("--train-sizes", o.train_sizes, "Training sizes, ascending")
      ->delimiter(',');
  cmd->add_option("--t-test", o.t_test, "Number of one-step-ahead test steps");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--out", o.out_path, "Output path (default: stdout)");
  cmd->add_option("--format", o.format, "Output format: json or csv");
}

marx::ExperimentConfig build_config(const CliOverrides& o, marx::ExperimentKind kind) {
  marx::ExperimentConfig config;
  if (!o.config_path.empty()) config = marx::load_config_file(o.config_path, config);
  config.kind = kind;
  if (!o.train_sizes.empty()) config.train_sizes = o.train_sizes;
  if (o.seed) config.master_seed = *o.seed;
  if (o.n_mc) config.n_mc = *o.n_mc;
  if (o.t_test) config.t_test = *o.t_test;
  if (o.threads) config.threads = *o.threads;
  if (!o.out_path.empty()) config.out_path = o.out_path;
  if (!o.format.empty()) config.format = o.format;
  if (!o.prior.empty()) {
    config.stream_prior = marx::PriorSpec{};
    config.stream_prior.preset = o.prior;
  }
  if (o.n_y_lags) config.stream_n_y_lags = *o.n_y_lags;
  if (o.n_u_lags) config.stream_n_u_lags = *o.n_u_lags;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive Bayesian MARX estimation experiments"};
  app.require_subcommand(1);

  CliOverrides verify_opts, validate_opts, stream_opts;
  std::string stream_data;

  auto* verify = app.add_subcommand(
      "verify", "Synthetic MARX system: MARX-WI / MARX-UI / RLS comparison");
  add_common_options(verify, verify_opts);

  auto* validate = app.add_subcommand(
      "validate", "Double mass-spring-damper system: MARX vs RLS comparison");
  add_common_options(validate, validate_opts);

  auto* stream = app.add_subcommand("stream", "Run one MARX estimator over a trajectory CSV");
  add_common_options(stream, stream_opts);
  stream->add_option("--data", stream_data, "Trajectory CSV path")->required();
  stream->add_option("--prior", stream_opts.prior, "Prior preset: marx-ui or marx-wi");
  stream->add_option("--n-y-lags", stream_opts.n_y_lags, "Output lag order");
  stream->add_option("--n-u-lags", stream_opts.n_u_lags, "Input lag order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    marx::RunReport report;
    marx::ExperimentConfig config;
    if (verify->parsed()) {
      config = build_config(verify_opts, marx::ExperimentKind::verification);
      report = marx::run_verification(config);
    } else if (validate->parsed()) {
      config = build_config(validate_opts, marx::ExperimentKind::validation);
      report = marx::run_validation(config);
    } else {
      config = build_config(stream_opts, marx::ExperimentKind::stream);
      report = marx::run_stream(config, stream_data);
    }
    marx::write_report(report, config);
    return 0;
  } catch (const marx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const marx::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
