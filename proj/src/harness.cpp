#include "marx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "marx/checkpoint.hpp"

namespace marx {

namespace {

constexpr int kSchemaVersion = 1;

const std::vector<TrackedElement> kTrackedA = {{0, 0}, {1, 0}};
const std::vector<TrackedElement> kTrackedW = {{0, 0}, {0, 1}};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

double sample_stderr(const std::vector<double>& values, double mean) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

double sample_mean(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

void parallel_runs(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

MnwBelief PriorSpec::build(int dx, int dy) const {
  MnwBelief belief;
  if (preset == "marx-ui") {
    belief.M = MatrixXd::Zero(dx, dy);
    belief.Lambda = 1e-4 * MatrixXd::Identity(dx, dx);
    belief.Omega = 1e-5 * MatrixXd::Identity(dy, dy);
    belief.nu = dy + 2.0;
  } else if (preset == "marx-wi") {
    belief.M = MatrixXd::Zero(dx, dy);
    belief.Lambda = 1e-1 * MatrixXd::Identity(dx, dx);
    belief.Omega = 1e-1 * MatrixXd::Identity(dy, dy);
    belief.nu = dy + 2.0;
  } else if (preset == "custom") {
    if (!M0 || !Lambda0 || !Omega0 || !nu0)
      throw ConfigError("custom prior requires M0, Lambda0, Omega0 and nu0");
    belief.M = *M0;
    belief.Lambda = *Lambda0;
    belief.Omega = *Omega0;
    belief.nu = *nu0;
    if (belief.dx() != dx || belief.dy() != dy)
      throw ConfigError("custom prior is " + std::to_string(belief.dx()) + "x" +
                        std::to_string(belief.dy()) + " but the model needs " +
                        std::to_string(dx) + "x" + std::to_string(dy));
  } else {
    throw ConfigError("unknown prior preset \"" + preset +
                      "\" (expected marx-ui, marx-wi or custom)");
  }
  belief.validate();
  return belief;
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::verification: return "verification";
    case ExperimentKind::validation: return "validation";
    case ExperimentKind::stream: return "stream";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (train_sizes.empty()) throw ConfigError("train_sizes must be nonempty");
  for (std::size_t i = 0; i < train_sizes.size(); ++i) {
    if (train_sizes[i] < 1) throw ConfigError("train_sizes must be positive");
    if (i > 0 && train_sizes[i] <= train_sizes[i - 1])
      throw ConfigError("train_sizes must be strictly ascending");
  }
  if (n_mc < 1) throw ConfigError("n_mc must be at least 1");
  if (t_test < 1) throw ConfigError("t_test must be at least 1");
  if (format != "json" && format != "csv")
    throw ConfigError("format must be \"json\" or \"csv\", got \"" + format + "\"");
  verification.input.validate();
  validation.input.validate();
  validation.msd.validate();
  if (!(validation.obs_noise_precision > 0.0))
    throw ConfigError("obs_noise_precision must be positive");
  if (verification.n_y_lags < 1 || verification.n_u_lags < 1 ||
      verification.dim_y < 1 || verification.dim_u < 1)
    throw ConfigError("verification orders and dimensions must be positive");
  if (validation.n_y_lags < 1 || validation.n_u_lags < 1)
    throw ConfigError("validation orders must be positive");
  if (stream_n_y_lags < 1 || stream_n_u_lags < 1)
    throw ConfigError("stream orders must be positive");
  if (stream_prior.preset != "marx-ui" && stream_prior.preset != "marx-wi" &&
      stream_prior.preset != "custom")
    throw ConfigError("unknown prior preset \"" + stream_prior.preset +
                      "\" (expected marx-ui, marx-wi or custom)");
}

double rmse(const std::vector<VectorXd>& predictions, const std::vector<VectorXd>& truths) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument("rmse: prediction/truth length mismatch");
  if (predictions.empty()) throw std::invalid_argument("rmse: empty inputs");
  double ss = 0.0;
  long count = 0;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    if (predictions[t].size() != truths[t].size())
      throw std::invalid_argument("rmse: dimension mismatch at step " + std::to_string(t));
    ss += (predictions[t] - truths[t]).squaredNorm();
    count += predictions[t].size();
  }
  return std::sqrt(ss / static_cast<double>(count));
}

double frobenius_distance(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("frobenius_distance: shape mismatch");
  return (a - b).norm();
}

namespace {

// Everything one Monte Carlo run produces, stored per run index so the
// reduction is deterministic regardless of thread scheduling.
struct ComparisonRunOutput {
  std::vector<PerRunRecord> records;
  std::map<std::string, std::vector<double>> evidence_trace;
  std::map<std::string, std::vector<ElementTrace>> element_traces_A;
  std::map<std::string, std::vector<ElementTrace>> element_traces_W;
  long stability_rejections = 0;
};

struct RunData {
  std::vector<VectorXd> xs, ys;
  std::optional<MatrixXd> a_true, w_true;
  long stability_rejections = 0;
};

// Fits the two MARX estimators and RLS on one run's data, evaluating
// one-step-ahead test predictions at every training checkpoint.
ComparisonRunOutput compare_estimators_on_run(int run, const RunData& data,
                                              const ExperimentConfig& config, int dx,
                                              int dy) {
  const auto& sizes = config.train_sizes;
  const int t_max = sizes.back();
  const int t_total = t_max + config.t_test;

  ComparisonRunOutput out;
  out.stability_rejections = data.stability_rejections;

  std::vector<VectorXd> test_truth(data.ys.begin() + t_max, data.ys.begin() + t_total);

  const std::vector<std::pair<std::string, std::string>> marx_estimators = {
      {"marx-wi", "marx-wi"}, {"marx-ui", "marx-ui"}};

  for (const auto& [name, preset] : marx_estimators) {
    PriorSpec prior;
    prior.preset = preset;
    MnwBelief belief = prior.build(dx, dy);

    auto& trace = out.evidence_trace[name];
    trace.resize(t_max);
    auto& traces_a = out.element_traces_A[name];
    auto& traces_w = out.element_traces_W[name];
    for (const auto& el : kTrackedA) traces_a.push_back({el, {}, {}});
    for (const auto& el : kTrackedW) traces_w.push_back({el, {}, {}});

    std::size_t size_idx = 0;
    for (int t = 0; t < t_max; ++t) {
      trace[t] = log_evidence(belief, data.xs[t], data.ys[t]);
      belief = updated_belief(belief, data.xs[t], data.ys[t]);

      const auto llt_lambda = cholesky_spd(belief.Lambda, "posterior Lambda");
      const auto llt_omega = cholesky_spd(belief.Omega, "posterior Omega");
      const MatrixXd omega_inv = spd_inverse(llt_omega, dy);
      const double t_denom = belief.nu - dy - 1.0;
      for (std::size_t e = 0; e < kTrackedA.size(); ++e) {
        const auto& el = kTrackedA[e];
        traces_a[e].mean.push_back(belief.M(el.row, el.col));
        const double lii = inv_quad_form(llt_lambda, VectorXd::Unit(dx, el.row));
        traces_a[e].sd.push_back(t_denom > 0.0
                                     ? std::sqrt(lii * belief.Omega(el.col, el.col) / t_denom)
                                     : std::numeric_limits<double>::quiet_NaN());
      }
      for (std::size_t e = 0; e < kTrackedW.size(); ++e) {
        const auto& el = kTrackedW[e];
        traces_w[e].mean.push_back(belief.nu * omega_inv(el.row, el.col));
        traces_w[e].sd.push_back(std::sqrt(
            belief.nu * (omega_inv(el.row, el.col) * omega_inv(el.row, el.col) +
                         omega_inv(el.row, el.row) * omega_inv(el.col, el.col))));
      }

      if (size_idx < sizes.size() && t + 1 == sizes[size_idx]) {
        PerRunRecord rec;
        rec.run = run;
        rec.train_size = sizes[size_idx];
        rec.estimator = name;
        std::vector<VectorXd> preds;
        preds.reserve(config.t_test);
        for (int tau = t_max; tau < t_total; ++tau)
          preds.push_back(belief.M.transpose() * data.xs[tau]);
        rec.rmse = rmse(preds, test_truth);
        if (data.a_true) rec.frob_A = frobenius_distance(*data.a_true, belief.M);
        if (data.w_true)
          rec.frob_W = frobenius_distance(*data.w_true, belief.nu * omega_inv);
        for (std::size_t e = 0; e < kTrackedA.size(); ++e)
          rec.tracked_A_sd.push_back(traces_a[e].sd.back());
        out.records.push_back(std::move(rec));
        ++size_idx;
      }
    }
  }

  {
    RlsState state = make_rls_state(dx, dy);
    std::size_t size_idx = 0;
    for (int t = 0; t < t_max; ++t) {
      state = rls_update(state, data.xs[t], data.ys[t]);
      if (size_idx < sizes.size() && t + 1 == sizes[size_idx]) {
        PerRunRecord rec;
        rec.run = run;
        rec.train_size = sizes[size_idx];
        rec.estimator = "rls";
        std::vector<VectorXd> preds;
        preds.reserve(config.t_test);
        for (int tau = t_max; tau < t_total; ++tau)
          preds.push_back(rls_predict(state, data.xs[tau]));
        rec.rmse = rmse(preds, test_truth);
        if (data.a_true) rec.frob_A = frobenius_distance(*data.a_true, state.A_hat);
        out.records.push_back(std::move(rec));
        ++size_idx;
      }
    }
  }
  return out;
}

RunReport reduce_outputs(std::vector<ComparisonRunOutput> outputs,
                         const ExperimentConfig& config, const std::string& experiment) {
  RunReport report;
  report.experiment = experiment;
  report.config_echo = config_to_json(config);

  for (auto& out : outputs) {
    report.stability_rejections += out.stability_rejections;
    for (auto& rec : out.records) report.per_run.push_back(std::move(rec));
  }

  const std::vector<std::string> estimator_order = {"marx-wi", "marx-ui", "rls"};
  for (const auto& name : estimator_order) {
    for (int size : config.train_sizes) {
      std::vector<double> rmses, frob_a, frob_w;
      for (const auto& rec : report.per_run) {
        if (rec.estimator != name || rec.train_size != size) continue;
        rmses.push_back(rec.rmse);
        if (rec.frob_A) frob_a.push_back(*rec.frob_A);
        if (rec.frob_W) frob_w.push_back(*rec.frob_W);
      }
      if (rmses.empty()) continue;
      Aggregate agg;
      agg.estimator = name;
      agg.train_size = size;
      agg.rmse_mean = sample_mean(rmses);
      agg.rmse_stderr = sample_stderr(rmses, agg.rmse_mean);
      if (!frob_a.empty()) {
        agg.frob_A_mean = sample_mean(frob_a);
        agg.frob_A_stderr = sample_stderr(frob_a, *agg.frob_A_mean);
      }
      if (!frob_w.empty()) {
        agg.frob_W_mean = sample_mean(frob_w);
        agg.frob_W_stderr = sample_stderr(frob_w, *agg.frob_W_mean);
      }
      report.aggregates.push_back(std::move(agg));
    }
  }

  // Average evidence and element traces over runs.
  const double inv_n = 1.0 / static_cast<double>(outputs.size());
  for (const auto& [name, trace] : outputs.front().evidence_trace) {
    auto& mean_trace = report.mean_log_evidence_trace[name];
    mean_trace.assign(trace.size(), 0.0);
    for (const auto& out : outputs)
      for (std::size_t t = 0; t < trace.size(); ++t)
        mean_trace[t] += out.evidence_trace.at(name)[t] * inv_n;
  }
  auto reduce_elements = [&](std::map<std::string, std::vector<ElementTrace>>
                                 ComparisonRunOutput::*member,
                             std::map<std::string, std::vector<ElementTrace>>& dest) {
    for (const auto& [name, traces] : outputs.front().*member) {
      auto& dest_traces = dest[name];
      for (const auto& trace : traces)
        dest_traces.push_back({trace.element, std::vector<double>(trace.mean.size(), 0.0),
                               std::vector<double>(trace.sd.size(), 0.0)});
      for (const auto& out : outputs) {
        const auto& src = (out.*member).at(name);
        for (std::size_t e = 0; e < src.size(); ++e)
          for (std::size_t t = 0; t < src[e].mean.size(); ++t) {
            dest_traces[e].mean[t] += src[e].mean[t] * inv_n;
            dest_traces[e].sd[t] += src[e].sd[t] * inv_n;
          }
      }
    }
  };
  reduce_elements(&ComparisonRunOutput::element_traces_A, report.element_traces_A);
  reduce_elements(&ComparisonRunOutput::element_traces_W, report.element_traces_W);
  return report;
}

}  // namespace

RunReport run_verification(const ExperimentConfig& config) {
  config.validate();
  const auto& sim = config.verification;
  const int dx = sim.n_y_lags * sim.dim_y + sim.n_u_lags * sim.dim_u;
  const int dy = sim.dim_y;
  const int t_total = config.train_sizes.back() + config.t_test;

  // Fail on an invalid prior before any simulation happens.
  PriorSpec ui, wi;
  ui.preset = "marx-ui";
  wi.preset = "marx-wi";
  ui.build(dx, dy);
  wi.build(dx, dy);

  std::vector<ComparisonRunOutput> outputs(config.n_mc);
  parallel_runs(config.n_mc, config.threads, [&](int run) {
    std::mt19937_64 rng(config.master_seed ^ static_cast<std::uint64_t>(run));
    auto truth = gen_true_coefficients(sim.n_y_lags, sim.n_u_lags, sim.dim_y, sim.dim_u,
                                       sim.cutoff_hz, sim.sample_rate_hz, sim.cross_std,
                                       sim.w_true, rng);
    RunData data;
    data.stability_rejections = truth.stability_rejections;
    data.a_true = truth.A_true;
    data.w_true = truth.W_true;
    RegressorBuffer buffer(sim.n_y_lags, sim.n_u_lags, sim.dim_y, sim.dim_u);
    data.xs.reserve(t_total);
    data.ys.reserve(t_total);
    for (int t = 0; t < t_total; ++t) {
      const VectorXd u = input_signal(t, sim.input, sim.dim_u, rng);
      data.xs.push_back(buffer.regressor(u));
      data.ys.push_back(marx_step(truth, buffer, u, rng));
    }
    outputs[run] = compare_estimators_on_run(run, data, config, dx, dy);
  });
  return reduce_outputs(std::move(outputs), config, "verification");
}

RunReport run_validation(const ExperimentConfig& config) {
  config.validate();
  const auto& sim = config.validation;
  const int dy = 2, du = 2;
  const int dx = sim.n_y_lags * dy + sim.n_u_lags * du;
  const int t_total = config.train_sizes.back() + config.t_test;
  const MatrixXd noise_precision = sim.obs_noise_precision * MatrixXd::Identity(2, 2);

  PriorSpec ui, wi;
  ui.preset = "marx-ui";
  wi.preset = "marx-wi";
  ui.build(dx, dy);
  wi.build(dx, dy);

  std::vector<ComparisonRunOutput> outputs(config.n_mc);
  parallel_runs(config.n_mc, config.threads, [&](int run) {
    std::mt19937_64 rng(config.master_seed ^ static_cast<std::uint64_t>(run));
    MsdState state;
    state.params = sim.msd;
    RunData data;
    RegressorBuffer buffer(sim.n_y_lags, sim.n_u_lags, dy, du);
    data.xs.reserve(t_total);
    data.ys.reserve(t_total);
    for (int t = 0; t < t_total; ++t) {
      const VectorXd u = input_signal(t, sim.input, du, rng);
      state = msd_step(state, u);
      const VectorXd y = msd_observe(state, noise_precision, rng);
      data.xs.push_back(buffer.regressor(u));
      data.ys.push_back(y);
      buffer.advance(u, y);
    }
    outputs[run] = compare_estimators_on_run(run, data, config, dx, dy);
  });
  return reduce_outputs(std::move(outputs), config, "validation");
}

RunReport run_stream(const ExperimentConfig& config, const std::string& csv_path) {
  config.validate();
  const Trajectory traj = read_trajectory_csv(csv_path);
  const int dy = traj.dim_y();
  const int du = traj.dim_u();
  const int dx = config.stream_n_y_lags * dy + config.stream_n_u_lags * du;

  MarxEstimator est(config.stream_prior.build(dx, dy),
                    RegressorBuffer(config.stream_n_y_lags, config.stream_n_u_lags, dy, du));

  StreamResult result;
  result.predictions.reserve(traj.y.size());
  result.log_scores.reserve(traj.y.size());
  for (std::size_t t = 0; t < traj.y.size(); ++t) {
    const VectorXd x = est.regressor(traj.u[t]);
    result.predictions.push_back(est.predictive(x).mu);
    result.log_scores.push_back(est.observe(traj.u[t], traj.y[t]));
  }
  result.cumulative_log_evidence = est.cumulative_log_evidence();
  result.final_checkpoint = estimator_to_json(est);

  RunReport report;
  report.experiment = "stream";
  report.config_echo = config_to_json(config);
  report.stream = std::move(result);
  return report;
}

json report_to_json(const RunReport& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment"] = report.experiment;
  j["config"] = report.config_echo;
  j["stability_rejections"] = report.stability_rejections;

  json results = json::array();
  for (const auto& agg : report.aggregates) {
    json r{{"estimator", agg.estimator},
           {"train_size", agg.train_size},
           {"rmse_mean", agg.rmse_mean},
           {"rmse_stderr", agg.rmse_stderr}};
    if (agg.frob_A_mean) {
      r["frob_A_mean"] = *agg.frob_A_mean;
      r["frob_A_stderr"] = *agg.frob_A_stderr;
    }
    if (agg.frob_W_mean) {
      r["frob_W_mean"] = *agg.frob_W_mean;
      r["frob_W_stderr"] = *agg.frob_W_stderr;
    }
    results.push_back(std::move(r));
  }
  j["results"] = std::move(results);

  json per_run = json::array();
  for (const auto& rec : report.per_run) {
    json r{{"run", rec.run},
           {"train_size", rec.train_size},
           {"estimator", rec.estimator},
           {"rmse", rec.rmse}};
    if (rec.frob_A) r["frob_A"] = *rec.frob_A;
    if (rec.frob_W) r["frob_W"] = *rec.frob_W;
    if (!rec.tracked_A_sd.empty()) r["tracked_A_sd"] = rec.tracked_A_sd;
    per_run.push_back(std::move(r));
  }
  j["per_run"] = std::move(per_run);

  json traces;
  traces["log_evidence"] = report.mean_log_evidence_trace;
  auto element_traces_json = [](const std::map<std::string, std::vector<ElementTrace>>& m) {
    json out;
    for (const auto& [name, traces_vec] : m) {
      json arr = json::array();
      for (const auto& tr : traces_vec)
        arr.push_back(json{{"row", tr.element.row},
                           {"col", tr.element.col},
                           {"mean", tr.mean},
                           {"sd", tr.sd}});
      out[name] = std::move(arr);
    }
    return out;
  };
  traces["elements_A"] = element_traces_json(report.element_traces_A);
  traces["elements_W"] = element_traces_json(report.element_traces_W);
  j["traces"] = std::move(traces);

  if (report.stream) {
    json s;
    json preds = json::array();
    for (const auto& p : report.stream->predictions) {
      json row = json::array();
      for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(p(i));
      preds.push_back(std::move(row));
    }
    s["predictions"] = std::move(preds);
    s["log_scores"] = report.stream->log_scores;
    s["cumulative_log_evidence"] = report.stream->cumulative_log_evidence;
    s["final_checkpoint"] = report.stream->final_checkpoint;
    j["stream"] = std::move(s);
  }
  return j;
}

void validate_report_json(const json& j) {
  auto require = [&](const char* key, bool ok) {
    if (!ok) throw DataError(std::string("report schema: bad or missing \"") + key + "\"");
  };
  require("schema_version", j.contains("schema_version") &&
                                j["schema_version"].is_number_integer() &&
                                j["schema_version"].get<int>() == kSchemaVersion);
  require("experiment", j.contains("experiment") && j["experiment"].is_string());
  require("config", j.contains("config") && j["config"].is_object());
  require("stability_rejections",
          j.contains("stability_rejections") && j["stability_rejections"].is_number_integer());
  require("results", j.contains("results") && j["results"].is_array());
  for (const auto& r : j["results"]) {
    require("results.estimator", r.contains("estimator") && r["estimator"].is_string());
    require("results.train_size",
            r.contains("train_size") && r["train_size"].is_number_integer());
    require("results.rmse_mean", r.contains("rmse_mean") && r["rmse_mean"].is_number());
    require("results.rmse_stderr", r.contains("rmse_stderr") && r["rmse_stderr"].is_number());
  }
  require("per_run", j.contains("per_run") && j["per_run"].is_array());
  require("traces", j.contains("traces") && j["traces"].is_object());
  if (j["experiment"] == "stream")
    require("stream", j.contains("stream") && j["stream"].is_object());
}

std::string report_to_csv(const RunReport& report) {
  std::ostringstream out;
  if (report.stream) {
    out << "t,log_score";
    const Eigen::Index dy =
        report.stream->predictions.empty() ? 0 : report.stream->predictions.front().size();
    for (Eigen::Index i = 1; i <= dy; ++i) out << ",y_pred_" << i;
    out << "\n";
    for (std::size_t t = 0; t < report.stream->predictions.size(); ++t) {
      out << t + 1 << ',' << fmt_double(report.stream->log_scores[t]);
      for (Eigen::Index i = 0; i < dy; ++i)
        out << ',' << fmt_double(report.stream->predictions[t](i));
      out << "\n";
    }
    return out.str();
  }
  out << "run,train_size,estimator,rmse,frob_A,frob_W";
  std::size_t n_tracked = 0;
  for (const auto& rec : report.per_run)
    n_tracked = std::max(n_tracked, rec.tracked_A_sd.size());
  for (std::size_t e = 1; e <= n_tracked; ++e) out << ",tracked_A_sd_" << e;
  out << "\n";
  for (const auto& rec : report.per_run) {
    out << rec.run << ',' << rec.train_size << ',' << rec.estimator << ','
        << fmt_double(rec.rmse) << ',' << (rec.frob_A ? fmt_double(*rec.frob_A) : "") << ','
        << (rec.frob_W ? fmt_double(*rec.frob_W) : "");
    for (std::size_t e = 0; e < n_tracked; ++e)
      out << ',' << (e < rec.tracked_A_sd.size() ? fmt_double(rec.tracked_A_sd[e]) : "");
    out << "\n";
  }
  return out.str();
}

std::vector<PerRunRecord> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("report CSV is empty");
  std::vector<PerRunRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() < 6)
      throw DataError("report CSV line " + std::to_string(line_no) + ": too few fields");
    PerRunRecord rec;
    try {
      rec.run = std::stoi(fields[0]);
      rec.train_size = std::stoi(fields[1]);
      rec.estimator = fields[2];
      rec.rmse = std::stod(fields[3]);
      if (!fields[4].empty()) rec.frob_A = std::stod(fields[4]);
      if (!fields[5].empty()) rec.frob_W = std::stod(fields[5]);
      for (std::size_t e = 6; e < fields.size(); ++e)
        if (!fields[e].empty()) rec.tracked_A_sd.push_back(std::stod(fields[e]));
    } catch (const std::exception&) {
      throw DataError("report CSV line " + std::to_string(line_no) + ": parse failure");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

namespace {

json input_to_json(const InputSignalConfig& c) {
  return json{{"kind", c.kind},          {"std", c.std_dev},
              {"amplitude", c.amplitude}, {"freq_start", c.freq_start},
              {"freq_end", c.freq_end},   {"sweep_steps", c.sweep_steps}};
}

void input_from_json(const json& j, InputSignalConfig& c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") c.kind = value.get<std::string>();
    else if (key == "std") c.std_dev = value.get<double>();
    else if (key == "amplitude") c.amplitude = value.get<double>();
    else if (key == "freq_start") c.freq_start = value.get<double>();
    else if (key == "freq_end") c.freq_end = value.get<double>();
    else if (key == "sweep_steps") c.sweep_steps = value.get<long>();
    else throw ConfigError("unknown input-signal key \"" + key + "\"");
  }
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  json prior;
  if (c.stream_prior.preset == "custom") {
    prior = json{{"M0", matrix_to_json(*c.stream_prior.M0)},
                 {"Lambda0", matrix_to_json(*c.stream_prior.Lambda0)},
                 {"Omega0", matrix_to_json(*c.stream_prior.Omega0)},
                 {"nu0", *c.stream_prior.nu0}};
  } else {
    prior = c.stream_prior.preset;
  }
  return json{
      {"experiment", to_string(c.kind)},
      {"train_sizes", c.train_sizes},
      {"t_test", c.t_test},
      {"n_mc", c.n_mc},
      {"seed", c.master_seed},
      {"threads", c.threads},
      {"verification",
       {{"n_y_lags", c.verification.n_y_lags},
        {"n_u_lags", c.verification.n_u_lags},
        {"dim_y", c.verification.dim_y},
        {"dim_u", c.verification.dim_u},
        {"cutoff_hz", c.verification.cutoff_hz},
        {"sample_rate_hz", c.verification.sample_rate_hz},
        {"cross_std", c.verification.cross_std},
        {"w_true", matrix_to_json(c.verification.w_true)},
        {"input", input_to_json(c.verification.input)}}},
      {"validation",
       {{"m1", c.validation.msd.m1},
        {"m2", c.validation.msd.m2},
        {"k1", c.validation.msd.k1},
        {"k2", c.validation.msd.k2},
        {"c1", c.validation.msd.c1},
        {"c2", c.validation.msd.c2},
        {"dt", c.validation.msd.dt},
        {"obs_noise_precision", c.validation.obs_noise_precision},
        {"n_y_lags", c.validation.n_y_lags},
        {"n_u_lags", c.validation.n_u_lags},
        {"input", input_to_json(c.validation.input)}}},
      {"stream",
       {{"prior", std::move(prior)},
        {"n_y_lags", c.stream_n_y_lags},
        {"n_u_lags", c.stream_n_u_lags}}},
      {"out", c.out_path},
      {"format", c.format}};
}

static ExperimentConfig config_from_json_impl(const json& j, ExperimentConfig base);

ExperimentConfig config_from_json(const json& j, ExperimentConfig base) {
  try {
    return config_from_json_impl(j, std::move(base));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed config value: ") + e.what());
  }
}

static ExperimentConfig config_from_json_impl(const json& j, ExperimentConfig base) {
  ExperimentConfig c = std::move(base);
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") {
      const auto s = value.get<std::string>();
      if (s == "verification") c.kind = ExperimentKind::verification;
      else if (s == "validation") c.kind = ExperimentKind::validation;
      else if (s == "stream") c.kind = ExperimentKind::stream;
      else throw ConfigError("unknown experiment \"" + s + "\"");
    } else if (key == "train_sizes") {
      c.train_sizes = value.get<std::vector<int>>();
    } else if (key == "t_test") {
      c.t_test = value.get<int>();
    } else if (key == "n_mc") {
      c.n_mc = value.get<int>();
    } else if (key == "seed") {
      c.master_seed = value.get<std::uint64_t>();
    } else if (key == "threads") {
      c.threads = value.get<int>();
    } else if (key == "verification") {
      for (const auto& [vk, vv] : value.items()) {
        if (vk == "n_y_lags") c.verification.n_y_lags = vv.get<int>();
        else if (vk == "n_u_lags") c.verification.n_u_lags = vv.get<int>();
        else if (vk == "dim_y") c.verification.dim_y = vv.get<int>();
        else if (vk == "dim_u") c.verification.dim_u = vv.get<int>();
        else if (vk == "cutoff_hz") c.verification.cutoff_hz = vv.get<double>();
        else if (vk == "sample_rate_hz") c.verification.sample_rate_hz = vv.get<double>();
        else if (vk == "cross_std") c.verification.cross_std = vv.get<double>();
        else if (vk == "w_true") c.verification.w_true = matrix_from_json(vv, "w_true");
        else if (vk == "input") input_from_json(vv, c.verification.input);
        else throw ConfigError("unknown verification key \"" + vk + "\"");
      }
    } else if (key == "validation") {
      for (const auto& [vk, vv] : value.items()) {
        if (vk == "m1") c.validation.msd.m1 = vv.get<double>();
        else if (vk == "m2") c.validation.msd.m2 = vv.get<double>();
        else if (vk == "k1") c.validation.msd.k1 = vv.get<double>();
        else if (vk == "k2") c.validation.msd.k2 = vv.get<double>();
        else if (vk == "c1") c.validation.msd.c1 = vv.get<double>();
        else if (vk == "c2") c.validation.msd.c2 = vv.get<double>();
        else if (vk == "dt") c.validation.msd.dt = vv.get<double>();
        else if (vk == "obs_noise_precision")
          c.validation.obs_noise_precision = vv.get<double>();
        else if (vk == "n_y_lags") c.validation.n_y_lags = vv.get<int>();
        else if (vk == "n_u_lags") c.validation.n_u_lags = vv.get<int>();
        else if (vk == "input") input_from_json(vv, c.validation.input);
        else throw ConfigError("unknown validation key \"" + vk + "\"");
      }
    } else if (key == "stream") {
      for (const auto& [sk, sv] : value.items()) {
        if (sk == "prior") {
          if (sv.is_string()) {
            c.stream_prior = PriorSpec{};
            c.stream_prior.preset = sv.get<std::string>();
          } else if (sv.is_object()) {
            c.stream_prior.preset = "custom";
            c.stream_prior.M0 = matrix_from_json(sv.at("M0"), "prior M0");
            c.stream_prior.Lambda0 = matrix_from_json(sv.at("Lambda0"), "prior Lambda0");
            c.stream_prior.Omega0 = matrix_from_json(sv.at("Omega0"), "prior Omega0");
            c.stream_prior.nu0 = sv.at("nu0").get<double>();
          } else {
            throw ConfigError("stream prior must be a preset name or an object");
          }
        } else if (sk == "n_y_lags") c.stream_n_y_lags = sv.get<int>();
        else if (sk == "n_u_lags") c.stream_n_u_lags = sv.get<int>();
        else throw ConfigError("unknown stream key \"" + sk + "\"");
      }
    } else if (key == "out") {
      c.out_path = value.get<std::string>();
    } else if (key == "format") {
      c.format = value.get<std::string>();
    } else {
      throw ConfigError("unknown config key \"" + key + "\"");
    }
  }
  return c;
}

json parse_toml_subset(std::istream& in) {
  json root = json::object();
  json* section = &root;
  std::string line;
  long line_no = 0;

  std::function<json(const std::string&, long)> parse_value = [&](const std::string& raw,
                                                                  long no) -> json {
    std::string s = raw;
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    if (a == std::string::npos) throw ConfigError("TOML line " + std::to_string(no) + ": empty value");
    s = s.substr(a, b - a + 1);
    if (s.front() == '"' && s.back() == '"' && s.size() >= 2)
      return s.substr(1, s.size() - 2);
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("TOML line " + std::to_string(no) + ": unterminated array");
      json arr = json::array();
      std::string body = s.substr(1, s.size() - 2);
      int depth = 0;
      std::string item;
      for (char ch : body) {
        if (ch == '[') ++depth;
        if (ch == ']') --depth;
        if (ch == ',' && depth == 0) {
          if (item.find_first_not_of(" \t") != std::string::npos)
            arr.push_back(parse_value(item, no));
          item.clear();
        } else {
          item += ch;
        }
      }
      if (item.find_first_not_of(" \t") != std::string::npos)
        arr.push_back(parse_value(item, no));
      return arr;
    }
    try {
      std::size_t pos = 0;
      if (s.find_first_of(".eE") == std::string::npos &&
          s.find_first_not_of("+-0123456789") == std::string::npos) {
        const long long v = std::stoll(s, &pos);
        if (pos == s.size()) return v;
      }
      const double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("TOML line " + std::to_string(no) + ": cannot parse value \"" + s + "\"");
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("TOML line " + std::to_string(line_no) + ": malformed section");
      std::string path = line.substr(1, line.size() - 2);
      section = &root;
      std::stringstream ss(path);
      std::string part;
      while (std::getline(ss, part, '.')) {
        if (part.empty())
          throw ConfigError("TOML line " + std::to_string(line_no) + ": empty section name");
        section = &((*section)[part]);
        if (section->is_null()) *section = json::object();
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("TOML line " + std::to_string(line_no) + ": expected key = value");
    std::string key = line.substr(0, eq);
    const auto ka = key.find_first_not_of(" \t");
    const auto kb = key.find_last_not_of(" \t");
    key = key.substr(ka, kb - ka + 1);
    (*section)[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return root;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") {
    j = parse_toml_subset(in);
  } else {
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + path + ": " + e.what());
    }
  }
  return config_from_json(j, std::move(base));
}

void write_report(const RunReport& report, const ExperimentConfig& config) {
  std::string payload;
  if (config.format == "csv") {
    payload = report_to_csv(report);
  } else {
    payload = report_to_json(report).dump(2);
    payload += "\n";
  }
  if (config.out_path.empty()) {
    std::cout << payload;
  } else {
    std::ofstream out(config.out_path);
    if (!out) throw DataError("cannot open " + config.out_path + " for writing");
    out << payload;
  }
}

}  // namespace marx
