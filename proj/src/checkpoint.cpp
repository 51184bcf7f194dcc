#include "marx/checkpoint.hpp"

namespace marx {

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw DataError(what + ": expected a nested array");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw DataError(what + ": ragged rows in matrix");
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw DataError(what + ": non-numeric matrix entry");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

namespace {

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + ": expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

json belief_to_json(const MnwBelief& belief) {
  return json{{"M", matrix_to_json(belief.M)},
              {"Lambda", matrix_to_json(belief.Lambda)},
              {"Omega", matrix_to_json(belief.Omega)},
              {"nu", belief.nu}};
}

MnwBelief belief_from_json(const json& j) {
  for (const char* key : {"M", "Lambda", "Omega", "nu"})
    if (!j.contains(key)) throw DataError(std::string("belief checkpoint missing \"") + key + "\"");
  MnwBelief belief;
  belief.M = matrix_from_json(j.at("M"), "M");
  belief.Lambda = matrix_from_json(j.at("Lambda"), "Lambda");
  belief.Omega = matrix_from_json(j.at("Omega"), "Omega");
  if (!j.at("nu").is_number()) throw DataError("belief checkpoint: \"nu\" is not a number");
  belief.nu = j.at("nu").get<double>();
  belief.validate();
  return belief;
}

json estimator_to_json(const MarxEstimator& est) {
  const auto& buf = est.buffer();
  json y_hist = json::array();
  for (const auto& y : buf.y_history()) y_hist.push_back(vector_to_json(y));
  json u_hist = json::array();
  for (const auto& u : buf.u_history()) u_hist.push_back(vector_to_json(u));
  return json{{"belief", belief_to_json(est.belief())},
              {"step_count", est.step_count()},
              {"cumulative_log_evidence", est.cumulative_log_evidence()},
              {"buffer",
               {{"n_y_lags", buf.n_y_lags()},
                {"n_u_lags", buf.n_u_lags()},
                {"dim_y", buf.dim_y()},
                {"dim_u", buf.dim_u()},
                {"y_history", std::move(y_hist)},
                {"u_history", std::move(u_hist)}}}};
}

MarxEstimator estimator_from_json(const json& j) {
  for (const char* key : {"belief", "step_count", "cumulative_log_evidence", "buffer"})
    if (!j.contains(key))
      throw DataError(std::string("estimator checkpoint missing \"") + key + "\"");
  const json& b = j.at("buffer");
  RegressorBuffer buffer(b.at("n_y_lags").get<int>(), b.at("n_u_lags").get<int>(),
                         b.at("dim_y").get<int>(), b.at("dim_u").get<int>());
  std::deque<VectorXd> y_hist, u_hist;
  for (const auto& y : b.at("y_history")) y_hist.push_back(vector_from_json(y, "y_history"));
  for (const auto& u : b.at("u_history")) u_hist.push_back(vector_from_json(u, "u_history"));
  buffer.set_histories(std::move(y_hist), std::move(u_hist));
  MnwBelief belief = belief_from_json(j.at("belief"));
  MarxEstimator est(belief, buffer);
  est.restore(std::move(belief), std::move(buffer), j.at("step_count").get<long>(),
              j.at("cumulative_log_evidence").get<double>());
  return est;
}

json rls_to_json(const RlsState& state) {
  return json{{"A_hat", matrix_to_json(state.A_hat)}, {"P", matrix_to_json(state.P)}};
}

RlsState rls_from_json(const json& j) {
  for (const char* key : {"A_hat", "P"})
    if (!j.contains(key)) throw DataError(std::string("RLS checkpoint missing \"") + key + "\"");
  RlsState state;
  state.A_hat = matrix_from_json(j.at("A_hat"), "A_hat");
  state.P = matrix_from_json(j.at("P"), "P");
  if (!is_spd(state.P)) throw DataError("RLS checkpoint: P is not SPD");
  return state;
}

}  // namespace marx
