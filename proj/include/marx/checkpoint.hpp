#pragma once

#include <json.hpp>

#include "marx/estimator.hpp"
#include "marx/rls.hpp"

namespace marx {

using nlohmann::json;

// JSON checkpoint schema. Matrices are row-major nested arrays.
//
// MnwBelief:     {"M", "Lambda", "Omega", "nu"}
// MarxEstimator: {"belief", "step_count", "cumulative_log_evidence", "buffer"}
//   buffer:      {"n_y_lags", "n_u_lags", "dim_y", "dim_u",
//                 "y_history", "u_history"}   (most recent lag first)
// RlsState:      {"A_hat", "P"}

json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const json& j, const std::string& what);

json belief_to_json(const MnwBelief& belief);
MnwBelief belief_from_json(const json& j);

json estimator_to_json(const MarxEstimator& est);
MarxEstimator estimator_from_json(const json& j);

json rls_to_json(const RlsState& state);
RlsState rls_from_json(const json& j);

}  // namespace marx
