#ifndef SHAPEDYN_VAR_MODEL_HPP
#define SHAPEDYN_VAR_MODEL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace shapedyn {

// Series are T x d matrices, one observation per row, oldest first.

/// x(t) = c + A_1 x(t-1) + ... + A_p x(t-p) + e(t),  e ~ N(0, sigma).
struct VarModel {
  int p = 0;
  Eigen::VectorXd c;
  std::vector<Eigen::MatrixXd> A;
  Eigen::MatrixXd sigma;

  Eigen::Index dim() const { return c.size(); }
};

/// Least squares on the stacked regressors (1, x(t-1)', ..., x(t-p)') via a
/// pivoted QR. Sigma uses the divisor T - (d + 1) p - 1.
VarModel fit_var(const Eigen::MatrixXd& x, int p);

enum class LagCriterion { aic, bic, hq };

LagCriterion parse_lag_criterion(std::string_view name);
std::string to_string(LagCriterion criterion);

struct LagSelection {
  int best = 1;
  Eigen::VectorXd scores;  // scores(p - 1) for p = 1..p_max
};

/// Every candidate is fitted on rows p_max..T-1 so the criteria compare like
/// with like. Scores use the ML covariance (divisor T_eff) and
/// k = d (d p + 1) coefficients. Ties go to the smaller lag.
LagSelection select_lag(const Eigen::MatrixXd& x, int p_max, LagCriterion criterion);

/// Runs the recursion from `init` (exactly p rows). Returns T rows, the first
/// p of which are `init`. Warns when the model is not stable.
Eigen::MatrixXd synthesize(const VarModel& model, const Eigen::MatrixXd& init, Eigen::Index T, std::uint64_t seed);

/// Recursive h-step plug-in forecasts from the last p rows of `history`,
/// intercept included at every step.
Eigen::MatrixXd predict(const VarModel& model, const Eigen::MatrixXd& history, Eigen::Index h);

/// (1/h) sum_i |truth_i - predicted_i|^2.
double prediction_error(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth);

/// Largest eigenvalue modulus of the companion matrix.
double spectral_radius(const VarModel& model);

/// (I - sum A_j)^{-1} c.
Eigen::VectorXd stationary_mean(const VarModel& model);

/// Symmetric PSD square root; throws on eigenvalues below -1e-10 (relative).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* module, const char* operation);

}  // namespace shapedyn

#endif  // SHAPEDYN_VAR_MODEL_HPP
