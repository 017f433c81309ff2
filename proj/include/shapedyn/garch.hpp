#ifndef SHAPEDYN_GARCH_HPP
#define SHAPEDYN_GARCH_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace shapedyn {

// k(t) = w0 + sum_m w_m l(t-m)^2 + sum_n zeta_n k(t-n), l = demeaned series.
struct UnivariateGarch {
  double w0 = 0;
  Eigen::VectorXd w;     // ARCH terms
  Eigen::VectorXd zeta;  // GARCH terms

  double persistence() const { return w.sum() + zeta.sum(); }
  double long_run_variance() const { return w0 / (1 - persistence()); }
  bool stationary() const;
};

struct GarchFitOptions {
  int arch_order = 1;
  int garch_order = 1;
  int max_iterations = 2000;
  double gradient_step = 1e-6;
  double tolerance = 1e-8;  // on log-likelihood improvement
  int patience = 5;         // iterations below tolerance before stopping
};

struct GarchFit {
  UnivariateGarch model;
  double log_likelihood = 0;
  int iterations = 0;
  std::vector<double> trace;  // log-likelihood after each accepted iteration
};

/// Conditional variances of a demeaned series; pre-sample values (squared
/// residuals and variances) are set to `initial_variance`.
Eigen::VectorXd garch_variances(const UnivariateGarch& model, const Eigen::VectorXd& residuals,
                                double initial_variance);

/// Gaussian quasi log-likelihood of a demeaned series (stage one).
double garch_log_likelihood(const UnivariateGarch& model, const Eigen::VectorXd& residuals, double initial_variance);

/// Stage-one fit. The series is demeaned by its sample mean; the optimizer is
/// a projected ascent along BHHH-scaled numeric gradients with backtracking.
GarchFit fit_univariate_garch(const Eigen::VectorXd& series, const GarchFitOptions& options = {});

struct DccGarchModel {
  Eigen::VectorXd mu;
  std::vector<UnivariateGarch> components;
  double a = 0;
  double b = 0;
  Eigen::MatrixXd qbar;  // unconditional correlation of standardized residuals
};

/// Stage two: QL2 = -1/2 sum_t (log|L(t)| + e(t)' L(t)^{-1} e(t)).
double dcc_log_likelihood(const Eigen::MatrixXd& standardized, const Eigen::MatrixXd& qbar, double a, double b);

struct DccFit {
  double a = 0;
  double b = 0;
  double log_likelihood = 0;
};

/// Coarse grid (0.02) over a, b >= 0, a + b < 1, then a 0.001 grid in a
/// +-0.02 window recentred until the optimum is interior.
DccFit fit_dcc(const Eigen::MatrixXd& standardized, const Eigen::MatrixXd& qbar);

/// Correlation matrix from the sample second moments of `standardized`.
Eigen::MatrixXd unconditional_correlation(const Eigen::MatrixXd& standardized);

struct DccGarchFit {
  DccGarchModel model;
  std::vector<GarchFit> stage_one;
  DccFit stage_two;
  Eigen::MatrixXd standardized;
};

DccGarchFit fit_dcc_garch(const Eigen::MatrixXd& x, const GarchFitOptions& options = {});

struct DccForecast {
  Eigen::MatrixXd mean;                     // h x d, every row mu
  std::vector<Eigen::MatrixXd> covariance;  // conditional covariance per step
};

/// Point forecasts are the constant mean. Covariances follow the conditional
/// expectation of the variance and Q recursions beyond the history.
DccForecast forecast_dcc(const DccGarchModel& model, const Eigen::MatrixXd& history, Eigen::Index h);

Eigen::VectorXd simulate_garch(const UnivariateGarch& model, double mean, Eigen::Index T, std::uint64_t seed,
                               Eigen::Index burn = 500);

Eigen::MatrixXd simulate_dcc_garch(const DccGarchModel& model, Eigen::Index T, std::uint64_t seed,
                                   Eigen::Index burn = 500);

}  // namespace shapedyn

#endif  // SHAPEDYN_GARCH_HPP
