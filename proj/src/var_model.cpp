#include "shapedyn/var_model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "shapedyn/diagnostics.hpp"
#include "shapedyn/error.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "var_model";

// Rows first..x.rows()-1 of the regressor matrix for lag p.
Eigen::MatrixXd regressors(const Eigen::MatrixXd& x, int p, Eigen::Index first) {
  const Eigen::Index d = x.cols();
  const Eigen::Index rows = x.rows() - first;
  Eigen::MatrixXd z(rows, 1 + d * p);
  z.col(0).setOnes();
  for (int j = 1; j <= p; ++j) z.middleCols(1 + d * (j - 1), d) = x.middleRows(first - j, rows);
  return z;
}

struct LeastSquares {
  Eigen::MatrixXd beta;       // (1 + d p) x d
  Eigen::MatrixXd residuals;  // rows x d
};

LeastSquares solve(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y, const char* operation) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(1e-10);
  if (qr.rank() < z.cols()) throw Error(kModule, operation, "degenerate regressors");
  LeastSquares out{qr.solve(y), {}};
  out.residuals = y - z * out.beta;
  return out;
}

VarModel unpack(const Eigen::MatrixXd& beta, int p, Eigen::Index d) {
  VarModel m;
  m.p = p;
  m.c = beta.row(0).transpose();
  for (int j = 0; j < p; ++j) m.A.push_back(beta.middleRows(1 + d * j, d).transpose());
  return m;
}

}  // namespace

VarModel fit_var(const Eigen::MatrixXd& x, int p) {
  if (p < 1) throw Error(kModule, "fit_var", "lag must be at least 1");
  const Eigen::Index n = x.rows(), d = x.cols();
  if (d < 1) throw Error(kModule, "fit_var", "empty series");
  const Eigen::Index divisor = n - (d + 1) * p - 1;
  if (n - p < d * p + 1 + d || divisor <= 0)
    throw Error(kModule, "fit_var",
                "series of " + std::to_string(n) + " rows is too short for lag " + std::to_string(p) + " in dimension " +
                    std::to_string(d));
  if (!x.allFinite()) throw Error(kModule, "fit_var", "non-finite values in series");

  const auto ls = solve(regressors(x, p, p), x.bottomRows(n - p), "fit_var");
  VarModel m = unpack(ls.beta, p, d);
  m.sigma = ls.residuals.transpose() * ls.residuals / double(divisor);
  m.sigma = (m.sigma + m.sigma.transpose()) / 2;
  return m;
}

LagCriterion parse_lag_criterion(std::string_view name) {
  if (name == "aic") return LagCriterion::aic;
  if (name == "bic") return LagCriterion::bic;
  if (name == "hq") return LagCriterion::hq;
  throw Error(kModule, "parse_lag_criterion", "unknown criterion '" + std::string(name) + "'");
}

std::string to_string(LagCriterion criterion) {
  switch (criterion) {
    case LagCriterion::aic: return "aic";
    case LagCriterion::bic: return "bic";
    case LagCriterion::hq: return "hq";
  }
  return "?";
}

LagSelection select_lag(const Eigen::MatrixXd& x, int p_max, LagCriterion criterion) {
  if (p_max < 1) throw Error(kModule, "select_lag", "p_max must be at least 1");
  const Eigen::Index d = x.cols();
  const Eigen::Index t_eff = x.rows() - p_max;
  if (t_eff <= d * p_max + 1 + d) throw Error(kModule, "select_lag", "series too short for p_max " + std::to_string(p_max));

  const Eigen::MatrixXd y = x.bottomRows(t_eff);
  const double n = double(t_eff);
  LagSelection out{1, Eigen::VectorXd(p_max)};
  for (int p = 1; p <= p_max; ++p) {
    const auto ls = solve(regressors(x, p, p_max), y, "select_lag");
    const Eigen::MatrixXd sigma = ls.residuals.transpose() * ls.residuals / n;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
    double logdet = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double v = ldlt.vectorD()(i);
      logdet += v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    }
    const double k = double(d * (d * p + 1));
    double penalty = 0;
    switch (criterion) {
      case LagCriterion::aic: penalty = 2 * k / n; break;
      case LagCriterion::bic: penalty = k * std::log(n) / n; break;
      case LagCriterion::hq: penalty = 2 * k * std::log(std::log(n)) / n; break;
    }
    out.scores(p - 1) = logdet + penalty;
    if (out.scores(p - 1) < out.scores(out.best - 1)) out.best = p;
  }
  return out;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* module, const char* operation) {
  if (m.rows() != m.cols() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(module, operation, "covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig((m + m.transpose()) / 2);
  const Eigen::VectorXd values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -1e-10 * scale) throw Error(module, operation, "covariance is not positive semidefinite");
  return eig.eigenvectors() * values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd synthesize(const VarModel& model, const Eigen::MatrixXd& init, Eigen::Index T, std::uint64_t seed) {
  const Eigen::Index d = model.dim();
  if (init.rows() != model.p || init.cols() != d)
    throw Error(kModule, "synthesize", "initial block must have exactly p rows of dimension d");
  if (T < model.p) throw Error(kModule, "synthesize", "length shorter than the initial block");
  const Eigen::MatrixXd root = psd_sqrt(model.sigma, kModule, "synthesize");
  const double radius = spectral_radius(model);
  if (radius >= 1) warn(kModule, "synthesizing from a non-stable model (spectral radius " + std::to_string(radius) + ")");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd x(T, d);
  x.topRows(model.p) = init;
  Eigen::VectorXd e(d);
  for (Eigen::Index t = model.p; t < T; ++t) {
    Eigen::VectorXd next = model.c;
    for (int j = 1; j <= model.p; ++j) next += model.A[static_cast<std::size_t>(j - 1)] * x.row(t - j).transpose();
    for (Eigen::Index i = 0; i < d; ++i) e(i) = g(rng);
    x.row(t) = (next + root * e).transpose();
  }
  return x;
}

Eigen::MatrixXd predict(const VarModel& model, const Eigen::MatrixXd& history, Eigen::Index h) {
  const Eigen::Index d = model.dim();
  if (history.rows() < model.p || history.cols() != d)
    throw Error(kModule, "predict", "history needs at least p rows of dimension d");
  Eigen::MatrixXd buffer(model.p + h, d);
  buffer.topRows(model.p) = history.bottomRows(model.p);
  for (Eigen::Index t = model.p; t < model.p + h; ++t) {
    Eigen::VectorXd next = model.c;
    for (int j = 1; j <= model.p; ++j) next += model.A[static_cast<std::size_t>(j - 1)] * buffer.row(t - j).transpose();
    buffer.row(t) = next.transpose();
  }
  return buffer.bottomRows(h);
}

double prediction_error(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw Error(kModule, "prediction_error", "shape mismatch");
  if (truth.rows() == 0) throw Error(kModule, "prediction_error", "empty horizon");
  return (truth - predicted).rowwise().squaredNorm().mean();
}

double spectral_radius(const VarModel& model) {
  const Eigen::Index d = model.dim();
  const Eigen::Index k = d * model.p;
  if (k == 0) return 0;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
  for (int j = 0; j < model.p; ++j) companion.block(0, d * j, d, d) = model.A[static_cast<std::size_t>(j)];
  if (model.p > 1) companion.bottomLeftCorner(k - d, k - d).setIdentity();
  return Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd stationary_mean(const VarModel& model) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(model.dim(), model.dim());
  for (const auto& a : model.A) m -= a;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw Error(kModule, "stationary_mean", "model has a unit root");
  return lu.solve(model.c);
}

}  // namespace shapedyn
