#include "shapedyn/garch.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "shapedyn/error.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "garch";
constexpr double kMaxPersistence = 1 - 1e-6;

// Parameter vector layout: (w0, w_1..w_M, zeta_1..zeta_N).
Eigen::VectorXd pack(const UnivariateGarch& m) {
  Eigen::VectorXd theta(1 + m.w.size() + m.zeta.size());
  theta << m.w0, m.w, m.zeta;
  return theta;
}

UnivariateGarch unpack(const Eigen::VectorXd& theta, int arch, int garch) {
  return {theta(0), theta.segment(1, arch), theta.segment(1 + arch, garch)};
}

Eigen::VectorXd project(Eigen::VectorXd theta, double w0_floor) {
  theta(0) = std::max(theta(0), w0_floor);
  auto rest = theta.tail(theta.size() - 1);
  rest = rest.cwiseMax(0.0);
  const double sum = rest.sum();
  if (sum > kMaxPersistence) rest *= kMaxPersistence / sum;
  return theta;
}

// Per-observation log-likelihood terms.
Eigen::VectorXd contributions(const UnivariateGarch& m, const Eigen::VectorXd& l, double init) {
  const Eigen::VectorXd k = garch_variances(m, l, init);
  constexpr double log_2pi = 1.8378770664093453;
  return -0.5 * (log_2pi + k.array().log() + l.array().square() / k.array()).matrix();
}

// Cholesky of a small SPD matrix in place (lower triangle). Returns false
// when a pivot is not positive.
bool cholesky(std::vector<double>& m, Eigen::Index d) {
  for (Eigen::Index j = 0; j < d; ++j) {
    double s = m[j * d + j];
    for (Eigen::Index k = 0; k < j; ++k) s -= m[j * d + k] * m[j * d + k];
    if (!(s > 0)) return false;
    m[j * d + j] = std::sqrt(s);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double t = m[i * d + j];
      for (Eigen::Index k = 0; k < j; ++k) t -= m[i * d + k] * m[j * d + k];
      m[i * d + j] = t / m[j * d + j];
    }
  }
  return true;
}

// Q recursion with Q(0) = Qbar; calls visit(t, lambda) with the row-major
// correlation matrix of step t, which the visitor may overwrite.
template <typename Visit>
void run_dcc_filter(const Eigen::MatrixXd& e, const Eigen::MatrixXd& qbar, double a, double b, Visit&& visit) {
  const Eigen::Index T = e.rows(), d = e.cols();
  std::vector<double> q(static_cast<std::size_t>(d * d)), lam(q.size());
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) q[i * d + j] = qbar(i, j);
  const double c = 1 - a - b;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0)
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          q[i * d + j] = c * qbar(i, j) + a * e(t - 1, i) * e(t - 1, j) + b * q[i * d + j];
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) lam[i * d + j] = q[i * d + j] / std::sqrt(q[i * d + i] * q[j * d + j]);
    visit(t, lam);
  }
}

}  // namespace

bool UnivariateGarch::stationary() const {
  return w0 > 0 && (w.array() >= 0).all() && (zeta.array() >= 0).all() && persistence() < 1 - 1e-8;
}

Eigen::VectorXd garch_variances(const UnivariateGarch& model, const Eigen::VectorXd& residuals,
                                double initial_variance) {
  const Eigen::Index T = residuals.size();
  const Eigen::Index M = model.w.size(), N = model.zeta.size();
  Eigen::VectorXd k(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double v = model.w0;
    for (Eigen::Index m = 1; m <= M; ++m) {
      const double r = t - m >= 0 ? residuals(t - m) * residuals(t - m) : initial_variance;
      v += model.w(m - 1) * r;
    }
    for (Eigen::Index n = 1; n <= N; ++n) v += model.zeta(n - 1) * (t - n >= 0 ? k(t - n) : initial_variance);
    k(t) = v;
  }
  return k;
}

double garch_log_likelihood(const UnivariateGarch& model, const Eigen::VectorXd& residuals, double initial_variance) {
  return contributions(model, residuals, initial_variance).sum();
}

GarchFit fit_univariate_garch(const Eigen::VectorXd& series, const GarchFitOptions& options) {
  if (series.size() < 50) throw Error(kModule, "fit_univariate_garch", "need at least 50 observations");
  if (!series.allFinite()) throw Error(kModule, "fit_univariate_garch", "non-finite values in series");
  const Eigen::VectorXd l = series.array() - series.mean();
  const double var = l.squaredNorm() / double(l.size());
  if (!(var > 0)) throw Error(kModule, "fit_univariate_garch", "constant series");

  const int M = options.arch_order, N = options.garch_order;
  if (M < 1 || N < 0) throw Error(kModule, "fit_univariate_garch", "invalid GARCH orders");
  const double w0_floor = 1e-10 * var;
  auto loglik = [&](const Eigen::VectorXd& th) { return garch_log_likelihood(unpack(th, M, N), l, var); };
  const double h = options.gradient_step;

  auto ascend = [&](const UnivariateGarch& start) {
    Eigen::VectorXd theta = project(pack(start), w0_floor);
    const Eigen::Index P = theta.size();
    GarchFit fit;
    double current = loglik(theta);
    int quiet = 0;
    for (int iter = 1;; ++iter) {
      // Numeric scores: per-observation central (or one-sided at the
      // boundary) differences, reused for the gradient and the BHHH matrix.
      Eigen::MatrixXd scores(l.size(), P);
      const Eigen::VectorXd mid = contributions(unpack(theta, M, N), l, var);
      for (Eigen::Index j = 0; j < P; ++j) {
        Eigen::VectorXd up = theta, down = theta;
        up(j) += h;
        down(j) -= h;
        const bool has_down = down(j) >= (j == 0 ? w0_floor : 0.0);
        const bool has_up = j == 0 || up.tail(P - 1).sum() <= kMaxPersistence;
        const Eigen::VectorXd cu = has_up ? contributions(unpack(up, M, N), l, var) : mid;
        const Eigen::VectorXd cd = has_down ? contributions(unpack(down, M, N), l, var) : mid;
        scores.col(j) = (cu - cd) / (h * ((has_up ? 1 : 0) + (has_down ? 1 : 0)));
      }
      const Eigen::VectorXd gradient = scores.colwise().sum().transpose();
      Eigen::MatrixXd bhhh = scores.transpose() * scores;
      bhhh.diagonal().array() += 1e-10 * std::max(bhhh.trace() / double(P), 1e-300);

      // Coordinates pinned at a lower bound with the gradient pointing out
      // are held fixed; otherwise the projection would undo the step.
      Eigen::VectorXd direction = Eigen::VectorXd::Zero(P);
      std::vector<Eigen::Index> free;
      for (Eigen::Index j = 0; j < P; ++j)
        if (!(theta(j) <= (j == 0 ? w0_floor : 0.0) && gradient(j) < 0)) free.push_back(j);
      if (!free.empty()) {
        const Eigen::Index F = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd sub(F, F);
        Eigen::VectorXd g(F);
        for (Eigen::Index i = 0; i < F; ++i) {
          g(i) = gradient(free[i]);
          for (Eigen::Index j = 0; j < F; ++j) sub(i, j) = bhhh(free[i], free[j]);
        }
        const Eigen::VectorXd dfree = sub.ldlt().solve(g);
        for (Eigen::Index i = 0; i < F; ++i) direction(free[i]) = dfree(i);
      }
      const Eigen::VectorXd fallback = gradient.cwiseQuotient(bhhh.diagonal());

      double improvement = 0;
      for (const Eigen::VectorXd* dir : {static_cast<const Eigen::VectorXd*>(&direction), &fallback}) {
        for (double step = 1; step > 1e-12 && improvement == 0; step /= 2) {
          const Eigen::VectorXd trial = project(theta + step * *dir, w0_floor);
          const double value = loglik(trial);
          if (std::isfinite(value) && value > current) {
            improvement = value - current;
            theta = trial;
            current = value;
          }
        }
        if (improvement > 0) break;
      }
      fit.trace.push_back(current);
      quiet = improvement < options.tolerance ? quiet + 1 : 0;
      fit.iterations = iter;
      if (quiet >= options.patience) break;
      if (iter >= options.max_iterations) {
        std::ostringstream msg;
        msg << "no convergence after " << iter << " iterations; last iterate (" << theta.transpose()
            << "), gradient norm " << gradient.norm();
        throw Error(kModule, "fit_univariate_garch", msg.str());
      }
    }
    fit.model = unpack(theta, M, N);
    fit.log_likelihood = current;
    return fit;
  };

  auto start = [&](double w0, double w, double zeta) {
    return UnivariateGarch{w0 * var, Eigen::VectorXd::Constant(M, w / M),
                           N > 0 ? Eigen::VectorXd::Constant(N, zeta / N) : Eigen::VectorXd()};
  };
  // The standard start, plus a low-persistence one: on weakly dependent data
  // the likelihood has a flat ridge toward zeta -> 1 that the standard start
  // can slide into.
  GarchFit best = ascend(start(0.1, 0.05, 0.85));
  GarchFit alt = ascend(start(0.8, 0.1, 0.1));
  if (alt.log_likelihood > best.log_likelihood) best = std::move(alt);

  // With every ARCH term at zero the variance no longer responds to the data
  // and the GARCH terms only shape the decay away from the pre-sample value,
  // so they are not identified. Report the constant-variance fit instead.
  if (N > 0 && (best.model.w.array() <= 0).all()) {
    best.model.w0 = var;
    best.model.zeta.setZero();
    best.log_likelihood = garch_log_likelihood(best.model, l, var);
  }
  return best;
}

double dcc_log_likelihood(const Eigen::MatrixXd& standardized, const Eigen::MatrixXd& qbar, double a, double b) {
  const Eigen::Index d = standardized.cols();
  if (qbar.rows() != d || qbar.cols() != d) throw Error(kModule, "dcc_log_likelihood", "dimension mismatch");
  double total = 0;
  std::vector<double> y(static_cast<std::size_t>(d));
  run_dcc_filter(standardized, qbar, a, b, [&](Eigen::Index t, std::vector<double>& lam) {
    if (!cholesky(lam, d))
      throw Error(kModule, "fit_dcc", "singular correlation matrix at t=" + std::to_string(t));
    double lo = lam[0], hi = lam[0], logdet = 0, quad = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double li = lam[i * d + i];
      lo = std::min(lo, li);
      hi = std::max(hi, li);
      logdet += 2 * std::log(li);
      // Forward substitution L y = e.
      double s = standardized(t, i);
      for (Eigen::Index k = 0; k < i; ++k) s -= lam[i * d + k] * y[k];
      y[i] = s / li;
      quad += y[i] * y[i];
    }
    // (max/min pivot)^2 bounds the condition number from below.
    if ((hi / lo) * (hi / lo) > 1e12)
      throw Error(kModule, "fit_dcc", "ill-conditioned correlation matrix at t=" + std::to_string(t));
    total += logdet + quad;
  });
  return -0.5 * total;
}

DccFit fit_dcc(const Eigen::MatrixXd& standardized, const Eigen::MatrixXd& qbar) {
  if (standardized.rows() < 2) throw Error(kModule, "fit_dcc", "need at least 2 observations");
  // Grid points in units of 0.001; a + b < 1 strictly.
  std::map<std::pair<int, int>, double> cache;
  auto eval = [&](int ia, int ib) {
    const auto key = std::make_pair(ia, ib);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const double v = dcc_log_likelihood(standardized, qbar, ia / 1000.0, ib / 1000.0);
    cache.emplace(key, v);
    return v;
  };
  auto better = [](double v, int ia, int ib, double bv, int ba, int bb) {
    return v > bv || (v == bv && std::make_pair(ia, ib) < std::make_pair(ba, bb));
  };

  int best_a = 0, best_b = 0;
  double best = eval(0, 0);
  for (int ia = 0; ia < 1000; ia += 20)
    for (int ib = 0; ia + ib < 1000; ib += 20) {
      const double v = eval(ia, ib);
      if (better(v, ia, ib, best, best_a, best_b)) best = v, best_a = ia, best_b = ib;
    }

  for (int round = 0; round < 50; ++round) {
    const int ca = best_a, cb = best_b;
    for (int ia = std::max(0, ca - 20); ia <= ca + 20; ++ia)
      for (int ib = std::max(0, cb - 20); ib <= cb + 20 && ia + ib < 1000; ++ib) {
        const double v = eval(ia, ib);
        if (better(v, ia, ib, best, best_a, best_b)) best = v, best_a = ia, best_b = ib;
      }
    if (best_a == ca && best_b == cb) break;
  }
  return {best_a / 1000.0, best_b / 1000.0, best};
}

Eigen::MatrixXd unconditional_correlation(const Eigen::MatrixXd& standardized) {
  const Eigen::MatrixXd s = standardized.transpose() * standardized / double(standardized.rows());
  const Eigen::VectorXd inv = s.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd r = inv.asDiagonal() * s * inv.asDiagonal();
  r.diagonal().setOnes();
  return r;
}

DccGarchFit fit_dcc_garch(const Eigen::MatrixXd& x, const GarchFitOptions& options) {
  const Eigen::Index T = x.rows(), d = x.cols();
  if (d < 1) throw Error(kModule, "fit_dcc_garch", "empty series");
  DccGarchFit out;
  out.model.mu = x.colwise().mean().transpose();
  out.standardized.resize(T, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    GarchFit g;
    try {
      g = fit_univariate_garch(x.col(i), options);
    } catch (const Error& e) {
      throw Error(kModule, "fit_dcc_garch", "component " + std::to_string(i) + ": " + e.detail());
    }
    const Eigen::VectorXd l = x.col(i).array() - out.model.mu(i);
    const Eigen::VectorXd k = garch_variances(g.model, l, l.squaredNorm() / double(T));
    out.standardized.col(i) = l.array() / k.array().sqrt();
    out.model.components.push_back(g.model);
    out.stage_one.push_back(std::move(g));
  }
  out.model.qbar = unconditional_correlation(out.standardized);
  out.stage_two = fit_dcc(out.standardized, out.model.qbar);
  out.model.a = out.stage_two.a;
  out.model.b = out.stage_two.b;
  return out;
}

DccForecast forecast_dcc(const DccGarchModel& model, const Eigen::MatrixXd& history, Eigen::Index h) {
  const Eigen::Index d = model.mu.size(), T = history.rows();
  if (history.cols() != d || static_cast<Eigen::Index>(model.components.size()) != d)
    throw Error(kModule, "forecast_dcc", "dimension mismatch");
  Eigen::Index order = 0;
  for (const auto& c : model.components) order = std::max({order, c.w.size(), c.zeta.size()});
  if (T < order + 1) throw Error(kModule, "forecast_dcc", "history shorter than the GARCH order");

  DccForecast out{model.mu.transpose().replicate(h, 1), {}};

  // Variance paths: filtered history followed by expected future values.
  std::vector<std::vector<double>> sq(static_cast<std::size_t>(d)), var(static_cast<std::size_t>(d));
  Eigen::MatrixXd e(T, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& g = model.components[static_cast<std::size_t>(i)];
    const Eigen::VectorXd l = history.col(i).array() - model.mu(i);
    const Eigen::VectorXd k = garch_variances(g, l, l.squaredNorm() / double(T));
    e.col(i) = l.array() / k.array().sqrt();
    auto& s = sq[static_cast<std::size_t>(i)];
    auto& v = var[static_cast<std::size_t>(i)];
    for (Eigen::Index t = 0; t < T; ++t) s.push_back(l(t) * l(t)), v.push_back(k(t));
    for (Eigen::Index step = 0; step < h; ++step) {
      const Eigen::Index t = T + step;
      double next = g.w0;
      for (Eigen::Index m = 1; m <= g.w.size(); ++m) next += g.w(m - 1) * s[static_cast<std::size_t>(t - m)];
      for (Eigen::Index n = 1; n <= g.zeta.size(); ++n) next += g.zeta(n - 1) * v[static_cast<std::size_t>(t - n)];
      v.push_back(next);
      s.push_back(next);  // E[l^2] = k beyond the history
    }
  }

  Eigen::MatrixXd q = model.qbar;
  for (Eigen::Index t = 1; t < T; ++t)
    q = (1 - model.a - model.b) * model.qbar + model.a * e.row(t - 1).transpose() * e.row(t - 1) + model.b * q;
  // One step past the history uses the last observed residual, later steps
  // its expectation.
  q = (1 - model.a - model.b) * model.qbar + model.a * e.row(T - 1).transpose() * e.row(T - 1) + model.b * q;
  for (Eigen::Index step = 0; step < h; ++step) {
    if (step > 0) q = (1 - model.a - model.b) * model.qbar + (model.a + model.b) * q;
    const Eigen::VectorXd qd = q.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd lambda = qd.asDiagonal() * q * qd.asDiagonal();
    Eigen::VectorXd sd(d);
    for (Eigen::Index i = 0; i < d; ++i) sd(i) = std::sqrt(var[static_cast<std::size_t>(i)][static_cast<std::size_t>(T + step)]);
    out.covariance.push_back(sd.asDiagonal() * lambda * sd.asDiagonal());
  }
  return out;
}

Eigen::VectorXd simulate_garch(const UnivariateGarch& model, double mean, Eigen::Index T, std::uint64_t seed,
                               Eigen::Index burn) {
  if (!model.stationary()) throw Error(kModule, "simulate_garch", "model is not stationary");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  const double lr = model.long_run_variance();
  const Eigen::Index total = T + burn;
  Eigen::VectorXd l(total), k(total);
  for (Eigen::Index t = 0; t < total; ++t) {
    double v = model.w0;
    for (Eigen::Index m = 1; m <= model.w.size(); ++m) v += model.w(m - 1) * (t - m >= 0 ? l(t - m) * l(t - m) : lr);
    for (Eigen::Index n = 1; n <= model.zeta.size(); ++n) v += model.zeta(n - 1) * (t - n >= 0 ? k(t - n) : lr);
    k(t) = v;
    l(t) = std::sqrt(v) * g(rng);
  }
  return l.tail(T).array() + mean;
}

Eigen::MatrixXd simulate_dcc_garch(const DccGarchModel& model, Eigen::Index T, std::uint64_t seed, Eigen::Index burn) {
  const Eigen::Index d = model.mu.size();
  if (static_cast<Eigen::Index>(model.components.size()) != d) throw Error(kModule, "simulate_dcc_garch", "dimension mismatch");
  if (model.a < 0 || model.b < 0 || model.a + model.b >= 1)
    throw Error(kModule, "simulate_dcc_garch", "DCC parameters outside a, b >= 0, a + b < 1");
  for (const auto& c : model.components)
    if (!c.stationary()) throw Error(kModule, "simulate_dcc_garch", "component is not stationary");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  const Eigen::Index total = T + burn;
  Eigen::MatrixXd l(total, d), k(total, d), e(total, d);
  Eigen::MatrixXd q = model.qbar;
  Eigen::VectorXd z(d);
  for (Eigen::Index t = 0; t < total; ++t) {
    if (t > 0) q = (1 - model.a - model.b) * model.qbar + model.a * e.row(t - 1).transpose() * e.row(t - 1) + model.b * q;
    const Eigen::VectorXd qd = q.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd lambda = qd.asDiagonal() * q * qd.asDiagonal();
    for (Eigen::Index i = 0; i < d; ++i) z(i) = g(rng);
    e.row(t) = (Eigen::LLT<Eigen::MatrixXd>(lambda).matrixL() * z).transpose();
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto& c = model.components[static_cast<std::size_t>(i)];
      const double lr = c.long_run_variance();
      double v = c.w0;
      for (Eigen::Index m = 1; m <= c.w.size(); ++m) v += c.w(m - 1) * (t - m >= 0 ? l(t - m, i) * l(t - m, i) : lr);
      for (Eigen::Index n = 1; n <= c.zeta.size(); ++n) v += c.zeta(n - 1) * (t - n >= 0 ? k(t - n, i) : lr);
      k(t, i) = v;
      l(t, i) = std::sqrt(v) * e(t, i);
    }
  }
  return (l.bottomRows(T).rowwise() + model.mu.transpose());
}

}  // namespace shapedyn
