#include "shapedyn/forecasting.hpp"

#include <cmath>
#include <string>

#include "shapedyn/error.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "forecasting";

}  // namespace

ForecastSplit forecast_split(Eigen::Index rows, double train_frac, Eigen::Index horizon) {
  if (!(train_frac > 0 && train_frac < 1)) throw Error(kModule, "forecast_split", "train fraction must lie in (0, 1)");
  if (horizon < 1) throw Error(kModule, "forecast_split", "horizon must be positive");
  ForecastSplit s;
  s.train_rows = static_cast<Eigen::Index>(std::floor(train_frac * double(rows)));
  s.horizon = horizon;
  s.origins = rows - s.train_rows - horizon + 1;
  if (s.origins < 1)
    throw Error(kModule, "forecast_split",
                std::to_string(rows - s.train_rows) + " test rows cannot cover a horizon of " + std::to_string(horizon));
  return s;
}

int LagPredictionErrors::best() const {
  Eigen::Index i = 0;
  mean.minCoeff(&i);
  return lags[static_cast<std::size_t>(i)];
}

LagPredictionErrors lag_prediction_errors(const Eigen::MatrixXd& x, double train_frac, std::span<const int> lags,
                                          Eigen::Index horizon) {
  if (lags.empty()) throw Error(kModule, "lag_prediction_errors", "no lags");
  LagPredictionErrors out;
  out.lags.assign(lags.begin(), lags.end());
  out.split = forecast_split(x.rows(), train_frac, horizon);
  const auto& s = out.split;
  out.by_horizon = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lags.size()), horizon);
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const VarModel m = fit_var(x.topRows(s.train_rows), lags[li]);
    for (Eigen::Index o = 0; o < s.origins; ++o) {
      const Eigen::Index origin = s.train_rows + o;
      const Eigen::MatrixXd pred = predict(m, x.topRows(origin), horizon);
      out.by_horizon.row(static_cast<Eigen::Index>(li)) +=
          (x.middleRows(origin, horizon) - pred).rowwise().squaredNorm().transpose();
    }
  }
  out.by_horizon /= double(s.origins);
  out.mean = out.by_horizon.rowwise().mean();
  return out;
}

ModelComparison compare_forecasts(const Eigen::MatrixXd& x, double train_frac, int lag, Eigen::Index horizon,
                                  const GarchFitOptions& options) {
  ModelComparison out;
  out.split = forecast_split(x.rows(), train_frac, horizon);
  out.lag = lag;
  const auto& s = out.split;
  out.var = fit_var(x.topRows(s.train_rows), lag);
  out.garch = fit_dcc_garch(x.topRows(s.train_rows), options).model;
  for (Eigen::Index o = 0; o < s.origins; ++o) {
    const Eigen::Index origin = s.train_rows + o;
    const Eigen::MatrixXd truth = x.middleRows(origin, horizon);
    out.var_error += prediction_error(predict(out.var, x.topRows(origin), horizon), truth);
    out.garch_error += prediction_error(forecast_dcc(out.garch, x.topRows(origin), horizon).mean, truth);
  }
  out.var_error /= double(s.origins);
  out.garch_error /= double(s.origins);
  return out;
}

}  // namespace shapedyn
