#ifndef SHAPEDYN_FORECASTING_HPP
#define SHAPEDYN_FORECASTING_HPP

// Out-of-sample forecast studies on one series: the first rows train the
// models, every later row is used as a forecast origin.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "shapedyn/garch.hpp"
#include "shapedyn/var_model.hpp"

namespace shapedyn {

struct ForecastSplit {
  Eigen::Index train_rows = 0;
  Eigen::Index horizon = 1;
  Eigen::Index origins = 0;  // origins train_rows .. train_rows + origins - 1
};

/// Training rows = floor(train_frac * T); origins run while a full horizon of
/// truth remains.
ForecastSplit forecast_split(Eigen::Index rows, double train_frac, Eigen::Index horizon);

struct LagPredictionErrors {
  std::vector<int> lags;
  ForecastSplit split;
  Eigen::MatrixXd by_horizon;  // lags x horizon, squared error averaged over origins
  Eigen::VectorXd mean;        // per lag, (1/h) sum over horizons averaged over origins

  int best() const;
};

/// Fits VAR(p) for each lag on the training rows and scores recursive
/// forecasts from every origin, with the full history up to the origin.
LagPredictionErrors lag_prediction_errors(const Eigen::MatrixXd& x, double train_frac, std::span<const int> lags,
                                          Eigen::Index horizon);

struct ModelComparison {
  ForecastSplit split;
  int lag = 1;
  double var_error = 0;
  double garch_error = 0;
  VarModel var;
  DccGarchModel garch;
};

/// VAR(lag) against DCC-GARCH point forecasts on the same origins.
ModelComparison compare_forecasts(const Eigen::MatrixXd& x, double train_frac, int lag, Eigen::Index horizon,
                                  const GarchFitOptions& options = {});

}  // namespace shapedyn

#endif  // SHAPEDYN_FORECASTING_HPP
