#ifndef SHAPEDYN_SIMULATOR_HPP
#define SHAPEDYN_SIMULATOR_HPP

// Contour-sequence simulation in a Fourier basis: coordinate functions are
// expanded in {1, sqrt2 sin(2 pi n t), sqrt2 cos(2 pi n t)}, n = 1..m, a VAR(1)
// is fitted to each coordinate's coefficient series, and new coefficient
// series are sampled and mapped back to contours.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapedyn/curve.hpp"
#include "shapedyn/var_model.hpp"

namespace shapedyn {

inline constexpr int kDefaultHarmonics = 10;
inline constexpr Eigen::Index kDefaultSimulatedLength = 150;

struct FourierCoeffSeries {
  Eigen::MatrixXd c1;  // x coordinate, frames x (2m + 1)
  Eigen::MatrixXd c2;  // y coordinate
  int m = 0;

  Eigen::Index frames() const { return c1.rows(); }
};

/// n x (2m + 1) basis values at t_k = k / n; column order 1, sin 1, cos 1,
/// sin 2, cos 2, ...
Eigen::MatrixXd fourier_basis(Eigen::Index n, int m);

/// Coefficients by discrete inner products on the uniform grid. Every frame
/// must have the same number of points, at least 2(2m + 1).
FourierCoeffSeries contour_to_fourier(std::span<const Contour<double>> frames, int m);

/// Evaluates the expansion at n uniform parameter values.
std::vector<Contour<double>> fourier_to_contour(const FourierCoeffSeries& coeffs, Eigen::Index n);

struct SimulatedSequence {
  std::string id;
  std::string label;
  std::vector<Contour<double>> frames;
};

struct CoefficientVars {
  VarModel x;  // for c1
  VarModel y;  // for c2
};

/// VAR(1) fits of both coefficient series of a seed sequence. Frames are
/// used as sampled (uniform parameter grid, equal point counts).
CoefficientVars fit_coefficient_vars(std::span<const Contour<double>> seed_sequence, int m);

/// Samples `count` sequences of `length` frames from coefficient VARs. Each
/// sequence starts at `init` and uses its own stream derived from (seed,
/// index). A fitted model with spectral radius >= 1.05 triggers a warning and
/// its noise covariance is scaled by 1 / radius^2.
std::vector<SimulatedSequence> sample_coefficient_vars(const CoefficientVars& vars, const FourierCoeffSeries& init,
                                                       const std::string& label, Eigen::Index length, int count,
                                                       std::uint64_t seed, Eigen::Index n_points);

/// Fit VAR(1)s to the seed sequence's coefficients and sample new sequences
/// of `n_points` points starting from the seed's first frame. Ids are
/// "<label>_<index>".
std::vector<SimulatedSequence> simulate_class(std::span<const Contour<double>> seed_sequence, const std::string& label,
                                              int m, Eigen::Index length, int count, std::uint64_t seed,
                                              Eigen::Index n_points = kDefaultSamplePoints);

/// Built-in motility classes used to seed self-generated datasets; each is a
/// known coefficient-space VAR(1) with harmonic amplitudes decaying as 1/n^2.
std::vector<std::string> builtin_class_names();
CoefficientVars builtin_class_dynamics(int class_id, int m = kDefaultHarmonics);

/// A seed sequence sampled directly from a built-in class.
std::vector<Contour<double>> builtin_seed_sequence(int class_id, Eigen::Index frames, std::uint64_t seed,
                                                   int m = kDefaultHarmonics, Eigen::Index n_points = kDefaultSamplePoints);

struct SimulationConfig {
  int per_class = 100;
  Eigen::Index length = kDefaultSimulatedLength;
  Eigen::Index seed_length = 300;
  int harmonics = kDefaultHarmonics;
  Eigen::Index n_points = kDefaultSamplePoints;
};

/// For every built-in class: a seed sequence, then simulate_class on it.
/// Sequences are ordered by class, then index.
std::vector<SimulatedSequence> simulate_dataset(const SimulationConfig& config, std::uint64_t seed);

}  // namespace shapedyn

#endif  // SHAPEDYN_SIMULATOR_HPP
