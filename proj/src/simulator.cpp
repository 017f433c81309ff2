#include "shapedyn/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "shapedyn/diagnostics.hpp"
#include "shapedyn/error.hpp"
#include "shapedyn/seeding.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "simulator";
constexpr double kUnstableRadius = 1.05;

Eigen::MatrixXd sample(VarModel model, const Eigen::RowVectorXd& init, Eigen::Index length, std::uint64_t seed,
                       const char* coordinate) {
  const double radius = spectral_radius(model);
  if (radius >= kUnstableRadius) {
    warn(kModule, std::string("unstable ") + coordinate + "-coefficient VAR (spectral radius " + std::to_string(radius) +
                      "); noise scaled by 1/radius^2");
    model.sigma /= radius * radius;
  }
  return synthesize(model, init, length, seed);
}

// Index of the sine (cosine = +1) coefficient of harmonic n.
Eigen::Index sine_index(int n) { return 2 * n - 1; }

}  // namespace

Eigen::MatrixXd fourier_basis(Eigen::Index n, int m) {
  Eigen::MatrixXd b(n, 2 * m + 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = double(k) / double(n);
    b(k, 0) = 1;
    for (int h = 1; h <= m; ++h) {
      b(k, sine_index(h)) = std::numbers::sqrt2 * std::sin(2 * std::numbers::pi * h * t);
      b(k, sine_index(h) + 1) = std::numbers::sqrt2 * std::cos(2 * std::numbers::pi * h * t);
    }
  }
  return b;
}

FourierCoeffSeries contour_to_fourier(std::span<const Contour<double>> frames, int m) {
  if (m < 1) throw Error(kModule, "contour_to_fourier", "need at least one harmonic");
  if (frames.empty()) throw Error(kModule, "contour_to_fourier", "empty sequence");
  const Eigen::Index n = frames.front().size();
  if (n < 2 * (2 * m + 1))
    throw Error(kModule, "contour_to_fourier",
                std::to_string(m) + " harmonics need at least " + std::to_string(2 * (2 * m + 1)) + " points, got " +
                    std::to_string(n));
  const Eigen::MatrixXd basis = fourier_basis(n, m) / double(n);
  FourierCoeffSeries out{Eigen::MatrixXd(frames.size(), 2 * m + 1), Eigen::MatrixXd(frames.size(), 2 * m + 1), m};
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != n)
      throw Error(kModule, "contour_to_fourier", "frame " + std::to_string(t) + " has a different point count");
    out.c1.row(static_cast<Eigen::Index>(t)) = frames[t].points.row(0) * basis;
    out.c2.row(static_cast<Eigen::Index>(t)) = frames[t].points.row(1) * basis;
  }
  return out;
}

std::vector<Contour<double>> fourier_to_contour(const FourierCoeffSeries& coeffs, Eigen::Index n) {
  if (coeffs.c1.cols() != 2 * coeffs.m + 1 || coeffs.c2.cols() != coeffs.c1.cols() || coeffs.c2.rows() != coeffs.c1.rows())
    throw Error(kModule, "fourier_to_contour", "coefficient matrices do not match the harmonic count");
  const Eigen::MatrixXd basis = fourier_basis(n, coeffs.m).transpose();
  std::vector<Contour<double>> out;
  for (Eigen::Index t = 0; t < coeffs.frames(); ++t) {
    Contour<double> c{Points2<double>(2, n)};
    c.points.row(0) = coeffs.c1.row(t) * basis;
    c.points.row(1) = coeffs.c2.row(t) * basis;
    out.push_back(std::move(c));
  }
  return out;
}

CoefficientVars fit_coefficient_vars(std::span<const Contour<double>> seed_sequence, int m) {
  const auto coeffs = contour_to_fourier(seed_sequence, m);
  try {
    return {fit_var(coeffs.c1, 1), fit_var(coeffs.c2, 1)};
  } catch (const Error& e) {
    throw Error(kModule, "fit_coefficient_vars", e.detail());
  }
}

std::vector<SimulatedSequence> sample_coefficient_vars(const CoefficientVars& vars, const FourierCoeffSeries& init,
                                                       const std::string& label, Eigen::Index length, int count,
                                                       std::uint64_t seed, Eigen::Index n_points) {
  if (init.frames() < 1) throw Error(kModule, "sample_coefficient_vars", "missing initial frame");
  if (length < 1 || count < 0) throw Error(kModule, "sample_coefficient_vars", "invalid length or count");
  std::vector<SimulatedSequence> out;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t stream = derive_seed(seed, static_cast<std::uint64_t>(i));
    FourierCoeffSeries c{sample(vars.x, init.c1.row(0), length, derive_seed(stream, 0), "x"),
                         sample(vars.y, init.c2.row(0), length, derive_seed(stream, 1), "y"), init.m};
    out.push_back({label + "_" + std::to_string(i), label, fourier_to_contour(c, n_points)});
  }
  return out;
}

std::vector<SimulatedSequence> simulate_class(std::span<const Contour<double>> seed_sequence, const std::string& label,
                                              int m, Eigen::Index length, int count, std::uint64_t seed,
                                              Eigen::Index n_points) {
  const auto vars = fit_coefficient_vars(seed_sequence, m);
  return sample_coefficient_vars(vars, contour_to_fourier(seed_sequence.first(1), m), label, length, count, seed,
                                 n_points);
}

std::vector<std::string> builtin_class_names() { return {"slow", "fast", "exchange", "flicker"}; }

CoefficientVars builtin_class_dynamics(int class_id, int m) {
  if (class_id < 0 || class_id > 3) throw Error(kModule, "builtin_class_dynamics", "unknown class " + std::to_string(class_id));
  if (m < 2) throw Error(kModule, "builtin_class_dynamics", "need at least two harmonics");
  const Eigen::Index k = 2 * m + 1;
  constexpr double radius = 10;

  // Deviations from the mean shape follow x - mu -> A (x - mu) + e. The centroid and
  // the first harmonic (size, orientation) share the same mild dynamics in
  // every class; the classes differ in how harmonics 2..m evolve and in which
  // harmonic carries the most noise. Distance features are scale-free, so
  // classes must differ in the direction of their dynamics, not only in size.
  const int dominant = class_id == 1 ? 3 : 2;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd sd(k);
  a(0, 0) = 0.95;
  sd(0) = 0.3;
  for (Eigen::Index i = 1; i <= 2; ++i) a(i, i) = 0.9, sd(i) = 0.02 * radius;
  for (int n = 2; n <= m; ++n) {
    const Eigen::Index s = sine_index(n);
    sd(s) = sd(s + 1) = 0.1 * radius / (n * n) * (n == dominant ? 3 : 1);
    switch (class_id) {
      case 0: a(s, s) = a(s + 1, s + 1) = 0.97; break;  // slowly drifting deformations
      case 1: a(s, s) = a(s + 1, s + 1) = 0.2; break;   // fast, nearly independent fluctuations
      case 2:
        // Standing oscillation: harmonics n and n + 1 exchange energy,
        // (n, n + 1) = (2, 3), (4, 5), ...; a lone top harmonic just decays.
        if (n % 2 == 0 && n < m) {
          const double angle = 0.5, mod = 0.95;
          for (Eigen::Index off = 0; off < 2; ++off) {
            const Eigen::Index i = s + off, j = s + 2 + off;
            a(i, i) = a(j, j) = mod * std::cos(angle);
            a(i, j) = -mod * std::sin(angle);
            a(j, i) = mod * std::sin(angle);
          }
        } else if (n % 2 == 0) {
          a(s, s) = a(s + 1, s + 1) = 0.95;
        }
        break;
      case 3: a(s, s) = a(s + 1, s + 1) = -0.8; break;  // alternating protrusion and retraction
    }
  }

  CoefficientVars out;
  for (int coord = 0; coord < 2; ++coord) {
    // Mean shape x = r (cos u + 0.2 cos 2u), y = r (sin u + 0.15 sin 3u),
    // u = 2 pi t: a bean without rotational symmetry. Near-circular means make
    // start point and rotation nearly interchangeable, so frame alignment
    // becomes ill-conditioned.
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(k);
    if (coord == 0) {
      mu(sine_index(1) + 1) = radius / std::numbers::sqrt2;
      mu(sine_index(2) + 1) = 0.2 * radius / std::numbers::sqrt2;
    } else {
      mu(sine_index(1)) = radius / std::numbers::sqrt2;
      if (m >= 3) mu(sine_index(3)) = 0.15 * radius / std::numbers::sqrt2;
    }
    VarModel v;
    v.p = 1;
    v.A = {a};
    v.c = (Eigen::MatrixXd::Identity(k, k) - a) * mu;
    v.sigma = sd.array().square().matrix().asDiagonal();
    (coord == 0 ? out.x : out.y) = std::move(v);
  }
  return out;
}

std::vector<Contour<double>> builtin_seed_sequence(int class_id, Eigen::Index frames, std::uint64_t seed, int m,
                                                   Eigen::Index n_points) {
  const auto vars = builtin_class_dynamics(class_id, m);
  FourierCoeffSeries init{stationary_mean(vars.x).transpose(), stationary_mean(vars.y).transpose(), m};
  return sample_coefficient_vars(vars, init, "seed", frames, 1, seed, n_points).front().frames;
}

std::vector<SimulatedSequence> simulate_dataset(const SimulationConfig& config, std::uint64_t seed) {
  const auto names = builtin_class_names();
  std::vector<SimulatedSequence> out;
  for (int c = 0; c < static_cast<int>(names.size()); ++c) {
    const std::uint64_t stream = derive_seed(seed, static_cast<std::uint64_t>(c));
    const auto seq = builtin_seed_sequence(c, config.seed_length, derive_seed(stream, 0), config.harmonics, config.n_points);
    auto sims = simulate_class(seq, names[static_cast<std::size_t>(c)], config.harmonics, config.length,
                               config.per_class, derive_seed(stream, 1), config.n_points);
    for (auto& s : sims) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace shapedyn
