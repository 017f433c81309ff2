#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shapedyn/diagnostics.hpp"
#include "shapedyn/error.hpp"
#include "shapedyn/forecasting.hpp"
#include "shapedyn/io.hpp"
#include "shapedyn/pipeline.hpp"
#include "shapedyn/seeding.hpp"
#include "shapedyn/simulator.hpp"

using namespace shapedyn;

namespace {

constexpr const char* kModule = "cli";

// Flags shared by every subcommand. Values given on the command line win over
// the --config file, which wins over the defaults.
struct Common {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  Eigen::Index n_points = kDefaultSamplePoints;
  int pca_dim = 5;
  int lag = 1;
  int p_max = 5;
  int folds = 5;
  std::string lag_mode = "fixed";
  std::string criterion = "bic";
  std::string weights = "1,1";
  std::string kind = "shape";
  std::string classifier = "svm";
  std::map<std::string, CLI::Option*> opts;
};

struct Settings {
  PipelineConfig pipeline;
  fs::path out;
  Json record;  // resolved configuration, as written to the manifest
};

void add_common(CLI::App* sub, Common& c) {
  c.opts["config"] = sub->add_option("--config", c.config_path, "JSON file with configuration keys");
  c.opts["out"] = sub->add_option("--out", c.out, "run directory (default run_<command>)");
  c.opts["seed"] = sub->add_option("--seed", c.seed, "root random seed");
  c.opts["n_points"] = sub->add_option("--n-points", c.n_points, "resampled points per contour");
  c.opts["pca_dim"] = sub->add_option("--pca-dim,--d", c.pca_dim, "TSRVF-PCA dimension");
  c.opts["lag"] = sub->add_option("--lag", c.lag, "VAR lag for fixed lag mode");
  c.opts["p_max"] = sub->add_option("--p-max", c.p_max, "largest lag considered");
  c.opts["lag_mode"] = sub->add_option("--lag-mode", c.lag_mode, "fixed, best or all");
  c.opts["criterion"] = sub->add_option("--criterion", c.criterion, "aic, bic or hq");
  c.opts["folds"] = sub->add_option("--folds", c.folds, "cross-validation folds");
  c.opts["weights"] = sub->add_option("--weights", c.weights, "shape and kinematics weights, w1,w2");
  c.opts["kind"] = sub->add_option("--features", c.kind, "shape, kinematics or combined");
  c.opts["classifier"] = sub->add_option("--classifier", c.classifier, "svm[:C], knn[:k] or centroid");
}

FeatureWeights parse_weights(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(kModule, "config", "weights must be w1,w2, got '" + text + "'");
  try {
    FeatureWeights w{std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    if (w.shape < 0 || w.kinematics < 0) throw Error(kModule, "config", "weights must be nonnegative");
    return w;
  } catch (const std::logic_error&) {
    throw Error(kModule, "config", "weights must be w1,w2, got '" + text + "'");
  }
}

Settings resolve(const std::string& command, Common c) {
  if (!c.config_path.empty()) {
    const Json j = read_json(c.config_path);
    if (!j.is_object()) throw Error(kModule, "config", c.config_path + ": expected a JSON object");
    auto take = [&](const char* key, auto& target) {
      if (j.contains(key) && !c.opts.at(key)->count()) j.at(key).get_to(target);
    };
    try {
      for (const auto& [key, _] : j.items())
        if (!c.opts.contains(key) || key == "config")
          throw Error(kModule, "config", c.config_path + ": unknown key '" + key + "'");
      take("out", c.out);
      take("seed", c.seed);
      take("n_points", c.n_points);
      take("pca_dim", c.pca_dim);
      take("lag", c.lag);
      take("p_max", c.p_max);
      take("folds", c.folds);
      take("lag_mode", c.lag_mode);
      take("criterion", c.criterion);
      take("kind", c.kind);
      take("classifier", c.classifier);
      if (j.contains("weights") && !c.opts.at("weights")->count()) {
        const auto& w = j.at("weights");
        c.weights = w.is_string() ? w.get<std::string>() : format_double(w.at(0).get<double>()) + "," +
                                                             format_double(w.at(1).get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(kModule, "config", c.config_path + ": " + e.what());
    }
  }
  if (c.n_points < 3 || c.pca_dim < 1 || c.lag < 1 || c.p_max < 1 || c.folds < 2)
    throw Error(kModule, "config", "counts must be positive (n_points >= 3, folds >= 2)");

  Settings s;
  auto& p = s.pipeline;
  p.n_points = c.n_points;
  p.pca_dim = c.pca_dim;
  p.lag = c.lag;
  p.p_max = c.p_max;
  p.folds = c.folds;
  p.seed = c.seed;
  p.lag_mode = parse_lag_mode(c.lag_mode);
  p.criterion = parse_lag_criterion(c.criterion);
  p.kind = parse_feature_kind(c.kind);
  p.weights = parse_weights(c.weights);
  p.classifier = parse_classifier(c.classifier);
  s.out = c.out.empty() ? fs::path("run_" + command) : fs::path(c.out);
  s.record = {{"seed", c.seed},
              {"n_points", c.n_points},
              {"pca_dim", c.pca_dim},
              {"lag", c.lag},
              {"p_max", c.p_max},
              {"lag_mode", to_string(p.lag_mode)},
              {"criterion", to_string(p.criterion)},
              {"folds", c.folds},
              {"weights", {p.weights.shape, p.weights.kinematics}},
              {"kind", to_string(p.kind)},
              {"classifier", to_string(p.classifier)}};
  fs::create_directories(s.out);
  return s;
}

std::string csv_cell(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char ch : v) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text += (i ? "," : "") + csv_cell(cells[i]);
    text += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  write_text(path, text);
}

Eigen::MatrixXd read_series(const fs::path& path) {
  const Eigen::MatrixXd x = read_csv(path);
  if (x.rows() < 2 || x.cols() < 1) throw Error(kModule, "read_series", path.string() + ": need a header and 2+ rows");
  return x;
}

std::vector<std::string> series_header(Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index i = 1; i <= d; ++i) h.push_back("x" + std::to_string(i));
  return h;
}

// Sequences from files and/or a dataset table (id,class,path), sorted by id so
// outputs do not depend on argument order.
std::vector<ContourSequenceFile> load_sequences(const std::vector<std::string>& files, const std::string& dataset,
                                                RunManifest& manifest) {
  std::vector<ContourSequenceFile> out;
  for (const auto& f : files) {
    out.push_back(read_contour_sequence(f));
    manifest.add_input(f);
  }
  if (!dataset.empty()) {
    manifest.add_input(dataset);
    const fs::path root = fs::path(dataset).parent_path();
    std::istringstream in(read_text(dataset));
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (header) {
        if (line != "id,class,path") throw Error(kModule, "load_dataset", dataset + ": expected header id,class,path");
        header = false;
        continue;
      }
      const auto a = line.find(','), b = line.find(',', a == std::string::npos ? a : a + 1);
      if (a == std::string::npos || b == std::string::npos)
        throw Error(kModule, "load_dataset", dataset + ": malformed row '" + line + "'");
      const fs::path path = root / line.substr(b + 1);
      auto seq = read_contour_sequence(path);
      manifest.add_input(path);
      seq.id = line.substr(0, a);
      seq.label = line.substr(a + 1, b - a - 1);
      out.push_back(std::move(seq));
    }
  }
  if (out.empty()) throw Error(kModule, "load_sequences", "no input sequences");
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].id == out[i - 1].id) throw Error(kModule, "load_sequences", "duplicate sequence id '" + out[i].id + "'");
  return out;
}

std::vector<std::string> class_names_of(const std::vector<ContourSequenceFile>& seqs) {
  std::set<std::string> names;
  for (const auto& s : seqs) {
    if (!s.label) throw Error(kModule, "labels", "sequence '" + s.id + "' has no class label");
    names.insert(*s.label);
  }
  return {names.begin(), names.end()};
}

std::vector<PreparedSequence> prepare_all(std::vector<ContourSequenceFile> seqs, const std::vector<std::string>& names,
                                          const PipelineConfig& config) {
  std::vector<PreparedSequence> out;
  out.reserve(seqs.size());
  for (auto& s : seqs) {
    int label = -1;
    if (s.label) {
      const auto it = std::find(names.begin(), names.end(), *s.label);
      if (it != names.end()) label = static_cast<int>(it - names.begin());
    }
    out.push_back(prepare_sequence(s.id, label, std::move(s.frames), config));
  }
  return out;
}

Contour<double> contour_of(const Shape& q) {
  return center_and_scale(from_srvf(Srvf<double>{q.values()}, Point2<double>(0, 0)).contour);
}

std::vector<int> parse_lags(const std::string& text) {
  std::vector<int> lags;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const int a = std::stoi(text.substr(0, dots)), b = std::stoi(text.substr(dots + 2));
      for (int p = a; p <= b; ++p) lags.push_back(p);
    } else {
      std::istringstream in(text);
      std::string part;
      while (std::getline(in, part, ',')) lags.push_back(std::stoi(part));
    }
  } catch (const std::logic_error&) {
    throw Error(kModule, "parse_lags", "expected a..b or a,b,c, got '" + text + "'");
  }
  if (lags.empty() || *std::min_element(lags.begin(), lags.end()) < 1)
    throw Error(kModule, "parse_lags", "lags must be positive, got '" + text + "'");
  return lags;
}

Json shape_feature_json(const ShapeFeature& f) {
  return {{"p", f.p()},
          {"degenerate", f.degenerate},
          {"beta", matrix_json(f.beta)},
          {"abar", matrix_json(f.abar)},
          {"sigma", matrix_json(f.sigma)}};
}

// ---------------------------------------------------------------------------

void cmd_ingest(const Settings& s, const std::vector<std::string>& files, const std::string& dataset) {
  RunManifest m("ingest", s.out);
  m.set("pipeline", s.record);
  const auto seqs = load_sequences(files, dataset, m);
  std::vector<std::vector<std::string>> rows;
  for (const auto& seq : seqs) {
    ContourSequenceFile norm{seq.id, seq.label, {}};
    double perimeter_sum = 0;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      try {
        perimeter_sum += perimeter(seq.frames[t]);
        norm.frames.push_back(normalize_contour(seq.frames[t], s.pipeline.n_points));
      } catch (const Error& e) {
        throw Error(e.module(), e.operation(),
                    "sequence '" + seq.id + "' frame " + std::to_string(t) + ": " + e.detail());
      }
    }
    const fs::path out = s.out / "contours" / (seq.id + ".json");
    write_contour_json(out, norm);
    m.add_output(out);
    rows.push_back({seq.id, seq.label.value_or(""), std::to_string(seq.frames.size()),
                    std::to_string(seq.frames.front().size()), format_double(perimeter_sum / double(seq.frames.size()))});
  }
  write_table(s.out / "ingest.csv", {"id", "class", "frames", "points", "mean_perimeter"}, rows);
  m.add_output(s.out / "ingest.csv");
  m.write();
  std::cout << "ingested " << seqs.size() << " sequences into " << (s.out / "contours").string() << "\n";
}

void cmd_geodesic(const Settings& s, const std::string& a, const std::string& b, int frame_a, int frame_b, int steps) {
  RunManifest m("geodesic", s.out);
  m.set("pipeline", s.record);
  m.set("steps", steps);
  auto frame = [&](const std::string& path, int index) {
    const auto seq = read_contour_sequence(path);
    m.add_input(path);
    if (index < 0 || index >= static_cast<int>(seq.frames.size()))
      throw Error(kModule, "geodesic", "sequence '" + seq.id + "' has no frame " + std::to_string(index));
    return Shape::from_contour(seq.frames[static_cast<std::size_t>(index)], s.pipeline.n_points);
  };
  const Shape q1 = frame(a, frame_a), q2 = frame(b, frame_b);
  const auto path = geodesic_path(q1, q2, steps);
  const Eigen::Index n = q1.size();
  Eigen::MatrixXd rows(steps * n, 4);
  for (int i = 0; i < steps; ++i) {
    const auto c = contour_of(path[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < n; ++k) rows.row(i * n + k) << i, double(k), c.points(0, k), c.points(1, k);
  }
  write_csv(s.out / "geodesic.csv", {"step", "point", "x", "y"}, rows);
  const double dist = shape_distance(q1, q2);
  write_json(s.out / "geodesic.json", {{"distance", dist}, {"steps", steps}});
  m.add_output(s.out / "geodesic.csv");
  m.add_output(s.out / "geodesic.json");
  m.write();
  std::cout << "shape distance " << format_double(dist) << "\n";
}

void cmd_embed(const Settings& s, const std::vector<std::string>& files, const std::string& dataset,
               bool reconstruction) {
  RunManifest m("embed", s.out);
  m.set("pipeline", s.record);
  auto seqs = load_sequences(files, dataset, m);
  const auto prepared = prepare_all(std::move(seqs), {}, s.pipeline);
  const auto emb = fit_embedding(refs(prepared), s.pipeline.pca_dim, s.pipeline.reference_align);
  write_json(s.out / "basis.json", pca_json(emb.basis));
  m.add_output(s.out / "basis.json");

  Eigen::MatrixXd ev(emb.basis.dim(), 3);
  double cumulative = 0;
  for (int i = 0; i < emb.basis.dim(); ++i) {
    cumulative += emb.basis.eigenvalues(i);
    ev.row(i) << i + 1, emb.basis.eigenvalues(i), cumulative / emb.basis.total_variance;
  }
  write_csv(s.out / "eigenvalues.csv", {"component", "eigenvalue", "cumulative_fraction"}, ev);
  m.add_output(s.out / "eigenvalues.csv");

  std::vector<std::vector<std::string>> summary;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const fs::path series = s.out / "series" / (prepared[i].id + ".csv");
    write_csv(series, series_header(emb.basis.dim()), emb.series[i].values);
    m.add_output(series);
    if (reconstruction) {
      const Eigen::VectorXd err = reconstruction_errors(prepared[i], emb.basis, s.pipeline.reference_align);
      Eigen::MatrixXd rows(err.size(), 2);
      rows.col(0) = Eigen::VectorXd::LinSpaced(err.size(), 0, double(err.size() - 1));
      rows.col(1) = err;
      const fs::path path = s.out / "reconstruction" / (prepared[i].id + ".csv");
      write_csv(path, {"frame", "error"}, rows);
      m.add_output(path);
      summary.push_back({prepared[i].id, format_double(err.mean()), format_double(err.maxCoeff())});
    }
  }
  if (reconstruction) {
    write_table(s.out / "reconstruction_error.csv", {"id", "mean_error", "max_error"}, summary);
    m.add_output(s.out / "reconstruction_error.csv");
  }
  m.write();
  std::cout << "embedded " << prepared.size() << " sequences, d = " << emb.basis.dim() << ", explained variance "
            << format_double(cumulative / emb.basis.total_variance) << "\n";
}

void cmd_fit(const Settings& s, const std::string& series, const std::string& model) {
  if (model != "var" && model != "garch" && model != "both")
    throw Error(kModule, "fit", "model must be var, garch or both, got '" + model + "'");
  RunManifest m("fit", s.out);
  m.set("pipeline", s.record);
  m.set("model", model);
  const Eigen::MatrixXd x = read_series(series);
  m.add_input(series);
  if (model != "garch") {
    int p = s.pipeline.lag;
    if (s.pipeline.lag_mode == LagMode::best) p = select_lag(x, s.pipeline.p_max, s.pipeline.criterion).best;
    const VarModel v = fit_var(x, p);
    write_json(s.out / "var.json", var_json(v));
    m.add_output(s.out / "var.json");
    std::cout << "VAR(" << p << ") fitted, spectral radius " << format_double(spectral_radius(v)) << "\n";
  }
  if (model != "var") {
    const auto g = fit_dcc_garch(x);
    Json j = garch_json(g.model);
    Json ll = Json::array();
    for (const auto& f : g.stage_one) ll.push_back(f.log_likelihood);
    j["stage_one_log_likelihood"] = ll;
    j["stage_two_log_likelihood"] = g.stage_two.log_likelihood;
    write_json(s.out / "garch.json", j);
    m.add_output(s.out / "garch.json");
    std::cout << "DCC-GARCH fitted, a = " << format_double(g.model.a) << ", b = " << format_double(g.model.b) << "\n";
  }
  m.write();
}

void cmd_select_lag(const Settings& s, const std::string& series) {
  RunManifest m("select-lag", s.out);
  m.set("pipeline", s.record);
  const Eigen::MatrixXd x = read_series(series);
  m.add_input(series);
  const int pm = s.pipeline.p_max;
  Eigen::MatrixXd rows(pm, 4);
  rows.col(0) = Eigen::VectorXd::LinSpaced(pm, 1, pm);
  Json best;
  for (auto c : {LagCriterion::aic, LagCriterion::bic, LagCriterion::hq}) {
    const auto sel = select_lag(x, pm, c);
    rows.col(1 + static_cast<int>(c)) = sel.scores;
    best[to_string(c)] = sel.best;
  }
  write_csv(s.out / "lag_scores.csv", {"lag", "aic", "bic", "hq"}, rows);
  const int chosen = best[to_string(s.pipeline.criterion)];
  write_json(s.out / "selection.json", {{"criterion", to_string(s.pipeline.criterion)}, {"best", chosen}, {"all", best}});
  m.add_output(s.out / "lag_scores.csv");
  m.add_output(s.out / "selection.json");
  m.write();
  std::cout << "selected lag " << chosen << " (" << to_string(s.pipeline.criterion) << ")\n";
}

void cmd_synth(const Settings& s, const std::string& model_path, const std::string& basis_path,
               const std::string& init_path, Eigen::Index length) {
  RunManifest m("synth", s.out);
  m.set("pipeline", s.record);
  m.set("length", length);
  const VarModel v = var_from_json(read_json(model_path));
  const PcaBasis basis = pca_from_json(read_json(basis_path));
  m.add_input(model_path);
  m.add_input(basis_path);
  if (v.dim() != basis.dim()) throw Error(kModule, "synth", "model and basis dimensions differ");
  Eigen::MatrixXd init;
  if (!init_path.empty()) {
    const Eigen::MatrixXd hist = read_series(init_path);
    m.add_input(init_path);
    if (hist.rows() < v.p || hist.cols() != v.dim()) throw Error(kModule, "synth", init_path + ": too short or wrong width");
    init = hist.bottomRows(v.p);
  } else {
    init = stationary_mean(v).transpose().replicate(v.p, 1);
  }
  const std::uint64_t stream = derive_seed(s.pipeline.seed, 0);
  m.add_stream("synth", stream);
  const Eigen::MatrixXd x = synthesize(v, init, length, stream);
  write_csv(s.out / "synth_series.csv", series_header(v.dim()), x);
  const auto shapes = reconstruct_sequence(lift(x, basis));
  ContourSequenceFile out{"synth", std::nullopt, {}};
  for (const auto& q : shapes) out.frames.push_back(contour_of(q));
  write_contour_json(s.out / "synth_contours.json", out);
  m.add_output(s.out / "synth_series.csv");
  m.add_output(s.out / "synth_contours.json");
  m.write();
  std::cout << "synthesized " << x.rows() << " steps, " << out.frames.size() << " frames\n";
}

void cmd_predict(const Settings& s, const std::string& series, double train_frac, const std::string& lag_text,
                 Eigen::Index horizon) {
  RunManifest m("predict", s.out);
  m.set("pipeline", s.record);
  m.set("train_frac", train_frac);
  m.set("lags", lag_text);
  m.set("horizon", horizon);
  const Eigen::MatrixXd x = read_series(series);
  m.add_input(series);
  const auto lags = parse_lags(lag_text);
  const auto r = lag_prediction_errors(x, train_frac, lags, horizon);
  const auto L = static_cast<Eigen::Index>(lags.size());
  Eigen::MatrixXd per_lag(L, 2);
  for (Eigen::Index i = 0; i < L; ++i) per_lag.row(i) << lags[static_cast<std::size_t>(i)], r.mean(i);
  write_csv(s.out / "prediction_error.csv", {"lag", "mean_error"}, per_lag);
  std::vector<std::string> header{"horizon"};
  for (int p : lags) header.push_back("lag_" + std::to_string(p));
  Eigen::MatrixXd by_h(horizon, L + 1);
  by_h.col(0) = Eigen::VectorXd::LinSpaced(horizon, 1, double(horizon));
  by_h.rightCols(L) = r.by_horizon.transpose();
  write_csv(s.out / "prediction_error_by_horizon.csv", header, by_h);
  write_json(s.out / "prediction.json", {{"best_lag", r.best()},
                                         {"train_rows", r.split.train_rows},
                                         {"origins", r.split.origins},
                                         {"horizon", horizon}});
  m.add_output(s.out / "prediction_error.csv");
  m.add_output(s.out / "prediction_error_by_horizon.csv");
  m.add_output(s.out / "prediction.json");
  m.write();
  std::cout << "lag  mean_error\n";
  for (Eigen::Index i = 0; i < L; ++i) std::cout << lags[static_cast<std::size_t>(i)] << "    " << r.mean(i) << "\n";
  std::cout << "best lag " << r.best() << "\n";
}

void cmd_compare(const Settings& s, const std::string& series, double train_frac, Eigen::Index horizon) {
  RunManifest m("compare-models", s.out);
  m.set("pipeline", s.record);
  m.set("train_frac", train_frac);
  m.set("horizon", horizon);
  const Eigen::MatrixXd x = read_series(series);
  m.add_input(series);
  const auto r = compare_forecasts(x, train_frac, s.pipeline.lag, horizon);
  write_table(s.out / "model_comparison.csv", {"model", "mean_error"},
              {{"var", format_double(r.var_error)}, {"dcc_garch", format_double(r.garch_error)}});
  write_json(s.out / "model_comparison.json", {{"lag", r.lag},
                                               {"train_rows", r.split.train_rows},
                                               {"origins", r.split.origins},
                                               {"horizon", horizon},
                                               {"var_error", r.var_error},
                                               {"dcc_garch_error", r.garch_error},
                                               {"var", var_json(r.var)},
                                               {"dcc_garch", garch_json(r.garch)}});
  m.add_output(s.out / "model_comparison.csv");
  m.add_output(s.out / "model_comparison.json");
  m.write();
  std::cout << "VAR(" << r.lag << ") error " << r.var_error << ", DCC-GARCH error " << r.garch_error << "\n";
}

void cmd_features(const Settings& s, const std::vector<std::string>& files, const std::string& dataset) {
  RunManifest m("features", s.out);
  m.set("pipeline", s.record);
  auto seqs = load_sequences(files, dataset, m);
  const auto prepared = prepare_all(std::move(seqs), {}, s.pipeline);
  const auto emb = fit_embedding(refs(prepared), s.pipeline.pca_dim, s.pipeline.reference_align);
  std::vector<SequenceFeatures> feats;
  std::vector<std::string> ids;
  Json out = Json::array();
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    feats.push_back(sequence_features(prepared[i], emb.series[i], s.pipeline));
    ids.push_back(prepared[i].id);
    Json shape = Json::array();
    for (const auto& f : feats.back().shape) shape.push_back(shape_feature_json(f));
    const auto& k = feats.back().kinematics;
    out.push_back({{"id", prepared[i].id},
                   {"shape", shape},
                   {"kinematics", {{"degenerate", k.degenerate}, {"omega", matrix_json(k.omega().transpose())}}}});
  }
  write_json(s.out / "features.json", out);
  write_csv(s.out / "distances.csv", ids, distance_matrix(feats, feats, s.pipeline.kind, s.pipeline.weights));
  write_json(s.out / "basis.json", pca_json(emb.basis));
  m.add_output(s.out / "features.json");
  m.add_output(s.out / "distances.csv");
  m.add_output(s.out / "basis.json");
  m.write();
  std::cout << "features for " << prepared.size() << " sequences\n";
}

void cmd_classify(const Settings& s, const std::vector<std::string>& files, const std::string& dataset) {
  RunManifest m("classify", s.out);
  m.set("pipeline", s.record);
  auto seqs = load_sequences(files, dataset, m);
  const auto names = class_names_of(seqs);
  const auto prepared = prepare_all(std::move(seqs), names, s.pipeline);
  std::vector<std::string> hashes;
  m.add_stream("folds", s.pipeline.seed);
  const auto report = classify_sequences(prepared, static_cast<int>(names.size()), s.pipeline, &hashes);
  Json j = report_json(report, names);
  j["fold_artifact_hashes"] = hashes;
  write_json(s.out / "report.json", j);
  const std::string table = report_table(report, names);
  write_text(s.out / "report.txt", table);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < prepared.size(); ++i)
    rows.push_back({prepared[i].id, names[static_cast<std::size_t>(prepared[i].label)],
                    names[static_cast<std::size_t>(report.predictions[i])]});
  write_table(s.out / "predictions.csv", {"id", "class", "predicted"}, rows);
  m.add_output(s.out / "report.json");
  m.add_output(s.out / "report.txt");
  m.add_output(s.out / "predictions.csv");
  m.write();
  std::cout << table;
}

void cmd_simulate(const Settings& s, const std::vector<std::string>& seeds, const SimulationConfig& sim) {
  RunManifest m("simulate", s.out);
  m.set("pipeline", s.record);
  m.set("simulation", {{"per_class", sim.per_class},
                       {"length", sim.length},
                       {"seed_length", sim.seed_length},
                       {"harmonics", sim.harmonics},
                       {"n_points", sim.n_points}});
  std::vector<SimulatedSequence> data;
  if (seeds.empty()) {
    const auto names = builtin_class_names();
    for (std::size_t c = 0; c < names.size(); ++c) m.add_stream(names[c], derive_seed(s.pipeline.seed, c));
    data = simulate_dataset(sim, s.pipeline.seed);
  } else {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto seq = read_contour_sequence(seeds[i]);
      m.add_input(seeds[i]);
      std::vector<Contour<double>> frames;
      for (const auto& f : seq.frames) frames.push_back(resample_uniform(f, sim.n_points));
      const std::uint64_t stream = derive_seed(s.pipeline.seed, i);
      const std::string label = seq.label.value_or(seq.id);
      m.add_stream(seq.id, stream);
      try {
        auto sims = simulate_class(frames, label, sim.harmonics, sim.length, sim.per_class, stream, sim.n_points);
        for (auto& x : sims) {
          x.id = seq.id + "_" + x.id;
          data.push_back(std::move(x));
        }
      } catch (const Error& e) {
        throw Error(e.module(), e.operation(), "seed '" + seq.id + "': " + e.detail());
      }
    }
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& d : data) {
    const fs::path rel = fs::path("sequences") / (d.id + ".json");
    write_contour_json(s.out / rel, {d.id, d.label, d.frames});
    m.add_output(s.out / rel);
    rows.push_back({d.id, d.label, rel.string()});
  }
  write_table(s.out / "dataset.csv", {"id", "class", "path"}, rows);
  m.add_output(s.out / "dataset.csv");
  m.write();
  std::cout << "simulated " << data.size() << " sequences into " << s.out.string() << "\n";
}

int report_error(const std::string& module, const std::string& operation, const std::string& message) {
  Json j{{"error", {{"module", module}, {"operation", operation}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape dynamics of planar contour sequences"};
  app.require_subcommand(1);
  Common common;
  std::vector<std::string> files;
  std::string dataset;

  auto inputs = [&](CLI::App* sub) {
    sub->add_option("inputs", files, "contour sequence files (.json or .csv)");
    sub->add_option("--dataset", dataset, "dataset table with columns id,class,path");
    add_common(sub, common);
  };

  auto* ingest = app.add_subcommand("ingest", "validate and normalize contour files");
  inputs(ingest);

  std::string shape_a, shape_b;
  int frame_a = 0, frame_b = 0, steps = 10;
  auto* geodesic = app.add_subcommand("geodesic", "geodesic path between two shapes");
  geodesic->add_option("first", shape_a, "first contour file")->required();
  geodesic->add_option("second", shape_b, "second contour file")->required();
  geodesic->add_option("--frame-a", frame_a, "frame of the first file");
  geodesic->add_option("--frame-b", frame_b, "frame of the second file");
  geodesic->add_option("--steps", steps, "points along the path")->check(CLI::Range(2, 1000));
  add_common(geodesic, common);

  bool reconstruction = true;
  auto* embed = app.add_subcommand("embed", "TSRVF-PCA series and basis");
  inputs(embed);
  embed->add_flag("!--no-reconstruction", reconstruction, "skip the reconstruction error tables");

  std::string series, model = "var";
  auto* fit = app.add_subcommand("fit", "fit VAR and/or DCC-GARCH to a series");
  fit->add_option("series", series, "series CSV")->required();
  fit->add_option("--model", model, "var, garch or both");
  add_common(fit, common);

  auto* select = app.add_subcommand("select-lag", "information criteria over lags");
  select->add_option("series", series, "series CSV")->required();
  add_common(select, common);

  std::string model_path, basis_path, init_path;
  Eigen::Index length = kDefaultSimulatedLength;
  auto* synth = app.add_subcommand("synth", "synthesize a shape sequence from a VAR model");
  synth->add_option("--model", model_path, "VAR model JSON")->required();
  synth->add_option("--basis", basis_path, "PCA basis JSON")->required();
  synth->add_option("--init", init_path, "series CSV whose last rows start the recursion");
  synth->add_option("--length", length, "series length")->check(CLI::PositiveNumber);
  add_common(synth, common);

  double train_frac = 0.75;
  std::string lags = "1..4";
  Eigen::Index horizon = 5;
  auto* predict = app.add_subcommand("predict", "per-lag out-of-sample prediction errors");
  predict->add_option("series", series, "series CSV")->required();
  predict->add_option("--train-frac", train_frac, "fraction of rows used for fitting");
  predict->add_option("--lags", lags, "lags as a..b or a,b,c");
  predict->add_option("--horizon", horizon, "forecast steps per origin")->check(CLI::PositiveNumber);
  add_common(predict, common);

  auto* compare = app.add_subcommand("compare-models", "VAR against DCC-GARCH forecast errors");
  compare->add_option("series", series, "series CSV")->required();
  compare->add_option("--train-frac", train_frac, "fraction of rows used for fitting");
  compare->add_option("--horizon", horizon, "forecast steps per origin")->check(CLI::PositiveNumber);
  add_common(compare, common);

  auto* features = app.add_subcommand("features", "shape and kinematics features and distances");
  inputs(features);

  auto* classify = app.add_subcommand("classify", "cross-validated classification report");
  inputs(classify);

  SimulationConfig sim;
  std::vector<std::string> seed_files;
  auto* simulate = app.add_subcommand("simulate", "simulate a labelled dataset");
  simulate->add_option("seeds", seed_files, "seed sequences (default: built-in classes)");
  simulate->add_option("--per-class", sim.per_class, "sequences per class")->check(CLI::PositiveNumber);
  simulate->add_option("--length", sim.length, "frames per sequence")->check(CLI::PositiveNumber);
  simulate->add_option("--seed-length", sim.seed_length, "frames of each built-in seed sequence")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--harmonics", sim.harmonics, "Fourier harmonics")->check(CLI::PositiveNumber);
  add_common(simulate, common);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const Settings s = resolve(name, common);
    sim.n_points = s.pipeline.n_points;

    if (sub == ingest) cmd_ingest(s, files, dataset);
    else if (sub == geodesic) cmd_geodesic(s, shape_a, shape_b, frame_a, frame_b, steps);
    else if (sub == embed) cmd_embed(s, files, dataset, reconstruction);
    else if (sub == fit) cmd_fit(s, series, model);
    else if (sub == select) cmd_select_lag(s, series);
    else if (sub == synth) cmd_synth(s, model_path, basis_path, init_path, length);
    else if (sub == predict) cmd_predict(s, series, train_frac, lags, horizon);
    else if (sub == compare) cmd_compare(s, series, train_frac, horizon);
    else if (sub == features) cmd_features(s, files, dataset);
    else if (sub == classify) cmd_classify(s, files, dataset);
    else if (sub == simulate) cmd_simulate(s, seed_files, sim);
  } catch (const Error& e) {
    return report_error(e.module(), e.operation(), e.detail());
  } catch (const std::exception& e) {
    return report_error(kModule, "run", e.what());
  }
  return 0;
}
