#include "shapedyn/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "shapedyn/error.hpp"

namespace shapedyn {

namespace {

constexpr const char* kModule = "io";

double parse_number(std::string_view s, const std::string& where) {
  const std::string str(s);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(str, &used);
  } catch (const std::exception&) {
    throw Error(kModule, "parse", where + ": not a number '" + str + "'");
  }
  while (used < str.size() && std::isspace(static_cast<unsigned char>(str[used]))) ++used;
  if (used != str.size()) throw Error(kModule, "parse", where + ": not a number '" + str + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void check_frame(const Contour<double>& c, std::size_t frame, const std::string& source) {
  if (c.size() < 3)
    throw Error(kModule, "read_contour_sequence",
                source + ": frame " + std::to_string(frame) + " has fewer than 3 points");
  if (!c.points.allFinite())
    throw Error(kModule, "read_contour_sequence", source + ": frame " + std::to_string(frame) + " has non-finite values");
}

Json field_json(const Field& f) { return matrix_json(f); }

}  // namespace

ContourSequenceFile parse_contour_json(const Json& doc, const std::string& source) {
  ContourSequenceFile out;
  try {
    out.id = doc.at("sequence_id").get<std::string>();
    if (doc.contains("label") && !doc.at("label").is_null()) out.label = doc.at("label").get<std::string>();
    const auto& frames = doc.at("frames");
    if (!frames.is_array() || frames.empty()) throw Error(kModule, "read_contour_sequence", source + ": no frames");
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const auto& pts = frames[f];
      Contour<double> c{Points2<double>(2, static_cast<Eigen::Index>(pts.size()))};
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (pts[k].size() != 2)
          throw Error(kModule, "read_contour_sequence",
                      source + ": frame " + std::to_string(f) + " point " + std::to_string(k) + " is not [x, y]");
        c.points(0, static_cast<Eigen::Index>(k)) = pts[k][0].get<double>();
        c.points(1, static_cast<Eigen::Index>(k)) = pts[k][1].get<double>();
      }
      check_frame(c, f, source);
      out.frames.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, "read_contour_sequence", source + ": " + e.what());
  }
  return out;
}

Json contour_json(const ContourSequenceFile& seq) {
  Json frames = Json::array();
  for (const auto& c : seq.frames) {
    Json pts = Json::array();
    for (Eigen::Index k = 0; k < c.size(); ++k) pts.push_back({c.points(0, k), c.points(1, k)});
    frames.push_back(std::move(pts));
  }
  Json doc;
  doc["sequence_id"] = seq.id;
  doc["label"] = seq.label ? Json(*seq.label) : Json(nullptr);
  doc["frames"] = std::move(frames);
  return doc;
}

ContourSequenceFile parse_contour_csv(std::string_view text, const std::string& id) {
  ContourSequenceFile out{id, std::nullopt, {}};
  std::map<long, std::vector<std::pair<double, double>>> frames;
  long last = -1;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = id + " line " + std::to_string(line_no);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() == 3 && trim(cells[0]) == "frame" && trim(cells[1]) == "x" && trim(cells[2]) == "y") continue;
      throw Error(kModule, "read_contour_sequence", where + ": expected header frame,x,y");
    }
    if (cells.size() != 3) throw Error(kModule, "read_contour_sequence", where + ": expected 3 columns");
    const double fv = parse_number(trim(cells[0]), where);
    const long frame = static_cast<long>(fv);
    if (double(frame) != fv || frame < 0) throw Error(kModule, "read_contour_sequence", where + ": bad frame index");
    if (frame < last) throw Error(kModule, "read_contour_sequence", where + ": rows not sorted by frame");
    last = frame;
    frames[frame].emplace_back(parse_number(trim(cells[1]), where), parse_number(trim(cells[2]), where));
  }
  if (frames.empty()) throw Error(kModule, "read_contour_sequence", id + ": no frames");
  for (const auto& [f, pts] : frames) {
    Contour<double> c{Points2<double>(2, static_cast<Eigen::Index>(pts.size()))};
    for (std::size_t k = 0; k < pts.size(); ++k) c.points.col(static_cast<Eigen::Index>(k)) << pts[k].first, pts[k].second;
    check_frame(c, static_cast<std::size_t>(f), id);
    out.frames.push_back(std::move(c));
  }
  return out;
}

ContourSequenceFile read_contour_sequence(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return parse_contour_json(read_json(path), path.string());
  if (ext == ".csv") return parse_contour_csv(read_text(path), path.stem().string());
  throw Error(kModule, "read_contour_sequence", path.string() + ": unsupported extension '" + ext + "'");
}

void write_contour_json(const fs::path& path, const ContourSequenceFile& seq) { write_json(path, contour_json(seq)); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& rows) {
  if (!header.empty() && static_cast<Eigen::Index>(header.size()) != rows.cols())
    throw Error(kModule, "write_csv", path.string() + ": header has " + std::to_string(header.size()) + " names for " +
                                          std::to_string(rows.cols()) + " columns");
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
  if (!header.empty()) out += '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out += (j ? "," : "") + format_double(rows(i, j));
    out += '\n';
  }
  write_text(path, out);
}

Eigen::MatrixXd read_csv(const fs::path& path, std::vector<std::string>* header) {
  const std::string text = read_text(path);
  std::vector<std::vector<double>> rows;
  bool first = true;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (first) {
      first = false;
      if (header) {
        header->clear();
        for (auto c : cells) header->emplace_back(trim(c));
      }
      continue;
    }
    std::vector<double> row;
    for (auto c : cells) row.push_back(parse_number(trim(c), path.string() + " line " + std::to_string(line_no)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(kModule, "read_csv", path.string() + " line " + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw Error(kModule, "matrix_from_json", "expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = j[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != cols) throw Error(kModule, "matrix_from_json", "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Json var_json(const VarModel& m) {
  Json j;
  j["type"] = "var";
  j["p"] = m.p;
  j["dim"] = m.dim();
  j["c"] = matrix_json(m.c.transpose());
  Json a = Json::array();
  for (const auto& ai : m.A) a.push_back(matrix_json(ai));
  j["A"] = std::move(a);
  j["sigma"] = matrix_json(m.sigma);
  return j;
}

VarModel var_from_json(const Json& j) {
  try {
    VarModel m;
    m.p = j.at("p").get<int>();
    m.c = matrix_from_json(j.at("c")).transpose();
    for (const auto& a : j.at("A")) m.A.push_back(matrix_from_json(a));
    m.sigma = matrix_from_json(j.at("sigma"));
    const Eigen::Index d = m.c.size();
    if (static_cast<int>(m.A.size()) != m.p || m.sigma.rows() != d || m.sigma.cols() != d)
      throw Error(kModule, "var_from_json", "inconsistent VAR dimensions");
    for (const auto& a : m.A)
      if (a.rows() != d || a.cols() != d) throw Error(kModule, "var_from_json", "inconsistent VAR dimensions");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, "var_from_json", e.what());
  }
}

Json garch_json(const DccGarchModel& m) {
  Json j;
  j["type"] = "dcc_garch";
  j["mu"] = matrix_json(m.mu.transpose());
  Json comps = Json::array();
  for (const auto& c : m.components) {
    Json g;
    g["w0"] = c.w0;
    g["w"] = matrix_json(c.w.transpose());
    g["zeta"] = matrix_json(c.zeta.transpose());
    comps.push_back(std::move(g));
  }
  j["components"] = std::move(comps);
  j["a"] = m.a;
  j["b"] = m.b;
  j["qbar"] = matrix_json(m.qbar);
  return j;
}

DccGarchModel garch_from_json(const Json& j) {
  try {
    DccGarchModel m;
    m.mu = matrix_from_json(j.at("mu")).transpose();
    for (const auto& g : j.at("components")) {
      UnivariateGarch u;
      u.w0 = g.at("w0").get<double>();
      u.w = matrix_from_json(g.at("w")).transpose();
      u.zeta = matrix_from_json(g.at("zeta")).transpose();
      m.components.push_back(std::move(u));
    }
    m.a = j.at("a").get<double>();
    m.b = j.at("b").get<double>();
    m.qbar = matrix_from_json(j.at("qbar"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, "garch_from_json", e.what());
  }
}

Json pca_json(const PcaBasis& b) {
  Json j;
  j["grid_size"] = b.grid_size();
  j["dim"] = b.dim();
  j["total_variance"] = b.total_variance;
  j["eigenvalues"] = matrix_json(b.eigenvalues.transpose());
  j["base"] = field_json(b.base.values());
  j["mean"] = field_json(b.mean);
  Json comps = Json::array();
  for (const auto& c : b.components) comps.push_back(field_json(c));
  j["components"] = std::move(comps);
  return j;
}

PcaBasis pca_from_json(const Json& j) {
  try {
    PcaBasis b;
    b.base = Shape(matrix_from_json(j.at("base")));
    b.mean = matrix_from_json(j.at("mean"));
    for (const auto& c : j.at("components")) b.components.push_back(matrix_from_json(c));
    b.eigenvalues = matrix_from_json(j.at("eigenvalues")).transpose();
    b.total_variance = j.at("total_variance").get<double>();
    if (b.eigenvalues.size() != b.dim() || b.mean.cols() != b.grid_size())
      throw Error(kModule, "pca_from_json", "inconsistent basis dimensions");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, "pca_from_json", e.what());
  }
}

Json report_json(const EvaluationReport& r, const std::vector<std::string>& class_names) {
  Json j;
  j["accuracy"] = r.accuracy;
  j["classes"] = class_names;
  j["confusion"] = matrix_json(r.confusion);
  j["counts"] = matrix_json(r.counts.cast<double>());
  j["fold_accuracies"] = r.fold_accuracies;
  return j;
}

std::string report_table(const EvaluationReport& r, const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "accuracy " << r.accuracy << "\nfold accuracies";
  for (double a : r.fold_accuracies) out << ' ' << a;
  std::size_t width = 6;
  for (const auto& n : class_names) width = std::max(width, n.size() + 1);
  out << "\n\nconfusion (rows: true class)\n" << std::setw(static_cast<int>(width)) << "";
  for (const auto& n : class_names) out << std::setw(static_cast<int>(width)) << n;
  out << '\n';
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    out << std::setw(static_cast<int>(width)) << class_names[i];
    for (std::size_t k = 0; k < class_names.size(); ++k)
      out << std::setw(static_cast<int>(width)) << r.confusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    out << '\n';
  }
  return out.str();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, "read", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(kModule, "write", "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(kModule, "write", "failed writing " + path.string());
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, "read_json", path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& path) { return hex64(fnv1a(read_text(path))); }

RunManifest::RunManifest(std::string command, fs::path run_dir) : command_(std::move(command)), dir_(std::move(run_dir)) {}

void RunManifest::add_input(const fs::path& path) { inputs_.push_back(path); }
void RunManifest::add_output(const fs::path& path) { outputs_.push_back(path); }
void RunManifest::set(const std::string& key, Json value) { config_[key] = std::move(value); }
void RunManifest::add_stream(const std::string& name, std::uint64_t seed) { streams_[name] = hex64(seed); }

void RunManifest::write() const {
  Json j;
  j["command"] = command_;
  j["config"] = config_;
  j["random_streams"] = streams_;
  auto listing = [&](const std::vector<fs::path>& paths) {
    Json arr = Json::array();
    for (const auto& p : paths) {
      std::string shown = p.string();
      if (const auto rel = fs::relative(p, dir_); !rel.empty() && rel.native()[0] != '.') shown = rel.string();
      arr.push_back({{"path", shown}, {"fnv1a", file_hash(p)}});
    }
    return arr;
  };
  j["inputs"] = listing(inputs_);
  j["outputs"] = listing(outputs_);
  write_json(dir_ / "manifest.json", j);
}

}  // namespace shapedyn
