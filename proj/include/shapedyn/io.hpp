#ifndef SHAPEDYN_IO_HPP
#define SHAPEDYN_IO_HPP

// File formats: contour sequences (JSON or frame,x,y CSV), numeric CSV
// tables, JSON for models, bases and reports, and run manifests with FNV-1a
// content hashes.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shapedyn/classifier.hpp"
#include "shapedyn/curve.hpp"
#include "shapedyn/garch.hpp"
#include "shapedyn/shape_dynamics.hpp"
#include "shapedyn/var_model.hpp"

namespace shapedyn {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct ContourSequenceFile {
  std::string id;
  std::optional<std::string> label;
  std::vector<Contour<double>> frames;
};

/// {"sequence_id": ..., "label": ... | null, "frames": [[[x, y], ...], ...]}
ContourSequenceFile parse_contour_json(const Json& doc, const std::string& source);
Json contour_json(const ContourSequenceFile& seq);

/// Columns frame,x,y sorted by frame then vertex order. The id is the file
/// stem and the label is absent.
ContourSequenceFile parse_contour_csv(std::string_view text, const std::string& id);

/// Dispatches on the extension (.json or .csv).
ContourSequenceFile read_contour_sequence(const fs::path& path);
void write_contour_json(const fs::path& path, const ContourSequenceFile& seq);

/// Numbers printed with %.17g so values roundtrip exactly.
std::string format_double(double v);
void write_csv(const fs::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& rows);
/// Reads a header line and numeric rows.
Eigen::MatrixXd read_csv(const fs::path& path, std::vector<std::string>* header = nullptr);

Json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json var_json(const VarModel& m);
VarModel var_from_json(const Json& j);
Json garch_json(const DccGarchModel& m);
DccGarchModel garch_from_json(const Json& j);
Json pca_json(const PcaBasis& b);
PcaBasis pca_from_json(const Json& j);
Json report_json(const EvaluationReport& r, const std::vector<std::string>& class_names);
std::string report_table(const EvaluationReport& r, const std::vector<std::string>& class_names);

std::string read_text(const fs::path& path);
/// Writes atomically enough for our use: the parent directory is created.
void write_text(const fs::path& path, std::string_view text);
Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);
std::string file_hash(const fs::path& path);

/// Records inputs (with hashes), outputs (with hashes), configuration and
/// derived random streams of one run, written as manifest.json.
class RunManifest {
 public:
  RunManifest(std::string command, fs::path run_dir);

  void add_input(const fs::path& path);
  void add_output(const fs::path& path);
  void set(const std::string& key, Json value);
  void add_stream(const std::string& name, std::uint64_t seed);
  const fs::path& dir() const { return dir_; }

  /// Hashes every recorded output and writes <run_dir>/manifest.json.
  void write() const;

 private:
  std::string command_;
  fs::path dir_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  Json config_ = Json::object();
  Json streams_ = Json::object();
};

}  // namespace shapedyn

#endif  // SHAPEDYN_IO_HPP
