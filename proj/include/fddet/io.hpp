// Binary feature files, annotation / prediction JSON, and checkpoints.
//
// Feature file layout (little-endian):
//   "FDD1" | u16 version = 1 | u32 L | u32 D | L*D f32, time-major
#pragma once

#include "fddet/dataset.hpp"
#include "fddet/model.hpp"

#include <filesystem>
#include <map>

namespace fddet {

std::string encode_feature_file(const Matrix& x);
/// Throws IoError "not a feature file" / "corrupt feature file".
Matrix decode_feature_file(std::string_view bytes);

void write_feature_file(const std::filesystem::path& path, const Matrix& x);
Matrix read_feature_matrix(const std::filesystem::path& path);
/// Single-item batch.
FeatureSequence read_feature_file(const std::filesystem::path& path);

/// Rounds to 6 significant digits, the precision of every JSON number written.
double round_sig6(double v);

/// JSON text of an annotation file. Segments are written in seconds.
std::string annotations_to_json(const Dataset& data);
/// Parses annotations; features are left empty.
Dataset annotations_from_json(std::string_view text);

/// Writes `<dir>/<name>` plus one feature file per video under `<dir>/features/`.
void write_dataset(const std::filesystem::path& dir, const std::string& name, Dataset data);
/// Reads an annotation file and the feature files it references (relative to its directory).
Dataset read_dataset(const std::filesystem::path& annotation_path);
/// Annotations only.
Dataset read_annotations(const std::filesystem::path& annotation_path);

std::string predictions_to_json(const std::vector<DetectionCandidate>& preds, const std::vector<std::string>& labels);
std::vector<DetectionCandidate> predictions_from_json(std::string_view text, const std::vector<std::string>& labels);
void write_predictions(const std::filesystem::path& path, const std::vector<DetectionCandidate>& preds,
                       const std::vector<std::string>& labels);
std::vector<DetectionCandidate> read_predictions(const std::filesystem::path& path,
                                                 const std::vector<std::string>& labels);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Directory with index.json (config and parameter names) and one f32
/// feature file per parameter.
void save_checkpoint(const std::filesystem::path& dir, ModelParams& params,
                     const std::map<std::string, std::string>& config);
/// Returns the stored config; `params` must have been built from it.
std::map<std::string, std::string> read_checkpoint_config(const std::filesystem::path& dir);
void load_checkpoint_values(const std::filesystem::path& dir, ModelParams& params);

}  // namespace fddet
