#include "fddet/io.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fddet {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr char kMagic[4] = {'F', 'D', 'D', '1'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 4;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_feature_file(const Matrix& x) {
  if (x.rows() > UINT32_MAX || x.cols() > UINT32_MAX) throw ValidationError("feature matrix too large");
  std::string out(kMagic, 4);
  put_le(out, kVersion, 2);
  put_le(out, static_cast<std::uint64_t>(x.rows()), 4);
  put_le(out, static_cast<std::uint64_t>(x.cols()), 4);
  out.reserve(kHeaderBytes + 4 * static_cast<std::size_t>(x.size()));
  for (Index t = 0; t < x.rows(); ++t)
    for (Index d = 0; d < x.cols(); ++d) put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(x(t, d))), 4);
  return out;
}

Matrix decode_feature_file(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("not a feature file");
  if (bytes.size() < kHeaderBytes) throw IoError("corrupt feature file");
  if (get_le(bytes, 4, 2) != kVersion) throw IoError("unsupported feature file version");
  const auto rows = static_cast<Index>(get_le(bytes, 6, 4));
  const auto cols = static_cast<Index>(get_le(bytes, 10, 4));
  if (bytes.size() != kHeaderBytes + 4 * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw IoError("corrupt feature file");
  Matrix x(rows, cols);
  std::size_t pos = kHeaderBytes;
  for (Index t = 0; t < rows; ++t) {
    for (Index d = 0; d < cols; ++d, pos += 4)
      x(t, d) = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, pos, 4)));
  }
  return x;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_feature_file(const fs::path& path, const Matrix& x) { write_text(path, encode_feature_file(x)); }

Matrix read_feature_matrix(const fs::path& path) { return decode_feature_file(read_text(path)); }

FeatureSequence read_feature_file(const fs::path& path) {
  return FeatureSequence::from_items({read_feature_matrix(path)});
}

double round_sig6(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

namespace {

ojson parse_json(std::string_view text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string(what) + ": " + e.what());
  }
}

int label_index(const std::vector<std::string>& labels, const std::string& name) {
  const auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) throw ValidationError("unknown label '" + name + "'");
  return static_cast<int>(it - labels.begin());
}

const std::string& label_name(const std::vector<std::string>& labels, int index) {
  if (index < 0 || index >= static_cast<int>(labels.size()))
    throw ValidationError("label index " + std::to_string(index) + " out of range");
  return labels[static_cast<std::size_t>(index)];
}

Segment read_segment(const ojson& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("segment_seconds must be [start, end]");
  Segment s{j[0].get<double>(), j[1].get<double>()};
  if (!(s.start < s.end)) throw ValidationError("segment needs start < end");
  return s;
}

ojson write_segment(const Segment& s) { return ojson::array({round_sig6(s.start), round_sig6(s.end)}); }

template <typename Fn>
auto with_json_errors(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string annotations_to_json(const Dataset& data) {
  ojson doc;
  doc["version"] = "1.0";
  doc["labels"] = data.labels;
  ojson videos = ojson::array();
  for (const auto& v : data.videos) {
    ojson jv;
    jv["id"] = v.id;
    jv["duration_seconds"] = round_sig6(v.duration_seconds);
    jv["fps_feature"] = round_sig6(v.fps_feature);
    jv["feature_file"] = v.feature_file;
    ojson anns = ojson::array();
    for (const auto& a : v.actions)
      anns.push_back(ojson{{"label", label_name(data.labels, a.label)}, {"segment_seconds", write_segment(a.segment)}});
    jv["annotations"] = std::move(anns);
    videos.push_back(std::move(jv));
  }
  doc["videos"] = std::move(videos);
  return doc.dump(2) + "\n";
}

Dataset annotations_from_json(std::string_view text) {
  const ojson doc = parse_json(text, "annotation file");
  return with_json_errors("annotation file", [&] {
    Dataset ds;
    ds.labels = doc.at("labels").get<std::vector<std::string>>();
    for (const auto& jv : doc.at("videos")) {
      Video v;
      v.id = jv.at("id").get<std::string>();
      v.duration_seconds = jv.at("duration_seconds").get<double>();
      v.fps_feature = jv.at("fps_feature").get<double>();
      if (!(v.duration_seconds > 0.0)) throw ValidationError("video " + v.id + ": duration_seconds must be > 0");
      if (!(v.fps_feature > 0.0)) throw ValidationError("video " + v.id + ": fps_feature must be > 0");
      v.feature_file = jv.value("feature_file", std::string{});
      for (const auto& ja : jv.at("annotations"))
        v.actions.push_back({read_segment(ja.at("segment_seconds")),
                             label_index(ds.labels, ja.at("label").get<std::string>())});
      ds.videos.push_back(std::move(v));
    }
    return ds;
  });
}

void write_dataset(const fs::path& dir, const std::string& name, Dataset data) {
  for (auto& v : data.videos) {
    v.feature_file = "features/" + v.id + ".fdd";
    write_feature_file(dir / v.feature_file, v.features);
  }
  write_text(dir / name, annotations_to_json(data));
}

Dataset read_annotations(const fs::path& annotation_path) { return annotations_from_json(read_text(annotation_path)); }

Dataset read_dataset(const fs::path& annotation_path) {
  Dataset ds = read_annotations(annotation_path);
  for (auto& v : ds.videos) {
    if (v.feature_file.empty()) throw ValidationError("video " + v.id + " has no feature_file");
    v.features = read_feature_matrix(annotation_path.parent_path() / v.feature_file);
  }
  ds.validate();
  return ds;
}

std::string predictions_to_json(const std::vector<DetectionCandidate>& preds, const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<DetectionCandidate>> by_video;
  for (const auto& p : preds) by_video[p.video_id].push_back(p);
  ojson results = ojson::object();
  for (auto& [id, list] : by_video) {
    std::stable_sort(list.begin(), list.end(), ranks_before);
    ojson arr = ojson::array();
    for (const auto& p : list)
      arr.push_back(ojson{{"label", label_name(labels, p.label)},
                          {"score", round_sig6(p.score)},
                          {"segment_seconds", write_segment(p.segment)}});
    results[id] = std::move(arr);
  }
  return ojson{{"results", std::move(results)}}.dump(2) + "\n";
}

std::vector<DetectionCandidate> predictions_from_json(std::string_view text, const std::vector<std::string>& labels) {
  const ojson doc = parse_json(text, "prediction file");
  return with_json_errors("prediction file", [&] {
    std::vector<DetectionCandidate> out;
    for (const auto& [id, arr] : doc.at("results").items()) {
      for (const auto& jp : arr) {
        DetectionCandidate c;
        c.video_id = id;
        c.label = label_index(labels, jp.at("label").get<std::string>());
        c.score = jp.at("score").get<double>();
        if (!(c.score >= 0.0 && c.score <= 1.0)) throw ValidationError("score must lie in [0, 1]");
        c.segment = read_segment(jp.at("segment_seconds"));
        out.push_back(std::move(c));
      }
    }
    return out;
  });
}

void write_predictions(const fs::path& path, const std::vector<DetectionCandidate>& preds,
                       const std::vector<std::string>& labels) {
  write_text(path, predictions_to_json(preds, labels));
}

std::vector<DetectionCandidate> read_predictions(const fs::path& path, const std::vector<std::string>& labels) {
  return predictions_from_json(read_text(path), labels);
}

void save_checkpoint(const fs::path& dir, ModelParams& params, const std::map<std::string, std::string>& config) {
  ojson index;
  index["format"] = "fddet-checkpoint";
  index["version"] = 1;
  ojson cfg = ojson::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  index["config"] = std::move(cfg);
  ojson list = ojson::array();
  params.for_each_param([&](Parameter& p) {
    const std::string file = p.name + ".fdd";
    write_feature_file(dir / file, p.value);
    list.push_back(ojson{{"name", p.name}, {"file", file}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  });
  index["params"] = std::move(list);
  write_text(dir / "index.json", index.dump(2) + "\n");
}

std::map<std::string, std::string> read_checkpoint_config(const fs::path& dir) {
  const ojson index = parse_json(read_text(dir / "index.json"), "checkpoint index");
  return with_json_errors("checkpoint index", [&] {
    if (index.at("format").get<std::string>() != "fddet-checkpoint") throw IoError("not a checkpoint");
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : index.at("config").items()) out[k] = v.get<std::string>();
    return out;
  });
}

void load_checkpoint_values(const fs::path& dir, ModelParams& params) {
  const ojson index = parse_json(read_text(dir / "index.json"), "checkpoint index");
  std::map<std::string, std::string> files;
  with_json_errors("checkpoint index", [&] {
    for (const auto& jp : index.at("params")) files[jp.at("name").get<std::string>()] = jp.at("file").get<std::string>();
    return 0;
  });
  params.for_each_param([&](Parameter& p) {
    const auto it = files.find(p.name);
    if (it == files.end()) throw IoError("checkpoint is missing parameter " + p.name);
    Matrix v = read_feature_matrix(dir / it->second);
    if (v.rows() != p.value.rows() || v.cols() != p.value.cols())
      throw IoError("checkpoint parameter " + p.name + " has the wrong shape");
    p.value = std::move(v);
  });
}

}  // namespace fddet
