// `key = value` run configuration shared by every subcommand.
//
//   # comment
//   gfd.cutoff_c = 7
//   train.learning_rate = 1e-4
#pragma once

#include "fddet/synthetic.hpp"
#include "fddet/training.hpp"

#include <filesystem>
#include <map>

namespace fddet {

using ConfigMap = std::map<std::string, std::string>;

/// Later duplicate keys win. Throws ValidationError on malformed lines.
ConfigMap parse_config(std::string_view text);
ConfigMap read_config_file(const std::filesystem::path& path);

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  EvalProtocol eval = EvalProtocol::long_range();
  SyntheticSpec synth;
  int synth_test_videos = 50;

  /// Throws ValidationError on unknown keys or unparsable values.
  void apply(const std::string& key, const std::string& value);
  void apply(const ConfigMap& map);
  /// Every model key with its current value; enough to rebuild the model.
  ConfigMap model_entries() const;
};

/// "lo:hi:step" or a comma-separated list.
std::vector<double> parse_thresholds(const std::string& text);

}  // namespace fddet
