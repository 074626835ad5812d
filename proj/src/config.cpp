#include "fddet/config.hpp"

#include "fddet/io.hpp"

#include <charconv>
#include <cstdio>
#include <functional>

namespace fddet {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ValidationError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ValidationError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;  // empty for non-model keys
};

template <typename T>
Field real(T RunConfig::*group, double T::*member, bool model = false) {
  Field f;
  f.set = [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*member = to_double(k, v); };
  if (model) f.get = [=](const RunConfig& c) { return fmt((c.*group).*member); };
  return f;
}

template <typename T, typename I>
Field integer(T RunConfig::*group, I T::*member, bool model = false) {
  Field f;
  f.set = [=](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*group).*member = static_cast<I>(to_int(k, v));
  };
  if (model) f.get = [=](const RunConfig& c) { return std::to_string((c.*group).*member); };
  return f;
}

template <typename T>
Field flag(T RunConfig::*group, bool T::*member, bool model = false) {
  Field f;
  f.set = [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*member = to_bool(k, v); };
  if (model) f.get = [=](const RunConfig& c) { return std::string((c.*group).*member ? "true" : "false"); };
  return f;
}

template <typename T>
Field seed(T RunConfig::*group, std::uint64_t T::*member, bool model = false) {
  Field f;
  f.set = [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*member = to_u64(k, v); };
  if (model) f.get = [=](const RunConfig& c) { return std::to_string((c.*group).*member); };
  return f;
}

// Fields one level down inside ModelConfig; kind is 'r'eal, 'i'nteger or 'b'ool.
template <typename Sub>
Field sub_field(Sub ModelConfig::*sub, auto Sub::*member, char kind) {
  Field f;
  f.set = [=](RunConfig& c, const std::string& k, const std::string& v) {
    auto& dst = (c.model.*sub).*member;
    using D = std::remove_reference_t<decltype(dst)>;
    if (kind == 'r') dst = static_cast<D>(to_double(k, v));
    else if (kind == 'b') dst = static_cast<D>(to_bool(k, v));
    else dst = static_cast<D>(to_int(k, v));
  };
  f.get = [=](const RunConfig& c) {
    const auto value = (c.model.*sub).*member;
    if (kind == 'r') return fmt(static_cast<double>(value));
    if (kind == 'b') return std::string(value ? "true" : "false");
    return std::to_string(static_cast<long long>(value));
  };
  return f;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["model.channels"] = integer(&RunConfig::model, &ModelConfig::channels, true);
    t["model.num_classes"] = integer(&RunConfig::model, &ModelConfig::num_classes, true);
    t["model.latent"] = integer(&RunConfig::model, &ModelConfig::latent, true);
    t["model.use_fgaad"] = flag(&RunConfig::model, &ModelConfig::use_fgaad, true);
    t["model.seed"] = seed(&RunConfig::model, &ModelConfig::seed, true);
    t["gfd.cutoff_c"] = sub_field(&ModelConfig::fgaad, &FgaadConfig::cutoff, 'i');
    t["gfd.beta_init"] = sub_field(&ModelConfig::fgaad, &FgaadConfig::beta_init, 'r');
    t["lhfe.window_p"] = sub_field(&ModelConfig::fgaad, &FgaadConfig::window, 'i');
    t["lhfe.kernel_k"] = sub_field(&ModelConfig::fgaad, &FgaadConfig::kernel, 'i');
    t["fgaad.ln_eps"] = sub_field(&ModelConfig::fgaad, &FgaadConfig::ln_eps, 'r');
    t["tcar.blocks_n"] = sub_field(&ModelConfig::pyramid, &PyramidConfig::blocks_per_level, 'i');
    t["tcar.downsamples_m"] = sub_field(&ModelConfig::pyramid, &PyramidConfig::downsamples, 'i');
    t["tcar.plain_blocks"] = sub_field(&ModelConfig::pyramid, &PyramidConfig::plain_blocks, 'b');
    t["head.width"] = sub_field(&ModelConfig::head, &HeadConfig::width, 'i');
    t["head.depth"] = sub_field(&ModelConfig::head, &HeadConfig::depth, 'i');
    t["head.kernel"] = sub_field(&ModelConfig::head, &HeadConfig::kernel, 'i');
    t["head.prior_prob"] = sub_field(&ModelConfig::head, &HeadConfig::prior_prob, 'r');
    t["loss.alpha"] = sub_field(&ModelConfig::loss, &LossConfig::alpha, 'r');
    t["loss.gamma"] = sub_field(&ModelConfig::loss, &LossConfig::gamma, 'r');
    t["loss.lambda_reg"] = sub_field(&ModelConfig::loss, &LossConfig::lambda_reg, 'r');
    t["loss.center_radius"] = sub_field(&ModelConfig::loss, &LossConfig::center_radius, 'r');
    t["decode.score_floor"] = sub_field(&ModelConfig::decode, &DecodeConfig::score_floor, 'r');
    t["decode.pre_nms_topk"] = sub_field(&ModelConfig::decode, &DecodeConfig::pre_nms_topk, 'i');

    t["train.learning_rate"] = real(&RunConfig::train, &TrainConfig::learning_rate);
    t["train.epochs"] = integer(&RunConfig::train, &TrainConfig::epochs);
    t["train.batch_size"] = integer(&RunConfig::train, &TrainConfig::batch_size);
    t["train.weight_decay"] = real(&RunConfig::train, &TrainConfig::weight_decay);
    t["train.beta1"] = real(&RunConfig::train, &TrainConfig::beta1);
    t["train.beta2"] = real(&RunConfig::train, &TrainConfig::beta2);
    t["train.eps"] = real(&RunConfig::train, &TrainConfig::eps);
    t["train.seed"] = seed(&RunConfig::train, &TrainConfig::seed);
    t["train.grad_clip"] = real(&RunConfig::train, &TrainConfig::grad_clip);
    t["train.eval_every"] = integer(&RunConfig::train, &TrainConfig::eval_every);

    t["eval.thresholds"].set = [](RunConfig& c, const std::string&, const std::string& v) {
      c.eval.tiou_thresholds = parse_thresholds(v);
    };
    t["eval.nms"].set = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "hard") c.eval.nms_mode = NmsMode::Hard;
      else if (v == "soft") c.eval.nms_mode = NmsMode::Soft;
      else throw ValidationError(k + ": expected hard or soft, got '" + v + "'");
    };
    t["eval.nms_threshold"] = real(&RunConfig::eval, &EvalProtocol::nms_threshold);
    t["eval.soft_sigma"] = real(&RunConfig::eval, &EvalProtocol::soft_sigma);
    t["eval.score_floor"] = real(&RunConfig::eval, &EvalProtocol::score_floor);
    t["eval.max_dets"] = integer(&RunConfig::eval, &EvalProtocol::max_dets_per_video);

    t["synth.num_train"] = integer(&RunConfig::synth, &SyntheticSpec::num_videos);
    t["synth.num_test"].set = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.synth_test_videos = static_cast<int>(to_int(k, v));
    };
    t["synth.min_length"] = integer(&RunConfig::synth, &SyntheticSpec::min_length);
    t["synth.max_length"] = integer(&RunConfig::synth, &SyntheticSpec::max_length);
    t["synth.channels"] = integer(&RunConfig::synth, &SyntheticSpec::channels);
    t["synth.num_classes"] = integer(&RunConfig::synth, &SyntheticSpec::num_classes);
    t["synth.drift_amplitude"] = real(&RunConfig::synth, &SyntheticSpec::drift_amplitude);
    t["synth.drift_cutoff"] = integer(&RunConfig::synth, &SyntheticSpec::drift_cutoff);
    t["synth.motif_freq_lo"] = real(&RunConfig::synth, &SyntheticSpec::motif_freq_lo);
    t["synth.motif_freq_hi"] = real(&RunConfig::synth, &SyntheticSpec::motif_freq_hi);
    t["synth.motif_amplitude"] = real(&RunConfig::synth, &SyntheticSpec::motif_amplitude);
    t["synth.min_action"] = integer(&RunConfig::synth, &SyntheticSpec::min_action);
    t["synth.max_action"] = integer(&RunConfig::synth, &SyntheticSpec::max_action);
    t["synth.min_instances"] = integer(&RunConfig::synth, &SyntheticSpec::min_instances);
    t["synth.max_instances"] = integer(&RunConfig::synth, &SyntheticSpec::max_instances);
    t["synth.noise_std"] = real(&RunConfig::synth, &SyntheticSpec::noise_std);
    t["synth.fps_feature"] = real(&RunConfig::synth, &SyntheticSpec::fps_feature);
    t["synth.seed"] = seed(&RunConfig::synth, &SyntheticSpec::seed);
    return t;
  }();
  return table;
}

}  // namespace

ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::vector<double> parse_thresholds(const std::string& text) {
  if (std::count(text.begin(), text.end(), ':') == 2) {
    const auto a = text.find(':'), b = text.find(':', a + 1);
    return threshold_range(to_double("thresholds", text.substr(0, a)),
                           to_double("thresholds", text.substr(a + 1, b - a - 1)),
                           to_double("thresholds", text.substr(b + 1)));
  }
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    out.push_back(to_double("thresholds", trim(std::string_view(text).substr(pos, comma - pos))));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ValidationError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
}

void RunConfig::apply(const ConfigMap& map) {
  for (const auto& [k, v] : map) apply(k, v);
}

ConfigMap RunConfig::model_entries() const {
  ConfigMap out;
  for (const auto& [k, f] : fields())
    if (f.get) out[k] = f.get(*this);
  return out;
}

}  // namespace fddet
