#include "fddet/cli.hpp"

#include "fddet/config.hpp"
#include "fddet/diagnostics.hpp"
#include "fddet/grad_suites.hpp"
#include "fddet/io.hpp"
#include "fddet/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>

namespace fddet {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Globals {
  std::string config_file;
  std::vector<std::string> sets;
};

struct DataArgs {
  std::string data, eval;
  bool synthetic = false;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// NaN and infinities become null.
ojson number(double v) { return std::isfinite(v) ? ojson(round_sig6(v)) : ojson(nullptr); }

void write_json(const std::string& path, const ojson& doc) { write_text(path, doc.dump(2) + "\n"); }

RunConfig load_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config_file.empty()) cfg.apply(read_config_file(g.config_file));
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string t) {
      t.erase(0, t.find_first_not_of(" \t"));
      t.erase(t.find_last_not_of(" \t") + 1);
      return t;
    };
    cfg.apply(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return cfg;
}

/// The model config with widths taken from the data.
ModelConfig model_for(const RunConfig& cfg, const Dataset& data) {
  ModelConfig m = cfg.model;
  m.channels = data.channels();
  m.num_classes = static_cast<Index>(data.labels.size());
  m.validate();
  return m;
}

std::map<std::string, double> durations(const Dataset& data) {
  std::map<std::string, double> out;
  for (const auto& v : data.videos) out[v.id] = v.duration_seconds;
  return out;
}

ModelParams load_model(const std::string& dir, RunConfig& cfg) {
  cfg.apply(read_checkpoint_config(dir));
  cfg.model.validate();
  ModelParams p = init_model(cfg.model);
  load_checkpoint_values(dir, p);
  return p;
}

void check_model_matches(const ModelParams& p, const Dataset& data) {
  if (p.config.channels != data.channels()) throw ValidationError("checkpoint width does not match the feature width");
  if (p.config.num_classes != static_cast<Index>(data.labels.size()))
    throw ValidationError("checkpoint class count does not match the label set");
}

Benchmark load_sources(const DataArgs& a, const RunConfig& cfg) {
  if (a.synthetic == !a.data.empty()) throw ValidationError("give exactly one of --data or --synthetic");
  if (a.synthetic) {
    cfg.synth.validate();
    return make_benchmark(cfg.synth, cfg.synth_test_videos);
  }
  Benchmark b;
  b.train = read_dataset(a.data);
  b.test = a.eval.empty() ? b.train : read_dataset(a.eval);
  return b;
}

ojson map_json(const MapReport& r, const std::vector<std::string>& labels) {
  ojson doc;
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < r.thresholds.size(); ++i)
    rows.push_back(ojson{{"tiou", number(r.thresholds[i])}, {"map", number(r.map[i])}});
  doc["thresholds"] = std::move(rows);
  doc["average_map"] = number(r.average);
  ojson classes = ojson::array();
  for (int c : r.classes) classes.push_back(labels.at(static_cast<std::size_t>(c)));
  doc["classes"] = std::move(classes);
  return doc;
}

double train_and_score(const Benchmark& b, const ModelConfig& model, const RunConfig& cfg) {
  TrainConfig tc = cfg.train;
  tc.eval_every = 0;
  TrainOptions opts;
  opts.protocol = cfg.eval;
  auto result = train_run(b.train, model, tc, opts);
  return evaluate_model(b.test, result.params, cfg.eval).average;
}

// ---- subcommands ----

int cmd_synth(const RunConfig& base, const CLI::App& sc, std::uint64_t seed, int num_train, int num_test,
              const std::string& out_dir, std::ostream& out) {
  RunConfig cfg = base;
  if (sc.count("--seed")) cfg.synth.seed = seed;
  if (sc.count("--num-train")) cfg.synth.num_videos = num_train;
  if (sc.count("--num-test")) cfg.synth_test_videos = num_test;
  if (cfg.synth_test_videos < 0) throw ValidationError("--num-test must be >= 0");
  cfg.synth.validate();
  const Benchmark b = make_benchmark(cfg.synth, cfg.synth_test_videos);
  write_dataset(out_dir, "train.json", b.train);
  write_dataset(out_dir, "test.json", b.test);
  out << "wrote " << b.train.videos.size() << " train and " << b.test.videos.size() << " test videos to " << out_dir
      << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const DataArgs& a, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  if (a.synthetic) throw ValidationError("train reads --data");
  if (a.data.empty()) throw ValidationError("--data is required");
  if (fs::exists(out_dir) && !fs::is_directory(out_dir)) throw ValidationError("--out must be a directory");
  cfg.train.validate();
  cfg.eval.validate();
  const Benchmark b = load_sources(a, cfg);
  cfg.model = model_for(cfg, b.train);

  TrainOptions opts;
  opts.eval_set = &b.test;
  opts.protocol = cfg.eval;
  opts.on_epoch = [&](const EpochLog& row) { out << format_epoch_log(row) << "\n" << std::flush; };
  out << "epoch\tloss\tavg_mAP\n";
  try {
    auto result = train_run(b.train, cfg.model, cfg.train, opts);
    save_checkpoint(out_dir, result.params, cfg.model_entries());
  } catch (TrainingAborted& e) {
    save_checkpoint(out_dir, e.last_good, cfg.model_entries());
    err << "error: training diverged; last good parameters saved to " << out_dir << "\n";
    return 1;
  }
  return 0;
}

int cmd_infer(RunConfig cfg, const std::string& ckpt, const std::string& data_path, const std::string& out_path,
              std::ostream& out) {
  cfg.eval.validate();
  ModelParams p = load_model(ckpt, cfg);
  const Dataset data = read_dataset(data_path);
  check_model_matches(p, data);
  const auto preds = predict_dataset(data, p, cfg.eval);
  write_predictions(out_path, preds, data.labels);
  out << "wrote " << preds.size() << " detections to " << out_path << "\n";
  return 0;
}

struct EvalInputs {
  Dataset gt;
  std::vector<DetectionCandidate> preds;
  std::optional<ModelParams> model;
};

EvalInputs eval_inputs(RunConfig& cfg, const std::string& pred, const std::string& gt, const std::string& ckpt,
                       const std::string& data_path) {
  const bool from_files = !pred.empty() || !gt.empty();
  const bool from_model = !ckpt.empty() || !data_path.empty();
  if (from_files == from_model) throw ValidationError("give --pred and --gt, or --checkpoint and --data");
  EvalInputs in;
  if (from_files) {
    if (pred.empty() || gt.empty()) throw ValidationError("--pred and --gt go together");
    in.gt = read_annotations(gt);
    in.preds = read_predictions(pred, in.gt.labels);
    return in;
  }
  if (ckpt.empty() || data_path.empty()) throw ValidationError("--checkpoint and --data go together");
  in.model = load_model(ckpt, cfg);
  in.gt = read_dataset(data_path);
  check_model_matches(*in.model, in.gt);
  in.preds = predict_dataset(in.gt, *in.model, cfg.eval);
  return in;
}

int cmd_eval(RunConfig cfg, const std::string& pred, const std::string& gt, const std::string& ckpt,
             const std::string& data_path, const std::string& thresholds, const std::string& out_path,
             std::ostream& out) {
  if (!thresholds.empty()) cfg.eval.tiou_thresholds = parse_thresholds(thresholds);
  cfg.eval.validate();
  const EvalInputs in = eval_inputs(cfg, pred, gt, ckpt, data_path);
  const MapReport report = evaluate_map(in.preds, in.gt.ground_truth(), cfg.eval);
  out << format_map_table(report);
  if (!out_path.empty()) write_json(out_path, map_json(report, in.gt.labels));
  return 0;
}

int cmd_diagnose(RunConfig cfg, const std::string& pred, const std::string& gt, const std::string& ckpt,
                 const std::string& data_path, double tiou, int k_max, bool similarity, const std::string& out_path,
                 std::ostream& out) {
  cfg.eval.validate();
  if (!(tiou > 0.0 && tiou <= 1.0)) throw ValidationError("--tiou must be in (0, 1]");
  if (k_max < 1) throw ValidationError("--k-max must be >= 1");
  if (similarity && ckpt.empty()) throw ValidationError("--similarity needs --checkpoint and --data");
  EvalInputs in = eval_inputs(cfg, pred, gt, ckpt, data_path);
  const auto gts = in.gt.ground_truth();
  const auto dur = durations(in.gt);
  for (const auto& g : gts)
    if (!dur.contains(g.video_id) || !(dur.at(g.video_id) > 0.0))
      throw ValidationError("video '" + g.video_id + "' has no positive duration");

  const FpReport fp = classify_fp(in.preds, gts, tiou, k_max);
  const FnReport fn = fn_profile(in.preds, gts, dur, tiou);
  const SensitivityReport sens = sensitivity_profile(in.preds, gts, dur, cfg.eval);
  ojson doc;

  out << "# false positives at tIoU " << fmt("%.2f", tiou) << "\nk\tretained";
  for (std::size_t c = 0; c < kFpCategories; ++c) out << "\t" << fp_category_name(static_cast<FpCategory>(c));
  out << "\n";
  ojson fp_rows = ojson::array();
  for (std::size_t k = 0; k < fp.counts.size(); ++k) {
    out << k + 1 << "\t" << fp.retained[k];
    ojson row{{"k", k + 1}, {"retained", fp.retained[k]}};
    for (std::size_t c = 0; c < kFpCategories; ++c) {
      out << "\t" << fp.counts[k][c];
      row[fp_category_name(static_cast<FpCategory>(c))] = fp.counts[k][c];
    }
    out << "\n";
    fp_rows.push_back(std::move(row));
  }
  out << "\n# mAP gain from removing each error type (base " << fmt("%.4f", fp.base_map) << ")\ncategory\tgain\n";
  ojson impact;
  for (std::size_t c = 1; c < kFpCategories; ++c) {
    const char* name = fp_category_name(static_cast<FpCategory>(c));
    out << name << "\t" << fmt("%.4f", fp.removal_impact[c]) << "\n";
    impact[name] = number(fp.removal_impact[c]);
  }
  doc["false_positives"] = ojson{{"tiou", number(tiou)}, {"base_map", number(fp.base_map)}, {"by_k", fp_rows},
                                 {"removal_impact", impact}};

  out << "\n# false negatives at tIoU " << fmt("%.2f", tiou) << "\ncharacteristic\tbin\ttotal\tmissed\trate\n";
  out << "all\t-\t" << fn.overall.total << "\t" << fn.overall.missed << "\t" << fmt("%.4f", fn.overall.rate()) << "\n";
  ojson fn_doc{{"tiou", number(tiou)}, {"total", fn.overall.total}, {"missed", fn.overall.missed},
               {"rate", number(fn.overall.rate())}};
  for (const auto& [ch, bins] : fn.bins) {
    ojson jb;
    for (const auto& [bin, r] : bins) {
      out << characteristic_name(ch) << "\t" << bin_name(bin) << "\t" << r.total << "\t" << r.missed << "\t"
          << fmt("%.4f", r.rate()) << "\n";
      jb[bin_name(bin)] = ojson{{"total", r.total}, {"missed", r.missed}, {"rate", number(r.rate())}};
    }
    fn_doc[characteristic_name(ch)] = std::move(jb);
  }
  doc["false_negatives"] = std::move(fn_doc);

  out << "\n# sensitivity (overall " << fmt("%.4f", sens.overall) << ")\ncharacteristic\tbin\tavg_mAP\trelative\n";
  ojson sens_doc{{"overall", number(sens.overall)}};
  for (const auto& [ch, bins] : sens.bins) {
    ojson jb;
    for (const auto& [bin, e] : bins) {
      out << characteristic_name(ch) << "\t" << bin_name(bin) << "\t" << fmt("%.4f", e.average_map) << "\t"
          << fmt("%+.4f", e.relative_change) << "\n";
      jb[bin_name(bin)] = ojson{{"average_map", number(e.average_map)}, {"relative_change", number(e.relative_change)}};
    }
    sens_doc[characteristic_name(ch)] = std::move(jb);
  }
  doc["sensitivity"] = std::move(sens_doc);

  if (similarity) {
    out << "\n# adjacent-step cosine similarity\nlayer\tcosine\n";
    const auto probes = layer_similarity(*in.model, in.gt.batch(0, in.gt.videos.size()));
    ojson js;
    for (const auto& s : probes) {
      out << s.layer << "\t" << fmt("%.4f", s.value) << "\n";
      js[s.layer] = number(s.value);
    }
    doc["similarity"] = std::move(js);
  }
  if (!out_path.empty()) write_json(out_path, doc);
  return 0;
}

int cmd_decouple(const std::string& features, int cutoff, double beta, const std::string& prefix,
                 std::ostream& out) {
  if (cutoff < 1) throw ValidationError("--cutoff must be >= 1");
  if (!std::isfinite(beta)) throw ValidationError("--beta must be finite");
  if (prefix.empty()) throw ValidationError("--out-prefix is required");
  const Matrix x = read_feature_matrix(features);
  if (x.rows() == 0) throw ValidationError("empty feature file");
  const Decoupled d = decouple(x, cutoff, beta);
  const ComplexSequence spectrum = dft(x);
  const std::pair<const char*, Matrix> parts[] = {
      {".low.fdd", d.low}, {".high.fdd", d.high}, {".fused.fdd", d.fused},
      {".fft_re.fdd", spectrum.real()}, {".fft_im.fdd", spectrum.imag()}};
  for (const auto& [suffix, m] : parts) {
    write_feature_file(prefix + suffix, m);
    out << prefix << suffix << "\n";
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double tolerance, const std::vector<std::string>& only, std::ostream& out) {
  if (!(tolerance > 0.0)) throw ValidationError("--tolerance must be > 0");
  const auto results = run_gradient_suites(seed, tolerance, only);
  bool ok = true;
  char line[256];
  out << "suite                      shape     max_rel_err  entries  status  worst\n";
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-26s %-9s %11.3e %8zu  %-6s  %s\n", r.name.c_str(), r.shape.c_str(),
                  r.report.max_relative_error, r.report.entries_checked, r.passed ? "ok" : "FAIL",
                  r.report.worst_entry.c_str());
    out << line;
    ok = ok && r.passed;
  }
  out << (ok ? "all suites passed\n" : "some suites failed\n");
  return ok ? 0 : 1;
}

int cmd_sweep(RunConfig cfg, const DataArgs& a, const std::string& values, const std::string& out_path,
              std::ostream& out) {
  const auto cutoffs = parse_int_values(values);
  for (int c : cutoffs)
    if (c < 1) throw ValidationError("cutoff values must be >= 1");
  cfg.train.validate();
  cfg.eval.validate();
  const Benchmark b = load_sources(a, cfg);
  ModelConfig model = model_for(cfg, b.train);
  out << "cutoff\tavg_mAP\n";
  ojson rows = ojson::array();
  for (int c : cutoffs) {
    model.fgaad.cutoff = c;
    const double m = train_and_score(b, model, cfg);
    out << c << "\t" << fmt("%.4f", m) << "\n" << std::flush;
    rows.push_back(ojson{{"cutoff", c}, {"average_map", number(m)}});
  }
  if (!out_path.empty()) write_json(out_path, ojson{{"sweep", "cutoff"}, {"rows", rows}});
  return 0;
}

int cmd_ablate(RunConfig cfg, const DataArgs& a, const std::string& out_path, std::ostream& out) {
  cfg.train.validate();
  cfg.eval.validate();
  const Benchmark b = load_sources(a, cfg);
  const ModelConfig base = model_for(cfg, b.train);
  struct Variant {
    const char* name;
    bool fgaad, tcar;
  };
  constexpr Variant variants[] = {{"baseline", false, false}, {"+FGAAD", true, false}, {"+TCAR", false, true},
                                  {"full", true, true}};
  out << "variant\tfgaad\ttcar\tavg_mAP\n";
  ojson rows = ojson::array();
  double best_other = -1.0, full = 0.0;
  for (const auto& v : variants) {
    ModelConfig m = base;
    m.use_fgaad = v.fgaad;
    m.pyramid.plain_blocks = !v.tcar;
    const double score = train_and_score(b, m, cfg);
    out << v.name << "\t" << (v.fgaad ? "on" : "off") << "\t" << (v.tcar ? "on" : "off") << "\t" << fmt("%.4f", score)
        << "\n"
        << std::flush;
    rows.push_back(ojson{{"variant", v.name}, {"fgaad", v.fgaad}, {"tcar", v.tcar}, {"average_map", number(score)}});
    if (v.fgaad && v.tcar)
      full = score;
    else
      best_other = std::max(best_other, score);
  }
  const bool full_best = full >= best_other;
  out << "# full model best: " << (full_best ? "yes" : "no") << "\n";
  if (!out_path.empty()) write_json(out_path, ojson{{"rows", rows}, {"full_best", full_best}});
  return 0;
}

}  // namespace

std::vector<int> parse_int_values(const std::string& text) {
  auto to_int = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
      throw ValidationError("bad integer list '" + text + "'");
    return v;
  };
  std::vector<int> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = to_int(std::string_view(text).substr(0, dots));
    const int hi = to_int(std::string_view(text).substr(dots + 2));
    if (hi < lo) throw ValidationError("empty range '" + text + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    out.push_back(to_int(std::string_view(text).substr(pos, comma == std::string::npos ? comma : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency-decoupled temporal action detection", "fddet"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "key = value configuration file");
  app.add_option("--set", g.sets, "override one configuration key (key=value); repeatable")->allow_extra_args(false);

  DataArgs data;
  std::string out_path, ckpt, pred, gt, thresholds, features, values;
  std::uint64_t seed = 0;
  int num_train = 0, num_test = 0, cutoff = 7, k_max = 10;
  double beta = 1.0, tiou = 0.5, tolerance = 1e-4;
  bool similarity = false;
  std::vector<std::string> only;
  std::optional<int> epochs;

  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
  synth->add_option("--seed", seed);
  synth->add_option("--num-train", num_train);
  synth->add_option("--num-test", num_test);
  synth->add_option("--out", out_path, "output directory")->required();

  auto add_epochs = [&](CLI::App* sc) { sc->add_option("--epochs", epochs, "overrides train.epochs"); };

  auto* train = app.add_subcommand("train", "train a model and save a checkpoint");
  train->add_option("--data", data.data, "training annotation file")->required();
  train->add_option("--eval", data.eval, "annotation file scored in the epoch log (default: training set)");
  train->add_option("--out", out_path, "checkpoint directory")->required();
  add_epochs(train);

  auto* infer_cmd = app.add_subcommand("infer", "write predictions of a checkpoint");
  infer_cmd->add_option("--checkpoint", ckpt)->required();
  infer_cmd->add_option("--data", data.data)->required();
  infer_cmd->add_option("--out", out_path, "prediction file")->required();

  auto* eval = app.add_subcommand("eval", "mAP over tIoU thresholds");
  auto* diagnose = app.add_subcommand("diagnose", "false positive / false negative / sensitivity analysis");
  for (auto* sc : {eval, diagnose}) {
    sc->add_option("--pred", pred, "prediction file");
    sc->add_option("--gt", gt, "annotation file");
    sc->add_option("--checkpoint", ckpt);
    sc->add_option("--data", data.data, "annotation file with features");
    sc->add_option("--out", out_path, "JSON report");
  }
  eval->add_option("--thresholds", thresholds, "lo:hi:step or a comma list");
  diagnose->add_option("--tiou", tiou);
  diagnose->add_option("--k-max", k_max);
  diagnose->add_flag("--similarity", similarity, "adjacent-step cosine similarity per layer (needs a checkpoint)");

  auto* decouple_cmd = app.add_subcommand("decouple", "dump the low band, high band and spectrum of a feature file");
  decouple_cmd->add_option("--features", features)->required();
  decouple_cmd->add_option("--cutoff", cutoff)->required();
  decouple_cmd->add_option("--beta", beta);
  decouple_cmd->add_option("--out-prefix", out_path)->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "central-difference checks of every differentiable op");
  gradcheck->add_option("--seed", seed);
  gradcheck->add_option("--tolerance", tolerance);
  gradcheck->add_option("--only", only)->take_all();

  auto* sweep = app.add_subcommand("sweep-cutoff", "train and score once per cutoff value");
  auto* ablate = app.add_subcommand("ablate", "train and score the four enhancer/pyramid variants");
  for (auto* sc : {sweep, ablate}) {
    sc->add_option("--data", data.data, "training annotation file");
    sc->add_option("--eval", data.eval, "scored annotation file (default: training set)");
    sc->add_flag("--synthetic", data.synthetic, "generate the benchmark in memory from synth.* keys");
    sc->add_option("--out", out_path, "JSON report");
    add_epochs(sc);
  }
  sweep->add_option("--values", values, "1..15 or 1,3,5")->required();

  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" || args[i] == "--set") {
      ++i;
      continue;
    }
    if (args[i].starts_with("-")) continue;
    const auto& subs = app.get_subcommands({});
    if (std::none_of(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == args[i]; })) {
      err << "error: unknown subcommand '" << args[i] << "'\n\n" << app.help();
      return 1;
    }
    break;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    RunConfig cfg = load_config(g);
    auto* sc = app.get_subcommands().front();
    if (epochs) cfg.train.epochs = *epochs;
    if (sc == synth) return cmd_synth(cfg, *synth, seed, num_train, num_test, out_path, out);
    if (sc == train) return cmd_train(cfg, data, out_path, out, err);
    if (sc == infer_cmd) return cmd_infer(cfg, ckpt, data.data, out_path, out);
    if (sc == eval) return cmd_eval(cfg, pred, gt, ckpt, data.data, thresholds, out_path, out);
    if (sc == diagnose) return cmd_diagnose(cfg, pred, gt, ckpt, data.data, tiou, k_max, similarity, out_path, out);
    if (sc == decouple_cmd) return cmd_decouple(features, cutoff, beta, out_path, out);
    if (sc == gradcheck) return cmd_gradcheck(gradcheck->count("--seed") ? seed : 1, tolerance, only, out);
    if (sc == sweep) return cmd_sweep(cfg, data, values, out_path, out);
    if (sc == ablate) return cmd_ablate(cfg, data, out_path, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergedError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace fddet
