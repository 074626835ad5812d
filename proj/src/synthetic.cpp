#include "fddet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace fddet {

void SyntheticSpec::validate() const {
  if (num_videos < 0 || first_index < 0) throw ValidationError("synthetic: video counts must be >= 0");
  if (min_length < 1 || max_length < min_length) throw ValidationError("synthetic: bad length range");
  if (channels < 1 || num_classes < 1) throw ValidationError("synthetic: need channels >= 1 and classes >= 1");
  if (drift_cutoff < 0 || drift_amplitude < 0.0) throw ValidationError("synthetic: bad drift settings");
  if (!(motif_freq_lo <= motif_freq_hi) || !(motif_freq_hi <= 0.5))
    throw ValidationError("synthetic: motif band must satisfy lo <= hi <= 0.5");
  if (!(motif_freq_lo > static_cast<double>(drift_cutoff) / static_cast<double>(min_length)))
    throw ValidationError("synthetic: motif band must lie above the drift cutoff");
  if (min_action < 1 || max_action < min_action) throw ValidationError("synthetic: bad action length range");
  if (min_instances < 0 || max_instances < min_instances) throw ValidationError("synthetic: bad instance range");
  if (noise_std < 0.0) throw ValidationError("synthetic: noise std must be >= 0");
  if (!(fps_feature > 0.0)) throw ValidationError("synthetic: fps_feature must be > 0");
}

namespace {

struct Motif {
  double freq;
  RowVector offset, amplitude, phase;
};

std::vector<Motif> make_motifs(const SyntheticSpec& spec, Rng& rng) {
  std::vector<Motif> out;
  for (int c = 0; c < spec.num_classes; ++c) {
    Rng r = rng.fork(static_cast<std::uint64_t>(c));
    Motif m;
    m.freq = spec.num_classes == 1 ? spec.motif_freq_lo
                                   : spec.motif_freq_lo + (spec.motif_freq_hi - spec.motif_freq_lo) * c /
                                                              static_cast<double>(spec.num_classes - 1);
    m.offset = draw_normal(r, 1, spec.channels, 0.0, 0.5);
    m.amplitude = draw_normal(r, 1, spec.channels, 0.0, 1.0);
    m.phase.resize(spec.channels);
    for (Index d = 0; d < spec.channels; ++d) m.phase(d) = r.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(std::move(m));
  }
  return out;
}

// Lengths are redrawn until they fit; the free steps are then split into
// count + 1 gaps at sorted uniform cut points.
std::vector<std::pair<Index, Index>> place_actions(const SyntheticSpec& spec, Index length, int count, Rng& rng) {
  constexpr int kAttempts = 1000;
  std::vector<Index> lens(static_cast<std::size_t>(count));
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Index total = 0;
    for (auto& len : lens) {
      len = rng.uniform_int(spec.min_action, spec.max_action);
      total += len;
    }
    if (total > length) continue;
    std::vector<Index> cuts(static_cast<std::size_t>(count));
    for (auto& c : cuts) c = rng.uniform_int(0, length - total);
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::pair<Index, Index>> placed;  // [start, end) in steps
    Index used = 0;
    for (std::size_t i = 0; i < lens.size(); ++i) {
      const Index start = cuts[i] + used;
      placed.emplace_back(start, start + lens[i]);
      used += lens[i];
    }
    return placed;
  }
  throw ValidationError("spec infeasible");
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.min_action > spec.min_length ||
      static_cast<Index>(spec.min_instances) * spec.min_action > spec.min_length)
    throw ValidationError("spec infeasible");
  Rng root(spec.seed);
  Rng motif_rng = root.fork(0);
  const auto motifs = make_motifs(spec, motif_rng);

  Dataset ds;
  for (int c = 0; c < spec.num_classes; ++c) ds.labels.push_back("class_" + std::to_string(c));
  const double two_pi = 2.0 * std::numbers::pi;
  for (int v = 0; v < spec.num_videos; ++v) {
    Rng rng = root.fork(1000 + static_cast<std::uint64_t>(spec.first_index + v));
    const Index L = rng.uniform_int(spec.min_length, spec.max_length);
    Matrix x = Matrix::Zero(L, spec.channels);

    if (spec.drift_cutoff > 0 && spec.drift_amplitude > 0.0) {
      const double scale = spec.drift_amplitude / std::sqrt(static_cast<double>(spec.drift_cutoff));
      for (int k = 1; k <= spec.drift_cutoff; ++k) {
        for (Index d = 0; d < spec.channels; ++d) {
          const double a = rng.normal() * scale, phase = rng.uniform(0.0, two_pi);
          for (Index t = 0; t < L; ++t)
            x(t, d) += a * std::sin(two_pi * k * static_cast<double>(t) / static_cast<double>(L) + phase);
        }
      }
    }

    const int count = static_cast<int>(rng.uniform_int(spec.min_instances, spec.max_instances));
    Video video;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%04d", spec.id_prefix.c_str(), v);
    video.id = id;
    video.fps_feature = spec.fps_feature;
    video.duration_seconds = static_cast<double>(L) / spec.fps_feature;
    for (const auto& [start, end] : place_actions(spec, L, count, rng)) {
      const int label = static_cast<int>(rng.uniform_int(0, spec.num_classes - 1));
      const Motif& m = motifs[static_cast<std::size_t>(label)];
      for (Index t = start; t < end; ++t) {
        const double phase = two_pi * m.freq * static_cast<double>(t - start);
        for (Index d = 0; d < spec.channels; ++d)
          x(t, d) += spec.motif_amplitude * (m.offset(d) + m.amplitude(d) * std::sin(phase + m.phase(d)));
      }
      video.actions.push_back(
          {to_seconds(Segment{static_cast<double>(start), static_cast<double>(end)}, spec.fps_feature), label});
    }

    if (spec.noise_std > 0.0) x += draw_normal(rng, L, spec.channels, 0.0, spec.noise_std);
    video.features = x.cast<float>().cast<double>();
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

Benchmark make_benchmark(SyntheticSpec spec, int num_test) {
  spec.first_index = 0;
  spec.id_prefix = "train";
  Benchmark b;
  b.train = generate_synthetic(spec);
  spec.first_index = spec.num_videos;
  spec.num_videos = num_test;
  spec.id_prefix = "test";
  b.test = generate_synthetic(spec);
  return b;
}

Benchmark default_benchmark(std::uint64_t seed, int num_train, int num_test) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.num_videos = num_train;
  return make_benchmark(spec, num_test);
}

}  // namespace fddet
