// Seeded benchmark: slow sinusoidal drift, class-specific oscillating motifs
// over the action segments, and white noise.
#pragma once

#include "fddet/dataset.hpp"

namespace fddet {

struct SyntheticSpec {
  int num_videos = 200;
  Index min_length = 128, max_length = 256;
  Index channels = 16;
  int num_classes = 3;
  double drift_amplitude = 1.0;
  int drift_cutoff = 3;  // highest drift harmonic, in cycles per video
  double motif_freq_lo = 0.08, motif_freq_hi = 0.25;  // cycles per step
  double motif_amplitude = 1.0;
  Index min_action = 16, max_action = 64;  // steps
  int min_instances = 1, max_instances = 4;
  double noise_std = 0.3;
  double fps_feature = 4.0;
  std::uint64_t seed = 7;
  std::string id_prefix = "video";
  int first_index = 0;  // video v draws from stream first_index + v; motifs depend on seed only

  void validate() const;
};

/// Features are rounded to single precision so a dataset survives a trip
/// through feature files unchanged. Throws "spec infeasible" when the
/// requested actions cannot be placed without overlap.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct Benchmark {
  Dataset train, test;
};

/// `spec.num_videos` training videos ("train_%04d") and `num_test` test
/// videos ("test_%04d") continuing the same streams.
Benchmark make_benchmark(SyntheticSpec spec, int num_test);

/// 200 training and 50 test videos from one seed; the test split continues
/// the training split's video streams.
Benchmark default_benchmark(std::uint64_t seed = 7, int num_train = 200, int num_test = 50);

}  // namespace fddet
