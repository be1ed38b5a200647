#pragma once

#include "cutkit/common.hpp"
#include "cutkit/timeseries.hpp"

#include <json.hpp>

#include <vector>

namespace cutkit::synth {

// Ground-truth generator for the alignment and GP fitting pipelines: a shared
// p-periodic disturbance signal recorded per trial with a known integer lag,
// a smooth monotone time warp and additive sensor noise.
struct SynthConfig {
  int trials = 14;
  int samples = 2500;           // per trial (5 s at 500 Hz)
  double rate_hz = 500.0;
  double period = 0.2;          // s
  double length_scale = 1.0;
  double signal_std = 1.5;      // N, per axis before axis_scale
  double noise_std = 0.1;       // N
  int max_lag = 120;            // samples; trial 0 always has lag 0
  double warp_amplitude = 0.0;  // s; trial 0 is never warped
  double warp_cycles = 1.0;
  int harmonics = 5;
  Vec3 axis_scale = {0.6, 1.0, 0.8};

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthResult {
  std::vector<ts::ForceSeries> trials;
  nlohmann::json ground_truth;  // lags, warps, kernel parameters
};

SynthResult generate(const SynthConfig& config, std::uint64_t seed);

// Writes trial_000.csv .. and ground_truth.json into dir.
void write_trials(const SynthResult& result, const std::string& dir);

}  // namespace cutkit::synth
