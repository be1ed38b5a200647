#include "cutkit/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace cutkit::synth {

namespace {

// Strictly p-periodic random Fourier series, one spectrum per axis. Harmonic
// weights decay with the length scale so small l keeps more ripple.
struct PeriodicSignal {
  double period;
  std::vector<Vec3> cos_coef, sin_coef;  // per harmonic, per axis

  Vec3 at(double t) const {
    Vec3 v = Vec3::Zero();
    for (std::size_t k = 0; k < cos_coef.size(); ++k) {
      const double arg = 2.0 * M_PI * static_cast<double>(k + 1) * t / period;
      v += cos_coef[k] * std::cos(arg) + sin_coef[k] * std::sin(arg);
    }
    return v;
  }
};

PeriodicSignal make_signal(const SynthConfig& config, Rng& rng) {
  PeriodicSignal sig;
  sig.period = config.period;
  std::vector<double> w(config.harmonics);
  double w_sq = 0.0;
  for (int k = 0; k < config.harmonics; ++k) {
    const double kk = static_cast<double>(k + 1);
    w[k] = std::exp(-0.25 * kk * kk * config.length_scale * config.length_scale);
    w_sq += w[k] * w[k];
  }
  const double norm = std::sqrt(w_sq);
  for (int k = 0; k < config.harmonics; ++k) {
    Vec3 c, s;
    for (int a = 0; a < 3; ++a) {
      const double scale = config.signal_std * config.axis_scale[a] * w[k] / norm;
      c[a] = scale * rng.normal();
      s[a] = scale * rng.normal();
    }
    sig.cos_coef.push_back(c);
    sig.sin_coef.push_back(s);
  }
  return sig;
}

}  // namespace

nlohmann::json SynthConfig::to_json() const {
  return {{"trials", trials},
          {"samples", samples},
          {"rate_hz", rate_hz},
          {"period", period},
          {"length_scale", length_scale},
          {"signal_std", signal_std},
          {"noise_std", noise_std},
          {"max_lag", max_lag},
          {"warp_amplitude", warp_amplitude},
          {"warp_cycles", warp_cycles},
          {"harmonics", harmonics},
          {"axis_scale", {axis_scale.x(), axis_scale.y(), axis_scale.z()}}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.trials = j.value("trials", c.trials);
  c.samples = j.value("samples", c.samples);
  c.rate_hz = j.value("rate_hz", c.rate_hz);
  c.period = j.value("period", c.period);
  c.length_scale = j.value("length_scale", c.length_scale);
  c.signal_std = j.value("signal_std", c.signal_std);
  c.noise_std = j.value("noise_std", c.noise_std);
  c.max_lag = j.value("max_lag", c.max_lag);
  c.warp_amplitude = j.value("warp_amplitude", c.warp_amplitude);
  c.warp_cycles = j.value("warp_cycles", c.warp_cycles);
  c.harmonics = j.value("harmonics", c.harmonics);
  if (j.contains("axis_scale"))
    for (int a = 0; a < 3; ++a) c.axis_scale[a] = j.at("axis_scale")[a].get<double>();
  return c;
}

SynthResult generate(const SynthConfig& config, std::uint64_t seed) {
  if (config.trials < 1 || config.samples < 2)
    throw std::invalid_argument("synth: need at least 1 trial of 2 samples");
  Rng base_rng = Rng::derive(seed, 0x7369676eULL);
  const PeriodicSignal signal = make_signal(config, base_rng);
  const double dt = 1.0 / config.rate_hz;
  const double span = config.samples * dt;

  SynthResult out;
  auto truth_trials = nlohmann::json::array();
  for (int i = 0; i < config.trials; ++i) {
    Rng trial_rng = Rng::derive(seed, 0x747269ULL * 1000 + i);
    const int lag = i == 0 ? 0 : trial_rng.uniform_int(0, config.max_lag);
    const double warp_amp = i == 0 ? 0.0 : trial_rng.uniform(0.0, config.warp_amplitude);

    ts::ForceSeries trial;
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%03d.csv", i);
    trial.source = name;
    for (int n = 0; n < config.samples; ++n) {
      const double t = n * dt;
      const double warped =
          t + warp_amp * std::sin(2.0 * M_PI * config.warp_cycles * t / span);
      Vec3 f = signal.at(warped - lag * dt);
      if (config.noise_std > 0.0)
        for (int a = 0; a < 3; ++a) f[a] += config.noise_std * trial_rng.normal();
      trial.time.push_back(t);
      trial.force.push_back(f);
    }
    out.trials.push_back(std::move(trial));
    truth_trials.push_back({{"file", name},
                            {"lag", lag},
                            {"warp_amplitude", warp_amp},
                            {"warp_cycles", config.warp_cycles}});
  }

  out.ground_truth = {{"rate_hz", config.rate_hz},
                      {"kernel",
                       {{"period", config.period},
                        {"length_scale", config.length_scale},
                        {"signal_std", config.signal_std}}},
                      {"noise_std", config.noise_std},
                      {"trials", truth_trials}};
  return out;
}

void write_trials(const SynthResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& trial : result.trials)
    ts::write_csv(trial, (std::filesystem::path(dir) / trial.source).string());
  std::ofstream truth(std::filesystem::path(dir) / "ground_truth.json");
  if (!truth) throw std::runtime_error("cannot write ground truth in " + dir);
  truth << result.ground_truth.dump(2) << "\n";
}

}  // namespace cutkit::synth
