#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "respira/data_io.hpp"
#include "respira/types.hpp"

namespace respira::synth {

// Morphology parameter a respiratory target is planted on.
enum class ModTarget { none, r_amp, t_amp, t_width, qs_width };

// Per-beat wave shape: four Gaussian bumps at fixed offsets around R.
struct WaveTemplate {
  double q_amp_mv = -0.12, r_amp_mv = 1.0, s_amp_mv = -0.25, t_amp_mv = 0.30;
  double q_sigma_ms = 9.0, r_sigma_ms = 12.0, s_sigma_ms = 9.0, t_sigma_ms = 32.0;
  double q_offset_ms = 40.0, s_offset_ms = 40.0, t_offset_ms = 200.0;
};

// One protocol segment. Targets wander smoothly around their base value;
// depth scales how strongly the planted morphology parameter tracks the
// normalized target (linear map, so banks can recover it).
struct ActivitySpec {
  std::string name = "rest";
  double duration_s = 180.0;
  double hr_bpm = 70.0, hr_wander = 4.0;
  double br_bpm = 14.0, br_wander = 2.0;
  double ve_lpm = 10.0, ve_wander = 2.0;
  ModTarget br_target = ModTarget::r_amp;
  double br_depth = 0.08;
  ModTarget ve_target = ModTarget::t_amp;
  double ve_depth = 0.08;
  // Band-limited IMU noise amplitudes per band (0.01-0.5, 0.5-3, >3 Hz).
  double accel_band[3] = {0.01, 0.005, 0.002};
  double gyro_band[3] = {1.0, 0.5, 0.2};
  // Optional periodic arm-swing component.
  double swing_hz = 0.0, swing_accel = 0.0, swing_gyro = 0.0;
  // Static orientation offsets (gravity projection on the accelerometer).
  double accel_bias[3] = {0.0, 0.0, 1.0};
};

struct SynthConfig {
  std::uint64_t seed = 1;
  double ecg_rate_hz = 250.0;
  double imu_rate_hz = 250.0;
  double resp_rate_hz = 1.0;
  WaveTemplate wave;
  double rsa_depth = 0.04;        // RR modulation at the breathing frequency
  double ecg_noise_mv = 0.01;
  double imu_noise = 0.004;
  // Within-activity intensity wander scales all of a segment's band
  // amplitudes together (effort level), so per-band ratios stay stable and
  // class marginals overlap along the intensity axis. Axis-aligned shallow
  // trees then stay imperfect and boosting has margins to earn, while the
  // classes remain separable on band ratios. The per-band wander adds a
  // little independent texture on top.
  double imu_intensity_wander = 0.25;
  double imu_band_wander = 0.1;
  double resp_br_noise = 0.0;     // additive noise on spirometer samples
  double resp_ve_noise = 0.0;
  double am_freq_hz = 0.0;        // direct R-amplitude AM (spectral tests)
  double am_depth = 0.0;
  // Activity labels shrink inward by this margin so every labeled window's
  // full span lies inside one activity (the protocol labels only stable
  // segments). Boundary windows stay unlabeled and drop out of training.
  double label_margin_s = 7.5;
  std::string subject_id = "synth";
  std::vector<ActivitySpec> activities;
};

struct PlantedBeat {
  double r_ms = 0;  // absolute bump centers
  double q_ms = 0, s_ms = 0, t_ms = 0;
  double r_amp_mult = 1.0;
};

struct TruthWindow {
  std::int64_t t_center_ms = 0;
  double br = 0, ve = 0;  // noiseless means over the window
  std::string activity;
};

struct SynthTruth {
  std::vector<PlantedBeat> beats;
  std::vector<TruthWindow> windows;  // on the 15 s / 3 s feature clock
};

struct SynthSession {
  io::Session session;
  SynthTruth truth;
};

// Five-activity protocol with distinct IMU signatures and overlapping heart
// rates; suitable defaults for end-to-end runs.
SynthConfig default_config();

// Deterministic per seed, bit-identical across runs.
SynthSession gen_session(const SynthConfig& cfg);

// Writes ecg.csv / imu.csv / resp.csv / labels.csv / manifest.json plus a
// truth.json sidecar into dir.
void write_session(const SynthSession& s, const std::string& dir);

SynthTruth read_truth(const std::string& path);

}  // namespace respira::synth
