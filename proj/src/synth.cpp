#include "respira/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "respira/dsp.hpp"
#include "respira/errors.hpp"
#include "respira/rng.hpp"

namespace respira::synth {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// Smooth bounded wander in [-1, 1]: two slow sinusoids plus a faster one
// that decorrelates consecutive windows.
struct Wander {
  double f1, f2, f3, p1, p2, p3;
  explicit Wander(Rng rng) {
    f1 = rng.uniform(0.004, 0.008);
    f2 = rng.uniform(0.011, 0.019);
    f3 = rng.uniform(0.045, 0.09);
    p1 = rng.uniform(0.0, kTwoPi);
    p2 = rng.uniform(0.0, kTwoPi);
    p3 = rng.uniform(0.0, kTwoPi);
  }
  double operator()(double t_s) const {
    return 0.5 * std::sin(kTwoPi * f1 * t_s + p1) +
           0.3 * std::sin(kTwoPi * f2 * t_s + p2) +
           0.2 * std::sin(kTwoPi * f3 * t_s + p3);
  }
};

struct ActivityState {
  const ActivitySpec* spec;
  double t_start_s, t_end_s;
  Wander hr, br, ve;
};

double add_bump(std::vector<double>& x, double rate_hz, double center_s,
                double amp, double sigma_ms) {
  const double sigma_s = sigma_ms / 1000.0;
  const int lo = std::max(0, static_cast<int>(std::floor((center_s - 4.5 * sigma_s) * rate_hz)));
  const int hi = std::min(static_cast<int>(x.size()) - 1,
                          static_cast<int>(std::ceil((center_s + 4.5 * sigma_s) * rate_hz)));
  for (int i = lo; i <= hi; ++i) {
    const double dt = static_cast<double>(i) / rate_hz - center_s;
    x[static_cast<std::size_t>(i)] += amp * std::exp(-dt * dt / (2.0 * sigma_s * sigma_s));
  }
  return amp;
}

// Band-limited noise: white noise shaped by the shared band-pass filters.
std::vector<double> band_noise(Rng& rng, std::size_t n, double rate_hz,
                               double lo_hz, double hi_hz) {
  std::vector<double> w(n);
  for (auto& v : w) v = rng.normal();
  if (n < 32) return w;
  std::vector<double> shaped = dsp::bandpass(w, lo_hz, hi_hz, rate_hz);
  // Normalize to unit RMS so the configured amplitude is the actual level.
  double rms = 0.0;
  for (double v : shaped) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(n));
  if (rms > 1e-12)
    for (auto& v : shaped) v /= rms;
  return shaped;
}

}  // namespace

SynthConfig default_config() {
  SynthConfig cfg;
  auto act = [](const std::string& name, double hr, double br, double ve) {
    ActivitySpec a;
    a.name = name;
    a.hr_bpm = hr;
    a.br_bpm = br;
    a.ve_lpm = ve;
    return a;
  };

  // Class signatures differ mainly in band-energy RATIOS; the shared
  // intensity wander slides each class along its own ray so single-band
  // marginals overlap between neighbours (walk/bike/wave) while the rays
  // stay apart.
  ActivitySpec rest = act("rest", 64, 12, 8);
  rest.accel_band[0] = 0.015; rest.accel_band[1] = 0.004; rest.accel_band[2] = 0.002;
  rest.gyro_band[0] = 0.8; rest.gyro_band[1] = 0.3; rest.gyro_band[2] = 0.1;

  ActivitySpec walk = act("walk", 84, 17, 14);
  walk.accel_band[0] = 0.03; walk.accel_band[1] = 0.12; walk.accel_band[2] = 0.02;
  walk.gyro_band[0] = 3.0; walk.gyro_band[1] = 9.0; walk.gyro_band[2] = 1.5;
  walk.swing_hz = 1.8; walk.swing_accel = 0.32; walk.swing_gyro = 26.0;
  walk.accel_bias[0] = 0.15; walk.accel_bias[2] = 0.97;

  ActivitySpec run = act("run", 120, 26, 34);
  run.hr_wander = 8;
  run.accel_band[0] = 0.05; run.accel_band[1] = 0.5; run.accel_band[2] = 0.25;
  run.gyro_band[0] = 7.0; run.gyro_band[1] = 55.0; run.gyro_band[2] = 22.0;
  run.swing_hz = 2.8; run.swing_accel = 0.5; run.swing_gyro = 70.0;
  run.accel_bias[0] = 0.3; run.accel_bias[2] = 0.92;

  ActivitySpec bike = act("bike", 102, 21, 24);
  bike.accel_band[0] = 0.035; bike.accel_band[1] = 0.045; bike.accel_band[2] = 0.012;
  bike.gyro_band[0] = 4.0; bike.gyro_band[1] = 13.0; bike.gyro_band[2] = 2.0;
  bike.swing_hz = 1.1; bike.swing_accel = 0.12; bike.swing_gyro = 16.0;
  bike.accel_bias[0] = 0.5; bike.accel_bias[2] = 0.82;

  ActivitySpec wave = act("wave", 74, 15, 11);
  wave.accel_band[0] = 0.05; wave.accel_band[1] = 0.08; wave.accel_band[2] = 0.01;
  wave.gyro_band[0] = 45.0; wave.gyro_band[1] = 26.0; wave.gyro_band[2] = 2.0;
  wave.swing_hz = 0.8; wave.swing_accel = 0.16; wave.swing_gyro = 70.0;
  wave.accel_bias[1] = 0.4; wave.accel_bias[2] = 0.88;

  cfg.activities = {rest, walk, run, bike, wave};
  return cfg;
}

SynthSession gen_session(const SynthConfig& cfg) {
  if (cfg.activities.empty()) throw BadConfig("no activities configured");
  for (const auto& a : cfg.activities) {
    if (a.hr_bpm <= 0 || a.br_bpm <= 0 || a.ve_lpm < 0 || a.duration_s <= 0)
      throw BadConfig("activity '" + a.name + "' has non-positive rates or duration");
  }

  Rng root(cfg.seed);
  SynthSession out;
  auto& ses = out.session;
  ses.subject_id = cfg.subject_id;

  double total_s = 0;
  for (const auto& a : cfg.activities) total_s += a.duration_s;
  const auto n_ecg = static_cast<std::size_t>(std::llround(total_s * cfg.ecg_rate_hz));
  const auto n_imu = static_cast<std::size_t>(std::llround(total_s * cfg.imu_rate_hz));

  // Activity layout and the per-activity wander processes.
  std::vector<ActivityState> acts;
  double t_cursor = 0;
  for (std::size_t i = 0; i < cfg.activities.size(); ++i) {
    const auto& spec = cfg.activities[i];
    Rng sub = root.split("activity/" + std::to_string(i));
    acts.push_back(ActivityState{&spec, t_cursor, t_cursor + spec.duration_s,
                                 Wander(sub.split("hr")), Wander(sub.split("br")),
                                 Wander(sub.split("ve"))});
    const double margin =
        std::max(0.0, std::min(cfg.label_margin_s, spec.duration_s / 2.0 - 0.1));
    ses.activity_intervals.push_back(
        {static_cast<std::int64_t>(std::llround((t_cursor + margin) * 1000.0)),
         static_cast<std::int64_t>(
             std::llround((t_cursor + spec.duration_s - margin) * 1000.0)),
         spec.name});
    t_cursor += spec.duration_s;
  }

  auto state_at = [&](double t_s) -> const ActivityState& {
    for (const auto& a : acts)
      if (t_s < a.t_end_s) return a;
    return acts.back();
  };
  auto hr_at = [&](double t) {
    const auto& a = state_at(t);
    return a.spec->hr_bpm + a.spec->hr_wander * a.hr(t - a.t_start_s);
  };
  auto br_at = [&](double t) {
    const auto& a = state_at(t);
    return a.spec->br_bpm + a.spec->br_wander * a.br(t - a.t_start_s);
  };
  auto ve_at = [&](double t) {
    const auto& a = state_at(t);
    return a.spec->ve_lpm + a.spec->ve_wander * a.ve(t - a.t_start_s);
  };
  // Normalized target position in [-0.5, 0.5] within the activity's range.
  auto z_of = [](double value, double base, double wander) {
    return wander > 0 ? (value - base) / (2.0 * wander) : 0.0;
  };

  // --- ECG ------------------------------------------------------------
  std::vector<double> ecg(n_ecg, 0.0);
  Rng ecg_rng = root.split("ecg");
  double t_beat = 0.3;  // first beat a little inside the stream
  double rsa_phase = 0.0;
  while (t_beat < total_s - 0.3) {
    const auto& a = state_at(t_beat);
    const auto& spec = *a.spec;
    const WaveTemplate& w = cfg.wave;

    const double z_br = z_of(br_at(t_beat), spec.br_bpm, spec.br_wander);
    const double z_ve = z_of(ve_at(t_beat), spec.ve_lpm, spec.ve_wander);

    auto mult_for = [&](ModTarget target) {
      double m = 1.0;
      if (spec.br_target == target) m *= 1.0 + spec.br_depth * z_br;
      if (spec.ve_target == target) m *= 1.0 + spec.ve_depth * z_ve;
      return m;
    };

    double r_amp = w.r_amp_mv * mult_for(ModTarget::r_amp);
    if (cfg.am_depth > 0)
      r_amp *= 1.0 + cfg.am_depth * std::sin(kTwoPi * cfg.am_freq_hz * t_beat);
    const double t_amp = w.t_amp_mv * mult_for(ModTarget::t_amp);
    // T-width modulation stretches the T timing (S-T distance) directly;
    // the bump width follows at reduced depth so the derived height/power
    // features stay mostly flat.
    const double tw_mult = mult_for(ModTarget::t_width);
    const double tw_sigma_mult = 1.0 + 0.3 * (tw_mult - 1.0);
    const double qs_mult = mult_for(ModTarget::qs_width);

    const double q_off = w.q_offset_ms * qs_mult;
    const double s_off = w.s_offset_ms * qs_mult;
    const double t_off = w.t_offset_ms * tw_mult;

    PlantedBeat beat;
    beat.r_ms = t_beat * 1000.0;
    beat.q_ms = beat.r_ms - q_off;
    beat.s_ms = beat.r_ms + s_off;
    beat.t_ms = beat.r_ms + t_off;
    beat.r_amp_mult = r_amp / w.r_amp_mv;
    out.truth.beats.push_back(beat);

    add_bump(ecg, cfg.ecg_rate_hz, t_beat - q_off / 1000.0, w.q_amp_mv,
             w.q_sigma_ms * qs_mult);
    add_bump(ecg, cfg.ecg_rate_hz, t_beat, r_amp, w.r_sigma_ms);
    add_bump(ecg, cfg.ecg_rate_hz, t_beat + s_off / 1000.0, w.s_amp_mv,
             w.s_sigma_ms * qs_mult);
    add_bump(ecg, cfg.ecg_rate_hz, t_beat + t_off / 1000.0, t_amp,
             w.t_sigma_ms * tw_sigma_mult);

    // Next beat: RR from the instantaneous heart rate with respiratory
    // sinus arrhythmia at the breathing frequency.
    const double rr_s =
        (60.0 / hr_at(t_beat)) * (1.0 + cfg.rsa_depth * std::sin(rsa_phase));
    rsa_phase += kTwoPi * (br_at(t_beat) / 60.0) * rr_s;
    t_beat += rr_s;
  }
  if (cfg.ecg_noise_mv > 0)
    for (auto& v : ecg) v += cfg.ecg_noise_mv * ecg_rng.normal();

  ses.ecg.rate_hz = cfg.ecg_rate_hz;
  ses.ecg.t0_ms = 0;
  ses.ecg.channels.push_back({"lead1_mv", "mV", std::move(ecg)});

  // --- IMU ------------------------------------------------------------
  static const char* kImuNames[6] = {"ax_g", "ay_g", "az_g",
                                     "gx_dps", "gy_dps", "gz_dps"};
  ses.imu.rate_hz = cfg.imu_rate_hz;
  ses.imu.t0_ms = 0;
  for (int c = 0; c < 6; ++c)
    ses.imu.channels.push_back({kImuNames[c], c < 3 ? "g" : "dps",
                                std::vector<double>(n_imu, 0.0)});

  const double bands[3][2] = {{0.01, 0.5}, {0.5, 3.0}, {3.0, 20.0}};
  for (std::size_t ai = 0; ai < acts.size(); ++ai) {
    const auto& a = acts[ai];
    const auto& spec = *a.spec;
    const auto seg_lo = static_cast<std::size_t>(std::llround(a.t_start_s * cfg.imu_rate_hz));
    const auto seg_hi = std::min(
        n_imu, static_cast<std::size_t>(std::llround(a.t_end_s * cfg.imu_rate_hz)));
    const std::size_t seg_n = seg_hi - seg_lo;
    Rng seg_rng = root.split("imu/" + std::to_string(ai));
    const Wander intensity(seg_rng.split("intensity"));
    // Wander sampled on a coarse grid (held for 0.25 s) keeps the
    // per-sample cost down while still moving well within one window.
    const auto wander_step =
        static_cast<std::size_t>(std::max(1.0, cfg.imu_rate_hz / 4.0));
    for (int c = 0; c < 6; ++c) {
      auto& dst = ses.imu.channels[static_cast<std::size_t>(c)].values;
      const double* amps = c < 3 ? spec.accel_band : spec.gyro_band;
      for (int b = 0; b < 3; ++b) {
        if (amps[b] <= 0) continue;
        Rng nr = seg_rng.split(static_cast<std::uint64_t>(c * 8 + b));
        const Wander band_wander(nr.split("amp"));
        auto noise = band_noise(nr, seg_n, cfg.imu_rate_hz, bands[b][0], bands[b][1]);
        double gain = amps[b];
        for (std::size_t i = 0; i < seg_n; ++i) {
          if (i % wander_step == 0) {
            const double t = static_cast<double>(i) / cfg.imu_rate_hz;
            gain = amps[b] * (1.0 + cfg.imu_intensity_wander * intensity(t)) *
                   (1.0 + cfg.imu_band_wander * band_wander(t));
          }
          dst[seg_lo + i] += gain * noise[i];
        }
      }
      if (c < 3) {
        const double bias = spec.accel_bias[c];
        for (std::size_t i = 0; i < seg_n; ++i) dst[seg_lo + i] += bias;
      }
      // Periodic swing on the x/y axes with one phase per sensor, so the
      // swing locks ax-ay (and gx-gy) correlations; the swing level follows
      // the same intensity wander as the noise bands, keeping the
      // swing-to-noise ratio (and the mcr signature) intensity-invariant.
      const double swing = c < 3 ? spec.swing_accel : spec.swing_gyro;
      if (spec.swing_hz > 0 && swing > 0 && (c % 3) != 2) {
        Rng pr = seg_rng.split(static_cast<std::uint64_t>(100 + c / 3));
        const double phase = pr.uniform(0.0, kTwoPi);
        const double gain = (c % 3) == 0 ? 1.0 : 0.5;
        double amp = gain * swing;
        for (std::size_t i = 0; i < seg_n; ++i) {
          const double t = static_cast<double>(seg_lo + i) / cfg.imu_rate_hz;
          if (i % wander_step == 0)
            amp = gain * swing *
                  (1.0 + cfg.imu_intensity_wander *
                             intensity(static_cast<double>(i) / cfg.imu_rate_hz));
          dst[seg_lo + i] += amp * std::sin(kTwoPi * spec.swing_hz * t + phase);
        }
      }
    }
  }
  if (cfg.imu_noise > 0) {
    Rng nr = root.split("imu-noise");
    for (auto& ch : ses.imu.channels)
      for (auto& v : ch.values) v += cfg.imu_noise * nr.normal();
  }

  // --- Respiration ground truth ----------------------------------------
  Rng resp_rng = root.split("resp");
  const auto n_resp = static_cast<std::size_t>(std::floor(total_s * cfg.resp_rate_hz));
  for (std::size_t i = 0; i < n_resp; ++i) {
    const double t = static_cast<double>(i) / cfg.resp_rate_hz;
    ResponseSample s;
    s.t_ms = static_cast<std::int64_t>(std::llround(t * 1000.0));
    s.br_bpm = std::max(0.0, br_at(t) + cfg.resp_br_noise * resp_rng.normal());
    s.ve_lpm = std::max(0.0, ve_at(t) + cfg.resp_ve_noise * resp_rng.normal());
    ses.resp.samples.push_back(s);
  }

  // --- Per-window planted truth on the feature clock -------------------
  const std::size_t n_win = dsp::window_count(total_s);
  for (std::size_t wdx = 0; wdx < n_win; ++wdx) {
    const double start = 3.0 * static_cast<double>(wdx);
    TruthWindow tw;
    tw.t_center_ms = static_cast<std::int64_t>(std::llround((start + 7.5) * 1000.0));
    double br_acc = 0, ve_acc = 0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n_resp; ++i) {
      const double t = static_cast<double>(i) / cfg.resp_rate_hz;
      if (t >= start && t < start + 15.0) {
        br_acc += br_at(t);
        ve_acc += ve_at(t);
        ++cnt;
      }
    }
    if (cnt > 0) {
      tw.br = br_acc / static_cast<double>(cnt);
      tw.ve = ve_acc / static_cast<double>(cnt);
    }
    if (const auto* iv = io::interval_at(ses.activity_intervals, tw.t_center_ms))
      tw.activity = iv->activity;
    out.truth.windows.push_back(tw);
  }

  return out;
}

void write_session(const SynthSession& s, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  io::write_ecg_csv(dir + "/ecg.csv", s.session.ecg);
  io::write_imu_csv(dir + "/imu.csv", s.session.imu);
  io::write_resp_csv(dir + "/resp.csv", s.session.resp);
  io::write_labels_csv(dir + "/labels.csv", s.session.activity_intervals);

  nlohmann::json manifest = {
      {"ecg_path", "ecg.csv"},     {"imu_path", "imu.csv"},
      {"resp_path", "resp.csv"},   {"labels_path", "labels.csv"},
      {"subject_id", s.session.subject_id}};
  std::ofstream mf(dir + "/manifest.json");
  mf << manifest.dump(2) << '\n';

  nlohmann::json truth;
  truth["schema_version"] = 1;
  for (const auto& b : s.truth.beats)
    truth["beats"].push_back({{"r_ms", b.r_ms},
                              {"q_ms", b.q_ms},
                              {"s_ms", b.s_ms},
                              {"t_ms", b.t_ms},
                              {"r_amp_mult", b.r_amp_mult}});
  for (const auto& w : s.truth.windows)
    truth["windows"].push_back({{"t_center_ms", w.t_center_ms},
                                {"br", w.br},
                                {"ve", w.ve},
                                {"activity", w.activity}});
  std::ofstream tf(dir + "/truth.json");
  tf << truth.dump() << '\n';
}

SynthTruth read_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("no such file: " + path);
  nlohmann::json j;
  in >> j;
  SynthTruth t;
  for (const auto& b : j.value("beats", nlohmann::json::array())) {
    PlantedBeat pb;
    pb.r_ms = b.at("r_ms").get<double>();
    pb.q_ms = b.at("q_ms").get<double>();
    pb.s_ms = b.at("s_ms").get<double>();
    pb.t_ms = b.at("t_ms").get<double>();
    pb.r_amp_mult = b.at("r_amp_mult").get<double>();
    t.beats.push_back(pb);
  }
  for (const auto& w : j.value("windows", nlohmann::json::array())) {
    TruthWindow tw;
    tw.t_center_ms = w.at("t_center_ms").get<std::int64_t>();
    tw.br = w.at("br").get<double>();
    tw.ve = w.at("ve").get<double>();
    tw.activity = w.value("activity", std::string());
    t.windows.push_back(tw);
  }
  return t;
}

}  // namespace respira::synth
