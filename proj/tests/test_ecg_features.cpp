#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "respira/dsp.hpp"
#include "respira/ecg_features.hpp"
#include "respira/errors.hpp"
#include "respira/synth.hpp"

using namespace respira;

namespace {

// One window of clean planted ECG plus the matching truth beats.
struct PlantedWindow {
  dsp::Window window;
  std::vector<synth::PlantedBeat> beats;  // fully inside the window
};

PlantedWindow make_planted(double hr_bpm, std::uint64_t seed = 1,
                           double noise_mv = 0.0) {
  synth::SynthConfig cfg;
  cfg.seed = seed;
  cfg.ecg_noise_mv = noise_mv;
  cfg.rsa_depth = 0.0;
  synth::ActivitySpec act;
  act.duration_s = 16.0;
  act.hr_bpm = hr_bpm;
  act.hr_wander = 0.0;
  act.br_depth = 0.0;
  act.ve_depth = 0.0;
  cfg.activities = {act};
  const auto s = synth::gen_session(cfg);

  PlantedWindow out;
  out.window = dsp::sliding_windows(s.session.ecg, 15.0, 3.0).front();
  const double w_end_ms =
      1000.0 * static_cast<double>(out.window.length()) / out.window.rate_hz;
  for (const auto& b : s.truth.beats)
    if (b.r_ms > 600.0 && b.r_ms < w_end_ms - 600.0) out.beats.push_back(b);
  return out;
}

int nearest_of(const std::vector<int>& peaks, double target_idx) {
  int best = peaks.front();
  for (int p : peaks)
    if (std::fabs(p - target_idx) < std::fabs(best - target_idx)) best = p;
  return best;
}

}  // namespace

TEST_SUITE("ecg") {

TEST_CASE("clean 60 bpm window: 15 +- 1 peaks, each within 20 ms of a planted beat") {
  const auto pw = make_planted(60.0, 2);
  const auto x = ecg::preprocess(pw.window);
  const auto r = ecg::detect_r_peaks(x, pw.window.rate_hz);
  CHECK(r.size() >= 13);
  CHECK(r.size() <= 16);
  int matched = 0;
  for (const auto& b : pw.beats) {
    const double idx = b.r_ms / 1000.0 * pw.window.rate_hz;
    if (std::fabs(nearest_of(r, idx) - idx) <= 0.020 * pw.window.rate_hz) ++matched;
  }
  CHECK(matched == static_cast<int>(pw.beats.size()));
}

TEST_CASE("flat signal has no beats") {
  std::vector<double> zeros(3750, 0.0);
  CHECK_THROWS_AS(ecg::detect_r_peaks(zeros, 250.0), NoBeatsFound);
}

TEST_CASE("two peaks 150 ms apart: lockout keeps only the larger") {
  std::vector<double> x(1000, 0.0);
  auto bump = [&](int center, double amp) {
    for (int i = -10; i <= 10; ++i)
      x[static_cast<std::size_t>(center + i)] +=
          amp * std::exp(-i * i / (2.0 * 3.0 * 3.0));
  };
  bump(300, 1.0);
  bump(300 + 37, 0.8);  // ~150 ms at 250 Hz
  bump(600, 1.0);
  bump(840, 1.0);
  const auto r = ecg::detect_r_peaks(x, 250.0);
  CHECK(std::count_if(r.begin(), r.end(), [](int p) { return p > 280 && p < 360; }) == 1);
  CHECK(nearest_of(r, 300) == 300);
}

TEST_CASE("deleting a detected peak is repaired within 20 ms") {
  const auto pw = make_planted(72.0, 6);
  const auto x = ecg::preprocess(pw.window);
  auto r = ecg::detect_r_peaks(x, pw.window.rate_hz);
  REQUIRE(r.size() >= 10);
  const int victim = r[static_cast<std::size_t>(r.size() / 2)];
  auto broken = r;
  broken.erase(std::find(broken.begin(), broken.end(), victim));
  const auto repaired = ecg::correct_missed_peaks(broken, x, pw.window.rate_hz);
  CHECK(repaired.size() == r.size());
  CHECK(std::fabs(nearest_of(repaired, victim) - victim) <= 0.020 * pw.window.rate_hz);
}

TEST_CASE("regular peaks pass through the repair unchanged") {
  const auto pw = make_planted(66.0, 8);
  const auto x = ecg::preprocess(pw.window);
  const auto r = ecg::detect_r_peaks(x, pw.window.rate_hz);
  CHECK(ecg::correct_missed_peaks(r, x, pw.window.rate_hz) == r);
}

TEST_CASE("an injected near-duplicate peak is dropped") {
  const auto pw = make_planted(66.0, 9);
  const auto x = ecg::preprocess(pw.window);
  const auto r = ecg::detect_r_peaks(x, pw.window.rate_hz);
  auto broken = r;
  broken.insert(std::upper_bound(broken.begin(), broken.end(), r[3] + 13), r[3] + 13);
  const auto repaired = ecg::correct_missed_peaks(broken, x, pw.window.rate_hz);
  CHECK(repaired == r);
}

TEST_CASE("QST located within 8 ms of the planted offsets") {
  for (double hr : {60.0, 90.0, 150.0, 180.0}) {
    const auto pw = make_planted(hr, 11);
    const auto x = ecg::preprocess(pw.window);
    auto r = ecg::detect_r_peaks(x, pw.window.rate_hz);
    r = ecg::correct_missed_peaks(r, x, pw.window.rate_hz);
    const double sample_ms = 1000.0 / pw.window.rate_hz;
    int checked = 0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      const synth::PlantedBeat* beat = nullptr;
      for (const auto& b : pw.beats)
        if (std::fabs(b.r_ms - r[i] * sample_ms) < 25.0) beat = &b;
      if (!beat) continue;
      ecg::BeatFiducials f;
      try {
        f = ecg::locate_qst(r[i], x, pw.window.rate_hz, {}, r[i + 1]);
      } catch (const SegmentOutOfBounds&) {
        continue;
      }
      CHECK(std::fabs(f.q_idx * sample_ms - beat->q_ms) <= 8.0);
      CHECK(std::fabs(f.s_idx * sample_ms - beat->s_ms) <= 8.0);
      CHECK(std::fabs(f.t_idx * sample_ms - beat->t_ms) <= 8.0);
      ++checked;
    }
    CHECK(checked >= 5);
  }
}

TEST_CASE("beat near the window edge is out of bounds") {
  std::vector<double> x(3750, 0.0);
  CHECK_THROWS_AS(ecg::locate_qst(10, x, 250.0), SegmentOutOfBounds);
  CHECK_THROWS_AS(ecg::locate_qst(3740, x, 250.0), SegmentOutOfBounds);
}

TEST_CASE("symmetric template: qs distance is twice the rq distance") {
  const auto pw = make_planted(60.0, 13);
  const auto x = ecg::preprocess(pw.window);
  auto r = ecg::detect_r_peaks(x, pw.window.rate_hz);
  const auto f = ecg::locate_qst(r[r.size() / 2], x, pw.window.rate_hz, {},
                                 r[r.size() / 2 + 1]);
  const double rq = static_cast<double>(f.r_idx - f.q_idx);
  const double qs = static_cast<double>(f.s_idx - f.q_idx);
  CHECK(qs == doctest::Approx(2.0 * rq).epsilon(0.15));
}

TEST_CASE("triangle powers follow the area formula") {
  const auto pw = make_planted(60.0, 14);
  const auto x = ecg::preprocess(pw.window);
  auto r = ecg::detect_r_peaks(x, pw.window.rate_hz);
  const auto f = ecg::locate_qst(r[2], x, pw.window.rate_hz, {}, r[3]);
  const double rr_ms = (r[3] - r[2]) * 1000.0 / pw.window.rate_hz;
  const auto morph = ecg::beat_morphology(f, x, pw.window.rate_hz, rr_ms);
  CHECK(morph.r_power ==
        doctest::Approx(0.5 * morph.r_width_ms / 1000.0 * morph.r_prom).epsilon(1e-12));
  CHECK(morph.t_power ==
        doctest::Approx(0.5 * morph.t_width_ms / 1000.0 * morph.t_mag).epsilon(1e-12));
  CHECK(morph.bpm == doctest::Approx(60000.0 / rr_ms).epsilon(1e-12));

  // spot value: prominence 1 mV and width 40 ms give 0.02 mV s
  ecg::BeatMorphology spot;
  spot.r_width_ms = 40.0;
  spot.r_prom = 1.0;
  CHECK(0.5 * (spot.r_width_ms / 1000.0) * spot.r_prom == doctest::Approx(0.02));
}

TEST_CASE("constant 60 bpm synthetic: bpm mean near 60 with tiny spread") {
  const auto pw = make_planted(60.0, 15);
  const auto feats = ecg::window_ecg_features(pw.window);
  REQUIRE(feats.has_value());
  const auto& names = ecg::feature_names();
  const auto idx_of = [&](const std::string& n) {
    return static_cast<std::size_t>(
        std::find(names.begin(), names.end(), n) - names.begin());
  };
  CHECK(feats->values[idx_of("bpm_mean")] == doctest::Approx(60.0).epsilon(1.0 / 60.0));
  CHECK(feats->values[idx_of("bpm_std")] < 0.5);
}

TEST_CASE("identical repeated beats give near-zero stds") {
  const auto pw = make_planted(75.0, 16);
  const auto feats = ecg::window_ecg_features(pw.window);
  REQUIRE(feats.has_value());
  // Noiseless, modulation-free beats are identical up to sampling-grid
  // quantization: stds collapse toward zero.
  for (int field = 0; field < ecg::kMorphologyFields; ++field) {
    const double mean = feats->values[static_cast<std::size_t>(2 * field)];
    const double sd = feats->values[static_cast<std::size_t>(2 * field + 1)];
    CHECK(sd <= std::max(1e-6, 0.05 * std::fabs(mean)));
  }
}

TEST_CASE("amplitude scaling leaves indices fixed and scales magnitudes") {
  const auto pw = make_planted(60.0, 17);
  auto x = ecg::preprocess(pw.window);
  std::vector<double> x2(x);
  for (auto& v : x2) v *= 3.0;

  const auto r1 = ecg::detect_r_peaks(x, 250.0);
  const auto r2 = ecg::detect_r_peaks(x2, 250.0);
  CHECK(r1 == r2);

  const auto f1 = ecg::locate_qst(r1[2], x, 250.0, {}, r1[3]);
  const auto f2 = ecg::locate_qst(r2[2], x2, 250.0, {}, r2[3]);
  const double rr_ms = (r1[3] - r1[2]) * 4.0;
  const auto m1 = ecg::beat_morphology(f1, x, 250.0, rr_ms);
  const auto m2 = ecg::beat_morphology(f2, x2, 250.0, rr_ms);
  CHECK(m2.r_mag == doctest::Approx(3.0 * m1.r_mag).epsilon(1e-9));
  CHECK(m2.r_prom == doctest::Approx(3.0 * m1.r_prom).epsilon(1e-9));
  CHECK(m2.t_mag == doctest::Approx(3.0 * m1.t_mag).epsilon(1e-9));
  CHECK(m2.r_power == doctest::Approx(3.0 * m1.r_power).epsilon(1e-6));
  CHECK(m2.r_width_ms == doctest::Approx(m1.r_width_ms).epsilon(1e-9));
  CHECK(m2.qs_dist_ms == doctest::Approx(m1.qs_dist_ms).epsilon(1e-12));
  CHECK(m2.bpm == doctest::Approx(m1.bpm).epsilon(1e-12));
}

TEST_CASE("windows with fewer than three beats yield no instance") {
  synth::SynthConfig cfg;
  cfg.seed = 18;
  cfg.ecg_noise_mv = 0.0;
  synth::ActivitySpec act;
  act.duration_s = 16.0;
  act.hr_bpm = 8.0;  // two beats in the window
  act.hr_wander = 0.0;
  cfg.activities = {act};
  const auto s = synth::gen_session(cfg);
  const auto win = dsp::sliding_windows(s.session.ecg).front();
  CHECK(!ecg::window_ecg_features(win).has_value());
}

TEST_CASE("per-window r_mag means track a planted amplitude envelope") {
  synth::SynthConfig cfg;
  cfg.seed = 19;
  cfg.ecg_noise_mv = 0.002;
  cfg.am_freq_hz = 0.03;
  cfg.am_depth = 0.25;
  cfg.rsa_depth = 0.0;
  synth::ActivitySpec act;
  act.duration_s = 600.0;
  act.hr_bpm = 70.0;
  act.br_depth = 0.0;
  act.ve_depth = 0.0;
  cfg.activities = {act};
  const auto s = synth::gen_session(cfg);
  const auto feats = ecg::extract_stream_features(s.session.ecg);
  REQUIRE(feats.size() > 150);

  std::vector<double> series, envelope;
  for (const auto& f : feats) {
    series.push_back(f.values[0]);  // r_mag_mean
    const double t = static_cast<double>(f.t_center_ms) / 1000.0;
    envelope.push_back(std::sin(2.0 * M_PI * cfg.am_freq_hz * t));
  }
  const auto n = static_cast<double>(series.size());
  double ms = 0, me = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    ms += series[i];
    me += envelope[i];
  }
  ms /= n;
  me /= n;
  double num = 0, ds = 0, de = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    num += (series[i] - ms) * (envelope[i] - me);
    ds += (series[i] - ms) * (series[i] - ms);
    de += (envelope[i] - me) * (envelope[i] - me);
  }
  const double corr = num / std::sqrt(ds * de);
  CHECK(corr > 0.9);

  const auto pg = dsp::periodogram(series, 1.0 / 3.0);
  std::size_t best = 1;
  for (std::size_t k = 2; k < pg.power.size(); ++k)
    if (pg.power[k] > pg.power[best]) best = k;
  CHECK(pg.freq_hz[best] == doctest::Approx(cfg.am_freq_hz).epsilon(0.25));
}

TEST_CASE("feature emission matches the IMU window clock on clean data") {
  auto cfg = synth::default_config();
  cfg.seed = 20;
  for (auto& a : cfg.activities) a.duration_s = 45.0;
  const auto s = synth::gen_session(cfg);
  const auto ecg_feats = ecg::extract_stream_features(s.session.ecg);
  const auto n_windows = dsp::window_count(225.0);
  CHECK(ecg_feats.size() == n_windows);  // clean synth drops nothing
  for (std::size_t i = 1; i < ecg_feats.size(); ++i)
    CHECK(ecg_feats[i].t_center_ms - ecg_feats[i - 1].t_center_ms == 3000);
}

}  // TEST_SUITE
