#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "respira/types.hpp"

namespace respira::dsp {

// One analysis window cut from a SensorStream. Channels keep the stream's
// order; length = round(win_s * rate_hz).
struct Window {
  std::vector<std::vector<double>> samples;  // per channel
  std::int64_t t_start_ms = 0;
  std::int64_t t_center_ms = 0;
  double rate_hz = 0.0;

  std::size_t length() const {
    return samples.empty() ? 0 : samples.front().size();
  }
};

// Cuts overlapping windows, one every step_s seconds (80% overlap at the
// 15 s / 3 s defaults). Throws StreamTooShort if the stream cannot fit one
// full window.
std::vector<Window> sliding_windows(const SensorStream& stream,
                                    double win_s = 15.0, double step_s = 3.0);

// Number of windows a duration_s-long stream yields; 0 when too short.
std::size_t window_count(double duration_s, double win_s = 15.0,
                         double step_s = 3.0);

std::vector<double> level_clip(const std::vector<double>& x, double lo,
                               double hi);

// Odd-kernel running median with edge replication. Throws BadKernel.
std::vector<double> median_filter(const std::vector<double>& x, int k);

// Subtracts the least-squares line; result has zero mean and zero slope.
std::vector<double> detrend_linear(const std::vector<double>& x);

// Zero-phase (forward-backward) 4th-order Butterworth band-pass built as a
// high-pass/low-pass cascade. lo_hz == 0 degenerates to a pure low-pass.
// Throws BadBand unless 0 <= lo < hi < rate/2.
std::vector<double> bandpass(const std::vector<double>& x, double lo_hz,
                             double hi_hz, double rate_hz);

// y[i] = x[i]^2 - x[i-1]*x[i+1] on the interior; edge samples replicate
// their interior neighbour so the output length matches the input.
std::vector<double> teager_energy(const std::vector<double>& x);

// Periodogram |X_k|^2 / n for k = 0..n/2 with the matching bin frequencies.
struct Periodogram {
  std::vector<double> power;
  std::vector<double> freq_hz;
};
Periodogram periodogram(const std::vector<double>& x, double rate_hz);

// Sum of periodogram bins with lo_hz <= f < hi_hz. Throws BadBand.
double band_power(const std::vector<double>& x, double lo_hz, double hi_hz,
                  double rate_hz);

// Crossings of the window mean per second.
double mean_crossing_rate(const std::vector<double>& x, double rate_hz);

// In-place DFT for any length (mixed-radix with Bluestein fallback).
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

// Single-section biquad cascade state, exposed for reuse by tests.
struct Biquad {
  double b0, b1, b2, a1, a2;  // a0 normalized to 1
};
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz,
                                        double rate_hz);
std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz,
                                         double rate_hz);
// Forward-backward application with odd reflection padding.
std::vector<double> filtfilt(const std::vector<Biquad>& sections,
                             const std::vector<double>& x);

}  // namespace respira::dsp
