#include "respira/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "respira/errors.hpp"

namespace respira::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::size_t window_count(double duration_s, double win_s, double step_s) {
  if (duration_s < win_s) return 0;
  return static_cast<std::size_t>(std::floor((duration_s - win_s) / step_s + 1e-9)) + 1;
}

std::vector<Window> sliding_windows(const SensorStream& stream, double win_s,
                                    double step_s) {
  if (stream.rate_hz <= 0 || stream.channels.empty())
    throw StreamTooShort("stream is empty or has no rate");
  const std::size_t n = stream.length();
  const auto win_len = static_cast<std::size_t>(std::llround(win_s * stream.rate_hz));
  const auto step_len = static_cast<std::size_t>(std::llround(step_s * stream.rate_hz));
  if (n < win_len)
    throw StreamTooShort("stream shorter than one window: " + std::to_string(n) +
                         " < " + std::to_string(win_len) + " samples");

  const std::size_t count = (n - win_len) / step_len + 1;
  std::vector<Window> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    Window window;
    window.rate_hz = stream.rate_hz;
    const std::size_t start = w * step_len;
    window.t_start_ms =
        stream.t0_ms + static_cast<std::int64_t>(std::llround(1000.0 * start / stream.rate_hz));
    window.t_center_ms =
        window.t_start_ms + static_cast<std::int64_t>(std::llround(500.0 * win_s));
    window.samples.reserve(stream.channels.size());
    for (const auto& ch : stream.channels)
      window.samples.emplace_back(ch.values.begin() + start,
                                  ch.values.begin() + start + win_len);
    out.push_back(std::move(window));
  }
  return out;
}

std::vector<double> level_clip(const std::vector<double>& x, double lo, double hi) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::min(hi, std::max(lo, x[i]));
  return y;
}

std::vector<double> median_filter(const std::vector<double>& x, int k) {
  if (k <= 0 || k % 2 == 0 || static_cast<std::size_t>(k) > x.size())
    throw BadKernel("median kernel must be odd and <= signal length");
  const int h = k / 2;
  const int n = static_cast<int>(x.size());
  std::vector<double> y(x.size());
  std::vector<double> buf(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    for (int j = -h; j <= h; ++j) {
      int idx = std::clamp(i + j, 0, n - 1);  // edge replication
      buf[static_cast<std::size_t>(j + h)] = x[static_cast<std::size_t>(idx)];
    }
    std::nth_element(buf.begin(), buf.begin() + h, buf.end());
    y[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(h)];
  }
  return y;
}

std::vector<double> detrend_linear(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  // Least-squares line over index i = 0..n-1.
  const double nx = static_cast<double>(n);
  const double mean_i = (nx - 1.0) / 2.0;
  double mean_x = 0.0;
  for (double v : x) mean_x += v;
  mean_x /= nx;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = static_cast<double>(i) - mean_i;
    sxy += di * (x[i] - mean_x);
    sxx += di * di;
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = x[i] - (mean_x + slope * (static_cast<double>(i) - mean_i));
  return y;
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
  if (order % 2 != 0) throw BadKernel("even Butterworth order expected");
  std::vector<Biquad> out;
  const double w0 = 2.0 * kPi * cutoff_hz / rate_hz;
  const double cw = std::cos(w0), sw = std::sin(w0);
  for (int k = 0; k < order / 2; ++k) {
    const double theta = (2.0 * k + 1.0) * kPi / (2.0 * order);
    const double q = 1.0 / (2.0 * std::sin(theta));
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s{};
    s.b0 = (1.0 - cw) / 2.0 / a0;
    s.b1 = (1.0 - cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    out.push_back(s);
  }
  return out;
}

std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double rate_hz) {
  if (order % 2 != 0) throw BadKernel("even Butterworth order expected");
  std::vector<Biquad> out;
  const double w0 = 2.0 * kPi * cutoff_hz / rate_hz;
  const double cw = std::cos(w0), sw = std::sin(w0);
  for (int k = 0; k < order / 2; ++k) {
    const double theta = (2.0 * k + 1.0) * kPi / (2.0 * order);
    const double q = 1.0 / (2.0 * std::sin(theta));
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s{};
    s.b0 = (1.0 + cw) / 2.0 / a0;
    s.b1 = -(1.0 + cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    out.push_back(s);
  }
  return out;
}

namespace {

// Steady-state DF2T state for a unit step input, scaled by x0 at run time.
// Seeding the filter this way makes constant inputs produce exactly their
// steady-state response from the first sample.
struct SectionZi {
  double z1, z2;
};

SectionZi steady_state(const Biquad& s) {
  const double h1 = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  SectionZi zi{};
  zi.z2 = s.b2 - s.a2 * h1;
  zi.z1 = s.b1 - s.a1 * h1 + zi.z2;
  return zi;
}

void run_sections(const std::vector<Biquad>& sections, std::vector<double>& x) {
  if (x.empty()) return;
  for (const auto& s : sections) {
    const SectionZi zi = steady_state(s);
    double z1 = zi.z1 * x.front();
    double z2 = zi.z2 * x.front();
    for (double& v : x) {
      const double y = s.b0 * v + z1;
      z1 = s.b1 * v - s.a1 * y + z2;
      z2 = s.b2 * v - s.a2 * y;
      v = y;
    }
  }
}

}  // namespace

std::vector<double> filtfilt(const std::vector<Biquad>& sections,
                             const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4 || sections.empty()) return x;
  const std::size_t pad = std::min<std::size_t>(n - 1, 250);

  // Odd reflection about both ends.
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  run_sections(sections, ext);
  std::reverse(ext.begin(), ext.end());
  run_sections(sections, ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::vector<double> bandpass(const std::vector<double>& x, double lo_hz,
                             double hi_hz, double rate_hz) {
  if (!(lo_hz >= 0.0) || !(lo_hz < hi_hz) || !(hi_hz < rate_hz / 2.0))
    throw BadBand("require 0 <= lo < hi < rate/2");
  std::vector<double> y = filtfilt(butterworth_lowpass(4, hi_hz, rate_hz), x);
  if (lo_hz > 0.0) y = filtfilt(butterworth_highpass(4, lo_hz, rate_hz), y);
  return y;
}

std::vector<double> teager_energy(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 3) throw BadKernel("teager energy needs >= 3 samples");
  std::vector<double> y(n);
  for (std::size_t i = 1; i + 1 < n; ++i) y[i] = x[i] * x[i] - x[i - 1] * x[i + 1];
  y[0] = y[1];
  y[n - 1] = y[n - 2];
  return y;
}

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

namespace {

using cplx = std::complex<double>;

void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

void bluestein(std::vector<cplx>& a, bool inverse);

void fft_any(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if ((n & (n - 1)) == 0) {
    fft_pow2(a, inverse);
    return;
  }
  // Smallest prime factor.
  std::size_t p = 0;
  for (std::size_t f = 2; f * f <= n; ++f) {
    if (n % f == 0) {
      p = f;
      break;
    }
  }
  if (p == 0 || p > 31) {
    bluestein(a, inverse);
    return;
  }
  const std::size_t m = n / p;
  // Decimation in time over p interleaved subsequences.
  std::vector<std::vector<cplx>> sub(p, std::vector<cplx>(m));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t r = 0; r < p; ++r) sub[r][j] = a[j * p + r];
  for (auto& s : sub) fft_any(s, inverse);
  const double sign = inverse ? 1.0 : -1.0;
  // Incremental twiddles: per subsequence r the factor advances by W_n^r
  // between consecutive output bins.
  std::vector<cplx> w(p), wstep(p);
  for (std::size_t r = 0; r < p; ++r) {
    const double ang = sign * 2.0 * kPi * static_cast<double>(r) / static_cast<double>(n);
    wstep[r] = cplx(std::cos(ang), std::sin(ang));
    w[r] = cplx(1.0, 0.0);
  }
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc(0.0);
    for (std::size_t r = 0; r < p; ++r) {
      acc += sub[r][k % m] * w[r];
      w[r] *= wstep[r];
    }
    a[k] = acc;
  }
}

void bluestein(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;

  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for large k.
    const std::size_t k2 = (k * k) % (2 * n);
    const double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> fa(m, cplx(0.0)), fb(m, cplx(0.0));
  for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * chirp[k];
  fb[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) fb[k] = fb[m - k] = std::conj(chirp[k]);
  fft_pow2(fa, false);
  fft_pow2(fb, false);
  for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
  fft_pow2(fa, true);
  for (std::size_t k = 0; k < n; ++k)
    a[k] = fa[k] * chirp[k] / static_cast<double>(m);
}

}  // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  fft_any(a, inverse);
}

Periodogram periodogram(const std::vector<double>& x, double rate_hz) {
  const std::size_t n = x.size();
  Periodogram pg;
  if (n == 0 || rate_hz <= 0) return pg;
  std::vector<cplx> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = cplx(x[i], 0.0);
  fft_any(a, false);
  const std::size_t half = n / 2;
  pg.power.resize(half + 1);
  pg.freq_hz.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    pg.power[k] = std::norm(a[k]) / static_cast<double>(n);
    pg.freq_hz[k] = rate_hz * static_cast<double>(k) / static_cast<double>(n);
  }
  return pg;
}

double band_power(const std::vector<double>& x, double lo_hz, double hi_hz,
                  double rate_hz) {
  if (!(lo_hz >= 0.0) || !(lo_hz < hi_hz)) throw BadBand("require 0 <= lo < hi");
  const Periodogram pg = periodogram(x, rate_hz);
  double acc = 0.0;
  for (std::size_t k = 0; k < pg.power.size(); ++k)
    if (pg.freq_hz[k] >= lo_hz && pg.freq_hz[k] < hi_hz) acc += pg.power[k];
  return acc;
}

double mean_crossing_rate(const std::vector<double>& x, double rate_hz) {
  const std::size_t n = x.size();
  if (n < 2 || rate_hz <= 0) return 0.0;
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::size_t crossings = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = x[i] - mean, b = x[i + 1] - mean;
    if ((a > 0 && b < 0) || (a < 0 && b > 0)) ++crossings;
  }
  const double duration_s = static_cast<double>(n) / rate_hz;
  return static_cast<double>(crossings) / duration_s;
}

}  // namespace respira::dsp
