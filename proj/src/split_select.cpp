#include "respira/split_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace respira::split {

namespace {

// Regularized incomplete gamma functions (series + continued fraction).
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a, term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi2_sf(double x, double dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0) return 1.0;
  const double a = dof / 2.0, half = x / 2.0;
  if (half < a + 1.0) return 1.0 - gamma_p_series(a, half);
  return gamma_q_contfrac(a, half);
}

namespace {

// Bin edges at the quartiles (or cfg bins) of the node subset; returns the
// bin id per row, or an empty vector when the predictor is constant.
std::vector<int> bin_rows(const Eigen::MatrixXd& X, int col,
                          const std::vector<int>& rows, int bins) {
  std::vector<double> vals(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    vals[i] = X(rows[i], col);
  std::vector<double> sorted(vals);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) return {};

  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) {
    const std::size_t pos = static_cast<std::size_t>(
        static_cast<double>(b) * static_cast<double>(sorted.size()) / bins);
    edges.push_back(sorted[std::min(pos, sorted.size() - 1)]);
  }
  std::vector<int> ids(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    int id = 0;
    for (double e : edges)
      if (vals[i] >= e) ++id;
    ids[i] = id;
  }
  return ids;
}

// Chi-square p-value of a weighted contingency table. Weighted counts are
// rescaled so the table total equals the node row count, which keeps the
// statistic on the usual scale when boosting reweights samples.
double table_pvalue(const std::vector<double>& table, int na, int nb,
                    double total, double n_rows) {
  if (total <= 0) return 1.0;
  const double scale = n_rows / total;
  std::vector<double> row_m(static_cast<std::size_t>(na), 0.0);
  std::vector<double> col_m(static_cast<std::size_t>(nb), 0.0);
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b) {
      const double v = table[static_cast<std::size_t>(a * nb + b)] * scale;
      row_m[static_cast<std::size_t>(a)] += v;
      col_m[static_cast<std::size_t>(b)] += v;
    }
  int na_eff = 0, nb_eff = 0;
  for (double v : row_m) na_eff += v > 0;
  for (double v : col_m) nb_eff += v > 0;
  const double dof = static_cast<double>((na_eff - 1) * (nb_eff - 1));
  if (dof <= 0) return 1.0;

  double stat = 0.0;
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b) {
      const double expected =
          row_m[static_cast<std::size_t>(a)] * col_m[static_cast<std::size_t>(b)] / n_rows;
      if (expected <= 0) continue;
      const double obs = table[static_cast<std::size_t>(a * nb + b)] * scale;
      stat += (obs - expected) * (obs - expected) / expected;
    }
  return chi2_sf(stat, dof);
}

}  // namespace

std::vector<int> quantile_bins(const std::vector<double>& y,
                               const std::vector<int>& rows, int bins) {
  std::vector<double> vals;
  vals.reserve(rows.size());
  for (int r : rows) vals.push_back(y[static_cast<std::size_t>(r)]);
  std::vector<double> sorted(vals);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) {
    const std::size_t pos = static_cast<std::size_t>(
        static_cast<double>(b) * static_cast<double>(sorted.size()) / bins);
    edges.push_back(sorted[std::min(pos, sorted.size() - 1)]);
  }
  std::vector<int> ids(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    int id = 0;
    for (double e : edges)
      if (vals[i] >= e) ++id;
    ids[i] = id;
  }
  return ids;
}

namespace {

struct Selection {
  int best = -1;
  double best_p = 1.0;
  std::vector<int> tied;
};

Selection select_impl(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                      const std::vector<int>& response_bin, int n_response_bins,
                      const std::vector<double>& w,
                      const std::vector<int>& candidates,
                      const SelectOptions& opt);

}  // namespace

int choose_predictor(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                     const std::vector<int>& response_bin, int n_response_bins,
                     const std::vector<double>& w,
                     const std::vector<int>& candidates,
                     const SelectOptions& opt) {
  return select_impl(X, rows, response_bin, n_response_bins, w, candidates, opt).best;
}

std::vector<int> choose_predictor_ties(const Eigen::MatrixXd& X,
                                       const std::vector<int>& rows,
                                       const std::vector<int>& response_bin,
                                       int n_response_bins,
                                       const std::vector<double>& w,
                                       const std::vector<int>& candidates,
                                       const SelectOptions& opt) {
  return select_impl(X, rows, response_bin, n_response_bins, w, candidates, opt).tied;
}

namespace {

Selection select_impl(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                      const std::vector<int>& response_bin, int n_response_bins,
                      const std::vector<double>& w,
                      const std::vector<int>& candidates,
                      const SelectOptions& opt) {
  Selection out;
  const double n_rows = static_cast<double>(rows.size());
  if (rows.empty() || candidates.empty()) return out;

  double total_w = 0.0;
  for (int r : rows) total_w += w[static_cast<std::size_t>(r)];

  struct Single {
    int feature;
    double pvalue;
    std::vector<int> bins;
  };
  std::vector<Single> singles;

  const int nb = n_response_bins;
  for (int j : candidates) {
    auto bins = bin_rows(X, j, rows, opt.predictor_bins);
    if (bins.empty()) continue;  // constant predictor
    std::vector<double> table(static_cast<std::size_t>(opt.predictor_bins * nb), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int rb = response_bin[static_cast<std::size_t>(rows[i])];
      table[static_cast<std::size_t>(bins[i] * nb + rb)] +=
          w[static_cast<std::size_t>(rows[i])];
    }
    singles.push_back({j, table_pvalue(table, opt.predictor_bins, nb, total_w, n_rows),
                       std::move(bins)});
  }
  if (singles.empty()) return out;

  std::stable_sort(singles.begin(), singles.end(), [](const auto& a, const auto& b) {
    return a.pvalue != b.pvalue ? a.pvalue < b.pvalue : a.feature < b.feature;
  });

  int best_feature = singles.front().feature;
  double best_p = singles.front().pvalue;

  // Interaction tests on the joint quartile grid among the strongest
  // single candidates.
  const std::size_t k = std::min<std::size_t>(singles.size(),
                                              static_cast<std::size_t>(opt.top_pairs));
  const int na = opt.predictor_bins * opt.predictor_bins;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      std::vector<double> table(static_cast<std::size_t>(na * nb), 0.0);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const int cell = singles[a].bins[i] * opt.predictor_bins + singles[b].bins[i];
        const int rb = response_bin[static_cast<std::size_t>(rows[i])];
        table[static_cast<std::size_t>(cell * nb + rb)] +=
            w[static_cast<std::size_t>(rows[i])];
      }
      const double p = table_pvalue(table, na, nb, total_w, n_rows);
      if (p < best_p) {
        best_p = p;
        // Attribute the pair's evidence to its stronger member.
        best_feature = singles[a].pvalue <= singles[b].pvalue ? singles[a].feature
                                                              : singles[b].feature;
      }
    }
  }
  out.best = best_feature;
  out.best_p = best_p;
  for (const auto& sgl : singles)
    if (sgl.pvalue <= best_p + 1e-12) out.tied.push_back(sgl.feature);
  if (out.tied.empty()) out.tied.push_back(best_feature);
  std::sort(out.tied.begin(), out.tied.end());
  return out;
}

}  // namespace

}  // namespace respira::split
