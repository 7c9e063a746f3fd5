#include "respira/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "respira/errors.hpp"
#include "respira/rng.hpp"

namespace respira::reg {

namespace {

struct Grower {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const RfOptions& opt;
  Rng* rng;
  RfTree* tree;
  std::vector<double> yv = std::vector<double>(y.data(), y.data() + y.size());
  std::vector<double> unit_w = std::vector<double>(static_cast<std::size_t>(X.rows()), 1.0);
  std::vector<int> response_bin = std::vector<int>(static_cast<std::size_t>(X.rows()), 0);

  double node_mean(const std::vector<int>& rows) const {
    double acc = 0.0;
    for (int r : rows) acc += y[r];
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
  }

  std::vector<int> sample_candidates(int d, int mtry) {
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);
    if (mtry >= d) return all;
    rng->shuffle(all);
    all.resize(static_cast<std::size_t>(mtry));
    std::sort(all.begin(), all.end());
    return all;
  }

  // MSE-optimal threshold on one feature honoring the min-leaf constraint.
  bool best_threshold(const std::vector<int>& rows, int feature, double& threshold,
                      double& gain) const {
    std::vector<int> order(rows);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return X(a, feature) < X(b, feature); });
    const int n = static_cast<int>(order.size());
    std::vector<double> pre_y(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> pre_y2(static_cast<std::size_t>(n + 1), 0.0);
    for (int i = 0; i < n; ++i) {
      pre_y[static_cast<std::size_t>(i + 1)] = pre_y[static_cast<std::size_t>(i)] + y[order[static_cast<std::size_t>(i)]];
      pre_y2[static_cast<std::size_t>(i + 1)] =
          pre_y2[static_cast<std::size_t>(i)] +
          y[order[static_cast<std::size_t>(i)]] * y[order[static_cast<std::size_t>(i)]];
    }
    const double total_sse =
        pre_y2[static_cast<std::size_t>(n)] -
        pre_y[static_cast<std::size_t>(n)] * pre_y[static_cast<std::size_t>(n)] / n;

    double best = -1.0;
    for (int i = opt.min_leaf; i + opt.min_leaf <= n; ++i) {
      const double xa = X(order[static_cast<std::size_t>(i - 1)], feature);
      const double xb = X(order[static_cast<std::size_t>(i)], feature);
      if (xb <= xa) continue;
      const double sl = pre_y[static_cast<std::size_t>(i)];
      const double sl2 = pre_y2[static_cast<std::size_t>(i)];
      const double sse_l = sl2 - sl * sl / i;
      const double sr = pre_y[static_cast<std::size_t>(n)] - sl;
      const double sr2 = pre_y2[static_cast<std::size_t>(n)] - sl2;
      const double sse_r = sr2 - sr * sr / (n - i);
      const double g = total_sse - sse_l - sse_r;
      if (g > best + 1e-12) {
        best = g;
        threshold = 0.5 * (xa + xb);
      }
    }
    if (best <= 1e-12) return false;
    gain = best;
    return true;
  }

  int grow(std::vector<int> rows) {
    const int node_idx = static_cast<int>(tree->nodes.size());
    tree->nodes.push_back(RfNode{});
    tree->nodes[static_cast<std::size_t>(node_idx)].value = node_mean(rows);

    if (static_cast<int>(rows.size()) < 2 * opt.min_leaf) return node_idx;
    bool constant_y = true;
    for (int r : rows)
      if (y[r] != y[rows.front()]) {
        constant_y = false;
        break;
      }
    if (constant_y) return node_idx;

    const int d = static_cast<int>(X.cols());
    const int mtry = opt.mtry > 0 ? std::min(opt.mtry, d)
                                  : (d + 2) / 3;  // ceil(d/3)
    const auto candidates = sample_candidates(d, mtry);

    // quantile_bins returns per-rows-position ids; scatter to full index.
    const auto rbins = split::quantile_bins(yv, rows, opt.response_bins);
    for (std::size_t i = 0; i < rows.size(); ++i)
      response_bin[static_cast<std::size_t>(rows[i])] = rbins[i];

    const int feature = split::choose_predictor(X, rows, response_bin,
                                                opt.response_bins, unit_w, candidates,
                                                opt.select);
    if (feature < 0) return node_idx;

    double threshold = 0.0, gain = 0.0;
    if (!best_threshold(rows, feature, threshold, gain)) return node_idx;

    std::vector<int> lrows, rrows;
    for (int r : rows)
      (X(r, feature) < threshold ? lrows : rrows).push_back(r);
    if (static_cast<int>(lrows.size()) < opt.min_leaf ||
        static_cast<int>(rrows.size()) < opt.min_leaf)
      return node_idx;

    rows.clear();
    rows.shrink_to_fit();
    const int left = grow(std::move(lrows));
    const int right = grow(std::move(rrows));
    auto& node = tree->nodes[static_cast<std::size_t>(node_idx)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return node_idx;
  }
};

double tree_mse(const RfTree& tree, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (int r : rows) {
    const double e = tree.predict(X.row(r)) - y[r];
    acc += e * e;
  }
  return acc / static_cast<double>(rows.size());
}

}  // namespace

double RfTree::predict(const Eigen::RowVectorXd& x) const {
  int idx = 0;
  while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(idx)];
    idx = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(idx)].value;
}

double RfModel::predict(const Eigen::RowVectorXd& x) const {
  if (trees.empty()) throw UntrainedModel("random forest has no trees");
  const Eigen::RowVectorXd z = scaler.apply(x);
  double acc = 0.0;
  for (const auto& t : trees) acc += t.predict(z);
  return acc / static_cast<double>(trees.size());
}

RfModel fit_rf(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const RfOptions& opt) {
  const int n = static_cast<int>(X.rows());
  if (n < 20) throw TooFewSamples("fit_rf needs n >= 20");
  if (y.size() != n) throw DimensionMismatch("fit_rf: |y| != rows(X)");

  RfModel model;
  model.scaler = Standardizer::fit(X);
  const Eigen::MatrixXd Xs = model.scaler.apply(X);

  Rng root(opt.seed);
  for (int t = 0; t < opt.n_trees; ++t) {
    Rng tree_rng = root.split("tree/" + std::to_string(t));
    std::vector<bool> in_bag(static_cast<std::size_t>(n), false);
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int pick = static_cast<int>(tree_rng.below(static_cast<std::uint64_t>(n)));
      rows[static_cast<std::size_t>(i)] = pick;
      in_bag[static_cast<std::size_t>(pick)] = true;
    }
    RfTree tree;
    for (int i = 0; i < n; ++i)
      if (!in_bag[static_cast<std::size_t>(i)]) tree.oob.push_back(i);

    Grower grower{Xs, y, opt, &tree_rng, &tree};
    grower.grow(std::move(rows));
    model.trees.push_back(std::move(tree));
  }

  // Permutation importance on the out-of-bag samples, seeded per
  // (tree, feature) so results are reproducible.
  const int d = static_cast<int>(X.cols());
  model.oob_importance.assign(static_cast<std::size_t>(d), 0.0);
  std::vector<int> counted(static_cast<std::size_t>(d), 0);
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& tree = model.trees[t];
    if (tree.oob.size() < 2) continue;
    const double base = tree_mse(tree, Xs, y, tree.oob);
    for (int j = 0; j < d; ++j) {
      Rng perm_rng = root.split("perm/" + std::to_string(t) + "/" + std::to_string(j));
      std::vector<int> shuffled(tree.oob);
      perm_rng.shuffle(shuffled);
      double acc = 0.0;
      for (std::size_t i = 0; i < tree.oob.size(); ++i) {
        Eigen::RowVectorXd row = Xs.row(tree.oob[i]);
        row[j] = Xs(shuffled[i], j);
        const double e = tree.predict(row) - y[tree.oob[i]];
        acc += e * e;
      }
      const double permuted = acc / static_cast<double>(tree.oob.size());
      model.oob_importance[static_cast<std::size_t>(j)] += permuted - base;
      ++counted[static_cast<std::size_t>(j)];
    }
  }
  for (int j = 0; j < d; ++j) {
    if (counted[static_cast<std::size_t>(j)] > 0)
      model.oob_importance[static_cast<std::size_t>(j)] /=
          static_cast<double>(counted[static_cast<std::size_t>(j)]);
    model.oob_importance[static_cast<std::size_t>(j)] =
        std::max(0.0, model.oob_importance[static_cast<std::size_t>(j)]);
  }
  return model;
}

std::vector<double> rf_oob_importance(const RfModel& model) {
  if (model.trees.empty()) throw UntrainedModel("random forest has no trees");
  return model.oob_importance;
}

}  // namespace respira::reg
