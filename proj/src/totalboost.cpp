#include "respira/totalboost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>
#include <cstdio>
#include <cstdlib>

#include "respira/errors.hpp"
#include "respira/linprog.hpp"

namespace respira::tboost {

namespace {

double gini(const std::vector<double>& class_w, double total) {
  if (total <= 0) return 0.0;
  double acc = 0.0;
  for (double w : class_w) acc += (w / total) * (w / total);
  return 1.0 - acc;
}

struct SplitCandidate {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

// Best Gini threshold on the chi-square-chosen predictor. Zero-gain splits
// are allowed when the node is impure (interaction structure such as XOR
// needs them to make progress).
SplitCandidate node_split(const Eigen::MatrixXd& X, const std::vector<int>& y,
                          const std::vector<double>& w, int n_classes,
                          const std::vector<int>& rows,
                          const split::SelectOptions& sel) {
  SplitCandidate out;
  if (rows.size() < 2) return out;

  std::vector<double> class_w(static_cast<std::size_t>(n_classes), 0.0);
  double total = 0.0;
  for (int r : rows) {
    class_w[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])] +=
        w[static_cast<std::size_t>(r)];
    total += w[static_cast<std::size_t>(r)];
  }
  const double parent_impurity = gini(class_w, total);
  bool pure = true;
  int first = y[static_cast<std::size_t>(rows.front())];
  for (int r : rows)
    if (y[static_cast<std::size_t>(r)] != first) {
      pure = false;
      break;
    }
  if (pure) return out;

  std::vector<int> candidates(static_cast<std::size_t>(X.cols()));
  for (int j = 0; j < X.cols(); ++j) candidates[static_cast<std::size_t>(j)] = j;
  std::vector<int> ybin(y.begin(), y.end());
  const auto tied =
      split::choose_predictor_ties(X, rows, ybin, n_classes, w, candidates, sel);
  if (tied.empty()) return out;

  // The chi-square test ranks dependence but saturates on separated data;
  // among tied predictors pick the one whose best threshold has the widest
  // margin relative to the node's value range, which is what generalizes.
  double best_gain = -1.0, best_rel_gap = -1.0;
  for (const int feature : tied) {
    std::vector<int> order(rows);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return X(a, feature) < X(b, feature);
    });
    const double span = X(order.back(), feature) - X(order.front(), feature);
    if (span <= 0.0) continue;

    std::vector<double> left_w(static_cast<std::size_t>(n_classes), 0.0);
    double left_total = 0.0;
    double f_gain = -1.0, f_threshold = 0.0, f_width = -1.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const int r = order[i];
      left_w[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])] +=
          w[static_cast<std::size_t>(r)];
      left_total += w[static_cast<std::size_t>(r)];
      const double xa = X(order[i], feature), xb = X(order[i + 1], feature);
      if (xb <= xa) continue;
      std::vector<double> right_w(static_cast<std::size_t>(n_classes), 0.0);
      for (int c = 0; c < n_classes; ++c)
        right_w[static_cast<std::size_t>(c)] =
            class_w[static_cast<std::size_t>(c)] - left_w[static_cast<std::size_t>(c)];
      const double right_total = total - left_total;
      const double gain = total * parent_impurity -
                          left_total * gini(left_w, left_total) -
                          right_total * gini(right_w, right_total);
      const double rel_tol = 1e-12 * std::max(1.0, std::fabs(gain));
      if (gain > f_gain + rel_tol ||
          (gain > f_gain - rel_tol && xb - xa > f_width)) {
        f_gain = gain;
        f_threshold = 0.5 * (xa + xb);
        f_width = xb - xa;
      }
    }
    if (f_gain < 0) continue;
    const double rel_gap = f_width / span;
    const double rel_tol = 1e-12 * std::max(1.0, std::fabs(f_gain));
    if (f_gain > best_gain + rel_tol ||
        (f_gain > best_gain - rel_tol && rel_gap > best_rel_gap)) {
      best_gain = f_gain;
      best_rel_gap = rel_gap;
      out.valid = true;
      out.feature = feature;
      out.threshold = f_threshold;
      out.gain = f_gain;
    }
  }
  return out;
}

std::vector<double> leaf_scores(const std::vector<int>& y, const std::vector<double>& w,
                                int n_classes, const std::vector<int>& rows) {
  std::vector<double> scores(static_cast<std::size_t>(n_classes), 0.0);
  double total = 0.0;
  for (int r : rows) {
    scores[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])] +=
        w[static_cast<std::size_t>(r)];
    total += w[static_cast<std::size_t>(r)];
  }
  if (total > 0) {
    for (double& s : scores) s /= total;
  } else if (!rows.empty()) {
    // zero-weight node: fall back to plain counts
    for (int r : rows)
      scores[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])] += 1.0;
    for (double& s : scores) s /= static_cast<double>(rows.size());
  } else {
    for (double& s : scores) s = 1.0 / n_classes;
  }
  return scores;
}

}  // namespace

const std::vector<double>& ShallowTree::scores_at(const Eigen::RowVectorXd& x) const {
  int idx = 0;
  while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(idx)];
    idx = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(idx)].scores;
}

int ShallowTree::predict_class(const Eigen::RowVectorXd& x) const {
  const auto& s = scores_at(x);
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

ShallowTree train_tree(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       const std::vector<double>& weights, int n_classes,
                       const TreeOptions& opt) {
  if (X.rows() == 0 || y.size() != static_cast<std::size_t>(X.rows()) ||
      weights.size() != y.size())
    throw DegenerateData("train_tree: inconsistent inputs");

  ShallowTree tree;
  struct Pending {
    int node;
    std::vector<int> rows;
    SplitCandidate cand;
  };

  std::vector<int> all(static_cast<std::size_t>(X.rows()));
  for (int i = 0; i < X.rows(); ++i) all[static_cast<std::size_t>(i)] = i;

  tree.nodes.push_back(TreeNode{});
  tree.nodes[0].scores = leaf_scores(y, weights, n_classes, all);

  std::vector<Pending> pending;
  Pending root{0, std::move(all), {}};
  root.cand = node_split(X, y, weights, n_classes, root.rows, opt.select);
  pending.push_back(std::move(root));

  while (tree.n_splits < opt.max_splits) {
    // Best-first: largest Gini gain among splittable pending leaves.
    int best = -1;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (!pending[i].cand.valid) continue;
      if (best < 0 || pending[i].cand.gain > pending[static_cast<std::size_t>(best)].cand.gain)
        best = static_cast<int>(i);
    }
    if (best < 0) break;

    Pending chosen = std::move(pending[static_cast<std::size_t>(best)]);
    pending.erase(pending.begin() + best);

    std::vector<int> lrows, rrows;
    for (int r : chosen.rows) {
      if (X(r, chosen.cand.feature) < chosen.cand.threshold)
        lrows.push_back(r);
      else
        rrows.push_back(r);
    }
    if (lrows.empty() || rrows.empty()) continue;  // degenerate, drop

    auto& node = tree.nodes[static_cast<std::size_t>(chosen.node)];
    node.feature = chosen.cand.feature;
    node.threshold = chosen.cand.threshold;
    node.scores.clear();
    node.left = static_cast<int>(tree.nodes.size());
    node.right = node.left + 1;
    ++tree.n_splits;

    TreeNode left, right;
    left.scores = leaf_scores(y, weights, n_classes, lrows);
    right.scores = leaf_scores(y, weights, n_classes, rrows);
    tree.nodes.push_back(std::move(left));
    tree.nodes.push_back(std::move(right));

    const int lidx = tree.nodes[static_cast<std::size_t>(chosen.node)].left;
    const int ridx = tree.nodes[static_cast<std::size_t>(chosen.node)].right;
    if (tree.n_splits < opt.max_splits) {
      Pending pl{lidx, std::move(lrows), {}};
      pl.cand = node_split(X, y, weights, n_classes, pl.rows, opt.select);
      Pending pr{ridx, std::move(rrows), {}};
      pr.cand = node_split(X, y, weights, n_classes, pr.rows, opt.select);
      pending.push_back(std::move(pl));
      pending.push_back(std::move(pr));
    }
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Totally corrective update
// ---------------------------------------------------------------------------

namespace {

struct Projector {
  // Dual coordinate ascent on the entropy-projection dual: one multiplier
  // per half-space, confidence-rated votes in [-1, 1].
  std::vector<std::vector<double>> u;
  std::vector<double> lambda;
  std::vector<double> d;  // current projected distribution

  void reset(std::size_t n) {
    d.assign(n, 1.0 / static_cast<double>(n));
    lambda.clear();
    u.clear();
  }

  void add_constraint(std::vector<double> votes) {
    u.push_back(std::move(votes));
    lambda.push_back(0.0);
  }

  double edge(std::size_t q) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) acc += d[i] * u[q][i];
    return acc;
  }

  // Tilted edge sum_i d_i e^{-delta u_i} (u_i - c) (unnormalized sign
  // carrier for the one-dimensional dual update).
  double tilted_gap(std::size_t q, double delta, double cap) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
      acc += d[i] * std::exp(-delta * u[q][i]) * (u[q][i] - cap);
    return acc;
  }

  void apply(std::size_t q, double delta) {
    lambda[q] += delta;
    double z = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] *= std::exp(-delta * u[q][i]);
      z += d[i];
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] /= z;
  }

  // Returns false when the constraint set is provably infeasible.
  bool project(double cap, double tol, int max_passes) {
    const std::size_t n = d.size();
    const std::size_t t = u.size();
    if (t == 0) return true;
    if (cap <= -1.0) return false;  // edges live in [-1, 1]

    for (int pass = 0; pass < max_passes; ++pass) {
      double max_violation = 0.0;
      for (std::size_t q = 0; q < t; ++q) {
        double e = 0.0, u_min = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          e += d[i] * u[q][i];
          u_min = std::min(u_min, u[q][i]);
        }
        max_violation = std::max(max_violation, e - cap);
        const bool violated = e > cap + tol;
        if (!violated && lambda[q] <= 0.0) continue;
        if (violated && u_min >= cap) return false;  // untiltable below cap

        const double delta = solve_delta(q, cap, -lambda[q]);
        if (delta != 0.0) apply(q, delta);
      }
      if (max_violation <= tol) return true;
    }
    double worst = 0.0;
    for (std::size_t q = 0; q < t; ++q) worst = std::max(worst, edge(q) - cap);
    return worst <= 1e-7;
  }

  // Root of the tilted gap in delta, clamped below at delta_lo = -lambda_q
  // so the multiplier stays nonnegative. The sign of the gap follows the
  // normalized tilted edge, which is non-increasing in delta, so an
  // expanding-bracket bisection is safe.
  double solve_delta(std::size_t q, double cap, double delta_lo) const {
    if (tilted_gap(q, delta_lo, cap) <= 0.0) return delta_lo;
    double lo = delta_lo;
    double hi = std::max(1.0, delta_lo + 1.0);
    for (int guard = 0; guard < 60 && tilted_gap(q, hi, cap) > 0.0; ++guard)
      hi = delta_lo + 2.0 * (hi - delta_lo);
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (tilted_gap(q, mid, cap) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

struct MarginLp {
  double margin = 0.0;
  std::vector<double> weights;
  bool ok = false;
};

// Max-min margin over convex combinations of the hypotheses, solved through
// the edge-game dual (rows = hypotheses, so the tableau stays small); the
// hypothesis weights are the duals of the edge constraints.
MarginLp margin_lp(const std::vector<std::vector<double>>& u) {
  MarginLp out;
  const int t = static_cast<int>(u.size());
  if (t == 0) return out;
  const int n = static_cast<int>(u[0].size());
  const int rows = t + 1;
  const int cols = n + 2 + t;  // d, gamma+, gamma-, slacks
  std::vector<double> A(static_cast<std::size_t>(rows * cols), 0.0);
  std::vector<double> b(static_cast<std::size_t>(rows), 0.0);
  std::vector<double> c(static_cast<std::size_t>(cols), 0.0);

  for (int q = 0; q < t; ++q) {
    for (int i = 0; i < n; ++i)
      A[static_cast<std::size_t>(q * cols + i)] =
          u[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)];
    A[static_cast<std::size_t>(q * cols + n)] = -1.0;      // gamma+
    A[static_cast<std::size_t>(q * cols + n + 1)] = 1.0;   // gamma-
    A[static_cast<std::size_t>(q * cols + n + 2 + q)] = 1.0;  // slack
  }
  for (int i = 0; i < n; ++i) A[static_cast<std::size_t>(t * cols + i)] = 1.0;
  b[static_cast<std::size_t>(t)] = 1.0;
  c[static_cast<std::size_t>(n)] = 1.0;
  c[static_cast<std::size_t>(n + 1)] = -1.0;

  const auto sol = lp::solve(A, b, c, rows, cols);
  if (sol.status != lp::Status::optimal) {
    if (const char* dump = std::getenv("RESPIRA_LP_DEBUG")) {
      FILE* f = std::fopen(dump, "w");
      std::fprintf(f, "status %d rows %d\n", (int)sol.status, t);
      for (const auto& row : u) {
        for (double v : row) std::fprintf(f, "%.17g ", v);
        std::fprintf(f, "\n");
      }
      std::fclose(f);
    }
    return out;
  }

  out.ok = true;
  out.margin = sol.objective;
  out.weights.assign(static_cast<std::size_t>(t), 0.0);
  double sum = 0.0;
  for (int q = 0; q < t; ++q) {
    const double w = std::max(0.0, -sol.dual[static_cast<std::size_t>(q)]);
    out.weights[static_cast<std::size_t>(q)] = w;
    sum += w;
  }
  if (sum > 1e-12) {
    for (double& w : out.weights) w /= sum;
  } else {
    for (double& w : out.weights) w = 1.0 / static_cast<double>(t);
  }
  return out;
}

}  // namespace

ProjectionResult entropy_project(const std::vector<std::vector<double>>& u,
                                 double cap, double tol, int max_passes) {
  ProjectionResult res;
  if (u.empty()) return res;
  Projector proj;
  proj.reset(u[0].size());
  for (const auto& row : u) proj.add_constraint(row);
  res.feasible = proj.project(cap, tol, max_passes);
  res.d = proj.d;
  return res;
}

TotalBoostEnsemble totalboost_train(const Eigen::MatrixXd& X,
                                    const std::vector<std::string>& y,
                                    const TrainOptions& opt, TrainDiagnostics* diag) {
  const int n = static_cast<int>(X.rows());
  if (static_cast<std::size_t>(n) != y.size())
    throw InsufficientData("totalboost: label count mismatch");

  std::map<std::string, int> counts;
  for (const auto& label : y) ++counts[label];
  if (counts.size() < 2) throw InsufficientData("totalboost: need >= 2 classes");
  for (const auto& [label, cnt] : counts)
    if (cnt < 2)
      throw InsufficientData("totalboost: class '" + label + "' has " +
                             std::to_string(cnt) + " samples");

  TotalBoostEnsemble ens;
  for (const auto& [label, cnt] : counts) ens.classes.push_back(label);
  const int m_classes = static_cast<int>(ens.classes.size());

  // One binary TotalBoost run per unordered class pair. Pairwise duels put
  // the learned boundary between two classes (instead of boxing one class
  // against the union of the rest) and their summed scores span
  // [-(M-1), M-1], which gives the softmax posterior real dynamic range.
  for (int ca = 0; ca < m_classes; ++ca) {
    for (int cb = ca + 1; cb < m_classes; ++cb) {
      std::vector<int> rows;
      std::vector<int> y01;  // 1 = class ca, 0 = class cb
      for (int i = 0; i < n; ++i) {
        const auto& label = y[static_cast<std::size_t>(i)];
        if (label == ens.classes[static_cast<std::size_t>(ca)]) {
          rows.push_back(i);
          y01.push_back(1);
        } else if (label == ens.classes[static_cast<std::size_t>(cb)]) {
          rows.push_back(i);
          y01.push_back(0);
        }
      }
      const int pair_n = static_cast<int>(rows.size());
      Eigen::MatrixXd Xp(pair_n, X.cols());
      for (int i = 0; i < pair_n; ++i) Xp.row(i) = X.row(rows[static_cast<std::size_t>(i)]);

      ClassRunDiag run_diag;
      run_diag.class_label = ens.classes[static_cast<std::size_t>(ca)] + "|" +
                             ens.classes[static_cast<std::size_t>(cb)];

      Projector proj;
      proj.reset(static_cast<std::size_t>(pair_n));
      std::vector<ShallowTree> run_trees;
      double gamma_hat = std::numeric_limits<double>::infinity();

      for (int iter = 0; iter < opt.max_iter; ++iter) {
        ShallowTree tree = train_tree(Xp, y01, proj.d, 2, opt.tree);

        // Confidence-rated votes: h(x) = 2 p(class a | leaf) - 1.
        std::vector<double> votes(static_cast<std::size_t>(pair_n));
        double edge = 0.0;
        for (int i = 0; i < pair_n; ++i) {
          const auto& sc = tree.scores_at(Xp.row(i));
          const double h = sc.size() == 2 ? 2.0 * sc[1] - 1.0 : 0.0;
          const double v = y01[static_cast<std::size_t>(i)] == 1 ? h : -h;
          votes[static_cast<std::size_t>(i)] = v;
          edge += proj.d[static_cast<std::size_t>(i)] * v;
        }

        run_trees.push_back(std::move(tree));
        proj.add_constraint(std::move(votes));
        gamma_hat = std::min(gamma_hat, edge);

        if (edge < opt.margin_precision) {
          run_diag.stopped_weak = true;
          break;
        }

        const bool feasible = proj.project(gamma_hat - opt.margin_precision,
                                           opt.projection_tol,
                                           opt.max_projection_passes);

        if (opt.track_diagnostics) {
          IterationDiag idg;
          idg.edge = edge;
          idg.gamma_hat = gamma_hat;
          idg.distribution = proj.d;
          for (std::size_t q = 0; q < proj.u.size(); ++q)
            idg.constraint_edges.push_back(proj.edge(q));
          const auto lp_now = margin_lp(proj.u);
          idg.margin = lp_now.ok ? lp_now.margin : 0.0;
          run_diag.iterations.push_back(std::move(idg));
        }

        if (!feasible) {
          run_diag.stopped_infeasible = true;
          break;
        }
      }

      // Final hypothesis weights from the margin-maximizing LP.
      const auto lp_sol = margin_lp(proj.u);
      std::vector<double> weights =
          lp_sol.ok ? lp_sol.weights
                    : std::vector<double>(run_trees.size(),
                                          1.0 / static_cast<double>(run_trees.size()));

      // Lift the duel trees into the M-class layout. Leaves carry the
      // confidence-rated vote 2 p(ca) - 1 for ca and its negation for cb.
      for (std::size_t t = 0; t < run_trees.size(); ++t) {
        ShallowTree lifted = std::move(run_trees[t]);
        for (auto& node : lifted.nodes) {
          if (node.feature >= 0) continue;
          const double vote =
              node.scores.size() == 2 ? 2.0 * node.scores[1] - 1.0 : 0.0;
          node.scores.assign(static_cast<std::size_t>(m_classes), 0.0);
          node.scores[static_cast<std::size_t>(ca)] = vote;
          node.scores[static_cast<std::size_t>(cb)] = -vote;
        }
        ens.trees.push_back(std::move(lifted));
        ens.tree_weights.push_back(weights[t]);
      }

      if (diag) diag->runs.push_back(std::move(run_diag));
    }
  }
  return ens;
}

int ContextPosterior::argmax() const {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

ContextPosterior predict_posterior(const TotalBoostEnsemble& ens,
                                   const Eigen::RowVectorXd& x) {
  if (ens.trees.empty() || ens.classes.empty())
    throw UntrainedModel("predict_posterior on an untrained ensemble");
  const std::size_t m = ens.classes.size();
  std::vector<double> s(m, 0.0);
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    const auto& scores = ens.trees[t].scores_at(x);
    const double w = ens.tree_weights[t];
    for (std::size_t c = 0; c < m && c < scores.size(); ++c) s[c] += w * scores[c];
  }
  // Softmax over the aggregated duel scores (temperature 1).
  ContextPosterior post;
  post.p.assign(m, 0.0);
  const double smax = *std::max_element(s.begin(), s.end());
  double denom = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    post.p[c] = std::exp(s[c] - smax);
    denom += post.p[c];
  }
  for (auto& v : post.p) v /= denom;
  return post;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string to_json(const TotalBoostEnsemble& ens) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["classes"] = ens.classes;
  j["tree_weights"] = ens.tree_weights;
  for (const auto& tree : ens.trees) {
    nlohmann::json jt;
    jt["n_splits"] = tree.n_splits;
    for (const auto& node : tree.nodes)
      jt["nodes"].push_back({{"feature", node.feature},
                             {"threshold", node.threshold},
                             {"left", node.left},
                             {"right", node.right},
                             {"scores", node.scores}});
    j["trees"].push_back(std::move(jt));
  }
  return j.dump();
}

TotalBoostEnsemble ensemble_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TotalBoostEnsemble ens;
  ens.classes = j.at("classes").get<std::vector<std::string>>();
  ens.tree_weights = j.at("tree_weights").get<std::vector<double>>();
  for (const auto& jt : j.value("trees", nlohmann::json::array())) {
    ShallowTree tree;
    tree.n_splits = jt.value("n_splits", 0);
    for (const auto& jn : jt.at("nodes")) {
      TreeNode node;
      node.feature = jn.at("feature").get<int>();
      node.threshold = jn.at("threshold").get<double>();
      node.left = jn.at("left").get<int>();
      node.right = jn.at("right").get<int>();
      node.scores = jn.at("scores").get<std::vector<double>>();
      tree.nodes.push_back(std::move(node));
    }
    ens.trees.push_back(std::move(tree));
  }
  return ens;
}

}  // namespace respira::tboost
