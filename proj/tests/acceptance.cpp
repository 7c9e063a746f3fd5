// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// anything fails. Heavy end-to-end runs on planted-truth synthetic data.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "respira/biomarker.hpp"
#include "respira/data_io.hpp"
#include "respira/dsp.hpp"
#include "respira/ecg_features.hpp"
#include "respira/errors.hpp"
#include "respira/glm.hpp"
#include "respira/gpr.hpp"
#include "respira/imu_features.hpp"
#include "respira/nca.hpp"
#include "respira/pipeline.hpp"
#include "respira/rng.hpp"
#include "respira/svr.hpp"
#include "respira/synth.hpp"
#include "respira/totalboost.hpp"

using namespace respira;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
  std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<WindowedInstance> instances_of(const synth::SynthSession& s) {
  const auto imu_f = imu::extract_stream_features(s.session.imu);
  const auto ecg_f = ecg::extract_stream_features(s.session.ecg);
  const auto resp = io::window_response(s.session.resp, 15.0, 3.0, 0,
                                        s.session.imu.end_ms());
  return pipeline::assemble_instances(imu_f, ecg_f, resp,
                                      s.session.activity_intervals);
}

// ---------------------------------------------------------------------------
// 1. Fiducial recovery
// ---------------------------------------------------------------------------

void criterion_1() {
  synth::SynthConfig cfg;
  cfg.seed = 101;
  cfg.ecg_noise_mv = 0.003;
  const double hrs[4] = {60.0, 100.0, 140.0, 180.0};
  for (double hr : hrs) {
    synth::ActivitySpec a;
    a.name = "hr" + std::to_string(static_cast<int>(hr));
    a.duration_s = 225.0;  // 4 x 225 s = 15 minutes
    a.hr_bpm = hr;
    a.hr_wander = 2.0;
    a.br_depth = 0.0;
    a.ve_depth = 0.0;
    cfg.activities.push_back(a);
  }
  const auto s = synth::gen_session(cfg);

  const double t_start = now_s();
  const auto wins = dsp::sliding_windows(s.session.ecg);
  struct Match {
    bool found = false;
    double err_ms = 1e9;
    double q_err = 1e9, s_err = 1e9, t_err = 1e9;
    bool qst = false;
  };
  std::map<long long, Match> matches;  // keyed by rounded planted r_ms
  const double sample_ms = 1000.0 / s.session.ecg.rate_hz;

  for (const auto& win : wins) {
    std::vector<double> x;
    std::vector<int> r;
    try {
      x = ecg::preprocess(win);
      r = ecg::detect_r_peaks(x, win.rate_hz);
      r = ecg::correct_missed_peaks(r, x, win.rate_hz);
    } catch (const Error&) {
      continue;
    }
    const double w0 = static_cast<double>(win.t_start_ms);
    const double w1 = w0 + 15000.0;
    for (const auto& beat : s.truth.beats) {
      if (beat.r_ms < w0 + 600.0 || beat.r_ms > w1 - 600.0) continue;
      auto& m = matches[static_cast<long long>(std::llround(beat.r_ms))];
      // nearest detection
      int best = -1;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double det_ms = w0 + r[i] * sample_ms;
        if (best < 0 ||
            std::fabs(det_ms - beat.r_ms) < std::fabs(w0 + r[best] * sample_ms - beat.r_ms))
          best = static_cast<int>(i);
      }
      if (best < 0) continue;
      const double err = std::fabs(w0 + r[best] * sample_ms - beat.r_ms);
      if (err < m.err_ms) m.err_ms = err;
      if (err <= 20.0) {
        m.found = true;
        if (static_cast<std::size_t>(best) + 1 < r.size()) {
          try {
            const auto f = ecg::locate_qst(r[best], x, win.rate_hz, {},
                                           r[static_cast<std::size_t>(best) + 1]);
            const double qe = std::fabs(w0 + f.q_idx * sample_ms - beat.q_ms);
            const double se = std::fabs(w0 + f.s_idx * sample_ms - beat.s_ms);
            const double te = std::fabs(w0 + f.t_idx * sample_ms - beat.t_ms);
            if (!m.qst || qe + se + te < m.q_err + m.s_err + m.t_err) {
              m.q_err = qe;
              m.s_err = se;
              m.t_err = te;
              m.qst = true;
            }
          } catch (const Error&) {
          }
        }
      }
    }
  }
  const double elapsed = now_s() - t_start;

  int total = 0, found = 0, qst_total = 0, qst_ok = 0;
  for (const auto& [key, m] : matches) {
    ++total;
    found += m.found;
    if (m.qst) {
      ++qst_total;
      qst_ok += m.q_err <= 8.0 && m.s_err <= 8.0 && m.t_err <= 8.0;
    }
  }
  const double recall = total > 0 ? static_cast<double>(found) / total : 0.0;
  const double qst_rate = qst_total > 0 ? static_cast<double>(qst_ok) / qst_total : 0.0;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "fiducial recovery: R recall %.4f (>=0.99), Q/S/T within 8 ms "
                "%.4f (>=0.99), runtime %.2f s (<5)",
                recall, qst_rate, elapsed);
  report(1, recall >= 0.99 && qst_rate >= 0.99 && elapsed < 5.0, buf);
}

// ---------------------------------------------------------------------------
// 2. Optimizer oracles
// ---------------------------------------------------------------------------

double glm_subgradient_optimum(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y,
                               double lambda, double alpha) {
  const int d = static_cast<int>(Xs.cols());
  const double n = static_cast<double>(Xs.rows());
  double intercept = y.mean();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  double best = reg::glm_objective(Xs, y, intercept, beta, lambda, alpha);
  for (int t = 1; t <= 400000; ++t) {
    const Eigen::VectorXd r = y - Xs * beta - Eigen::VectorXd::Constant(Xs.rows(), intercept);
    Eigen::VectorXd g = -2.0 / n * (Xs.transpose() * r) + lambda * (1.0 - alpha) * beta;
    for (int j = 0; j < d; ++j)
      g[j] += lambda * alpha * (beta[j] > 0 ? 1.0 : (beta[j] < 0 ? -1.0 : 0.0));
    const double g0 = -2.0 / n * r.sum();
    const double step = 0.05 / std::sqrt(static_cast<double>(t));
    beta -= step * g;
    intercept -= step * g0;
    best = std::min(best, reg::glm_objective(Xs, y, intercept, beta, lambda, alpha));
  }
  return best;
}

void criterion_2() {
  Rng rng(202);
  bool ok = true;
  std::string detail;

  // GLM vs projected subgradient on 5x3 instances.
  double glm_gap = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    Eigen::MatrixXd X(5, 3);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
      y[i] = rng.normal();
    }
    const auto model = reg::fit_glm(X, y);
    const Eigen::MatrixXd Xs = model.scaler.apply(X);
    const double f_star = reg::glm_objective(Xs, y, model.intercept, model.beta,
                                             model.lambda, model.alpha);
    const double oracle = glm_subgradient_optimum(Xs, y, model.lambda, model.alpha);
    glm_gap = std::max(glm_gap, std::fabs(f_star - oracle));
  }
  ok &= glm_gap <= 1e-5;

  // SVR vs exhaustive QP grid at n = 3.
  double svr_gap = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    Eigen::MatrixXd X(3, 2);
    Eigen::VectorXd y(3);
    for (int i = 0; i < 3; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
      y[i] = 2.0 * rng.normal();
    }
    const auto model = reg::fit_svr(X, y);
    Eigen::MatrixXd G(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        G(i, j) = std::exp(-(model.support.row(i) - model.support.row(j)).squaredNorm());
    const double f_model = reg::svr_dual_objective(G, model.dual_coef, y, model.epsilon);
    double best = 1e300, c1 = 0.0, c2 = 0.0, span = model.box_c;
    for (int refine = 0; refine < 3; ++refine) {
      const int grid = 120;
      double nb = best, n1 = c1, n2 = c2;
      for (int a = -grid; a <= grid; ++a)
        for (int b = -grid; b <= grid; ++b) {
          Eigen::VectorXd beta(3);
          beta[0] = c1 + span * a / grid;
          beta[1] = c2 + span * b / grid;
          beta[2] = -beta[0] - beta[1];
          if (beta.cwiseAbs().maxCoeff() > model.box_c) continue;
          const double f = reg::svr_dual_objective(G, beta, y, model.epsilon);
          if (f < nb) {
            nb = f;
            n1 = beta[0];
            n2 = beta[1];
          }
        }
      best = nb;
      c1 = n1;
      c2 = n2;
      span /= 30.0;
    }
    svr_gap = std::max(svr_gap, std::fabs(f_model - best));
  }
  ok &= svr_gap <= 1e-3;

  // GPR and NCA analytic gradients vs central differences on 8x3 instances.
  double gpr_rel = 0.0, nca_rel = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    Eigen::MatrixXd X(8, 3);
    Eigen::VectorXd y(8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
      y[i] = rng.normal();
    }
    {
      Eigen::VectorXd theta(5), grad, dummy;
      theta << std::log(1.2), std::log(0.7), std::log(1.4), std::log(0.9), std::log(0.5);
      reg::gpr_value_and_grad(X, y, theta, grad);
      for (int k = 0; k < 5; ++k) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp[k] += 1e-5;
        tm[k] -= 1e-5;
        const double fd = (reg::gpr_value_and_grad(X, y, tp, dummy) -
                           reg::gpr_value_and_grad(X, y, tm, dummy)) /
                          2e-5;
        gpr_rel = std::max(gpr_rel, std::fabs(grad[k] - fd) / std::max(1e-8, std::fabs(fd)));
      }
    }
    {
      Eigen::VectorXd w(3), grad, dummy;
      w << 0.9, 1.1, 0.5;
      reg::nca_value_and_grad(X, y, w, 0.125, grad);
      for (int k = 0; k < 3; ++k) {
        Eigen::VectorXd wp = w, wm = w;
        wp[k] += 1e-6;
        wm[k] -= 1e-6;
        const double fd = (reg::nca_value_and_grad(X, y, wp, 0.125, dummy) -
                           reg::nca_value_and_grad(X, y, wm, 0.125, dummy)) /
                          2e-6;
        nca_rel = std::max(nca_rel, std::fabs(grad[k] - fd) / std::max(1e-8, std::fabs(fd)));
      }
    }
  }
  ok &= gpr_rel < 1e-4 && nca_rel < 1e-4;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "optimizer oracles: GLM gap %.2e (<=1e-5), SVR gap %.2e (<=1e-3), "
                "GPR grad rel %.2e, NCA grad rel %.2e (<1e-4)",
                glm_gap, svr_gap, gpr_rel, nca_rel);
  report(2, ok, buf);
}

// ---------------------------------------------------------------------------
// 3. TotalBoost invariants
// ---------------------------------------------------------------------------

void criterion_3() {
  Rng rng(303);
  const int per = 60, dim = 4;
  Eigen::MatrixXd X(2 * per, dim);
  std::vector<std::string> y;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per; ++i) {
      const int row = c * per + i;
      for (int j = 0; j < dim; ++j) X(row, j) = (j == c ? 1.1 : 0.0) + rng.normal();
      y.push_back(c == 0 ? "a" : "b");
    }
  tboost::TrainOptions opt;
  opt.max_iter = 40;
  opt.track_diagnostics = true;
  tboost::TrainDiagnostics diag;
  tboost::totalboost_train(X, y, opt, &diag);

  bool simplex_ok = true, edges_ok = true, margin_ok = true;
  int iterations = 0;
  for (const auto& run : diag.runs) {
    double last_margin = -2.0;
    for (std::size_t it = 0; it < run.iterations.size(); ++it) {
      const auto& d = run.iterations[it];
      ++iterations;
      double sum = 0.0;
      for (double v : d.distribution) {
        simplex_ok &= v >= 0.0;
        sum += v;
      }
      simplex_ok &= std::fabs(sum - 1.0) <= 1e-9;
      const bool final_infeasible =
          run.stopped_infeasible && it + 1 == run.iterations.size();
      if (!final_infeasible)
        for (double e : d.constraint_edges)
          edges_ok &= e <= d.gamma_hat - opt.margin_precision + 1e-6;
      margin_ok &= d.margin >= last_margin - 1e-6;
      last_margin = d.margin;
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "TotalBoost invariants over %d corrective iterations: simplex %s, "
                "edge constraints %s, monotone margin %s",
                iterations, simplex_ok ? "ok" : "VIOLATED",
                edges_ok ? "ok" : "VIOLATED", margin_ok ? "ok" : "VIOLATED");
  report(3, iterations >= 10 && simplex_ok && edges_ok && margin_ok, buf);
}

// ---------------------------------------------------------------------------
// 4. Context classification analog of Fig. 7
// ---------------------------------------------------------------------------

void criterion_4() {
  auto cfg = synth::default_config();
  cfg.seed = 404;
  for (auto& a : cfg.activities) a.duration_s = 1830.0;
  const auto s = synth::gen_session(cfg);
  const auto imu_f = imu::extract_stream_features(s.session.imu);

  std::vector<WindowedInstance> inst;
  for (const auto& f : imu_f) {
    WindowedInstance w;
    w.t_center_ms = f.t_center_ms;
    w.imu_features = f.values;
    w.ecg_features.assign(ecg::kFeatureDim, 0.0);
    if (const auto* iv = io::interval_at(s.session.activity_intervals, f.t_center_ms))
      w.context = iv->activity;
    inst.push_back(std::move(w));
  }

  bool ok = inst.size() >= 3000;
  double worst_acc = 1.0, worst_tpr = 1.0;
  for (double ratio : {0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2}) {
    const auto split = pipeline::stratified_split(
        inst, ratio, pipeline::SplitMode::instance,
        Rng(404).split("ratio" + std::to_string(ratio)).next_u64());
    std::vector<WindowedInstance> train, test;
    for (int i : split.train) train.push_back(inst[static_cast<std::size_t>(i)]);
    for (int i : split.test) test.push_back(inst[static_cast<std::size_t>(i)]);

    pipeline::Options opt;
    opt.seed = 404;
    const auto clf = pipeline::train_classifier(train, opt);

    std::map<std::string, std::pair<int, int>> per;
    int correct = 0, total = 0;
    for (const auto& t : test) {
      if (!t.context) continue;
      Eigen::RowVectorXd x = Eigen::Map<const Eigen::RowVectorXd>(
          t.imu_features.data(), static_cast<long>(t.imu_features.size()));
      const auto post = tboost::predict_posterior(clf, x);
      ++total;
      auto& slot = per[*t.context];
      ++slot.second;
      if (clf.classes[static_cast<std::size_t>(post.argmax())] == *t.context) {
        ++correct;
        ++slot.first;
      }
    }
    const double acc = static_cast<double>(correct) / total;
    worst_acc = std::min(worst_acc, acc);
    for (const auto& [ctx, counts] : per)
      worst_tpr = std::min(worst_tpr,
                           static_cast<double>(counts.first) / counts.second);
  }
  ok &= worst_acc >= 0.99 && worst_tpr >= 0.98;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "context classification sweep on %zu instances: worst accuracy "
                "%.4f (>=0.99), worst per-class TPR %.4f (>=0.98)",
                inst.size(), worst_acc, worst_tpr);
  report(4, ok, buf);
}

// ---------------------------------------------------------------------------
// 5 + 6. Contextual vs agnostic sweep and end-to-end recovery
// ---------------------------------------------------------------------------

synth::SynthConfig regression_config(std::uint64_t seed) {
  auto cfg = synth::default_config();
  cfg.seed = seed;
  cfg.resp_br_noise = 5.0;
  cfg.resp_ve_noise = 5.0;
  cfg.ecg_noise_mv = 0.004;
  const double hr[5] = {72, 78, 84, 80, 75};   // overlapping heart rates
  const double br[5] = {12, 22, 32, 42, 52};   // wide base separation
  const double ve[5] = {10, 22, 34, 46, 58};
  for (std::size_t i = 0; i < 5; ++i) {
    auto& a = cfg.activities[i];
    a.duration_s = 400.0;
    a.hr_bpm = hr[i];
    a.hr_wander = 8.0;
    a.br_bpm = br[i];
    a.br_wander = 3.0;
    a.ve_lpm = ve[i];
    a.ve_wander = 3.0;
    a.br_target = synth::ModTarget::r_amp;
    a.br_depth = (i % 2 == 0 ? 0.22 : -0.22);  // flipped slopes per context
    a.ve_target = synth::ModTarget::t_amp;
    a.ve_depth = (i % 2 == 0 ? -0.4 : 0.4);
  }
  return cfg;
}

void criteria_5_and_6() {
  const double t_start = now_s();
  const auto cfg = regression_config(9001);
  const auto s = synth::gen_session(cfg);
  const auto inst = instances_of(s);

  const std::vector<std::string> contexts = {"bike", "rest", "run", "walk", "wave"};
  pipeline::SweepOptions sopt;
  sopt.pipeline.seed = 9001;
  sopt.pipeline.fit.gpr.restarts = 2;
  sopt.pipeline.fit.gpr.max_iterations = 50;

  bool all_le = true;
  std::string first_fail;
  double mae_07[2][2] = {{0, 0}, {0, 0}};  // [target][gpr=0, nca=1]

  for (const auto target : {pipeline::Target::br, pipeline::Target::ve}) {
    for (const auto kind :
         {reg::ModelKind::glm, reg::ModelKind::rf, reg::ModelKind::svr,
          reg::ModelKind::gpr, reg::ModelKind::nca}) {
      const auto sweep = pipeline::holdout_sweep(inst, kind, target, contexts, sopt);
      for (const auto& e : sweep) {
        if (!(e.result.mae <= e.result.mae_agnostic)) {
          all_le = false;
          if (first_fail.empty()) {
            char b[128];
            std::snprintf(b, sizeof(b), "%s/%s at ratio %.1f (%.3f > %.3f)",
                          pipeline::to_string(target).c_str(),
                          reg::to_string(kind).c_str(), e.train_fraction,
                          e.result.mae, e.result.mae_agnostic);
            first_fail = b;
          }
        }
        if (std::fabs(e.train_fraction - 0.7) < 1e-9) {
          const int ti = target == pipeline::Target::br ? 0 : 1;
          if (kind == reg::ModelKind::gpr) mae_07[ti][0] = e.result.mae;
          if (kind == reg::ModelKind::nca) mae_07[ti][1] = e.result.mae;
        }
      }
    }
  }
  const double elapsed = now_s() - t_start;

  char buf[300];
  std::snprintf(buf, sizeof(buf),
                "contextual <= agnostic for all 5 families x 7 ratios x 2 targets%s%s",
                all_le ? "" : "; first failure: ", first_fail.c_str());
  report(5, all_le, buf);

  // Bayes-optimal MAE of the window label under per-sample noise sigma.
  const double A = 5.0 / std::sqrt(15.0) * std::sqrt(2.0 / M_PI);
  const bool recovery_ok = mae_07[0][0] <= 1.5 * A && mae_07[0][1] <= 1.5 * A &&
                           mae_07[1][0] <= 1.5 * A && mae_07[1][1] <= 1.5 * A;
  std::snprintf(buf, sizeof(buf),
                "end-to-end recovery at 70/30: GPR br %.3f / ve %.3f, NCA br %.3f "
                "/ ve %.3f, all <= 1.5*A = %.3f; sweep runtime %.0f s (<600)",
                mae_07[0][0], mae_07[1][0], mae_07[0][1], mae_07[1][1], 1.5 * A,
                elapsed);
  report(6, recovery_ok && elapsed < 600.0, buf);
}

// ---------------------------------------------------------------------------
// 7. Biomarker recovery analog of Fig. 10
// ---------------------------------------------------------------------------

void criterion_7() {
  auto cfg = regression_config(707);
  // VE planted exclusively on the T-width morphology in the run context.
  for (auto& a : cfg.activities) {
    if (a.name == "run") {
      a.ve_target = synth::ModTarget::t_width;
      a.ve_depth = 0.3;
    }
  }
  cfg.resp_ve_noise = 0.3;  // clean labels for the relevance recovery
  const auto s = synth::gen_session(cfg);
  const auto inst = instances_of(s);

  // run-context training set
  std::vector<int> rows;
  std::vector<double> ys;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (!inst[i].context || *inst[i].context != "run" || !inst[i].ve) continue;
    rows.push_back(static_cast<int>(i));
    ys.push_back(*inst[i].ve);
  }
  Eigen::MatrixXd X(static_cast<long>(rows.size()), ecg::kFeatureDim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < ecg::kFeatureDim; ++j)
      X(static_cast<long>(i), j) =
          inst[static_cast<std::size_t>(rows[i])].ecg_features[static_cast<std::size_t>(j)];
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<long>(ys.size()));

  reg::FitOptions fopt;
  fopt.seed = 707;
  fopt.gpr.restarts = 2;
  fopt.gpr.max_iterations = 60;
  std::vector<reg::TrainedRegressor> bank;
  bank.push_back(reg::fit(reg::ModelKind::glm, X, y, fopt));
  bank.push_back(reg::fit(reg::ModelKind::rf, X, y, fopt));
  bank.push_back(reg::fit(reg::ModelKind::gpr, X, y, fopt));
  bank.push_back(reg::fit(reg::ModelKind::nca, X, y, fopt));
  std::vector<const reg::TrainedRegressor*> models;
  for (const auto& m : bank) models.push_back(&m);

  const auto rel = biomarker::contextual_relevance(models, "run");
  int argmax = 0;
  double sum = 0.0;
  for (int b = 0; b < biomarker::kBiomarkers; ++b) {
    if (rel.rel[static_cast<std::size_t>(b)] > rel.rel[static_cast<std::size_t>(argmax)])
      argmax = b;
    sum += rel.rel[static_cast<std::size_t>(b)];
  }
  // every per-model relevance vector must also normalize to 100
  bool sums_ok = std::fabs(sum - 100.0) <= 1e-6;
  for (const auto* m : models) {
    const auto solo = biomarker::contextual_relevance({m}, "run");
    double s100 = 0.0;
    for (double v : solo.rel) s100 += v;
    sums_ok &= std::fabs(s100 - 100.0) <= 1e-6;
  }

  const bool tw_wins = biomarker::kBiomarkerNames[static_cast<std::size_t>(argmax)] == "Tw" &&
                       rel.rel[3] > 40.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "biomarker recovery: relevance Rh %.1f Rw %.1f Th %.1f Tw %.1f RR "
                "%.1f; Tw argmax >40%% %s; sums 100%%+-1e-6 %s",
                rel.rel[0], rel.rel[1], rel.rel[2], rel.rel[3], rel.rel[4],
                tw_wins ? "yes" : "NO", sums_ok ? "ok" : "VIOLATED");
  report(7, tw_wins && sums_ok, buf);
}

// ---------------------------------------------------------------------------
// 8. Determinism through the CLI
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_8() {
  const char* cli = std::getenv("RESPIRA_CLI");
  if (!cli) {
    report(8, false, "determinism: RESPIRA_CLI not set (run through ctest)");
    return;
  }
  const fs::path base = fs::temp_directory_path() / "respira_acceptance_c8";
  fs::remove_all(base);
  bool ran = true;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = base / ("run" + std::to_string(run));
    fs::create_directories(dir);
    const std::string q = "\"" + std::string(cli) + "\"";
    const std::string out = " --out \"" + dir.string() + "\"";
    const std::string seed = " --seed 4242";
    ran &= std::system((q + " synth" + out + seed + " --duration 120 > /dev/null").c_str()) == 0;
    ran &= std::system((q + " features" + out + seed + " > /dev/null").c_str()) == 0;
    ran &= std::system((q + " eval" + out + seed +
                        " --target both --model nca --ratio 0.7 > /dev/null")
                           .c_str()) == 0;
    ran &= std::system((q + " train" + out + seed + " --target both --model nca > /dev/null").c_str()) == 0;
    ran &= std::system((q + " rank" + out + seed + " > /dev/null").c_str()) == 0;
  }
  bool same = false;
  if (ran) {
    const std::string m0 = slurp(base / "run0" / "metrics.json");
    const std::string m1 = slurp(base / "run1" / "metrics.json");
    const std::string r0 = slurp(base / "run0" / "relevance.csv");
    const std::string r1 = slurp(base / "run1" / "relevance.csv");
    same = !m0.empty() && m0 == m1 && !r0.empty() && r0 == r1;
  }
  report(8, ran && same,
         ran ? (same ? "determinism: metrics.json and relevance.csv byte-identical "
                       "across two seeded runs"
                     : "determinism: outputs differ between identical runs")
             : "determinism: CLI stages failed");
  fs::remove_all(base);
}

}  // namespace

int main() {
  const double t0 = now_s();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criteria_5_and_6();
  criterion_7();
  criterion_8();
  std::printf("%d criteria failed; total runtime %.0f s\n", g_failures, now_s() - t0);
  return g_failures == 0 ? 0 : 1;
}
