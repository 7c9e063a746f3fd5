#pragma once

#include <vector>

#include <Eigen/Dense>

namespace respira::split {

// Upper-tail chi-square probability Q(k/2, x/2).
double chi2_sf(double x, double dof);

struct SelectOptions {
  int predictor_bins = 4;  // quartile binning of each predictor
  int top_pairs = 8;       // pair tests run among the top-k single predictors
};

// Chooses the split predictor for one tree node by chi-square independence
// tests: each candidate predictor against the binned response, plus each
// pair among the strongest candidates against the response on the joint
// quartile grid. The predictor attaining the smallest p-value wins (for a
// winning pair, its member with the smaller single-test p). Returns -1 when
// every candidate is constant over the node.
//
// rows: node sample indices into X / response_bin / w.
int choose_predictor(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                     const std::vector<int>& response_bin, int n_response_bins,
                     const std::vector<double>& w,
                     const std::vector<int>& candidates,
                     const SelectOptions& opt = {});

// All predictors whose p-value ties the minimum (saturated tables tie at
// zero on well-separated data); ascending feature order. The caller breaks
// the tie with its own split metric.
std::vector<int> choose_predictor_ties(const Eigen::MatrixXd& X,
                                       const std::vector<int>& rows,
                                       const std::vector<int>& response_bin,
                                       int n_response_bins,
                                       const std::vector<double>& w,
                                       const std::vector<int>& candidates,
                                       const SelectOptions& opt = {});

// Equal-frequency bin ids (0..bins-1) of y over rows, used to discretize a
// continuous response for the tests.
std::vector<int> quantile_bins(const std::vector<double>& y,
                               const std::vector<int>& rows, int bins);

}  // namespace respira::split
