#ifndef MMAE_EVALUATION_HPP
#define MMAE_EVALUATION_HPP

#include <string>
#include <vector>

#include "mmae/image.hpp"
#include "mmae/scoring.hpp"

namespace mmae {

// One (threshold, dataset-pooled FPR, mean per-region overlap) sample.
struct PROPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double pro = 0.0;
};

// Points ordered by decreasing threshold; fpr is non-decreasing along the
// list and the final all-positive point pins (fpr=1, pro=1).
struct PROCurve {
    std::vector<PROPoint> points;
};

// Maximal 8-connected regions of positive pixels, as row-major pixel indices.
std::vector<std::vector<long>> connected_components(const Mask& mask);

// PRO and pooled FPR of the strict-> thresholding at t.
// pro  = mean over every ground-truth component R of |R ∩ predicted| / |R|
// fpr  = total false positives / total negative pixels, pooled over the set.
std::pair<double, double> pro_at_threshold(const std::vector<ScoreMap>& maps,
                                           const std::vector<Mask>& gts, double t);

// Threshold sweep over the distinct score values (all of them when there are
// at most max_thresholds, else that many quantile-spaced ones), plus the
// all-positive endpoint.
PROCurve pro_curve(const std::vector<ScoreMap>& maps, const std::vector<Mask>& gts,
                   int max_thresholds = 5000);

// Trapezoidal area under (fpr, pro) up to fpr_limit (linear interpolation at
// the limit), normalized by fpr_limit so a perfect detector scores 1.
double pro_auc_from_curve(const PROCurve& curve, double fpr_limit);

double pro_auc(const std::vector<ScoreMap>& maps, const std::vector<Mask>& gts,
               double fpr_limit = 0.3, int max_thresholds = 5000);

// Rank-based AUC over all pixels pooled across the set; ties count 0.5.
double pixel_roc_auc(const std::vector<ScoreMap>& maps, const std::vector<Mask>& gts);

void write_pro_curve_csv(const std::string& path, const PROCurve& curve);

// Simple line plot of the PRO curve, for eyeballing.
void write_pro_curve_plot(const std::string& path, const PROCurve& curve, double fpr_limit);

} // namespace mmae

#endif
