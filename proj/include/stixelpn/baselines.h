#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stixelpn/core.h"
#include "stixelpn/filter.h"
#include "stixelpn/ingest.h"
#include "stixelpn/pointnet.h"

// Non-learned competitors: the statistical center-fill baseline and two
// hierarchical-clustering variants (per-RoI and whole-image).

namespace stixelpn::baselines {

// Mean fraction of object stixels among captured stixels, per merged class,
// estimated over training RoIs associated with a ground-truth instance.
struct ClassPercentages {
    std::map<int, double> p;       // merged class index -> p_c in (0,1]
    double at(int merged_class) const;  // throws when the class was never seen
};
ClassPercentages estimate_percentages(const Dataset& data, const filter::FilterParams& params);
std::string percentages_csv(const ClassPercentages& p, const ClassTable& classes);

enum class DistanceMetric { l1, l2 };

// Labels the floor(p * N') stixels closest to the RoI center (pixel
// distance between rectangle centers); distance ties keep the lower id.
std::vector<int> statistical_segment(const StixelFrame& frame, const filter::RoiSample& sample,
                                     double p, DistanceMetric metric);

struct HacConfig {
    // complete-linkage stop thresholds, meters on the ground plane (x, z)
    std::map<std::string, double> mu{{"person", 1.0}, {"rider", 5.0},     {"car", 5.0},
                                     {"truck", 15.0}, {"bus", 20.0},      {"motorcycle", 5.0},
                                     {"bicycle", 2.5}};
    double default_mu = 5.0;
    double mu_for(const std::string& class_name) const;
};
std::string validate(const HacConfig& cfg);

// Agglomerative clustering, complete linkage, Euclidean distance: merges the
// lexicographically first closest cluster pair until the next merge distance
// would exceed mu. Clusters keep ascending point indices and are ordered by
// their smallest member.
std::vector<std::vector<int>> hac_cluster(const std::vector<std::pair<double, double>>& points,
                                          double mu);

// Clusters each evaluated class's stixels separately on (x, z); every
// cluster becomes one instance with confidence 1.0.
PredictedLabeling hac_img(const StixelFrame& frame, const ClassTable& classes,
                          const HacConfig& cfg);

// Per-RoI variant: among captured stixels sharing the box's merged class,
// the cluster with the largest summed rectangle area wins label 1.
std::vector<int> hac_roi(const StixelFrame& frame, const filter::RoiSample& sample,
                         const ClassTable& classes, const HacConfig& cfg);

// Adapts baseline binary labels to the prediction shape BPS consumes.
pointnet::RoiPrediction to_prediction(const std::vector<int>& labels);

}  // namespace stixelpn::baselines
