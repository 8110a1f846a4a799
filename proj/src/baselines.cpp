#include "stixelpn/baselines.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stixelpn::baselines {

double ClassPercentages::at(int merged_class) const {
    const auto it = p.find(merged_class);
    if (it == p.end())
        throw std::out_of_range("percentages: class " + std::to_string(merged_class) +
                                " has no training RoIs");
    return it->second;
}

ClassPercentages estimate_percentages(const Dataset& data, const filter::FilterParams& params) {
    std::map<int, double> sums;
    std::map<int, long> counts;
    for (const DatasetEntry& entry : data.entries) {
        const auto samples =
            filter::build_frame_samples(entry.frame, entry.detections, params, data.classes);
        for (const filter::RoiSample& sample : samples) {
            InstanceId chosen;
            const auto targets = pointnet::target_assignment(sample, entry.gt, data.classes,
                                                             &chosen);
            if (chosen.is_background()) continue;
            const long ones = std::count(targets.begin(), targets.end(), 1);
            const int cls = data.classes.merged(chosen.cls);
            sums[cls] += static_cast<double>(ones) / static_cast<double>(targets.size());
            ++counts[cls];
        }
    }
    ClassPercentages out;
    for (const auto& [cls, sum] : sums) out.p[cls] = sum / static_cast<double>(counts[cls]);
    return out;
}

std::string percentages_csv(const ClassPercentages& p, const ClassTable& classes) {
    std::string out = "class,p_c\n";
    char line[64];
    for (const auto& [cls, value] : p.p) {
        std::snprintf(line, sizeof line, "%s,%.17g\n", classes.name(cls).c_str(), value);
        out += line;
    }
    return out;
}

std::vector<int> statistical_segment(const StixelFrame& frame, const filter::RoiSample& sample,
                                     double p, DistanceMetric metric) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("statistical_segment: p must lie in (0,1]");
    const int n = sample.count();
    const double cu = sample.roi.rect.u_center();
    const double cv = sample.roi.rect.v_center();
    std::vector<std::pair<double, int>> order(n);
    for (int i = 0; i < n; ++i) {
        const Stixel* s = frame.find(sample.captured[i]);
        if (s == nullptr)
            throw std::invalid_argument("statistical_segment: captured stixel not in frame");
        const double du = s->rect().u_center() - cu;
        const double dv = s->rect().v_center() - cv;
        const double d = metric == DistanceMetric::l1 ? std::abs(du) + std::abs(dv)
                                                      : std::sqrt(du * du + dv * dv);
        order[i] = {d, i};
    }
    // captured ids ascend, so the stable sort resolves distance ties toward
    // the lower stixel id
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const int k = static_cast<int>(std::floor(p * n));
    std::vector<int> labels(n, 0);
    for (int j = 0; j < k; ++j) labels[order[j].second] = 1;
    return labels;
}

double HacConfig::mu_for(const std::string& class_name) const {
    const auto it = mu.find(class_name);
    return it == mu.end() ? default_mu : it->second;
}

std::string validate(const HacConfig& cfg) {
    std::ostringstream err;
    for (const auto& [name, value] : cfg.mu)
        if (!(value > 0.0)) err << "mu for " << name << " must be positive; ";
    if (!(cfg.default_mu > 0.0)) err << "default mu must be positive; ";
    return err.str();
}

std::vector<std::vector<int>> hac_cluster(const std::vector<std::pair<double, double>>& points,
                                          double mu) {
    if (points.empty()) throw std::invalid_argument("hac_cluster: need at least one point");
    if (!(mu > 0.0)) throw std::invalid_argument("hac_cluster: mu must be positive");
    const int n = static_cast<int>(points.size());
    std::vector<std::vector<int>> clusters(n);
    for (int i = 0; i < n; ++i) clusters[i] = {i};

    // complete-linkage distances maintained under the max merge rule
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = points[i].first - points[j].first;
            const double dz = points[i].second - points[j].second;
            dist[i][j] = dist[j][i] = std::hypot(dx, dz);
        }

    while (clusters.size() > 1) {
        int bi = -1, bj = -1;
        double best = 0.0;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j)
                if (bi < 0 || dist[i][j] < best) {
                    best = dist[i][j];
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
        if (best > mu) break;
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            if (static_cast<int>(k) == bi || static_cast<int>(k) == bj) continue;
            dist[bi][k] = dist[k][bi] = std::max(dist[bi][k], dist[bj][k]);
        }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(clusters[bi].begin(), clusters[bi].end());
        clusters.erase(clusters.begin() + bj);
        for (auto& row : dist) row.erase(row.begin() + bj);
        dist.erase(dist.begin() + bj);
    }
    return clusters;
}

PredictedLabeling hac_img(const StixelFrame& frame, const ClassTable& classes,
                          const HacConfig& cfg) {
    const std::string err = validate(cfg);
    if (!err.empty()) throw std::invalid_argument("hac_img: " + err);
    PredictedLabeling out;
    out.labeling.frame_id = frame.frame_id;
    for (const Stixel& s : frame.stixels)
        out.labeling.labels[s.stixel_id] = InstanceId::background();

    for (int cls = 0; cls < classes.size(); ++cls) {
        if (!classes.is_evaluated(cls) || classes.merged(cls) != cls) continue;
        std::vector<int> members;
        std::vector<std::pair<double, double>> points;
        for (const Stixel& s : frame.stixels)
            if (classes.is_evaluated(s.label) && classes.merged(s.label) == cls) {
                members.push_back(s.stixel_id);
                points.emplace_back(s.x, s.z);
            }
        if (members.empty()) continue;
        int counter = 0;
        for (const auto& cluster : hac_cluster(points, cfg.mu_for(classes.name(cls)))) {
            const InstanceId inst{cls, ++counter};
            for (int idx : cluster) out.labeling.labels[members[idx]] = inst;
            out.confidence[inst] = 1.0;
        }
    }
    return out;
}

std::vector<int> hac_roi(const StixelFrame& frame, const filter::RoiSample& sample,
                         const ClassTable& classes, const HacConfig& cfg) {
    const std::string err = validate(cfg);
    if (!err.empty()) throw std::invalid_argument("hac_roi: " + err);
    const int box_class = classes.merged(sample.roi.source.box_label);
    std::vector<int> rows;
    std::vector<std::pair<double, double>> points;
    std::vector<double> areas;
    for (int i = 0; i < sample.count(); ++i) {
        const Stixel* s = frame.find(sample.captured[i]);
        if (s == nullptr) throw std::invalid_argument("hac_roi: captured stixel not in frame");
        if (classes.merged(s->label) != box_class) continue;
        rows.push_back(i);
        points.emplace_back(s->x, s->z);
        areas.push_back(rect_area(s->rect()));
    }
    std::vector<int> labels(sample.count(), 0);
    if (rows.empty()) return labels;

    const auto clusters = hac_cluster(points, cfg.mu_for(classes.name(box_class)));
    int winner = 0;
    double best_area = -1.0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        double area = 0.0;
        for (int idx : clusters[c]) area += areas[idx];
        if (area > best_area) {
            best_area = area;
            winner = static_cast<int>(c);
        }
    }
    for (int idx : clusters[winner]) labels[rows[idx]] = 1;
    return labels;
}

pointnet::RoiPrediction to_prediction(const std::vector<int>& labels) {
    pointnet::RoiPrediction pred;
    pred.pc.reserve(labels.size());
    for (int v : labels) pred.pc.push_back(v != 0 ? 1.0 : 0.0);
    pred.decision = labels;
    return pred;
}

}  // namespace stixelpn::baselines
