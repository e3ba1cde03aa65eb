#include "framot/association.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "framot/error.hpp"

namespace framot {

AffinityFeature AffinityMatrix::at(Eigen::Index i, Eigen::Index j) const {
    const auto r = features.row(i * cols + j);
    return {r[0], r[1], r[2], r[3]};
}

void AffinityMatrix::set(Eigen::Index i, Eigen::Index j, const AffinityFeature& f) {
    auto r = features.row(i * cols + j);
    r[0] = f.norm_dist;
    r[1] = f.iou;
    r[2] = f.cos_sim;
    r[3] = f.level;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double normalized_distance(const BoundingBox& a, const BoundingBox& b, double image_width, double image_height) {
    const double dx = (a.cx() - b.cx()) / image_width;
    const double dy = (a.cy() - b.cy()) / image_height;
    return std::hypot(dx, dy);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    const double n = a.norm() * b.norm();
    return n > 0.0 ? std::clamp(a.dot(b) / n, -1.0, 1.0) : 0.0;
}

FusedSet match_and_fuse(const FrameDetections& detections, const std::vector<TrackingPattern>& patterns,
                        double iou_threshold) {
    FusedSet out;
    if (patterns.empty()) return out;

    // (iou, detection, pattern) for every detection whose best pattern clears the threshold.
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        double best = -1.0;
        std::size_t best_p = 0;
        for (std::size_t p = 0; p < patterns.size(); ++p) {
            const double v = iou(detections.detections[d].box, patterns[p].loc);
            if (v > best) {
                best = v;
                best_p = p;
            }
        }
        if (best > iou_threshold) candidates.emplace_back(best, d, best_p);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });

    std::vector<int> claimed_by(patterns.size(), -1);
    for (const auto& [v, d, p] : candidates) {
        if (claimed_by[p] < 0) claimed_by[p] = static_cast<int>(d);
    }

    std::vector<std::pair<std::size_t, std::size_t>> matched;  // (detection, pattern)
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        if (claimed_by[p] >= 0) matched.emplace_back(static_cast<std::size_t>(claimed_by[p]), p);
    }
    std::sort(matched.begin(), matched.end());

    for (const auto& [d, p] : matched) {
        const auto& pat = patterns[p];
        out.entries.push_back({detections.detections[d].box + pat.pred, detections.embeddings[d], pat.level,
                               detections.oracle_ids[d], FusedSource::detection, pat.trajectory_id});
    }
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        if (claimed_by[p] >= 0) continue;
        const auto& pat = patterns[p];
        out.entries.push_back(
            {pat.propagated(), pat.appearance, pat.level, pat.oracle_id, FusedSource::pattern, pat.trajectory_id});
    }
    return out;
}

FusedSet fuse_raw(const FrameDetections& detections) {
    FusedSet out;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        out.entries.push_back({detections.detections[d].box, detections.embeddings[d], 1, detections.oracle_ids[d],
                               FusedSource::detection, 0});
    }
    return out;
}

namespace {

AffinityFeature feature_of(const BoundingBox& a, const Embedding& fa, int level, const BoundingBox& b,
                           const Embedding& fb, double w, double h) {
    return {normalized_distance(a, b, w, h), iou(a, b), cosine_similarity(fa, fb), static_cast<double>(level - 1)};
}

}  // namespace

TrainingAffinity affinity_train(const FusedSet& fused, const FrameDetections& next, double image_width,
                                double image_height) {
    if (next.embeddings.size() != next.detections.size() || next.oracle_ids.size() != next.detections.size()) {
        throw ValidationError("affinity_train: detection/embedding/label counts differ");
    }
    const auto rows = static_cast<Eigen::Index>(fused.size());
    const auto cols = static_cast<Eigen::Index>(next.size());
    TrainingAffinity out{AffinityMatrix(rows, cols), {Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols)}};
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& e = fused.entries[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < cols; ++j) {
            const auto js = static_cast<std::size_t>(j);
            out.features.set(i, j, feature_of(e.box, e.appearance, e.level, next.detections[js].box,
                                              next.embeddings[js], image_width, image_height));
            const int a = e.oracle_id;
            const int b = next.oracle_ids[js];
            const bool a_false = a <= kFalseIdentity;
            const bool b_false = b <= kFalseIdentity;
            if (a_false && b_false) continue;  // masked out
            out.labels.mask(i, j) = 1.0;
            out.labels.label(i, j) = (!a_false && a == b) ? 1.0 : 0.0;
        }
    }
    return out;
}

AffinityMatrix affinity_infer(const std::vector<TrackingPattern>& patterns, const std::vector<Detection>& detections,
                              const std::vector<Embedding>& embeddings, double image_width, double image_height) {
    if (embeddings.size() != detections.size()) throw ValidationError("affinity_infer: embedding count differs");
    AffinityMatrix out(static_cast<Eigen::Index>(patterns.size()), static_cast<Eigen::Index>(detections.size()));
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        const BoundingBox prop = patterns[i].propagated();
        for (std::size_t j = 0; j < detections.size(); ++j) {
            out.set(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j),
                    feature_of(prop, patterns[i].appearance, patterns[i].level, detections[j].box, embeddings[j],
                               image_width, image_height));
        }
    }
    return out;
}

}  // namespace framot
