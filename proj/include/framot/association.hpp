#pragma once

#include <Eigen/Core>
#include <vector>

#include "framot/detection.hpp"
#include "framot/mot_io.hpp"

namespace framot {

/// Per-trajectory record of the inference-time tracker state at one frame.
struct TrackingPattern {
    BoundingBox loc;        // last associated or propagated box
    BoxOffset pred;         // Kalman offset to the next frame
    Embedding appearance;   // cached embedding, unit norm
    int level = 1;          // association stage of the last match (1 or 2)
    int frame = 0;          // frame index within its video
    int sampling_k = 1;
    int trajectory_id = 0;
    /// Identity of the trajectory's last oracle-labelled observation,
    /// kFalseIdentity when it was a false positive or unknown.
    int oracle_id = kFalseIdentity;

    BoundingBox propagated() const { return loc + pred; }
};

/// Feature vector Z of one (previous, current) pair; D_a = 4.
struct AffinityFeature {
    double norm_dist = 0.0;
    double iou = 0.0;
    double cos_sim = 0.0;
    double level = 0.0;  // pattern level - 1
};

inline constexpr int kAffinityDim = 4;

/// rows x cols grid of affinity features, stored one pair per row
/// (pair index = row * cols + col) so the network can batch over pairs.
struct AffinityMatrix {
    using Storage = Eigen::Matrix<double, Eigen::Dynamic, kAffinityDim, Eigen::RowMajor>;

    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Storage features;

    AffinityMatrix() = default;
    AffinityMatrix(Eigen::Index r, Eigen::Index c) : rows(r), cols(c), features(r * c, kAffinityDim) {}

    Eigen::Index pairs() const noexcept { return rows * cols; }
    AffinityFeature at(Eigen::Index i, Eigen::Index j) const;
    void set(Eigen::Index i, Eigen::Index j, const AffinityFeature& f);
};

/// Training targets: label 1 for same identity, 0 otherwise; mask 0 for
/// pairs excluded from the loss (both sides false).
struct PairLabels {
    Eigen::MatrixXd label;
    Eigen::MatrixXd mask;
};

enum class FusedSource { detection, pattern };

struct FusedEntry {
    BoundingBox box;
    Embedding appearance;
    int level = 1;
    int oracle_id = kFalseIdentity;
    FusedSource source = FusedSource::detection;
    int trajectory_id = 0;
};

/// The fused previous-frame set D'_T with its embeddings and levels.
struct FusedSet {
    std::vector<FusedEntry> entries;
    std::size_t size() const noexcept { return entries.size(); }
};

double iou(const BoundingBox& a, const BoundingBox& b);

/// Euclidean distance between box centres with x divided by the image width
/// and y by the image height; lies in [0, sqrt(2)] for centres in the image.
double normalized_distance(const BoundingBox& a, const BoundingBox& b, double image_width, double image_height);

double cosine_similarity(const Embedding& a, const Embedding& b);

/// Pattern matching and fusion for training. Each detection is matched to
/// its largest-IoU pattern when that IoU exceeds `iou_threshold` and no
/// detection with a larger IoU already claimed the pattern. Matched
/// detections become B + p_pred with the detection's embedding; unmatched
/// patterns become p_loc + p_pred with the cached embedding; unmatched
/// detections are dropped. Entries are ordered matched-first by detection
/// index, then unmatched patterns by pattern index.
FusedSet match_and_fuse(const FrameDetections& detections, const std::vector<TrackingPattern>& patterns,
                        double iou_threshold);

struct TrainingAffinity {
    AffinityMatrix features;
    PairLabels labels;
};

/// Z and labels between the fused set and next-frame detections.
TrainingAffinity affinity_train(const FusedSet& fused, const FrameDetections& next, double image_width,
                                double image_height);

/// Z between cached patterns and current detections, as used at inference.
AffinityMatrix affinity_infer(const std::vector<TrackingPattern>& patterns, const std::vector<Detection>& detections,
                              const std::vector<Embedding>& embeddings, double image_width, double image_height);

/// Builds a fused set straight from raw detections (no patterns), every
/// entry at level 1. This is the conventional frame-pair training input.
FusedSet fuse_raw(const FrameDetections& detections);

}  // namespace framot
