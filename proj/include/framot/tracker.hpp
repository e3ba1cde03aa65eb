#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "framot/association.hpp"
#include "framot/detection.hpp"
#include "framot/faam.hpp"
#include "framot/motion_model.hpp"
#include "framot/mot_io.hpp"

namespace framot {

/// Source of the frame-rate embedding fed to the association model.
/// `blind` feeds a constant vector (no rate information at all).
enum class FrameRateMode { known, unknown, blind };

FrameRateMode parse_frame_rate_mode(const std::string& name);
const char* to_string(FrameRateMode mode);

struct TrackerConfig {
    double low_threshold = 0.1;    // lambda_low
    double high_threshold = 0.6;   // lambda_high
    int max_missing = 30;          // lambda_i, frames
    double score_gate = 0.1;       // pairs need a score strictly above this
    double pattern_iou_threshold = 0.7;
    FrameRateMode frame_rate_mode = FrameRateMode::known;
    IbdvCriterion ibdv_criterion = IbdvCriterion::dist;
    double rate_scale = kDefaultRateScale;
    int embedding_length = kDefaultEmbeddingLength;
    double appearance_momentum = 0.9;
    KalmanConfig kalman;

    void validate() const;
};

struct Trajectory {
    int id = 0;
    KalmanState kalman;
    KalmanPrediction next;  // prediction for the following frame
    BoundingBox last_box;
    Embedding embedding_cache;
    int level = 1;
    int missing_count = 0;
    int oracle_id = kFalseIdentity;
    std::vector<TrackBox> history;

    /// Pattern describing this trajectory after the current frame.
    TrackingPattern pattern(int frame) const;
};

struct StageResult {
    std::vector<std::pair<int, int>> matches;  // (trajectory, detection)
    std::vector<int> unmatched_trajectories;
    std::vector<int> unmatched_detections;
};

/// Maximum-score one-to-one assignment; pairs scoring <= gate are never
/// matched.
StageResult gated_assignment(const Eigen::MatrixXd& scores, double gate);

/// One association stage: scores every (pattern, detection) pair with the
/// model and assigns them with gated_assignment.
StageResult stage_match(const std::vector<TrackingPattern>& patterns, const std::vector<Detection>& detections,
                        const std::vector<Embedding>& embeddings, const AssociationModel& model,
                        const FrameRateEmbedding& sigma, double score_gate, double image_width,
                        double image_height);

struct TrackingOutput {
    TrackResult result;
    /// Patterns of the live trajectories after each frame; index 0 is frame 1.
    std::vector<std::vector<TrackingPattern>> patterns;
};

/// Online two-stage tracker over one video.
class Tracker {
public:
    Tracker(AssociationModel model, TrackerConfig config, double effective_fps, int image_width, int image_height,
            int sampling_k = 1);

    /// Processes the next frame and returns the boxes emitted for it.
    std::vector<TrackBox> step(const FrameDetections& frame);

    /// Patterns of the currently live trajectories.
    std::vector<TrackingPattern> patterns() const;

    const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }
    int frame() const noexcept { return frame_; }

    /// Embedding used for the frame most recently processed.
    const FrameRateEmbedding& last_sigma() const noexcept { return sigma_; }

private:
    FrameRateEmbedding make_sigma(const FrameDetections& current);
    void update_trajectory(Trajectory& t, const Detection& d, const Embedding& e, int oracle_id, int level);
    void start_trajectory(const Detection& d, const Embedding& e, int oracle_id);

    AssociationModel model_;
    TrackerConfig config_;
    double effective_fps_;
    int width_;
    int height_;
    int sampling_k_;
    int frame_ = 0;
    int next_id_ = 1;
    std::vector<Trajectory> trajectories_;
    FrameDetections previous_;
    FrameRateEmbedding sigma_;
    std::vector<TrackBox> emitted_;
};

TrackingOutput track_sequence(const std::vector<FrameDetections>& frames, const AssociationModel& model,
                              const TrackerConfig& config, double effective_fps, int image_width, int image_height,
                              int sampling_k = 1);

}  // namespace framot
