#include "framot/tracker.hpp"

#include <algorithm>

#include "framot/assignment.hpp"
#include "framot/error.hpp"

namespace framot {

FrameRateMode parse_frame_rate_mode(const std::string& name) {
    if (name == "known") return FrameRateMode::known;
    if (name == "unknown") return FrameRateMode::unknown;
    if (name == "blind") return FrameRateMode::blind;
    throw ValidationError("unknown frame rate mode '" + name + "' (expected known, unknown or blind)");
}

const char* to_string(FrameRateMode mode) {
    switch (mode) {
        case FrameRateMode::known: return "known";
        case FrameRateMode::unknown: return "unknown";
        case FrameRateMode::blind: return "blind";
    }
    return "?";
}

void TrackerConfig::validate() const {
    if (!(low_threshold > 0.0 && low_threshold < high_threshold && high_threshold < 1.0)) {
        throw ValidationError("tracker thresholds must satisfy 0 < low < high < 1");
    }
    if (max_missing < 0) throw ValidationError("max_missing must be >= 0");
    if (!(pattern_iou_threshold > 0.0 && pattern_iou_threshold < 1.0)) {
        throw ValidationError("pattern IoU threshold must lie in (0, 1)");
    }
    if (embedding_length < 1) throw ValidationError("embedding length must be >= 1");
    if (!(appearance_momentum >= 0.0 && appearance_momentum < 1.0)) {
        throw ValidationError("appearance momentum must lie in [0, 1)");
    }
}

TrackingPattern Trajectory::pattern(int frame) const {
    TrackingPattern p;
    p.loc = kalman.box();
    p.pred = next.offset;
    p.appearance = embedding_cache;
    p.level = level;
    p.frame = frame;
    p.trajectory_id = id;
    p.oracle_id = oracle_id;
    return p;
}

StageResult gated_assignment(const Eigen::MatrixXd& scores, double gate) {
    StageResult out;
    Eigen::MatrixXd cost(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            cost(i, j) = scores(i, j) > gate ? -scores(i, j) : kForbidden;
        }
    }
    const Matching m = solve_assignment(cost);
    std::vector<bool> row_used(static_cast<std::size_t>(scores.rows()), false);
    std::vector<bool> col_used(static_cast<std::size_t>(scores.cols()), false);
    for (const auto& [r, c] : m.pairs) {
        out.matches.emplace_back(r, c);
        row_used[static_cast<std::size_t>(r)] = true;
        col_used[static_cast<std::size_t>(c)] = true;
    }
    for (std::size_t i = 0; i < row_used.size(); ++i) {
        if (!row_used[i]) out.unmatched_trajectories.push_back(static_cast<int>(i));
    }
    for (std::size_t j = 0; j < col_used.size(); ++j) {
        if (!col_used[j]) out.unmatched_detections.push_back(static_cast<int>(j));
    }
    return out;
}

StageResult stage_match(const std::vector<TrackingPattern>& patterns, const std::vector<Detection>& detections,
                        const std::vector<Embedding>& embeddings, const AssociationModel& model,
                        const FrameRateEmbedding& sigma, double score_gate, double image_width,
                        double image_height) {
    if (patterns.empty() || detections.empty()) {
        return gated_assignment(Eigen::MatrixXd(static_cast<Eigen::Index>(patterns.size()),
                                                static_cast<Eigen::Index>(detections.size())),
                                score_gate);
    }
    const AffinityMatrix z = affinity_infer(patterns, detections, embeddings, image_width, image_height);
    return gated_assignment(score_pairs(model, z, sigma), score_gate);
}

// ---------------------------------------------------------------------------

Tracker::Tracker(AssociationModel model, TrackerConfig config, double effective_fps, int image_width,
                 int image_height, int sampling_k)
    : model_(std::move(model)),
      config_(std::move(config)),
      effective_fps_(effective_fps),
      width_(image_width),
      height_(image_height),
      sampling_k_(sampling_k) {
    config_.validate();
    if (width_ <= 0 || height_ <= 0) throw ValidationError("image dimensions must be positive");
    if (const auto* p = std::get_if<FaamParams>(&model_)) {
        if (p->embedding_length() != config_.embedding_length) {
            throw ValidationError("checkpoint embedding length does not match the tracker configuration");
        }
    }
}

FrameRateEmbedding Tracker::make_sigma(const FrameDetections& current) {
    switch (config_.frame_rate_mode) {
        case FrameRateMode::known:
            return encode_known(effective_fps_, config_.rate_scale, config_.embedding_length);
        case FrameRateMode::unknown:
            return encode_ibdv(previous_, current, config_.ibdv_criterion, config_.embedding_length, width_, height_,
                               static_cast<std::uint64_t>(frame_));
        case FrameRateMode::blind:
            break;
    }
    return encode_blind(config_.embedding_length);
}

void Tracker::update_trajectory(Trajectory& t, const Detection& d, const Embedding& e, int oracle_id, int level) {
    t.kalman = kf_update(t.kalman, d.box, config_.kalman);
    t.last_box = d.box;
    const double m = config_.appearance_momentum;
    t.embedding_cache = normalized(m * t.embedding_cache + (1.0 - m) * e);
    t.level = level;
    t.missing_count = 0;
    t.oracle_id = oracle_id > kFalseIdentity ? oracle_id : kFalseIdentity;
    const TrackBox out{frame_, t.id, d.box, d.confidence};
    t.history.push_back(out);
    emitted_.push_back(out);
}

void Tracker::start_trajectory(const Detection& d, const Embedding& e, int oracle_id) {
    Trajectory t;
    t.id = next_id_++;
    t.kalman = kf_init(d.box, config_.kalman);
    t.last_box = d.box;
    t.embedding_cache = normalized(e);
    t.level = 1;
    t.oracle_id = oracle_id > kFalseIdentity ? oracle_id : kFalseIdentity;
    const TrackBox out{frame_, t.id, d.box, d.confidence};
    t.history.push_back(out);
    emitted_.push_back(out);
    trajectories_.push_back(std::move(t));
}

std::vector<TrackBox> Tracker::step(const FrameDetections& frame) {
    ++frame_;
    emitted_.clear();

    const FrameDetections kept = filter_by_confidence(frame, config_.low_threshold);
    std::vector<int> high, low;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        (kept.detections[i].confidence >= config_.high_threshold ? high : low).push_back(static_cast<int>(i));
    }

    const bool needs_sigma = std::holds_alternative<FaamParams>(model_);
    sigma_ = needs_sigma ? make_sigma(kept) : FrameRateEmbedding{};

    // Patterns from the previous frame, then move every trajectory forward.
    std::vector<TrackingPattern> patterns;
    patterns.reserve(trajectories_.size());
    for (auto& t : trajectories_) {
        patterns.push_back(t.pattern(frame_ - 1));
        t.kalman = t.next.state;
    }

    auto subset = [&](const std::vector<int>& idx, std::vector<Detection>& dets, std::vector<Embedding>& embs) {
        for (int i : idx) {
            dets.push_back(kept.detections[static_cast<std::size_t>(i)]);
            embs.push_back(kept.embeddings[static_cast<std::size_t>(i)]);
        }
    };

    // Stage 1: every trajectory against high-confidence detections.
    std::vector<Detection> high_dets;
    std::vector<Embedding> high_embs;
    subset(high, high_dets, high_embs);
    const StageResult s1 = stage_match(patterns, high_dets, high_embs, model_, sigma_, config_.score_gate,
                                       width_, height_);
    std::vector<bool> matched(trajectories_.size(), false);
    for (const auto& [ti, di] : s1.matches) {
        const auto d = static_cast<std::size_t>(high[static_cast<std::size_t>(di)]);
        update_trajectory(trajectories_[static_cast<std::size_t>(ti)], kept.detections[d], kept.embeddings[d],
                          kept.oracle_ids[d], 1);
        matched[static_cast<std::size_t>(ti)] = true;
    }

    // Stage 2: leftover trajectories against low-confidence detections.
    std::vector<TrackingPattern> leftover_patterns;
    for (int ti : s1.unmatched_trajectories) leftover_patterns.push_back(patterns[static_cast<std::size_t>(ti)]);
    std::vector<Detection> low_dets;
    std::vector<Embedding> low_embs;
    subset(low, low_dets, low_embs);
    const StageResult s2 = stage_match(leftover_patterns, low_dets, low_embs, model_, sigma_, config_.score_gate,
                                       width_, height_);
    for (const auto& [li, di] : s2.matches) {
        const auto ti = static_cast<std::size_t>(s1.unmatched_trajectories[static_cast<std::size_t>(li)]);
        const auto d = static_cast<std::size_t>(low[static_cast<std::size_t>(di)]);
        update_trajectory(trajectories_[ti], kept.detections[d], kept.embeddings[d], kept.oracle_ids[d], 2);
        matched[ti] = true;
    }

    for (std::size_t i = 0; i < trajectories_.size(); ++i) {
        if (!matched[i]) {
            auto& t = trajectories_[i];
            ++t.missing_count;
            t.last_box = t.kalman.box();
        }
    }
    std::vector<Trajectory> alive;
    alive.reserve(trajectories_.size());
    for (auto& t : trajectories_) {
        if (t.missing_count <= config_.max_missing) alive.push_back(std::move(t));
    }
    trajectories_ = std::move(alive);

    // Unmatched high-confidence detections start new trajectories.
    for (int di : s1.unmatched_detections) {
        const auto d = static_cast<std::size_t>(high[static_cast<std::size_t>(di)]);
        start_trajectory(kept.detections[d], kept.embeddings[d], kept.oracle_ids[d]);
    }

    for (auto& t : trajectories_) t.next = kf_predict(t.kalman, config_.kalman);
    previous_ = kept;

    std::sort(emitted_.begin(), emitted_.end(),
              [](const TrackBox& a, const TrackBox& b) { return a.identity < b.identity; });
    return emitted_;
}

std::vector<TrackingPattern> Tracker::patterns() const {
    std::vector<TrackingPattern> out;
    out.reserve(trajectories_.size());
    for (const auto& t : trajectories_) {
        TrackingPattern p = t.pattern(frame_);
        p.sampling_k = sampling_k_;
        out.push_back(std::move(p));
    }
    return out;
}

TrackingOutput track_sequence(const std::vector<FrameDetections>& frames, const AssociationModel& model,
                              const TrackerConfig& config, double effective_fps, int image_width, int image_height,
                              int sampling_k) {
    Tracker tracker(model, config, effective_fps, image_width, image_height, sampling_k);
    TrackingOutput out;
    out.patterns.reserve(frames.size());
    for (const auto& f : frames) {
        const auto boxes = tracker.step(f);
        out.result.boxes.insert(out.result.boxes.end(), boxes.begin(), boxes.end());
        out.patterns.push_back(tracker.patterns());
    }
    out.result.normalize();
    return out;
}

}  // namespace framot
