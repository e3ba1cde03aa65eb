#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "framot/association.hpp"
#include "framot/benchmark.hpp"
#include "framot/faam.hpp"
#include "framot/tracker.hpp"

namespace framot {

struct PatternKey {
    std::string sequence;
    int k = 1;
    int offset = 1;
    int frame = 1;  // frame index within the strided video

    friend auto operator<=>(const PatternKey&, const PatternKey&) = default;
};

/// Tracking patterns of one period, keyed by video frame.
class PatternStore {
public:
    void insert(PatternKey key, std::vector<TrackingPattern> patterns);
    /// nullptr when the frame was never recorded.
    const std::vector<TrackingPattern>* find(const PatternKey& key) const;

    std::size_t frame_count() const noexcept { return entries_.size(); }
    std::size_t pattern_count() const noexcept;
    bool empty() const noexcept { return entries_.empty(); }
    const std::map<PatternKey, std::vector<TrackingPattern>>& entries() const noexcept { return entries_; }

    /// Binary cache: "FRAPTS01" followed by little-endian records.
    std::string serialize() const;
    static PatternStore deserialize(const std::string& bytes);
    void save(const std::filesystem::path& path) const;
    static PatternStore load(const std::filesystem::path& path);

    friend bool operator==(const PatternStore& a, const PatternStore& b);

private:
    std::map<PatternKey, std::vector<TrackingPattern>> entries_;
};

/// Runs the tracker with `model` over every benchmark video and stores the
/// per-frame patterns of its live trajectories.
PatternStore generate_patterns(const AssociationModel& model, const Benchmark& benchmark,
                               const TrackerConfig& config, int jobs);

struct TrainConfig {
    double learning_rate = 0.01;           // lambda_A
    int steps_per_period = 2000;           // tau
    double beta = 1.0;
    double extractor_learning_rate = 0.0;  // lambda_E; no effect, the extractor is synthetic
    std::uint64_t seed = 0;                // network initialisation

    void validate() const;
};

struct PtsConfig {
    int periods = 3;  // N_p
    std::vector<int> k_set = kDefaultKSet;
    std::uint64_t seed = 0;  // pair sampling
    /// When false, pairs are built from raw detections of both frames
    /// (conventional frame-pair training) and no patterns are generated.
    bool use_patterns = true;

    void validate() const;
};

struct PeriodLog {
    int period = 0;
    int steps = 0;
    int trained_steps = 0;  // steps with at least one counted pair
    int skipped_pairs = 0;  // sampled frames missing from the store
    std::size_t pattern_frames = 0;
    std::size_t pattern_count = 0;
    std::vector<double> losses;

    double mean_loss() const;
    /// Trailing moving average over `window` steps; empty when fewer losses.
    std::vector<double> moving_average(int window) const;
    std::string to_json() const;
};

struct PtsResult {
    FaamParams params;
    std::vector<PeriodLog> periods;
};

/// One sampled training pair.
struct TrainingPair {
    std::size_t video = 0;
    int frame = 1;  // earlier frame T; the pair is (T, T + 1) within the video
};

/// Draws a pair: sequence, then k, then offset, then frame, each uniformly.
/// nullopt when no video of the requested k values has two frames.
std::optional<TrainingPair> sample_pair(const Benchmark& benchmark, const std::vector<int>& k_set,
                                        std::mt19937_64& rng);

/// Frame-rate embedding for a pair, built as the tracker would build it at
/// frame T + 1.
FrameRateEmbedding pair_sigma(const BenchmarkVideo& video, int frame, const FrameDetections& previous,
                              const FrameDetections& current, const TrackerConfig& config);

/// Z and labels for a pair, fused with the store's patterns of frame T, or
/// from raw detections when `store` is null. nullopt when the store has no
/// entry for frame T.
std::optional<TrainingAffinity> pair_affinity(const Benchmark& benchmark, const TrainingPair& pair,
                                              const PatternStore* store, const TrackerConfig& config);

/// Periodic training: each period regenerates the patterns with the previous
/// model (the trivial scorer first) and takes `steps_per_period` SGD steps.
/// `on_period` is called after each period, `on_patterns` after each
/// pattern generation.
PtsResult run_pts(const PtsConfig& pts, const Benchmark& benchmark, const TrainConfig& train,
                  const TrackerConfig& tracker, const FaamShape& shape, int jobs,
                  const std::function<void(const PeriodLog&)>& on_period = {},
                  const std::function<void(int, const PatternStore&)>& on_patterns = {});

/// Affinity scatter rows "norm_dist,iou,cos_sim,level,label,pts_flag" for
/// `samples` pairs, built from the store's patterns (pts_flag 1) or from
/// raw detections (pts_flag 0). Masked pairs are omitted.
std::string affinity_scatter(const Benchmark& benchmark, const PatternStore* store, const std::vector<int>& k_set,
                             int samples, std::uint64_t seed, const TrackerConfig& config, bool header = true);

}  // namespace framot
