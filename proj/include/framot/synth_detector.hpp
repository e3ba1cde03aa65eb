#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "framot/detection.hpp"
#include "framot/mot_io.hpp"

namespace framot {

/// Corruption applied by the synthetic extractor. All-zero jitter/miss/fp
/// reproduces the ground truth exactly.
struct NoiseModel {
    double center_jitter = 0.05;  // std of center shift, as a fraction of box size
    double size_jitter = 0.05;    // std of log-scale size change
    double miss_prob = 0.1;
    double fp_rate = 1.0;  // expected false positives per frame
    double conf_true_mean = 0.8;
    double conf_true_std = 0.15;
    double conf_false_mean = 0.3;
    double conf_false_std = 0.15;
    double embed_noise = 0.25;  // per-dimension std added before renormalization
    // Slow appearance change: per-identity offset interpolated between
    // independent anchors drawn every drift_period frames (per-dimension std).
    double embed_drift = 0.0;
    int drift_period = 50;
    double fp_min_width = 40.0;
    double fp_max_width = 110.0;
    double fp_aspect = 0.41;  // w / h of false boxes

    void validate() const;
    static NoiseModel zero();
};

inline constexpr double kMinConfidence = 0.05;
inline constexpr double kMaxConfidence = 1.0;

using IdentityBank = std::map<int, Embedding>;

/// Seeded unit vectors, one per identity. Each identity's vector depends only
/// on (seed, identity, d_embed). Throws ValidationError when d_embed < 2.
IdentityBank make_identity_bank(const std::vector<int>& identities, int d_embed, std::uint64_t seed);

/// Appearance drift offset of an identity at a frame (zero when
/// embed_drift is 0). Depends only on (seed, identity, frame, model).
Embedding drift_offset(const NoiseModel& model, std::uint64_t seed, int identity, int frame, Eigen::Index dim);

/// Noisy detections for one frame. The random stream is derived from
/// (seed, frame), so frames can be generated independently. True embeddings
/// are normalize(bank[id] + drift + noise).
FrameDetections detect_frame(const std::vector<GtEntry>& gt_boxes, const NoiseModel& model,
                             const IdentityBank& bank, std::uint64_t seed, int frame, int image_width,
                             int image_height);

/// detect_frame over every frame of a sequence; index 0 is frame 1.
std::vector<FrameDetections> detect_sequence(const Sequence& sequence, const NoiseModel& model,
                                             const IdentityBank& bank, std::uint64_t seed);

/// Parameters of the synthetic pedestrian-like scenes used for training and
/// evaluation.
struct SceneConfig {
    int length = 600;
    double fps = 25.0;
    int width = 1920;
    int height = 1080;
    int concurrent = 14;           // objects alive at any time
    int min_lifetime = 300;        // frames
    int max_lifetime = 900;
    int birth_gap = 35;            // frames after a disappearance before new objects may appear
    double min_width = 45.0;       // box width range in pixels
    double max_width = 100.0;
    double aspect = 0.41;          // w / h
    double min_speed = 1.0;        // pixels per frame at the source rate
    double max_speed = 5.0;
    double heading_noise = 0.06;   // radians per frame, random walk
    double speed_noise = 0.08;     // pixels per frame, mean-reverting
    double scale_noise = 0.002;    // log-size random walk per frame
};

/// Generates one synthetic sequence. Objects bounce off the image borders, so
/// boxes always lie inside the image. When objects reach the end of their
/// lifetime they vanish; the population is refilled once `birth_gap` frames
/// have passed without a disappearance.
Sequence make_synthetic_sequence(const SceneConfig& config, std::uint64_t seed, std::string name);

/// Sidecar embedding file: "FRAEMB01", u32 count, u32 dim, then count*dim
/// little-endian float32 values, row-major.
void write_embeddings(const std::filesystem::path& path, const std::vector<Embedding>& rows);
std::vector<Embedding> read_embeddings(const std::filesystem::path& path);

/// Writes det.txt and det.emb for all frames (frame-major order).
void save_detections(const std::filesystem::path& det_dir, const std::vector<FrameDetections>& frames);

/// Inverse of save_detections. Embeddings are renormalized after the float32
/// round trip; oracle ids are kUnknownIdentity.
std::vector<FrameDetections> load_detections(const std::filesystem::path& det_dir, int length);

}  // namespace framot
