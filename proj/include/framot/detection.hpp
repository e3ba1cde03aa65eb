#pragma once

#include <Eigen/Core>
#include <vector>

#include "framot/mot_io.hpp"

namespace framot {

/// Unit-norm appearance vector (stand-in for a Re-ID feature).
using Embedding = Eigen::VectorXd;

/// Oracle label for a detection that matches no ground-truth object.
inline constexpr int kFalseIdentity = 0;
/// Oracle label for detections ingested from files (no ground truth attached).
inline constexpr int kUnknownIdentity = -1;

struct Detection {
    BoundingBox box;
    double confidence = 1.0;
};

/// Everything the extractor reports for one frame. The three vectors are
/// parallel.
struct FrameDetections {
    std::vector<Detection> detections;
    std::vector<Embedding> embeddings;
    std::vector<int> oracle_ids;

    std::size_t size() const noexcept { return detections.size(); }
    bool empty() const noexcept { return detections.empty(); }
    void push_back(const Detection& d, Embedding e, int oracle_id) {
        detections.push_back(d);
        embeddings.push_back(std::move(e));
        oracle_ids.push_back(oracle_id);
    }
};

/// Returns v / |v|; a zero vector is returned unchanged.
inline Embedding normalized(const Embedding& v) {
    const double n = v.norm();
    return n > 0.0 ? Embedding(v / n) : v;
}

/// Keeps only detections with confidence >= threshold, preserving order.
FrameDetections filter_by_confidence(const FrameDetections& frame, double threshold);

}  // namespace framot
