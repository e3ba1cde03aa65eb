#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "framot/association.hpp"
#include "framot/detection.hpp"

namespace framot {

// ---------------------------------------------------------------------------
// Frame-rate encoders

enum class RateSource { known, ibdv, none };

struct FrameRateEmbedding {
    Eigen::VectorXd values;
    RateSource source = RateSource::known;
};

inline constexpr double kDefaultRateScale = 6.0;
inline constexpr int kDefaultEmbeddingLength = 128;  // 32 * D_a

/// sigma_i = cos(i * scale * fps / length), i = 0 .. length-1.
FrameRateEmbedding encode_known(double fps, double scale = kDefaultRateScale, int length = kDefaultEmbeddingLength);

enum class IbdvCriterion { dist, sim, random };

IbdvCriterion parse_ibdv_criterion(const std::string& name);
const char* to_string(IbdvCriterion c);

/// Inter-frame best-matched distance vector. Pairs are chosen by minimum
/// total centre distance (dist), maximum total cosine similarity (sim), or a
/// seeded random pairing (random). The normalized centre distances of the
/// pairs are sorted ascending and linearly resampled to `length` values.
/// A single pair extends as a constant; no pairs gives all ones.
FrameRateEmbedding encode_ibdv(const FrameDetections& previous, const FrameDetections& current,
                               IbdvCriterion criterion, int length, double image_width, double image_height,
                               std::uint64_t seed = 0);

/// Constant embedding carrying no frame-rate information (unified-model
/// baseline).
FrameRateEmbedding encode_blind(int length = kDefaultEmbeddingLength);

/// Resamples sorted values to `length` points by linear interpolation over
/// evenly spaced positions.
Eigen::VectorXd interpolate_sorted(const std::vector<double>& sorted_values, int length);

// ---------------------------------------------------------------------------
// Network

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

struct FaamShape {
    int affinity_dim = kAffinityDim;
    int embedding_length = kDefaultEmbeddingLength;
    std::vector<int> affinity_hidden{64, 64, 64};
    std::vector<int> attention_hidden{96, 80};
    int channels = 16 * kAffinityDim;
};

/// Affinity sub-net (D_a -> ... -> channels) and frame-rate attention sub-net
/// (embedding_length -> ... -> channels). Hidden layers use ReLU, output
/// layers are linear.
struct FaamParams {
    std::vector<DenseLayer> affinity;
    std::vector<DenseLayer> attention;

    /// Glorot-uniform weights, zero biases.
    static FaamParams init(const FaamShape& shape, std::uint64_t seed);

    int embedding_length() const { return attention.empty() ? 0 : static_cast<int>(attention.front().weight.cols()); }
    int channels() const { return affinity.empty() ? 0 : static_cast<int>(affinity.back().weight.rows()); }

    std::size_t parameter_count() const;
    /// Layer-by-layer: weights row-major, then biases; affinity before attention.
    std::vector<double> flatten() const;
    void assign(const std::vector<double>& flat);
    double& parameter(std::size_t index);

    /// Zero-valued parameters of the same shape.
    FaamParams zeros_like() const;
    void axpy(double alpha, const FaamParams& other);  // this += alpha * other

    friend bool operator==(const FaamParams& a, const FaamParams& b);
};

struct FaamForward {
    Eigen::MatrixXd scores;          // rows x cols, logistic of raw
    Eigen::VectorXd raw;             // per pair
    Eigen::VectorXd attention;       // softmax weights, length = channels
    // Activations kept for backpropagation.
    std::vector<Eigen::MatrixXd> affinity_pre, affinity_act;  // per layer, (units x pairs)
    std::vector<Eigen::VectorXd> attention_pre, attention_act;
    Eigen::MatrixXd input;           // D_a x pairs
};

/// Full forward pass with cached activations. Throws ValidationError on a
/// shape mismatch.
FaamForward faam_forward(const AffinityMatrix& z, const FrameRateEmbedding& sigma, const FaamParams& params);

/// Scores only.
Eigen::MatrixXd faam_scores(const AffinityMatrix& z, const FrameRateEmbedding& sigma, const FaamParams& params);

struct LossAndGradient {
    double loss = 0.0;
    std::size_t counted_pairs = 0;
    FaamParams gradient;
};

/// beta * mean binary cross-entropy over unmasked pairs and its exact
/// gradient with respect to every parameter.
LossAndGradient faam_loss_and_gradient(const AffinityMatrix& z, const FrameRateEmbedding& sigma,
                                       const PairLabels& labels, const FaamParams& params, double beta);

/// One SGD step; returns the pre-update loss. No-op with loss 0 when every
/// pair is masked.
double train_step(const AffinityMatrix& z, const FrameRateEmbedding& sigma, const PairLabels& labels,
                  FaamParams& params, double learning_rate, double beta);

void save_checkpoint(const std::filesystem::path& path, const FaamParams& params);
FaamParams load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Association models usable by the tracker

/// Hand-crafted period-0 scorer: w_iou * iou + w_sim * (cos_sim + 1) / 2.
struct TrivialAssociation {
    double w_iou = 0.5;
    double w_sim = 0.5;
};

Eigen::MatrixXd trivial_score(const AffinityMatrix& z, const TrivialAssociation& weights = {});

using AssociationModel = std::variant<TrivialAssociation, FaamParams>;

Eigen::MatrixXd score_pairs(const AssociationModel& model, const AffinityMatrix& z, const FrameRateEmbedding& sigma);

}  // namespace framot
