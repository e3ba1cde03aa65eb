#pragma once

#include <Eigen/Core>

#include "framot/mot_io.hpp"

namespace framot {

/// Noise levels scale with box height, as in the usual (cx, cy, a, h)
/// constant-velocity tracker filter.
struct KalmanConfig {
    double std_weight_position = 1.0 / 20.0;
    double std_weight_velocity = 1.0 / 160.0;
    double min_height = 1.0;  // coasting tracks never shrink below this
};

/// State (cx, cy, a = w/h, h, and their velocities) with its covariance.
struct KalmanState {
    using Vector8 = Eigen::Matrix<double, 8, 1>;
    using Matrix8 = Eigen::Matrix<double, 8, 8>;

    Vector8 mean = Vector8::Zero();
    Matrix8 covariance = Matrix8::Identity();

    BoundingBox box() const;
};

struct KalmanPrediction {
    KalmanState state;
    BoundingBox predicted_box;
    /// predicted_box minus the box of the input state.
    BoxOffset offset;
};

KalmanState kf_init(const BoundingBox& box, const KalmanConfig& config = {});
KalmanPrediction kf_predict(const KalmanState& state, const KalmanConfig& config = {});

/// Standard correction with a (cx, cy, a, h) measurement. Throws
/// ValidationError for a box with non-positive height or width.
KalmanState kf_update(const KalmanState& state, const BoundingBox& measurement, const KalmanConfig& config = {});

}  // namespace framot
