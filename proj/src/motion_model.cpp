#include "framot/motion_model.hpp"

#include <Eigen/Cholesky>
#include <algorithm>

#include "framot/error.hpp"

namespace framot {

namespace {

using Vector4 = Eigen::Matrix<double, 4, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;

Vector4 measurement_of(const BoundingBox& b) { return {b.cx(), b.cy(), b.w / b.h, b.h}; }

void symmetrize(KalmanState::Matrix8& p) { p = 0.5 * (p + p.transpose()).eval(); }

}  // namespace

BoundingBox KalmanState::box() const {
    const double h = mean[3];
    const double w = mean[2] * h;
    return BoundingBox::from_center(mean[0], mean[1], w, h);
}

KalmanState kf_init(const BoundingBox& box, const KalmanConfig& config) {
    if (!box.valid()) throw ValidationError("kf_init: invalid box");
    KalmanState s;
    s.mean.head<4>() = measurement_of(box);
    s.mean.tail<4>().setZero();

    const double h = box.h;
    const double p = config.std_weight_position;
    const double v = config.std_weight_velocity;
    KalmanState::Vector8 std;
    std << 2 * p * h, 2 * p * h, 1e-2, 2 * p * h, 10 * v * h, 10 * v * h, 1e-5, 10 * v * h;
    s.covariance = std.array().square().matrix().asDiagonal();
    return s;
}

KalmanPrediction kf_predict(const KalmanState& state, const KalmanConfig& config) {
    KalmanState::Matrix8 transition = KalmanState::Matrix8::Identity();
    for (int i = 0; i < 4; ++i) transition(i, i + 4) = 1.0;

    const double h = state.mean[3];
    const double p = config.std_weight_position;
    const double v = config.std_weight_velocity;
    KalmanState::Vector8 std;
    std << p * h, p * h, 1e-2, p * h, v * h, v * h, 1e-5, v * h;

    KalmanPrediction out;
    out.state.mean = transition * state.mean;
    out.state.covariance = transition * state.covariance * transition.transpose();
    out.state.covariance.diagonal() += std.array().square().matrix();
    symmetrize(out.state.covariance);

    // Keep coasting boxes well-formed.
    if (out.state.mean[3] < config.min_height) {
        out.state.mean[3] = config.min_height;
        out.state.mean[7] = 0.0;
    }
    if (out.state.mean[2] < 1e-3) {
        out.state.mean[2] = 1e-3;
        out.state.mean[6] = 0.0;
    }

    out.predicted_box = out.state.box();
    out.offset = out.predicted_box - state.box();
    return out;
}

KalmanState kf_update(const KalmanState& state, const BoundingBox& measurement, const KalmanConfig& config) {
    if (!(measurement.h > 0.0) || !(measurement.w > 0.0)) {
        throw ValidationError("kf_update: non-positive box size");
    }
    const double h = state.mean[3];
    const double p = config.std_weight_position;
    Vector4 std{p * h, p * h, 1e-1, p * h};

    const Eigen::Matrix<double, 4, 8> proj = state.covariance.topRows<4>();
    Matrix4 innovation_cov = state.covariance.topLeftCorner<4, 4>();
    innovation_cov.diagonal() += std.array().square().matrix();

    const Eigen::LLT<Matrix4> llt(innovation_cov);
    // gain = P H^T S^-1, computed as (S^-1 H P)^T
    const Eigen::Matrix<double, 8, 4> gain = llt.solve(proj).transpose();
    const Vector4 innovation = measurement_of(measurement) - state.mean.head<4>();

    KalmanState out;
    out.mean = state.mean + gain * innovation;
    out.covariance = state.covariance - gain * innovation_cov * gain.transpose();
    symmetrize(out.covariance);
    return out;
}

}  // namespace framot
