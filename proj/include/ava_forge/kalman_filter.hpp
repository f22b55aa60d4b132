// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <array>
#include <vector>

#include "ava_forge/core_model.hpp"

namespace ava {

/// Constant-velocity box filter over [u, v, gamma, h, du, dv, dgamma, dh]:
/// (u, v) box center, gamma = width / height, h height, all in normalized
/// image units; one time step is one keyframe.
template <typename Scalar>
struct KalmanState {
    using Mean = Eigen::Matrix<Scalar, 8, 1>;
    using Covariance = Eigen::Matrix<Scalar, 8, 8>;
    Mean mean;
    Covariance covariance;
};

template <typename Scalar>
using Measurement = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar>
struct KalmanWeights {
    static constexpr Scalar position = Scalar(1) / Scalar(20);
    static constexpr Scalar velocity = Scalar(1) / Scalar(160);
};

/// 0.95 quantile of the chi-square distribution with 4 degrees of freedom.
inline constexpr double kChi2Gate4Dof = 9.4877;

template <typename Scalar>
Eigen::Matrix<Scalar, 8, 8> motion_matrix() {
    Eigen::Matrix<Scalar, 8, 8> F = Eigen::Matrix<Scalar, 8, 8>::Identity();
    F.template topRightCorner<4, 4>().setIdentity();
    return F;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 8> observation_matrix() {
    Eigen::Matrix<Scalar, 4, 8> H = Eigen::Matrix<Scalar, 4, 8>::Zero();
    H.template leftCols<4>().setIdentity();
    return H;
}

template <typename Scalar>
Measurement<Scalar> to_measurement(const BoundingBox& b) {
    Measurement<Scalar> z;
    z << Scalar((b.x1() + b.x2()) / 2), Scalar((b.y1() + b.y2()) / 2), Scalar(b.width() / b.height()),
        Scalar(b.height());
    return z;
}

/// Corner form [x1, y1, x2, y2] of a state's box; may leave the unit square.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> state_corners(const KalmanState<Scalar>& s) {
    const Scalar h = s.mean[3];
    const Scalar w = s.mean[2] * h;
    Eigen::Matrix<Scalar, 4, 1> c;
    c << s.mean[0] - w / 2, s.mean[1] - h / 2, s.mean[0] + w / 2, s.mean[1] + h / 2;
    return c;
}

template <typename Scalar>
KalmanState<Scalar> kalman_initiate(const Measurement<Scalar>& z) {
    if (!(z[3] > Scalar(0)) || !(z[2] > Scalar(0)))
        throw Error(ErrorKind::InvalidArgument, "kalman_initiate: height and aspect ratio must be positive");
    using W = KalmanWeights<Scalar>;
    const Scalar h = z[3];
    KalmanState<Scalar> s;
    s.mean << z, Eigen::Matrix<Scalar, 4, 1>::Zero();
    Eigen::Matrix<Scalar, 8, 1> sd;
    sd << 2 * W::position * h, 2 * W::position * h, Scalar(1e-2), 2 * W::position * h,  //
        10 * W::velocity * h, 10 * W::velocity * h, Scalar(1e-5), 10 * W::velocity * h;
    s.covariance = sd.array().square().matrix().asDiagonal();
    return s;
}

template <typename Scalar>
KalmanState<Scalar> kalman_predict(const KalmanState<Scalar>& s) {
    using W = KalmanWeights<Scalar>;
    const Scalar h = s.mean[3];
    Eigen::Matrix<Scalar, 8, 1> sd;
    sd << W::position * h, W::position * h, Scalar(1e-2), W::position * h,  //
        W::velocity * h, W::velocity * h, Scalar(1e-5), W::velocity * h;
    const auto F = motion_matrix<Scalar>();
    KalmanState<Scalar> out;
    out.mean = F * s.mean;
    out.covariance = F * s.covariance * F.transpose();
    out.covariance.diagonal() += sd.array().square().matrix();
    return out;
}

/// Projected mean and innovation covariance S = H P H^T + R.
template <typename Scalar>
std::pair<Measurement<Scalar>, Eigen::Matrix<Scalar, 4, 4>> kalman_project(const KalmanState<Scalar>& s) {
    using W = KalmanWeights<Scalar>;
    const Scalar h = s.mean[3];
    Measurement<Scalar> sd;
    sd << W::position * h, W::position * h, Scalar(1e-1), W::position * h;
    const auto H = observation_matrix<Scalar>();
    Eigen::Matrix<Scalar, 4, 4> S = H * s.covariance * H.transpose();
    S.diagonal() += sd.array().square().matrix();
    return {H * s.mean, S};
}

template <typename Scalar>
KalmanState<Scalar> kalman_update(const KalmanState<Scalar>& s, const Measurement<Scalar>& z) {
    const auto [projected, S] = kalman_project(s);
    const Eigen::LLT<Eigen::Matrix<Scalar, 4, 4>> llt(S);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::Numerical, "kalman_update: innovation covariance is not positive definite");
    const auto H = observation_matrix<Scalar>();
    // K = P H^T S^-1, solved as S K^T = H P.
    const Eigen::Matrix<Scalar, 8, 4> K = llt.solve(H * s.covariance).transpose();
    KalmanState<Scalar> out;
    out.mean = s.mean + K * (z - projected);
    out.covariance = s.covariance - K * S * K.transpose();
    out.covariance = (out.covariance + out.covariance.transpose()) / Scalar(2);
    return out;
}

/// Squared Mahalanobis distance of each measurement from the projected state.
template <typename Scalar>
std::vector<Scalar> gating_distance(const KalmanState<Scalar>& s, const std::vector<Measurement<Scalar>>& zs) {
    const auto [projected, S] = kalman_project(s);
    const Eigen::LLT<Eigen::Matrix<Scalar, 4, 4>> llt(S);
    std::vector<Scalar> out;
    out.reserve(zs.size());
    for (const auto& z : zs) {
        const Measurement<Scalar> d = z - projected;
        const Measurement<Scalar> y = llt.matrixL().solve(d);
        out.push_back(y.squaredNorm());
    }
    return out;
}

}  // namespace ava
