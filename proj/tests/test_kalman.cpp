// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "ava_forge/kalman_filter.hpp"
#include "oracles.hpp"

using namespace ava;
using namespace ava::testing;
using State = KalmanState<double>;
using Meas = Measurement<double>;

namespace {

Meas meas(double u, double v, double a, double h) { return Meas(u, v, a, h); }

}  // namespace

TEST_CASE("initiate") {
    const auto s = kalman_initiate(meas(0.5, 0.5, 0.5, 0.2));
    Eigen::Matrix<double, 8, 1> expected;
    expected << 0.5, 0.5, 0.5, 0.2, 0, 0, 0, 0;
    CHECK(s.mean == expected);
    CHECK(s.covariance(0, 0) == doctest::Approx(4e-4).epsilon(1e-12));
    CHECK(s.covariance(2, 2) == doctest::Approx(1e-4));
    CHECK(s.covariance(4, 4) == doctest::Approx(std::pow(10.0 / 160 * 0.2, 2)));
    CHECK(s.covariance(6, 6) == doctest::Approx(1e-10));
    CHECK((s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.covariance.diagonal().minCoeff() > 0.0);
    CHECK_THROWS_AS(kalman_initiate(meas(0.5, 0.5, 0.5, 0.0)), Error);
    CHECK_THROWS_AS(kalman_initiate(meas(0.5, 0.5, -1.0, 0.2)), Error);
}

TEST_CASE("predict") {
    auto s = kalman_initiate(meas(0.5, 0.4, 0.5, 0.2));
    const auto p = kalman_predict(s);
    CHECK(p.mean.head<4>() == s.mean.head<4>());
    CHECK(p.covariance.trace() > s.covariance.trace());
    s.mean[4] = 0.1;
    CHECK(kalman_predict(s).mean[0] == doctest::Approx(0.6));
    CHECK(kalman_predict(s).mean[1] == doctest::Approx(0.4));
}

TEST_CASE("update") {
    const auto prior = kalman_predict(kalman_initiate(meas(0.5, 0.5, 0.5, 0.2)));
    const auto same = kalman_update(prior, Meas(prior.mean.head<4>()));
    CHECK((same.mean - prior.mean).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(same.covariance(0, 0) < prior.covariance(0, 0));
    CHECK(same.covariance(3, 3) < prior.covariance(3, 3));
}

TEST_CASE("predict + update matches frozen numpy values") {
    // Frozen from a numpy script applying x = F x, P = F P F^T + Q, then
    // K = P H^T inv(S), x += K (z - H x), P -= K S K^T to this exact case.
    auto s = kalman_initiate(meas(0.5, 0.5, 0.5, 0.2));
    s.mean[4] = 0.01;
    s.mean[7] = -0.002;
    const auto post = kalman_update(kalman_predict(s), meas(0.52, 0.49, 0.55, 0.21));
    const double mean[8] = {0.5187005807016148,  0.49129941929838516,  0.5009803926374471,    0.20844069684193778,
                            0.012071566833717818, -0.002071566833717818, 4.901960736255291e-10, 0.00048588020046137553};
    const double diag[8] = {8.527439145652679e-05,  8.527439145652679e-05,  0.00019607852748942622,
                            8.527439145652679e-05,  0.00012544426822315915, 0.00012544426822315915,
                            1.999999990196079e-10, 0.00012544426822315915};
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(post.mean[i] - mean[i]) < 1e-9);
        CHECK(std::abs(post.covariance(i, i) - diag[i]) < 1e-9);
    }
    CHECK(std::abs(post.covariance(0, 4) - 2.0303426537268286e-05) < 1e-9);
    CHECK(std::abs(post.covariance(3, 7) - 2.0303426537268286e-05) < 1e-9);
}

TEST_CASE("predict + update matches the dense-matrix route") {
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> u(0.2, 0.8), h(0.05, 0.6), jitter(-0.02, 0.02);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = kalman_initiate(meas(u(rng), u(rng), u(rng), h(rng)));
        auto d = s;
        for (int step = 0; step < 5; ++step) {
            const Meas z = Meas(s.mean.head<4>()) + Meas(jitter(rng), jitter(rng), jitter(rng), jitter(rng) / 4);
            s = kalman_update(kalman_predict(s), z);
            d = dense_update(dense_predict(d), z);
            REQUIRE((s.mean - d.mean).cwiseAbs().maxCoeff() < 1e-9);
            REQUIRE((s.covariance - d.covariance).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("gating distance") {
    const auto s = kalman_predict(kalman_initiate(meas(0.5, 0.5, 0.5, 0.2)));
    const auto zero = gating_distance(s, {Meas(s.mean.head<4>())});
    CHECK(zero[0] == doctest::Approx(0.0));
    // Frozen from the same numpy case as above: d^T inv(S) d for z = (0.52, 0.49, 0.55, 0.21).
    auto v = kalman_initiate(meas(0.5, 0.5, 0.5, 0.2));
    v.mean[4] = 0.01;
    v.mean[7] = -0.002;
    const auto frozen = gating_distance(kalman_predict(v), {meas(0.52, 0.49, 0.55, 0.21)});
    CHECK(std::abs(frozen[0] - 0.701174190924079) < 1e-9);
    // scipy.stats.chi2.ppf(0.95, 4) = 9.487729036781154
    CHECK(std::abs(kChi2Gate4Dof - 9.487729036781154) < 1e-3);

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    std::vector<Meas> zs;
    for (int i = 0; i < 500; ++i) zs.push_back(meas(u(rng), u(rng), u(rng), u(rng)));
    for (double d : gating_distance(s, zs)) CHECK(d >= 0.0);
}

TEST_CASE("covariance stays symmetric PSD over long random runs") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> u(0.1, 0.9), h(0.05, 0.7), noise(-0.03, 0.03);
    auto s = kalman_initiate(meas(0.5, 0.5, 0.5, 0.3));
    double worst_asym = 0.0, worst_eig = 1.0;
    for (int cycle = 0; cycle < 1000; ++cycle) {
        if (cycle % 100 == 0) s = kalman_initiate(meas(u(rng), u(rng), u(rng), h(rng)));
        s = kalman_predict(s);
        const double hh = std::max(0.02, s.mean[3] + noise(rng) / 3);
        s = kalman_update(s, meas(s.mean[0] + noise(rng), s.mean[1] + noise(rng), std::max(0.05, s.mean[2] + noise(rng)), hh));
        worst_asym = std::max(worst_asym, (s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff());
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> eig(s.covariance);
        worst_eig = std::min(worst_eig, eig.eigenvalues().minCoeff());
    }
    CHECK(worst_asym < 1e-9);
    CHECK(worst_eig > -1e-9);
}

TEST_CASE("single precision instantiation") {
    const auto s = kalman_update(kalman_predict(kalman_initiate(Measurement<float>(0.5f, 0.5f, 0.5f, 0.2f))),
                                 Measurement<float>(0.51f, 0.5f, 0.5f, 0.2f));
    CHECK(s.mean[0] > 0.5f);
    CHECK(s.mean[0] < 0.51f);
}
