#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "jpo/autodiff/ops.hpp"

namespace jpo::prob {

// ---- wave packet --------------------------------------------------------

struct WavepacketConfig {
    std::size_t samples = 256;
    double envelope = 10.0;  // s in exp(-(t - t0)^2 / (2 s^2))
    double carrier = 1.0;    // ω0 in sin(ω0 (t - t0))
    double t0_min = 26.0;
    double t0_max = 230.0;
    double noise = 0.1;
};

/// w(t; t0) at t = 1..samples. t0 has shape (B, 1); result (B, samples).
ad::Value wavepacket_forward(const ad::Value& t0, const WavepacketConfig& cfg = {});
std::vector<double> wavepacket_signal(double t0, const WavepacketConfig& cfg = {});

// ---- billiards ----------------------------------------------------------

struct BilliardsConfig {
    double radius = 0.2;
    double elasticity = 0.8;
    double friction = 0.5;  // speed decays as exp(-friction t)
    double cue_x = 0.0;
    double cue_y = 0.5;
    double target_x = 2.0;
    double target_y = 0.5;
};

struct BilliardsOutcome {
    ad::Value cue_final;    // (2)
    ad::Value ball2_final;  // (2)
    bool collided = false;
    double contact_s = 0.0;  // (1 - e^{-μ t}) / μ at first contact
};

/// Cue ball shot with velocity v0 (shape (2)) at a resting ball at `ball2`;
/// both balls roll to rest. Without a collision the outputs are constants.
BilliardsOutcome billiards_forward(const ad::Value& v0, double ball2_x, double ball2_y, const BilliardsConfig& cfg = {});
/// Cue velocity that sends ball 2 exactly to the target (the ground truth).
std::vector<double> billiards_exact_velocity(double ball2_x, double ball2_y, const BilliardsConfig& cfg = {});

// ---- Kuramoto-Sivashinsky -----------------------------------------------

struct KsConfig {
    std::size_t resolution = 128;
    double length = 0.0;  // 0 means 32π
    double dt = 0.25;
    std::size_t steps = 100;
    double guard = 1e6;

    [[nodiscard]] double domain() const;
};

struct SimulationDiverged : std::runtime_error {
    SimulationDiverged(std::size_t example, std::size_t step);
    std::size_t example;
    std::size_t step;
};

/// Per-row divergence record of a batched KS run.
struct KsStatus {
    std::vector<bool> diverged;
    std::vector<std::size_t> step;
};

/// Forcing G(x) = 0.1 cos x − 0.01 cos(x/16)(1 − 2 sin(x/16)) on the grid.
std::vector<double> ks_forcing(const KsConfig& cfg = {});

/// u_t = −u_xx − u_xxxx − β u u_x + α G(x), integrated with an exact
/// integrating factor for the linear part and RK2 for the rest.
/// params (B, 2) holds (α, β) per row, u0 (B, n). Returns u(T), (B, n).
/// With `status` null a guard violation throws SimulationDiverged; otherwise
/// the offending rows are marked and the run continues.
ad::Value ks_forward(const ad::Value& params, const ad::Value& u0, const KsConfig& cfg = {}, KsStatus* status = nullptr);

// ---- robotic arm --------------------------------------------------------

struct ArmConfig {
    double l1 = 0.5;
    double l2 = 0.5;
    double l3 = 1.0;
    double sigma_height = 0.25;
    double sigma_angle = 0.5;
};

/// x (B, 4) = (base height, θ1, θ2, θ3) with cumulative joint angles.
/// Returns end-effector positions (B, 2).
ad::Value arm_forward(const ad::Value& x, const ArmConfig& cfg = {});

}  // namespace jpo::prob
