#pragma once

// Fixed-placement reference loops: controller and estimator at the actuator node, or
// at the sensor node with hold-last-input at the actuator.

#include <string>
#include <string_view>

#include "wsan/analysis.hpp"
#include "wsan/linalg.hpp"
#include "wsan/network.hpp"
#include "wsan/plant.hpp"
#include "wsan/protocol.hpp"

namespace wsan {

enum class Architecture { adaptive, actuator_fixed, sensor_fixed };

inline std::string_view to_string(Architecture a) {
    switch (a) {
        case Architecture::adaptive: return "adaptive";
        case Architecture::actuator_fixed: return "actuator_fixed";
        case Architecture::sensor_fixed: return "sensor_fixed";
    }
    return "?";
}

inline Architecture parse_architecture(std::string_view s) {
    if (s == "adaptive") return Architecture::adaptive;
    if (s == "actuator_fixed") return Architecture::actuator_fixed;
    if (s == "sensor_fixed") return Architecture::sensor_fixed;
    throw ConfigInvalid("unknown architecture '" + std::string(s) + "'");
}

/// Closed-loop state of a fixed-placement loop between steps.
struct BaselineState {
    Architecture variant = Architecture::actuator_fixed;
    long k = 0;
    Vector x;
    Vector xhat;    // estimator prediction for the current step
    Vector u_prev;  // u_{k−1}; held by the actuator in the sensor-fixed loop
    int M = 2;
};

inline BaselineState make_baseline_state(Architecture variant, const PlantModel& plant, int M, Vector x0) {
    if (variant == Architecture::adaptive) throw Error("make_baseline_state: adaptive is not a baseline");
    check_node_count(M);
    detail::require_dims(x0.size() == plant.n(), "make_baseline_state: x0 must have length n");
    return BaselineState{variant, 0, std::move(x0), Vector::Zero(plant.n()), Vector::Zero(plant.m()), M};
}

/// Γ^(M): the packet from the sensor survives every forward hop.
inline bool end_to_end(const Bits& gamma) {
    for (auto g : gamma)
        if (!g) return false;
    return true;
}

namespace detail {
inline StepRecord baseline_record(const BaselineState& s, const StepOutcome& outcome, const Vector& y) {
    StepRecord rec;
    rec.k = s.k;
    rec.network_state = outcome.state;
    rec.gamma = outcome.gamma;
    rec.delta = outcome.delta;
    rec.x = s.x;
    rec.y = y;
    rec.roles.M = s.M;
    return rec;
}
}  // namespace detail

/// Estimator and controller at the actuator: the measurement update is gated by
/// end-to-end delivery of y_k; the actuator always applies its own Lx̂.
inline StepRecord step_actuator_fixed(BaselineState& s, const StepOutcome& outcome, const Vector& w, const Vector& v,
                                      const PlantModel& plant, const GainPair& gains) {
    const Vector y = plant.C() * s.x + v;
    StepRecord rec = detail::baseline_record(s, outcome, y);
    const bool delivered = end_to_end(outcome.gamma);
    if (delivered) s.xhat += gains.K * (y - plant.C() * s.xhat);
    rec.u = gains.L * s.xhat;
    rec.xhats = {s.xhat};
    rec.measured = {delivered};
    rec.roles.controller = s.M;
    rec.roles.controller_set = {s.M};

    s.x = plant.A() * s.x + plant.B() * rec.u + w;
    s.xhat = plant.A() * s.xhat + plant.B() * rec.u;
    s.u_prev = rec.u;
    ++s.k;
    return rec;
}

/// Estimator and controller at the sensor: the plant receives Lx̂ˢ only when the
/// packet reaches the actuator and holds u_{k−1} otherwise. The sensor predicts with
/// the applied input if the broadcast reached it, with its own Lx̂ˢ otherwise.
inline StepRecord step_sensor_fixed(BaselineState& s, const StepOutcome& outcome, const Vector& w, const Vector& v,
                                    const PlantModel& plant, const GainPair& gains) {
    const Vector y = plant.C() * s.x + v;
    StepRecord rec = detail::baseline_record(s, outcome, y);
    s.xhat += gains.K * (y - plant.C() * s.xhat);
    const Vector computed = gains.L * s.xhat;
    const bool delivered = end_to_end(outcome.gamma);
    rec.u = delivered ? computed : s.u_prev;
    rec.xhats = {s.xhat};
    rec.measured = {true};
    rec.roles.controller = 1;
    rec.roles.controller_set = {1};

    s.x = plant.A() * s.x + plant.B() * rec.u + w;
    const bool feedback = outcome.delta.empty() ? true : outcome.delta[0] != 0;
    const Vector& u_known = feedback ? rec.u : computed;
    s.xhat = plant.A() * s.xhat + plant.B() * u_known;
    s.u_prev = rec.u;
    ++s.k;
    return rec;
}

inline StepRecord step_baseline(BaselineState& s, const StepOutcome& outcome, const Vector& w, const Vector& v,
                                const PlantModel& plant, const GainPair& gains) {
    return s.variant == Architecture::actuator_fixed ? step_actuator_fixed(s, outcome, w, v, plant, gains)
                                                     : step_sensor_fixed(s, outcome, w, v, plant, gains);
}

/// Jump-linear form of the actuator-fixed loop over col(x_k, x̂ᵃ_k) with noise
/// col(w_k, v_{k+1}); `delivered` is Γ_{k+1}^(M).
inline ModeMatrices actuator_fixed_mode(bool delivered, const PlantModel& plant, const GainPair& gains) {
    const Index n = plant.n(), p = plant.p();
    const double gate = delivered ? 1.0 : 0.0;
    const Matrix& A = plant.A();
    const Matrix BL = plant.B() * gains.L;
    const Matrix KC = gate * gains.K * plant.C();
    ModeMatrices mm;
    mm.A = Matrix::Zero(2 * n, 2 * n);
    mm.A.topLeftCorner(n, n) = A;
    mm.A.topRightCorner(n, n) = BL;
    mm.A.bottomLeftCorner(n, n) = KC * A;
    mm.A.bottomRightCorner(n, n) = A + BL - KC * A;
    mm.B = Matrix::Zero(2 * n, n + p);
    mm.B.topLeftCorner(n, n) = Matrix::Identity(n, n);
    mm.B.bottomLeftCorner(n, n) = KC;
    mm.B.bottomRightCorner(n, p) = gate * gains.K;
    return mm;
}

/// Per-state means of the actuator-fixed modes. The modes are affine in Γ, so the
/// mean is the mode evaluated at Pr{Γ = 1 | Ξ = j}.
inline std::vector<ConditionalMeans> actuator_fixed_means(const PlantModel& plant, const GainPair& gains,
                                                          const MarkovNetworkModel& net) {
    const ModeMatrices lost = actuator_fixed_mode(false, plant, gains);
    const ModeMatrices got = actuator_fixed_mode(true, plant, gains);
    std::vector<ConditionalMeans> out;
    for (std::size_t j = 0; j < net.state_count(); ++j) {
        double pr = 1.0;
        for (double g : net.marginals(j).gamma) pr *= g;
        out.push_back(ConditionalMeans{(1.0 - pr) * lost.A + pr * got.A, (1.0 - pr) * lost.B + pr * got.B, {}, {}});
    }
    return out;
}

}  // namespace wsan
