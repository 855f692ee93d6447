#pragma once

// Adaptive controller placement: the per-node packet logic, local estimators, and a
// step simulator that runs every node in transmission order.

#include <optional>
#include <utility>
#include <vector>

#include "wsan/linalg.hpp"
#include "wsan/network.hpp"
#include "wsan/plant.hpp"
#include "wsan/roles.hpp"

namespace wsan {

/// Two-field packet s^(i) = (y, u); either field may be empty.
struct Packet {
    std::optional<Vector> y;
    std::optional<Vector> u;
    // Tracing only: node that computed the value in `u` (0 when `u` is empty). Nodes
    // never read it.
    int u_origin = 0;
};

struct NodeState {
    int index = 1;       // 1..M
    Vector xhat;         // local estimate; holds the prediction between steps
    Vector backup_u;     // input assumed by this node if it misses the broadcast
    int last_mu = 0;     // whether the node's last packet carried an input
    int last_c = 0;      // origin of that input, 0 if none
    bool last_measured = false;
};

struct NodeOutput {
    NodeState state;
    Packet packet;
};

/// Processing at node i for one step: measurement update, tentative input, and the
/// packet handed to node i+1. `incoming` is ignored when `gamma_in` is false.
inline NodeOutput node_process(const NodeState& node, const std::optional<Packet>& incoming, bool gamma_in,
                               bool delta_prev, const PlantModel& plant, const GainPair& gains) {
    NodeOutput out{node, Packet{}};
    NodeState& s = out.state;
    s.last_measured = false;
    if (!gamma_in || !incoming) {
        s.backup_u = gains.L * s.xhat;
        if (delta_prev) {
            out.packet.u = s.backup_u;
            out.packet.u_origin = s.index;
        }
    } else {
        const Packet& in = *incoming;
        if (in.y) {
            s.xhat += gains.K * (*in.y - plant.C() * s.xhat);
            s.last_measured = true;
        }
        s.backup_u = in.u ? *in.u : Vector(gains.L * s.xhat);
        if (!in.u && delta_prev) {
            out.packet = Packet{in.y, s.backup_u, s.index};
        } else {
            out.packet = in;
        }
    }
    s.last_mu = out.packet.u ? 1 : 0;
    s.last_c = out.packet.u_origin;
    return out;
}

/// Prediction after the actuator's broadcast: uses the applied input when it was
/// received, the node's own backup value otherwise.
inline NodeState node_time_update(const NodeState& node, bool delta_now, const Vector& u_broadcast,
                                  const PlantModel& plant) {
    NodeState s = node;
    const Vector& u = delta_now ? u_broadcast : node.backup_u;
    s.xhat = plant.A() * node.xhat + plant.B() * u;
    return s;
}

struct StepRecord {
    long k = 0;
    int network_state = -1;
    Bits delta_prev;      // δ_{k−1}
    Bits gamma;           // γ_k
    Bits delta;           // δ_k
    RoleAssignment roles; // as observed while running the nodes
    Vector u;             // applied input u_k
    Vector x;             // x_k
    Vector y;             // y_k
    std::vector<Vector> xhats;    // x̂_k^(i) after the measurement update
    std::vector<Vector> backups;  // ν_k^(i)
    std::vector<bool> measured;   // whether y_k reached node i
};

/// Closed loop state between steps.
struct ProtocolWorld {
    long k = 0;
    Vector x;
    std::vector<NodeState> nodes;  // nodes[i-1] is node i
    Bits delta_prev;               // δ_{k−1}

    int M() const { return static_cast<int>(nodes.size()); }
};

/// Cold start: x̂₀^(i) = 0, δ_{−1}^(i) = 1 and u_{−1} = 0.
inline ProtocolWorld make_protocol_world(const PlantModel& plant, const GainPair& gains, int M, Vector x0) {
    check_node_count(M);
    gains.check_against(plant);
    detail::require_dims(x0.size() == plant.n(), "make_protocol_world: x0 must have length n");
    ProtocolWorld w;
    w.x = std::move(x0);
    for (int i = 1; i <= M; ++i) {
        NodeState s;
        s.index = i;
        s.xhat = Vector::Zero(plant.n());
        s.backup_u = Vector::Zero(plant.m());
        w.nodes.push_back(std::move(s));
    }
    w.delta_prev.assign(static_cast<std::size_t>(M - 1), 1);
    return w;
}

/// One sampling period: sensor packet, nodes 1..M in order, actuation, plant update,
/// broadcast and time updates. `w` is the process noise w_k and `v` the measurement
/// noise v_k.
inline StepRecord simulate_step(ProtocolWorld& world, const StepOutcome& outcome, const Vector& w, const Vector& v,
                                const PlantModel& plant, const GainPair& gains) {
    const int M = world.M();
    detail::require_dims(outcome.gamma.size() == static_cast<std::size_t>(M - 1) &&
                             outcome.delta.size() == static_cast<std::size_t>(M - 1),
                         "simulate_step: outcome bits must have length M−1");
    StepRecord rec;
    rec.k = world.k;
    rec.network_state = outcome.state;
    rec.delta_prev = world.delta_prev;
    rec.gamma = outcome.gamma;
    rec.delta = outcome.delta;
    rec.x = world.x;
    rec.y = plant.C() * world.x + v;

    RoleAssignment& roles = rec.roles;
    roles.M = M;
    roles.mu.assign(static_cast<std::size_t>(M + 1), 0);
    roles.c_partial.assign(static_cast<std::size_t>(M + 1), 0);

    std::optional<Packet> packet = Packet{rec.y, std::nullopt, 0};
    for (int i = 1; i <= M; ++i) {
        const bool gamma_in = i == 1 ? true : outcome.gamma[static_cast<std::size_t>(i - 2)] != 0;
        const bool delta_prev = i == M ? true : world.delta_prev[static_cast<std::size_t>(i - 1)] != 0;
        NodeOutput out = node_process(world.nodes[static_cast<std::size_t>(i - 1)], gamma_in ? packet : std::nullopt,
                                      gamma_in, delta_prev, plant, gains);
        if (out.packet.u && out.packet.u_origin == i) roles.controller_set.push_back(i);
        roles.mu[static_cast<std::size_t>(i)] = out.state.last_mu;
        roles.c_partial[static_cast<std::size_t>(i)] = out.state.last_c;
        rec.xhats.push_back(out.state.xhat);
        rec.backups.push_back(out.state.backup_u);
        rec.measured.push_back(out.state.last_measured);
        world.nodes[static_cast<std::size_t>(i - 1)] = std::move(out.state);
        packet = std::move(out.packet);
    }
    if (!packet || !packet->u) throw ProtocolViolation("actuator received no plant input");
    roles.controller = packet->u_origin;
    rec.u = *packet->u;

    world.x = plant.A() * world.x + plant.B() * rec.u + w;
    for (int i = 1; i <= M; ++i) {
        const bool delta_now = i == M ? true : outcome.delta[static_cast<std::size_t>(i - 1)] != 0;
        auto& node = world.nodes[static_cast<std::size_t>(i - 1)];
        node = node_time_update(node, delta_now, rec.u, plant);
    }
    world.delta_prev = outcome.delta;
    ++world.k;
    return rec;
}

}  // namespace wsan
