#pragma once

#include <algorithm>
#include <vector>

#include "wsan/network.hpp"

namespace wsan {

/// Which nodes calculate a tentative input in one step, and who ends up as controller.
struct RoleAssignment {
    int M = 0;
    std::vector<int> mu;              // μ^(i), i = 0..M; μ^(0) = 0
    std::vector<int> c_partial;       // c^(i), i = 0..M; c^(0) = 0
    std::vector<int> controller_set;  // 𝒞, ascending
    int controller = 0;               // c = c^(M) = max 𝒞

    bool in_controller_set(int i) const {
        return std::binary_search(controller_set.begin(), controller_set.end(), i);
    }

    friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

/// Roles at step k from the feedback bits of the previous broadcast (δ_{k−1}) and the
/// forward bits of step k (γ_k). Pure function of the bits.
inline RoleAssignment derive_roles(int M, const Bits& delta_prev, const Bits& gamma_now) {
    check_node_count(M);
    detail::require_dims(delta_prev.size() == static_cast<std::size_t>(M - 1) &&
                             gamma_now.size() == static_cast<std::size_t>(M - 1),
                         "derive_roles: bit vectors must have length M−1");
    RoleAssignment r;
    r.M = M;
    r.mu.assign(static_cast<std::size_t>(M + 1), 0);
    r.c_partial.assign(static_cast<std::size_t>(M + 1), 0);
    for (int i = 1; i <= M; ++i) {
        const bool g = i == 1 ? true : gamma_now[static_cast<std::size_t>(i - 2)] != 0;
        const bool d = i == M ? true : delta_prev[static_cast<std::size_t>(i - 1)] != 0;
        const int c_up = r.c_partial[static_cast<std::size_t>(i - 1)];
        const bool relay_has_input = g && r.mu[static_cast<std::size_t>(i - 1)] == 1;
        if (d && !relay_has_input) r.controller_set.push_back(i);
        r.mu[static_cast<std::size_t>(i)] = (d || relay_has_input) ? 1 : 0;
        r.c_partial[static_cast<std::size_t>(i)] = (c_up == 0 || !g) ? i * static_cast<int>(d) : c_up;
    }
    r.controller = r.c_partial[static_cast<std::size_t>(M)];
    return r;
}

/// Roles at step k+1 encoded by the word β_k = (γ_{k+1}, δ_k).
inline RoleAssignment derive_roles(const OutcomeWord& word) {
    return derive_roles(word.M(), word.delta(), word.gamma());
}

}  // namespace wsan
