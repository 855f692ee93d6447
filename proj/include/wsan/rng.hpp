#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "wsan/linalg.hpp"

namespace wsan {

/// Seedable, splittable generator. Every Monte-Carlo run draws its streams from
/// Rng(master_seed).split(run_index).split("purpose"), so a run is reproducible on
/// its own regardless of how many other runs are executed or in which order.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed)), engine_(key_) {}

    Rng split(std::uint64_t index) const { return Rng(key_, index); }

    Rng split(std::string_view name) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return Rng(key_, h);
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // uniform() lies in [0, 1), so p = 1 always succeeds and p = 0 never does.
    bool bernoulli(double p) { return uniform() < p; }

    std::size_t categorical(const Vector& weights) {
        double u = uniform() * weights.sum();
        for (Index i = 0; i < weights.size(); ++i) {
            u -= weights(i);
            if (u < 0.0) return static_cast<std::size_t>(i);
        }
        for (Index i = weights.size() - 1; i >= 0; --i)
            if (weights(i) > 0.0) return static_cast<std::size_t>(i);
        return 0;
    }

    double normal() { return normal_(engine_); }

    /// Sample from N(mean, cov); `cov` must be SPD.
    Vector gaussian(const Vector& mean, const Matrix& cov) {
        Eigen::LLT<Matrix> llt(cov);
        Vector z(mean.size());
        for (Index i = 0; i < z.size(); ++i) z(i) = normal();
        return mean + llt.matrixL() * z;
    }

  private:
    Rng(std::uint64_t parent, std::uint64_t index) : key_(mix(parent ^ mix(index + 0x632be59bd9b4e019ULL))), engine_(key_) {}

    static std::uint64_t mix(std::uint64_t z) {  // SplitMix64 finaliser
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wsan
