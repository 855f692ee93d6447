#pragma once

// Seeded Monte-Carlo campaigns over the three architectures with common random numbers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wsan/baselines.hpp"
#include "wsan/harness/config.hpp"
#include "wsan/network.hpp"
#include "wsan/plant.hpp"
#include "wsan/protocol.hpp"
#include "wsan/rng.hpp"

namespace wsan::harness {

/// Random inputs of one run. Every architecture replays an identical copy.
class Realization {
  public:
    Realization(const ExperimentConfig& cfg, std::size_t run)
        : plant_(&cfg.plant_model()),
          noise_on_(cfg.noise),
          outcomes_(cfg.network_model(), Rng(cfg.seed).split(run).split("network")),
          noise_(Rng(cfg.seed).split(run).split("noise")) {
        Rng x0_rng = Rng(cfg.seed).split(run).split("x0");
        x0_ = x0_rng.gaussian(plant_->x0_mean(), plant_->P0());
    }

    const Vector& x0() const { return x0_; }

    struct Step {
        StepOutcome outcome;
        Vector w;  // w_k
        Vector v;  // v_k
    };

    Step next() {
        Step s{outcomes_.next(), Vector::Zero(plant_->n()), Vector::Zero(plant_->p())};
        if (noise_on_) {
            s.v = noise_.gaussian(Vector::Zero(plant_->p()), plant_->R());
            s.w = noise_.gaussian(Vector::Zero(plant_->n()), plant_->Q());
        }
        return s;
    }

  private:
    const PlantModel* plant_;
    bool noise_on_;
    OutcomeStream outcomes_;
    Rng noise_;
    Vector x0_;
};

struct RunSummary {
    std::size_t run = 0;
    Architecture architecture = Architecture::adaptive;
    double J = 0.0;
    bool diverged = false;
    long diverged_at = -1;
    std::size_t steps = 0;                                  // recorded steps, k = 1..steps
    std::vector<std::uint64_t> c_histogram;                 // index c = 1..M; slot 0 unused
    std::vector<std::vector<std::uint64_t>> state_histogram;  // [Ξ][c], Markov networks only
    Matrix covariance;  // sample second moment of x_k after the burn-in
};

/// J = Σ_{k=1}^{H} ‖y_k‖² over a recorded trace (records with k = 0 are ignored).
inline double performance_J(const std::vector<StepRecord>& trace) {
    double J = 0.0;
    for (const auto& rec : trace)
        if (rec.k >= 1) J += rec.y.squaredNorm();
    return J;
}

using TraceSink = std::function<void(const RunSummary&, const std::vector<StepRecord>&)>;

namespace detail {

inline std::size_t burn_in(std::size_t horizon) { return std::min<std::size_t>(horizon / 10, 1000); }

}  // namespace detail

/// Simulates one architecture on run `run`'s realization. Steps 0..H are executed
/// and k = 1..H recorded; the run stops once ‖x_k‖ exceeds the divergence threshold.
inline RunSummary run_single(const ExperimentConfig& cfg, std::size_t run, Architecture arch,
                             std::vector<StepRecord>* trace = nullptr) {
    const PlantModel& plant = cfg.plant_model();
    const int M = cfg.M;
    const std::size_t H = cfg.horizon;
    Realization real(cfg, run);

    RunSummary sum;
    sum.run = run;
    sum.architecture = arch;
    sum.c_histogram.assign(static_cast<std::size_t>(M + 1), 0);
    if (const auto* mk = std::get_if<MarkovNetworkModel>(&cfg.network_model()))
        sum.state_histogram.assign(mk->state_count(), std::vector<std::uint64_t>(static_cast<std::size_t>(M + 1), 0));
    sum.covariance = Matrix::Zero(plant.n(), plant.n());
    if (H == 0) return sum;

    std::optional<ProtocolWorld> world;
    std::optional<BaselineState> base;
    if (arch == Architecture::adaptive)
        world = make_protocol_world(plant, cfg.gains, M, real.x0());
    else
        base = make_baseline_state(arch, plant, M, real.x0());

    const std::size_t skip = detail::burn_in(H);
    std::size_t cov_samples = 0;
    for (std::size_t k = 0; k <= H; ++k) {
        Realization::Step st = real.next();
        StepRecord rec = world ? simulate_step(*world, st.outcome, st.w, st.v, plant, cfg.gains)
                               : step_baseline(*base, st.outcome, st.w, st.v, plant, cfg.gains);
        if (k == 0) continue;
        if (!std::isfinite(rec.x.norm()) || rec.x.norm() > cfg.divergence_threshold) {
            sum.diverged = true;
            sum.diverged_at = static_cast<long>(k);
            break;
        }
        sum.J += rec.y.squaredNorm();
        ++sum.steps;
        const auto c = static_cast<std::size_t>(rec.roles.controller);
        ++sum.c_histogram[c];
        if (rec.network_state >= 0) ++sum.state_histogram[static_cast<std::size_t>(rec.network_state)][c];
        if (k > skip) {
            sum.covariance += rec.x * rec.x.transpose();
            ++cov_samples;
        }
        if (trace) trace->push_back(std::move(rec));
    }
    if (cov_samples > 0) sum.covariance /= static_cast<double>(cov_samples);
    return sum;
}

/// Runs every (run, architecture) pair. Results come back ordered by run index and
/// then by the configured architecture order, whatever the thread count.
inline std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, unsigned threads = 1,
                                              const TraceSink& sink = {}) {
    const std::size_t per_run = cfg.architectures.size();
    const std::size_t jobs = cfg.runs * per_run;
    std::vector<RunSummary> out(jobs);
    std::vector<std::vector<StepRecord>> traces(sink ? jobs : 0);

    auto work = [&](std::size_t job) {
        const std::size_t run = job / per_run;
        const Architecture arch = cfg.architectures[job % per_run];
        out[job] = run_single(cfg, run, arch, sink ? &traces[job] : nullptr);
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(jobs, 1))));
    if (threads == 1) {
        for (std::size_t j = 0; j < jobs; ++j) work(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t j = next++; j < jobs; j = next++) work(j);
            });
        for (auto& th : pool) th.join();
    }
    if (sink)
        for (std::size_t j = 0; j < jobs; ++j) sink(out[j], traces[j]);
    return out;
}

/// Per-architecture aggregate of a campaign.
struct ArchitectureStats {
    Architecture architecture = Architecture::adaptive;
    std::size_t runs = 0;
    std::size_t diverged = 0;
    double mean_J = 0.0;  // over runs that stayed bounded; NaN if none did
    double stddev_J = 0.0;
    std::vector<std::uint64_t> c_histogram;
};

inline std::vector<ArchitectureStats> aggregate(const ExperimentConfig& cfg, const std::vector<RunSummary>& runs) {
    std::vector<ArchitectureStats> stats;
    for (Architecture a : cfg.architectures) {
        ArchitectureStats s;
        s.architecture = a;
        s.c_histogram.assign(static_cast<std::size_t>(cfg.M + 1), 0);
        double sum = 0.0, sq = 0.0;
        std::size_t ok = 0;
        for (const auto& r : runs) {
            if (r.architecture != a) continue;
            ++s.runs;
            for (std::size_t c = 0; c < r.c_histogram.size(); ++c) s.c_histogram[c] += r.c_histogram[c];
            if (r.diverged) {
                ++s.diverged;
                continue;
            }
            sum += r.J;
            sq += r.J * r.J;
            ++ok;
        }
        s.mean_J = ok ? sum / static_cast<double>(ok) : std::nan("");
        s.stddev_J = ok > 1 ? std::sqrt(std::max(0.0, (sq - sum * sum / static_cast<double>(ok)) / static_cast<double>(ok - 1))) : 0.0;
        stats.push_back(std::move(s));
    }
    return stats;
}

}  // namespace wsan::harness
