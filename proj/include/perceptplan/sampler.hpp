#pragma once

// Generative rollouts of the closed-loop process. At every step t:
//   a_t ~ pi(. | o_{0:t-1}),  o_t ~ E(. | v_t, a_t),  v_{t+1} ~ Delta(. | v_t, a_t).
// Each trajectory draws from its own substream keyed by (seed, iteration, index).

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/model.hpp"
#include "perceptplan/objective.hpp"
#include "perceptplan/parallel.hpp"
#include "perceptplan/policy.hpp"

namespace perceptplan {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1) with 53 random bits; independent of the standard
    // library's distribution implementations.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    std::size_t categorical(const SparseRow& row) {
        double u = uniform();
        for (std::size_t i = 0; i < row.prob.size(); ++i) {
            if (u < row.prob[i]) return row.index[i];
            u -= row.prob[i];
        }
        return row.index.back();
    }

    std::size_t categorical(const Eigen::VectorXd& probs) {
        double u = uniform();
        const auto n = probs.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (u < probs(i)) return static_cast<std::size_t>(i);
            u -= probs(i);
        }
        return static_cast<std::size_t>(n - 1);
    }

private:
    std::mt19937_64 gen_;
};

struct RngSpec {
    std::uint64_t master_seed = 0;

    RandomStream substream(std::uint64_t iteration, std::uint64_t index) const {
        std::uint64_t h = splitmix64(master_seed);
        h = splitmix64(h ^ iteration);
        h = splitmix64(h ^ index);
        return RandomStream(h);
    }
};

struct TrajectoryRecord {
    std::vector<std::size_t> vstates;  // v_0 .. v_{T+1}
    std::vector<std::size_t> acts;     // a_0 .. a_T
    std::vector<std::size_t> obs;      // o_0 .. o_T
    double log_policy = 0.0;

    ObservationRecord record() const { return {obs, acts}; }
    // State at which the last observation was emitted; W_T and Z_T are read here.
    std::size_t final_state() const { return vstates[vstates.size() - 2]; }

    bool operator==(const TrajectoryRecord&) const = default;
};

inline TrajectoryRecord sample_trajectory(const FscPolicy& pol, const ProductPomdp& p,
                                          std::size_t horizon, RandomStream& stream) {
    const std::size_t na = p.num_actions();
    TrajectoryRecord tr;
    tr.vstates.reserve(horizon + 2);
    tr.acts.reserve(horizon + 1);
    tr.obs.reserve(horizon + 1);

    std::size_t v = stream.categorical(p.init_row);
    std::size_t x = FscPolicy::initial_memory();
    tr.vstates.push_back(v);
    for (std::size_t t = 0; t <= horizon; ++t) {
        const Eigen::VectorXd pi = pol.action_dist(x);
        const std::size_t a = stream.categorical(pi);
        tr.log_policy += std::log(pi(static_cast<Eigen::Index>(a)));
        const std::size_t o = stream.categorical(p.emit_rows[v * na + a]);
        v = stream.categorical(p.trans_rows[v * na + a]);
        tr.acts.push_back(a);
        tr.obs.push_back(o);
        tr.vstates.push_back(v);
        x = pol.memory_update(x, o);
    }
    return tr;
}

inline std::vector<TrajectoryRecord> sample_batch(const FscPolicy& pol, const ProductPomdp& p,
                                                  std::size_t horizon, std::size_t batch,
                                                  const RngSpec& rng, std::uint64_t iteration,
                                                  std::size_t workers = 1) {
    if (batch == 0) throw InputError("batch size must be at least 1");
    std::vector<TrajectoryRecord> out(batch);
    parallel_for(batch, workers, [&](std::size_t j) {
        RandomStream stream = rng.substream(iteration, j);
        out[j] = sample_trajectory(pol, p, horizon, stream);
    });
    return out;
}

}  // namespace perceptplan
