#pragma once

// Gradients of H(Z_T | Y; theta) and P_theta(W_T = 1), both as score-function
// expectations over observation records:
//   grad H = E_y[ H(Z_T | Y = y) grad log P_theta(y) ]
//   grad P = E_y[ P(W_T = 1 | y) grad log P_theta(y) ]
// computed exactly by enumeration or as batch means, and the fixed-step
// descent loop on H - alpha * P.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/error.hpp"
#include "perceptplan/objective.hpp"
#include "perceptplan/parallel.hpp"
#include "perceptplan/policy.hpp"
#include "perceptplan/sampler.hpp"

namespace perceptplan {

enum class Estimator { Exact, Sampled };

struct GradientEstimate {
    Eigen::MatrixXd entropy_grad;
    Eigen::MatrixXd success_grad;
    Eigen::MatrixXd combined;  // entropy_grad - alpha * success_grad
    std::size_t batch_size = 0;
    Estimator estimator = Estimator::Exact;
    double entropy = 0.0;  // exact value or batch mean of H(Z_T | Y = y_k)
    double success = 0.0;  // exact value or batch mean of P(W_T = 1 | y_k)
};

inline GradientEstimate exact_gradient(const FscPolicy& pol, const ObservableOperators& oo,
                                       std::size_t horizon, double alpha,
                                       LogBase base = LogBase::E,
                                       double cap = kDefaultEnumerationCap) {
    const auto rows = pol.theta().rows();
    const auto cols = pol.theta().cols();
    GradientEstimate g;
    g.estimator = Estimator::Exact;
    g.entropy_grad = Eigen::MatrixXd::Zero(rows, cols);
    g.success_grad = Eigen::MatrixXd::Zero(rows, cols);
    enumerate_records(
        pol, oo, horizon,
        [&](const RecordVisit& r) {
            const double h = entropy_given_y(r.post.secret, base);
            g.entropy += r.prob * h;
            g.success += r.prob * r.post.success;
            if (h == 0.0 && r.post.success == 0.0) return;
            const Eigen::MatrixXd s = pol.score(r.y.obs, r.y.acts);
            g.entropy_grad += (r.prob * h) * s;
            g.success_grad += (r.prob * r.post.success) * s;
        },
        cap);
    g.combined = g.entropy_grad - alpha * g.success_grad;
    return g;
}

inline Eigen::MatrixXd entropy_grad_exact(const FscPolicy& pol, const ObservableOperators& oo,
                                          std::size_t horizon, LogBase base = LogBase::E,
                                          double cap = kDefaultEnumerationCap) {
    return exact_gradient(pol, oo, horizon, 0.0, base, cap).entropy_grad;
}

inline Eigen::MatrixXd success_grad_exact(const FscPolicy& pol, const ObservableOperators& oo,
                                          std::size_t horizon, double cap = kDefaultEnumerationCap) {
    return exact_gradient(pol, oo, horizon, 0.0, LogBase::E, cap).success_grad;
}

// Per-trajectory terms are computed in parallel and summed in index order, so
// the result is bit-identical for any worker count.
inline GradientEstimate sampled_gradient(const FscPolicy& pol, const ObservableOperators& oo,
                                         const std::vector<TrajectoryRecord>& batch, double alpha,
                                         LogBase base = LogBase::E, std::size_t workers = 1) {
    if (batch.empty()) throw InputError("gradient batch is empty");
    const std::size_t m = batch.size();
    std::vector<double> h(m);
    std::vector<double> w(m);
    std::vector<Eigen::MatrixXd> score_k(m);
    parallel_for(m, workers, [&](std::size_t k) {
        const ObservationRecord y = batch[k].record();
        const Posteriors post = event_posteriors(oo, y);
        h[k] = entropy_given_y(post.secret, base);
        w[k] = post.success;
        score_k[k] = pol.score(y.obs, y.acts);
    });

    GradientEstimate g;
    g.estimator = Estimator::Sampled;
    g.batch_size = m;
    g.entropy_grad = Eigen::MatrixXd::Zero(pol.theta().rows(), pol.theta().cols());
    g.success_grad = g.entropy_grad;
    for (std::size_t k = 0; k < m; ++k) {
        g.entropy += h[k];
        g.success += w[k];
        if (h[k] != 0.0) g.entropy_grad += h[k] * score_k[k];
        if (w[k] != 0.0) g.success_grad += w[k] * score_k[k];
    }
    const double inv = 1.0 / static_cast<double>(m);
    g.entropy *= inv;
    g.success *= inv;
    g.entropy_grad *= inv;
    g.success_grad *= inv;
    g.combined = g.entropy_grad - alpha * g.success_grad;
    return g;
}

inline Eigen::MatrixXd entropy_grad_sampled(const FscPolicy& pol, const ObservableOperators& oo,
                                            const std::vector<TrajectoryRecord>& batch,
                                            LogBase base = LogBase::E, std::size_t workers = 1) {
    return sampled_gradient(pol, oo, batch, 0.0, base, workers).entropy_grad;
}

inline Eigen::MatrixXd success_grad_sampled(const FscPolicy& pol, const ObservableOperators& oo,
                                            const std::vector<TrajectoryRecord>& batch,
                                            std::size_t workers = 1) {
    return sampled_gradient(pol, oo, batch, 0.0, LogBase::E, workers).success_grad;
}

struct TrainConfig {
    std::size_t horizon = 5;
    std::size_t batch = 1000;
    std::size_t iterations = 1000;
    double step = 0.5;
    double alpha = 1.0;
    std::uint64_t seed = 0;
    LogBase log_base = LogBase::E;
    Estimator estimator = Estimator::Sampled;
    std::size_t workers = 1;
    double enumeration_cap = kDefaultEnumerationCap;

    void validate() const {
        if (batch < 1) throw InputError("batch size must be at least 1");
        if (iterations < 1) throw InputError("iteration count must be at least 1");
        if (!(step >= 0.0) || !std::isfinite(step)) throw InputError("step size must be finite and >= 0");
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("alpha must be finite and >= 0");
    }
};

struct TrainReportRow {
    std::size_t iteration = 0;
    double entropy = 0.0;
    double success = 0.0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double wallclock_ms = 0.0;
};

struct TrainResult {
    FscPolicy policy;
    std::vector<TrainReportRow> report;
};

// theta <- theta - step * (grad H - alpha * grad P), once per iteration. Rows
// are evaluated on each iteration's batch before its update.
inline TrainResult train(const TrainConfig& cfg, FscPolicy pol, const ProductPomdp& product,
                         const ObservableOperators& oo,
                         const std::function<void(const TrainReportRow&)>& on_row = {}) {
    cfg.validate();
    const RngSpec rng{cfg.seed};
    TrainResult result;
    result.report.reserve(cfg.iterations);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const auto start = std::chrono::steady_clock::now();
        GradientEstimate g;
        if (cfg.estimator == Estimator::Exact) {
            g = exact_gradient(pol, oo, cfg.horizon, cfg.alpha, cfg.log_base, cfg.enumeration_cap);
        } else {
            const auto batch = sample_batch(pol, product, cfg.horizon, cfg.batch, rng, it, cfg.workers);
            g = sampled_gradient(pol, oo, batch, cfg.alpha, cfg.log_base, cfg.workers);
        }
        const auto cols = g.combined.cols();
        for (Eigen::Index r = 0; r < g.combined.rows(); ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                if (!std::isfinite(g.combined(r, c)))
                    throw NonFiniteGradient(it, static_cast<std::size_t>(r * cols + c));

        pol.theta() -= cfg.step * g.combined;
        const auto stop = std::chrono::steady_clock::now();

        TrainReportRow row;
        row.iteration = it;
        row.entropy = g.entropy;
        row.success = g.success;
        row.objective = g.entropy - cfg.alpha * g.success;
        row.grad_norm = g.combined.norm();
        row.wallclock_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        result.report.push_back(row);
        if (on_row) on_row(row);
    }
    result.policy = std::move(pol);
    return result;
}

}  // namespace perceptplan
