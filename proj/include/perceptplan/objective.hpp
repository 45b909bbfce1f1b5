#pragma once

// Secret/task posteriors given an observation record, the binary conditional
// entropy, trajectory probabilities, and exact objective values by enumerating
// every observation record of a horizon.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/error.hpp"
#include "perceptplan/oomodel.hpp"
#include "perceptplan/policy.hpp"

namespace perceptplan {

inline constexpr double kDefaultEnumerationCap = 1e7;

// y_{0:T} = (o_{0:T}, a_{0:T}).
struct ObservationRecord {
    std::vector<std::size_t> obs;
    std::vector<std::size_t> acts;

    std::size_t length() const noexcept { return obs.size(); }
    bool operator==(const ObservationRecord&) const = default;
};

enum class LogBase { E, Two };

inline double log_in(double x, LogBase base) {
    return base == LogBase::E ? std::log(x) : std::log2(x);
}

inline double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

struct Posteriors {
    double secret = 0.0;   // P(Z_T = 1 | y)
    double success = 0.0;  // P(W_T = 1 | y)
};

namespace detail {

// Weights E(o_T | v, a_T) * P(v_T = v, o_{0:T-1} | a_{0:T-1}), up to a common
// positive factor. Throws when the record has probability zero.
inline Eigen::VectorXd last_step_weights(const ObservableOperators& oo, const ObservationRecord& y) {
    oo.check_record(y.obs, y.acts);
    if (y.obs.empty()) throw InputError("observation record is empty");
    FilterState f = FilterState::initial(oo);
    const std::size_t last = y.obs.size() - 1;
    for (std::size_t t = 0; t < last; ++t) f.advance(oo, y.obs[t], y.acts[t]);
    if (f.impossible()) throw EvidenceImpossible();
    Eigen::VectorXd w = f.vec.cwiseProduct(oo.emission(y.obs[last], y.acts[last]));
    if (!(w.sum() > 0.0)) throw EvidenceImpossible();
    return w;
}

}  // namespace detail

// Both posteriors from one forward pass.
inline Posteriors event_posteriors(const ObservableOperators& oo, const ObservationRecord& y) {
    const Eigen::VectorXd w = detail::last_step_weights(oo, y);
    const double z = w.sum();
    return {clamp01(w.dot(oo.secret_indicator()) / z), clamp01(w.dot(oo.final_indicator()) / z)};
}

inline double secret_posterior(const ObservableOperators& oo, const ObservationRecord& y) {
    const Eigen::VectorXd w = detail::last_step_weights(oo, y);
    return clamp01(w.dot(oo.secret_indicator()) / w.sum());
}

inline double success_posterior(const ObservableOperators& oo, const ObservationRecord& y) {
    const Eigen::VectorXd w = detail::last_step_weights(oo, y);
    return clamp01(w.dot(oo.final_indicator()) / w.sum());
}

// Binary entropy with 0 log 0 = 0.
inline double entropy_given_y(double p, LogBase base = LogBase::E) {
    double h = 0.0;
    if (p > 0.0) h -= p * log_in(p, base);
    if (p < 1.0) h -= (1.0 - p) * log_in(1.0 - p, base);
    return std::max(h, 0.0);
}

// P_theta(y) = P(o_{0:T} | a_{0:T}) * prod_t pi_theta(a_t | o_{0:t-1}).
inline double traj_prob(const FscPolicy& pol, const ObservableOperators& oo,
                        const ObservationRecord& y) {
    const double p_obs = seq_prob(oo, y.obs, y.acts);
    if (p_obs == 0.0) return 0.0;
    return p_obs * std::exp(pol.log_prob(y.obs, y.acts));
}

struct RecordVisit {
    const ObservationRecord& y;
    double prob;  // P_theta(y) > 0
    Posteriors post;
};

inline double enumeration_size(const ObservableOperators& oo, std::size_t horizon) {
    return std::pow(static_cast<double>(oo.num_observations() * oo.num_actions()),
                    static_cast<double>(horizon + 1));
}

// Calls visit for every record y of length horizon+1 with P_theta(y) > 0, in
// lexicographic (action, observation) order.
inline void enumerate_records(const FscPolicy& pol, const ObservableOperators& oo,
                              std::size_t horizon, const std::function<void(const RecordVisit&)>& visit,
                              double cap = kDefaultEnumerationCap) {
    const double need = enumeration_size(oo, horizon);
    if (need > cap) throw EnumerationInfeasible(need, cap);

    ObservationRecord y;
    y.obs.reserve(horizon + 1);
    y.acts.reserve(horizon + 1);

    std::function<void(const FilterState&, std::size_t, double)> descend =
        [&](const FilterState& alpha, std::size_t x, double pi_prod) {
            const std::size_t t = y.obs.size();
            const Eigen::VectorXd pi = pol.action_dist(x);
            for (std::size_t a = 0; a < oo.num_actions(); ++a) {
                const double pa = pi(static_cast<Eigen::Index>(a));
                if (pa == 0.0) continue;
                for (std::size_t o = 0; o < oo.num_observations(); ++o) {
                    Eigen::VectorXd w = alpha.vec.cwiseProduct(oo.emission(o, a));
                    const double s = w.sum();
                    if (!(s > 0.0)) continue;
                    y.obs.push_back(o);
                    y.acts.push_back(a);
                    if (t == horizon) {
                        const double prob = std::exp(alpha.log_scale) * s * pi_prod * pa;
                        const Posteriors post{clamp01(w.dot(oo.secret_indicator()) / s),
                                              clamp01(w.dot(oo.final_indicator()) / s)};
                        visit(RecordVisit{y, prob, post});
                    } else {
                        FilterState next{oo.trans(a) * w, alpha.log_scale};
                        next.normalize();
                        descend(next, pol.memory_update(x, o), pi_prod * pa);
                    }
                    y.obs.pop_back();
                    y.acts.pop_back();
                }
            }
        };
    descend(FilterState::initial(oo), FscPolicy::initial_memory(), 1.0);
}

// H(Z_T | Y; theta) = sum_y P_theta(y) H(Z_T | Y = y).
inline double exact_conditional_entropy(const FscPolicy& pol, const ObservableOperators& oo,
                                        std::size_t horizon, LogBase base = LogBase::E,
                                        double cap = kDefaultEnumerationCap) {
    double h = 0.0;
    enumerate_records(
        pol, oo, horizon,
        [&](const RecordVisit& r) { h += r.prob * entropy_given_y(r.post.secret, base); }, cap);
    return h;
}

// P_theta(W_T = 1) = sum_y P(W_T = 1 | y) P_theta(y).
inline double exact_success_prob(const FscPolicy& pol, const ObservableOperators& oo,
                                 std::size_t horizon, double cap = kDefaultEnumerationCap) {
    double p = 0.0;
    enumerate_records(
        pol, oo, horizon, [&](const RecordVisit& r) { p += r.prob * r.post.success; }, cap);
    return p;
}

struct ObjectiveReport {
    double entropy = 0.0;
    double success_prob = 0.0;
    double objective = 0.0;
    double alpha = 1.0;
};

inline ObjectiveReport make_report(double entropy, double success, double alpha) {
    return {entropy, success, entropy - alpha * success, alpha};
}

inline ObjectiveReport exact_objective(const FscPolicy& pol, const ObservableOperators& oo,
                                       std::size_t horizon, double alpha, LogBase base = LogBase::E,
                                       double cap = kDefaultEnumerationCap) {
    double h = 0.0;
    double p = 0.0;
    enumerate_records(
        pol, oo, horizon,
        [&](const RecordVisit& r) {
            h += r.prob * entropy_given_y(r.post.secret, base);
            p += r.prob * r.post.success;
        },
        cap);
    return make_report(h, p, alpha);
}

}  // namespace perceptplan
