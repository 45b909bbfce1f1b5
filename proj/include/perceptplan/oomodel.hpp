#pragma once

// Action-indexed observable operators over a product POMDP:
//   A_{o|a}[i, j] = Delta(i | j, a) * E(o | j, a)
// so that P(o_{0:t} | a_{0:t}) = 1^T A_{o_t|a_t} ... A_{o_0|a_0} mu0.
// Forward vectors are renormalized every step and the normalizers are kept
// in log space.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "perceptplan/automata.hpp"
#include "perceptplan/error.hpp"
#include "perceptplan/model.hpp"

namespace perceptplan {

class ObservableOperators {
public:
    ObservableOperators() = default;

    explicit ObservableOperators(const ProductPomdp& p)
        : n_(p.size()), num_obs_(p.num_observations()), num_actions_(p.num_actions()),
          num_dfa_states_(p.num_dfa_states), vsymbol_(p.vsymbol), alphabet_(p.alphabet) {
        const auto N = static_cast<Eigen::Index>(n_);
        mu0_ = p.init;
        final_ = Eigen::VectorXd::Zero(N);
        secret_ = Eigen::VectorXd::Zero(N);
        for (Eigen::Index v = 0; v < N; ++v) {
            final_(v) = p.final[static_cast<std::size_t>(v)] ? 1.0 : 0.0;
            secret_(v) = p.secret[static_cast<std::size_t>(v)] ? 1.0 : 0.0;
        }
        for (std::size_t a = 0; a < num_actions_; ++a) {
            Eigen::MatrixXd t = p.trans[a].transpose();
            Eigen::MatrixXd o = p.emit[a].transpose();
            for (std::size_t ob = 0; ob < num_obs_; ++ob)
                ops_.push_back(t * o.row(static_cast<Eigen::Index>(ob)).asDiagonal());
            sparse_trans_.push_back(t.sparseView());
            trans_t_.push_back(std::move(t));
            obs_.push_back(std::move(o));
        }
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t num_observations() const noexcept { return num_obs_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    std::size_t num_dfa_states() const noexcept { return num_dfa_states_; }

    const Eigen::MatrixXd& op(std::size_t o, std::size_t a) const { return ops_[a * num_obs_ + o]; }
    const Eigen::MatrixXd& trans(std::size_t a) const { return trans_t_[a]; }
    const Eigen::MatrixXd& obs(std::size_t a) const { return obs_[a]; }
    const Eigen::VectorXd& mu0() const noexcept { return mu0_; }
    const Eigen::VectorXd& final_indicator() const noexcept { return final_; }
    const Eigen::VectorXd& secret_indicator() const noexcept { return secret_; }
    const std::vector<std::size_t>& vsymbol() const noexcept { return vsymbol_; }
    const std::vector<Symbol>& alphabet() const noexcept { return alphabet_; }

    // E(o | ., a) as a column over V.
    auto emission(std::size_t o, std::size_t a) const {
        return obs_[a].row(static_cast<Eigen::Index>(o)).transpose();
    }

    // A_{o|a} * vec, in O(nnz) via the sparse transition matrix.
    Eigen::VectorXd apply(std::size_t o, std::size_t a, const Eigen::VectorXd& vec) const {
        return sparse_trans_[a] * vec.cwiseProduct(emission(o, a));
    }

    // A_{o|a}^T * vec.
    Eigen::VectorXd apply_transpose(std::size_t o, std::size_t a, const Eigen::VectorXd& vec) const {
        Eigen::VectorXd tmp = sparse_trans_[a].transpose() * vec;
        return tmp.cwiseProduct(emission(o, a));
    }

    void check_record(std::span<const std::size_t> obs, std::span<const std::size_t> acts) const {
        if (obs.size() != acts.size())
            throw InputError("observation and action sequences differ in length (" +
                             std::to_string(obs.size()) + " vs " + std::to_string(acts.size()) + ")");
        for (std::size_t o : obs)
            if (o >= num_obs_) throw InputError("unknown observation index " + std::to_string(o));
        for (std::size_t a : acts)
            if (a >= num_actions_) throw InputError("unknown action index " + std::to_string(a));
    }

private:
    std::size_t n_ = 0;
    std::size_t num_obs_ = 0;
    std::size_t num_actions_ = 0;
    std::size_t num_dfa_states_ = 1;
    std::vector<Eigen::MatrixXd> ops_;    // index a * |O| + o
    std::vector<Eigen::MatrixXd> trans_t_;
    std::vector<Eigen::MatrixXd> obs_;
    std::vector<Eigen::SparseMatrix<double>> sparse_trans_;
    Eigen::VectorXd mu0_;
    Eigen::VectorXd final_;
    Eigen::VectorXd secret_;
    std::vector<std::size_t> vsymbol_;
    std::vector<Symbol> alphabet_;
};

inline ObservableOperators build_operators(const ProductPomdp& p) { return ObservableOperators(p); }

// Scaled forward vector: true vector = exp(log_scale) * vec.
struct FilterState {
    Eigen::VectorXd vec;
    double log_scale = 0.0;

    static FilterState initial(const ObservableOperators& oo) { return {oo.mu0(), 0.0}; }

    bool impossible() const { return log_scale == -std::numeric_limits<double>::infinity(); }

    void advance(const ObservableOperators& oo, std::size_t o, std::size_t a) {
        if (impossible()) return;
        vec = oo.apply(o, a, vec);
        normalize();
    }

    void normalize() {
        const double s = vec.sum();
        if (s > 0.0) {
            vec /= s;
            log_scale += std::log(s);
        } else {
            vec.setZero();
            log_scale = -std::numeric_limits<double>::infinity();
        }
    }

    double log_probability() const {
        if (impossible()) return log_scale;
        return log_scale + std::log(vec.sum());
    }
    double probability() const { return impossible() ? 0.0 : std::exp(log_probability()); }
};

inline FilterState run_filter(const ObservableOperators& oo, std::span<const std::size_t> obs,
                              std::span<const std::size_t> acts) {
    oo.check_record(obs, acts);
    FilterState f = FilterState::initial(oo);
    for (std::size_t t = 0; t < obs.size(); ++t) f.advance(oo, obs[t], acts[t]);
    return f;
}

// P(o_{0:t} | a_{0:t}).
inline double seq_prob(const ObservableOperators& oo, std::span<const std::size_t> obs,
                       std::span<const std::size_t> acts) {
    return run_filter(oo, obs, acts).probability();
}

// log P(o_{0:t} | a_{0:t}); finite on horizons where the probability itself underflows.
inline double log_seq_prob(const ObservableOperators& oo, std::span<const std::size_t> obs,
                           std::span<const std::size_t> acts) {
    return run_filter(oo, obs, acts).log_probability();
}

// P(v_{t+1} = v_next, o_{0:t} | a_{0:t}).
inline double joint_state_seq_prob(const ObservableOperators& oo, std::size_t v_next,
                                   std::span<const std::size_t> obs,
                                   std::span<const std::size_t> acts) {
    if (v_next >= oo.size()) throw InputError("state index " + std::to_string(v_next) + " out of range");
    const FilterState f = run_filter(oo, obs, acts);
    if (f.impossible()) return 0.0;
    return std::exp(f.log_scale) * f.vec(static_cast<Eigen::Index>(v_next));
}

// P(V_t = . | o_{0:T}, a_{0:T}) as alpha_t * beta_t / P(o_{0:T} | a_{0:T}), where
// alpha_t consumes o_{0:t-1} and beta_t consumes o_{t:T}.
inline Eigen::VectorXd smooth(const ObservableOperators& oo, std::span<const std::size_t> obs,
                              std::span<const std::size_t> acts, std::size_t t) {
    oo.check_record(obs, acts);
    if (obs.empty() || t >= obs.size())
        throw InputError("smoothing time " + std::to_string(t) + " outside 0.." +
                         std::to_string(obs.empty() ? 0 : obs.size() - 1));
    if (run_filter(oo, obs, acts).impossible()) throw EvidenceImpossible();

    FilterState alpha = FilterState::initial(oo);
    for (std::size_t k = 0; k < t; ++k) alpha.advance(oo, obs[k], acts[k]);

    Eigen::VectorXd beta = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(oo.size()));
    for (std::size_t k = obs.size(); k-- > t;) {
        beta = oo.apply_transpose(obs[k], acts[k], beta);
        const double m = beta.maxCoeff();
        if (m > 0.0) beta /= m;
    }
    Eigen::VectorXd post = alpha.vec.cwiseProduct(beta);
    const double z = post.sum();
    if (!(z > 0.0)) throw EvidenceImpossible();
    return post / z;
}

// Pushes each smoothed state distribution through the labeling function,
// giving one distribution over the DFA alphabet per time step.
inline LabelDistributionSequence label_distribution_from_smoothing(
    const ObservableOperators& oo, std::span<const std::size_t> obs,
    std::span<const std::size_t> acts) {
    LabelDistributionSequence seq;
    for (std::size_t t = 0; t < obs.size(); ++t) {
        const Eigen::VectorXd post = smooth(oo, obs, acts, t);
        Eigen::VectorXd dist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(oo.alphabet().size()));
        for (std::size_t v = 0; v < oo.size(); ++v)
            dist(static_cast<Eigen::Index>(oo.vsymbol()[v])) += post(static_cast<Eigen::Index>(v));
        seq.dists.push_back(std::move(dist));
    }
    return seq;
}

}  // namespace perceptplan
