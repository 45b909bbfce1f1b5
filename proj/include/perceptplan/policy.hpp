#pragma once

// Suffix-K finite-state controller: the memory state is the last (up to) K
// observations, and actions are drawn from a softmax over theta[x, .].

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/error.hpp"

namespace perceptplan {

inline constexpr std::size_t kDefaultMemoryCap = 100000;

class FscPolicy {
public:
    FscPolicy() = default;

    FscPolicy(std::size_t k, std::vector<std::string> observations, std::vector<std::string> actions,
              std::size_t memory_cap = kDefaultMemoryCap)
        : k_(k), observations_(std::move(observations)), actions_(std::move(actions)) {
        if (observations_.empty()) throw InputError("policy needs at least one observation");
        if (actions_.empty()) throw InputError("policy needs at least one action");
        const std::size_t no = observations_.size();

        // |X| = sum_{j=0..k} |O|^j, checked against the cap before allocating.
        std::size_t total = 0;
        std::size_t level = 1;
        for (std::size_t j = 0; j <= k_; ++j) {
            total += level;
            if (total > memory_cap)
                throw InputError("suffix-" + std::to_string(k_) + " memory needs more than " +
                                 std::to_string(memory_cap) + " states");
            if (j < k_) level *= no;
        }

        memory_.reserve(total);
        memory_.emplace_back();
        for (std::size_t begin = 0; memory_.size() < total;) {
            const std::size_t end = memory_.size();
            for (std::size_t x = begin; x < end; ++x)
                for (std::size_t o = 0; o < no; ++o) {
                    auto seq = memory_[x];
                    seq.push_back(o);
                    memory_.push_back(std::move(seq));
                }
            begin = end;
        }

        next_.assign(total * no, 0);
        for (std::size_t x = 0; x < total; ++x)
            for (std::size_t o = 0; o < no; ++o) {
                auto seq = memory_[x];
                seq.push_back(o);
                if (seq.size() > k_) seq.erase(seq.begin());
                next_[x * no + o] = lookup(seq);
            }
        theta_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total),
                                       static_cast<Eigen::Index>(actions_.size()));
    }

    std::size_t k() const noexcept { return k_; }
    std::size_t num_memory_states() const noexcept { return memory_.size(); }
    std::size_t num_actions() const noexcept { return actions_.size(); }
    std::size_t num_observations() const noexcept { return observations_.size(); }
    const std::vector<std::string>& observations() const noexcept { return observations_; }
    const std::vector<std::string>& actions() const noexcept { return actions_; }

    const Eigen::MatrixXd& theta() const noexcept { return theta_; }
    Eigen::MatrixXd& theta() noexcept { return theta_; }
    void set_theta(Eigen::MatrixXd theta) {
        if (theta.rows() != theta_.rows() || theta.cols() != theta_.cols())
            throw InputError("theta has the wrong shape");
        theta_ = std::move(theta);
    }

    static constexpr std::size_t initial_memory() noexcept { return 0; }

    const std::vector<std::size_t>& memory_sequence(std::size_t x) const { return memory_.at(x); }

    std::size_t memory_update(std::size_t x, std::size_t o) const {
        if (o >= observations_.size())
            throw InputError("unknown observation index " + std::to_string(o));
        return next_[x * observations_.size() + o];
    }

    // Space-joined observation names; "" for the initial memory state.
    std::string memory_name(std::size_t x) const {
        std::string out;
        for (std::size_t o : memory_.at(x)) {
            if (!out.empty()) out += ' ';
            out += observations_[o];
        }
        return out;
    }

    std::size_t memory_index(const std::string& name) const {
        std::vector<std::size_t> seq;
        std::istringstream in(name);
        for (std::string tok; in >> tok;) seq.push_back(observation_index(tok));
        if (seq.size() > k_) throw InputError("memory state '" + name + "' longer than k");
        return lookup(seq);
    }

    std::size_t observation_index(const std::string& name) const {
        for (std::size_t i = 0; i < observations_.size(); ++i)
            if (observations_[i] == name) return i;
        throw InputError("unknown observation '" + name + "'");
    }

    std::size_t action_index(const std::string& name) const {
        for (std::size_t i = 0; i < actions_.size(); ++i)
            if (actions_[i] == name) return i;
        throw InputError("unknown action '" + name + "'");
    }

    // psi_theta(. | x), max-subtracted softmax.
    Eigen::VectorXd action_dist(std::size_t x) const {
        const Eigen::VectorXd row = theta_.row(static_cast<Eigen::Index>(x)).transpose();
        Eigen::VectorXd e = (row.array() - row.maxCoeff()).exp().matrix();
        return e / e.sum();
    }

    std::size_t memory_after(std::span<const std::size_t> history) const {
        std::size_t x = initial_memory();
        for (std::size_t o : history) x = memory_update(x, o);
        return x;
    }

    // pi_theta(. | o_{0:t-1}); an empty history gives the initial memory state.
    Eigen::VectorXd policy_prob(std::span<const std::size_t> history) const {
        return action_dist(memory_after(history));
    }

    // sum_t log pi_theta(a_t | o_{0:t-1}).
    double log_prob(std::span<const std::size_t> obs, std::span<const std::size_t> acts) const {
        check_lengths(obs, acts);
        double lp = 0.0;
        std::size_t x = initial_memory();
        for (std::size_t t = 0; t < acts.size(); ++t) {
            lp += std::log(action_dist(x)(static_cast<Eigen::Index>(check_action(acts[t]))));
            x = memory_update(x, obs[t]);
        }
        return lp;
    }

    // grad_theta log P_theta(y) = sum_t (e_{a_t} - psi(. | x_t)) placed in row x_t.
    Eigen::MatrixXd score(std::span<const std::size_t> obs, std::span<const std::size_t> acts) const {
        check_lengths(obs, acts);
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(theta_.rows(), theta_.cols());
        std::size_t x = initial_memory();
        for (std::size_t t = 0; t < acts.size(); ++t) {
            const auto row = static_cast<Eigen::Index>(x);
            g.row(row) -= action_dist(x).transpose();
            g(row, static_cast<Eigen::Index>(check_action(acts[t]))) += 1.0;
            x = memory_update(x, obs[t]);
        }
        return g;
    }

private:
    std::size_t lookup(const std::vector<std::size_t>& seq) const {
        const std::size_t no = observations_.size();
        std::size_t offset = 0;
        std::size_t level = 1;
        for (std::size_t j = 0; j < seq.size(); ++j) {
            offset += level;
            level *= no;
        }
        std::size_t within = 0;
        for (std::size_t o : seq) within = within * no + o;
        return offset + within;
    }

    std::size_t check_action(std::size_t a) const {
        if (a >= actions_.size()) throw InputError("unknown action index " + std::to_string(a));
        return a;
    }

    static void check_lengths(std::span<const std::size_t> obs, std::span<const std::size_t> acts) {
        if (obs.size() != acts.size())
            throw InputError("observation and action sequences differ in length");
    }

    std::size_t k_ = 0;
    std::vector<std::string> observations_;
    std::vector<std::string> actions_;
    std::vector<std::vector<std::size_t>> memory_;
    std::vector<std::size_t> next_;
    Eigen::MatrixXd theta_;
};

inline std::size_t memory_update(const FscPolicy& pol, std::size_t x, std::size_t o) {
    return pol.memory_update(x, o);
}

inline Eigen::VectorXd action_dist(const FscPolicy& pol, std::size_t x) { return pol.action_dist(x); }

inline Eigen::VectorXd policy_prob(const FscPolicy& pol, std::span<const std::size_t> history) {
    return pol.policy_prob(history);
}

inline Eigen::MatrixXd score(const FscPolicy& pol, std::span<const std::size_t> obs,
                             std::span<const std::size_t> acts) {
    return pol.score(obs, acts);
}

}  // namespace perceptplan
