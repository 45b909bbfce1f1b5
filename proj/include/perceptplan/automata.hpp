#pragma once

// Complete DFAs over label symbols (sets of atomic propositions) with final and
// secret state sets, and their weighted-automaton matrix view.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/error.hpp"

namespace perceptplan {

// A label symbol: a set of atomic-proposition names, kept sorted and unique so
// that {a,tau} and {tau,a} compare equal.
using Symbol = std::vector<std::string>;

inline Symbol make_symbol(std::vector<std::string> props) {
    std::sort(props.begin(), props.end());
    props.erase(std::unique(props.begin(), props.end()), props.end());
    return props;
}

inline std::string symbol_to_string(const Symbol& sym) {
    std::string out = "{";
    for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i) out += ",";
        out += sym[i];
    }
    return out + "}";
}

inline std::optional<std::size_t> find_symbol(const std::vector<Symbol>& alphabet,
                                              const Symbol& sym) {
    auto it = std::find(alphabet.begin(), alphabet.end(), sym);
    if (it == alphabet.end()) return std::nullopt;
    return static_cast<std::size_t>(it - alphabet.begin());
}

// All 2^|props| symbols over the given propositions, in binary-counter order
// (bit i of the counter selects props[i]).
inline std::vector<Symbol> powerset_alphabet(const std::vector<std::string>& props) {
    std::vector<Symbol> out;
    const std::size_t n = props.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::string> sym;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) sym.push_back(props[i]);
        out.push_back(make_symbol(std::move(sym)));
    }
    return out;
}

enum class AcceptTarget { Final, Secret };

// DFA whose transition function may be partial. Only produced by loaders and
// consumed by dfa_complete.
struct PartialDfa {
    std::vector<std::string> states;
    std::vector<Symbol> alphabet;
    std::vector<std::optional<std::size_t>> delta;  // row-major |Q| x |Sigma|
    std::size_t initial = 0;
    std::vector<bool> final;
    std::vector<bool> secret;

    PartialDfa() = default;
    PartialDfa(std::vector<std::string> names, std::vector<Symbol> symbols)
        : states(std::move(names)), alphabet(std::move(symbols)),
          delta(states.size() * alphabet.size()), final(states.size(), false),
          secret(states.size(), false) {}

    void set(std::size_t q, std::size_t sigma, std::size_t to) {
        delta[q * alphabet.size() + sigma] = to;
    }
};

class Dfa {
public:
    Dfa() = default;

    // Throws InputError if delta is not total or any index is out of range.
    Dfa(std::vector<std::string> states, std::vector<Symbol> alphabet,
        std::vector<std::size_t> delta, std::size_t initial, std::vector<bool> final,
        std::vector<bool> secret)
        : states_(std::move(states)), alphabet_(std::move(alphabet)), delta_(std::move(delta)),
          initial_(initial), final_(std::move(final)), secret_(std::move(secret)) {
        for (auto& s : alphabet_) s = make_symbol(s);
        const std::size_t nq = states_.size();
        if (nq == 0) throw InputError("DFA has no states");
        if (delta_.size() != nq * alphabet_.size())
            throw InputError("DFA transition table is not total");
        for (std::size_t t : delta_)
            if (t >= nq) throw InputError("DFA transition targets unknown state index");
        if (initial_ >= nq) throw InputError("DFA initial state out of range");
        if (final_.size() != nq || secret_.size() != nq)
            throw InputError("DFA final/secret masks do not match state count");
    }

    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t num_symbols() const noexcept { return alphabet_.size(); }
    const std::vector<std::string>& states() const noexcept { return states_; }
    const std::vector<Symbol>& alphabet() const noexcept { return alphabet_; }
    std::size_t initial() const noexcept { return initial_; }
    bool is_final(std::size_t q) const { return final_.at(q); }
    bool is_secret(std::size_t q) const { return secret_.at(q); }
    const std::vector<bool>& final_mask() const noexcept { return final_; }
    const std::vector<bool>& secret_mask() const noexcept { return secret_; }

    std::size_t step(std::size_t q, std::size_t sigma) const {
        if (q >= num_states())
            throw InputError("unknown DFA state index " + std::to_string(q));
        if (sigma >= num_symbols())
            throw InputError("unknown DFA symbol index " + std::to_string(sigma));
        return delta_[q * num_symbols() + sigma];
    }

    std::size_t state_index(std::string_view name) const {
        auto it = std::find(states_.begin(), states_.end(), name);
        if (it == states_.end()) throw InputError("unknown DFA state '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - states_.begin());
    }

    std::size_t symbol_index(const Symbol& sym) const {
        auto idx = find_symbol(alphabet_, make_symbol(sym));
        if (!idx) throw InputError("unknown DFA symbol " + symbol_to_string(make_symbol(sym)));
        return *idx;
    }

    bool operator==(const Dfa&) const = default;

private:
    std::vector<std::string> states_;
    std::vector<Symbol> alphabet_;
    std::vector<std::size_t> delta_;
    std::size_t initial_ = 0;
    std::vector<bool> final_;
    std::vector<bool> secret_;
};

inline std::size_t dfa_step(const Dfa& dfa, std::size_t q, std::size_t sigma) {
    return dfa.step(q, sigma);
}

// Named-token overload; errors name the offending state or symbol.
inline std::string dfa_step(const Dfa& dfa, std::string_view q, const Symbol& sigma) {
    return dfa.states()[dfa.step(dfa.state_index(q), dfa.symbol_index(sigma))];
}

inline std::size_t dfa_run(const Dfa& dfa, const std::vector<std::size_t>& word) {
    std::size_t q = dfa.initial();
    for (std::size_t sigma : word) q = dfa.step(q, sigma);
    return q;
}

inline std::size_t dfa_run(const Dfa& dfa, const std::vector<Symbol>& word) {
    std::size_t q = dfa.initial();
    for (const auto& sigma : word) q = dfa.step(q, dfa.symbol_index(sigma));
    return q;
}

struct Completion {
    Dfa dfa;
    bool sink_added = false;
};

// Redirects every undefined transition to one fresh non-final, non-secret
// absorbing sink. Total inputs come back unchanged.
inline Completion dfa_complete(const PartialDfa& partial) {
    const std::size_t nq = partial.states.size();
    const std::size_t ns = partial.alphabet.size();
    if (partial.delta.size() != nq * ns)
        throw InputError("partial DFA transition table has wrong size");
    const bool total = std::all_of(partial.delta.begin(), partial.delta.end(),
                                   [](const auto& t) { return t.has_value(); });

    auto states = partial.states;
    auto final = partial.final;
    auto secret = partial.secret;
    std::size_t sink = nq;
    if (!total) {
        std::string name = "sink";
        while (std::find(states.begin(), states.end(), name) != states.end()) name += "_";
        states.push_back(name);
        final.push_back(false);
        secret.push_back(false);
    }
    const std::size_t nq_out = states.size();
    std::vector<std::size_t> delta(nq_out * ns, sink);
    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t s = 0; s < ns; ++s)
            if (const auto& t = partial.delta[q * ns + s]) delta[q * ns + s] = *t;
    return {Dfa(std::move(states), partial.alphabet, std::move(delta), partial.initial,
                std::move(final), std::move(secret)),
            !total};
}

struct DfaMatrices {
    Eigen::RowVectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_sec;
    std::vector<Eigen::MatrixXd> trans;  // indexed by symbol

    const Eigen::VectorXd& target(AcceptTarget t) const {
        return t == AcceptTarget::Final ? beta : beta_sec;
    }
};

inline DfaMatrices dfa_matrices(const Dfa& dfa) {
    const auto nq = static_cast<Eigen::Index>(dfa.num_states());
    DfaMatrices m;
    m.alpha = Eigen::RowVectorXd::Zero(nq);
    m.alpha(static_cast<Eigen::Index>(dfa.initial())) = 1.0;
    m.beta = Eigen::VectorXd::Zero(nq);
    m.beta_sec = Eigen::VectorXd::Zero(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
        m.beta(q) = dfa.is_final(static_cast<std::size_t>(q)) ? 1.0 : 0.0;
        m.beta_sec(q) = dfa.is_secret(static_cast<std::size_t>(q)) ? 1.0 : 0.0;
    }
    for (std::size_t s = 0; s < dfa.num_symbols(); ++s) {
        Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(nq, nq);
        for (Eigen::Index q = 0; q < nq; ++q)
            ms(q, static_cast<Eigen::Index>(dfa.step(static_cast<std::size_t>(q), s))) = 1.0;
        m.trans.push_back(std::move(ms));
    }
    return m;
}

// Per-step probability maps over the alphabet (indexed like Dfa::alphabet()).
struct LabelDistributionSequence {
    std::vector<Eigen::VectorXd> dists;

    bool valid(double tol = 1e-9) const {
        for (const auto& d : dists) {
            if ((d.array() < 0.0).any() || (d.array() > 1.0).any()) return false;
            if (std::abs(d.sum() - 1.0) > tol) return false;
        }
        return true;
    }
};

// alpha * M_{L_0} ... M_{L_T} * beta_target with M_{L_t} = sum_sigma P(L_t=sigma) M_sigma.
// Exact only when the per-step label distributions are independent.
inline double weighted_acceptance(const DfaMatrices& mats, const LabelDistributionSequence& seq,
                                  AcceptTarget target) {
    Eigen::RowVectorXd row = mats.alpha;
    for (const auto& dist : seq.dists) {
        if (static_cast<std::size_t>(dist.size()) != mats.trans.size())
            throw InputError("label distribution size does not match the alphabet");
        Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(row.size());
        for (Eigen::Index s = 0; s < dist.size(); ++s)
            if (dist(s) != 0.0) next += dist(s) * (row * mats.trans[static_cast<std::size_t>(s)]);
        row = std::move(next);
    }
    return row.dot(mats.target(target));
}

}  // namespace perceptplan
