#pragma once

// Labeled POMDPs and their synchronous product with a DFA.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/automata.hpp"
#include "perceptplan/error.hpp"

namespace perceptplan {

struct LabeledPomdp {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    std::vector<std::string> aps;
    std::vector<Eigen::MatrixXd> trans;  // per action: |S| x |S|, row s is P(. | s, a)
    std::vector<Eigen::MatrixXd> emit;   // per action: |S| x |O|, row s is E(. | s, a)
    Eigen::VectorXd init;
    std::vector<Symbol> label;  // L(s), canonical

    std::size_t num_states() const noexcept { return states.size(); }
    std::size_t num_actions() const noexcept { return actions.size(); }
    std::size_t num_observations() const noexcept { return observations.size(); }
};

struct Violation {
    std::string location;
    std::string defect;

    std::string to_string() const { return location + ": " + defect; }
};

namespace detail {

inline void check_distribution(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                               const std::string& where, std::vector<Violation>& out) {
    constexpr double tol = 1e-9;
    for (Eigen::Index i = 0; i < row.size(); ++i) {
        if (!std::isfinite(row(i)) || row(i) < 0.0) {
            out.push_back({where, "entry " + std::to_string(i) + " is negative or not finite (" +
                                      std::to_string(row(i)) + ")"});
            return;
        }
    }
    const double sum = row.sum();
    if (std::abs(sum - 1.0) > tol)
        out.push_back({where, "row sums to " + std::to_string(sum) + ", expected 1"});
}

}  // namespace detail

// Empty result iff every kernel row and the initial distribution are
// probability vectors and every label uses declared propositions.
inline std::vector<Violation> validate_pomdp(const LabeledPomdp& m) {
    std::vector<Violation> out;
    const auto ns = static_cast<Eigen::Index>(m.num_states());
    const auto no = static_cast<Eigen::Index>(m.num_observations());
    if (m.trans.size() != m.num_actions() || m.emit.size() != m.num_actions()) {
        out.push_back({"model", "kernel count does not match action count"});
        return out;
    }
    for (std::size_t a = 0; a < m.num_actions(); ++a) {
        if (m.trans[a].rows() != ns || m.trans[a].cols() != ns) {
            out.push_back({"trans[" + m.actions[a] + "]", "wrong shape"});
            continue;
        }
        if (m.emit[a].rows() != ns || m.emit[a].cols() != no) {
            out.push_back({"emit[" + m.actions[a] + "]", "wrong shape"});
            continue;
        }
        for (Eigen::Index s = 0; s < ns; ++s) {
            const std::string row = "(" + m.states[static_cast<std::size_t>(s)] + ", " +
                                    m.actions[a] + ")";
            detail::check_distribution(m.trans[a].row(s), "trans" + row, out);
            detail::check_distribution(m.emit[a].row(s), "emit" + row, out);
        }
    }
    if (m.init.size() != ns)
        out.push_back({"init", "wrong length"});
    else
        detail::check_distribution(m.init.transpose(), "init", out);

    if (m.label.size() != m.num_states()) {
        out.push_back({"label", "one label per state required"});
    } else {
        for (std::size_t s = 0; s < m.num_states(); ++s)
            for (const auto& ap : m.label[s])
                if (std::find(m.aps.begin(), m.aps.end(), ap) == m.aps.end())
                    out.push_back({"label(" + m.states[s] + ")", "unknown proposition '" + ap + "'"});
    }
    return out;
}

// Sparse view of one kernel row, used for sampling.
struct SparseRow {
    std::vector<std::size_t> index;
    std::vector<double> prob;
};

inline SparseRow sparse_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    SparseRow out;
    for (Eigen::Index i = 0; i < row.size(); ++i)
        if (row(i) > 0.0) {
            out.index.push_back(static_cast<std::size_t>(i));
            out.prob.push_back(row(i));
        }
    return out;
}

// Product state v = (s, q) has index s * |Q| + q. Unreachable pairs are kept.
struct ProductPomdp {
    std::size_t num_base_states = 0;
    std::size_t num_dfa_states = 0;
    std::vector<std::string> vnames;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    std::vector<Eigen::MatrixXd> trans;  // per action: N x N, row v is Delta(. | v, a)
    std::vector<Eigen::MatrixXd> emit;   // per action: N x |O|, row v is E(. | v, a)
    Eigen::VectorXd init;
    std::vector<bool> final;
    std::vector<bool> secret;
    std::vector<std::size_t> vsymbol;  // DFA symbol index of L(s) for v = (s, q)
    std::vector<Symbol> alphabet;
    std::vector<SparseRow> trans_rows;  // index v * |A| + a
    std::vector<SparseRow> emit_rows;   // index v * |A| + a
    SparseRow init_row;

    std::size_t size() const noexcept { return vnames.size(); }
    std::size_t num_actions() const noexcept { return actions.size(); }
    std::size_t num_observations() const noexcept { return observations.size(); }

    std::size_t index(std::size_t s, std::size_t q) const { return s * num_dfa_states + q; }
    std::size_t base_state(std::size_t v) const { return v / num_dfa_states; }
    std::size_t dfa_state(std::size_t v) const { return v % num_dfa_states; }

    std::size_t action_index(const std::string& name) const {
        auto it = std::find(actions.begin(), actions.end(), name);
        if (it == actions.end()) throw InputError("unknown action '" + name + "'");
        return static_cast<std::size_t>(it - actions.begin());
    }
    std::size_t observation_index(const std::string& name) const {
        auto it = std::find(observations.begin(), observations.end(), name);
        if (it == observations.end()) throw InputError("unknown observation '" + name + "'");
        return static_cast<std::size_t>(it - observations.begin());
    }
};

inline ProductPomdp build_product(const LabeledPomdp& m, const Dfa& dfa) {
    const std::size_t ns = m.num_states();
    const std::size_t nq = dfa.num_states();
    const std::size_t na = m.num_actions();
    const std::size_t n = ns * nq;
    const auto N = static_cast<Eigen::Index>(n);

    std::vector<std::size_t> sym(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        auto idx = find_symbol(dfa.alphabet(), make_symbol(m.label.at(s)));
        if (!idx)
            throw ConfigError("label " + symbol_to_string(make_symbol(m.label[s])) + " of state '" +
                              m.states[s] + "' is not in the DFA alphabet");
        sym[s] = *idx;
    }

    ProductPomdp p;
    p.num_base_states = ns;
    p.num_dfa_states = nq;
    p.actions = m.actions;
    p.observations = m.observations;
    p.alphabet = dfa.alphabet();
    p.vnames.reserve(n);
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t q = 0; q < nq; ++q) {
            p.vnames.push_back(m.states[s] + "|" + dfa.states()[q]);
            p.final.push_back(dfa.is_final(q));
            p.secret.push_back(dfa.is_secret(q));
            p.vsymbol.push_back(sym[s]);
        }

    for (std::size_t a = 0; a < na; ++a) {
        Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(N, N);
        Eigen::MatrixXd emit(N, static_cast<Eigen::Index>(m.num_observations()));
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t q = 0; q < nq; ++q) {
                const auto v = static_cast<Eigen::Index>(s * nq + q);
                emit.row(v) = m.emit[a].row(static_cast<Eigen::Index>(s));
                for (std::size_t s2 = 0; s2 < ns; ++s2) {
                    const double pr = m.trans[a](static_cast<Eigen::Index>(s),
                                                 static_cast<Eigen::Index>(s2));
                    if (pr == 0.0) continue;
                    const std::size_t q2 = dfa.step(q, sym[s2]);
                    delta(v, static_cast<Eigen::Index>(s2 * nq + q2)) += pr;
                }
            }
        p.trans.push_back(std::move(delta));
        p.emit.push_back(std::move(emit));
    }

    p.init = Eigen::VectorXd::Zero(N);
    for (std::size_t s = 0; s < ns; ++s)
        p.init(static_cast<Eigen::Index>(s * nq + dfa.step(dfa.initial(), sym[s]))) +=
            m.init(static_cast<Eigen::Index>(s));

    p.trans_rows.resize(n * na);
    p.emit_rows.resize(n * na);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t a = 0; a < na; ++a) {
            p.trans_rows[v * na + a] = sparse_row(p.trans[a].row(static_cast<Eigen::Index>(v)));
            p.emit_rows[v * na + a] = sparse_row(p.emit[a].row(static_cast<Eigen::Index>(v)));
        }
    p.init_row = sparse_row(p.init.transpose());
    return p;
}

struct EventIndicators {
    std::vector<bool> w_set;  // final product states
    std::vector<bool> z_set;  // secret product states

    bool in_w(std::size_t v) const { return w_set[v]; }
    bool in_z(std::size_t v) const { return z_set[v]; }
};

inline EventIndicators event_indicators(const ProductPomdp& p) {
    return {p.final, p.secret};
}

}  // namespace perceptplan
