#pragma once

// Shared test models, random instance generators and brute-force oracles.
// The oracles enumerate hidden state paths directly from the product kernels
// and never go through the observable-operator code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/perceptplan.hpp"

namespace fixtures {

namespace pp = perceptplan;

// Two rooms, identity dynamics. "look" gives a noisy reading (blip is likely
// in s1), "stay" always returns null. L(s1) = {p}.
inline pp::LabeledPomdp two_room() {
    pp::LabeledPomdp m;
    m.states = {"s0", "s1"};
    m.actions = {"stay", "look"};
    m.observations = {"blip", "null"};
    m.aps = {"p"};
    m.label = {pp::Symbol{}, pp::Symbol{"p"}};
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    m.trans = {id, id};
    Eigen::MatrixXd stay(2, 2), look(2, 2);
    stay << 0.0, 1.0,
            0.0, 1.0;
    look << 0.1, 0.9,
            0.8, 0.2;
    m.emit = {stay, look};
    m.init = Eigen::Vector2d(0.5, 0.5);
    return m;
}

// F = F_sec = {q1}, reached on the first p.
inline pp::Dfa reach_p() {
    return pp::Dfa({"q0", "q1"}, {pp::Symbol{}, pp::Symbol{"p"}}, {0, 1, 1, 1}, 0, {false, true},
                   {false, true});
}

// Q = {q0, q1}, alphabet {a, b}: q0 -a-> q1, q0 -b-> q0, q1 absorbing, F = {q1}.
inline pp::Dfa reach_a() {
    return pp::Dfa({"q0", "q1"}, {pp::Symbol{"a"}, pp::Symbol{"b"}}, {1, 0, 1, 1}, 0, {false, true},
                   {false, false});
}

struct TwoRoom {
    pp::ProductPomdp product = pp::build_product(two_room(), reach_p());
    pp::ObservableOperators oo{product};
    static constexpr std::size_t stay = 0, look = 1, blip = 0, null = 1;
};

// Random stochastic row with some exact zeros.
inline Eigen::RowVectorXd random_row(std::mt19937_64& rng, Eigen::Index n, double zero_prob = 0.3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::RowVectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = u(rng) < zero_prob ? 0.0 : u(rng) + 0.05;
    if (r.sum() == 0.0) r(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n))) = 1.0;
    return r / r.sum();
}

inline pp::LabeledPomdp random_pomdp(std::mt19937_64& rng, std::size_t ns, std::size_t na, std::size_t no,
                                     const std::vector<std::string>& aps = {"p", "r"}) {
    pp::LabeledPomdp m;
    for (std::size_t i = 0; i < ns; ++i) m.states.push_back("s" + std::to_string(i));
    for (std::size_t i = 0; i < na; ++i) m.actions.push_back("a" + std::to_string(i));
    for (std::size_t i = 0; i < no; ++i) m.observations.push_back("o" + std::to_string(i));
    m.aps = aps;
    const auto alphabet = pp::powerset_alphabet(aps);
    for (std::size_t s = 0; s < ns; ++s) m.label.push_back(alphabet[rng() % alphabet.size()]);
    const auto S = static_cast<Eigen::Index>(ns);
    for (std::size_t a = 0; a < na; ++a) {
        Eigen::MatrixXd t(S, S), e(S, static_cast<Eigen::Index>(no));
        for (Eigen::Index s = 0; s < S; ++s) {
            t.row(s) = random_row(rng, S);
            e.row(s) = random_row(rng, static_cast<Eigen::Index>(no));
        }
        m.trans.push_back(t);
        m.emit.push_back(e);
    }
    m.init = random_row(rng, S, 0.2).transpose();
    return m;
}

inline pp::Dfa random_dfa(std::mt19937_64& rng, std::size_t nq, const std::vector<pp::Symbol>& alphabet) {
    std::vector<std::string> names;
    for (std::size_t q = 0; q < nq; ++q) names.push_back("q" + std::to_string(q));
    std::vector<std::size_t> delta(nq * alphabet.size());
    for (auto& d : delta) d = rng() % nq;
    std::vector<bool> final(nq), secret(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        final[q] = rng() % 2;
        secret[q] = rng() % 2;
    }
    return pp::Dfa(names, alphabet, delta, rng() % nq, final, secret);
}

inline pp::Dfa random_dfa(std::mt19937_64& rng, std::size_t nq, std::vector<std::string> aps = {"p", "r"}) {
    return random_dfa(rng, nq, pp::powerset_alphabet(aps));
}

// ---- brute-force oracles over hidden paths ---------------------------------

// Calls f(path, weight) for every v_0..v_{T+1} with
// weight = mu0(v_0) prod_t E(o_t | v_t, a_t) Delta(v_{t+1} | v_t, a_t) > 0.
inline void for_each_path(const pp::ProductPomdp& p, const std::vector<std::size_t>& obs,
                          const std::vector<std::size_t>& acts,
                          const std::function<void(const std::vector<std::size_t>&, double)>& f) {
    const std::size_t n = p.size();
    std::vector<std::size_t> path;
    std::function<void(double)> rec = [&](double w) {
        const std::size_t t = path.size() - 1;
        if (t == obs.size()) {
            f(path, w);
            return;
        }
        const std::size_t v = path.back();
        const auto a = static_cast<Eigen::Index>(acts[t]);
        const double e = p.emit[static_cast<std::size_t>(a)](static_cast<Eigen::Index>(v),
                                                             static_cast<Eigen::Index>(obs[t]));
        if (e == 0.0) return;
        for (std::size_t v2 = 0; v2 < n; ++v2) {
            const double d = p.trans[static_cast<std::size_t>(a)](static_cast<Eigen::Index>(v),
                                                                  static_cast<Eigen::Index>(v2));
            if (d == 0.0) continue;
            path.push_back(v2);
            rec(w * e * d);
            path.pop_back();
        }
    };
    for (std::size_t v0 = 0; v0 < n; ++v0) {
        const double w = p.init(static_cast<Eigen::Index>(v0));
        if (w == 0.0) continue;
        path = {v0};
        rec(w);
    }
}

inline double brute_seq_prob(const pp::ProductPomdp& p, const std::vector<std::size_t>& obs,
                             const std::vector<std::size_t>& acts) {
    double total = 0.0;
    for_each_path(p, obs, acts, [&](const auto&, double w) { total += w; });
    return total;
}

inline double brute_joint(const pp::ProductPomdp& p, std::size_t v_next, const std::vector<std::size_t>& obs,
                          const std::vector<std::size_t>& acts) {
    double total = 0.0;
    for_each_path(p, obs, acts, [&](const auto& path, double w) {
        if (path.back() == v_next) total += w;
    });
    return total;
}

// P(V_t = . | y) by path enumeration.
inline Eigen::VectorXd brute_smooth(const pp::ProductPomdp& p, const std::vector<std::size_t>& obs,
                                    const std::vector<std::size_t>& acts, std::size_t t) {
    Eigen::VectorXd post = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
    for_each_path(p, obs, acts, [&](const auto& path, double w) { post(static_cast<Eigen::Index>(path[t])) += w; });
    return post / post.sum();
}

// P(V_T in set | y), with V_T the state emitting the last observation.
inline double brute_posterior(const pp::ProductPomdp& p, const std::vector<bool>& set,
                              const std::vector<std::size_t>& obs, const std::vector<std::size_t>& acts) {
    double num = 0.0, den = 0.0;
    for_each_path(p, obs, acts, [&](const auto& path, double w) {
        den += w;
        if (set[path[path.size() - 2]]) num += w;
    });
    return num / den;
}

// Softmax policy probabilities computed without the policy class's helpers.
inline double brute_policy_prob(const pp::FscPolicy& pol, const std::vector<std::size_t>& obs,
                                const std::vector<std::size_t>& acts) {
    double prob = 1.0;
    std::vector<std::size_t> hist;
    for (std::size_t t = 0; t < acts.size(); ++t) {
        // memory = last k observations of the history
        std::vector<std::size_t> mem(hist.end() - static_cast<long>(std::min(hist.size(), pol.k())), hist.end());
        std::string name;
        for (auto o : mem) name += (name.empty() ? "" : " ") + pol.observations()[o];
        const auto row = pol.theta().row(static_cast<Eigen::Index>(pol.memory_index(name)));
        double z = 0.0;
        for (Eigen::Index a = 0; a < row.size(); ++a) z += std::exp(row(a));
        prob *= std::exp(row(static_cast<Eigen::Index>(acts[t]))) / z;
        hist.push_back(obs[t]);
    }
    return prob;
}

// Every (obs, acts) pair of length T+1.
inline void for_each_record(std::size_t no, std::size_t na, std::size_t horizon,
                            const std::function<void(const std::vector<std::size_t>&, const std::vector<std::size_t>&)>& f) {
    const std::size_t len = horizon + 1;
    std::vector<std::size_t> obs(len, 0), acts(len, 0);
    while (true) {
        f(obs, acts);
        std::size_t i = 0;
        for (; i < len; ++i) {
            if (++obs[i] < no) break;
            obs[i] = 0;
            if (++acts[i] < na) break;
            acts[i] = 0;
        }
        if (i == len) return;
    }
}

// Exact H(Z_T | Y) and P(W_T = 1) by enumerating records and hidden paths.
struct BruteObjective {
    double entropy = 0.0;
    double success = 0.0;
};

inline BruteObjective brute_objective(const pp::FscPolicy& pol, const pp::ProductPomdp& p, std::size_t horizon) {
    BruteObjective out;
    for_each_record(p.num_observations(), p.num_actions(), horizon, [&](const auto& obs, const auto& acts) {
        double den = 0.0, zs = 0.0, ws = 0.0;
        for_each_path(p, obs, acts, [&](const auto& path, double w) {
            den += w;
            const std::size_t vT = path[path.size() - 2];
            if (p.secret[vT]) zs += w;
            if (p.final[vT]) ws += w;
        });
        if (den == 0.0) return;
        const double py = den * brute_policy_prob(pol, obs, acts);
        const double z = zs / den;
        double h = 0.0;
        if (z > 0.0) h -= z * std::log(z);
        if (z < 1.0) h -= (1.0 - z) * std::log(1.0 - z);
        out.entropy += py * h;
        out.success += py * (ws / den);
    });
    return out;
}

inline pp::FscPolicy random_policy(std::mt19937_64& rng, std::size_t k, const pp::ProductPomdp& p, double scale = 1.0) {
    pp::FscPolicy pol(k, p.observations, p.actions);
    std::normal_distribution<double> n(0.0, scale);
    for (Eigen::Index i = 0; i < pol.theta().size(); ++i) pol.theta()(i) = n(rng);
    return pol;
}

}  // namespace fixtures
