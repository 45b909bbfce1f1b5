#pragma once

// UAV / ground-robot surveillance scenario on a small graph world.
//
// The POMDP state is (robot node, UAV node, robot type). The UAV picks the
// action; the robot moves concurrently under the fixed stochastic policy of its
// type. The camera reports the robot's node with probability detection_prob
// when both are on the same node, and "n" otherwise.
//
// Propositions: tau (robot is adversarial), a (UAV on the task node),
// p (UAV and robot co-located).

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perceptplan/automata.hpp"
#include "perceptplan/error.hpp"
#include "perceptplan/gradient.hpp"
#include "perceptplan/model.hpp"
#include "perceptplan/oomodel.hpp"
#include "perceptplan/sampler.hpp"

namespace perceptplan {

enum class GoalVariant { Overlapping, Nonoverlapping };

inline std::string to_string(GoalVariant v) {
    return v == GoalVariant::Overlapping ? "overlapping" : "nonoverlapping";
}

inline GoalVariant parse_variant(const std::string& s) {
    if (s == "overlapping") return GoalVariant::Overlapping;
    if (s == "nonoverlapping") return GoalVariant::Nonoverlapping;
    throw ConfigError("unknown goal variant '" + s + "'");
}

struct GraphWorld {
    std::size_t num_nodes = 0;
    std::vector<std::string> actions;
    std::vector<Eigen::MatrixXd> uav_dyn;    // per action: nodes x nodes
    std::vector<Eigen::MatrixXd> robot_dyn;  // per action: nodes x nodes
    Eigen::MatrixXd robot_policy_nominal;      // nodes x actions
    Eigen::MatrixXd robot_policy_adversarial;  // nodes x actions
    std::vector<std::size_t> goals_nominal;
    std::vector<std::size_t> goals_adversarial;

    // Robot chain of one type: R[g, g'] = sum_b pi(b | g) robot_dyn[b](g, g').
    Eigen::MatrixXd robot_chain(bool adversarial) const {
        const auto& pol = adversarial ? robot_policy_adversarial : robot_policy_nominal;
        const auto n = static_cast<Eigen::Index>(num_nodes);
        Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t b = 0; b < actions.size(); ++b)
            chain += pol.col(static_cast<Eigen::Index>(b)).asDiagonal() * robot_dyn[b];
        return chain;
    }

    std::vector<std::string> problems() const {
        std::vector<std::string> out;
        const auto n = static_cast<Eigen::Index>(num_nodes);
        const auto na = static_cast<Eigen::Index>(actions.size());
        auto check_rows = [&](const Eigen::MatrixXd& m, Eigen::Index cols, const std::string& what) {
            if (m.rows() != n || m.cols() != cols) {
                out.push_back(what + ": wrong shape");
                return false;
            }
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                if ((m.row(r).array() < 0.0).any() || std::abs(m.row(r).sum() - 1.0) > 1e-9)
                    out.push_back(what + ": row " + std::to_string(r) + " is not a distribution");
            return true;
        };
        if (uav_dyn.size() != actions.size() || robot_dyn.size() != actions.size()) {
            out.push_back("dynamics must list one matrix per action");
            return out;
        }
        for (std::size_t a = 0; a < actions.size(); ++a) {
            check_rows(uav_dyn[a], n, "uav_dyn[" + actions[a] + "]");
            check_rows(robot_dyn[a], n, "robot_dyn[" + actions[a] + "]");
        }
        const bool nom_ok = check_rows(robot_policy_nominal, na, "robot_policy.nominal");
        const bool adv_ok = check_rows(robot_policy_adversarial, na, "robot_policy.adversarial");
        if (!out.empty()) return out;
        auto check_goals = [&](const std::vector<std::size_t>& goals, bool adversarial,
                               const std::string& what) {
            const Eigen::MatrixXd chain = robot_chain(adversarial);
            for (std::size_t g : goals) {
                if (g >= num_nodes) {
                    out.push_back(what + ": goal node " + std::to_string(g) + " out of range");
                    continue;
                }
                const auto gi = static_cast<Eigen::Index>(g);
                if (std::abs(chain(gi, gi) - 1.0) > 1e-9)
                    out.push_back(what + ": goal node " + std::to_string(g) +
                                  " is not absorbing under the robot policy");
            }
        };
        if (nom_ok) check_goals(goals_nominal, false, "goals.nominal");
        if (adv_ok) check_goals(goals_adversarial, true, "goals.adversarial");
        return out;
    }
};

struct ScenarioConfig {
    double detection_prob = 0.9;
    double prior_adversarial = 0.5;
    GoalVariant variant = GoalVariant::Overlapping;
    std::size_t uav_start = 5;
    std::size_t robot_start = 0;
    std::size_t task_node = 2;
};

struct Scenario {
    ScenarioConfig config;
    GraphWorld world;
};

// Six-node reconstruction of the experiment world. Both agents share the
// graph: from the start side (0, 5) the moves a/b lead to the middle nodes 1/2,
// and from there a/b lead to the goal nodes 3/4; c holds position. Two edges
// are stochastic: 0 -b-> 2 (slips to 1) and 5 -c-> 4 (stays at 5).
inline GraphWorld experiment_world(GoalVariant variant) {
    GraphWorld w;
    w.num_nodes = 6;
    w.actions = {"a", "b", "c"};
    const Eigen::Index n = 6;
    std::vector<Eigen::MatrixXd> dyn(3, Eigen::MatrixXd::Zero(n, n));
    auto edge = [&](std::size_t act, Eigen::Index from, Eigen::Index to, double p) {
        dyn[act](from, to) += p;
    };
    // a
    edge(0, 0, 1, 1.0);
    edge(0, 1, 3, 1.0);
    edge(0, 2, 3, 1.0);
    edge(0, 3, 1, 1.0);
    edge(0, 4, 1, 1.0);
    edge(0, 5, 1, 1.0);
    // b
    edge(1, 0, 2, 0.9);
    edge(1, 0, 1, 0.1);
    edge(1, 1, 4, 1.0);
    edge(1, 2, 4, 1.0);
    edge(1, 3, 2, 1.0);
    edge(1, 4, 2, 1.0);
    edge(1, 5, 2, 1.0);
    // c
    for (Eigen::Index i = 0; i < 5; ++i) edge(2, i, i, 1.0);
    edge(2, 5, 4, 0.8);
    edge(2, 5, 5, 0.2);
    w.uav_dyn = dyn;
    w.robot_dyn = dyn;

    // Nominal: dawdles and splits between the middle nodes.
    Eigen::MatrixXd nominal(n, 3);
    Eigen::MatrixXd adversarial(n, 3);
    if (variant == GoalVariant::Overlapping) {
        nominal << 0.4, 0.4, 0.2,
                   0.75, 0.05, 0.2,
                   0.75, 0.05, 0.2,
                   0.0, 0.0, 1.0,
                   0.0, 0.0, 1.0,
                   0.0, 0.0, 1.0;
        w.goals_nominal = {3, 4};
    } else {
        nominal << 0.4, 0.4, 0.2,
                   0.8, 0.0, 0.2,
                   0.8, 0.0, 0.2,
                   0.0, 0.0, 1.0,
                   1.0, 0.0, 0.0,
                   0.0, 0.0, 1.0;
        w.goals_nominal = {3};
    }
    // Adversarial: straight to node 4 through either middle node.
    adversarial << 0.5, 0.5, 0.0,
                   0.0, 1.0, 0.0,
                   0.0, 1.0, 0.0,
                   0.0, 1.0, 0.0,
                   0.0, 0.0, 1.0,
                   0.0, 0.0, 1.0;
    w.goals_adversarial = {4};
    w.robot_policy_nominal = nominal;
    w.robot_policy_adversarial = adversarial;
    return w;
}

inline Scenario experiment_scenario(GoalVariant variant) {
    Scenario s;
    s.config.variant = variant;
    s.world = experiment_world(variant);
    return s;
}

inline std::size_t scenario_state(std::size_t num_nodes, std::size_t robot, std::size_t uav,
                                  bool adversarial) {
    return ((adversarial ? 1 : 0) * num_nodes + robot) * num_nodes + uav;
}

inline LabeledPomdp build_scenario_pomdp(const ScenarioConfig& cfg, const GraphWorld& world) {
    if (auto probs = world.problems(); !probs.empty()) throw ConfigError("world: " + probs.front());
    const std::size_t nn = world.num_nodes;
    if (cfg.uav_start >= nn || cfg.robot_start >= nn || cfg.task_node >= nn)
        throw ConfigError("scenario references a node outside 0.." + std::to_string(nn - 1));
    if (!(cfg.detection_prob >= 0.0 && cfg.detection_prob <= 1.0))
        throw ConfigError("detection_prob must lie in [0, 1]");
    if (!(cfg.prior_adversarial >= 0.0 && cfg.prior_adversarial <= 1.0))
        throw ConfigError("prior must lie in [0, 1]");

    LabeledPomdp m;
    const std::size_t ns = nn * nn * 2;
    const auto NS = static_cast<Eigen::Index>(ns);
    m.actions = world.actions;
    for (std::size_t i = 0; i < nn; ++i) m.observations.push_back(std::to_string(i));
    m.observations.push_back("n");
    m.aps = {"tau", "a", "p"};
    m.states.resize(ns);
    m.label.resize(ns);
    for (int ty = 0; ty < 2; ++ty)
        for (std::size_t g = 0; g < nn; ++g)
            for (std::size_t u = 0; u < nn; ++u) {
                const std::size_t s = scenario_state(nn, g, u, ty == 1);
                m.states[s] = "g" + std::to_string(g) + "u" + std::to_string(u) + (ty ? "A" : "N");
                std::vector<std::string> props;
                if (ty == 1) props.push_back("tau");
                if (u == cfg.task_node) props.push_back("a");
                if (g == u) props.push_back("p");
                m.label[s] = make_symbol(std::move(props));
            }

    const Eigen::MatrixXd chain[2] = {world.robot_chain(false), world.robot_chain(true)};
    const auto null_obs = static_cast<Eigen::Index>(nn);
    for (std::size_t a = 0; a < world.actions.size(); ++a) {
        Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(NS, NS);
        Eigen::MatrixXd emit = Eigen::MatrixXd::Zero(NS, null_obs + 1);
        for (int ty = 0; ty < 2; ++ty)
            for (std::size_t g = 0; g < nn; ++g)
                for (std::size_t u = 0; u < nn; ++u) {
                    const auto s = static_cast<Eigen::Index>(scenario_state(nn, g, u, ty == 1));
                    for (std::size_t g2 = 0; g2 < nn; ++g2) {
                        const double pg = chain[ty](static_cast<Eigen::Index>(g),
                                                    static_cast<Eigen::Index>(g2));
                        if (pg == 0.0) continue;
                        for (std::size_t u2 = 0; u2 < nn; ++u2) {
                            const double pu = world.uav_dyn[a](static_cast<Eigen::Index>(u),
                                                               static_cast<Eigen::Index>(u2));
                            if (pu == 0.0) continue;
                            trans(s, static_cast<Eigen::Index>(scenario_state(nn, g2, u2, ty == 1))) +=
                                pg * pu;
                        }
                    }
                    if (g == u) {
                        emit(s, static_cast<Eigen::Index>(g)) = cfg.detection_prob;
                        emit(s, null_obs) += 1.0 - cfg.detection_prob;
                    } else {
                        emit(s, null_obs) = 1.0;
                    }
                }
        m.trans.push_back(std::move(trans));
        m.emit.push_back(std::move(emit));
    }

    m.init = Eigen::VectorXd::Zero(NS);
    m.init(static_cast<Eigen::Index>(scenario_state(nn, cfg.robot_start, cfg.uav_start, false))) +=
        1.0 - cfg.prior_adversarial;
    m.init(static_cast<Eigen::Index>(scenario_state(nn, cfg.robot_start, cfg.uav_start, true))) +=
        cfg.prior_adversarial;
    return m;
}

// Task DFA for (!tau -> F a) & (tau -> F p), kept non-minimal so the type
// branch stays visible:
//   q0 --first symbol--> q1 (!tau) / q3 (!tau, a) / q2 (tau) / q4 (tau, p)
//   q1 --a--> q3,  q2 --p--> q4,  q3 and q4 absorbing.
// F = {q3, q4}; secret = {q2, q4}. The goal variant changes only the world.
inline Dfa build_task_dfa(GoalVariant = GoalVariant::Overlapping) {
    std::vector<Symbol> alphabet = powerset_alphabet({"tau", "a", "p"});
    const std::size_t ns = alphabet.size();
    std::vector<std::size_t> delta(5 * ns);
    auto has = [](const Symbol& s, const char* ap) {
        return std::find(s.begin(), s.end(), ap) != s.end();
    };
    for (std::size_t i = 0; i < ns; ++i) {
        const Symbol& s = alphabet[i];
        const bool tau = has(s, "tau");
        const bool a = has(s, "a");
        const bool p = has(s, "p");
        delta[0 * ns + i] = tau ? (p ? 4 : 2) : (a ? 3 : 1);
        delta[1 * ns + i] = a ? 3 : 1;
        delta[2 * ns + i] = p ? 4 : 2;
        delta[3 * ns + i] = 3;
        delta[4 * ns + i] = 4;
    }
    return Dfa({"q0", "q1", "q2", "q3", "q4"}, std::move(alphabet), std::move(delta), 0,
               {false, false, false, true, true}, {false, false, true, false, true});
}

struct EvalReport {
    double entropy = 0.0;
    double entropy_se = 0.0;
    double success = 0.0;
    double success_se = 0.0;
    std::size_t samples = 0;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_and_se(const std::vector<double>& xs) {
    const auto n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

// Monte-Carlo estimates of H(Z_T | Y) and P(W_T = 1) on a product, using the
// per-record posteriors (unbiased for both quantities).
inline EvalReport monte_carlo_evaluate(const FscPolicy& pol, const ProductPomdp& product,
                                       const ObservableOperators& oo, std::size_t horizon,
                                       std::size_t samples, std::uint64_t seed,
                                       LogBase base = LogBase::E, std::size_t workers = 1) {
    if (samples == 0) throw InputError("sample count must be at least 1");
    const auto batch = sample_batch(pol, product, horizon, samples, RngSpec{seed}, 0, workers);
    std::vector<double> h(samples);
    std::vector<double> w(samples);
    parallel_for(samples, workers, [&](std::size_t k) {
        const Posteriors post = event_posteriors(oo, batch[k].record());
        h[k] = entropy_given_y(post.secret, base);
        w[k] = post.success;
    });
    const MeanSe hs = mean_and_se(h);
    const MeanSe ws = mean_and_se(w);
    return {hs.mean, hs.se, ws.mean, ws.se, samples};
}

// Rebuilds the scenario with the robot-type prior overridden and evaluates the
// given policy on it.
inline EvalReport evaluate_under_prior(const FscPolicy& pol, const Scenario& scenario,
                                       double prior_adversarial, std::size_t horizon,
                                       std::size_t samples, std::uint64_t seed,
                                       LogBase base = LogBase::E, std::size_t workers = 1) {
    ScenarioConfig cfg = scenario.config;
    cfg.prior_adversarial = prior_adversarial;
    const ProductPomdp product =
        build_product(build_scenario_pomdp(cfg, scenario.world), build_task_dfa(cfg.variant));
    const ObservableOperators oo(product);
    return monte_carlo_evaluate(pol, product, oo, horizon, samples, seed, base, workers);
}

}  // namespace perceptplan
