#pragma once

// JSON readers and writers for DFAs, labeled POMDPs, policy checkpoints,
// scenarios and trajectory dumps.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "perceptplan/automata.hpp"
#include "perceptplan/error.hpp"
#include "perceptplan/model.hpp"
#include "perceptplan/policy.hpp"
#include "perceptplan/sampler.hpp"
#include "perceptplan/scenarios.hpp"

namespace perceptplan::io {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Parses text, turning syntax errors into "<source>:<line>:<col>: ..." messages.
inline json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t end = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                          e.what());
    }
}

inline json load_json(const std::string& path) { return parse_json(read_file(path), path); }

namespace detail {

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline std::size_t index_of(const std::vector<std::string>& names, const std::string& name,
                            const std::string& where) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw ConfigError(where + ": unknown name '" + name + "'");
}

inline void check_unique(const std::vector<std::string>& names, const std::string& where) {
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t k = i + 1; k < names.size(); ++k)
            if (names[i] == names[k]) throw ConfigError(where + ": duplicate name '" + names[i] + "'");
}

inline std::vector<std::string> symbol_json(const Symbol& s) { return s; }

}  // namespace detail

// ---- DFA --------------------------------------------------------------------

inline Completion dfa_from_json(const json& j, const std::string& src = "dfa") {
    using detail::get;
    const auto states = get<std::vector<std::string>>(j, "states", src);
    detail::check_unique(states, src + ".states");
    std::vector<Symbol> alphabet;
    for (const auto& sym : get<std::vector<std::vector<std::string>>>(j, "alphabet", src)) {
        Symbol s = make_symbol(sym);
        if (find_symbol(alphabet, s)) throw ConfigError(src + ".alphabet: duplicate symbol " + symbol_to_string(s));
        alphabet.push_back(std::move(s));
    }
    PartialDfa p(states, alphabet);
    p.initial = detail::index_of(states, get<std::string>(j, "initial", src), src + ".initial");
    for (const auto& f : get<std::vector<std::string>>(j, "final", src))
        p.final[detail::index_of(states, f, src + ".final")] = true;
    for (const auto& f : get<std::vector<std::string>>(j, "secret", src))
        p.secret[detail::index_of(states, f, src + ".secret")] = true;
    const json delta = get<json>(j, "delta", src);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const std::string where = src + ".delta[" + std::to_string(i) + "]";
        const auto from = detail::index_of(states, get<std::string>(delta[i], "from", where), where + ".from");
        const auto to = detail::index_of(states, get<std::string>(delta[i], "to", where), where + ".to");
        const Symbol on = make_symbol(get<std::vector<std::string>>(delta[i], "on", where));
        const auto sym = find_symbol(alphabet, on);
        if (!sym) throw ConfigError(where + ".on: symbol " + symbol_to_string(on) + " not in alphabet");
        const auto& existing = p.delta[from * alphabet.size() + *sym];
        if (existing && *existing != to)
            throw ConfigError(where + ": conflicting transition (DFA must be deterministic)");
        p.set(from, *sym, to);
    }
    return dfa_complete(p);
}

inline Completion load_dfa(const std::string& path) { return dfa_from_json(load_json(path), path); }

inline json dfa_to_json(const Dfa& dfa) {
    json j;
    j["states"] = dfa.states();
    json alphabet = json::array();
    for (const auto& s : dfa.alphabet()) alphabet.push_back(detail::symbol_json(s));
    j["alphabet"] = alphabet;
    j["initial"] = dfa.states()[dfa.initial()];
    std::vector<std::string> final, secret;
    for (std::size_t q = 0; q < dfa.num_states(); ++q) {
        if (dfa.is_final(q)) final.push_back(dfa.states()[q]);
        if (dfa.is_secret(q)) secret.push_back(dfa.states()[q]);
    }
    j["final"] = final;
    j["secret"] = secret;
    json delta = json::array();
    for (std::size_t q = 0; q < dfa.num_states(); ++q)
        for (std::size_t s = 0; s < dfa.num_symbols(); ++s)
            delta.push_back({{"from", dfa.states()[q]},
                             {"on", detail::symbol_json(dfa.alphabet()[s])},
                             {"to", dfa.states()[dfa.step(q, s)]}});
    j["delta"] = delta;
    return j;
}

// ---- labeled POMDP ------------------------------------------------------------

inline LabeledPomdp pomdp_from_json(const json& j, const std::string& src = "pomdp") {
    using detail::get;
    LabeledPomdp m;
    m.states = get<std::vector<std::string>>(j, "states", src);
    m.actions = get<std::vector<std::string>>(j, "actions", src);
    m.observations = get<std::vector<std::string>>(j, "observations", src);
    m.aps = get<std::vector<std::string>>(j, "aps", src);
    detail::check_unique(m.states, src + ".states");
    detail::check_unique(m.actions, src + ".actions");
    detail::check_unique(m.observations, src + ".observations");
    const auto ns = static_cast<Eigen::Index>(m.states.size());
    const auto no = static_cast<Eigen::Index>(m.observations.size());
    if (ns == 0 || m.actions.empty() || no == 0)
        throw ConfigError(src + ": states, actions and observations must be non-empty");

    m.label.assign(m.states.size(), Symbol{});
    const auto labels = get<std::map<std::string, std::vector<std::string>>>(j, "label", src);
    for (const auto& [state, props] : labels) {
        const auto s = detail::index_of(m.states, state, src + ".label");
        for (const auto& ap : props) detail::index_of(m.aps, ap, src + ".label." + state);
        m.label[s] = make_symbol(props);
    }

    m.init = Eigen::VectorXd::Zero(ns);
    for (const auto& [state, p] : get<std::map<std::string, double>>(j, "init", src))
        m.init(static_cast<Eigen::Index>(detail::index_of(m.states, state, src + ".init"))) = p;

    auto read_rows = [&](const char* key, const std::vector<std::string>& targets,
                         std::vector<Eigen::MatrixXd>& out) {
        out.assign(m.actions.size(),
                   Eigen::MatrixXd::Zero(ns, static_cast<Eigen::Index>(targets.size())));
        std::vector<bool> seen(m.states.size() * m.actions.size(), false);
        const json rows = get<json>(j, key, src);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::string where = src + "." + key + "[" + std::to_string(i) + "]";
            const auto s = detail::index_of(m.states, get<std::string>(rows[i], "s", where), where + ".s");
            const auto a = detail::index_of(m.actions, get<std::string>(rows[i], "a", where), where + ".a");
            if (seen[s * m.actions.size() + a])
                throw ConfigError(where + ": duplicate row for (" + m.states[s] + ", " + m.actions[a] + ")");
            seen[s * m.actions.size() + a] = true;
            for (const auto& [target, p] : get<std::map<std::string, double>>(rows[i], "dist", where))
                out[a](static_cast<Eigen::Index>(s),
                       static_cast<Eigen::Index>(detail::index_of(targets, target, where + ".dist"))) = p;
        }
        for (std::size_t s = 0; s < m.states.size(); ++s)
            for (std::size_t a = 0; a < m.actions.size(); ++a)
                if (!seen[s * m.actions.size() + a])
                    throw ConfigError(src + "." + key + ": no row for (" + m.states[s] + ", " +
                                      m.actions[a] + ")");
    };
    read_rows("trans", m.states, m.trans);
    read_rows("emit", m.observations, m.emit);
    return m;
}

inline LabeledPomdp load_pomdp(const std::string& path) { return pomdp_from_json(load_json(path), path); }

inline json pomdp_to_json(const LabeledPomdp& m) {
    json j;
    j["states"] = m.states;
    j["actions"] = m.actions;
    j["observations"] = m.observations;
    j["aps"] = m.aps;
    json label = json::object();
    for (std::size_t s = 0; s < m.states.size(); ++s) label[m.states[s]] = m.label[s];
    j["label"] = label;
    json init = json::object();
    for (std::size_t s = 0; s < m.states.size(); ++s)
        if (m.init(static_cast<Eigen::Index>(s)) != 0.0) init[m.states[s]] = m.init(static_cast<Eigen::Index>(s));
    j["init"] = init;
    auto rows = [&](const std::vector<Eigen::MatrixXd>& mats, const std::vector<std::string>& targets) {
        json out = json::array();
        for (std::size_t s = 0; s < m.states.size(); ++s)
            for (std::size_t a = 0; a < m.actions.size(); ++a) {
                json dist = json::object();
                for (std::size_t t = 0; t < targets.size(); ++t) {
                    const double p = mats[a](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
                    if (p != 0.0) dist[targets[t]] = p;
                }
                out.push_back({{"s", m.states[s]}, {"a", m.actions[a]}, {"dist", dist}});
            }
        return out;
    };
    j["trans"] = rows(m.trans, m.states);
    j["emit"] = rows(m.emit, m.observations);
    return j;
}

// ---- policy checkpoint --------------------------------------------------------

inline json policy_to_json(const FscPolicy& pol) {
    json theta = json::object();
    for (std::size_t x = 0; x < pol.num_memory_states(); ++x) {
        json row = json::object();
        for (std::size_t a = 0; a < pol.num_actions(); ++a)
            row[pol.actions()[a]] = pol.theta()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
        theta[pol.memory_name(x)] = row;
    }
    return {{"k", pol.k()}, {"observations", pol.observations()}, {"actions", pol.actions()}, {"theta", theta}};
}

inline FscPolicy policy_from_json(const json& j, const std::string& src = "policy") {
    using detail::get;
    FscPolicy pol(get<std::size_t>(j, "k", src), get<std::vector<std::string>>(j, "observations", src),
                  get<std::vector<std::string>>(j, "actions", src));
    const json theta = get<json>(j, "theta", src);
    for (const auto& [name, row] : theta.items()) {
        std::size_t x = 0;
        try {
            x = pol.memory_index(name);
        } catch (const InputError& e) {
            throw ConfigError(src + ".theta: " + e.what());
        }
        for (const auto& [act, value] : row.items())
            pol.theta()(static_cast<Eigen::Index>(x),
                        static_cast<Eigen::Index>(detail::index_of(pol.actions(), act, src + ".theta." + name))) =
                value.get<double>();
    }
    return pol;
}

inline FscPolicy load_policy(const std::string& path) { return policy_from_json(load_json(path), path); }

// ---- scenario -----------------------------------------------------------------

namespace detail {

inline json node_action_table(const std::vector<Eigen::MatrixXd>& dyn, const std::vector<std::string>& actions) {
    json out = json::object();
    const auto n = dyn.empty() ? 0 : dyn[0].rows();
    for (Eigen::Index from = 0; from < n; ++from) {
        json per_action = json::object();
        for (std::size_t a = 0; a < actions.size(); ++a) {
            json dist = json::object();
            for (Eigen::Index to = 0; to < n; ++to)
                if (dyn[a](from, to) != 0.0) dist[std::to_string(to)] = dyn[a](from, to);
            per_action[actions[a]] = dist;
        }
        out[std::to_string(from)] = per_action;
    }
    return out;
}

inline std::size_t node_key(const std::string& key, std::size_t nodes, const std::string& where) {
    std::size_t pos = 0;
    std::size_t v = 0;
    try {
        v = std::stoul(key, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != key.size() || v >= nodes) throw ConfigError(where + ": bad node '" + key + "'");
    return v;
}

inline std::vector<Eigen::MatrixXd> read_node_action_table(const json& j, std::size_t nodes,
                                                           const std::vector<std::string>& actions,
                                                           const std::string& where) {
    const auto n = static_cast<Eigen::Index>(nodes);
    std::vector<Eigen::MatrixXd> out(actions.size(), Eigen::MatrixXd::Zero(n, n));
    if (!j.is_object()) throw ConfigError(where + ": expected an object keyed by node");
    for (const auto& [from_key, per_action] : j.items()) {
        const auto from = static_cast<Eigen::Index>(node_key(from_key, nodes, where));
        for (const auto& [act, dist] : per_action.items()) {
            const auto a = index_of(actions, act, where + "." + from_key);
            for (const auto& [to_key, p] : dist.items())
                out[a](from, static_cast<Eigen::Index>(node_key(to_key, nodes, where + "." + from_key + "." + act))) =
                    p.get<double>();
        }
    }
    return out;
}

inline json policy_table(const Eigen::MatrixXd& pol, const std::vector<std::string>& actions) {
    json out = json::object();
    for (Eigen::Index g = 0; g < pol.rows(); ++g) {
        json row = json::object();
        for (std::size_t a = 0; a < actions.size(); ++a)
            if (pol(g, static_cast<Eigen::Index>(a)) != 0.0) row[actions[a]] = pol(g, static_cast<Eigen::Index>(a));
        out[std::to_string(g)] = row;
    }
    return out;
}

inline Eigen::MatrixXd read_policy_table(const json& j, std::size_t nodes, const std::vector<std::string>& actions,
                                         const std::string& where) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes),
                                                static_cast<Eigen::Index>(actions.size()));
    if (!j.is_object()) throw ConfigError(where + ": expected an object keyed by node");
    for (const auto& [key, row] : j.items()) {
        const auto g = static_cast<Eigen::Index>(node_key(key, nodes, where));
        for (const auto& [act, p] : row.items())
            out(g, static_cast<Eigen::Index>(index_of(actions, act, where + "." + key))) = p.get<double>();
    }
    return out;
}

}  // namespace detail

inline json scenario_to_json(const Scenario& sc) {
    const auto& w = sc.world;
    json world;
    world["nodes"] = w.num_nodes;
    world["actions"] = w.actions;
    world["uav_dyn"] = detail::node_action_table(w.uav_dyn, w.actions);
    world["robot_dyn"] = detail::node_action_table(w.robot_dyn, w.actions);
    world["robot_policy"] = {{"nominal", detail::policy_table(w.robot_policy_nominal, w.actions)},
                             {"adversarial", detail::policy_table(w.robot_policy_adversarial, w.actions)}};
    world["goals"] = {{"nominal", w.goals_nominal}, {"adversarial", w.goals_adversarial}};
    return {{"world", world},
            {"detection_prob", sc.config.detection_prob},
            {"prior", {{"nominal", 1.0 - sc.config.prior_adversarial}, {"adversarial", sc.config.prior_adversarial}}},
            {"variant", to_string(sc.config.variant)},
            {"uav_start", sc.config.uav_start},
            {"robot_start", sc.config.robot_start},
            {"task_node", sc.config.task_node}};
}

inline Scenario scenario_from_json(const json& j, const std::string& src = "scenario") {
    using detail::get;
    Scenario sc;
    const json w = get<json>(j, "world", src);
    const std::string ws = src + ".world";
    sc.world.num_nodes = get<std::size_t>(w, "nodes", ws);
    sc.world.actions = get<std::vector<std::string>>(w, "actions", ws);
    detail::check_unique(sc.world.actions, ws + ".actions");
    sc.world.uav_dyn = detail::read_node_action_table(get<json>(w, "uav_dyn", ws), sc.world.num_nodes,
                                                      sc.world.actions, ws + ".uav_dyn");
    sc.world.robot_dyn = detail::read_node_action_table(get<json>(w, "robot_dyn", ws), sc.world.num_nodes,
                                                        sc.world.actions, ws + ".robot_dyn");
    const json rp = get<json>(w, "robot_policy", ws);
    sc.world.robot_policy_nominal = detail::read_policy_table(get<json>(rp, "nominal", ws + ".robot_policy"),
                                                              sc.world.num_nodes, sc.world.actions,
                                                              ws + ".robot_policy.nominal");
    sc.world.robot_policy_adversarial = detail::read_policy_table(
        get<json>(rp, "adversarial", ws + ".robot_policy"), sc.world.num_nodes, sc.world.actions,
        ws + ".robot_policy.adversarial");
    const json goals = get<json>(w, "goals", ws);
    sc.world.goals_nominal = get<std::vector<std::size_t>>(goals, "nominal", ws + ".goals");
    sc.world.goals_adversarial = get<std::vector<std::size_t>>(goals, "adversarial", ws + ".goals");

    sc.config.detection_prob = j.value("detection_prob", 0.9);
    if (j.contains("prior")) {
        const double nom = get<double>(j["prior"], "nominal", src + ".prior");
        const double adv = get<double>(j["prior"], "adversarial", src + ".prior");
        if (nom < 0.0 || adv < 0.0 || std::abs(nom + adv - 1.0) > 1e-9)
            throw ConfigError(src + ".prior: must be a distribution over {nominal, adversarial}");
        sc.config.prior_adversarial = adv;
    }
    sc.config.variant = parse_variant(j.value("variant", std::string("overlapping")));
    sc.config.uav_start = j.value("uav_start", std::size_t{5});
    sc.config.robot_start = j.value("robot_start", std::size_t{0});
    sc.config.task_node = j.value("task_node", std::size_t{2});
    if (auto probs = sc.world.problems(); !probs.empty()) throw ConfigError(ws + ": " + probs.front());
    return sc;
}

inline Scenario load_scenario(const std::string& path) { return scenario_from_json(load_json(path), path); }

// ---- trajectories ---------------------------------------------------------------

inline json trajectory_to_json(const TrajectoryRecord& tr) {
    return {{"v", tr.vstates}, {"a", tr.acts}, {"o", tr.obs}, {"logpi", tr.log_policy}};
}

}  // namespace perceptplan::io
