// perceptplan: train, evaluate and inspect joint control / active-perception
// policies for labeled POMDPs with DFA tasks.
//
// Exit codes: 0 ok, 2 invalid input or configuration, 3 non-finite gradient,
// 4 enumeration cap exceeded, 5 evidence with probability zero.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perceptplan/io.hpp"
#include "perceptplan/perceptplan.hpp"

namespace pp = perceptplan;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kConfig = 2, kNonFinite = 3, kCap = 4, kEvidence = 5 };

// Six significant digits, independent of the process locale.
std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::size_t default_workers() {
    if (const char* env = std::getenv("PERCEPTPLAN_WORKERS")) {
        try {
            return std::max<std::size_t>(1, std::stoul(env));
        } catch (const std::exception&) {
        }
    }
    return 1;
}

pp::LogBase parse_base(const std::string& s) {
    if (s == "e") return pp::LogBase::E;
    if (s == "2") return pp::LogBase::Two;
    throw pp::ConfigError("log base must be 'e' or '2', got '" + s + "'");
}

// Where the model comes from; everything needed to rebuild it is embedded
// so a manifest alone can reproduce a run.
struct ModelSource {
    std::string scenario_path;
    std::string pomdp_path;
    std::string dfa = "auto";

    void add_options(CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "scenario JSON (world + prior + variant)");
        cmd->add_option("--pomdp", pomdp_path, "labeled POMDP JSON");
        cmd->add_option("--dfa", dfa, "'auto' for the scenario's task DFA, or a DFA JSON path")
            ->capture_default_str();
    }
};

struct Problem {
    std::optional<pp::Scenario> scenario;
    pp::LabeledPomdp pomdp;
    pp::Dfa dfa;
    bool sink_added = false;
    pp::ProductPomdp product;
    pp::ObservableOperators oo;
    json embedded;  // {"scenario": ...} or {"pomdp": ...}, plus "dfa"
    json hashes = json::object();
};

Problem build_problem(const json& embedded) {
    Problem pr;
    pr.embedded = embedded;
    if (embedded.contains("scenario")) {
        pr.scenario = pp::io::scenario_from_json(embedded["scenario"], "scenario");
        pr.pomdp = pp::build_scenario_pomdp(pr.scenario->config, pr.scenario->world);
    } else {
        pr.pomdp = pp::io::pomdp_from_json(embedded.at("pomdp"), "pomdp");
    }
    const json& dfa = embedded.at("dfa");
    if (dfa.is_string() && dfa.get<std::string>() == "auto") {
        if (!pr.scenario) throw pp::ConfigError("--dfa auto needs --scenario; pass a DFA file with --pomdp");
        pr.dfa = pp::build_task_dfa(pr.scenario->config.variant);
    } else {
        auto completion = pp::io::dfa_from_json(dfa, "dfa");
        pr.dfa = std::move(completion.dfa);
        pr.sink_added = completion.sink_added;
    }
    if (auto v = pp::validate_pomdp(pr.pomdp); !v.empty())
        throw pp::ConfigError("model: " + v.front().to_string());
    pr.product = pp::build_product(pr.pomdp, pr.dfa);
    pr.oo = pp::ObservableOperators(pr.product);
    return pr;
}

Problem load_problem(const ModelSource& src) {
    if (src.scenario_path.empty() == src.pomdp_path.empty())
        throw pp::ConfigError("pass exactly one of --scenario or --pomdp");
    json embedded;
    json hashes = json::object();
    auto read = [&](const std::string& path) {
        const std::string text = pp::io::read_file(path);
        hashes[path] = fnv1a_hex(text);
        return pp::io::parse_json(text, path);
    };
    if (!src.scenario_path.empty()) {
        // Round-trip through the typed loader so defaults are materialized.
        embedded["scenario"] = pp::io::scenario_to_json(pp::io::scenario_from_json(read(src.scenario_path), src.scenario_path));
    } else {
        embedded["pomdp"] = read(src.pomdp_path);
    }
    embedded["dfa"] = src.dfa == "auto" ? json("auto") : read(src.dfa);
    Problem pr = build_problem(embedded);
    pr.hashes = hashes;
    return pr;
}

pp::FscPolicy uniform_policy(const Problem& pr, std::size_t k) {
    return pp::FscPolicy(k, pr.product.observations, pr.product.actions);
}

void check_policy_matches(const pp::FscPolicy& pol, const Problem& pr) {
    if (pol.observations() != pr.product.observations || pol.actions() != pr.product.actions)
        throw pp::ConfigError("policy observations/actions do not match the model");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pp::ConfigError(path.string() + ": cannot write");
    out << text;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    ModelSource src;
    std::string manifest;
    std::string out;
    std::size_t horizon = 5;
    std::size_t samples = 1000;
    std::size_t iters = 1000;
    double step = 0.5;
    double alpha = 1.0;
    std::uint64_t seed = 0;
    std::size_t k = 2;
    std::string log_base = "e";
    std::string estimator = "sampled";
    std::size_t workers = 1;
    bool wallclock = false;
};

json resolved_train_config(const TrainArgs& a, const Problem& pr) {
    return {{"model", pr.embedded},       {"horizon", a.horizon}, {"samples", a.samples},
            {"iters", a.iters},           {"step", a.step},       {"alpha", a.alpha},
            {"seed", a.seed},             {"k", a.k},             {"log_base", a.log_base},
            {"estimator", a.estimator},   {"wallclock", a.wallclock}};
}

int cmd_train(TrainArgs a) {
    Problem pr;
    if (!a.manifest.empty()) {
        const json m = pp::io::load_json(a.manifest);
        const json& c = m.at("config");
        a.horizon = c.at("horizon");
        a.samples = c.at("samples");
        a.iters = c.at("iters");
        a.step = c.at("step");
        a.alpha = c.at("alpha");
        a.seed = c.at("seed");
        a.k = c.at("k");
        a.log_base = c.at("log_base");
        a.estimator = c.at("estimator");
        a.wallclock = c.value("wallclock", false);
        pr = build_problem(c.at("model"));
        pr.hashes = m.value("config_hashes", json::object());
    } else {
        pr = load_problem(a.src);
    }

    pp::TrainConfig cfg;
    cfg.horizon = a.horizon;
    cfg.batch = a.samples;
    cfg.iterations = a.iters;
    cfg.step = a.step;
    cfg.alpha = a.alpha;
    cfg.seed = a.seed;
    cfg.log_base = parse_base(a.log_base);
    cfg.workers = a.workers;
    if (a.estimator == "sampled")
        cfg.estimator = pp::Estimator::Sampled;
    else if (a.estimator == "exact")
        cfg.estimator = pp::Estimator::Exact;
    else
        throw pp::ConfigError("--estimator must be 'sampled' or 'exact'");
    try {
        cfg.validate();
    } catch (const pp::InputError& e) {
        throw pp::ConfigError(e.what());
    }

    const std::filesystem::path out(a.out);
    std::filesystem::create_directories(out);
    json manifest = {{"tool", "perceptplan"},
                     {"version", kVersion},
                     {"config", resolved_train_config(a, pr)},
                     {"config_hashes", pr.hashes},
                     {"seed", a.seed},
                     {"dfa_sink_added", pr.sink_added},
                     {"started_at", utc_now()}};
    write_file(out / "manifest.json", manifest.dump(2) + "\n");

    std::ofstream report(out / "report.csv", std::ios::binary);
    if (!report) throw pp::ConfigError((out / "report.csv").string() + ": cannot write");
    report << "iter,entropy,success,objective,grad_norm,wallclock_ms\n";
    double total_ms = 0.0;
    const auto result = pp::train(cfg, uniform_policy(pr, a.k), pr.product, pr.oo,
                                  [&](const pp::TrainReportRow& r) {
                                      total_ms += r.wallclock_ms;
                                      report << r.iteration << ',' << fmt(r.entropy) << ',' << fmt(r.success)
                                             << ',' << fmt(r.objective) << ',' << fmt(r.grad_norm) << ','
                                             << fmt(a.wallclock ? r.wallclock_ms : 0.0) << '\n';
                                  });
    report.close();
    write_file(out / "policy.json", pp::io::policy_to_json(result.policy).dump(2) + "\n");
    manifest["finished_at"] = utc_now();
    manifest["mean_iteration_ms"] = total_ms / static_cast<double>(cfg.iterations);
    write_file(out / "manifest.json", manifest.dump(2) + "\n");

    const auto& last = result.report.back();
    std::cout << "iterations " << result.report.size() << "\n"
              << "entropy " << fmt(last.entropy) << "\n"
              << "success " << fmt(last.success) << "\n"
              << "objective " << fmt(last.objective) << "\n";
    return kOk;
}

// ---- exact ------------------------------------------------------------------

struct ExactArgs {
    ModelSource src;
    std::string policy;
    std::size_t k = 2;
    std::size_t horizon = 5;
    double alpha = 1.0;
    std::string log_base = "e";
    double cap = pp::kDefaultEnumerationCap;
};

int cmd_exact(const ExactArgs& a) {
    const Problem pr = load_problem(a.src);
    pp::FscPolicy pol = a.policy.empty() ? uniform_policy(pr, a.k) : pp::io::load_policy(a.policy);
    check_policy_matches(pol, pr);
    const auto rep = pp::exact_objective(pol, pr.oo, a.horizon, a.alpha, parse_base(a.log_base), a.cap);
    std::cout << "entropy " << fmt(rep.entropy) << "\n"
              << "success " << fmt(rep.success_prob) << "\n"
              << "objective " << fmt(rep.objective) << "\n";
    return kOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    ModelSource src;
    std::string policy;
    std::string prior = "";
    std::size_t samples = 100000;
    std::size_t horizon = 5;
    std::uint64_t seed = 0;
    std::string log_base = "e";
    std::size_t workers = 1;
    std::string dump;
};

double parse_prior(const std::string& s) {
    if (s == "nominal") return 0.0;
    if (s == "adversarial") return 1.0;
    if (s == "mixed") return 0.5;
    std::size_t pos = 0;
    double p = -1.0;
    try {
        p = std::stod(s, &pos);
    } catch (const std::exception&) {
    }
    if (pos != s.size() || !(p >= 0.0 && p <= 1.0))
        throw pp::ConfigError("--prior must be nominal, adversarial, mixed or a probability in [0,1]");
    return p;
}

int cmd_eval(const EvalArgs& a) {
    if (a.samples == 0) throw pp::ConfigError("--samples must be at least 1");
    if (a.policy.empty() || !std::filesystem::exists(a.policy))
        throw pp::ConfigError("policy checkpoint '" + a.policy + "' not found");
    Problem pr = load_problem(a.src);
    const pp::FscPolicy pol = pp::io::load_policy(a.policy);
    check_policy_matches(pol, pr);
    const pp::LogBase base = parse_base(a.log_base);

    if (!a.prior.empty()) {
        if (!pr.scenario) throw pp::ConfigError("--prior needs a --scenario model");
        pp::ScenarioConfig cfg = pr.scenario->config;
        cfg.prior_adversarial = parse_prior(a.prior);
        pr.product = pp::build_product(pp::build_scenario_pomdp(cfg, pr.scenario->world), pr.dfa);
        pr.oo = pp::ObservableOperators(pr.product);
    }
    const auto rep = pp::monte_carlo_evaluate(pol, pr.product, pr.oo, a.horizon, a.samples, a.seed, base, a.workers);
    if (!a.dump.empty()) {
        const auto batch = pp::sample_batch(pol, pr.product, a.horizon, a.samples, pp::RngSpec{a.seed}, 0, a.workers);
        std::ofstream out(a.dump, std::ios::binary);
        if (!out) throw pp::ConfigError(a.dump + ": cannot write");
        for (const auto& tr : batch) out << pp::io::trajectory_to_json(tr).dump() << '\n';
    }
    std::cout << "samples " << rep.samples << "\n"
              << "success " << fmt(rep.success) << " +- " << fmt(rep.success_se) << "\n"
              << "entropy " << fmt(rep.entropy) << " +- " << fmt(rep.entropy_se) << "\n";
    return kOk;
}

// ---- probe ------------------------------------------------------------------

struct ProbeArgs {
    ModelSource src;
    std::string y;
    long t = -1;
};

int cmd_probe(const ProbeArgs& a) {
    const Problem pr = load_problem(a.src);
    const json y = pp::io::parse_json(a.y, "--y");
    pp::ObservationRecord rec;
    try {
        for (const auto& o : y.at("obs")) rec.obs.push_back(pr.product.observation_index(o.get<std::string>()));
        for (const auto& act : y.at("acts")) rec.acts.push_back(pr.product.action_index(act.get<std::string>()));
    } catch (const json::exception& e) {
        throw pp::ConfigError(std::string("--y: expected {\"obs\": [...], \"acts\": [...]}: ") + e.what());
    } catch (const pp::InputError& e) {
        throw pp::ConfigError(std::string("--y: ") + e.what());
    }
    if (rec.obs.empty() || rec.obs.size() != rec.acts.size())
        throw pp::ConfigError("--y: obs and acts must be non-empty and of equal length");
    const long last = static_cast<long>(rec.obs.size()) - 1;
    const long t = a.t < 0 ? last : a.t;
    if (t > last) throw pp::ConfigError("--t " + std::to_string(t) + " outside 0.." + std::to_string(last));

    const double p = pp::seq_prob(pr.oo, rec.obs, rec.acts);
    if (p == 0.0) throw pp::EvidenceImpossible();
    const pp::Posteriors post = pp::event_posteriors(pr.oo, rec);
    const Eigen::VectorXd s = pp::smooth(pr.oo, rec.obs, rec.acts, static_cast<std::size_t>(t));
    std::cout << "seq_prob " << fmt(p) << "\n"
              << "secret_posterior " << fmt(post.secret) << "\n"
              << "success_posterior " << fmt(post.success) << "\n"
              << "smooth t=" << t << "\n";
    for (Eigen::Index v = 0; v < s.size(); ++v)
        if (s(v) > 0.0) std::cout << "  " << pr.product.vnames[static_cast<std::size_t>(v)] << " " << fmt(s(v)) << "\n";
    return kOk;
}

// ---- validate -----------------------------------------------------------------

int cmd_validate(const ModelSource& src) {
    if (src.scenario_path.empty() == src.pomdp_path.empty())
        throw pp::ConfigError("pass exactly one of --scenario or --pomdp");
    pp::LabeledPomdp m;
    std::optional<pp::Scenario> sc;
    if (!src.scenario_path.empty()) {
        sc = pp::io::load_scenario(src.scenario_path);
        m = pp::build_scenario_pomdp(sc->config, sc->world);
    } else {
        m = pp::io::load_pomdp(src.pomdp_path);
    }
    const auto violations = pp::validate_pomdp(m);
    for (const auto& v : violations) std::cout << "violation " << v.to_string() << "\n";

    pp::Dfa dfa;
    if (src.dfa == "auto") {
        if (!sc) throw pp::ConfigError("--dfa auto needs --scenario");
        dfa = pp::build_task_dfa(sc->config.variant);
    } else {
        auto c = pp::io::load_dfa(src.dfa);
        if (c.sink_added) std::cout << "dfa: incomplete transition function, sink state added\n";
        dfa = std::move(c.dfa);
    }
    std::cout << "pomdp states " << m.num_states() << ", actions " << m.num_actions() << ", observations "
              << m.num_observations() << "\n"
              << "dfa states " << dfa.num_states() << ", symbols " << dfa.num_symbols() << "\n";
    if (!violations.empty()) return kConfig;
    const auto product = pp::build_product(m, dfa);
    std::cout << "product states " << product.size() << "\nok\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint control and active-perception planning for labeled POMDPs"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    TrainArgs train;
    train.workers = default_workers();
    auto* t = app.add_subcommand("train", "gradient-descent training; writes report.csv, policy.json, manifest.json");
    train.src.add_options(t);
    t->add_option("--manifest", train.manifest, "rerun the configuration stored in a manifest.json");
    t->add_option("--out", train.out, "output directory")->required();
    t->add_option("--horizon", train.horizon)->capture_default_str();
    t->add_option("--samples", train.samples, "trajectories per iteration (M)")->capture_default_str();
    t->add_option("--iters", train.iters, "iterations (N)")->capture_default_str();
    t->add_option("--step", train.step, "step size")->capture_default_str();
    t->add_option("--alpha", train.alpha, "weight of the success probability")->capture_default_str();
    t->add_option("--seed", train.seed)->capture_default_str();
    t->add_option("--k", train.k, "policy memory length")->capture_default_str();
    t->add_option("--log-base", train.log_base, "entropy log base: e or 2")->capture_default_str();
    t->add_option("--estimator", train.estimator, "sampled or exact")->capture_default_str();
    t->add_option("--workers", train.workers, "sampling threads (default $PERCEPTPLAN_WORKERS or 1)");
    t->add_flag("--wallclock", train.wallclock, "record per-iteration time in report.csv (breaks byte-identical reruns)");

    ExactArgs exact;
    auto* e = app.add_subcommand("exact", "exact conditional entropy and success probability by enumeration");
    exact.src.add_options(e);
    e->add_option("--policy", exact.policy, "policy checkpoint (default: uniform policy with --k)");
    e->add_option("--k", exact.k)->capture_default_str();
    e->add_option("--horizon", exact.horizon)->capture_default_str();
    e->add_option("--alpha", exact.alpha)->capture_default_str();
    e->add_option("--log-base", exact.log_base)->capture_default_str();
    e->add_option("--cap", exact.cap, "maximum number of observation records")->capture_default_str();

    EvalArgs eval;
    eval.workers = default_workers();
    auto* v = app.add_subcommand("eval", "Monte-Carlo evaluation, optionally under another robot-type prior");
    eval.src.add_options(v);
    v->add_option("--policy", eval.policy, "policy checkpoint")->required();
    v->add_option("--prior", eval.prior, "nominal | adversarial | mixed | P(adversarial)");
    v->add_option("--samples", eval.samples)->capture_default_str();
    v->add_option("--horizon", eval.horizon)->capture_default_str();
    v->add_option("--seed", eval.seed)->capture_default_str();
    v->add_option("--log-base", eval.log_base)->capture_default_str();
    v->add_option("--workers", eval.workers);
    v->add_option("--dump", eval.dump, "write sampled trajectories as JSON lines");

    ProbeArgs probe;
    auto* p = app.add_subcommand("probe", "sequence probability, posteriors and smoothing for one record");
    probe.src.add_options(p);
    p->add_option("--y", probe.y, R"(record as JSON: {"obs": [...], "acts": [...]})")->required();
    p->add_option("--t", probe.t, "smoothing time (default: last step)");

    std::string variant = "overlapping";
    auto* sc = app.add_subcommand("scenario", "print a built-in experiment scenario as JSON");
    sc->add_option("--variant", variant, "overlapping or nonoverlapping")->capture_default_str();

    ModelSource validate;
    auto* val = app.add_subcommand("validate", "check a model and DFA");
    validate.add_options(val);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*t) return cmd_train(train);
        if (*e) return cmd_exact(exact);
        if (*v) return cmd_eval(eval);
        if (*p) return cmd_probe(probe);
        if (*val) return cmd_validate(validate);
        if (*sc) {
            std::cout << pp::io::scenario_to_json(pp::experiment_scenario(pp::parse_variant(variant))).dump(2) << "\n";
            return kOk;
        }
    } catch (const pp::NonFiniteGradient& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kNonFinite;
    } catch (const pp::EnumerationInfeasible& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kCap;
    } catch (const pp::EvidenceImpossible& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kEvidence;
    } catch (const pp::ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kConfig;
    } catch (const pp::InputError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kConfig;
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kConfig;
    }
    return kConfig;
}
