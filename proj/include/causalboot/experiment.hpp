#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/csv.hpp"
#include "causalboot/dataset.hpp"
#include "causalboot/effects.hpp"
#include "causalboot/graph.hpp"
#include "causalboot/learners.hpp"
#include "causalboot/resample.hpp"
#include "causalboot/synthdata.hpp"
#include "causalboot/weights.hpp"

namespace causalboot {

enum class adjust_method { backdoor, frontdoor, truncated, plan };

inline adjust_method parse_method(const std::string& s) {
    if (s == "backdoor") return adjust_method::backdoor;
    if (s == "frontdoor") return adjust_method::frontdoor;
    if (s == "truncated") return adjust_method::truncated;
    if (s == "plan") return adjust_method::plan;
    throw config_error("unknown method '" + s + "' (backdoor|frontdoor|truncated|plan)");
}

// Check the graph criteria for a method against every effect column; throws
// criteria_error naming the violated clause.
inline void validate_method(const causal_graph& graph, adjust_method method) {
    const auto& roles = graph.roles();
    if (roles.target.empty()) throw config_error("graph declares no 'role target'");
    if (roles.effect.empty()) throw config_error("graph declares no 'role effect'");
    switch (method) {
        case adjust_method::backdoor: {
            if (roles.adjust.empty())
                throw config_error("back-door method needs 'role adjust' naming the set S");
            std::set<std::string> s(roles.adjust.begin(), roles.adjust.end());
            for (const auto& x : roles.effect)
                if (auto why = graph.backdoor_violation(s, roles.target, x))
                    throw criteria_error("back-door criterion failed: " + *why);
            break;
        }
        case adjust_method::frontdoor: {
            if (roles.mediator.empty())
                throw config_error("front-door method needs 'role mediator'");
            for (const auto& x : roles.effect)
                if (auto why = graph.frontdoor_violation(roles.mediator, roles.target, x))
                    throw criteria_error("front-door criterion failed: " + *why);
            break;
        }
        case adjust_method::truncated:
            truncated_plan(graph);  // throws when the factorization shape is unsupported
            break;
        case adjust_method::plan:
            break;
    }
}

// Per-intervention weight evaluator for a dataset under a method.
inline std::function<weight_vector(const cell&)> make_weight_fn(
    const dataset& data, const causal_graph* graph, adjust_method method,
    const std::optional<weight_plan>& plan, const kernel_map& overrides = {}) {
    if (method != adjust_method::plan && !graph)
        throw config_error("this method needs a graph file");
    switch (method) {
        case adjust_method::backdoor: {
            const auto& roles = graph->roles();
            if (roles.adjust.empty())
                throw config_error("back-door method needs 'role adjust' naming the set S");
            std::vector<std::string> adjust = roles.adjust;
            std::string target = roles.target;
            return [&data, adjust, target, overrides](const cell& y) {
                return backdoor_weights(data, adjust, target, y, overrides);
            };
        }
        case adjust_method::frontdoor: {
            const auto& roles = graph->roles();
            if (roles.mediator.empty())
                throw config_error("front-door method needs 'role mediator'");
            std::string mediator = roles.mediator;
            std::string target = roles.target;
            return [&data, mediator, target, overrides](const cell& y) {
                return frontdoor_weights(data, mediator, target, y, overrides);
            };
        }
        case adjust_method::truncated: {
            weight_plan p = truncated_plan(*graph);
            return [&data, p, overrides](const cell& y) {
                return general_weights(data, p, y, overrides);
            };
        }
        case adjust_method::plan: {
            if (!plan) throw config_error("method 'plan' needs a plan file");
            weight_plan p = *plan;
            p.validate(data);
            return [&data, p, overrides](const cell& y) {
                return general_weights(data, p, y, overrides);
            };
        }
    }
    throw config_error("unreachable method");
}

// Full deconfounding step: criteria validation (unless forced), weights,
// bootstrap.
inline deconfounded_sample deconfound(const dataset& data, const causal_graph* graph,
                                      adjust_method method, const std::optional<weight_plan>& plan,
                                      const bootstrap_spec& spec, bool force = false,
                                      const kernel_map& overrides = {}) {
    std::vector<std::string> effect;
    std::string target;
    if (method == adjust_method::plan) {
        if (!plan) throw config_error("method 'plan' needs a plan file");
        effect = plan->effect;
        target = plan->target;
    } else {
        if (!graph) throw config_error("this method needs a graph file");
        effect = graph->roles().effect;
        target = graph->roles().target;
    }
    if (graph && !force) validate_method(*graph, method);
    auto weight_fn = make_weight_fn(data, graph, method, plan, overrides);
    return causal_bootstrap(data, effect, target, weight_fn, spec);
}

// ---- Table-style experiment harness ----

struct experiment_config {
    std::string experiment;  // gauss-backdoor|gauss-frontdoor|mnist-backdoor|mnist-frontdoor|
                             // parkinsons-backdoor|custom
    size_t n = 0;            // per environment; 0 = per-experiment default
    int replicates = 10;
    std::string classifier;  // lda|forest; empty = per-experiment default
    forest_params forest;
    bootstrap_spec::mode_t mode = bootstrap_spec::mode_t::dirac;
    std::uint64_t seed = 0;

    std::string mnist_images, mnist_labels;  // image experiments
    std::string parkinsons_csv;              // parkinsons-backdoor
    // custom experiments: user-supplied environment files + adjustment spec
    std::string data_e1, data_e2, data_e3;
    std::string graph_file;
    std::string plan_file;
    std::string method;  // custom only; others are implied
};

struct replicate_result {
    double confounded_e2 = 0.0, confounded_e3 = 0.0;
    double deconfounded_e2 = 0.0, deconfounded_e3 = 0.0;
    long long floor_hits = 0;
};

struct experiment_report {
    std::string experiment, classifier, method;
    std::vector<replicate_result> replicates;
    // aggregates in column order: conf_e2, conf_e3, dec_e2, dec_e3
    std::array<double, 4> mean{};
    std::array<double, 4> stddev{};
    std::uint64_t seed = 0;
    size_t n = 0;
};

namespace detail {

struct resolved_experiment {
    adjust_method method;
    std::string classifier;
    size_t n;
    double feature_scale;  // divide features by this before training
};

inline resolved_experiment resolve_experiment(const experiment_config& cfg) {
    resolved_experiment r{adjust_method::backdoor, "lda", 2000, 1.0};
    if (cfg.experiment == "gauss-backdoor") {
        r = {adjust_method::backdoor, "lda", 2000, 1.0};
    } else if (cfg.experiment == "gauss-frontdoor") {
        r = {adjust_method::frontdoor, "lda", 2000, 1.0};
    } else if (cfg.experiment == "mnist-backdoor") {
        r = {adjust_method::backdoor, "forest", 560, 255.0};
    } else if (cfg.experiment == "mnist-frontdoor") {
        r = {adjust_method::frontdoor, "forest", 560, 255.0};
    } else if (cfg.experiment == "parkinsons-backdoor") {
        r = {adjust_method::backdoor, "forest", 1000, 1.0};
    } else if (cfg.experiment == "custom") {
        if (cfg.method.empty())
            throw config_error("custom experiments need --method");
        r = {parse_method(cfg.method), "forest", 0, 1.0};
    } else {
        throw config_error("unknown experiment '" + cfg.experiment + "'");
    }
    if (cfg.n > 0) r.n = cfg.n;
    if (!cfg.classifier.empty()) r.classifier = cfg.classifier;
    if (r.classifier != "lda" && r.classifier != "forest")
        throw config_error("unknown classifier '" + r.classifier + "' (lda|forest)");
    return r;
}

struct trained_classifier {
    std::optional<lda_model> lda;
    std::optional<forest_model> forest;

    std::vector<int> predict(const fmatrix& x) const {
        return lda ? lda_predict(*lda, x) : forest_predict(*forest, x);
    }
};

inline trained_classifier train(const std::string& kind, const fmatrix& x,
                                std::span<const int> y, const forest_params& params) {
    trained_classifier out;
    if (kind == "lda")
        out.lda = lda_fit(x, y);
    else
        out.forest = forest_fit(x, y, params);
    return out;
}

}  // namespace detail

// Generate (or load) the three environment samples, train on raw e1 and on
// causal-bootstrapped e1, evaluate both on e2 and e3, aggregate over
// replicates. Everything is derived from cfg.seed; a rerun with the same
// config reproduces the report bit-for-bit.
inline experiment_report run_experiment(const experiment_config& cfg) {
    if (cfg.replicates < 1) throw config_error("replicates must be >= 1");
    auto resolved = detail::resolve_experiment(cfg);

    std::optional<causal_graph> graph;
    std::optional<weight_plan> plan;
    std::optional<mnist_data> pool;
    std::optional<dataset> parkinsons_features;
    std::array<std::optional<dataset>, 3> custom_data;

    if (cfg.experiment == "gauss-backdoor") graph = gauss_backdoor_graph();
    else if (cfg.experiment == "gauss-frontdoor") graph = gauss_frontdoor_graph();
    else if (cfg.experiment == "mnist-backdoor") graph = mnist_backdoor_graph();
    else if (cfg.experiment == "mnist-frontdoor") graph = mnist_frontdoor_graph();
    else if (cfg.experiment == "parkinsons-backdoor") graph = parkinsons_graph();

    if (cfg.experiment == "mnist-backdoor" || cfg.experiment == "mnist-frontdoor") {
        if (cfg.mnist_images.empty() || cfg.mnist_labels.empty())
            throw config_error("image experiments need --mnist-images and --mnist-labels");
        pool = load_mnist_idx(cfg.mnist_images, cfg.mnist_labels);
    }
    if (cfg.experiment == "parkinsons-backdoor") {
        if (cfg.parkinsons_csv.empty())
            throw config_error("parkinsons-backdoor needs --parkinsons <features.csv>");
        auto g = parkinsons_graph();
        parkinsons_features = read_dataset_csv(cfg.parkinsons_csv, &g);
    }
    if (cfg.experiment == "custom") {
        if (cfg.data_e1.empty() || cfg.data_e2.empty() || cfg.data_e3.empty())
            throw config_error("custom experiments need --data-e1/--data-e2/--data-e3");
        if (!cfg.graph_file.empty()) graph = load_graph(cfg.graph_file);
        if (!cfg.plan_file.empty()) plan = load_plan(cfg.plan_file);
        if (resolved.method == adjust_method::plan && !plan)
            throw config_error("method 'plan' needs --plan <file>");
        if (resolved.method != adjust_method::plan && !graph)
            throw config_error("custom experiments with graph methods need --graph");
        const causal_graph* hints = graph ? &*graph : nullptr;
        custom_data[0] = read_dataset_csv(cfg.data_e1, hints);
        custom_data[1] = read_dataset_csv(cfg.data_e2, hints);
        custom_data[2] = read_dataset_csv(cfg.data_e3, hints);
    }

    std::vector<std::string> effect =
        plan && !graph ? plan->effect : (graph ? graph->roles().effect : std::vector<std::string>{});
    std::string target = plan && !graph ? plan->target : (graph ? graph->roles().target : "");
    if (plan && graph && resolved.method == adjust_method::plan) {
        effect = plan->effect;
        target = plan->target;
    }
    if (effect.empty() || target.empty())
        throw config_error("no effect/target columns resolved for the experiment");

    experiment_report report;
    report.experiment = cfg.experiment;
    report.classifier = resolved.classifier;
    switch (resolved.method) {
        case adjust_method::backdoor: report.method = "backdoor"; break;
        case adjust_method::frontdoor: report.method = "frontdoor"; break;
        case adjust_method::truncated: report.method = "truncated"; break;
        case adjust_method::plan: report.method = "plan"; break;
    }
    report.seed = cfg.seed;
    report.n = resolved.n;

    for (int rep = 0; rep < cfg.replicates; ++rep) {
        std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));

        // environment samples e1 (train), e2 (confounded test), e3 (clean test)
        std::array<dataset, 3> envs;
        if (cfg.experiment == "gauss-backdoor" || cfg.experiment == "gauss-frontdoor") {
            bool back = cfg.experiment == "gauss-backdoor";
            for (int e = 1; e <= 3; ++e) {
                env_spec spec{e, resolved.n, derive_seed(rep_seed, static_cast<std::uint64_t>(e))};
                envs[e - 1] = back ? gen_gauss_backdoor(spec) : gen_gauss_frontdoor(spec);
            }
        } else if (cfg.experiment == "mnist-backdoor" || cfg.experiment == "mnist-frontdoor") {
            bool back = cfg.experiment == "mnist-backdoor";
            auto parts = partition_pool(*pool, derive_seed(rep_seed, 0x706cULL));
            for (int e = 1; e <= 3; ++e) {
                env_spec spec{e, resolved.n, derive_seed(rep_seed, static_cast<std::uint64_t>(e))};
                envs[e - 1] = back ? gen_mnist_backdoor(parts[static_cast<size_t>(e - 1)], spec)
                                   : gen_mnist_frontdoor(parts[static_cast<size_t>(e - 1)], spec);
            }
        } else if (cfg.experiment == "parkinsons-backdoor") {
            for (int e = 1; e <= 3; ++e) {
                env_spec spec{e, resolved.n, derive_seed(rep_seed, static_cast<std::uint64_t>(e))};
                envs[e - 1] = confound_resample_parkinsons(*parkinsons_features, spec);
            }
        } else {
            for (int e = 1; e <= 3; ++e) envs[e - 1] = *custom_data[static_cast<size_t>(e - 1)];
        }

        bootstrap_spec bspec;
        bspec.mode = cfg.mode;
        bspec.schedule = bootstrap_spec::schedule_t::per_class_floor;
        bspec.seed = derive_seed(rep_seed, 0x62747374ULL);
        bspec.replicate_index = static_cast<std::uint64_t>(rep);
        if (cfg.mode == bootstrap_spec::mode_t::smoothed)
            bspec.effect_kernels = default_kernels(envs[0], effect);

        auto star = deconfound(envs[0], graph ? &*graph : nullptr, resolved.method, plan, bspec);

        double scale = resolved.feature_scale;
        fmatrix train_x = feature_matrix(envs[0], effect, scale);
        fmatrix star_x = feature_matrix(star.rows, effect, scale);
        fmatrix test2_x = feature_matrix(envs[1], effect, scale);
        fmatrix test3_x = feature_matrix(envs[2], effect, scale);

        forest_params fit_params = cfg.forest;
        fit_params.seed = derive_seed(rep_seed, 0x666f72ULL);
        auto confounded = detail::train(resolved.classifier, train_x,
                                        envs[0].discrete_column(target), fit_params);
        fit_params.seed = derive_seed(rep_seed, 0x64666f72ULL);
        auto deconfounded = detail::train(resolved.classifier, star_x,
                                          star.rows.discrete_column(target), fit_params);

        replicate_result rr;
        rr.confounded_e2 = accuracy(confounded.predict(test2_x), envs[1].discrete_column(target));
        rr.confounded_e3 = accuracy(confounded.predict(test3_x), envs[2].discrete_column(target));
        rr.deconfounded_e2 =
            accuracy(deconfounded.predict(test2_x), envs[1].discrete_column(target));
        rr.deconfounded_e3 =
            accuracy(deconfounded.predict(test3_x), envs[2].discrete_column(target));
        rr.floor_hits = star.floor_hits;
        report.replicates.push_back(rr);
    }

    auto agg = [&](auto pick, size_t slot) {
        double m = 0.0;
        for (const auto& r : report.replicates) m += pick(r);
        m /= static_cast<double>(report.replicates.size());
        double v = 0.0;
        for (const auto& r : report.replicates) v += (pick(r) - m) * (pick(r) - m);
        double sd = report.replicates.size() > 1
                        ? std::sqrt(v / static_cast<double>(report.replicates.size() - 1))
                        : 0.0;
        report.mean[slot] = m;
        report.stddev[slot] = sd;
    };
    agg([](const replicate_result& r) { return r.confounded_e2; }, 0);
    agg([](const replicate_result& r) { return r.confounded_e3; }, 1);
    agg([](const replicate_result& r) { return r.deconfounded_e2; }, 2);
    agg([](const replicate_result& r) { return r.deconfounded_e3; }, 3);
    return report;
}

inline void write_report_csv(const experiment_report& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw data_error("cannot write report '" + path + "'");
    out << "record,replicate,confounded_e2,confounded_e3,deconfounded_e2,deconfounded_e3,floor_hits\n";
    for (size_t i = 0; i < report.replicates.size(); ++i) {
        const auto& r = report.replicates[i];
        out << "replicate," << i << ',' << format_double(r.confounded_e2) << ','
            << format_double(r.confounded_e3) << ',' << format_double(r.deconfounded_e2) << ','
            << format_double(r.deconfounded_e3) << ',' << r.floor_hits << "\n";
    }
    out << "mean,," << format_double(report.mean[0]) << ',' << format_double(report.mean[1]) << ','
        << format_double(report.mean[2]) << ',' << format_double(report.mean[3]) << ",\n";
    out << "std,," << format_double(report.stddev[0]) << ',' << format_double(report.stddev[1])
        << ',' << format_double(report.stddev[2]) << ',' << format_double(report.stddev[3])
        << ",\n";
    if (!out) throw data_error("failed writing report '" + path + "'");
}

inline std::string format_report_table(const experiment_report& report) {
    auto pct = [](double v, double sd) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%5.1f +/- %4.1f", 100.0 * v, 100.0 * sd);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "experiment: " << report.experiment << "  method: " << report.method
        << "  classifier: " << report.classifier << "  n: " << report.n
        << "  replicates: " << report.replicates.size() << "\n";
    out << "  train         | test e2 (confounded) | test e3 (non-confounded)\n";
    out << "  confounded    | " << pct(report.mean[0], report.stddev[0]) << "      | "
        << pct(report.mean[1], report.stddev[1]) << "\n";
    out << "  deconfounded  | " << pct(report.mean[2], report.stddev[2]) << "      | "
        << pct(report.mean[3], report.stddev[3]) << "\n";
    long long floors = 0;
    for (const auto& r : report.replicates) floors += r.floor_hits;
    out << "  density-floor hits: " << floors << "\n";
    return out.str();
}

}  // namespace causalboot
