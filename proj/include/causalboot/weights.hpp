#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"
#include "causalboot/density.hpp"
#include "causalboot/graph.hpp"

namespace causalboot {

// Per-row causal bootstrap weights for one intervention value.
struct weight_vector {
    std::vector<double> values;  // N nonnegative finite reals, at least one > 0
    cell intervention;
    long long floor_hits = 0;

    double sum() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
};

namespace detail {

inline void check_weights(weight_vector& w, const std::string& what) {
    bool any_positive = false;
    for (double v : w.values) {
        if (!std::isfinite(v) || v < 0.0)
            throw data_error(what + ": non-finite weight (positivity violation in the data)");
        if (v > 0.0) any_positive = true;
    }
    if (!any_positive)
        throw data_error(what + ": all weights are zero (no support for the requested intervention)");
}

// A discrete intervention value never observed makes every kronecker
// numerator vanish; reject up front with the better message. Continuous
// targets accept any value of the right dimension (the kernel spreads mass).
inline void check_intervention(const dataset& data, const std::string& target, const cell& y,
                               const std::string& what) {
    const auto& vi = data.info(target);
    if (vi.kind == var_kind::continuous) {
        if (y.is_discrete() || y.reals().size() != static_cast<size_t>(vi.dim))
            throw data_error(what + ": intervention value for continuous '" + target +
                             "' must have dimension " + std::to_string(vi.dim));
        return;
    }
    if (!y.is_discrete())
        throw data_error(what + ": intervention value for discrete '" + target +
                         "' must be a category code");
    for (int v : data.discrete_column(target))
        if (v == y.code()) return;
    throw data_error(what + ": all weights are zero (intervention value " +
                     std::to_string(y.code()) + " of '" + target + "' never observed)");
}

inline double intervention_kernel(const kernel_spec& k, const cell& observed, const cell& y) {
    if (k.kind == kernel_spec::kind_t::kronecker)
        return observed.code() == y.code() ? 1.0 : 0.0;
    return gaussian_product(observed.reals(), y.reals(), k.bandwidths);
}

}  // namespace detail

// Declarative description of an interventional factorization
//   p(x|do(y)) = integral p(x|parents(x)) * prod_v p(v|parents(v)) dE
// compiled to a per-row weight evaluator. Secondary variables E are exactly
// parents(x) minus the target; each may read a dataset column under an alias
// so the target's own column can also appear marginalized (the usual y').
struct weight_plan {
    struct secondary {
        std::string name;
        std::string column;                // dataset column backing it
        std::vector<std::string> given;    // conditioning names: secondaries or the target
    };

    std::vector<std::string> effect;       // emitted feature columns
    std::string target;                    // intervention variable
    std::vector<secondary> secondaries;    // ordered E
    std::vector<std::string> denominator;  // parents(x): secondary names, optionally the target
    bool target_in_parents = false;

    // Enforces the supported factorization shape against a dataset.
    void validate(const dataset& data) const {
        if (target.empty()) throw config_error("weight plan: missing target");
        if (!data.has(target)) throw data_error("unknown variable '" + target + "'");
        if (effect.empty()) throw config_error("weight plan: missing effect columns");
        for (const auto& e : effect)
            if (!data.has(e)) throw data_error("unknown variable '" + e + "'");

        std::set<std::string> names;
        for (const auto& s : secondaries) {
            if (s.name == target)
                throw config_error("weight plan: secondary '" + s.name +
                                   "' collides with the target; marginalized copies need an alias");
            if (!names.insert(s.name).second)
                throw config_error("weight plan: duplicate secondary '" + s.name + "'");
            if (!data.has(s.column)) throw data_error("unknown variable '" + s.column + "'");
            for (const auto& c : s.given)
                if (c != target && !names_contains(c))
                    throw config_error("weight plan: factor for '" + s.name +
                                       "' conditions on '" + c +
                                       "' which is neither a secondary nor the target");
        }

        std::set<std::string> denom(denominator.begin(), denominator.end());
        if (denom.size() != denominator.size())
            throw config_error("weight plan: duplicate variable in denominator");
        std::set<std::string> expected = names;
        if (target_in_parents) expected.insert(target);
        if (denom != expected)
            throw config_error(
                "weight plan: denominator must list exactly the secondaries" +
                std::string(target_in_parents ? " plus the target" : "") +
                " (the factorization must marginalize parents(x) \\ target)");
        if (denom.count(target) != static_cast<size_t>(target_in_parents ? 1 : 0))
            throw config_error("weight plan: target/denominator mismatch");
    }

    bool names_contains(const std::string& n) const {
        for (const auto& s : secondaries)
            if (s.name == n) return true;
        return false;
    }

    const secondary* find(const std::string& n) const {
        for (const auto& s : secondaries)
            if (s.name == n) return &s;
        return nullptr;
    }
};

// ---- closed-form plans for the standard adjustments ----

inline weight_plan backdoor_plan(std::vector<std::string> effect, std::string target,
                                 std::vector<std::string> adjust) {
    weight_plan p;
    p.effect = std::move(effect);
    p.target = std::move(target);
    for (auto& s : adjust) p.secondaries.push_back({s, s, {}});
    for (const auto& s : p.secondaries) p.denominator.push_back(s.name);
    p.denominator.push_back(p.target);
    p.target_in_parents = true;
    return p;
}

inline weight_plan frontdoor_plan(std::vector<std::string> effect, std::string target,
                                  std::string mediator) {
    weight_plan p;
    p.effect = std::move(effect);
    p.target = std::move(target);
    std::string alias = p.target + "_marg";
    p.secondaries.push_back({alias, p.target, {}});
    p.secondaries.push_back({mediator, mediator, {p.target}});
    p.denominator = {alias, mediator};
    p.target_in_parents = false;
    return p;
}

inline weight_plan tikka_plan(std::vector<std::string> effect, std::string target,
                              std::string w, std::string z) {
    weight_plan p;
    p.effect = std::move(effect);
    p.target = std::move(target);
    std::string alias = p.target + "_marg";
    p.secondaries.push_back({w, w, {}});
    p.secondaries.push_back({alias, p.target, {w}});
    p.secondaries.push_back({z, z, {w, p.target}});
    p.denominator = {w, alias, z};
    p.target_in_parents = false;
    return p;
}

// Truncated-factorization plan read off a DAG whose vertices are exactly
// {effect} + parents(effect) (+ the target): every non-effect variable is a
// parent of the effect, all observed, with factors p(v|parents(v)).
inline weight_plan truncated_plan(const causal_graph& g) {
    const auto& roles = g.roles();
    if (roles.target.empty() || roles.effect.empty())
        throw config_error("graph must declare 'role target' and 'role effect' for the truncated method");
    weight_plan p;
    p.effect = roles.effect;
    p.target = roles.target;

    std::set<std::string> effect_set(p.effect.begin(), p.effect.end());
    if (effect_set.count(p.target)) throw config_error("target cannot also be an effect column");

    std::set<std::string> union_parents;
    for (const auto& x : p.effect)
        for (const auto& par : g.parents(x)) union_parents.insert(par);
    p.target_in_parents = union_parents.count(p.target) > 0;
    union_parents.erase(p.target);

    for (const auto& name : g.vertex_names()) {  // topological order
        if (effect_set.count(name) || name == p.target) continue;
        if (g.info(name).latent)
            throw criteria_error("truncated factorization requires all variables observed; '" +
                                 name + "' is latent");
        if (!union_parents.count(name))
            throw criteria_error("variable '" + name +
                                 "' is not a parent of the effect; the truncated factorization "
                                 "supports only graphs where every other variable is");
        weight_plan::secondary s;
        s.name = name;
        s.column = name;
        for (const auto& par : g.parents(name)) {
            if (effect_set.count(par))
                throw criteria_error("variable '" + name + "' has effect column '" + par +
                                     "' as a parent; unsupported factorization shape");
            s.given.push_back(par);
        }
        p.secondaries.push_back(std::move(s));
    }
    for (const auto& s : p.secondaries) p.denominator.push_back(s.name);
    if (p.target_in_parents) p.denominator.push_back(p.target);
    return p;
}

// ---- the general weight engine ----

namespace detail {

// Compiled factor: conditional over backing columns plus a recipe saying
// which query slots take the row's value and which take the intervention.
struct compiled_factor {
    conditional_estimate est;
    std::string target_col;                 // column of the factor's own variable
    std::vector<std::string> given_cols;    // backing columns of conditioning vars
    std::vector<bool> given_is_intervention;
};

}  // namespace detail

// Eq-style general weights: for each row n,
//   w_n = (1/N) * [K[y_n - y] if target in parents(x)] * w̄_n
//   w̄_n = prod_v p(v|parents(v)) / p(parents(x))
// with every secondary evaluated at its row realization and the target pinned
// at the intervention value.
inline weight_vector general_weights(const dataset& data, const weight_plan& plan, const cell& y,
                                     const kernel_map& overrides = {}) {
    plan.validate(data);
    detail::check_intervention(data, plan.target, y, "general_weights");

    // kernels are resolved per backing column so aliases share their column's kernel
    std::vector<std::string> used_cols{plan.target};
    for (const auto& s : plan.secondaries) used_cols.push_back(s.column);
    std::sort(used_cols.begin(), used_cols.end());
    used_cols.erase(std::unique(used_cols.begin(), used_cols.end()), used_cols.end());
    kernel_map kernels = resolve_kernels(data, used_cols, overrides);

    std::vector<detail::compiled_factor> factors;
    for (const auto& s : plan.secondaries) {
        std::vector<std::string> given_cols;
        std::vector<bool> is_iv;
        for (const auto& gname : s.given) {
            if (gname == plan.target) {
                given_cols.push_back(plan.target);
                is_iv.push_back(true);
            } else {
                given_cols.push_back(plan.find(gname)->column);
                is_iv.push_back(false);
            }
        }
        // a factor may condition on its own backing column under an alias
        // (e.g. p(z | w, y) with z reading the target's column is not needed,
        // but p(y'|w) with y' reading y is); the estimate works on columns.
        factors.push_back({conditional_estimate(data, {s.column}, given_cols, kernels),
                           s.column, given_cols, is_iv});
    }

    std::vector<std::string> denom_cols;
    std::vector<bool> denom_is_iv;
    for (const auto& dname : plan.denominator) {
        if (dname == plan.target) {
            denom_cols.push_back(plan.target);
            denom_is_iv.push_back(true);
        } else {
            denom_cols.push_back(plan.find(dname)->column);
            denom_is_iv.push_back(false);
        }
    }
    density_estimate denom(data, denom_cols, kernels);

    const kernel_spec& target_kernel = kernels.at(plan.target);
    size_t n = data.n_rows();
    double inv_n = 1.0 / static_cast<double>(n);

    weight_vector out;
    out.values.assign(n, 0.0);
    out.intervention = y;
    eval_diagnostics diag;

    point qp;  // reused query point
    for (size_t row = 0; row < n; ++row) {
        double w = inv_n;
        if (plan.target_in_parents) {
            double k = detail::intervention_kernel(target_kernel, data.at(plan.target, row), y);
            if (k == 0.0) continue;  // exact zero: skip the ratio entirely
            w *= k;
        }

        bool zero = false;
        for (const auto& f : factors) {
            point tv{data.at(f.target_col, row)};
            qp.clear();
            for (size_t j = 0; j < f.given_cols.size(); ++j)
                qp.push_back(f.given_is_intervention[j] ? y : data.at(f.given_cols[j], row));
            double val = f.est.eval(tv, qp, &diag);
            if (val == 0.0) {
                zero = true;
                break;
            }
            w *= val;
        }
        if (zero) continue;

        qp.clear();
        for (size_t j = 0; j < denom_cols.size(); ++j)
            qp.push_back(denom_is_iv[j] ? y : data.at(denom_cols[j], row));
        out.values[row] = w * conditional_estimate::guarded_ratio(1.0, denom.eval(qp), &diag);
    }

    out.floor_hits = diag.floor_hits;
    detail::check_weights(out, "general_weights");
    return out;
}

// Back-door adjusted weights: w_i = K[y_i - y] / (N * p(y | S_i)).
inline weight_vector backdoor_weights(const dataset& data, const std::vector<std::string>& adjust,
                                      const std::string& target, const cell& y,
                                      const kernel_map& overrides = {}) {
    detail::check_intervention(data, target, y, "backdoor_weights");
    std::vector<std::string> all{target};
    all.insert(all.end(), adjust.begin(), adjust.end());
    kernel_map kernels = resolve_kernels(data, all, overrides);
    conditional_estimate cond(data, {target}, adjust, kernels);
    const kernel_spec& target_kernel = kernels.at(target);

    size_t n = data.n_rows();
    double inv_n = 1.0 / static_cast<double>(n);
    weight_vector out;
    out.values.assign(n, 0.0);
    out.intervention = y;
    eval_diagnostics diag;

    for (size_t row = 0; row < n; ++row) {
        double k = detail::intervention_kernel(target_kernel, data.at(target, row), y);
        if (k == 0.0) continue;
        point given = data.row_point(adjust, row);
        double p = cond.eval({y}, given, &diag);
        out.values[row] = k * inv_n * conditional_estimate::guarded_ratio(1.0, p, &diag);
    }
    out.floor_hits = diag.floor_hits;
    detail::check_weights(out, "backdoor_weights");
    return out;
}

// Front-door adjusted weights: w_i = p(z_i | y) / (N * p(z_i | y_i)).
inline weight_vector frontdoor_weights(const dataset& data, const std::string& mediator,
                                       const std::string& target, const cell& y,
                                       const kernel_map& overrides = {}) {
    detail::check_intervention(data, target, y, "frontdoor_weights");
    std::vector<std::string> all{mediator, target};
    kernel_map kernels = resolve_kernels(data, all, overrides);
    conditional_estimate cond(data, {mediator}, {target}, kernels);

    size_t n = data.n_rows();
    double inv_n = 1.0 / static_cast<double>(n);
    weight_vector out;
    out.values.assign(n, 0.0);
    out.intervention = y;
    eval_diagnostics diag;

    for (size_t row = 0; row < n; ++row) {
        point z{data.at(mediator, row)};
        double num = cond.eval(z, {y}, &diag);
        if (num == 0.0) continue;
        double den = cond.eval(z, {data.at(target, row)}, &diag);
        out.values[row] = inv_n * num * conditional_estimate::guarded_ratio(1.0, den, &diag);
    }
    out.floor_hits = diag.floor_hits;
    detail::check_weights(out, "frontdoor_weights");
    return out;
}

// Mediator-with-covariate weights: w_n = p(z_n | w_n, y) / (N * p(z_n | w_n, y_n)).
inline weight_vector tikka_weights(const dataset& data, const std::string& w,
                                   const std::string& z, const std::string& target, const cell& y,
                                   const kernel_map& overrides = {}) {
    detail::check_intervention(data, target, y, "tikka_weights");
    std::vector<std::string> all{z, w, target};
    kernel_map kernels = resolve_kernels(data, all, overrides);
    conditional_estimate cond(data, {z}, {w, target}, kernels);

    size_t n = data.n_rows();
    double inv_n = 1.0 / static_cast<double>(n);
    weight_vector out;
    out.values.assign(n, 0.0);
    out.intervention = y;
    eval_diagnostics diag;

    for (size_t row = 0; row < n; ++row) {
        point zp{data.at(z, row)};
        point num_given{data.at(w, row), y};
        double num = cond.eval(zp, num_given, &diag);
        if (num == 0.0) continue;
        point den_given{data.at(w, row), data.at(target, row)};
        double den = cond.eval(zp, den_given, &diag);
        out.values[row] = inv_n * num * conditional_estimate::guarded_ratio(1.0, den, &diag);
    }
    out.floor_hits = diag.floor_hits;
    detail::check_weights(out, "tikka_weights");
    return out;
}

// ---- plan-file format ----
//
// One declaration per line, '#' comments:
//   effect <name,...>
//   target <name>
//   secondary <name> [from <column>]
//   factor <name> | [<cond> ...]
//   denominator <name> [<name> ...]
inline weight_plan parse_plan(std::istream& in, const std::string& filename = "<plan>") {
    weight_plan plan;
    std::map<std::string, std::vector<std::string>> factor_given;
    std::vector<std::string> order;
    std::map<std::string, std::string> columns;
    std::string line;
    size_t lineno = 0;

    auto fail = [&](const std::string& msg) -> void {
        throw config_error(filename + ":" + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream words(line);
        std::string kw;
        if (!(words >> kw)) continue;

        if (kw == "effect") {
            std::string rest, tok;
            while (words >> tok) rest += tok;
            plan.effect = split_list(rest);
            if (plan.effect.empty()) fail("expected column list after 'effect'");
        } else if (kw == "target") {
            if (!(words >> plan.target)) fail("expected variable name after 'target'");
        } else if (kw == "secondary") {
            std::string name, from_kw, col;
            if (!(words >> name)) fail("expected name after 'secondary'");
            col = name;
            if (words >> from_kw) {
                if (from_kw != "from") fail("expected 'from <column>' after secondary name");
                if (!(words >> col)) fail("expected column name after 'from'");
            }
            order.push_back(name);
            columns[name] = col;
        } else if (kw == "factor") {
            std::string name, bar;
            if (!(words >> name)) fail("expected name after 'factor'");
            if (!(words >> bar) || bar != "|") fail("expected '|' after factor variable");
            std::vector<std::string> given;
            std::string g;
            while (words >> g) given.push_back(g);
            if (factor_given.count(name)) fail("duplicate factor for '" + name + "'");
            factor_given[name] = given;
        } else if (kw == "denominator") {
            std::string d;
            while (words >> d) plan.denominator.push_back(d);
            if (plan.denominator.empty()) fail("expected variable list after 'denominator'");
        } else {
            fail("unknown declaration '" + kw + "'");
        }
    }

    for (const auto& name : order) {
        auto it = factor_given.find(name);
        if (it == factor_given.end())
            throw config_error(filename + ": secondary '" + name + "' has no factor line");
        plan.secondaries.push_back({name, columns[name], it->second});
    }
    for (const auto& [name, _] : factor_given)
        if (std::find(order.begin(), order.end(), name) == order.end())
            throw config_error(filename + ": factor for undeclared secondary '" + name + "'");
    plan.target_in_parents =
        std::find(plan.denominator.begin(), plan.denominator.end(), plan.target) !=
        plan.denominator.end();
    return plan;
}

inline weight_plan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open plan file '" + path + "'");
    return parse_plan(in, path);
}

}  // namespace causalboot
