#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"
#include "causalboot/density.hpp"
#include "causalboot/rng.hpp"
#include "causalboot/weights.hpp"

namespace causalboot {

// How to draw a deconfounded sample from per-row weights.
struct bootstrap_spec {
    enum class mode_t { dirac, smoothed };
    enum class schedule_t { mirror_observed, per_class_floor, explicit_list };

    mode_t mode = mode_t::dirac;
    schedule_t schedule = schedule_t::per_class_floor;
    std::vector<cell> explicit_values;   // schedule_t::explicit_list
    kernel_map effect_kernels;           // smoothed mode: per effect column
    std::uint64_t seed = 0;
    std::uint64_t replicate_index = 0;

    std::string mode_name() const { return mode == mode_t::dirac ? "dirac" : "smoothed"; }
    std::string schedule_name() const {
        switch (schedule) {
            case schedule_t::mirror_observed: return "mirror-observed";
            case schedule_t::per_class_floor: return "per-class-floor";
            default: return "explicit";
        }
    }
};

struct deconfounded_sample {
    dataset rows;                       // effect columns + target column
    std::vector<size_t> provenance;     // 1-based source row per emitted row
    bootstrap_spec spec;
    long long floor_hits = 0;
};

// Largest-remainder apportionment: floor(n * p_k) per class, remainder
// spread by largest fractional part, ties broken by ascending class index.
// Totals exactly n.
inline std::vector<size_t> grouped_counts(std::span<const double> probs, size_t n) {
    struct entry {
        size_t index;
        size_t floor_count;
        double frac;
    };
    std::vector<entry> entries;
    size_t assigned = 0;
    for (size_t k = 0; k < probs.size(); ++k) {
        double exact = static_cast<double>(n) * probs[k];
        size_t fl = static_cast<size_t>(std::floor(exact));
        entries.push_back({k, fl, exact - static_cast<double>(fl)});
        assigned += fl;
    }
    if (assigned > n) throw data_error("schedule probabilities sum above 1");
    size_t remainder = n - assigned;
    std::sort(entries.begin(), entries.end(), [](const entry& a, const entry& b) {
        if (a.frac != b.frac) return a.frac > b.frac;
        return a.index < b.index;
    });
    for (size_t i = 0; i < remainder; ++i) ++entries[i % entries.size()].floor_count;
    std::sort(entries.begin(), entries.end(),
              [](const entry& a, const entry& b) { return a.index < b.index; });
    std::vector<size_t> out(probs.size());
    for (const auto& e : entries) out[e.index] = e.floor_count;
    return out;
}

// Class-grouped intervention schedule for a discrete target. The grouped
// class shares are the empirical ones, so the counts reduce to the observed
// per-class counts exactly; values ascend.
inline std::vector<cell> grouped_schedule(const dataset& data, const std::string& target) {
    if (data.info(target).kind != var_kind::discrete)
        throw data_error("grouped schedule requires a discrete target");
    const auto& col = data.discrete_column(target);
    std::map<int, size_t> counts;
    for (int v : col) ++counts[v];
    std::vector<cell> schedule;
    schedule.reserve(col.size());
    for (const auto& [value, count] : counts)
        for (size_t i = 0; i < count; ++i) schedule.emplace_back(value);
    return schedule;
}

// One kernel perturbation of a record: gaussian noise per continuous
// dimension, discrete entries pass through untouched. Requesting a smoothing
// kernel for a discrete column is an error.
inline point smoothed_draw(const point& center, std::span<const std::string> columns,
                           const kernel_map& effect_kernels, rng& gen) {
    point out;
    out.reserve(center.size());
    for (size_t j = 0; j < center.size(); ++j) {
        const auto& name = columns[j];
        auto it = effect_kernels.find(name);
        if (center[j].is_discrete()) {
            if (it != effect_kernels.end() && it->second.kind != kernel_spec::kind_t::dirac)
                throw data_error("smoothing requested on discrete column '" + name + "'");
            out.push_back(center[j]);
            continue;
        }
        if (it == effect_kernels.end() || it->second.kind == kernel_spec::kind_t::dirac) {
            out.push_back(center[j]);
            continue;
        }
        if (it->second.kind != kernel_spec::kind_t::gaussian)
            throw data_error("smoothed mode needs gaussian kernels on continuous columns ('" +
                             name + "')");
        auto xs = center[j].reals();
        const auto& h = it->second.bandwidths;
        if (h.size() != xs.size())
            throw data_error("smoothing kernel dimension mismatch on '" + name + "'");
        std::vector<double> shifted(xs.begin(), xs.end());
        for (size_t d = 0; d < shifted.size(); ++d) shifted[d] += h[d] * gen.normal();
        out.push_back(cell(std::move(shifted)));
    }
    return out;
}

namespace detail {

// Cumulative-sum inversion over normalized weights; scale-invariant in the
// weight vector by construction.
class index_sampler {
public:
    explicit index_sampler(const std::vector<double>& weights) {
        cum_.resize(weights.size());
        double total = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            total += weights[i];
            cum_[i] = total;
        }
        if (!(total > 0.0)) throw data_error("cannot sample from all-zero weights");
        total_ = total;
    }

    size_t draw(rng& gen) const {
        double u = gen.uniform01() * total_;
        auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        size_t i = static_cast<size_t>(it - cum_.begin());
        if (i == cum_.size()) {
            // u rounded up to the total; land on the last positive-weight slot
            i = cum_.size() - 1;
            while (i > 0 && cum_[i] == cum_[i - 1]) --i;
        }
        return i;
    }

private:
    std::vector<double> cum_;
    double total_ = 0.0;
};

struct cell_key {
    bool discrete;
    long long code;
    std::vector<std::uint64_t> bits;

    static cell_key of(const cell& c) {
        cell_key k;
        k.discrete = c.is_discrete();
        k.code = c.code();
        for (double v : c.reals()) {
            std::uint64_t b;
            static_assert(sizeof(b) == sizeof(v));
            std::memcpy(&b, &v, sizeof(b));
            k.bits.push_back(b);
        }
        return k;
    }
    bool operator<(const cell_key& o) const {
        return std::tie(discrete, code, bits) < std::tie(o.discrete, o.code, o.bits);
    }
};

}  // namespace detail

// Draw a causal bootstrap sample: for each scheduled intervention value y_m,
// pick a source row i with probability proportional to w_i(y_m) and emit
// (x_i, y_m) — or a kernel perturbation of x_i in smoothed mode. Emitted row
// order is schedule order; deterministic for fixed (seed, replicate-index).
inline deconfounded_sample causal_bootstrap(
    const dataset& data, std::span<const std::string> effect_columns, const std::string& target,
    const std::function<weight_vector(const cell&)>& weight_fn, const bootstrap_spec& spec) {
    if (data.n_rows() == 0) throw data_error("cannot bootstrap an empty dataset");
    for (const auto& c : effect_columns) data.info(c);

    std::vector<cell> schedule;
    switch (spec.schedule) {
        case bootstrap_spec::schedule_t::mirror_observed:
            schedule.reserve(data.n_rows());
            for (size_t i = 0; i < data.n_rows(); ++i) schedule.push_back(data.at(target, i));
            break;
        case bootstrap_spec::schedule_t::per_class_floor:
            schedule = grouped_schedule(data, target);
            break;
        case bootstrap_spec::schedule_t::explicit_list:
            schedule = spec.explicit_values;
            break;
    }
    if (schedule.empty()) throw data_error("empty intervention schedule");

    rng gen(derive_seed(spec.seed ^ spec.replicate_index, 0x626f6f74ULL));

    // weights depend only on the intervention value; group identical values
    std::map<detail::cell_key, std::pair<weight_vector, detail::index_sampler>> by_value;
    long long floor_hits = 0;

    std::vector<size_t> provenance;
    provenance.reserve(schedule.size());
    std::vector<point> emitted_x;
    emitted_x.reserve(schedule.size());
    std::vector<cell> emitted_y;
    emitted_y.reserve(schedule.size());

    for (const auto& y : schedule) {
        auto key = detail::cell_key::of(y);
        auto it = by_value.find(key);
        if (it == by_value.end()) {
            weight_vector w = weight_fn(y);
            if (w.values.size() != data.n_rows())
                throw data_error("weight function returned " + std::to_string(w.values.size()) +
                                 " weights for " + std::to_string(data.n_rows()) + " rows");
            floor_hits += w.floor_hits;
            detail::index_sampler sampler(w.values);
            it = by_value.emplace(key, std::make_pair(std::move(w), std::move(sampler))).first;
        }
        size_t i = it->second.second.draw(gen);
        provenance.push_back(i + 1);
        point x = data.row_point(effect_columns, i);
        if (spec.mode == bootstrap_spec::mode_t::smoothed)
            x = smoothed_draw(x, effect_columns, spec.effect_kernels, gen);
        emitted_x.push_back(std::move(x));
        emitted_y.push_back(y);
    }

    // assemble the output table
    deconfounded_sample out;
    out.spec = spec;
    out.provenance = std::move(provenance);
    out.floor_hits = floor_hits;
    size_t m = emitted_y.size();
    for (size_t j = 0; j < effect_columns.size(); ++j) {
        const auto& vi = data.info(effect_columns[j]);
        if (vi.kind == var_kind::discrete) {
            std::vector<int> vals(m);
            for (size_t r = 0; r < m; ++r) vals[r] = emitted_x[r][j].code();
            out.rows.add_discrete(vi.name, std::move(vals), vi.cardinality);
        } else {
            std::vector<double> vals;
            vals.reserve(m * static_cast<size_t>(vi.dim));
            for (size_t r = 0; r < m; ++r) {
                auto xs = emitted_x[r][j].reals();
                vals.insert(vals.end(), xs.begin(), xs.end());
            }
            out.rows.add_continuous(vi.name, std::move(vals), vi.dim);
        }
    }
    const auto& ti = data.info(target);
    if (ti.kind == var_kind::discrete) {
        std::vector<int> vals(m);
        for (size_t r = 0; r < m; ++r) vals[r] = emitted_y[r].code();
        out.rows.add_discrete(ti.name, std::move(vals), ti.cardinality);
    } else {
        std::vector<double> vals;
        vals.reserve(m * static_cast<size_t>(ti.dim));
        for (size_t r = 0; r < m; ++r) {
            auto xs = emitted_y[r].reals();
            vals.insert(vals.end(), xs.begin(), xs.end());
        }
        out.rows.add_continuous(ti.name, std::move(vals), ti.dim);
    }
    return out;
}

// Fold ids per emitted row such that folds never share a source row: the
// distinct provenance values are shuffled once and dealt round-robin.
inline std::vector<int> split_sample_folds(const deconfounded_sample& sample, int k,
                                           std::uint64_t seed) {
    if (k < 2) throw config_error("split-sample needs at least 2 folds");
    std::vector<size_t> sources = sample.provenance;
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

    rng gen(derive_seed(seed, 0x666f6c64ULL));
    for (size_t i = sources.size(); i > 1; --i)
        std::swap(sources[i - 1], sources[gen.below(i)]);

    std::map<size_t, int> fold_of;
    for (size_t i = 0; i < sources.size(); ++i)
        fold_of[sources[i]] = static_cast<int>(i % static_cast<size_t>(k));
    std::vector<int> out;
    out.reserve(sample.provenance.size());
    for (size_t src : sample.provenance) out.push_back(fold_of[src]);
    return out;
}

}  // namespace causalboot
