#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"

namespace causalboot {

// Any density evaluated as a denominator is floored here; a floor hit with a
// positive numerator is counted and surfaced in reports.
inline constexpr double k_density_floor = 1e-12;

struct eval_diagnostics {
    long long floor_hits = 0;
};

struct kernel_spec {
    enum class kind_t { kronecker, gaussian, dirac };
    kind_t kind = kind_t::kronecker;
    std::vector<double> bandwidths;  // gaussian: one entry per dimension, all > 0

    static kernel_spec kronecker() { return {}; }
    static kernel_spec gaussian(std::vector<double> h) {
        kernel_spec k;
        k.kind = kind_t::gaussian;
        for (double b : h)
            if (!(b > 0.0)) throw data_error("gaussian bandwidth must be positive");
        k.bandwidths = std::move(h);
        return k;
    }
    static kernel_spec gaussian(double h) { return gaussian(std::vector<double>{h}); }
    static kernel_spec dirac() {
        kernel_spec k;
        k.kind = kind_t::dirac;
        return k;
    }
};

using kernel_map = std::map<std::string, kernel_spec>;

// Rule-of-thumb bandwidth h = 0.9 * min(sd, iqr/1.34) * N^(-1/5).
// Requires at least two distinct values. When the quartiles coincide (iqr 0)
// the spread estimate falls back to sd alone.
inline double silverman_bandwidth(std::span<const double> column) {
    size_t n = column.size();
    if (n < 2) throw data_error("bandwidth selection needs at least 2 values");
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw data_error("degenerate column: all values identical");

    double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));

    auto quantile = [&](double q) {
        double h = (static_cast<double>(n) - 1.0) * q;
        size_t lo = static_cast<size_t>(h);
        size_t hi = std::min(lo + 1, n - 1);
        double frac = h - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };
    double iqr = quantile(0.75) - quantile(0.25);

    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

// kronecker for discrete variables, gaussian with per-dimension Silverman
// bandwidths for continuous ones.
inline kernel_map default_kernels(const dataset& data, std::span<const std::string> vars) {
    kernel_map out;
    for (const auto& v : vars) {
        const auto& vi = data.info(v);
        if (vi.kind == var_kind::discrete) {
            out[v] = kernel_spec::kronecker();
        } else {
            const auto& col = data.continuous_column(v);
            size_t n = data.n_rows();
            std::vector<double> h(static_cast<size_t>(vi.dim));
            std::vector<double> dim_vals(n);
            for (int d = 0; d < vi.dim; ++d) {
                for (size_t i = 0; i < n; ++i) dim_vals[i] = col[i * vi.dim + d];
                h[static_cast<size_t>(d)] = silverman_bandwidth(dim_vals);
            }
            out[v] = kernel_spec::gaussian(std::move(h));
        }
    }
    return out;
}

// Merge user overrides over defaults.
inline kernel_map resolve_kernels(const dataset& data, std::span<const std::string> vars,
                                  const kernel_map& overrides) {
    kernel_map out = default_kernels(data, vars);
    for (const auto& v : vars) {
        auto it = overrides.find(v);
        if (it != overrides.end()) out[v] = it->second;
    }
    return out;
}

namespace detail {

inline constexpr double k_inv_sqrt_2pi = 0.398942280401432677939946;

inline double gaussian_product(std::span<const double> a, std::span<const double> b,
                               std::span<const double> h) {
    double out = 1.0;
    for (size_t d = 0; d < a.size(); ++d) {
        double t = (a[d] - b[d]) / h[d];
        out *= k_inv_sqrt_2pi / h[d] * std::exp(-0.5 * t * t);
    }
    return out;
}

}  // namespace detail

// Product-kernel density estimate over an ordered variable subset, fit on a
// dataset's rows: p(p1..pk) = (1/N) sum_n prod_v K[p_v - v_n].
// Kronecker-only estimates reproduce empirical frequencies exactly.
class density_estimate {
public:
    density_estimate(const dataset& data, std::vector<std::string> variables,
                     const kernel_map& kernels)
        : data_(&data), vars_(std::move(variables)) {
        if (data.n_rows() == 0) throw data_error("cannot fit a density on an empty dataset");
        kernels_.reserve(vars_.size());
        for (const auto& v : vars_) {
            const auto& vi = data.info(v);
            auto it = kernels.find(v);
            if (it == kernels.end())
                throw data_error("no kernel specified for variable '" + v + "'");
            const kernel_spec& k = it->second;
            if (k.kind == kernel_spec::kind_t::dirac)
                throw data_error("dirac kernel is not evaluable; it is a resampling mode, not a density kernel");
            if (k.kind == kernel_spec::kind_t::kronecker && vi.kind != var_kind::discrete)
                throw data_error("kronecker kernel requires a discrete variable ('" + v + "')");
            if (k.kind == kernel_spec::kind_t::gaussian) {
                if (vi.kind != var_kind::continuous)
                    throw data_error("gaussian kernel requires a continuous variable ('" + v + "')");
                if (k.bandwidths.size() != static_cast<size_t>(vi.dim))
                    throw data_error("gaussian kernel for '" + v + "' needs " +
                                     std::to_string(vi.dim) + " bandwidth(s)");
            }
            kernels_.push_back(k);
        }
    }

    const std::vector<std::string>& variables() const { return vars_; }
    const dataset& support() const { return *data_; }

    double eval(const point& p) const {
        if (p.size() != vars_.size())
            throw data_error("evaluation point has " + std::to_string(p.size()) +
                             " components, estimate expects " + std::to_string(vars_.size()));
        size_t n = data_->n_rows();
        double total = 0.0;
        for (size_t row = 0; row < n; ++row) total += row_kernel(p, row);
        return total / static_cast<double>(n);
    }

    // Kernel product for one support row; used by the weight engine to share
    // the N^2 loop between numerator and denominator.
    double row_kernel(const point& p, size_t row) const {
        double out = 1.0;
        for (size_t j = 0; j < vars_.size(); ++j) {
            const auto& k = kernels_[j];
            const auto& q = p[j];
            if (k.kind == kernel_spec::kind_t::kronecker) {
                if (!q.is_discrete())
                    throw data_error("discrete value expected for '" + vars_[j] + "'");
                if (q.code() != data_->dvalue(vars_[j], row)) return 0.0;
            } else {
                auto xs = q.reals();
                if (xs.size() != k.bandwidths.size())
                    throw data_error("dimension mismatch for '" + vars_[j] + "'");
                out *= detail::gaussian_product(xs, data_->cvalue(vars_[j], row), k.bandwidths);
            }
        }
        return out;
    }

private:
    const dataset* data_;
    std::vector<std::string> vars_;
    std::vector<kernel_spec> kernels_;
};

// Conditional estimate as a ratio of two KDEs sharing the same support:
// p(target | given) = p(target, given) / p(given).
class conditional_estimate {
public:
    conditional_estimate(const dataset& data, std::vector<std::string> target,
                         std::vector<std::string> given, const kernel_map& kernels)
        : target_(std::move(target)), given_(std::move(given)),
          joint_(data, concat(target_, given_), kernels),
          marginal_(data, given_, kernels) {
        for (const auto& t : target_)
            for (const auto& g : given_)
                if (t == g) throw data_error("conditional target and conditioning sets overlap on '" + t + "'");
    }

    const std::vector<std::string>& target() const { return target_; }
    const std::vector<std::string>& given() const { return given_; }

    // Ratio with the denominator floor policy: a vanishing denominator under
    // a vanishing numerator is a 0/0 query outside the observed support and
    // is an error; with a positive numerator the floor applies and the hit is
    // counted.
    double eval(const point& target_vals, const point& given_vals,
                eval_diagnostics* diag = nullptr) const {
        point joint_point = target_vals;
        joint_point.insert(joint_point.end(), given_vals.begin(), given_vals.end());
        double num = joint_.eval(joint_point);
        double den = marginal_.eval(given_vals);
        return guarded_ratio(num, den, diag);
    }

    static double guarded_ratio(double num, double den, eval_diagnostics* diag) {
        if (den < k_density_floor) {
            if (num <= 0.0)
                throw data_error("zero-denominator: conditioning value has no density support");
            if (diag) ++diag->floor_hits;
            den = k_density_floor;
        }
        return num / den;
    }

    const density_estimate& joint() const { return joint_; }
    const density_estimate& marginal() const { return marginal_; }

private:
    static std::vector<std::string> concat(const std::vector<std::string>& a,
                                           const std::vector<std::string>& b) {
        std::vector<std::string> out = a;
        out.insert(out.end(), b.begin(), b.end());
        return out;
    }

    std::vector<std::string> target_;
    std::vector<std::string> given_;
    density_estimate joint_;
    density_estimate marginal_;
};

// Convenience: fit a joint KDE with default kernels plus overrides.
inline density_estimate fit_kde(const dataset& data, std::vector<std::string> variables,
                                const kernel_map& overrides = {}) {
    auto kernels = resolve_kernels(data, variables, overrides);
    return density_estimate(data, std::move(variables), kernels);
}

inline conditional_estimate fit_conditional(const dataset& data, std::vector<std::string> target,
                                            std::vector<std::string> given,
                                            const kernel_map& overrides = {}) {
    std::vector<std::string> all = target;
    all.insert(all.end(), given.begin(), given.end());
    auto kernels = resolve_kernels(data, all, overrides);
    return conditional_estimate(data, std::move(target), std::move(given), kernels);
}

}  // namespace causalboot
