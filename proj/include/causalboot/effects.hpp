#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"
#include "causalboot/weights.hpp"

namespace causalboot {

namespace detail {

// Flattened numeric view of the requested columns: per-row feature vector.
inline std::vector<std::string> check_effect_columns(const dataset& data,
                                                     std::span<const std::string> columns,
                                                     bool allow_discrete) {
    if (columns.empty()) throw data_error("no effect columns given");
    for (const auto& c : columns) {
        const auto& vi = data.info(c);
        if (vi.kind == var_kind::discrete && !allow_discrete)
            throw data_error("effect column '" + c +
                             "' is discrete; pass allow_discrete to average category codes");
    }
    return {columns.begin(), columns.end()};
}

inline size_t total_dims(const dataset& data, std::span<const std::string> columns) {
    size_t d = 0;
    for (const auto& c : columns) {
        const auto& vi = data.info(c);
        d += vi.kind == var_kind::discrete ? 1 : static_cast<size_t>(vi.dim);
    }
    return d;
}

inline void fill_row(const dataset& data, std::span<const std::string> columns, size_t row,
                     std::vector<double>& out) {
    out.clear();
    for (const auto& c : columns) {
        const auto& vi = data.info(c);
        if (vi.kind == var_kind::discrete) {
            out.push_back(static_cast<double>(data.dvalue(c, row)));
        } else {
            auto xs = data.cvalue(c, row);
            out.insert(out.end(), xs.begin(), xs.end());
        }
    }
}

}  // namespace detail

// Expected response under the intervention the weights encode:
// sum_n w_n x_n / sum_n w_n, per dimension. Normalizing by the weight sum
// makes the estimate invariant to rescaling the weight vector.
inline std::vector<double> weighted_response(const dataset& data,
                                             std::span<const std::string> columns,
                                             const weight_vector& weights,
                                             bool allow_discrete = false) {
    detail::check_effect_columns(data, columns, allow_discrete);
    if (weights.values.size() != data.n_rows())
        throw data_error("weight vector length does not match the dataset");
    double total = weights.sum();
    if (!(total > 0.0)) throw data_error("all weights are zero");

    std::vector<double> acc(detail::total_dims(data, columns), 0.0);
    std::vector<double> row;
    for (size_t i = 0; i < data.n_rows(); ++i) {
        double w = weights.values[i];
        if (w == 0.0) continue;
        detail::fill_row(data, columns, i, row);
        for (size_t d = 0; d < acc.size(); ++d) acc[d] += w * row[d];
    }
    for (double& v : acc) v /= total;
    return acc;
}

// Smallest per-dimension value whose cumulative normalized weight reaches q.
inline std::vector<double> weighted_quantile(const dataset& data,
                                             std::span<const std::string> columns,
                                             const weight_vector& weights, double q) {
    if (!(q > 0.0 && q < 1.0)) throw config_error("quantile must lie strictly between 0 and 1");
    detail::check_effect_columns(data, columns, false);
    if (weights.values.size() != data.n_rows())
        throw data_error("weight vector length does not match the dataset");
    double total = weights.sum();
    if (!(total > 0.0)) throw data_error("all weights are zero");

    size_t dims = detail::total_dims(data, columns);
    size_t n = data.n_rows();
    std::vector<double> matrix(n * dims);
    std::vector<double> row;
    for (size_t i = 0; i < n; ++i) {
        detail::fill_row(data, columns, i, row);
        std::copy(row.begin(), row.end(), matrix.begin() + static_cast<long>(i * dims));
    }

    std::vector<double> column_values(n);
    std::vector<size_t> order(n);
    std::vector<double> out(dims);

    for (size_t d = 0; d < dims; ++d) {
        for (size_t i = 0; i < n; ++i) column_values[i] = matrix[i * dims + d];
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return column_values[a] < column_values[b];
        });
        double cum = 0.0;
        double result = column_values[order.back()];
        for (size_t i : order) {
            cum += weights.values[i] / total;
            if (cum >= q) {
                result = column_values[i];
                break;
            }
        }
        out[d] = result;
    }
    return out;
}

// Back-door contrast E[X|do(y1)] - E[X|do(y0)] via the adjusted weights; on
// fully discrete inputs this equals the classical inverse-probability-
// weighting treatment-effect estimator.
inline std::vector<double> ate_backdoor(const dataset& data,
                                        const std::vector<std::string>& adjust,
                                        const std::string& target, const cell& y1, const cell& y0,
                                        std::span<const std::string> effect_columns,
                                        const kernel_map& overrides = {}) {
    auto r1 = weighted_response(data, effect_columns,
                                backdoor_weights(data, adjust, target, y1, overrides));
    auto r0 = weighted_response(data, effect_columns,
                                backdoor_weights(data, adjust, target, y0, overrides));
    for (size_t d = 0; d < r1.size(); ++d) r1[d] -= r0[d];
    return r1;
}

// Front-door contrast under mediator-carried effects with unmeasured
// confounding.
inline std::vector<double> ate_frontdoor(const dataset& data, const std::string& mediator,
                                         const std::string& target, const cell& y1, const cell& y0,
                                         std::span<const std::string> effect_columns,
                                         const kernel_map& overrides = {}) {
    auto r1 = weighted_response(data, effect_columns,
                                frontdoor_weights(data, mediator, target, y1, overrides));
    auto r0 = weighted_response(data, effect_columns,
                                frontdoor_weights(data, mediator, target, y0, overrides));
    for (size_t d = 0; d < r1.size(); ++d) r1[d] -= r0[d];
    return r1;
}

}  // namespace causalboot
