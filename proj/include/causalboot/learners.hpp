#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"
#include "causalboot/rng.hpp"

namespace causalboot {

// Row-major feature matrix.
struct fmatrix {
    size_t rows = 0, cols = 0;
    std::vector<double> data;

    std::span<const double> row(size_t i) const {
        return std::span<const double>(data.data() + i * cols, cols);
    }
};

// Flatten the named columns of a dataset into features; discrete columns
// contribute their codes. `scale` divides every value (images use 1/255).
inline fmatrix feature_matrix(const dataset& data, std::span<const std::string> columns,
                              double scale = 1.0) {
    fmatrix m;
    m.rows = data.n_rows();
    for (const auto& c : columns) {
        const auto& vi = data.info(c);
        m.cols += vi.kind == var_kind::discrete ? 1 : static_cast<size_t>(vi.dim);
    }
    m.data.reserve(m.rows * m.cols);
    double inv = 1.0 / scale;
    for (size_t i = 0; i < m.rows; ++i) {
        for (const auto& c : columns) {
            const auto& vi = data.info(c);
            if (vi.kind == var_kind::discrete) {
                m.data.push_back(static_cast<double>(data.dvalue(c, i)) * inv);
            } else {
                for (double v : data.cvalue(c, i)) m.data.push_back(v * inv);
            }
        }
    }
    return m;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw data_error("prediction and truth vectors differ in length");
    if (predicted.empty()) throw data_error("accuracy of empty vectors is undefined");
    size_t hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// ---- linear discriminant analysis ----

struct lda_model {
    std::vector<int> labels;                  // ascending class labels
    std::vector<std::vector<double>> means;   // per class
    std::vector<std::vector<double>> alphas;  // Sigma^-1 * mean, per class
    std::vector<double> offsets;              // -mean'alpha/2 + log prior
    size_t dims = 0;
};

namespace detail {

// In-place Cholesky; returns false when the matrix is not positive definite.
inline bool cholesky(std::vector<double>& a, size_t d) {
    for (size_t j = 0; j < d; ++j) {
        double diag = a[j * d + j];
        for (size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
        if (diag <= 0.0) return false;
        double root = std::sqrt(diag);
        a[j * d + j] = root;
        for (size_t i = j + 1; i < d; ++i) {
            double v = a[i * d + j];
            for (size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = v / root;
        }
    }
    return true;
}

inline std::vector<double> cholesky_solve(const std::vector<double>& chol, size_t d,
                                          std::span<const double> b) {
    std::vector<double> x(b.begin(), b.end());
    for (size_t i = 0; i < d; ++i) {
        double v = x[i];
        for (size_t k = 0; k < i; ++k) v -= chol[i * d + k] * x[k];
        x[i] = v / chol[i * d + i];
    }
    for (size_t ii = d; ii > 0; --ii) {
        size_t i = ii - 1;
        double v = x[i];
        for (size_t k = i + 1; k < d; ++k) v -= chol[k * d + i] * x[k];
        x[i] = v / chol[i * d + i];
    }
    return x;
}

}  // namespace detail

// Pooled-covariance LDA with a trace-scaled ridge; priors from class counts.
inline lda_model lda_fit(const fmatrix& x, std::span<const int> y) {
    if (x.rows != y.size()) throw data_error("feature matrix and labels differ in length");
    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    if (by_class.size() < 2) throw data_error("LDA needs at least two classes");
    for (const auto& [label, idx] : by_class)
        if (idx.size() < 2)
            throw data_error("LDA class " + std::to_string(label) + " has fewer than 2 rows");

    size_t d = x.cols, n = x.rows, k = by_class.size();
    lda_model model;
    model.dims = d;

    std::vector<double> cov(d * d, 0.0);
    for (const auto& [label, idx] : by_class) {
        std::vector<double> mean(d, 0.0);
        for (size_t i : idx) {
            auto r = x.row(i);
            for (size_t j = 0; j < d; ++j) mean[j] += r[j];
        }
        for (double& v : mean) v /= static_cast<double>(idx.size());
        for (size_t i : idx) {
            auto r = x.row(i);
            for (size_t a = 0; a < d; ++a) {
                double da = r[a] - mean[a];
                for (size_t b = a; b < d; ++b) cov[a * d + b] += da * (r[b] - mean[b]);
            }
        }
        model.labels.push_back(label);
        model.means.push_back(std::move(mean));
    }
    double denom = static_cast<double>(n - k);
    for (size_t a = 0; a < d; ++a)
        for (size_t b = a; b < d; ++b) {
            cov[a * d + b] /= denom;
            cov[b * d + a] = cov[a * d + b];
        }

    double trace = 0.0;
    for (size_t j = 0; j < d; ++j) trace += cov[j * d + j];
    double ridge = 1e-6 * trace / static_cast<double>(d);
    for (size_t j = 0; j < d; ++j) cov[j * d + j] += ridge;

    if (!detail::cholesky(cov, d))
        throw data_error("singular pooled covariance (even after ridge)");

    size_t ci = 0;
    for (const auto& [label, idx] : by_class) {
        auto alpha = detail::cholesky_solve(cov, d, model.means[ci]);
        double quad = std::inner_product(alpha.begin(), alpha.end(), model.means[ci].begin(), 0.0);
        double prior = static_cast<double>(idx.size()) / static_cast<double>(n);
        model.offsets.push_back(-0.5 * quad + std::log(prior));
        model.alphas.push_back(std::move(alpha));
        ++ci;
    }
    return model;
}

inline int lda_predict(const lda_model& model, std::span<const double> x) {
    if (x.size() != model.dims) throw data_error("LDA input dimension mismatch");
    int best_label = model.labels.front();
    double best = -1e308;
    for (size_t c = 0; c < model.labels.size(); ++c) {
        double s = model.offsets[c] +
                   std::inner_product(model.alphas[c].begin(), model.alphas[c].end(), x.begin(), 0.0);
        if (s > best) {
            best = s;
            best_label = model.labels[c];
        }
    }
    return best_label;
}

inline std::vector<int> lda_predict(const lda_model& model, const fmatrix& x) {
    std::vector<int> out(x.rows);
    for (size_t i = 0; i < x.rows; ++i) out[i] = lda_predict(model, x.row(i));
    return out;
}

// LDA class scores at a point (same order as model.labels).
inline std::vector<double> lda_scores(const lda_model& model, std::span<const double> x) {
    std::vector<double> out;
    for (size_t c = 0; c < model.labels.size(); ++c)
        out.push_back(model.offsets[c] + std::inner_product(model.alphas[c].begin(),
                                                            model.alphas[c].end(), x.begin(), 0.0));
    return out;
}

// ---- random forest ----

struct forest_params {
    int trees = 100;
    int max_features = 0;  // 0 = ceil(sqrt(d))
    int min_leaf = 1;
    int max_depth = 0;     // 0 = unlimited
    std::uint64_t seed = 0;
};

struct tree_node {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    int label = 0;
};

struct forest_model {
    std::vector<std::vector<tree_node>> trees;
    std::vector<int> labels;  // ascending class labels
    size_t dims = 0;
};

namespace detail {

struct tree_builder {
    const fmatrix& x;
    std::span<const int> yi;  // class indices 0..k-1
    size_t n_classes;
    int mtry, min_leaf, max_depth;
    rng* gen;
    std::vector<tree_node> nodes;
    std::vector<size_t> feature_bag;

    int majority(std::span<const size_t> rows) const {
        std::vector<size_t> counts(n_classes, 0);
        for (size_t r : rows) ++counts[static_cast<size_t>(yi[r])];
        return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }

    int build(std::vector<size_t>& rows, int depth) {
        int node_id = static_cast<int>(nodes.size());
        nodes.emplace_back();

        std::vector<size_t> counts(n_classes, 0);
        for (size_t r : rows) ++counts[static_cast<size_t>(yi[r])];
        bool pure = std::count_if(counts.begin(), counts.end(), [](size_t c) { return c > 0; }) <= 1;
        bool depth_capped = max_depth > 0 && depth >= max_depth;
        if (pure || depth_capped || rows.size() < 2 * static_cast<size_t>(min_leaf)) {
            nodes[node_id].label = static_cast<int>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            return node_id;
        }

        // random feature subset for this split
        size_t d = x.cols;
        for (int t = 0; t < mtry; ++t) {
            size_t pick = static_cast<size_t>(t) + gen->below(d - static_cast<size_t>(t));
            std::swap(feature_bag[static_cast<size_t>(t)], feature_bag[pick]);
        }

        double best_score = 1e308;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> vals(rows.size());
        std::vector<size_t> left_counts(n_classes);
        for (int t = 0; t < mtry; ++t) {
            size_t f = feature_bag[static_cast<size_t>(t)];
            for (size_t i = 0; i < rows.size(); ++i)
                vals[i] = {x.data[rows[i] * d + f], yi[rows[i]]};
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::fill(left_counts.begin(), left_counts.end(), 0);
            size_t n_left = 0, n_total = rows.size();
            for (size_t i = 0; i + 1 < n_total; ++i) {
                ++left_counts[static_cast<size_t>(vals[i].second)];
                ++n_left;
                if (vals[i].first == vals[i + 1].first) continue;
                size_t n_right = n_total - n_left;
                if (n_left < static_cast<size_t>(min_leaf) ||
                    n_right < static_cast<size_t>(min_leaf))
                    continue;
                double gini_left = 1.0, gini_right = 1.0;
                for (size_t c = 0; c < n_classes; ++c) {
                    double pl = static_cast<double>(left_counts[c]) / static_cast<double>(n_left);
                    double pr = static_cast<double>(counts[c] - left_counts[c]) /
                                static_cast<double>(n_right);
                    gini_left -= pl * pl;
                    gini_right -= pr * pr;
                }
                double score = (static_cast<double>(n_left) * gini_left +
                                static_cast<double>(n_right) * gini_right) /
                               static_cast<double>(n_total);
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }

        if (best_feature < 0) {
            nodes[node_id].label = static_cast<int>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            return node_id;
        }

        std::vector<size_t> left_rows, right_rows;
        for (size_t r : rows)
            (x.data[r * d + static_cast<size_t>(best_feature)] <= best_threshold ? left_rows
                                                                                 : right_rows)
                .push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        int left_id = build(left_rows, depth + 1);
        int right_id = build(right_rows, depth + 1);
        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        nodes[node_id].left = left_id;
        nodes[node_id].right = right_id;
        return node_id;
    }
};

}  // namespace detail

// Bagged Gini trees with a fresh random feature subset per split; majority
// vote over trees; deterministic given the seed (per-tree derived streams).
inline forest_model forest_fit(const fmatrix& x, std::span<const int> y,
                               const forest_params& params) {
    if (x.rows != y.size()) throw data_error("feature matrix and labels differ in length");
    if (x.rows == 0) throw data_error("empty training set");
    if (params.trees < 1) throw config_error("forest needs at least one tree");

    forest_model model;
    model.dims = x.cols;
    std::map<int, int> label_index;
    for (int label : y) label_index.emplace(label, 0);
    if (label_index.size() < 2) throw data_error("forest needs at least two classes");
    for (auto& [label, idx] : label_index) {
        idx = static_cast<int>(model.labels.size());
        model.labels.push_back(label);
    }
    std::vector<int> yi(y.size());
    for (size_t i = 0; i < y.size(); ++i) yi[i] = label_index[y[i]];

    int mtry = params.max_features > 0
                   ? std::min<int>(params.max_features, static_cast<int>(x.cols))
                   : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols))));

    rng forest_gen(derive_seed(params.seed, 0x74726565ULL));
    for (int t = 0; t < params.trees; ++t) {
        rng tree_gen = forest_gen.derive(static_cast<std::uint64_t>(t));
        std::vector<size_t> rows(x.rows);
        for (size_t i = 0; i < x.rows; ++i) rows[i] = tree_gen.below(x.rows);

        detail::tree_builder builder{x,      yi,
                                     model.labels.size(), mtry,
                                     params.min_leaf,     params.max_depth,
                                     &tree_gen,           {},
                                     {}};
        builder.feature_bag.resize(x.cols);
        std::iota(builder.feature_bag.begin(), builder.feature_bag.end(), size_t{0});
        builder.build(rows, 0);
        model.trees.push_back(std::move(builder.nodes));
    }
    return model;
}

inline int forest_predict(const forest_model& model, std::span<const double> x) {
    if (x.size() != model.dims) throw data_error("forest input dimension mismatch");
    std::vector<size_t> votes(model.labels.size(), 0);
    for (const auto& tree : model.trees) {
        int node = 0;
        while (tree[static_cast<size_t>(node)].feature >= 0) {
            const auto& nd = tree[static_cast<size_t>(node)];
            node = x[static_cast<size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        ++votes[static_cast<size_t>(tree[static_cast<size_t>(node)].label)];
    }
    size_t best = static_cast<size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    return model.labels[best];
}

inline std::vector<int> forest_predict(const forest_model& model, const fmatrix& x) {
    std::vector<int> out(x.rows);
    for (size_t i = 0; i < x.rows; ++i) out[i] = forest_predict(model, x.row(i));
    return out;
}

}  // namespace causalboot
