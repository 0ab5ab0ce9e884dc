#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"
#include "causalboot/graph.hpp"
#include "causalboot/resample.hpp"
#include "causalboot/rng.hpp"

namespace causalboot {

// One synthetic sample request. Environment 3 is always the non-confounded
// one; 1 and 2 share the confounded regime.
struct env_spec {
    int environment = 1;  // 1 train, 2 confounded test, 3 non-confounded test
    size_t n = 2000;
    std::uint64_t seed = 0;
};

inline void check_env(const env_spec& spec) {
    if (spec.environment < 1 || spec.environment > 3)
        throw config_error("environment must be 1, 2 or 3");
    if (spec.n == 0) throw config_error("sample size must be positive");
}

// Two-valued Bernoulli on {1,2}: emits 1 with probability theta, else 2.
struct bern12 {
    double theta = 0.5;
    int draw(rng& gen) const { return gen.bernoulli(theta) ? 1 : 2; }
};

// ---- synthetic Gaussian mixtures ----
//
// u ~ Bern12(p); y|u ~ Bern12(q_e(u)); z|y ~ Bern12(r(y));
// x1|z ~ N(mu1(z), 1); x2|u ~ N(mu2(u), 1).
namespace detail {

struct gauss_params {
    double p;
    double q1, q2;        // q_e(u=1), q_e(u=2) for e in {1,2}; environment 3 uses 1/2
    double r1, r2;        // r(y=1), r(y=2)
    double mu1_1 = 1.5, mu1_2 = -1.5;
    double mu2_1 = 2.4, mu2_2 = -2.4;
};

inline dataset gen_gauss(const env_spec& spec, const gauss_params& par) {
    check_env(spec);
    rng gen(derive_seed(spec.seed, 0x6761757373ULL));
    size_t n = spec.n;
    std::vector<int> env(n, spec.environment), u(n), y(n), z(n);
    std::vector<double> x1(n), x2(n);
    bool confounded = spec.environment != 3;
    for (size_t i = 0; i < n; ++i) {
        u[i] = bern12{par.p}.draw(gen);
        double q = confounded ? (u[i] == 1 ? par.q1 : par.q2) : 0.5;
        y[i] = bern12{q}.draw(gen);
        z[i] = bern12{y[i] == 1 ? par.r1 : par.r2}.draw(gen);
        x1[i] = gen.normal(z[i] == 1 ? par.mu1_1 : par.mu1_2, 1.0);
        x2[i] = gen.normal(u[i] == 1 ? par.mu2_1 : par.mu2_2, 1.0);
    }
    dataset out;
    out.add_discrete("env", std::move(env), 3);
    out.add_discrete("u", std::move(u), 2);
    out.add_discrete("y", std::move(y), 2);
    out.add_discrete("z", std::move(z), 2);
    out.add_continuous("x1", std::move(x1));
    out.add_continuous("x2", std::move(x2));
    return out;
}

}  // namespace detail

inline dataset gen_gauss_backdoor(const env_spec& spec) {
    return detail::gen_gauss(spec, {0.85, 0.95, 0.05, 1.0, 0.0});
}

inline dataset gen_gauss_frontdoor(const env_spec& spec) {
    return detail::gen_gauss(spec, {0.5, 0.98, 0.02, 0.90, 0.10});
}

inline causal_graph gauss_backdoor_graph() {
    causal_graph g;
    g.add_vertex({"u", var_kind::discrete, 2, 1, false});
    g.add_vertex({"y", var_kind::discrete, 2, 1, false});
    g.add_vertex({"z", var_kind::discrete, 2, 1, false});
    g.add_vertex({"x1", var_kind::continuous, 0, 1, false});
    g.add_vertex({"x2", var_kind::continuous, 0, 1, false});
    g.add_edge("u", "y");
    g.add_edge("y", "z");
    g.add_edge("z", "x1");
    g.add_edge("u", "x2");
    g.set_roles({"y", {"x1", "x2"}, {"u"}, ""});
    g.finalize();
    return g;
}

inline causal_graph gauss_frontdoor_graph() {
    causal_graph g;
    g.add_vertex({"u", var_kind::discrete, 2, 1, true});
    g.add_vertex({"y", var_kind::discrete, 2, 1, false});
    g.add_vertex({"z", var_kind::discrete, 2, 1, false});
    g.add_vertex({"x1", var_kind::continuous, 0, 1, false});
    g.add_vertex({"x2", var_kind::continuous, 0, 1, false});
    g.add_edge("u", "y");
    g.add_edge("y", "z");
    g.add_edge("z", "x1");
    g.add_edge("u", "x2");
    g.set_roles({"y", {"x1", "x2"}, {}, "z"});
    g.finalize();
    return g;
}

// ---- IDX image files ----

struct mnist_data {
    std::vector<std::array<std::uint8_t, 784>> images;
    std::vector<int> digits;  // 2 or 6 after filtering
    size_t size() const { return images.size(); }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw data_error("truncated IDX file '" + path + "'");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

// Big-endian IDX readers (magic 2051 for images, 2049 for labels); keeps only
// digits 2 and 6, the two classes the image experiments use.
inline mnist_data load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw data_error("cannot open IDX image file '" + images_path + "'");
    std::uint32_t magic = detail::read_be32(img, images_path);
    if (magic != 2051)
        throw data_error("bad magic in '" + images_path + "': got " + std::to_string(magic) +
                         ", expected 2051");
    std::uint32_t count = detail::read_be32(img, images_path);
    std::uint32_t rows = detail::read_be32(img, images_path);
    std::uint32_t cols = detail::read_be32(img, images_path);
    if (rows != 28 || cols != 28)
        throw data_error("'" + images_path + "' holds " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " images, expected 28x28");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw data_error("cannot open IDX label file '" + labels_path + "'");
    std::uint32_t lmagic = detail::read_be32(lab, labels_path);
    if (lmagic != 2049)
        throw data_error("bad magic in '" + labels_path + "': got " + std::to_string(lmagic) +
                         ", expected 2049");
    std::uint32_t lcount = detail::read_be32(lab, labels_path);
    if (lcount != count)
        throw data_error("count mismatch: " + std::to_string(count) + " images vs " +
                         std::to_string(lcount) + " labels");

    mnist_data out;
    std::array<std::uint8_t, 784> buf;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), 784))
            throw data_error("truncated IDX file '" + images_path + "'");
        char label;
        if (!lab.get(label)) throw data_error("truncated IDX file '" + labels_path + "'");
        int digit = static_cast<unsigned char>(label);
        if (digit == 2 || digit == 6) {
            out.images.push_back(buf);
            out.digits.push_back(digit);
        }
    }
    return out;
}

inline void save_idx(const mnist_data& data, const std::string& images_path,
                     const std::string& labels_path) {
    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    if (!img) throw data_error("cannot write '" + images_path + "'");
    detail::write_be32(img, 2051);
    detail::write_be32(img, static_cast<std::uint32_t>(data.size()));
    detail::write_be32(img, 28);
    detail::write_be32(img, 28);
    for (const auto& im : data.images)
        img.write(reinterpret_cast<const char*>(im.data()), 784);

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!lab) throw data_error("cannot write '" + labels_path + "'");
    detail::write_be32(lab, 2049);
    detail::write_be32(lab, static_cast<std::uint32_t>(data.size()));
    for (int d : data.digits) lab.put(static_cast<char>(d));
}

// Disjoint shuffled thirds of the image pool, one per environment, so the
// train and test samples never share an image.
inline std::array<mnist_data, 3> partition_pool(const mnist_data& pool, std::uint64_t seed) {
    std::vector<size_t> order(pool.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng gen(derive_seed(seed, 0x706f6f6cULL));
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[gen.below(i)]);

    std::array<mnist_data, 3> parts;
    size_t base = pool.size() / 3, rem = pool.size() % 3;
    size_t cursor = 0;
    for (size_t p = 0; p < 3; ++p) {
        size_t take = base + (p < rem ? 1 : 0);
        for (size_t i = 0; i < take; ++i, ++cursor) {
            parts[p].images.push_back(pool.images[order[cursor]]);
            parts[p].digits.push_back(pool.digits[order[cursor]]);
        }
    }
    return parts;
}

namespace detail {

// Per-digit draw-without-replacement queues over a pool.
class image_well {
public:
    image_well(const mnist_data& pool, rng& gen) : pool_(&pool) {
        std::vector<size_t> two, six;
        for (size_t i = 0; i < pool.size(); ++i)
            (pool.digits[i] == 2 ? two : six).push_back(i);
        shuffle(two, gen);
        shuffle(six, gen);
        queues_[0].assign(two.begin(), two.end());
        queues_[1].assign(six.begin(), six.end());
    }

    const std::array<std::uint8_t, 784>& take(int digit) {
        auto& q = queues_[digit == 2 ? 0 : 1];
        if (q.empty())
            throw data_error("image pool exhausted for digit " + std::to_string(digit) +
                             "; reduce n or supply more images");
        size_t idx = q.front();
        q.pop_front();
        return pool_->images[idx];
    }

private:
    static void shuffle(std::vector<size_t>& v, rng& gen) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[gen.below(i)]);
    }
    const mnist_data* pool_;
    std::deque<size_t> queues_[2];
};

}  // namespace detail

// Brightness-confounded digit classification, measured confounder:
// y ~ Bern12(1/2); u|y ~ Bern12(q_e(y)); image drawn without replacement for
// digit 2 (y=1) / digit 6 (y=2); pixels shifted x -> min(x + b(u), 255) with
// b = 100 for u=1, 0 otherwise.
inline dataset gen_mnist_backdoor(const mnist_data& pool, const env_spec& spec) {
    check_env(spec);
    rng gen(derive_seed(spec.seed, 0x6d6e6273ULL));
    detail::image_well well(pool, gen);
    size_t n = spec.n;
    bool confounded = spec.environment != 3;

    std::vector<int> env(n, spec.environment), u(n), y(n);
    std::vector<double> x;
    x.reserve(n * 784);
    for (size_t i = 0; i < n; ++i) {
        y[i] = bern12{0.5}.draw(gen);
        double q = confounded ? (y[i] == 1 ? 0.95 : 0.05) : 0.5;
        u[i] = bern12{q}.draw(gen);
        const auto& img = well.take(y[i] == 1 ? 2 : 6);
        double b = u[i] == 1 ? 100.0 : 0.0;
        for (std::uint8_t px : img) x.push_back(std::min(static_cast<double>(px) + b, 255.0));
    }
    dataset out;
    out.add_discrete("env", std::move(env), 3);
    out.add_discrete("u", std::move(u), 2);
    out.add_discrete("y", std::move(y), 2);
    out.add_continuous("x", std::move(x), 784);
    return out;
}

// Background brightness in [0, 100] for a continuous confounder value.
inline double frontdoor_brightness(double u) {
    return 100.0 * (std::atan(u / 5.0) / 3.141592653589793 + 0.5);
}

// Brightness-confounded digits with the confounder unmeasured:
// u ~ N(0,5); y|u ~ Bern12(q^u / (q^u + (1-q)^u)); z|y ~ Bern12(r(y));
// image drawn by z; pixels shifted by v(u) with saturation.
inline dataset gen_mnist_frontdoor(const mnist_data& pool, const env_spec& spec) {
    check_env(spec);
    rng gen(derive_seed(spec.seed, 0x6d6e6673ULL));
    detail::image_well well(pool, gen);
    size_t n = spec.n;
    double q = spec.environment != 3 ? 0.8 : 0.5;
    double log_odds = std::log((1.0 - q) / q);

    std::vector<int> env(n, spec.environment), y(n), z(n);
    std::vector<double> u(n);
    std::vector<double> x;
    x.reserve(n * 784);
    for (size_t i = 0; i < n; ++i) {
        u[i] = gen.normal(0.0, 5.0);
        double qe = 1.0 / (1.0 + std::exp(u[i] * log_odds));
        y[i] = bern12{qe}.draw(gen);
        z[i] = bern12{y[i] == 1 ? 0.95 : 0.05}.draw(gen);
        const auto& img = well.take(z[i] == 1 ? 2 : 6);
        double v = frontdoor_brightness(u[i]);
        for (std::uint8_t px : img) x.push_back(std::min(static_cast<double>(px) + v, 255.0));
    }
    dataset out;
    out.add_discrete("env", std::move(env), 3);
    out.add_continuous("u", std::move(u));
    out.add_discrete("y", std::move(y), 2);
    out.add_discrete("z", std::move(z), 2);
    out.add_continuous("x", std::move(x), 784);
    return out;
}

inline causal_graph mnist_backdoor_graph() {
    causal_graph g;
    g.add_vertex({"u", var_kind::discrete, 2, 1, false});
    g.add_vertex({"y", var_kind::discrete, 2, 1, false});
    g.add_vertex({"x", var_kind::continuous, 0, 784, false});
    g.add_edge("u", "y");
    g.add_edge("u", "x");
    g.add_edge("y", "x");
    g.set_roles({"y", {"x"}, {"u"}, ""});
    g.finalize();
    return g;
}

inline causal_graph mnist_frontdoor_graph() {
    causal_graph g;
    g.add_vertex({"u", var_kind::continuous, 0, 1, true});
    g.add_vertex({"y", var_kind::discrete, 2, 1, false});
    g.add_vertex({"z", var_kind::discrete, 2, 1, false});
    g.add_vertex({"x", var_kind::continuous, 0, 784, false});
    g.add_edge("u", "y");
    g.add_edge("u", "x");
    g.add_edge("y", "z");
    g.add_edge("z", "x");
    g.set_roles({"y", {"x"}, {}, "z"});
    g.finalize();
    return g;
}

// ---- Parkinson's-style confound resampling ----
//
// Resamples a feature table (y, dataset_id, features...) with replacement so
// the dataset-id mix, conditioned on the class, follows the environment's
// proportions, with classes balanced. Environments 1 and 2 are confounded
// (5/5/90 vs 90/5/5), environment 3 uses 47.5/5/47.5 independent of y.
inline dataset confound_resample_parkinsons(const dataset& features, const env_spec& spec) {
    check_env(spec);
    if (!features.has("y") || !features.has("dataset_id"))
        throw data_error("feature table must have 'y' and 'dataset_id' columns");
    const auto& y_col = features.discrete_column("y");
    const auto& id_col = features.discrete_column("dataset_id");
    for (int v : id_col)
        if (v < 1 || v > 3) throw data_error("dataset_id values must lie in {1,2,3}");

    std::map<std::pair<int, int>, std::vector<size_t>> strata;
    for (size_t i = 0; i < features.n_rows(); ++i)
        strata[{y_col[i], id_col[i]}].push_back(i);

    auto props_for = [&](int y) -> std::array<double, 3> {
        if (spec.environment == 3) return {0.475, 0.05, 0.475};
        return y == 1 ? std::array<double, 3>{0.05, 0.05, 0.90}
                      : std::array<double, 3>{0.90, 0.05, 0.05};
    };

    rng gen(derive_seed(spec.seed, 0x70617264ULL));
    std::vector<size_t> picked;
    picked.reserve(spec.n);
    std::array<double, 2> half{0.5, 0.5};
    auto class_counts = grouped_counts(half, spec.n);
    for (int y = 1; y <= 2; ++y) {
        auto props = props_for(y);
        auto id_counts = grouped_counts(props, class_counts[static_cast<size_t>(y - 1)]);
        for (int id = 1; id <= 3; ++id) {
            size_t want = id_counts[static_cast<size_t>(id - 1)];
            if (want == 0) continue;
            auto it = strata.find({y, id});
            if (it == strata.end())
                throw data_error("missing stratum: no rows with y=" + std::to_string(y) +
                                 ", dataset_id=" + std::to_string(id));
            const auto& rows = it->second;
            for (size_t k = 0; k < want; ++k)
                picked.push_back(rows[gen.below(rows.size())]);
        }
    }

    dataset out;
    out.add_discrete("env", std::vector<int>(picked.size(), spec.environment), 3);
    for (const auto& name : features.names()) {
        const auto& vi = features.info(name);
        if (vi.kind == var_kind::discrete) {
            std::vector<int> vals;
            vals.reserve(picked.size());
            for (size_t i : picked) vals.push_back(features.dvalue(name, i));
            out.add_discrete(name, std::move(vals), vi.cardinality);
        } else {
            std::vector<double> vals;
            vals.reserve(picked.size() * static_cast<size_t>(vi.dim));
            for (size_t i : picked) {
                auto xs = features.cvalue(name, i);
                vals.insert(vals.end(), xs.begin(), xs.end());
            }
            out.add_continuous(name, std::move(vals), vi.dim);
        }
    }
    return out;
}

inline causal_graph parkinsons_graph() {
    causal_graph g;
    g.add_vertex({"dataset_id", var_kind::discrete, 3, 1, false});
    g.add_vertex({"y", var_kind::discrete, 2, 1, false});
    graph_roles roles;
    roles.target = "y";
    roles.adjust = {"dataset_id"};
    for (int i = 1; i <= 9; ++i) {
        std::string name = "x" + std::to_string(i);
        g.add_vertex({name, var_kind::continuous, 0, 1, false});
        roles.effect.push_back(name);
    }
    g.add_edge("dataset_id", "y");
    for (int i = 1; i <= 9; ++i) {
        std::string name = "x" + std::to_string(i);
        g.add_edge("dataset_id", name);
        g.add_edge("y", name);
    }
    g.set_roles(roles);
    g.finalize();
    return g;
}

// ---- synthetic stand-in digit pool ----
//
// Renders jittered stroke glyphs for digits 2 and 6 in the MNIST byte format.
// Intra-class variability (affine jitter, control-point noise, stroke width
// and intensity, pixel noise) keeps any single pixel a weak class predictor,
// which is what makes the brightness confound bite.
namespace detail {

struct pt {
    double x, y;
};

inline double seg_dist(pt p, pt a, pt b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double wx = p.x - a.x, wy = p.y - a.y;
    double vv = vx * vx + vy * vy;
    double t = vv > 0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
    double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

inline std::vector<pt> arc(double cx, double cy, double rx, double ry, double a0, double a1,
                           int segments = 12) {
    std::vector<pt> out;
    for (int k = 0; k <= segments; ++k) {
        double a = a0 + (a1 - a0) * static_cast<double>(k) / static_cast<double>(segments);
        out.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return out;
}

// Handwriting-style variants per digit keep any one pixel (and any one local
// patch) a weak class predictor while the overall shape stays learnable.
inline std::vector<std::vector<pt>> glyph_strokes(int digit, int style) {
    constexpr double pi = 3.141592653589793;
    if (digit == 2) {
        switch (style) {
            case 0:  // round top, sweeping diagonal, flat base
                return {{{7.0, 9.0},
                         {9.0, 6.0},
                         {13.5, 4.5},
                         {18.0, 5.5},
                         {20.5, 8.5},
                         {19.5, 12.0},
                         {15.5, 15.5},
                         {11.0, 18.5},
                         {7.5, 21.5},
                         {21.0, 21.5}}};
            case 1: {  // angular Z-like two
                return {{{6.5, 7.5},
                         {12.0, 4.8},
                         {19.5, 6.0},
                         {20.0, 10.0},
                         {12.5, 15.0},
                         {6.8, 21.0},
                         {14.0, 20.3},
                         {21.5, 21.0}}};
            }
            case 2: {  // small-loop top with curled base
                auto top = arc(14.0, 8.2, 6.2, 4.2, -pi, 0.25 * pi, 10);
                std::vector<pt> tail{{17.5, 11.5}, {12.5, 16.0}, {8.0, 20.8},
                                     {13.0, 19.6}, {18.0, 20.6}, {21.0, 22.0}};
                top.insert(top.end(), tail.begin(), tail.end());
                return {top};
            }
            case 3: {  // wide flat-top two hugging the bottom-left
                return {{{6.0, 10.5},
                         {8.5, 6.8},
                         {15.0, 5.8},
                         {21.5, 7.2},
                         {21.0, 11.5},
                         {14.0, 14.2},
                         {8.0, 17.0},
                         {6.2, 22.3},
                         {12.5, 21.2},
                         {19.0, 21.6},
                         {22.0, 22.5}}};
            }
            case 4: {  // tall narrow two with a steep diagonal
                return {{{9.0, 8.0},
                         {11.5, 4.5},
                         {16.0, 4.2},
                         {18.5, 7.5},
                         {17.5, 11.0},
                         {14.5, 15.5},
                         {11.0, 19.5},
                         {9.5, 23.0},
                         {15.0, 22.2},
                         {19.5, 22.8}}};
            }
            default: {  // open-loop two with a long swooping base
                auto top = arc(13.0, 9.0, 5.2, 4.6, -0.85 * pi, 0.15 * pi, 9);
                std::vector<pt> tail{{16.8, 12.5}, {11.5, 16.5}, {6.5, 20.5},
                                     {10.0, 21.8}, {16.0, 21.0}, {21.5, 21.8}};
                top.insert(top.end(), tail.begin(), tail.end());
                return {top};
            }
        }
    }
    switch (style) {
        case 0: {  // stem sweeping down-left into a closed bowl
            std::vector<pt> stem{{18.5, 4.0}, {14.5, 6.5}, {11.0, 10.0}, {9.0, 14.0}, {8.6, 17.5}};
            auto bowl = arc(13.6, 18.0, 4.9, 4.4, 0.0, 2.0 * pi, 14);
            return {stem, bowl};
        }
        case 1: {  // straight slash stem, big round bowl
            std::vector<pt> stem{{19.5, 3.5}, {15.0, 8.5}, {11.0, 13.5}, {9.4, 16.5}};
            auto bowl = arc(14.2, 18.6, 5.4, 4.1, 0.0, 2.0 * pi, 14);
            return {stem, bowl};
        }
        case 2: {  // tall narrow six, smaller low bowl
            std::vector<pt> stem{{16.5, 3.2}, {13.0, 7.0}, {10.3, 12.0}, {9.2, 17.0}, {9.6, 20.0}};
            auto bowl = arc(13.0, 19.3, 3.9, 3.6, 0.0, 2.0 * pi, 12);
            return {stem, bowl};
        }
        case 3: {  // hooked six, wide oval bowl shifted right
            std::vector<pt> stem{{20.0, 5.0}, {16.0, 6.0}, {12.2, 9.2}, {10.0, 13.5}, {10.2, 16.8}};
            auto bowl = arc(15.0, 18.8, 5.6, 3.8, 0.0, 2.0 * pi, 14);
            return {stem, bowl};
        }
        case 4: {  // stub stem over a large round bowl
            std::vector<pt> stem{{17.0, 5.5}, {13.5, 8.0}, {11.2, 11.5}};
            auto bowl = arc(13.8, 17.2, 5.8, 5.2, 0.0, 2.0 * pi, 16);
            return {stem, bowl};
        }
        default: {  // italic six, bowl tucked bottom-left
            std::vector<pt> stem{{21.0, 4.2}, {17.0, 7.2}, {13.2, 11.0}, {11.0, 15.0}};
            auto bowl = arc(11.8, 19.0, 4.4, 3.9, 0.0, 2.0 * pi, 13);
            return {stem, bowl};
        }
    }
}

}  // namespace detail

inline std::array<std::uint8_t, 784> render_digit(int digit, rng& gen) {
    auto strokes = detail::glyph_strokes(digit, static_cast<int>(gen.below(5)));

    // jitter control points, then apply a random affine map about the center
    double angle = (gen.uniform01() * 2.0 - 1.0) * 0.26;
    double sx = 0.82 + gen.uniform01() * 0.36;
    double sy = 0.82 + gen.uniform01() * 0.36;
    double shear = (gen.uniform01() * 2.0 - 1.0) * 0.18;
    double tx = (gen.uniform01() * 2.0 - 1.0) * 2.6;
    double ty = (gen.uniform01() * 2.0 - 1.0) * 2.6;
    double ca = std::cos(angle), sa = std::sin(angle);
    auto warp = [&](detail::pt p) {
        p.x += gen.normal() * 0.7;
        p.y += gen.normal() * 0.7;
        double cx = (p.x - 13.5) * sx, cy = (p.y - 13.5) * sy;
        cx += shear * cy;
        double rx = ca * cx - sa * cy, ry = sa * cx + ca * cy;
        return detail::pt{rx + 13.5 + tx, ry + 13.5 + ty};
    };
    for (auto& stroke : strokes)
        for (auto& p : stroke) p = warp(p);

    double half_width = 0.95 + gen.uniform01() * 0.75;
    double intensity = 185.0 + gen.uniform01() * 70.0;

    std::array<std::uint8_t, 784> out{};
    for (int r = 0; r < 28; ++r) {
        for (int c = 0; c < 28; ++c) {
            detail::pt p{static_cast<double>(c), static_cast<double>(r)};
            double d = 1e9;
            for (const auto& stroke : strokes)
                for (size_t s = 0; s + 1 < stroke.size(); ++s)
                    d = std::min(d, detail::seg_dist(p, stroke[s], stroke[s + 1]));
            double cover = std::clamp((half_width + 0.5 - d) * 2.2, 0.0, 1.0);
            double v = intensity * cover + gen.normal() * 5.0;
            out[static_cast<size_t>(r * 28 + c)] =
                static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    return out;
}

// A labelled pool of synthetic 2s and 6s, IDX-compatible via save_idx. Used
// where the real image files are not available.
inline mnist_data make_synthetic_digit_pool(size_t per_class, std::uint64_t seed) {
    mnist_data out;
    rng gen(derive_seed(seed, 0x676c796668ULL));
    for (size_t i = 0; i < per_class; ++i) {
        out.images.push_back(render_digit(2, gen));
        out.digits.push_back(2);
        out.images.push_back(render_digit(6, gen));
        out.digits.push_back(6);
    }
    return out;
}

}  // namespace causalboot
