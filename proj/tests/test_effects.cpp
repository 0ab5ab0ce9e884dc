#include <catch2/catch_amalgamated.hpp>

#include "causalboot/effects.hpp"
#include "oracles.hpp"

using namespace causalboot;
using Catch::Approx;

namespace {

dataset effect_toy() {
    dataset d;
    d.add_discrete("y", {1, 1, 1, 2, 2, 2});
    d.add_discrete("u", {1, 1, 2, 1, 2, 2});
    d.add_continuous("x", {1.0, 3.0, 2.0, 0.0, 5.0, 1.0});
    return d;
}

const std::vector<std::string> kx{"x"};

}  // namespace

TEST_CASE("weighted response on the counting toy") {
    auto d = effect_toy();
    auto r1 = weighted_response(d, kx, backdoor_weights(d, {"u"}, "y", cell(1)));
    REQUIRE(r1.size() == 1);
    CHECK(r1[0] == Approx(2.0).margin(1e-12));
    auto r2 = weighted_response(d, kx, backdoor_weights(d, {"u"}, "y", cell(2)));
    CHECK(r2[0] == Approx(1.5).margin(1e-12));
}

TEST_CASE("uniform weights give the sample mean") {
    auto d = effect_toy();
    weight_vector w;
    w.values = std::vector<double>(6, 1.0);
    auto r = weighted_response(d, kx, w);
    CHECK(r[0] == Approx(2.0).margin(1e-12));  // mean of 1,3,2,0,5,1
}

TEST_CASE("weighted response is invariant to weight scale") {
    auto d = effect_toy();
    auto w = backdoor_weights(d, {"u"}, "y", cell(1));
    auto r = weighted_response(d, kx, w);
    for (double& v : w.values) v *= 123.456;
    auto scaled = weighted_response(d, kx, w);
    CHECK(scaled[0] == Approx(r[0]).epsilon(1e-12));

    w.values.assign(6, 0.0);
    CHECK_THROWS_AS(weighted_response(d, kx, w), data_error);
}

TEST_CASE("back-door treatment-effect contrast") {
    auto d = effect_toy();
    auto ate = ate_backdoor(d, {"u"}, "y", cell(1), cell(2), kx);
    REQUIRE(ate.size() == 1);
    CHECK(ate[0] == Approx(0.5).margin(1e-12));

    SECTION("equals the directly coded inverse-probability form") {
        rng gen(314);
        for (int trial = 0; trial < 20; ++trial) {
            auto rd = oracles::random_discrete_dataset({{"y", 2}, {"u", 3}}, {"y", "u"},
                                                       30 + gen.below(20), gen);
            std::vector<double> xs;
            for (size_t i = 0; i < rd.n_rows(); ++i) xs.push_back(gen.normal());
            rd.add_continuous("x", xs);

            auto ours = ate_backdoor(rd, {"u"}, "y", cell(2), cell(1), kx);
            double n = static_cast<double>(rd.n_rows());
            double direct = 0.0;
            for (size_t i = 0; i < rd.n_rows(); ++i) {
                int yv = rd.dvalue("y", i), uv = rd.dvalue("u", i);
                double x = rd.cvalue("x", i)[0];
                if (yv == 2) direct += x / oracles::cond_pr(rd, {"y"}, {2}, {"u"}, {uv}) / n;
                if (yv == 1) direct -= x / oracles::cond_pr(rd, {"y"}, {1}, {"u"}, {uv}) / n;
            }
            CHECK(ours[0] == Approx(direct).margin(1e-12));
        }
    }

    SECTION("independence collapses to stratified class means") {
        dataset d2;
        d2.add_discrete("y", {1, 1, 2, 2, 1, 1, 2, 2});
        d2.add_discrete("u", {1, 2, 1, 2, 1, 2, 1, 2});
        d2.add_continuous("x", {1, 2, 3, 4, 5, 6, 7, 8});
        auto ate2 = ate_backdoor(d2, {"u"}, "y", cell(2), cell(1), kx);
        double mean2 = (3 + 4 + 7 + 8) / 4.0, mean1 = (1 + 2 + 5 + 6) / 4.0;
        CHECK(ate2[0] == Approx(mean2 - mean1).margin(1e-12));
    }

    SECTION("constant responses contrast to zero") {
        dataset d3;
        d3.add_discrete("y", {1, 1, 2, 2});
        d3.add_discrete("u", {1, 2, 1, 2});
        d3.add_continuous("x", {5.0, 5.0, 5.0, 5.0});
        auto ate3 = ate_backdoor(d3, {"u"}, "y", cell(2), cell(1), kx);
        CHECK(ate3[0] == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("front-door treatment-effect contrast") {
    SECTION("independent mediator gives zero") {
        dataset d;
        d.add_discrete("y", {1, 1, 2, 2, 1, 1, 2, 2});
        d.add_discrete("z", {1, 2, 1, 2, 1, 2, 1, 2});
        d.add_continuous("x", {1, 2, 3, 4, 5, 6, 7, 8});
        auto ate = ate_frontdoor(d, "z", "y", cell(2), cell(1), kx);
        CHECK(ate[0] == Approx(0.0).margin(1e-12));
    }
    SECTION("matches the exact finite-sum enumeration") {
        rng gen(2718);
        for (int trial = 0; trial < 10; ++trial) {
            auto d = oracles::random_discrete_dataset({{"y", 2}, {"z", 2}, {"x", 3}}, {"y", "z"},
                                                      60, gen);
            auto response = [&](int yv) {
                auto dist = oracles::enum_frontdoor(d, "x", "y", yv, "z");
                double total_mass = 0.0, mean = 0.0;
                for (auto [xv, p] : dist) {
                    mean += p * xv;
                    total_mass += p;
                }
                return mean / total_mass;
            };
            weight_vector w2 = frontdoor_weights(d, "z", "y", cell(2));
            weight_vector w1 = frontdoor_weights(d, "z", "y", cell(1));
            auto ours2 = weighted_response(d, kx, w2, true);
            auto ours1 = weighted_response(d, kx, w1, true);
            CHECK(ours2[0] - ours1[0] == Approx(response(2) - response(1)).margin(1e-9));
        }
    }
    SECTION("constant responses contrast to zero") {
        dataset d;
        d.add_discrete("y", {1, 1, 2, 2});
        d.add_discrete("z", {1, 2, 1, 2});
        d.add_continuous("x", {5.0, 5.0, 5.0, 5.0});
        auto ate = ate_frontdoor(d, "z", "y", cell(2), cell(1), kx);
        CHECK(ate[0] == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("weighted quantiles") {
    dataset d;
    d.add_continuous("x", {1.0, 2.0, 3.0});

    SECTION("uniform weights give the sample median") {
        weight_vector w;
        w.values = {1.0, 1.0, 1.0};
        auto q = weighted_quantile(d, kx, w, 0.5);
        CHECK(q[0] == 2.0);
    }
    SECTION("a point mass pins every quantile") {
        weight_vector w;
        w.values = {1.0, 0.0, 0.0};
        for (double qq : {0.1, 0.5, 0.9}) CHECK(weighted_quantile(d, kx, w, qq)[0] == 1.0);
    }
    SECTION("cumulative walk picks the first crossing") {
        weight_vector w;
        w.values = {0.25, 0.25, 0.5};
        CHECK(weighted_quantile(d, kx, w, 0.5)[0] == 2.0);
    }
    SECTION("nondecreasing in q") {
        weight_vector w;
        w.values = {0.2, 0.5, 0.3};
        double prev = -1e300;
        for (double qq = 0.05; qq < 1.0; qq += 0.05) {
            double cur = weighted_quantile(d, kx, w, qq)[0];
            CHECK(cur >= prev);
            prev = cur;
        }
    }
    SECTION("rejects out-of-range q and zero weights") {
        weight_vector w;
        w.values = {1.0, 1.0, 1.0};
        CHECK_THROWS_AS(weighted_quantile(d, kx, w, 0.0), config_error);
        CHECK_THROWS_AS(weighted_quantile(d, kx, w, 1.0), config_error);
        w.values = {0.0, 0.0, 0.0};
        CHECK_THROWS_AS(weighted_quantile(d, kx, w, 0.5), data_error);
    }
}

TEST_CASE("effect columns must be continuous unless explicitly allowed") {
    dataset d;
    d.add_discrete("y", {1, 2});
    d.add_discrete("k", {3, 4});
    weight_vector w;
    w.values = {1.0, 1.0};
    std::vector<std::string> cols{"k"};
    CHECK_THROWS_AS(weighted_response(d, cols, w), data_error);
    CHECK(weighted_response(d, cols, w, true)[0] == Approx(3.5));
}
