#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "causalboot/synthdata.hpp"
#include "causalboot/weights.hpp"
#include "oracles.hpp"

using namespace causalboot;
using Catch::Approx;

namespace {

dataset backdoor_toy() {
    dataset d;
    d.add_discrete("y", {1, 1, 1, 2, 2, 2});
    d.add_discrete("u", {1, 1, 2, 1, 2, 2});
    d.add_continuous("x", {1.0, 3.0, 2.0, 0.0, 5.0, 1.0});
    return d;
}

dataset frontdoor_toy() {
    dataset d;
    d.add_discrete("y", {1, 1, 2, 2});
    d.add_discrete("z", {1, 1, 1, 2});
    d.add_continuous("x", {1.0, 2.0, 3.0, 4.0});
    return d;
}

}  // namespace

TEST_CASE("back-door weights on the counting toy") {
    auto d = backdoor_toy();
    auto w1 = backdoor_weights(d, {"u"}, "y", cell(1));
    std::vector<double> expected1{0.25, 0.25, 0.5, 0.0, 0.0, 0.0};
    for (size_t i = 0; i < 6; ++i) CHECK(w1.values[i] == Approx(expected1[i]).margin(1e-12));

    auto w2 = backdoor_weights(d, {"u"}, "y", cell(2));
    std::vector<double> expected2{0.0, 0.0, 0.0, 0.5, 0.25, 0.25};
    for (size_t i = 0; i < 6; ++i) CHECK(w2.values[i] == Approx(expected2[i]).margin(1e-12));
}

TEST_CASE("back-door weights reduce to within-class uniform when independent") {
    dataset d;
    d.add_discrete("y", {1, 1, 2, 2, 1, 1, 2, 2});
    d.add_discrete("u", {1, 2, 1, 2, 1, 2, 1, 2});
    auto w = backdoor_weights(d, {"u"}, "y", cell(1));
    double py = 0.5;
    for (size_t i = 0; i < 8; ++i) {
        double expected = d.dvalue("y", i) == 1 ? 1.0 / (8.0 * py) : 0.0;
        CHECK(w.values[i] == Approx(expected).margin(1e-12));
    }
}

TEST_CASE("front-door weights on the counting toy") {
    auto d = frontdoor_toy();
    auto w = frontdoor_weights(d, "z", "y", cell(1));
    std::vector<double> expected{0.25, 0.25, 0.5, 0.0};
    for (size_t i = 0; i < 4; ++i) CHECK(w.values[i] == Approx(expected[i]).margin(1e-12));
}

TEST_CASE("front-door weights are uniform when the mediator ignores the target") {
    dataset d;
    d.add_discrete("y", {1, 1, 2, 2, 1, 1, 2, 2});
    d.add_discrete("z", {1, 2, 1, 2, 1, 2, 1, 2});
    for (int yv = 1; yv <= 2; ++yv) {
        auto w = frontdoor_weights(d, "z", "y", cell(yv));
        for (double v : w.values) CHECK(v == Approx(1.0 / 8.0).margin(1e-12));
    }
}

TEST_CASE("weight sums hit one on covered discrete data") {
    rng gen(991);
    for (int trial = 0; trial < 50; ++trial) {
        int ky = 2 + static_cast<int>(gen.below(3));
        int ks = 2 + static_cast<int>(gen.below(3));
        auto d = oracles::random_discrete_dataset({{"y", ky}, {"s", ks}, {"x", 2}}, {"y", "s"},
                                                  30 + gen.below(21), gen);
        for (int yv : d.observed_support("y")) {
            auto wb = backdoor_weights(d, {"s"}, "y", cell(yv));
            CHECK(wb.sum() == Approx(1.0).margin(1e-9));
        }
        for (int yv : d.observed_support("y")) {
            auto wf = frontdoor_weights(d, "s", "y", cell(yv));
            CHECK(wf.sum() == Approx(1.0).margin(1e-9));
        }
    }
}

TEST_CASE("mediator-covariate weights") {
    SECTION("collapse to uniform when z is independent of y given w") {
        dataset d;
        std::vector<int> w, y, z;
        // z depends only on w; every (w, y) pair appears
        for (int i = 0; i < 16; ++i) {
            int wv = (i / 8) + 1, yv = ((i / 4) % 2) + 1, zv = wv;
            w.push_back(wv);
            y.push_back(yv);
            z.push_back(zv);
        }
        d.add_discrete("w", w);
        d.add_discrete("y", y);
        d.add_discrete("z", z);
        d.add_continuous("x", std::vector<double>(16, 1.0));
        auto wt = tikka_weights(d, "w", "z", "y", cell(1));
        for (double v : wt.values) CHECK(v == Approx(1.0 / 16.0).margin(1e-12));
    }
    SECTION("single covariate stratum reduces to front-door") {
        auto d = frontdoor_toy();
        dataset d2;
        d2.add_discrete("y", d.discrete_column("y"));
        d2.add_discrete("z", d.discrete_column("z"));
        d2.add_discrete("w", {1, 1, 1, 1});
        auto wt = tikka_weights(d2, "w", "z", "y", cell(1));
        auto wf = frontdoor_weights(d, "z", "y", cell(1));
        for (size_t i = 0; i < 4; ++i) CHECK(wt.values[i] == Approx(wf.values[i]).margin(1e-12));
    }
    SECTION("hand computation on a three-variable table") {
        dataset d;
        d.add_discrete("w", {1, 1, 1, 1, 2, 2, 2, 2});
        d.add_discrete("y", {1, 1, 2, 2, 1, 1, 2, 2});
        d.add_discrete("z", {1, 2, 1, 2, 1, 1, 2, 2});
        // intervention y=1: w_n = p(z_n | w_n, 1) / (8 p(z_n | w_n, y_n))
        auto wt = tikka_weights(d, "w", "z", "y", cell(1));
        // strata w=1: p(z|w=1,y=1) = (1/2, 1/2); w=2: p(z=1|w=2,y=1)=1
        std::vector<double> expected{
            0.5 / (8 * 0.5), 0.5 / (8 * 0.5), 0.5 / (8 * 0.5), 0.5 / (8 * 0.5),
            1.0 / (8 * 1.0), 1.0 / (8 * 1.0), 0.0, 0.0};
        for (size_t i = 0; i < 8; ++i) CHECK(wt.values[i] == Approx(expected[i]).margin(1e-12));
    }
}

TEST_CASE("general engine reproduces the closed forms") {
    rng gen(5150);
    for (int trial = 0; trial < 30; ++trial) {
        auto d = oracles::random_discrete_dataset({{"y", 2}, {"s", 3}, {"x", 2}}, {"y", "s"},
                                                  24 + gen.below(27), gen);
        auto plan = backdoor_plan({"x"}, "y", {"s"});
        for (int yv : d.observed_support("y")) {
            auto general = general_weights(d, plan, cell(yv));
            auto closed = backdoor_weights(d, {"s"}, "y", cell(yv));
            REQUIRE(general.values.size() == closed.values.size());
            for (size_t i = 0; i < general.values.size(); ++i)
                CHECK(general.values[i] == Approx(closed.values[i]).margin(1e-12));
        }

        auto dfd = oracles::random_discrete_dataset({{"y", 2}, {"z", 3}, {"x", 2}}, {"y", "z"},
                                                    24 + gen.below(27), gen);
        auto fplan = frontdoor_plan({"x"}, "y", "z");
        for (int yv : dfd.observed_support("y")) {
            auto general = general_weights(dfd, fplan, cell(yv));
            auto closed = frontdoor_weights(dfd, "z", "y", cell(yv));
            for (size_t i = 0; i < general.values.size(); ++i)
                CHECK(general.values[i] == Approx(closed.values[i]).margin(1e-12));
        }

        auto dtk = oracles::random_discrete_dataset({{"w", 2}, {"y", 2}, {"z", 2}, {"x", 2}},
                                                    {"w", "y", "z"}, 32 + gen.below(19), gen);
        auto tplan = tikka_plan({"x"}, "y", "w", "z");
        for (int yv : dtk.observed_support("y")) {
            auto general = general_weights(dtk, tplan, cell(yv));
            auto closed = tikka_weights(dtk, "w", "z", "y", cell(yv));
            for (size_t i = 0; i < general.values.size(); ++i)
                CHECK(general.values[i] == Approx(closed.values[i]).margin(1e-12));
        }
    }
}

TEST_CASE("plan without confounders reduces to a class-conditional bootstrap") {
    dataset d;
    d.add_discrete("y", {1, 1, 1, 2});
    d.add_continuous("x", {1.0, 2.0, 3.0, 4.0});
    weight_plan plan;
    plan.effect = {"x"};
    plan.target = "y";
    plan.denominator = {"y"};
    plan.target_in_parents = true;
    auto w = general_weights(d, plan, cell(1));
    // w_n = K[y_n - 1] / (N p(y=1)) = 1/(4 * 0.75) on class rows
    for (size_t i = 0; i < 3; ++i) CHECK(w.values[i] == Approx(1.0 / 3.0).margin(1e-12));
    CHECK(w.values[3] == 0.0);
}

TEST_CASE("weights are finite, nonnegative, and not all zero") {
    auto d = backdoor_toy();
    auto w = backdoor_weights(d, {"u"}, "y", cell(1));
    for (double v : w.values) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
    CHECK(w.sum() > 0.0);

    // discrete intervention value outside the observed support
    CHECK_THROWS_AS(backdoor_weights(d, {"u"}, "y", cell(9)), data_error);
    CHECK_THROWS_AS(frontdoor_weights(frontdoor_toy(), "z", "y", cell(9)), data_error);
}

TEST_CASE("continuous targets take gaussian intervention kernels") {
    rng gen(31);
    dataset d;
    std::vector<double> yv, sv, xv;
    for (int i = 0; i < 40; ++i) {
        double s = gen.normal();
        yv.push_back(s + gen.normal());
        sv.push_back(s);
        xv.push_back(gen.normal());
    }
    d.add_continuous("y", yv);
    d.add_continuous("s", sv);
    d.add_continuous("x", xv);
    auto w = backdoor_weights(d, {"s"}, "y", cell(0.25));
    CHECK(w.values.size() == 40);
    CHECK(w.sum() > 0.0);
    // a value never observed still gets kernel mass for continuous targets
    double ymax = *std::max_element(d.continuous_column("y").begin(),
                                    d.continuous_column("y").end());
    auto w2 = backdoor_weights(d, {"s"}, "y", cell(ymax + 0.5));
    CHECK(w2.sum() > 0.0);
    for (double v : w2.values) CHECK(std::isfinite(v));
    // far enough out, every kernel underflows and the failure is explicit
    CHECK_THROWS_AS(backdoor_weights(d, {"s"}, "y", cell(ymax + 1e6)), data_error);
}

TEST_CASE("plan validation rejects malformed factorizations") {
    auto d = backdoor_toy();

    weight_plan p1 = backdoor_plan({"x"}, "y", {"u"});
    p1.secondaries[0].name = "y";  // secondary colliding with the target
    CHECK_THROWS_AS(general_weights(d, p1, cell(1)), config_error);

    weight_plan p2 = backdoor_plan({"x"}, "y", {"u"});
    p2.denominator = {"u"};  // target missing although target_in_parents
    CHECK_THROWS_AS(general_weights(d, p2, cell(1)), config_error);

    weight_plan p3 = backdoor_plan({"x"}, "y", {"u"});
    p3.secondaries[0].given = {"ghost"};  // conditioning on an undeclared name
    CHECK_THROWS_AS(general_weights(d, p3, cell(1)), config_error);

    weight_plan p4 = backdoor_plan({"x"}, "y", {"u"});
    p4.effect = {"missing"};
    CHECK_THROWS_AS(general_weights(d, p4, cell(1)), data_error);
}

TEST_CASE("plan files parse to working plans") {
    std::istringstream in(R"(# mediator plan with a marginalized target copy
effect x
target y
secondary w
secondary yprime from y
secondary z
factor w |
factor yprime | w
factor z | w y
denominator w yprime z
)");
    auto plan = parse_plan(in, "tikka.plan");
    CHECK(plan.effect == std::vector<std::string>{"x"});
    CHECK(plan.target == "y");
    CHECK_FALSE(plan.target_in_parents);
    REQUIRE(plan.secondaries.size() == 3);
    CHECK(plan.secondaries[1].column == "y");
    CHECK(plan.secondaries[2].given == std::vector<std::string>{"w", "y"});

    rng gen(8);
    auto d = oracles::random_discrete_dataset({{"w", 2}, {"y", 2}, {"z", 2}, {"x", 2}},
                                              {"w", "y", "z"}, 40, gen);
    auto from_file = general_weights(d, plan, cell(1));
    auto closed = tikka_weights(d, "w", "z", "y", cell(1));
    for (size_t i = 0; i < from_file.values.size(); ++i)
        CHECK(from_file.values[i] == Approx(closed.values[i]).margin(1e-12));

    std::istringstream bad("factor z | y\n");
    CHECK_THROWS_AS(parse_plan(bad, "bad.plan"), config_error);
    std::istringstream bad2("secondary z\ndenominator z\n");
    CHECK_THROWS_AS(parse_plan(bad2, "bad2.plan"), config_error);
}

TEST_CASE("truncated plans come straight off the graph") {
    auto g = gauss_backdoor_graph();
    auto plan = truncated_plan(g);
    CHECK(plan.target == "y");
    CHECK(plan.effect == std::vector<std::string>{"x1", "x2"});
    CHECK_FALSE(plan.target_in_parents);  // y reaches the features only via z
    REQUIRE(plan.secondaries.size() == 2);

    // w_n = p(u_n) p(z_n | y) / (N p(u_n, z_n)), checked against count ratios
    rng gen(63);
    auto d = oracles::random_discrete_dataset({{"u", 2}, {"y", 2}, {"z", 2}}, {"u", "y", "z"}, 40,
                                              gen);
    d.add_continuous("x1", std::vector<double>(d.n_rows(), 0.0));
    d.add_continuous("x2", std::vector<double>(d.n_rows(), 0.0));
    auto w = general_weights(d, plan, cell(1));
    double n = static_cast<double>(d.n_rows());
    for (size_t i = 0; i < d.n_rows(); ++i) {
        int uv = d.dvalue("u", i), zv = d.dvalue("z", i);
        double expected = oracles::pr(d, {"u"}, {uv}) *
                          oracles::cond_pr(d, {"z"}, {zv}, {"y"}, {1}) /
                          (n * oracles::pr(d, {"u", "z"}, {uv, zv}));
        CHECK(w.values[i] == Approx(expected).margin(1e-12));
    }

    // vertices that are not parents of the effect are rejected
    causal_graph bad;
    bad.add_vertex({"y", var_kind::discrete, 2, 1, false});
    bad.add_vertex({"s", var_kind::discrete, 2, 1, false});
    bad.add_vertex({"o", var_kind::discrete, 2, 1, false});
    bad.add_vertex({"x", var_kind::continuous, 0, 1, false});
    bad.add_edge("y", "x");
    bad.add_edge("s", "x");
    bad.add_edge("o", "s");
    bad.set_roles({"y", {"x"}, {}, ""});
    bad.finalize();
    CHECK_THROWS_AS(truncated_plan(bad), criteria_error);

    // latent vertices are rejected outright
    causal_graph lat = gauss_backdoor_graph();
    lat.mark_latent("u");
    CHECK_THROWS_AS(truncated_plan(lat), criteria_error);
}
