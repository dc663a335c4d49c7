#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "rslab/halanay.hpp"
#include "rslab/relaxation.hpp"

using namespace rslab;

namespace {

HalanayInstance reference_extremal(ExtremalStats* stats = nullptr) {
    std::vector<double> psi{1.5, 1.25, 1.0};
    std::vector<double> b(401, 0.3);
    return build_extremal(2.0, 1.0, FracParams{0.5, 1.0}, DelaySpec::constant(0.5),
                          TimeGrid::uniform(10.0, 400), psi, b, stats);
}

} // namespace

TEST_CASE("extremal instance satisfies the premise with near equality") {
    ExtremalStats stats;
    auto ex = reference_extremal(&stats);
    CHECK(stats.sweeps < 200);
    CHECK(stats.final_diff < 1e-10);
    CHECK(stats.max_contraction <= 1.0 / 2.0 + 0.05);

    auto rep = verify_premise(ex);
    CHECK(rep.pass);
    CHECK(rep.name == "halanay_premise");
    CHECK(rep.margin <= 1e-7);
    CHECK(rep.margin >= -rep.tolerance);
}

TEST_CASE("global bound dominates the extremal instance") {
    auto ex = reference_extremal();
    auto premise = verify_premise(ex);
    auto rep = bound_global(ex, premise);
    CHECK(rep.pass);
    // at t = 0 the convolution vanishes: mu/(mu-a) v0 + sup psi
    CHECK(rep.claimed.front() == doctest::Approx(2.0 * 1.0 + 1.5));

    SUBCASE("a >= mu has no factored bound") {
        HalanayInstance hot = ex;
        hot.a = 2.5;
        CHECK_THROWS_AS(bound_global(hot, verify_premise(hot)), std::domain_error);
        CHECK_THROWS_AS(bound_limsup(hot, 5.0), std::domain_error);
    }
    SUBCASE("unestablished premise short circuits") {
        auto skip = BoundReport::skip("halanay_premise", "not run");
        auto rep2 = bound_global(ex, skip);
        CHECK(rep2.skipped);
    }
}

TEST_CASE("premise verification flags an inflated node") {
    auto ex = reference_extremal();
    ex.v[200] *= 1.5;
    auto rep = verify_premise(ex);
    CHECK_FALSE(rep.pass);
    CHECK(rep.argmin() == 200);
}

TEST_CASE("zero forcing decays below the tail gate") {
    // nearly exponential kernel: alpha close to 1 with a small fractional load
    std::vector<double> psi{1.0, 1.0, 1.0, 1.0, 1.0};
    std::vector<double> b(1001, 0.0);
    ExtremalStats stats;
    auto ex = build_extremal(2.0, 0.5, FracParams{0.9, 0.1}, DelaySpec::constant(1.0),
                             TimeGrid::uniform(50.0, 1000), psi, b, &stats);
    CHECK(stats.max_contraction <= 0.25 + 0.05);

    auto rep = bound_limsup(ex, 25.0, 1e-3);
    CHECK(rep.pass);
    CHECK(rep.name == "halanay_tail_bound");
    // tail entries plus the decay gate
    CHECK(rep.claimed.size() == ex.grid.size() - 500 + 1);
    CHECK(rep.claimed.back() == 1e-3 * 1.0);
    CHECK(rep.measured.back() == ex.v.back());
    CHECK(ex.v.back() < 1e-4);
    CHECK(rep.note.find("slack") != std::string::npos);
}

TEST_CASE("tail bound covers persistent forcing") {
    std::vector<double> psi{0.5, 0.5, 0.75};
    std::vector<double> b(801, 0.4);
    auto ex = build_extremal(2.0, 1.0, FracParams{0.5, 1.0}, DelaySpec::constant(0.5),
                             TimeGrid::uniform(40.0, 800), psi, b, nullptr);
    auto rep = bound_limsup(ex, 20.0);
    CHECK(rep.pass);
    // no decay gate when b persists
    CHECK(rep.claimed.size() == ex.grid.size() - 400);

    SUBCASE("tail must leave room for the memory window") {
        CHECK_THROWS_AS(bound_limsup(ex, 1.0), std::invalid_argument);
    }
}

TEST_CASE("unbounded lag skips the memory certificate") {
    std::vector<double> psi{1.0};
    std::vector<double> b(501, 0.1);
    auto ex = build_extremal(2.0, 0.5, FracParams{0.5, 1.0}, DelaySpec::proportional(0.5, 0.0),
                             TimeGrid::uniform(20.0, 500), psi, b, nullptr);
    auto rep = bound_limsup(ex, 10.0);
    CHECK(rep.skipped);

    SUBCASE("vanishing proportional lag is admissible") {
        auto ex2 = build_extremal(2.0, 0.5, FracParams{0.5, 1.0},
                                  DelaySpec::proportional(1.0, 0.0),
                                  TimeGrid::uniform(20.0, 500), psi, b, nullptr);
        auto rep2 = bound_limsup(ex2, 10.0);
        CHECK_FALSE(rep2.skipped);
        CHECK(rep2.pass);
    }
    SUBCASE("a = 0 never needs the window") {
        HalanayInstance free = ex;
        free.a = 0.0;
        // v built for a = 0.5 still satisfies the weaker premise claim check
        auto rep3 = bound_limsup(free, 10.0);
        CHECK_FALSE(rep3.skipped);
    }
}

TEST_CASE("claims scale linearly with the data") {
    auto ex = reference_extremal();
    HalanayInstance big = ex;
    for (double& x : big.psi) x *= 3.0;
    for (double& x : big.v) x *= 3.0;
    for (double& x : big.b) x *= 3.0;
    auto r1 = verify_premise(ex);
    auto r2 = verify_premise(big);
    CHECK(r2.pass);
    for (std::size_t i = 0; i < r1.claimed.size(); i += 37)
        CHECK(r2.claimed[i] == doctest::Approx(3.0 * r1.claimed[i]));
    auto g1 = bound_global(ex, r1);
    auto g2 = bound_global(big, r2);
    CHECK(g2.claimed[100] == doctest::Approx(3.0 * g1.claimed[100]));
}

TEST_CASE("extremal solution is monotone in the forcing term") {
    std::vector<double> psi{1.0, 1.0};
    TimeGrid grid = TimeGrid::uniform(8.0, 320);
    std::vector<double> b1(321, 0.2), b2(321, 0.3);
    auto lo = build_extremal(1.5, 0.5, FracParams{0.5, 1.0}, DelaySpec::constant(0.4), grid,
                             psi, b1, nullptr);
    auto hi = build_extremal(1.5, 0.5, FracParams{0.5, 1.0}, DelaySpec::constant(0.4), grid,
                             psi, b2, nullptr);
    for (std::size_t i = 0; i < lo.v.size(); ++i) CHECK(lo.v[i] <= hi.v[i] + 1e-12);
}

TEST_CASE("csv round trip is lossless") {
    auto ex = reference_extremal();
    std::ostringstream os;
    write_instance_csv(os, ex);
    std::istringstream is(os.str());
    auto back = read_instance_csv(is);
    CHECK(back.mu == ex.mu);
    CHECK(back.a == ex.a);
    CHECK(back.params.alpha == ex.params.alpha);
    CHECK(back.params.gamma == ex.params.gamma);
    CHECK(back.delay.kind == ex.delay.kind);
    CHECK(back.delay.tau == ex.delay.tau);
    CHECK(back.grid.T() == ex.grid.T());
    CHECK(back.grid.cells() == ex.grid.cells());
    REQUIRE(back.psi.size() == ex.psi.size());
    for (std::size_t j = 0; j < ex.psi.size(); ++j) CHECK(back.psi[j] == ex.psi[j]);
    for (std::size_t i = 0; i < ex.v.size(); ++i) {
        CHECK(back.v[i] == ex.v[i]);
        CHECK(back.b[i] == ex.b[i]);
    }

    SUBCASE("custom delays refuse to serialize") {
        HalanayInstance odd = ex;
        odd.delay = DelaySpec::custom([](double) { return 0.25; }, 0.5);
        std::ostringstream sink;
        CHECK_THROWS_AS(write_instance_csv(sink, odd), std::invalid_argument);
    }
    SUBCASE("tampered row count is rejected") {
        std::string text = os.str();
        text.erase(text.rfind('\n', text.size() - 2) + 1);
        std::istringstream bad(text);
        CHECK_THROWS_AS(read_instance_csv(bad), std::invalid_argument);
    }
}

TEST_CASE("validation rejects malformed instances") {
    auto ex = reference_extremal();
    SUBCASE("spliced start") {
        ex.v[0] += 1e-3;
        CHECK_THROWS_AS(ex.validate(), std::invalid_argument);
    }
    SUBCASE("negative history") {
        ex.psi[0] = -0.1;
        CHECK_THROWS_AS(ex.validate(), std::invalid_argument);
    }
    SUBCASE("decreasing forcing") {
        ex.b[40] = ex.b[39] - 0.2;
        CHECK_THROWS_AS(ex.validate(), std::invalid_argument);
    }
    SUBCASE("size mismatch") {
        ex.v.pop_back();
        CHECK_THROWS_AS(ex.validate(), std::invalid_argument);
    }
    SUBCASE("graded grid") {
        ex.grid = TimeGrid::graded(10.0, 400, 2.0);
        CHECK_THROWS_AS(ex.validate(), std::invalid_argument);
    }
    SUBCASE("extremal construction needs a < mu") {
        std::vector<double> psi{1.0};
        std::vector<double> b(11, 0.0);
        CHECK_THROWS_AS(build_extremal(1.0, 1.0, FracParams{0.5, 1.0},
                                       DelaySpec::constant(0.0), TimeGrid::uniform(1.0, 10),
                                       psi, b, nullptr),
                        std::domain_error);
    }
}
