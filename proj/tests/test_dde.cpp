#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rslab/dde.hpp"
#include "rslab/relaxation.hpp"

using namespace rslab;

namespace {

constexpr double pi = std::numbers::pi;

BasisPtr interval_basis(std::size_t N, double L = pi) {
    return build_basis(Domain::interval(L), N);
}

Field make_field(BasisPtr basis, std::vector<double> coeffs) {
    return Field{basis, std::move(coeffs)};
}

NonlinearitySpec zero_forcing(BasisPtr basis) {
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis](double, const Field&) { return zero_field(basis); };
    nl.p = [](double) { return 0.0; };
    nl.envelope = NonlinearitySpec::Envelope::Lipschitz;
    nl.kappa = [](double) { return 0.0; };
    nl.ell = 0.0;
    nl.zero_at_origin = true;
    nl.sup_p = 0.0;
    return nl;
}

// f(t, v) = c v, the linear delayed feedback
NonlinearitySpec scaled_feedback(BasisPtr basis, double c) {
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis, c](double, const Field& v) {
        Field out{basis, v.coeffs};
        for (double& x : out.coeffs) x *= c;
        return out;
    };
    nl.p = [](double) { return 1.0; };
    nl.envelope = NonlinearitySpec::Envelope::Lipschitz;
    nl.kappa = [c](double) { return c; };
    nl.ell = c;
    nl.zero_at_origin = true;
    nl.sup_p = 1.0;
    return nl;
}

// u-independent forcing g(t) in the lowest mode
NonlinearitySpec mode1_forcing(BasisPtr basis, std::function<double(double)> g) {
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis, g](double t, const Field&) {
        Field out = zero_field(basis);
        out.coeffs[0] = g(t);
        return out;
    };
    const double cap = 10.0;
    nl.p = [](double) { return 10.0; };
    nl.envelope = NonlinearitySpec::Envelope::Growth;
    nl.G = [](double r) { return 1.0 + r; };
    nl.ell = 1.0;
    nl.sup_p = cap;
    return nl;
}

ProblemSpec free_problem(BasisPtr basis, std::vector<double> xi, double tau, double T,
                         std::size_t cells) {
    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::constant(tau);
    pb.history = History::constant(basis, make_field(basis, std::move(xi)), tau);
    pb.nonlin = zero_forcing(basis);
    pb.grid = TimeGrid::uniform(T, cells);
    return pb;
}

} // namespace

TEST_CASE("free evolution reproduces the resolvent table exactly") {
    auto basis = interval_basis(4);
    std::vector<double> xi{1.0, -0.5, 0.25, 0.0};
    ProblemSpec pb = free_problem(basis, xi, 1.0, 2.0, 64);
    auto table = build_resolvent_table(basis, pb.params, pb.grid);
    auto traj = integrate(pb, table);

    REQUIRE(traj.forward_count() == pb.grid.size());
    CHECK(traj.zero_index + 1 == traj.times.size() - (pb.grid.size() - 1));
    for (std::size_t i = 0; i < traj.forward_count(); ++i) {
        auto u = traj.forward_coeffs(i);
        for (std::size_t k = 0; k < 4; ++k) CHECK(u[k] == table.row(k)[i] * xi[k]);
    }
    CHECK(traj.max_picard_residual() == 0.0);
    for (int it : traj.picard_iterations) CHECK(it == 0);
}

TEST_CASE("history samples are spliced verbatim into the trajectory") {
    auto basis = interval_basis(3);
    const double tau = 0.5;
    auto hist = History::sampled(basis, tau, 8, [&](double s) {
        return make_field(basis, {std::sin(1.0 + s), std::cos(2.0 * s), 0.5 * s});
    });
    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::constant(tau);
    pb.history = hist;
    pb.nonlin = zero_forcing(basis);
    pb.grid = TimeGrid::uniform(1.0, 32);
    auto traj = integrate(pb);

    REQUIRE(traj.zero_index == hist.size() - 1);
    for (std::size_t i = 0; i < hist.size(); ++i) {
        CHECK(traj.times[i] == hist.s_nodes()[i]);
        auto row = traj.coeffs_at(i);
        auto ref = hist.coeffs_at(i);
        for (std::size_t k = 0; k < 3; ++k) CHECK(row[k] == ref[k]);
    }
    std::vector<double> a(3), b(3);
    traj.read(-0.3, a);
    hist.interp(-0.3, b);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a[k] == b[k]);
    CHECK_THROWS_AS(traj.read(-0.6, a), std::out_of_range);
    CHECK_THROWS_AS(traj.read(1.5, a), std::out_of_range);
}

TEST_CASE("single forced mode matches the scalar quadrature bitwise") {
    auto basis = interval_basis(1);
    auto g = [](double t) { return std::cos(3.0 * t) + 1.5; };
    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::constant(1.0);
    pb.history = History::constant(basis, make_field(basis, {0.7}), 1.0);
    pb.nonlin = mode1_forcing(basis, g);
    pb.grid = TimeGrid::uniform(4.0, 256);
    auto traj = integrate(pb);

    std::vector<double> gs(pb.grid.size());
    for (std::size_t i = 0; i < gs.size(); ++i) gs[i] = g(pb.grid.node(i));
    auto w = scalar_inhomogeneous(pb.params, 1.0, 0.7, gs, pb.grid);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(traj.forward_coeffs(i)[0] == w[i]);
}

TEST_CASE("manufactured polynomial solution converges at first order or better") {
    // u(t) = t^2 phi_1 solves the mode-1 equation when forced by
    // 2t + lambda1 t^2 + lambda1 gamma (2/Gamma(3-alpha)) t^(2-alpha)
    const double alpha = 0.5, gamma = 1.0;
    auto basis = interval_basis(2);
    const double lam = basis->lambda1();
    auto g = [=](double t) {
        return 2.0 * t + lam * t * t +
               lam * gamma * (2.0 / std::tgamma(3.0 - alpha)) * std::pow(t, 2.0 - alpha);
    };
    std::vector<double> errs;
    for (std::size_t cells : {32, 64, 128, 256}) {
        ProblemSpec pb;
        pb.params = FracParams{alpha, gamma};
        pb.basis = basis;
        pb.delay = DelaySpec::constant(0.0);
        pb.history = History::constant(basis, zero_field(basis), 0.0);
        pb.nonlin = mode1_forcing(basis, g);
        pb.grid = TimeGrid::uniform(1.0, cells);
        auto traj = integrate(pb);
        auto tail = traj.forward_coeffs(traj.forward_count() - 1);
        errs.push_back(std::abs(tail[0] - 1.0));
        CHECK(tail[1] == 0.0);
        // vanishing delay makes every node implicit
        CHECK(traj.picard_iterations[5] >= 1);
    }
    for (std::size_t j = 0; j + 1 < errs.size(); ++j) {
        const double order = std::log2(errs[j] / errs[j + 1]);
        CHECK(order >= 0.9);
    }
}

TEST_CASE("proportional delay switches between implicit and explicit nodes") {
    auto basis = interval_basis(2);
    ProblemSpec pb;
    pb.params = FracParams{0.4, 0.8};
    pb.basis = basis;
    pb.delay = DelaySpec::proportional(0.9, 0.0);
    pb.history = History::constant(basis, make_field(basis, {0.8, 0.1}), 0.0);
    pb.nonlin = scaled_feedback(basis, 0.5);
    pb.grid = TimeGrid::uniform(2.0, 64);
    auto traj = integrate(pb);

    // 0.9 t_i <= t_{i-1} exactly when i >= 10
    CHECK(traj.picard_iterations[1] >= 1);
    CHECK(traj.picard_iterations[9] >= 1);
    CHECK(traj.picard_iterations[10] == 0);
    CHECK(traj.picard_iterations[40] == 0);
    CHECK(traj.max_picard_residual() < pb.solver.picard_tol);

    ProblemSpec pg = pb;
    pg.solver.global_picard = true;
    auto tg = integrate(pg);
    double dist = 0.0;
    for (std::size_t i = 0; i < traj.forward_count(); ++i) {
        auto a = traj.forward_coeffs(i);
        auto b = tg.forward_coeffs(i);
        for (std::size_t k = 0; k < a.size(); ++k) dist = std::max(dist, std::abs(a[k] - b[k]));
    }
    CHECK(dist < 100.0 * pb.solver.picard_tol);
}

TEST_CASE("two runs with different Picard seeds stay within the uniqueness budget") {
    auto basis = interval_basis(2);
    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::proportional(1.0, 0.0);
    pb.history = History::constant(basis, make_field(basis, {1.0, -0.4}), 0.0);
    pb.nonlin = scaled_feedback(basis, 0.5);
    pb.grid = TimeGrid::uniform(2.0, 128);

    auto rep = uniqueness_probe(pb, 1e-3);
    CHECK(rep.pass);
    CHECK(rep.name == "uniqueness_two_run_distance");

    SUBCASE("zero forcing gives identical runs") {
        pb.nonlin = zero_forcing(basis);
        auto r0 = uniqueness_probe(pb, 1e-3);
        CHECK(r0.pass);
        CHECK(r0.margin == 10.0 * pb.solver.picard_tol);
    }
    SUBCASE("needs Lipschitz metadata") {
        pb.nonlin = mode1_forcing(basis, [](double) { return 1.0; });
        CHECK_THROWS_AS(uniqueness_probe(pb, 1e-3), std::invalid_argument);
    }
}

TEST_CASE("residual check accepts clean runs and flags a corrupted node") {
    auto basis = interval_basis(2);
    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::proportional(0.9, 0.0);
    pb.history = History::constant(basis, make_field(basis, {1.0, 0.3}), 0.0);
    pb.nonlin = scaled_feedback(basis, 0.5);
    pb.grid = TimeGrid::uniform(2.0, 64);
    auto traj = integrate(pb);

    auto rep = residual_check(traj, pb);
    CHECK(rep.pass);
    CHECK(rep.name == "mild_solution_residual");

    auto bad = traj;
    const std::size_t node = 40;
    bad.data[(bad.zero_index + node) * 2] += 1e-2;
    auto rep2 = residual_check(bad, pb, 1e-3);
    CHECK_FALSE(rep2.pass);
    CHECK(rep2.measured[node] > 1e-3);
}

TEST_CASE("residual against the refined quadrature shrinks under grid refinement") {
    auto basis = interval_basis(1);
    auto g = [](double t) { return std::sin(2.0 * t) + 2.0; };
    double worst_coarse = 0.0, worst_fine = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        ProblemSpec pb;
        pb.params = FracParams{0.5, 1.0};
        pb.basis = basis;
        pb.delay = DelaySpec::constant(1.0);
        pb.history = History::constant(basis, make_field(basis, {0.5}), 1.0);
        pb.nonlin = mode1_forcing(basis, g);
        pb.grid = TimeGrid::uniform(2.0, pass == 0 ? 64 : 128);
        auto traj = integrate(pb);
        auto rep = residual_check(traj, pb, 1.0);
        double worst = 0.0;
        for (double m : rep.measured) worst = std::max(worst, m);
        (pass == 0 ? worst_coarse : worst_fine) = worst;
    }
    CHECK(worst_fine > 0.0);
    CHECK(worst_coarse / worst_fine >= 1.8);
}

TEST_CASE("norm chain dominates the trajectory norms") {
    auto basis = interval_basis(3);
    ProblemSpec pb;
    pb.params = FracParams{0.6, 0.5};
    pb.basis = basis;
    pb.delay = DelaySpec::constant(0.5);
    pb.history = History::sampled(basis, 0.5, 8, [&](double s) {
        return make_field(basis, {1.0 + s, 0.5 * std::cos(s), -0.2});
    });
    pb.nonlin = scaled_feedback(basis, 0.8);
    pb.grid = TimeGrid::uniform(3.0, 96);
    auto table = build_resolvent_table(basis, pb.params, pb.grid);
    auto traj = integrate(pb, table);

    auto rep = check_norm_chain(traj, pb, &table);
    CHECK(rep.pass);
    auto rep2 = check_norm_chain(traj, pb);
    CHECK(rep2.pass);
}

TEST_CASE("sublinear majorant dominates the running sup") {
    auto basis = interval_basis(2);
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis](double t, const Field& v) {
        Field out = zero_field(basis);
        out.coeffs[0] = 0.25 * std::exp(-0.1 * t) * (1.0 + v.norm());
        return out;
    };
    nl.p = [](double t) { return 0.25 * std::exp(-0.1 * t); };
    nl.envelope = NonlinearitySpec::Envelope::Sublinear;
    nl.sup_p = 0.25;

    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::constant(0.5);
    pb.history = History::constant(basis, make_field(basis, {1.2, 0.0}), 0.5);
    pb.nonlin = nl;
    pb.grid = TimeGrid::uniform(4.0, 128);
    auto traj = integrate(pb);

    auto rep = check_apriori_sublinear(traj, pb);
    CHECK(rep.pass);
    CHECK(rep.claimed.back() >= rep.measured.back());

    pb.nonlin = scaled_feedback(basis, 0.5);
    CHECK_THROWS_AS(check_apriori_sublinear(traj, pb), std::invalid_argument);
}

TEST_CASE("smallness radius reduces to the gauge radius without forcing weight") {
    auto basis = interval_basis(2);
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis](double, const Field& v) {
        Field out{basis, v.coeffs};
        const double r = v.norm();
        for (double& x : out.coeffs) x *= r;
        return out;
    };
    nl.p = [](double) { return 0.0; };
    nl.envelope = NonlinearitySpec::Envelope::Growth;
    nl.G = [](double r) { return r * r; };
    nl.ell = 0.0;
    nl.zero_at_origin = true;
    nl.sup_p = 0.0;

    auto res = smallness_radius(nl, basis, FracParams{0.5, 1.0}, 20.0);
    CHECK(res.M == 0.0);
    CHECK(res.zeta == 0.05);
    CHECK(res.eta > 0.0);
    CHECK(res.eta <= 0.05);
    CHECK(res.eta > 0.04);
    CHECK(res.delta == res.eta);
}

TEST_CASE("smallness radius with forcing weight stays above the conservative floor") {
    auto basis = interval_basis(2);
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis](double t, const Field& v) {
        Field out{basis, v.coeffs};
        const double s = std::exp(-t) * v.norm();
        for (double& x : out.coeffs) x *= s;
        return out;
    };
    nl.p = [](double t) { return std::exp(-t); };
    nl.envelope = NonlinearitySpec::Envelope::Growth;
    nl.G = [](double r) { return r * r; };
    nl.ell = 0.0;
    nl.zero_at_origin = true;
    nl.sup_p = 1.0;

    auto res = smallness_radius(nl, basis, FracParams{0.5, 1.0}, 50.0);
    CHECK(res.M > 0.0);
    CHECK(res.zeta == doctest::Approx(0.05 / res.M));
    CHECK(res.delta > 0.0);
    CHECK(res.delta <= res.eta);
    const double x = res.zeta * res.M;
    CHECK(res.delta >= res.eta * (1.0 - x) / (1.0 + x) * (1.0 - 1e-12));

    SUBCASE("Lipschitz gauge halves the radius") {
        NonlinearitySpec lip = nl;
        lip.envelope = NonlinearitySpec::Envelope::Lipschitz;
        lip.kappa = [](double r) { return r; };
        lip.G = nullptr;
        auto rl = smallness_radius(lip, basis, FracParams{0.5, 1.0}, 50.0);
        CHECK(rl.eta == 0.5 * res.eta);
    }
}

TEST_CASE("smallness radius exercises the decayed-bound branch under heavy weight") {
    // the linear part of the gauge is close to the hypothesis ceiling, so the
    // convolution term dominates the relaxation decay at late times and the
    // balance factor drops below one
    auto basis = interval_basis(2);
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis](double, const Field& v) {
        Field out{basis, v.coeffs};
        const double s = 0.8 + v.norm();
        for (double& x : out.coeffs) x *= s;
        return out;
    };
    nl.p = [](double) { return 1.0; };
    nl.envelope = NonlinearitySpec::Envelope::Growth;
    nl.G = [](double r) { return 0.8 * r + r * r; };
    nl.ell = 0.8;
    nl.zero_at_origin = true;
    nl.sup_p = 1.0;

    SmallnessOptions opts;
    opts.zeta = 0.005;
    auto res = smallness_radius(nl, basis, FracParams{0.5, 1.0}, 50.0, opts);
    CHECK(res.delta > 0.0);
    CHECK(res.delta < res.eta);

    SUBCASE("hypothesis failure throws") {
        SmallnessOptions big;
        big.zeta = 0.5;
        CHECK_THROWS_AS(smallness_radius(nl, basis, FracParams{0.5, 1.0}, 50.0, big),
                        std::domain_error);
    }
    SUBCASE("linear part alone past the ceiling throws") {
        NonlinearitySpec hot = nl;
        hot.G = [](double r) { return 1.2 * r + r * r; };
        hot.ell = 1.2;
        CHECK_THROWS_AS(smallness_radius(hot, basis, FracParams{0.5, 1.0}, 50.0, opts),
                        std::domain_error);
    }
    SUBCASE("gauge never within the bound throws") {
        NonlinearitySpec root = nl;
        root.G = [](double r) { return std::sqrt(r); };
        CHECK_THROWS_AS(smallness_radius(root, basis, FracParams{0.5, 1.0}, 50.0, opts),
                        std::domain_error);
    }
    SUBCASE("sublinear metadata is not a smallness certificate") {
        NonlinearitySpec sub = nl;
        sub.envelope = NonlinearitySpec::Envelope::Sublinear;
        CHECK_THROWS_AS(smallness_radius(sub, basis, FracParams{0.5, 1.0}, 50.0, opts),
                        std::invalid_argument);
    }
}

TEST_CASE("trajectory csv lists history and forward nodes") {
    auto basis = interval_basis(2);
    ProblemSpec pb = free_problem(basis, {1.0, 0.5}, 0.5, 1.0, 16);
    auto traj = integrate(pb);
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,norm,c1,c2");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == traj.times.size());
}

TEST_CASE("problem validation rejects inconsistent setups") {
    auto basis = interval_basis(2);
    ProblemSpec pb = free_problem(basis, {1.0, 0.0}, 0.5, 1.0, 16);

    SUBCASE("graded grid") {
        pb.grid = TimeGrid::graded(1.0, 16, 2.0);
        CHECK_THROWS_AS(integrate(pb), std::invalid_argument);
    }
    SUBCASE("history does not span the delay window") {
        pb.delay = DelaySpec::constant(0.25);
        CHECK_THROWS_AS(integrate(pb), std::invalid_argument);
    }
    SUBCASE("basis mismatch") {
        pb.nonlin = zero_forcing(interval_basis(3));
        CHECK_THROWS_AS(integrate(pb), std::invalid_argument);
    }
    SUBCASE("bad solver options") {
        pb.solver.picard_tol = 0.0;
        CHECK_THROWS_AS(integrate(pb), std::invalid_argument);
    }
    SUBCASE("mismatched prebuilt table") {
        auto other = build_resolvent_table(basis, pb.params, TimeGrid::uniform(1.0, 8));
        CHECK_THROWS_AS(integrate(pb, other), std::invalid_argument);
    }
}

TEST_CASE("divergent self coupling reports the failing node") {
    auto basis = interval_basis(1);
    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::proportional(1.0, 0.0);
    pb.history = History::constant(basis, make_field(basis, {1.0}), 0.0);
    pb.nonlin = scaled_feedback(basis, 10.0);
    pb.grid = TimeGrid::uniform(4.0, 8);
    try {
        integrate(pb);
        FAIL("expected Picard divergence");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("node") != std::string::npos);
        CHECK(msg.find("contraction") != std::string::npos);
    }
}

TEST_CASE("integration is deterministic and table independent") {
    auto basis = interval_basis(2);
    ProblemSpec pb;
    pb.params = FracParams{0.5, 1.0};
    pb.basis = basis;
    pb.delay = DelaySpec::constant(0.25);
    pb.history = History::constant(basis, make_field(basis, {0.9, -0.2}), 0.25);
    pb.nonlin = scaled_feedback(basis, 0.7);
    pb.grid = TimeGrid::uniform(2.0, 64);

    auto table = build_resolvent_table(basis, pb.params, pb.grid);
    auto a = integrate(pb);
    auto b = integrate(pb, table);
    auto c = integrate(pb);
    REQUIRE(a.data.size() == b.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(a.data[i] == b.data[i]);
        CHECK(a.data[i] == c.data[i]);
    }
}
