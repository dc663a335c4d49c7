// Microbenchmarks for the quadrature and solver kernels: the piecewise-linear
// convolution and the Volterra march are O(K^2) in the node count and dominate
// every experiment, the resolvent table adds the mode factor on top.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rslab/dde.hpp"
#include "rslab/halanay.hpp"
#include "rslab/relaxation.hpp"
#include "rslab/spectral.hpp"

using namespace rslab;

namespace {

const FracParams kParams{0.5, 1.0};

std::vector<double> forcing_samples(const TimeGrid& grid) {
    std::vector<double> g(grid.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::cos(3.0 * grid.node(i)) + 1.5;
    return g;
}

void BM_PlConvolve(benchmark::State& state) {
    const auto cells = static_cast<std::size_t>(state.range(0));
    const TimeGrid grid = TimeGrid::uniform(10.0, cells);
    const RelaxationSamples s = omega_volterra(kParams, 2.0, grid);
    const std::vector<double> g = forcing_samples(grid);
    const std::vector<double> kernel = pl_convolution_kernel(s.values);
    std::vector<double> out(grid.size());
    for (auto _ : state) {
        pl_convolve(s.values, kernel, g, grid.h(), out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(static_cast<benchmark::IterationCount>(cells));
}
BENCHMARK(BM_PlConvolve)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_OmegaVolterraUniform(benchmark::State& state) {
    const auto cells = static_cast<std::size_t>(state.range(0));
    const TimeGrid grid = TimeGrid::uniform(10.0, cells);
    for (auto _ : state) {
        RelaxationSamples s = omega_volterra(kParams, 2.0, grid);
        benchmark::DoNotOptimize(s.values.data());
    }
    state.SetComplexityN(static_cast<benchmark::IterationCount>(cells));
}
BENCHMARK(BM_OmegaVolterraUniform)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_OmegaVolterraGraded(benchmark::State& state) {
    const auto cells = static_cast<std::size_t>(state.range(0));
    const TimeGrid grid = TimeGrid::graded(10.0, cells, 2.0);
    for (auto _ : state) {
        RelaxationSamples s = omega_volterra({0.25, 1.0}, 2.0, grid);
        benchmark::DoNotOptimize(s.values.data());
    }
    state.SetComplexityN(static_cast<benchmark::IterationCount>(cells));
}
BENCHMARK(BM_OmegaVolterraGraded)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_OmegaBranchCut(benchmark::State& state) {
    for (auto _ : state) {
        const double w = omega_branch_cut(kParams, 2.0, 1.0, 1e-9);
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(BM_OmegaBranchCut);

void BM_OmegaReference(benchmark::State& state) {
    for (auto _ : state) {
        const ReferenceValue rv = omega_reference(kParams, 2.0, 1.0, 1e-7);
        benchmark::DoNotOptimize(rv.value);
    }
}
BENCHMARK(BM_OmegaReference);

void BM_ResolventTable(benchmark::State& state) {
    const auto modes = static_cast<std::size_t>(state.range(0));
    const BasisPtr basis = build_basis(Domain::interval(std::numbers::pi), modes);
    const TimeGrid grid = TimeGrid::uniform(5.0, 512);
    for (auto _ : state) {
        ResolventTable table = build_resolvent_table(basis, kParams, grid);
        benchmark::DoNotOptimize(table.table.data());
    }
}
BENCHMARK(BM_ResolventTable)->Arg(4)->Arg(16)->Arg(64);

void BM_CauchyConvolution(benchmark::State& state) {
    const auto modes = static_cast<std::size_t>(state.range(0));
    const BasisPtr basis = build_basis(Domain::interval(std::numbers::pi), modes);
    const TimeGrid grid = TimeGrid::uniform(5.0, 512);
    const ResolventTable table = build_resolvent_table(basis, kParams, grid);
    FieldSeries g = zero_series(basis, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t k = 0; k < modes; ++k)
            g.at(i)[k] = std::sin(grid.node(i) + double(k));
    for (auto _ : state) {
        FieldSeries u = cauchy_convolution(table, g);
        benchmark::DoNotOptimize(u.data.data());
    }
}
BENCHMARK(BM_CauchyConvolution)->Arg(4)->Arg(16)->Arg(64);

void BM_DelayedMarch(benchmark::State& state) {
    const auto cells = static_cast<std::size_t>(state.range(0));
    const BasisPtr basis = build_basis(Domain::interval(std::numbers::pi), 16);
    NonlinearitySpec nl;
    nl.basis = basis;
    nl.f = [basis](double, const Field& v) {
        Field out{basis, v.coeffs};
        for (double& x : out.coeffs) x *= 0.5;
        return out;
    };
    nl.p = [](double) { return 1.0; };
    nl.envelope = NonlinearitySpec::Envelope::Lipschitz;
    nl.kappa = [](double) { return 0.5; };
    nl.ell = 0.5;
    nl.zero_at_origin = true;
    nl.sup_p = 1.0;

    std::vector<double> xi(16);
    for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = 1.0 / double((k + 1) * (k + 1));
    ProblemSpec pb;
    pb.params = kParams;
    pb.basis = basis;
    pb.delay = DelaySpec::constant(0.5);
    pb.history = History::constant(basis, Field{basis, xi}, 0.5);
    pb.nonlin = nl;
    pb.grid = TimeGrid::uniform(5.0, cells);
    const ResolventTable table = build_resolvent_table(basis, pb.params, pb.grid);
    for (auto _ : state) {
        MildTrajectory traj = integrate(pb, table);
        benchmark::DoNotOptimize(traj.data.data());
    }
    state.SetComplexityN(static_cast<benchmark::IterationCount>(cells));
}
BENCHMARK(BM_DelayedMarch)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_BuildExtremal(benchmark::State& state) {
    const auto cells = static_cast<std::size_t>(state.range(0));
    const TimeGrid grid = TimeGrid::uniform(100.0, cells);
    const std::vector<double> psi = {1.5, 1.4, 1.3, 1.2, 1.1, 1.0};
    std::vector<double> b(grid.size(), 0.3);
    for (auto _ : state) {
        HalanayInstance inst =
            build_extremal(2.0, 1.0, {0.9, 0.1}, DelaySpec::constant(0.5), grid, psi, b);
        benchmark::DoNotOptimize(inst.v.data());
    }
}
BENCHMARK(BM_BuildExtremal)->Arg(500)->Arg(2000);

} // namespace

BENCHMARK_MAIN();
