#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rslab/bound_report.hpp"
#include "rslab/frac_params.hpp"
#include "rslab/time_grid.hpp"

namespace rslab {

// Samples of the scalar relaxation function omega(t, mu), the decaying kernel
// that drives every mode of the evolution.  omega solves
//     omega' + mu * (1 + gamma * D_t^alpha) omega = 0,  omega(0) = 1,
// with D_t^alpha the Riemann-Liouville derivative, or equivalently the
// second-kind Volterra equation
//     omega(t) = 1 - mu * int_0^t omega - mu*gamma * (g_{1-alpha} * omega)(t).
struct RelaxationSamples {
    enum class Method { Volterra, BranchCut };

    double mu = 0.0;
    FracParams params{0.5, 1.0};
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    std::vector<double> values;
    Method method = Method::Volterra;
    // Absolute, max over nodes; 0 when no estimate was requested.
    double est_error = 0.0;
};

struct VolterraOptions {
    // Solve once more on the 2x refined grid; keep the refined values at the
    // requested nodes and report the coarse/fine gap as est_error.
    bool step_halving = true;
};

// Implicit product-integration solve, exact on piecewise-linear interpolants.
// Handles uniform grids with translation-invariant weights and graded grids
// with per-cell weights.  mu >= 0; mu = 0 returns identically 1.
RelaxationSamples omega_volterra(const FracParams& params, double mu, const TimeGrid& grid,
                                 const VolterraOptions& opts = {});

// Laplace-inversion route: collapses the Bromwich contour onto the negative
// real axis where omega_hat(s) = 1/(s + gamma*mu*s^alpha + mu) has its branch
// cut, leaving omega(t) = int_0^inf exp(-r t) H(r) dr with the positive jump
// density H.  Requires t > 0, mu > 0, gamma > 0.
double omega_branch_cut(const FracParams& params, double mu, double t, double abs_tol = 1e-9);

struct BranchCutDetail {
    double value = 0.0;
    double est_error = 0.0;
    std::size_t evaluations = 0;
};
BranchCutDetail omega_branch_cut_detail(const FracParams& params, double mu, double t,
                                        double abs_tol = 1e-9);

// Branch-cut evaluation at every positive node; node 0 is pinned to 1.
RelaxationSamples omega_branch_cut_samples(const FracParams& params, double mu,
                                           const TimeGrid& grid, double abs_tol = 1e-9);

// The spectral density itself (exposed for quadrature tests).
double branch_cut_density(const FracParams& params, double mu, double r);

struct ReferenceValue {
    double value = 0.0;
    double est_error = 0.0;
    std::size_t cells_used = 0;
};

// High-accuracy omega(t, mu) from the Volterra scheme on uniform grids over
// [0, t] with two-exponent Richardson extrapolation (known error exponents
// 2-alpha and 2).  Doubles the grid until the extrapolation settles below
// rel_target or cell_cap is hit.
ReferenceValue omega_reference(const FracParams& params, double mu, double t,
                               double rel_target = 3e-7, std::size_t base_cells = 1024,
                               std::size_t cell_cap = 32768);

// --- piecewise-linear convolution on uniform grids --------------------------
//
// out[i] = int_0^{t_i} omega~(t_i - s) g~(s) ds where both factors are the
// piecewise-linear interpolants of their samples; the cell integrals are
// evaluated exactly, so the only error is the interpolation error.  This is
// the one convolution kernel shared by every module.

// Combined interior weights c[d] = 2/3*omega[d] + (omega[d-1]+omega[d+1])/6,
// d = 1..n-2; c[0] and c[n-1] are unused and set to 0.
std::vector<double> pl_convolution_kernel(std::span<const double> omega);

void pl_convolve(std::span<const double> omega, std::span<const double> kernel,
                 std::span<const double> g, double h, std::span<double> out);

// Single output node of the same quadrature; reads g[0..i] only, so a causal
// march can evaluate the convolution as the samples become available and
// still match pl_convolve bitwise.
double pl_convolve_at(std::span<const double> omega, std::span<const double> kernel,
                      std::span<const double> g, double h, std::size_t i);

std::vector<double> pl_convolve(std::span<const double> omega, std::span<const double> g,
                                double h);

// v(t_i) = omega(t_i)*v0 + (omega * g)(t_i): the variation-of-constants
// solution of v' + mu(1 + gamma D^alpha) v = g with v(0) = v0.
std::vector<double> scalar_inhomogeneous(const RelaxationSamples& omega, double v0,
                                         std::span<const double> g);
std::vector<double> scalar_inhomogeneous(const FracParams& params, double mu, double v0,
                                         std::span<const double> g, const TimeGrid& grid);

// --- qualitative property checks --------------------------------------------

// Three decay/integral bounds; tolerance defaults to 10 * est_error with a
// small absolute floor.  mu = 0 renders (iii) vacuous and it is skipped.
//   (i)   mu*omega(t) <= 1 / (t + gamma * g_{2-alpha}(t))
//   (ii)  mu*omega(t) <= min(1/t, 1 / (gamma * g_{2-alpha}(t)))
//   (iii) int_0^t omega <= (1 - omega(t)) / mu
// (i) follows from integrating the relaxation equation: 1 - omega equals
// mu * (int omega + gamma * (g_{1-alpha} conv omega)), and omega is positive
// and nonincreasing.  gamma must multiply the kernel term: a gamma-free
// version of (i) fails numerically for gamma < 1.  (ii) is the power-law
// envelope implied by (i).
std::vector<BoundReport> check_kernel_bounds(const RelaxationSamples& samples);

// Sign-alternation of forward differences up to the given order (<= 4) on a
// uniform grid: (-1)^k Delta^k omega >= -tol.  Entries are normalized by 2^k
// so a single tolerance 10*est_error (plus floor) applies to every order.
BoundReport check_complete_monotonicity(const RelaxationSamples& samples, int order);

// Debug dump, one row per node: t,omega,err.
void write_samples_csv(std::ostream& os, const RelaxationSamples& samples);

} // namespace rslab
