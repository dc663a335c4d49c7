#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "rslab/bound_report.hpp"
#include "rslab/delay.hpp"
#include "rslab/frac_params.hpp"
#include "rslab/nonlinearity.hpp"
#include "rslab/spectral.hpp"
#include "rslab/time_grid.hpp"

namespace rslab {

struct SolverOptions {
    double picard_tol = 1e-10;
    int max_picard = 50;
    // Offset applied to the Picard starting guess at implicit nodes; two runs
    // with different offsets must land on the same fixed point, which is what
    // uniqueness_probe measures.
    double seed_perturbation = 0.0;
    // Verification mode: iterate the whole trajectory map u -> S xi + Q(f(u))
    // to a fixed point instead of marching node by node.
    bool global_picard = false;
    int max_global_sweeps = 200;
};

struct ProblemSpec {
    FracParams params{0.5, 1.0};
    BasisPtr basis;
    DelaySpec delay;
    History history;
    NonlinearitySpec nonlin;
    TimeGrid grid = TimeGrid::uniform(1.0, 1); // uniform grid on [0, T]
    SolverOptions solver;

    void validate() const;
};

// Solution on [-tau, T]: the history nodes followed by the forward nodes,
// with the t = 0 entry shared.  f_data keeps the forcing samples
// f(t_i, u_rho(t_i)) the march produced, which the residual and norm-chain
// checks reuse.
struct MildTrajectory {
    BasisPtr basis;
    std::vector<double> times;
    std::size_t zero_index = 0;
    std::vector<double> data; // node-major over times
    std::vector<double> norms;
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    std::vector<double> f_data;           // node-major over forward nodes
    std::vector<double> picard_residual;  // last Picard increment per forward node
    std::vector<int> picard_iterations;   // 0 at explicit nodes

    std::size_t forward_count() const { return grid.size(); }
    std::span<const double> coeffs_at(std::size_t time_index) const;
    std::span<const double> forward_coeffs(std::size_t i) const;
    std::span<const double> forcing_at(std::size_t i) const;
    double forward_norm(std::size_t i) const;
    double sup_norm_forward() const;
    double max_picard_residual() const;

    // Linear interpolation over the full [-tau, T] record.
    void read(double t, std::span<double> out) const;
};

// One-pass march of u(t_i) = S(t_i) xi(0) + Q[f(., u_rho)](t_i) using the
// piecewise-linear product integration shared with cauchy_convolution.  Nodes
// whose delayed argument lands beyond t_{i-1} are solved by Picard iteration
// on the last quadrature cell.  The table overload reuses a precomputed
// resolvent table (it must match basis, params and grid).
MildTrajectory integrate(const ProblemSpec& problem);
MildTrajectory integrate(const ProblemSpec& problem, const ResolventTable& table);

// A-posteriori check: rebuilds the right-hand side on a 2x refined grid
// (trajectory and delayed reads linearly interpolated) and reports the
// node-wise discrepancy against the stored solution.  threshold defaults to
// max(10 * refined-table est, 100 * picard_tol).
BoundReport residual_check(const MildTrajectory& traj, const ProblemSpec& problem,
                           double threshold = std::numeric_limits<double>::quiet_NaN());

// Integrates twice with different Picard starting guesses (offset 0 and
// `perturbation`); reports the sup distance between the trajectories.  Both
// runs converge to the same fixed point when the declared Lipschitz envelope
// is honest, so the distance passes against 10 * picard_tol.
BoundReport uniqueness_probe(const ProblemSpec& problem, double perturbation);

// Triangle-inequality witness: ||u(t_i)|| <= omega(t_i,l1) ||xi(0)|| +
// (omega(.,l1) * ||f||)(t_i), same quadrature on both sides.
BoundReport check_norm_chain(const MildTrajectory& traj, const ProblemSpec& problem,
                             const ResolventTable* table = nullptr);

// Sublinear a-priori majorant: psi(t) = ||xi||_inf + int_0^t p (1 + ||xi||_inf
// + psi); trapezoid recursion; checks the running max of ||u|| against it.
BoundReport check_apriori_sublinear(const MildTrajectory& traj, const ProblemSpec& problem);

struct SmallnessOptions {
    // Slack added to ell; NaN means 0.05 * (1 - ell*M) / M, the existence
    // slack the contraction argument needs.
    double zeta = std::numeric_limits<double>::quiet_NaN();
    double r_min = 1e-6;
    double r_max = 1.0;
    std::size_t scan_points = 256;  // geometric r grid
    std::size_t horizon_cells = 2048;
};

struct SmallnessResult {
    double delta = 0.0; // admissible initial sup-norm
    double eta = 0.0;   // invariant ball radius
    double zeta = 0.0;
    double ell = 0.0;
    double M = 0.0; // sup_t (omega(.,lambda_1) * p)(t) on the horizon
};

// Constructive radii for the small-data fixed point: eta from scanning
// G(r)/r <= ell + zeta (Lipschitz metadata scans kappa(r) instead), delta =
// min(eta, delta0) with
//   delta0 = eta * inf_t [ (omega + (ell+zeta) omega*p)^{-1}
//                          (1 - (ell+zeta) omega*p) ].
// Throws when (ell + zeta) * M >= 1: no radius exists under this certificate.
SmallnessResult smallness_radius(const NonlinearitySpec& nl, BasisPtr basis,
                                 const FracParams& params, double horizon,
                                 const SmallnessOptions& opts = {});

// One row per node over [-tau, T]: t,norm,c1..cN.
void write_trajectory_csv(std::ostream& os, const MildTrajectory& traj);

} // namespace rslab
