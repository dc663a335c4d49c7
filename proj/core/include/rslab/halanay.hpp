#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rslab/bound_report.hpp"
#include "rslab/delay.hpp"
#include "rslab/frac_params.hpp"
#include "rslab/time_grid.hpp"

namespace rslab {

// Scalar comparison data for the delayed Halanay inequality driven by the
// relaxation kernel omega(., mu):
//   v(t) <= omega(t) v(0) + int_0^t omega(t-s) [ a w(s) + b(s) ] ds,
//   w(s) = sup of the extension of v over [s - rho(s), s],
// with v extended by psi on [-tau, 0], all data nonnegative and b
// nondecreasing (the comparison argument needs a monotone forcing term).
struct HalanayInstance {
    double mu = 1.0;
    double a = 0.0;
    FracParams params{0.5, 1.0};
    DelaySpec delay = DelaySpec::constant(0.0);
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    std::vector<double> psi; // uniform nodes on [-tau, 0], psi.back() at s = 0
    std::vector<double> v;   // forward grid nodes, v[0] == psi.back()
    std::vector<double> b;   // forward grid nodes

    void validate() const;
    double v0() const { return psi.back(); }
    double sup_psi() const;
    // linear read of the extension on [-tau, T]
    double value_at(double t) const;
    // sup of the piecewise linear extension over [t - rho(t), t]
    double window_sup(double t) const;
};

// Rebuilds the right hand side of the inequality on the grid with the same
// product-integration weights and compares it against v.
BoundReport verify_premise(const HalanayInstance& inst);

// Global bound mu/(mu-a) (v(0) + (omega*b)(t)) + sup psi; needs a < mu and an
// established premise (a failed or skipped premise report yields a skip).
BoundReport bound_global(const HalanayInstance& inst, const BoundReport& premise);

// Tail bound on [tail_start, T]: mu/(mu-a) sup(omega*b) plus an explicit
// transient slack from the v(0) decay and the pre-tail window memory, both
// evaluated at tail_start/2.  When b vanishes a final entry asserts the decay
// v(T) <= decay_tol * sup psi.  With a > 0 the memory certificate needs a lag
// bounded by tau, so proportional (q < 1) and custom delays are skipped.
BoundReport bound_limsup(const HalanayInstance& inst, double tail_start,
                         double decay_tol = 1e-3);

struct ExtremalStats {
    int sweeps = 0;
    double final_diff = 0.0;
    double max_contraction = 0.0;
};

// Fixed point of the inequality map (the equality instance) by monotone
// sweeps from the constant continuation of psi(0); needs a < mu.
HalanayInstance build_extremal(double mu, double a, const FracParams& params,
                               const DelaySpec& delay, const TimeGrid& grid,
                               std::span<const double> psi, std::span<const double> b,
                               ExtremalStats* stats = nullptr);

// Lossless text round trip (constant and proportional delays only).
void write_instance_csv(std::ostream& os, const HalanayInstance& inst);
HalanayInstance read_instance_csv(std::istream& is);

} // namespace rslab
