#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rslab/bound_report.hpp"
#include "rslab/spectral.hpp"

namespace rslab {

// Delay map rho: the solver reads the state at t - rho(t), which must stay in
// [-tau, t].  Proportional delays read at q*t - tau; custom delays supply the
// lag directly and are range-checked at every read.
struct DelaySpec {
    enum class Kind { Constant, Proportional, Custom };

    Kind kind = Kind::Constant;
    double tau = 0.0;
    double q = 1.0;                     // proportional reads at q*t - tau
    std::function<double(double)> lag;  // custom: rho(t)

    static DelaySpec constant(double tau);
    static DelaySpec proportional(double q, double tau);
    static DelaySpec custom(std::function<double(double)> lag, double tau);

    // t - rho(t); throws if the result leaves [-tau, t].
    double delayed_arg(double t) const;
};

// Custom delays are only required to satisfy t - rho(t) -> infinity; on a
// finite horizon this is a trend, not a provable fact, so it is reported:
// pass means the read address attains its maximum at the horizon end.
BoundReport check_delay_divergence(const DelaySpec& delay, double T, std::size_t samples = 256);

// Initial datum xi on [-tau, 0]: one Field per node of a uniform s-grid,
// linearly interpolated between nodes.  The sup norm of the interpolant is
// attained at nodes (norms are convex along segments).
class History {
  public:
    // an empty history; usable only after assignment from a real one
    History() = default;
    History(BasisPtr basis, double tau, std::size_t cells, std::vector<double> node_major);

    static History constant(BasisPtr basis, const Field& xi, double tau);
    static History sampled(BasisPtr basis, double tau, std::size_t cells,
                           const std::function<Field(double)>& xi);

    BasisPtr basis() const { return basis_; }
    double tau() const { return tau_; }
    std::size_t size() const { return s_nodes_.size(); }
    const std::vector<double>& s_nodes() const { return s_nodes_; }
    std::span<const double> coeffs_at(std::size_t i) const;
    Field at_zero() const;
    double sup_norm() const;

    // Linear interpolation at s in [-tau, 0].
    void interp(double s, std::span<double> out) const;

  private:
    BasisPtr basis_;
    double tau_ = 0.0;
    std::vector<double> s_nodes_;
    std::vector<double> data_; // node-major
};

} // namespace rslab
