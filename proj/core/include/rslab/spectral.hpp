#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rslab/bound_report.hpp"
#include "rslab/frac_params.hpp"
#include "rslab/time_grid.hpp"

namespace rslab {

// Model domains with closed-form Dirichlet eigenpairs.  Restricting to these
// keeps every eigenvalue exact, so stability constants built from lambda_1
// carry no discretization error.
struct Domain {
    enum class Kind { Interval, Rectangle };

    Kind kind = Kind::Interval;
    double Lx = 1.0;
    double Ly = 0.0; // unused for intervals

    static Domain interval(double L);
    static Domain rectangle(double Lx, double Ly);

    bool two_dimensional() const { return kind == Kind::Rectangle; }
    void validate() const;
};

bool operator==(const Domain& a, const Domain& b);

// Mode index: intervals use n alone (m stays 0), rectangles use the pair
// (m, n) for sin(m pi x / Lx) * sin(n pi y / Ly).
struct Mode {
    std::size_t m = 0;
    std::size_t n = 0;
};

// First N Dirichlet-Laplacian eigenpairs, eigenvalues ascending.  Rectangle
// ties are broken lexicographically by (m, n) so the ordering is
// deterministic.
class EigenBasis {
  public:
    EigenBasis(Domain domain, std::size_t N);

    const Domain& domain() const { return domain_; }
    std::size_t size() const { return lambdas_.size(); }
    double lambda(std::size_t k) const { return lambdas_[k]; }
    double lambda1() const { return lambdas_.front(); }
    const std::vector<double>& lambdas() const { return lambdas_; }
    Mode mode(std::size_t k) const { return modes_[k]; }

    // Orthonormal eigenfunction values.
    double phi(std::size_t k, double x) const;
    double phi(std::size_t k, double x, double y) const;

  private:
    Domain domain_;
    std::vector<double> lambdas_;
    std::vector<Mode> modes_;
};

using BasisPtr = std::shared_ptr<const EigenBasis>;

BasisPtr build_basis(const Domain& domain, std::size_t N);

// Value comparison (same domain, same truncation), not pointer identity, so
// independently built bases interoperate.
bool same_basis(const EigenBasis& a, const EigenBasis& b);

// A function represented by its coefficients against the eigenbasis.  The
// basis is orthonormal, so the L2 norm of the function equals the Euclidean
// norm of coeffs.
struct Field {
    BasisPtr basis;
    std::vector<double> coeffs;

    double norm() const;
};

Field zero_field(BasisPtr basis);

struct ProjectInfo {
    // Set when the sample mesh has fewer than 4 points per shortest
    // wavelength of the highest mode; aliasing_estimate is the quadrature
    // norm of the sample residual after removing the projected part.
    bool under_resolved = false;
    double aliasing_estimate = 0.0;
};

// Trapezoid projection of samples on the uniform mesh x_j = j*Lx/cells
// (boundary samples included, weight zero since phi vanishes there).  The
// discrete sine orthogonality makes this exact for trigonometric polynomials
// of mode < cells.  1D form infers cells from samples.size() - 1.
Field project(BasisPtr basis, std::span<const double> samples, ProjectInfo* info = nullptr);

// 2D form: samples on the tensor mesh, x-major layout
// samples[jx * (cells_y + 1) + jy].
Field project(BasisPtr basis, std::span<const double> samples, std::size_t cells_x,
              std::size_t cells_y, ProjectInfo* info = nullptr);

// Pointwise evaluation sum_k coeffs[k] * phi_k.  Points must lie inside the
// closed domain.
double synthesize_at(const Field& f, double x);
double synthesize_at(const Field& f, double x, double y);
std::vector<double> synthesize(const Field& f, std::span<const double> xs);

// Evaluation on the same uniform meshes project() consumes.
std::vector<double> synthesize_on_mesh(const Field& f, std::size_t cells);
std::vector<double> synthesize_on_mesh(const Field& f, std::size_t cells_x, std::size_t cells_y);

// Table of omega(t_i, lambda_n) for every basis mode: the diagonal resolvent
// of the linear evolution.  Rows are mode-major spans of length grid.size().
struct ResolventTable {
    BasisPtr basis;
    FracParams params{0.5, 1.0};
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    std::vector<double> table;
    std::vector<double> est_errors; // per mode

    std::span<const double> row(std::size_t mode) const;
    double max_est_error() const;
};

// One Volterra solve per mode.  Verifies that the lambda_1 row dominates
// every other row entrywise (mu-monotonicity of omega) up to estimate error.
ResolventTable build_resolvent_table(BasisPtr basis, const FracParams& params,
                                     const TimeGrid& grid);

// Entrywise multiplication of coefficients by omega(t_i, lambda_n).
Field apply_resolvent(const ResolventTable& table, std::size_t t_index, const Field& v);

// Time series of fields on a grid, node-major: data[i * N + k].
struct FieldSeries {
    BasisPtr basis;
    TimeGrid grid = TimeGrid::uniform(1.0, 1);
    std::vector<double> data;

    std::span<double> at(std::size_t i);
    std::span<const double> at(std::size_t i) const;
    Field field_at(std::size_t i) const;
    double norm_at(std::size_t i) const;
};

FieldSeries zero_series(BasisPtr basis, const TimeGrid& grid);

// Q(g)(t_i) = int_0^{t_i} S(t_i - s) g(s) ds, mode-wise piecewise-linear
// product integration sharing the relaxation module's quadrature, so a
// single-mode series reproduces the scalar route bitwise.  Uniform grids
// only.  Cost O(N K^2).
FieldSeries cauchy_convolution(const ResolventTable& table, const FieldSeries& g);

// Upper bound for omega(t, lambda) used in truncation-tail reports:
// min(1, 1 / (lambda * (t + gamma * g_{2-alpha}(t)))).
double tail_decay_bound(const FracParams& params, double lambda, double t);

// Checks the last table row against tail_decay_bound: what the highest
// retained mode still contributes.
BoundReport check_resolvent_tail(const ResolventTable& table);

} // namespace rslab
