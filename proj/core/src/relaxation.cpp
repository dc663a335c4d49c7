#include "rslab/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rslab/csv.hpp"

namespace rslab {
namespace {

constexpr double kTolFloor = 1e-12;
constexpr double kPi = 3.14159265358979323846;

// x^e - y^e with x = y + d, d >= 0, stable when d << y.
double pow_diff(double x, double y, double d, double e) {
    if (y <= 0.0) return std::pow(x, e);
    if (d < 0.25 * y) return std::pow(y, e) * std::expm1(e * std::log1p(d / y));
    return std::pow(x, e) - std::pow(y, e);
}

struct UniformWeights {
    std::vector<double> wl, wr, cw;
};

// Moments of (t-s)^(-alpha)/Gamma(1-alpha) against the two linear hat
// functions of one cell; on a uniform grid they depend only on m = i - j.
UniformWeights uniform_weights(double alpha, double h, std::size_t K) {
    UniformWeights w;
    w.wl.assign(K + 2, 0.0);
    w.wr.assign(K + 2, 0.0);
    w.cw.assign(K + 1, 0.0);
    const double e1 = 1.0 - alpha, e2 = 2.0 - alpha;
    const double inv_g1 = 1.0 / std::tgamma(e1);
    for (std::size_t m = 1; m <= K; ++m) {
        const double x = static_cast<double>(m) * h;
        const double y = static_cast<double>(m - 1) * h;
        const double I0 = pow_diff(x, y, h, e1) / e1;
        const double I1 = x * I0 - pow_diff(x, y, h, e2) / e2;
        w.wr[m] = I1 / h * inv_g1;
        w.wl[m] = I0 * inv_g1 - w.wr[m];
    }
    for (std::size_t m = 1; m + 1 <= K; ++m) w.cw[m] = w.wl[m] + w.wr[m + 1];
    return w;
}

void check_node(double v, std::size_t i) {
    if (!std::isfinite(v))
        throw std::runtime_error("omega_volterra: implicit step failed at node " +
                                 std::to_string(i));
}

std::vector<double> volterra_uniform(const FracParams& p, double mu, double h, std::size_t K) {
    std::vector<double> om(K + 1, 1.0);
    if (mu == 0.0) return om;
    const bool frac = p.gamma > 0.0;
    const double mg = mu * p.gamma;
    UniformWeights w;
    if (frac) w = uniform_weights(p.alpha, h, K);
    const double denom = 1.0 + 0.5 * mu * h + (frac ? mg * w.wr[1] : 0.0);
    double running = 0.0; // sum of om[1..i-1]
    for (std::size_t i = 1; i <= K; ++i) {
        const double trap_known = h * (0.5 * om[0] + running);
        double S = 0.0;
        if (frac) {
            if (i >= 2) {
                double acc = 0.0;
                const double* cw = w.cw.data();
                const double* o = om.data();
                for (std::size_t k = 1; k + 1 < i; ++k) acc += cw[i - k] * o[k];
                S = w.wl[i] * om[0] + acc + (w.wr[2] + w.wl[1]) * om[i - 1];
            } else {
                S = w.wl[1] * om[0];
            }
        }
        om[i] = (1.0 - mu * trap_known - mg * S) / denom;
        check_node(om[i], i);
        running += om[i];
    }
    return om;
}

std::vector<double> volterra_general(const FracParams& p, double mu,
                                     const std::vector<double>& t) {
    const std::size_t K = t.size() - 1;
    std::vector<double> om(K + 1, 1.0);
    if (mu == 0.0) return om;
    const bool frac = p.gamma > 0.0;
    const double alpha = p.alpha, e1 = 1.0 - alpha, e2 = 2.0 - alpha;
    const double inv_g1 = 1.0 / std::tgamma(e1);
    const double mg = mu * p.gamma;
    std::vector<double> v1(K + 1, 0.0);
    double trap_prefix = 0.0; // PL integral of omega over [0, t_{i-1}]
    for (std::size_t i = 1; i <= K; ++i) {
        const double dd_last = t[i] - t[i - 1];
        double S = 0.0, wr_last = 0.0;
        if (frac) {
            for (std::size_t k = 0; k < i; ++k) v1[k] = std::pow(t[i] - t[k], e1);
            for (std::size_t j = 0; j + 1 < i; ++j) {
                const double dj = t[j + 1] - t[j];
                const double xj = t[i] - t[j], xj1 = t[i] - t[j + 1];
                double d1, d2;
                if (dj < 0.25 * xj1) {
                    const double q = std::log1p(dj / xj1);
                    d1 = v1[j + 1] * std::expm1(e1 * q);
                    d2 = v1[j + 1] * xj1 * std::expm1(e2 * q);
                } else {
                    d1 = v1[j] - v1[j + 1];
                    d2 = v1[j] * xj - v1[j + 1] * xj1;
                }
                const double I0 = d1 / e1;
                const double I1 = xj * I0 - d2 / e2;
                const double wr = I1 / dj * inv_g1;
                const double wl = I0 * inv_g1 - wr;
                S += wl * om[j] + wr * om[j + 1];
            }
            const double dl = std::pow(dd_last, e1);
            const double I0l = dl / e1;
            wr_last = dd_last * dl / (e1 * e2) / dd_last * inv_g1; // dd^(1-a)/Gamma(3-a)
            S += (I0l * inv_g1 - wr_last) * om[i - 1];
        }
        const double trap_known = trap_prefix + 0.5 * dd_last * om[i - 1];
        const double denom = 1.0 + 0.5 * mu * dd_last + mg * wr_last;
        om[i] = (1.0 - mu * trap_known - mg * S) / denom;
        check_node(om[i], i);
        trap_prefix += 0.5 * dd_last * (om[i - 1] + om[i]);
    }
    return om;
}

std::vector<double> volterra_solve(const FracParams& p, double mu, const TimeGrid& grid) {
    if (grid.is_uniform()) return volterra_uniform(p, mu, grid.h(), grid.cells());
    return volterra_general(p, mu, grid.nodes());
}

} // namespace

RelaxationSamples omega_volterra(const FracParams& params, double mu, const TimeGrid& grid,
                                 const VolterraOptions& opts) {
    params.validate();
    if (!(mu >= 0.0)) throw std::invalid_argument("omega_volterra: mu must be >= 0");
    RelaxationSamples s;
    s.mu = mu;
    s.params = params;
    s.grid = grid;
    s.method = RelaxationSamples::Method::Volterra;
    if (!opts.step_halving) {
        s.values = volterra_solve(params, mu, grid);
        s.est_error = 0.0;
        return s;
    }
    std::vector<double> coarse = volterra_solve(params, mu, grid);
    std::vector<double> fine = volterra_solve(params, mu, grid.refined());
    double est = 0.0;
    s.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s.values[i] = fine[2 * i];
        est = std::max(est, std::abs(coarse[i] - fine[2 * i]));
    }
    s.est_error = est;
    return s;
}

double branch_cut_density(const FracParams& params, double mu, double r) {
    const double a = params.alpha;
    const double ra = std::pow(r, a);
    const double B = params.gamma * mu * ra * std::sin(kPi * a);
    const double A = mu - r + params.gamma * mu * ra * std::cos(kPi * a);
    return (B / kPi) / (A * A + B * B);
}

BranchCutDetail omega_branch_cut_detail(const FracParams& params, double mu, double t,
                                        double abs_tol) {
    params.validate();
    if (!(params.gamma > 0.0))
        throw std::invalid_argument("omega_branch_cut: gamma must be > 0 (no cut otherwise)");
    if (!(mu > 0.0)) throw std::invalid_argument("omega_branch_cut: mu must be > 0");
    if (!(t > 0.0)) throw std::invalid_argument("omega_branch_cut: t must be > 0");
    if (!(abs_tol > 0.0)) throw std::invalid_argument("omega_branch_cut: abs_tol must be > 0");

    std::size_t evals = 0;
    auto f = [&](double u) {
        const double r = std::exp(u);
        ++evals;
        const double e = -t * r;
        if (e < -700.0) return 0.0;
        return std::exp(e) * branch_cut_density(params, mu, r) * r;
    };

    const double a = params.alpha;
    const double thr = abs_tol * 1e-4;
    // Left tail ~ C * exp((1+a)u) with C = gamma*sin(pi a)/(pi mu).
    const double c_left = params.gamma * std::sin(kPi * a) / (kPi * mu);
    double u_lo = (std::log(std::max(thr / c_left, 1e-290))) / (1.0 + a);
    u_lo = std::min(u_lo, -2.0);
    int guard = 0;
    while (f(u_lo) > thr && guard++ < 500) u_lo -= 1.0;
    // Right tail ~ C2 * exp((a-1)u) * exp(-t e^u).
    const double c_right = params.gamma * mu * std::sin(kPi * a) / kPi;
    double u_hi = std::min(std::log(std::max(c_right / thr, 2.0)) / (1.0 - a),
                           std::log(45.0 / t));
    u_hi = std::max(u_hi, u_lo + 1.0);
    guard = 0;
    while (f(u_hi) > thr && guard++ < 500) u_hi += 0.5;

    // Trapezoid with successive halving; the integrand is analytic on the
    // whole line, so refinement converges geometrically.
    const double span = u_hi - u_lo;
    std::size_t n = std::max<std::size_t>(64, static_cast<std::size_t>(span / 0.25));
    double h = span / static_cast<double>(n);
    double T = 0.5 * (f(u_lo) + f(u_hi));
    for (std::size_t k = 1; k < n; ++k) T += f(u_lo + h * static_cast<double>(k));
    T *= h;
    double est = std::numeric_limits<double>::infinity();
    for (int level = 0; level < 14; ++level) {
        double mid = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            mid += f(u_lo + h * (static_cast<double>(k) + 0.5));
        const double T2 = 0.5 * T + 0.5 * h * mid;
        est = std::abs(T2 - T);
        T = T2;
        n *= 2;
        h *= 0.5;
        if (est <= 0.5 * abs_tol) break;
    }
    return BranchCutDetail{T, est, evals};
}

double omega_branch_cut(const FracParams& params, double mu, double t, double abs_tol) {
    return omega_branch_cut_detail(params, mu, t, abs_tol).value;
}

RelaxationSamples omega_branch_cut_samples(const FracParams& params, double mu,
                                           const TimeGrid& grid, double abs_tol) {
    RelaxationSamples s;
    s.mu = mu;
    s.params = params;
    s.grid = grid;
    s.method = RelaxationSamples::Method::BranchCut;
    s.values.resize(grid.size());
    s.values[0] = 1.0;
    double est = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        auto d = omega_branch_cut_detail(params, mu, grid.node(i), abs_tol);
        s.values[i] = d.value;
        est = std::max(est, d.est_error);
    }
    s.est_error = est;
    return s;
}

ReferenceValue omega_reference(const FracParams& params, double mu, double t, double rel_target,
                               std::size_t base_cells, std::size_t cell_cap) {
    params.validate();
    if (!(mu >= 0.0)) throw std::invalid_argument("omega_reference: mu must be >= 0");
    if (!(t > 0.0)) throw std::invalid_argument("omega_reference: t must be > 0");
    if (mu == 0.0) return ReferenceValue{1.0, 0.0, 0};

    auto solve_last = [&](std::size_t K) {
        return volterra_uniform(params, mu, t / static_cast<double>(K), K).back();
    };
    std::size_t K = base_cells;
    double v1 = solve_last(K);
    double v2 = solve_last(2 * K);
    double v3 = solve_last(4 * K);
    // Error expansion carries h^(2-alpha) from the t^(1-alpha) boundary layer
    // and h^2 from the smooth region; eliminate both.
    const double r1 = std::pow(2.0, 2.0 - params.alpha);
    for (;;) {
        const double w1 = (r1 * v2 - v1) / (r1 - 1.0);
        const double w2 = (r1 * v3 - v2) / (r1 - 1.0);
        const double ref = (4.0 * w2 - w1) / 3.0;
        const double est = std::abs(ref - w2);
        if (est <= rel_target * std::max(std::abs(ref), 1e-300) || 4 * K >= cell_cap)
            return ReferenceValue{ref, est, 4 * K};
        K *= 2;
        v1 = v2;
        v2 = v3;
        v3 = solve_last(4 * K);
    }
}

std::vector<double> pl_convolution_kernel(std::span<const double> omega) {
    const std::size_t n = omega.size();
    std::vector<double> c(n, 0.0);
    for (std::size_t d = 1; d + 1 < n; ++d)
        c[d] = (2.0 / 3.0) * omega[d] + (omega[d - 1] + omega[d + 1]) / 6.0;
    return c;
}

double pl_convolve_at(std::span<const double> omega, std::span<const double> kernel,
                      std::span<const double> g, double h, std::size_t i) {
    if (i >= omega.size() || i >= g.size() || i >= kernel.size())
        throw std::invalid_argument("pl_convolve_at: index out of range");
    if (i == 0) return 0.0;
    const double* c = kernel.data();
    const double* gp = g.data();
    double acc = 0.0;
    for (std::size_t k = 1; k < i; ++k) acc += c[i - k] * gp[k];
    const double w_cur = omega[0] / 3.0 + omega[1] / 6.0;
    return h * (acc + (omega[i] / 3.0 + omega[i - 1] / 6.0) * gp[0] + w_cur * gp[i]);
}

void pl_convolve(std::span<const double> omega, std::span<const double> kernel,
                 std::span<const double> g, double h, std::span<double> out) {
    const std::size_t n = omega.size();
    if (kernel.size() != n || g.size() != n || out.size() != n)
        throw std::invalid_argument("pl_convolve: size mismatch");
    if (n == 0) return;
    out[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) out[i] = pl_convolve_at(omega, kernel, g, h, i);
}

std::vector<double> pl_convolve(std::span<const double> omega, std::span<const double> g,
                                double h) {
    std::vector<double> out(omega.size(), 0.0);
    std::vector<double> kernel = pl_convolution_kernel(omega);
    pl_convolve(omega, kernel, g, h, out);
    return out;
}

std::vector<double> scalar_inhomogeneous(const RelaxationSamples& omega, double v0,
                                         std::span<const double> g) {
    if (!omega.grid.is_uniform())
        throw std::invalid_argument("scalar_inhomogeneous: requires a uniform grid");
    if (g.size() != omega.grid.size())
        throw std::invalid_argument("scalar_inhomogeneous: g does not match the grid");
    std::vector<double> v = pl_convolve(omega.values, g, omega.grid.h());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += omega.values[i] * v0;
    return v;
}

std::vector<double> scalar_inhomogeneous(const FracParams& params, double mu, double v0,
                                         std::span<const double> g, const TimeGrid& grid) {
    return scalar_inhomogeneous(omega_volterra(params, mu, grid), v0, g);
}

std::vector<BoundReport> check_kernel_bounds(const RelaxationSamples& s) {
    const double alpha = s.params.alpha;
    const double mu = s.mu;
    const double tol = std::max(kTolFloor, 10.0 * s.est_error);
    const std::size_t n = s.grid.size();
    std::vector<BoundReport> reports;

    std::vector<double> claimed, measured;
    claimed.reserve(n);
    measured.reserve(n);
    // Integrating the relaxation equation gives
    //   1 - omega(t) = mu * int_0^t omega + mu * gamma * (g_{1-alpha} conv omega)(t),
    // and since omega is positive and nonincreasing each term on the right is
    // at least omega(t) times its kernel mass, so
    //   mu * omega(t) * (t + gamma * g_{2-alpha}(t)) <= 1.
    // gamma must multiply the kernel term; dropping it overstates the decay
    // whenever gamma < 1.
    const double gamma = s.params.gamma;
    for (std::size_t i = 1; i < n; ++i) {
        const double t = s.grid.node(i);
        claimed.push_back(1.0 / (t + gamma * g_kernel(2.0 - alpha, t)));
        measured.push_back(mu * s.values[i]);
    }
    reports.push_back(BoundReport::make("kernel_inverse_sum_bound", claimed, measured, tol,
                                        mu == 0.0 ? "mu=0: trivially satisfied" : ""));

    claimed.clear();
    measured.clear();
    for (std::size_t i = 1; i < n; ++i) {
        const double t = s.grid.node(i);
        claimed.push_back(std::min(1.0 / t, 1.0 / (gamma * g_kernel(2.0 - alpha, t))));
        measured.push_back(mu * s.values[i]);
    }
    reports.push_back(BoundReport::make("kernel_min_power_bound", claimed, measured, tol,
                                        mu == 0.0 ? "mu=0: trivially satisfied" : ""));

    if (mu == 0.0) {
        reports.push_back(
            BoundReport::skip("kernel_integral_bound", "mu=0 makes the bound vacuous"));
    } else {
        claimed.assign(1, 0.0);
        measured.assign(1, 0.0);
        double integral = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            integral += 0.5 * (s.grid.node(i) - s.grid.node(i - 1)) *
                        (s.values[i - 1] + s.values[i]);
            claimed.push_back((1.0 - s.values[i]) / mu);
            measured.push_back(integral);
        }
        reports.push_back(BoundReport::make("kernel_integral_bound", claimed, measured, tol));
    }
    return reports;
}

BoundReport check_complete_monotonicity(const RelaxationSamples& s, int order) {
    if (order < 1 || order > 4)
        throw std::invalid_argument("check_complete_monotonicity: order must be in 1..4");
    if (!s.grid.is_uniform())
        throw std::invalid_argument("check_complete_monotonicity: requires a uniform grid");
    const std::size_t n = s.values.size();
    if (n <= static_cast<std::size_t>(order))
        throw std::invalid_argument("check_complete_monotonicity: grid too short");

    // Normalizing Delta^k by 2^k lets one tolerance cover every order: the
    // sample noise amplifies by at most 2^k under k-fold differencing.
    std::vector<double> claimed, measured;
    std::vector<double> diff(s.values.begin(), s.values.end());
    double sign = -1.0, scale = 0.5;
    for (int k = 1; k <= order; ++k) {
        for (std::size_t i = 0; i + k < n; ++i) diff[i] = diff[i + 1] - diff[i];
        for (std::size_t i = 0; i + k < n; ++i) {
            claimed.push_back(sign * diff[i] * scale);
            measured.push_back(0.0);
        }
        sign = -sign;
        scale *= 0.5;
    }
    const double tol = std::max(kTolFloor, 10.0 * s.est_error);
    return BoundReport::make("complete_monotonicity_order" + std::to_string(order),
                             std::move(claimed), std::move(measured), tol);
}

void write_samples_csv(std::ostream& os, const RelaxationSamples& s) {
    os << "t,omega,err\n";
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        os << csv::num(s.grid.node(i)) << ',' << csv::num(s.values[i]) << ','
           << csv::num(s.est_error) << '\n';
}

} // namespace rslab
