#include "rslab/dde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rslab/csv.hpp"
#include "rslab/relaxation.hpp"

namespace rslab {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

double l2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double l2_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

// f evaluated through the Field interface on raw coefficient spans.
void eval_f(const NonlinearitySpec& nl, double t, std::span<const double> v,
            std::span<double> out) {
    Field vf{nl.basis, std::vector<double>(v.begin(), v.end())};
    Field r = nl.f(t, vf);
    if (r.basis == nullptr || !same_basis(*r.basis, *nl.basis) || r.coeffs.size() != out.size())
        throw std::invalid_argument("nonlinearity returned a mismatched field");
    std::copy(r.coeffs.begin(), r.coeffs.end(), out.begin());
}

struct MarchWorkspace {
    std::size_t N = 0, K = 0;
    double h = 0.0;
    const ResolventTable* table = nullptr;
    std::vector<std::vector<double>> kernels; // per mode
    std::vector<double> U;                    // node-major K x N
    std::vector<double> F;                    // mode-major N x K

    std::span<const double> row(std::size_t k) const { return table->row(k); }
    std::span<const double> fmode(std::size_t k) const {
        return std::span<const double>(F.data() + k * K, K);
    }
};

// Linear read of the forward solution; `known` is the last completed node.
void read_forward(const MarchWorkspace& ws, const History& hist, double arg, std::size_t known,
                  std::span<double> out) {
    if (arg <= 0.0) {
        hist.interp(arg, out);
        return;
    }
    std::size_t j = static_cast<std::size_t>(arg / ws.h);
    if (j + 1 > known) j = known - 1;
    double theta = arg / ws.h - static_cast<double>(j);
    theta = std::clamp(theta, 0.0, 1.0);
    const double* a = ws.U.data() + j * ws.N;
    const double* b = a + ws.N;
    for (std::size_t k = 0; k < ws.N; ++k) out[k] = (1.0 - theta) * a[k] + theta * b[k];
}

MildTrajectory assemble_trajectory(const ProblemSpec& pb, MarchWorkspace& ws,
                                   std::vector<double> picard_residual,
                                   std::vector<int> picard_iterations) {
    const std::size_t N = ws.N, K = ws.K;
    const History& hist = pb.history;
    const std::size_t H = hist.size();
    MildTrajectory traj;
    traj.basis = pb.basis;
    traj.grid = pb.grid;
    traj.zero_index = H - 1;
    traj.times.resize(H + K - 1);
    for (std::size_t i = 0; i < H; ++i) traj.times[i] = hist.s_nodes()[i];
    for (std::size_t i = 1; i < K; ++i) traj.times[H - 1 + i] = pb.grid.node(i);
    traj.data.resize(traj.times.size() * N);
    for (std::size_t i = 0; i + 1 < H; ++i) {
        auto c = hist.coeffs_at(i);
        std::copy(c.begin(), c.end(), traj.data.begin() + i * N);
    }
    std::copy(ws.U.begin(), ws.U.end(), traj.data.begin() + (H - 1) * N);
    traj.norms.resize(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        traj.norms[i] = l2(std::span<const double>(traj.data.data() + i * N, N));
    traj.f_data.resize(K * N);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t k = 0; k < N; ++k) traj.f_data[i * N + k] = ws.F[k * K + i];
    traj.picard_residual = std::move(picard_residual);
    traj.picard_iterations = std::move(picard_iterations);
    return traj;
}

MildTrajectory march(const ProblemSpec& pb, const ResolventTable& table) {
    const std::size_t N = pb.basis->size();
    const std::size_t K = pb.grid.size();
    const double h = pb.grid.h();
    const double tol = pb.solver.picard_tol;

    MarchWorkspace ws;
    ws.N = N;
    ws.K = K;
    ws.h = h;
    ws.table = &table;
    ws.kernels.reserve(N);
    for (std::size_t k = 0; k < N; ++k) ws.kernels.push_back(pl_convolution_kernel(table.row(k)));
    ws.U.assign(K * N, 0.0);
    ws.F.assign(N * K, 0.0);

    Field xi0 = pb.history.at_zero();
    std::copy(xi0.coeffs.begin(), xi0.coeffs.end(), ws.U.begin());

    std::vector<double> picard_residual(K, 0.0);
    std::vector<int> picard_iterations(K, 0);
    std::vector<double> v(N), fi(N), guess(N), next(N);

    // forcing sample at t = 0 reads the history only
    {
        const double arg0 = pb.delay.delayed_arg(0.0);
        pb.history.interp(arg0, v);
        eval_f(pb.nonlin, 0.0, v, fi);
        for (std::size_t k = 0; k < N; ++k) ws.F[k * K] = fi[k];
    }

    for (std::size_t i = 1; i < K; ++i) {
        const double ti = pb.grid.node(i);
        const double arg = pb.delay.delayed_arg(ti);
        const bool expl = arg <= pb.grid.node(i - 1);
        if (expl) {
            read_forward(ws, pb.history, arg, i - 1, v);
            eval_f(pb.nonlin, ti, v, fi);
            for (std::size_t k = 0; k < N; ++k) ws.F[k * K + i] = fi[k];
        } else {
            // delayed argument inside the open last cell: the node couples to
            // itself through the interpolated read, solve by Picard
            const double theta = std::clamp((arg - pb.grid.node(i - 1)) / h, 0.0, 1.0);
            const double* prev = ws.U.data() + (i - 1) * N;
            std::vector<double> base(N);
            for (std::size_t k = 0; k < N; ++k) {
                auto om = table.row(k);
                const auto& c = ws.kernels[k];
                const double* fk = ws.F.data() + k * K;
                double acc = 0.0;
                for (std::size_t j = 1; j < i; ++j) acc += c[i - j] * fk[j];
                base[k] = om[i] * xi0.coeffs[k] +
                          h * (acc + (om[i] / 3.0 + om[i - 1] / 6.0) * fk[0]);
            }
            for (std::size_t k = 0; k < N; ++k) guess[k] = prev[k] + pb.solver.seed_perturbation;
            double diff = 0.0;
            int m = 0;
            bool converged = false;
            int bonus = 0;
            double prev_diff = -1.0;
            double contraction = 0.0;
            while (m < pb.solver.max_picard) {
                ++m;
                for (std::size_t k = 0; k < N; ++k)
                    v[k] = (1.0 - theta) * prev[k] + theta * guess[k];
                eval_f(pb.nonlin, ti, v, fi);
                for (std::size_t k = 0; k < N; ++k) {
                    auto om = table.row(k);
                    const double wself = h * (om[0] / 3.0 + om[1] / 6.0);
                    next[k] = base[k] + wself * fi[k];
                }
                diff = l2_diff(next, guess);
                std::copy(next.begin(), next.end(), guess.begin());
                if (prev_diff > 0.0 && diff > 0.0)
                    contraction = std::max(contraction, diff / prev_diff);
                prev_diff = diff;
                if (converged && ++bonus >= 2) break;
                if (diff < tol) converged = true;
            }
            if (!converged) {
                std::ostringstream os;
                os << "Picard did not converge at node " << i << " (t=" << ti
                   << "), last increment " << diff << ", contraction estimate " << contraction;
                throw std::runtime_error(os.str());
            }
            picard_residual[i] = diff;
            picard_iterations[i] = m;
            for (std::size_t k = 0; k < N; ++k) ws.F[k * K + i] = fi[k];
        }
        double* ui = ws.U.data() + i * N;
        for (std::size_t k = 0; k < N; ++k) {
            auto om = table.row(k);
            ui[k] = om[i] * xi0.coeffs[k] +
                    pl_convolve_at(om, ws.kernels[k], ws.fmode(k).first(i + 1), h, i);
        }
    }
    return assemble_trajectory(pb, ws, std::move(picard_residual), std::move(picard_iterations));
}

MildTrajectory global_sweep(const ProblemSpec& pb, const ResolventTable& table) {
    const std::size_t N = pb.basis->size();
    const std::size_t K = pb.grid.size();
    const double h = pb.grid.h();

    MarchWorkspace ws;
    ws.N = N;
    ws.K = K;
    ws.h = h;
    ws.table = &table;
    ws.kernels.reserve(N);
    for (std::size_t k = 0; k < N; ++k) ws.kernels.push_back(pl_convolution_kernel(table.row(k)));
    ws.F.assign(N * K, 0.0);

    Field xi0 = pb.history.at_zero();
    // start from the constant continuation of xi(0)
    ws.U.assign(K * N, 0.0);
    for (std::size_t i = 0; i < K; ++i)
        std::copy(xi0.coeffs.begin(), xi0.coeffs.end(), ws.U.begin() + i * N);

    std::vector<double> v(N), fi(N), Unew(K * N);
    double dist = 0.0;
    int sweep = 0;
    for (; sweep < pb.solver.max_global_sweeps; ++sweep) {
        for (std::size_t i = 0; i < K; ++i) {
            const double ti = pb.grid.node(i);
            const double arg = pb.delay.delayed_arg(ti);
            read_forward(ws, pb.history, arg, K - 1, v);
            eval_f(pb.nonlin, ti, v, fi);
            for (std::size_t k = 0; k < N; ++k) ws.F[k * K + i] = fi[k];
        }
        std::copy(xi0.coeffs.begin(), xi0.coeffs.end(), Unew.begin());
        for (std::size_t i = 1; i < K; ++i) {
            double* ui = Unew.data() + i * N;
            for (std::size_t k = 0; k < N; ++k) {
                auto om = table.row(k);
                ui[k] = om[i] * xi0.coeffs[k] +
                        pl_convolve_at(om, ws.kernels[k], ws.fmode(k).first(i + 1), h, i);
            }
        }
        dist = 0.0;
        for (std::size_t i = 0; i < K * N; i += N)
            dist = std::max(dist, l2_diff(std::span<const double>(Unew.data() + i, N),
                                          std::span<const double>(ws.U.data() + i, N)));
        ws.U.swap(Unew);
        if (dist < pb.solver.picard_tol) break;
    }
    if (dist >= pb.solver.picard_tol) {
        std::ostringstream os;
        os << "global iteration did not converge in " << pb.solver.max_global_sweeps
           << " sweeps, last distance " << dist;
        throw std::runtime_error(os.str());
    }
    std::vector<double> picard_residual(K, 0.0);
    std::vector<int> picard_iterations(K, 0);
    picard_residual[K - 1] = dist;
    picard_iterations[K - 1] = sweep + 1;
    return assemble_trajectory(pb, ws, std::move(picard_residual), std::move(picard_iterations));
}

} // namespace

void ProblemSpec::validate() const {
    require(basis != nullptr, "null basis");
    params.validate();
    require(history.basis() != nullptr && same_basis(*history.basis(), *basis),
            "history basis mismatch");
    nonlin.validate();
    require(same_basis(*nonlin.basis, *basis), "nonlinearity basis mismatch");
    require(grid.is_uniform(), "the march needs a uniform grid");
    require(grid.cells() >= 1, "empty grid");
    require(history.tau() == delay.tau, "history must cover exactly [-tau, 0]");
    require(solver.picard_tol > 0.0 && solver.max_picard >= 1, "bad solver options");
}

std::span<const double> MildTrajectory::coeffs_at(std::size_t time_index) const {
    const std::size_t N = basis->size();
    return std::span<const double>(data.data() + time_index * N, N);
}

std::span<const double> MildTrajectory::forward_coeffs(std::size_t i) const {
    return coeffs_at(zero_index + i);
}

std::span<const double> MildTrajectory::forcing_at(std::size_t i) const {
    const std::size_t N = basis->size();
    return std::span<const double>(f_data.data() + i * N, N);
}

double MildTrajectory::forward_norm(std::size_t i) const { return norms[zero_index + i]; }

double MildTrajectory::sup_norm_forward() const {
    double m = 0.0;
    for (std::size_t i = 0; i < forward_count(); ++i) m = std::max(m, forward_norm(i));
    return m;
}

double MildTrajectory::max_picard_residual() const {
    double m = 0.0;
    for (double r : picard_residual) m = std::max(m, r);
    return m;
}

void MildTrajectory::read(double t, std::span<double> out) const {
    const std::size_t N = basis->size();
    require(out.size() == N, "output size mismatch");
    if (!(t >= times.front() - 1e-12 && t <= times.back() + 1e-12))
        throw std::out_of_range("trajectory read outside [-tau, T]");
    t = std::clamp(t, times.front(), times.back());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t j = (it == times.begin()) ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    j = std::min(j, times.size() - 2);
    const double theta =
        std::clamp((t - times[j]) / (times[j + 1] - times[j]), 0.0, 1.0);
    auto a = coeffs_at(j);
    auto b = coeffs_at(j + 1);
    for (std::size_t k = 0; k < N; ++k) out[k] = (1.0 - theta) * a[k] + theta * b[k];
}

MildTrajectory integrate(const ProblemSpec& problem) {
    problem.validate();
    auto table = build_resolvent_table(problem.basis, problem.params, problem.grid);
    return integrate(problem, table);
}

MildTrajectory integrate(const ProblemSpec& problem, const ResolventTable& table) {
    problem.validate();
    require(table.basis != nullptr && same_basis(*table.basis, *problem.basis),
            "table basis mismatch");
    require(table.params.alpha == problem.params.alpha &&
                table.params.gamma == problem.params.gamma,
            "table parameter mismatch");
    require(table.grid.kind() == problem.grid.kind() &&
                table.grid.cells() == problem.grid.cells() && table.grid.T() == problem.grid.T(),
            "table grid mismatch");
    return problem.solver.global_picard ? global_sweep(problem, table) : march(problem, table);
}

BoundReport residual_check(const MildTrajectory& traj, const ProblemSpec& problem,
                           double threshold) {
    problem.validate();
    const std::size_t N = problem.basis->size();
    const std::size_t K = problem.grid.size();
    const TimeGrid fine = problem.grid.refined();
    const double h2 = fine.h();
    const std::size_t K2 = fine.size();

    auto ftable = build_resolvent_table(problem.basis, problem.params, fine);
    Field xi0 = problem.history.at_zero();

    // forcing on the refined grid, reading the stored trajectory
    std::vector<double> F2(N * K2, 0.0);
    std::vector<double> v(N), fi(N);
    for (std::size_t j = 0; j < K2; ++j) {
        const double tj = fine.node(j);
        const double arg = problem.delay.delayed_arg(tj);
        traj.read(arg, v);
        eval_f(problem.nonlin, tj, v, fi);
        for (std::size_t k = 0; k < N; ++k) F2[k * K2 + j] = fi[k];
    }

    std::vector<double> discrepancy(K, 0.0);
    std::vector<double> rhs(N);
    std::vector<std::vector<double>> kernels(N);
    for (std::size_t k = 0; k < N; ++k) kernels[k] = pl_convolution_kernel(ftable.row(k));
    for (std::size_t i = 0; i < K; ++i) {
        const std::size_t j = 2 * i;
        for (std::size_t k = 0; k < N; ++k) {
            auto om = ftable.row(k);
            auto fk = std::span<const double>(F2.data() + k * K2, K2);
            rhs[k] = om[j] * xi0.coeffs[k] +
                     pl_convolve_at(om, kernels[k], fk.first(j + 1), h2, j);
        }
        discrepancy[i] = l2_diff(rhs, traj.forward_coeffs(i));
    }
    if (std::isnan(threshold))
        threshold = std::max(10.0 * ftable.max_est_error(), 100.0 * problem.solver.picard_tol);
    std::vector<double> claimed(K, threshold);
    BoundReport rep = BoundReport::make("mild_solution_residual", claimed, discrepancy, 0.0);
    rep.note = "rhs rebuilt on the 2x refined grid";
    return rep;
}

BoundReport uniqueness_probe(const ProblemSpec& problem, double perturbation) {
    problem.validate();
    if (problem.nonlin.envelope != NonlinearitySpec::Envelope::Lipschitz)
        throw std::invalid_argument("uniqueness probe needs Lipschitz metadata");
    ProblemSpec a = problem;
    a.solver.seed_perturbation = 0.0;
    ProblemSpec b = problem;
    b.solver.seed_perturbation = perturbation;
    auto table = build_resolvent_table(problem.basis, problem.params, problem.grid);
    auto ta = integrate(a, table);
    auto tb = integrate(b, table);
    const std::size_t K = problem.grid.size();
    std::vector<double> dist(K, 0.0), claimed(K, 10.0 * problem.solver.picard_tol);
    for (std::size_t i = 0; i < K; ++i)
        dist[i] = l2_diff(ta.forward_coeffs(i), tb.forward_coeffs(i));
    BoundReport rep = BoundReport::make("uniqueness_two_run_distance", claimed, dist, 0.0);
    rep.note = "same data, Picard guesses offset by " + csv::num(perturbation);
    return rep;
}

BoundReport check_norm_chain(const MildTrajectory& traj, const ProblemSpec& problem,
                             const ResolventTable* table) {
    problem.validate();
    const std::size_t K = problem.grid.size();
    std::vector<double> om1;
    double est = 0.0;
    if (table != nullptr) {
        auto row = table->row(0);
        om1.assign(row.begin(), row.end());
        est = table->est_errors[0];
    } else {
        auto s = omega_volterra(problem.params, problem.basis->lambda1(), problem.grid);
        om1 = std::move(s.values);
        est = s.est_error;
    }
    std::vector<double> fnorms(K);
    for (std::size_t i = 0; i < K; ++i) fnorms[i] = l2(traj.forcing_at(i));
    auto conv = pl_convolve(om1, fnorms, problem.grid.h());
    const double xi0 = traj.forward_norm(0);
    std::vector<double> claimed(K), measured(K);
    double scale = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        claimed[i] = om1[i] * xi0 + conv[i];
        measured[i] = traj.forward_norm(i);
        scale = std::max(scale, claimed[i]);
    }
    const double tol =
        std::max(1e-12, 10.0 * est * (xi0 + 1.0) + 1e-14 * static_cast<double>(K) * scale);
    return BoundReport::make("mild_norm_chain", claimed, measured, tol);
}

BoundReport check_apriori_sublinear(const MildTrajectory& traj, const ProblemSpec& problem) {
    problem.validate();
    if (problem.nonlin.envelope != NonlinearitySpec::Envelope::Sublinear)
        throw std::invalid_argument("a-priori majorant needs sublinear metadata");
    const std::size_t K = problem.grid.size();
    const double h = problem.grid.h();
    const double X = problem.history.sup_norm();
    std::vector<double> psi(K), claimed(K), measured(K);
    psi[0] = X;
    double running = traj.forward_norm(0);
    claimed[0] = psi[0];
    measured[0] = running;
    for (std::size_t i = 1; i < K; ++i) {
        const double p0 = problem.nonlin.p(problem.grid.node(i - 1));
        const double p1 = problem.nonlin.p(problem.grid.node(i));
        if (!(p0 >= 0.0 && p1 >= 0.0))
            throw std::invalid_argument("envelope weight p must be nonnegative");
        const double denom = 1.0 - 0.5 * h * p1;
        if (denom <= 0.0) throw std::invalid_argument("grid too coarse for the majorant");
        psi[i] = (psi[i - 1] + 0.5 * h * (p0 * (1.0 + X + psi[i - 1]) + p1 * (1.0 + X))) / denom;
        running = std::max(running, traj.forward_norm(i));
        claimed[i] = psi[i];
        measured[i] = running;
    }
    const double tol = std::max(1e-12, 1e-10 * (1.0 + psi.back()));
    return BoundReport::make("sublinear_apriori_majorant", claimed, measured, tol);
}

SmallnessResult smallness_radius(const NonlinearitySpec& nl, BasisPtr basis,
                                 const FracParams& params, double horizon,
                                 const SmallnessOptions& opts) {
    nl.validate();
    params.validate();
    require(basis != nullptr && same_basis(*basis, *nl.basis), "basis mismatch");
    require(horizon > 0.0, "horizon must be positive");
    const bool lipschitz = nl.envelope == NonlinearitySpec::Envelope::Lipschitz;
    if (!lipschitz && nl.envelope == NonlinearitySpec::Envelope::Sublinear)
        throw std::invalid_argument("smallness radius needs growth or Lipschitz metadata");

    const TimeGrid grid = TimeGrid::uniform(horizon, opts.horizon_cells);
    auto om = omega_volterra(params, basis->lambda1(), grid);
    std::vector<double> pv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        pv[i] = nl.p(grid.node(i));
        if (!(pv[i] >= 0.0)) throw std::invalid_argument("envelope weight p must be nonnegative");
    }
    auto conv = pl_convolve(om.values, pv, grid.h());
    double M = 0.0;
    for (double c : conv) M = std::max(M, c);

    const double ell = nl.ell;
    if (ell * M >= 1.0) throw std::domain_error("ell * M >= 1: no radius under this certificate");
    double zeta = opts.zeta;
    if (std::isnan(zeta)) zeta = (M > 0.0) ? 0.05 * (1.0 - ell * M) / M : 0.05;
    require(zeta > 0.0, "zeta must be positive");
    if ((ell + zeta) * M >= 1.0)
        throw std::domain_error("(ell + zeta) * M >= 1: no radius under this certificate");

    // largest prefix of the geometric r grid on which the gauge stays within
    // ell + zeta
    const double bound = ell + zeta;
    double scan = 0.0;
    const double ratio = std::pow(opts.r_max / opts.r_min,
                                  1.0 / static_cast<double>(opts.scan_points - 1));
    double r = opts.r_min;
    for (std::size_t i = 0; i < opts.scan_points; ++i, r *= ratio) {
        const double gauge = lipschitz ? nl.kappa(r) : nl.G(r) / r;
        if (gauge > bound) break;
        scan = r;
    }
    if (scan == 0.0) throw std::domain_error("gauge exceeds ell + zeta at every scanned radius");
    // the Lipschitz certificate needs the gauge controlled out to twice the
    // ball radius
    const double eta = lipschitz ? 0.5 * scan : scan;

    double factor = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = bound * conv[i];
        factor = std::min(factor, (1.0 - x) / (om.values[i] + x));
    }
    const double delta0 = eta * factor;
    SmallnessResult res;
    res.eta = eta;
    res.delta = std::min(eta, delta0);
    res.zeta = zeta;
    res.ell = ell;
    res.M = M;
    return res;
}

void write_trajectory_csv(std::ostream& os, const MildTrajectory& traj) {
    const std::size_t N = traj.basis->size();
    os << "t,norm";
    for (std::size_t k = 1; k <= N; ++k) os << ",c" << k;
    os << "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << csv::num(traj.times[i]) << ',' << csv::num(traj.norms[i]);
        auto c = traj.coeffs_at(i);
        for (std::size_t k = 0; k < N; ++k) os << ',' << csv::num(c[k]);
        os << "\n";
    }
}

} // namespace rslab
