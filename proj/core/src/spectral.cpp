#include "rslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rslab/relaxation.hpp"

namespace rslab {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

} // namespace

Domain Domain::interval(double L) {
    Domain d{Kind::Interval, L, 0.0};
    d.validate();
    return d;
}

Domain Domain::rectangle(double Lx, double Ly) {
    Domain d{Kind::Rectangle, Lx, Ly};
    d.validate();
    return d;
}

void Domain::validate() const {
    require(std::isfinite(Lx) && Lx > 0.0, "domain length Lx must be positive");
    if (kind == Kind::Rectangle)
        require(std::isfinite(Ly) && Ly > 0.0, "domain length Ly must be positive");
}

bool operator==(const Domain& a, const Domain& b) {
    if (a.kind != b.kind || a.Lx != b.Lx) return false;
    return a.kind == Domain::Kind::Interval || a.Ly == b.Ly;
}

EigenBasis::EigenBasis(Domain domain, std::size_t N) : domain_(domain) {
    domain_.validate();
    require(N >= 1, "basis truncation must be at least 1");
    if (!domain_.two_dimensional()) {
        lambdas_.reserve(N);
        modes_.reserve(N);
        for (std::size_t n = 1; n <= N; ++n) {
            const double w = static_cast<double>(n) * kPi / domain_.Lx;
            lambdas_.push_back(w * w);
            modes_.push_back(Mode{0, n});
        }
        return;
    }
    // Any candidate with m > N (or n > N) already has N smaller eigenvalues
    // below it along its own axis, so the N x N block contains the N smallest.
    struct Cand {
        double lambda;
        std::size_t m, n;
    };
    std::vector<Cand> cands;
    cands.reserve(N * N);
    for (std::size_t m = 1; m <= N; ++m) {
        for (std::size_t n = 1; n <= N; ++n) {
            const double wx = static_cast<double>(m) * kPi / domain_.Lx;
            const double wy = static_cast<double>(n) * kPi / domain_.Ly;
            cands.push_back(Cand{wx * wx + wy * wy, m, n});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.lambda != b.lambda) return a.lambda < b.lambda;
        if (a.m != b.m) return a.m < b.m;
        return a.n < b.n;
    });
    lambdas_.reserve(N);
    modes_.reserve(N);
    for (std::size_t k = 0; k < N; ++k) {
        lambdas_.push_back(cands[k].lambda);
        modes_.push_back(Mode{cands[k].m, cands[k].n});
    }
}

double EigenBasis::phi(std::size_t k, double x) const {
    if (domain_.two_dimensional())
        throw std::invalid_argument("2D basis needs both coordinates");
    const Mode md = modes_[k];
    return std::sqrt(2.0 / domain_.Lx) *
           std::sin(static_cast<double>(md.n) * kPi * x / domain_.Lx);
}

double EigenBasis::phi(std::size_t k, double x, double y) const {
    if (!domain_.two_dimensional())
        throw std::invalid_argument("1D basis takes a single coordinate");
    const Mode md = modes_[k];
    return std::sqrt(4.0 / (domain_.Lx * domain_.Ly)) *
           std::sin(static_cast<double>(md.m) * kPi * x / domain_.Lx) *
           std::sin(static_cast<double>(md.n) * kPi * y / domain_.Ly);
}

BasisPtr build_basis(const Domain& domain, std::size_t N) {
    return std::make_shared<EigenBasis>(domain, N);
}

bool same_basis(const EigenBasis& a, const EigenBasis& b) {
    return a.domain() == b.domain() && a.size() == b.size();
}

double Field::norm() const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return std::sqrt(s);
}

Field zero_field(BasisPtr basis) {
    require(basis != nullptr, "null basis");
    return Field{basis, std::vector<double>(basis->size(), 0.0)};
}

namespace {

// Largest per-axis frequencies present in the basis.
std::pair<std::size_t, std::size_t> max_freqs(const EigenBasis& b) {
    std::size_t mm = 0, mn = 0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        mm = std::max(mm, b.mode(k).m);
        mn = std::max(mn, b.mode(k).n);
    }
    return {mm, mn};
}

// sin(f * pi * j / cells) for f = 0..fmax, j = 0..cells.
std::vector<std::vector<double>> sine_table(std::size_t fmax, std::size_t cells) {
    std::vector<std::vector<double>> s(fmax + 1, std::vector<double>(cells + 1));
    for (std::size_t f = 0; f <= fmax; ++f)
        for (std::size_t j = 0; j <= cells; ++j)
            s[f][j] = std::sin(static_cast<double>(f) * kPi * static_cast<double>(j) /
                               static_cast<double>(cells));
    return s;
}

} // namespace

Field project(BasisPtr basis, std::span<const double> samples, ProjectInfo* info) {
    require(basis != nullptr, "null basis");
    require(!basis->domain().two_dimensional(), "1D project on a 2D basis");
    require(samples.size() >= 2, "need at least two samples");
    const std::size_t cells = samples.size() - 1;
    const auto [mm, mn] = max_freqs(*basis);
    (void)mm;
    require(mn < cells, "mesh cannot represent the highest basis mode");

    const double L = basis->domain().Lx;
    const double w = L / static_cast<double>(cells);
    auto sins = sine_table(mn, cells);
    const double scale = std::sqrt(2.0 / L);

    Field f = zero_field(basis);
    for (std::size_t k = 0; k < basis->size(); ++k) {
        const auto& sk = sins[basis->mode(k).n];
        double acc = 0.0;
        for (std::size_t j = 1; j < cells; ++j) acc += samples[j] * sk[j];
        f.coeffs[k] = w * scale * acc;
    }
    if (info != nullptr) {
        info->under_resolved = cells < 2 * mn;
        double r2 = 0.0;
        for (std::size_t j = 0; j <= cells; ++j) {
            double fit = 0.0;
            for (std::size_t k = 0; k < basis->size(); ++k)
                fit += f.coeffs[k] * scale * sins[basis->mode(k).n][j];
            const double r = samples[j] - fit;
            const double wq = (j == 0 || j == cells) ? 0.5 * w : w;
            r2 += wq * r * r;
        }
        info->aliasing_estimate = std::sqrt(r2);
    }
    return f;
}

Field project(BasisPtr basis, std::span<const double> samples, std::size_t cells_x,
              std::size_t cells_y, ProjectInfo* info) {
    require(basis != nullptr, "null basis");
    require(basis->domain().two_dimensional(), "2D project on a 1D basis");
    require(cells_x >= 2 && cells_y >= 2, "need at least two cells per axis");
    require(samples.size() == (cells_x + 1) * (cells_y + 1), "sample count does not match mesh");
    const auto [mm, mn] = max_freqs(*basis);
    require(mm < cells_x && mn < cells_y, "mesh cannot represent the highest basis mode");

    const double Lx = basis->domain().Lx, Ly = basis->domain().Ly;
    const double w = (Lx / static_cast<double>(cells_x)) * (Ly / static_cast<double>(cells_y));
    auto sx = sine_table(mm, cells_x);
    auto sy = sine_table(mn, cells_y);
    const double scale = std::sqrt(4.0 / (Lx * Ly));
    auto at = [&](std::size_t jx, std::size_t jy) { return samples[jx * (cells_y + 1) + jy]; };

    Field f = zero_field(basis);
    for (std::size_t k = 0; k < basis->size(); ++k) {
        const auto& sm = sx[basis->mode(k).m];
        const auto& sn = sy[basis->mode(k).n];
        double acc = 0.0;
        for (std::size_t jx = 1; jx < cells_x; ++jx) {
            double row = 0.0;
            for (std::size_t jy = 1; jy < cells_y; ++jy) row += at(jx, jy) * sn[jy];
            acc += row * sm[jx];
        }
        f.coeffs[k] = w * scale * acc;
    }
    if (info != nullptr) {
        info->under_resolved = cells_x < 2 * mm || cells_y < 2 * mn;
        double r2 = 0.0;
        for (std::size_t jx = 0; jx <= cells_x; ++jx) {
            for (std::size_t jy = 0; jy <= cells_y; ++jy) {
                double fit = 0.0;
                for (std::size_t k = 0; k < basis->size(); ++k)
                    fit += f.coeffs[k] * scale * sx[basis->mode(k).m][jx] *
                           sy[basis->mode(k).n][jy];
                const double r = at(jx, jy) - fit;
                double wq = w;
                if (jx == 0 || jx == cells_x) wq *= 0.5;
                if (jy == 0 || jy == cells_y) wq *= 0.5;
                r2 += wq * r * r;
            }
        }
        info->aliasing_estimate = std::sqrt(r2);
    }
    return f;
}

double synthesize_at(const Field& f, double x) {
    require(f.basis != nullptr, "null basis");
    require(!f.basis->domain().two_dimensional(), "2D field needs both coordinates");
    require(x >= 0.0 && x <= f.basis->domain().Lx, "point outside domain");
    double s = 0.0;
    for (std::size_t k = 0; k < f.coeffs.size(); ++k) s += f.coeffs[k] * f.basis->phi(k, x);
    return s;
}

double synthesize_at(const Field& f, double x, double y) {
    require(f.basis != nullptr, "null basis");
    require(f.basis->domain().two_dimensional(), "1D field takes a single coordinate");
    require(x >= 0.0 && x <= f.basis->domain().Lx, "point outside domain");
    require(y >= 0.0 && y <= f.basis->domain().Ly, "point outside domain");
    double s = 0.0;
    for (std::size_t k = 0; k < f.coeffs.size(); ++k) s += f.coeffs[k] * f.basis->phi(k, x, y);
    return s;
}

std::vector<double> synthesize(const Field& f, std::span<const double> xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = synthesize_at(f, xs[i]);
    return out;
}

std::vector<double> synthesize_on_mesh(const Field& f, std::size_t cells) {
    require(f.basis != nullptr, "null basis");
    require(!f.basis->domain().two_dimensional(), "2D field needs a tensor mesh");
    require(cells >= 1, "need at least one cell");
    const double L = f.basis->domain().Lx;
    std::vector<double> out(cells + 1, 0.0);
    for (std::size_t j = 0; j <= cells; ++j) {
        const double x = L * static_cast<double>(j) / static_cast<double>(cells);
        out[j] = synthesize_at(f, x);
    }
    return out;
}

std::vector<double> synthesize_on_mesh(const Field& f, std::size_t cells_x, std::size_t cells_y) {
    require(f.basis != nullptr, "null basis");
    require(f.basis->domain().two_dimensional(), "1D field needs a line mesh");
    require(cells_x >= 1 && cells_y >= 1, "need at least one cell per axis");
    const double Lx = f.basis->domain().Lx, Ly = f.basis->domain().Ly;
    std::vector<double> out((cells_x + 1) * (cells_y + 1), 0.0);
    for (std::size_t jx = 0; jx <= cells_x; ++jx) {
        const double x = Lx * static_cast<double>(jx) / static_cast<double>(cells_x);
        for (std::size_t jy = 0; jy <= cells_y; ++jy) {
            const double y = Ly * static_cast<double>(jy) / static_cast<double>(cells_y);
            out[jx * (cells_y + 1) + jy] = synthesize_at(f, x, y);
        }
    }
    return out;
}

std::span<const double> ResolventTable::row(std::size_t mode) const {
    const std::size_t K = grid.size();
    return std::span<const double>(table.data() + mode * K, K);
}

double ResolventTable::max_est_error() const {
    double m = 0.0;
    for (double e : est_errors) m = std::max(m, e);
    return m;
}

ResolventTable build_resolvent_table(BasisPtr basis, const FracParams& params,
                                     const TimeGrid& grid) {
    require(basis != nullptr, "null basis");
    params.validate();
    const std::size_t N = basis->size();
    const std::size_t K = grid.size();
    ResolventTable tbl{basis, params, grid, std::vector<double>(N * K, 0.0),
                       std::vector<double>(N, 0.0)};
    for (std::size_t k = 0; k < N; ++k) {
        auto s = omega_volterra(params, basis->lambda(k), grid);
        std::copy(s.values.begin(), s.values.end(), tbl.table.begin() + k * K);
        tbl.est_errors[k] = s.est_error;
    }
    // mu-monotonicity: the slowest mode bounds every faster one.
    for (std::size_t k = 1; k < N; ++k) {
        const double tol = 10.0 * (tbl.est_errors[0] + tbl.est_errors[k]) + 1e-12;
        for (std::size_t i = 0; i < K; ++i) {
            if (tbl.table[k * K + i] > tbl.table[i] + tol)
                throw std::runtime_error("resolvent table violates mode-1 domination");
        }
    }
    return tbl;
}

Field apply_resolvent(const ResolventTable& table, std::size_t t_index, const Field& v) {
    require(table.basis != nullptr && v.basis != nullptr, "null basis");
    require(same_basis(*table.basis, *v.basis), "basis mismatch");
    require(t_index < table.grid.size(), "time index out of range");
    const std::size_t K = table.grid.size();
    Field out = v;
    for (std::size_t k = 0; k < out.coeffs.size(); ++k)
        out.coeffs[k] *= table.table[k * K + t_index];
    return out;
}

std::span<double> FieldSeries::at(std::size_t i) {
    const std::size_t N = basis->size();
    return std::span<double>(data.data() + i * N, N);
}

std::span<const double> FieldSeries::at(std::size_t i) const {
    const std::size_t N = basis->size();
    return std::span<const double>(data.data() + i * N, N);
}

Field FieldSeries::field_at(std::size_t i) const {
    auto s = at(i);
    return Field{basis, std::vector<double>(s.begin(), s.end())};
}

double FieldSeries::norm_at(std::size_t i) const {
    double s2 = 0.0;
    for (double c : at(i)) s2 += c * c;
    return std::sqrt(s2);
}

FieldSeries zero_series(BasisPtr basis, const TimeGrid& grid) {
    require(basis != nullptr, "null basis");
    return FieldSeries{basis, grid, std::vector<double>(basis->size() * grid.size(), 0.0)};
}

FieldSeries cauchy_convolution(const ResolventTable& table, const FieldSeries& g) {
    require(table.basis != nullptr && g.basis != nullptr, "null basis");
    require(same_basis(*table.basis, *g.basis), "basis mismatch");
    require(table.grid.is_uniform(), "uniform grid required");
    require(table.grid.kind() == g.grid.kind() && table.grid.cells() == g.grid.cells() &&
                table.grid.T() == g.grid.T(),
            "grid mismatch");
    const std::size_t N = table.basis->size();
    const std::size_t K = table.grid.size();
    const double h = table.grid.h();

    FieldSeries out = zero_series(table.basis, table.grid);
    std::vector<double> gk(K), qk(K);
    for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t i = 0; i < K; ++i) gk[i] = g.data[i * N + k];
        const auto kernel = pl_convolution_kernel(table.row(k));
        pl_convolve(table.row(k), kernel, gk, h, qk);
        for (std::size_t i = 0; i < K; ++i) out.data[i * N + k] = qk[i];
    }
    return out;
}

double tail_decay_bound(const FracParams& params, double lambda, double t) {
    require(lambda > 0.0, "lambda must be positive");
    if (t <= 0.0) return 1.0;
    const double denom = lambda * (t + params.gamma * g_kernel(2.0 - params.alpha, t));
    return std::min(1.0, 1.0 / denom);
}

BoundReport check_resolvent_tail(const ResolventTable& table) {
    const std::size_t N = table.basis->size();
    const std::size_t K = table.grid.size();
    std::vector<double> claimed, measured;
    claimed.reserve(K - 1);
    measured.reserve(K - 1);
    const double lam = table.basis->lambda(N - 1);
    for (std::size_t i = 1; i < K; ++i) {
        claimed.push_back(tail_decay_bound(table.params, lam, table.grid.node(i)));
        measured.push_back(table.table[(N - 1) * K + i]);
    }
    const double tol = std::max(1e-12, 10.0 * table.est_errors[N - 1]);
    return BoundReport::make("resolvent_tail", claimed, measured, tol);
}

} // namespace rslab
