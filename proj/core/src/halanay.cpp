#include "rslab/halanay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
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

bool all_zero(std::span<const double> xs) {
    for (double x : xs)
        if (x != 0.0) return false;
    return true;
}

double max_of(std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, x);
    return m;
}

} // namespace

void HalanayInstance::validate() const {
    params.validate();
    require(std::isfinite(mu) && mu > 0.0, "mu must be positive");
    require(std::isfinite(a) && a >= 0.0, "a must be nonnegative");
    require(grid.is_uniform() && grid.cells() >= 1, "needs a nonempty uniform grid");
    require(delay.tau >= 0.0, "negative delay span");
    require(delay.tau == 0.0 ? psi.size() == 1 : psi.size() >= 2,
            "psi must sample [-tau, 0] with at least its endpoints");
    for (double x : psi) require(std::isfinite(x) && x >= 0.0, "psi must be nonnegative");
    require(v.size() == grid.size(), "v must live on the forward grid");
    require(v[0] == psi.back(), "v(0) must splice onto psi(0)");
    for (double x : v) require(std::isfinite(x) && x >= 0.0, "v must be nonnegative");
    require(b.size() == grid.size(), "b must live on the forward grid");
    for (std::size_t i = 0; i < b.size(); ++i) {
        require(std::isfinite(b[i]) && b[i] >= 0.0, "b must be nonnegative");
        if (i > 0) require(b[i] >= b[i - 1], "b must be nondecreasing");
    }
}

double HalanayInstance::sup_psi() const {
    double m = 0.0;
    for (double x : psi) m = std::max(m, x);
    return m;
}

double HalanayInstance::value_at(double t) const {
    if (t >= 0.0) {
        if (t > grid.T() * (1.0 + 1e-12))
            throw std::out_of_range("read beyond the forward horizon");
        const double h = grid.h();
        std::size_t j = std::min(static_cast<std::size_t>(t / h), grid.size() - 2);
        const double theta = std::clamp(t / h - static_cast<double>(j), 0.0, 1.0);
        return (1.0 - theta) * v[j] + theta * v[j + 1];
    }
    if (t < -delay.tau - 1e-12 * (1.0 + delay.tau))
        throw std::out_of_range("read before -tau");
    if (psi.size() == 1) return psi[0];
    const double step = delay.tau / static_cast<double>(psi.size() - 1);
    const double x = std::clamp((t + delay.tau) / step, 0.0, double(psi.size() - 1));
    std::size_t j = std::min(static_cast<std::size_t>(x), psi.size() - 2);
    const double theta = std::clamp(x - static_cast<double>(j), 0.0, 1.0);
    return (1.0 - theta) * psi[j] + theta * psi[j + 1];
}

double HalanayInstance::window_sup(double t) const {
    const double lo = delay.delayed_arg(t);
    double m = std::max(value_at(lo), value_at(t));
    if (lo < 0.0 && psi.size() > 1) {
        const double step = delay.tau / static_cast<double>(psi.size() - 1);
        for (std::size_t j = 0; j < psi.size(); ++j) {
            const double s = -delay.tau + step * static_cast<double>(j);
            if (s > lo && s < t) m = std::max(m, psi[j]);
        }
    }
    const double h = grid.h();
    const std::size_t i_hi = std::min(static_cast<std::size_t>(std::max(t, 0.0) / h) + 1,
                                      grid.size() - 1);
    for (std::size_t i = 0; i <= i_hi; ++i) {
        const double s = grid.node(i);
        if (s > lo && s < t) m = std::max(m, v[i]);
    }
    return m;
}

BoundReport verify_premise(const HalanayInstance& inst) {
    inst.validate();
    const std::size_t K = inst.grid.size();
    auto omega = omega_volterra(inst.params, inst.mu, inst.grid);
    std::vector<double> g(K);
    for (std::size_t i = 0; i < K; ++i)
        g[i] = inst.a * inst.window_sup(inst.grid.node(i)) + inst.b[i];
    auto conv = pl_convolve(omega.values, g, inst.grid.h());
    std::vector<double> claimed(K);
    for (std::size_t i = 0; i < K; ++i) claimed[i] = omega.values[i] * inst.v0() + conv[i];
    // the rhs reuses the instance grid and weights, so the comparison is
    // discrete-exact; no quadrature allowance belongs here
    const double tol = 1e-9 * (1.0 + max_of(claimed));
    return BoundReport::make("halanay_premise", std::move(claimed), inst.v, tol,
                             "rhs rebuilt with the same product-integration weights");
}

BoundReport bound_global(const HalanayInstance& inst, const BoundReport& premise) {
    inst.validate();
    if (!(inst.a < inst.mu)) throw std::domain_error("global bound needs a < mu");
    if (premise.skipped || !premise.pass)
        return BoundReport::skip("halanay_global_bound", "premise not established");
    const std::size_t K = inst.grid.size();
    auto omega = omega_volterra(inst.params, inst.mu, inst.grid);
    auto convb = pl_convolve(omega.values, inst.b, inst.grid.h());
    const double fac = inst.mu / (inst.mu - inst.a);
    std::vector<double> claimed(K);
    for (std::size_t i = 0; i < K; ++i)
        claimed[i] = fac * (inst.v0() + convb[i]) + inst.sup_psi();
    const double tol = 1e-9 * (1.0 + max_of(claimed));
    return BoundReport::make("halanay_global_bound", std::move(claimed), inst.v, tol);
}

BoundReport bound_limsup(const HalanayInstance& inst, double tail_start, double decay_tol) {
    inst.validate();
    if (!(inst.a < inst.mu)) throw std::domain_error("tail bound needs a < mu");
    require(tail_start > 0.0 && tail_start < inst.grid.T(),
            "tail must start inside the horizon");
    if (inst.a > 0.0) {
        using Kind = DelaySpec::Kind;
        const bool bounded_lag = inst.delay.kind == Kind::Constant ||
                                 (inst.delay.kind == Kind::Proportional && inst.delay.q == 1.0);
        if (!bounded_lag)
            return BoundReport::skip("halanay_tail_bound",
                                     "memory window certificate needs a bounded lag");
        require(tail_start >= 4.0 * inst.delay.tau,
                "tail start must leave twice the delay window before it");
    }

    const std::size_t K = inst.grid.size();
    const double h = inst.grid.h();
    auto omega = omega_volterra(inst.params, inst.mu, inst.grid);
    auto convb = pl_convolve(omega.values, inst.b, h);
    const double fac = inst.mu / (inst.mu - inst.a);
    const double sup_b_conv = max_of(convb);
    const double m_glob = fac * (inst.v0() + sup_b_conv) + inst.sup_psi();

    // transient terms frozen at tail_start / 2: the v(0) part decays with
    // omega, the pre-tail window memory with the kernel remainder
    const std::size_t jh = std::min(static_cast<std::size_t>(0.5 * tail_start / h), K - 1);
    double trapz = 0.0;
    for (std::size_t i = 1; i <= jh; ++i)
        trapz += 0.5 * h * (omega.values[i - 1] + omega.values[i]);
    const double remainder = std::max(0.0, 1.0 / inst.mu - trapz) +
                             omega.est_error * inst.grid.T() +
                             0.5 * h * (1.0 - omega.values[std::min<std::size_t>(1, K - 1)]);
    const double slack =
        fac * (inst.v0() * omega.values[jh] + inst.a * m_glob * remainder);
    const double ceiling = fac * sup_b_conv + slack;

    std::size_t i_start = static_cast<std::size_t>(std::ceil(tail_start / h - 1e-9));
    i_start = std::min(std::max<std::size_t>(i_start, 1), K - 1);
    std::vector<double> claimed, measured;
    for (std::size_t i = i_start; i < K; ++i) {
        claimed.push_back(ceiling);
        measured.push_back(inst.v[i]);
    }
    std::string note = "slack=" + csv::num(slack) + " (v0 decay " +
                       csv::num(fac * inst.v0() * omega.values[jh]) + ", memory " +
                       csv::num(fac * inst.a * m_glob * remainder) + ")";
    if (all_zero(inst.b)) {
        claimed.push_back(decay_tol * inst.sup_psi());
        measured.push_back(inst.v.back());
        note += "; final entry gates the decay v(T) <= decay_tol * sup psi";
    }
    const double tol = 1e-9 * (1.0 + ceiling);
    return BoundReport::make("halanay_tail_bound", std::move(claimed), std::move(measured), tol,
                             std::move(note));
}

HalanayInstance build_extremal(double mu, double a, const FracParams& params,
                               const DelaySpec& delay, const TimeGrid& grid,
                               std::span<const double> psi, std::span<const double> b,
                               ExtremalStats* stats) {
    if (!(a < mu)) throw std::domain_error("extremal construction needs a < mu");
    HalanayInstance inst;
    inst.mu = mu;
    inst.a = a;
    inst.params = params;
    inst.delay = delay;
    inst.grid = grid;
    inst.psi.assign(psi.begin(), psi.end());
    inst.b.assign(b.begin(), b.end());
    require(!inst.psi.empty(), "psi must not be empty");
    inst.v.assign(grid.size(), inst.psi.back());
    inst.validate();

    const std::size_t K = grid.size();
    const double h = grid.h();
    auto omega = omega_volterra(params, mu, grid);
    auto kernel = pl_convolution_kernel(omega.values);
    const double tol =
        1e-12 * (1.0 + inst.sup_psi() + mu / (mu - a) * (inst.v0() + max_of(b) / mu));

    std::vector<double> g(K), conv(K), vnew(K);
    double prev_diff = -1.0;
    ExtremalStats st;
    bool converged = false;
    const int max_sweeps = 500;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < K; ++i)
            g[i] = a * inst.window_sup(grid.node(i)) + inst.b[i];
        pl_convolve(omega.values, kernel, g, h, conv);
        double diff = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            vnew[i] = omega.values[i] * inst.v0() + conv[i];
            diff = std::max(diff, std::abs(vnew[i] - inst.v[i]));
        }
        inst.v.swap(vnew);
        st.sweeps = sweep;
        st.final_diff = diff;
        if (prev_diff > 0.0 && diff > 0.0)
            st.max_contraction = std::max(st.max_contraction, diff / prev_diff);
        prev_diff = diff;
        if (diff < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "extremal sweeps did not converge (a/mu = " << a / mu << ", last change "
           << st.final_diff << ")";
        throw std::runtime_error(os.str());
    }
    if (stats != nullptr) *stats = st;
    return inst;
}

void write_instance_csv(std::ostream& os, const HalanayInstance& inst) {
    inst.validate();
    using Kind = DelaySpec::Kind;
    if (inst.delay.kind == Kind::Custom)
        throw std::invalid_argument("custom delays do not round trip through text");
    os << "# mu=" << csv::num(inst.mu) << " a=" << csv::num(inst.a)
       << " alpha=" << csv::num(inst.params.alpha) << " gamma=" << csv::num(inst.params.gamma)
       << " tau=" << csv::num(inst.delay.tau)
       << " delay=" << (inst.delay.kind == Kind::Constant ? "constant" : "proportional")
       << " q=" << csv::num(inst.delay.q) << " T=" << csv::num(inst.grid.T())
       << " cells=" << inst.grid.cells() << " psi_points=" << inst.psi.size() << "\n";
    os << "t,v,b\n";
    const std::size_t P = inst.psi.size();
    if (P > 1) {
        const double step = inst.delay.tau / static_cast<double>(P - 1);
        for (std::size_t j = 0; j + 1 < P; ++j) {
            const double s = -inst.delay.tau + step * static_cast<double>(j);
            os << csv::num(s) << ',' << csv::num(inst.psi[j]) << ",0\n";
        }
    }
    for (std::size_t i = 0; i < inst.grid.size(); ++i)
        os << csv::num(inst.grid.node(i)) << ',' << csv::num(inst.v[i]) << ','
           << csv::num(inst.b[i]) << "\n";
}

HalanayInstance read_instance_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.empty() || line[0] != '#')
        throw std::invalid_argument("missing instance metadata line");
    std::map<std::string, std::string> meta;
    {
        std::istringstream ls(line.substr(1));
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            meta[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
    }
    auto get = [&meta](const char* key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end())
            throw std::invalid_argument(std::string("metadata misses ") + key);
        return it->second;
    };
    HalanayInstance inst;
    inst.mu = std::stod(get("mu"));
    inst.a = std::stod(get("a"));
    inst.params = FracParams{std::stod(get("alpha")), std::stod(get("gamma"))};
    const double tau = std::stod(get("tau"));
    inst.delay = get("delay") == "constant" ? DelaySpec::constant(tau)
                                            : DelaySpec::proportional(std::stod(get("q")), tau);
    inst.grid = TimeGrid::uniform(std::stod(get("T")),
                                  static_cast<std::size_t>(std::stoul(get("cells"))));
    const std::size_t P = static_cast<std::size_t>(std::stoul(get("psi_points")));

    if (!std::getline(is, line) || line != "t,v,b")
        throw std::invalid_argument("missing t,v,b header");
    std::vector<std::array<double, 3>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::array<double, 3> row{};
        char comma = 0;
        if (!(ls >> row[0] >> comma >> row[1] >> comma >> row[2]))
            throw std::invalid_argument("malformed data row");
        rows.push_back(row);
    }
    const std::size_t hist = P > 1 ? P - 1 : 0;
    if (rows.size() != hist + inst.grid.size())
        throw std::invalid_argument("row count does not match the declared grids");
    inst.psi.resize(P);
    for (std::size_t j = 0; j < hist; ++j) inst.psi[j] = rows[j][1];
    inst.v.resize(inst.grid.size());
    inst.b.resize(inst.grid.size());
    for (std::size_t i = 0; i < inst.grid.size(); ++i) {
        inst.v[i] = rows[hist + i][1];
        inst.b[i] = rows[hist + i][2];
    }
    inst.psi[P - 1] = inst.v[0];
    inst.validate();
    return inst;
}

} // namespace rslab
