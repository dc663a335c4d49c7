#include "rslab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "rslab/csv.hpp"
#include "rslab/relaxation.hpp"

namespace rslab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double stod_all(const std::string& s) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return x;
}

// Accepts plain decimals plus pi literals: pi, 2pi, 2*pi, pi/3.
double parse_number(const std::string& raw) {
    std::string s = trim(raw);
    auto pos = s.find("pi");
    if (pos == std::string::npos) return stod_all(s);
    double mult = 1.0;
    double div = 1.0;
    std::string pre = trim(s.substr(0, pos));
    std::string post = trim(s.substr(pos + 2));
    if (!pre.empty()) {
        if (pre.back() == '*') pre = trim(pre.substr(0, pre.size() - 1));
        mult = stod_all(pre);
    }
    if (!post.empty()) {
        if (post.front() != '/') throw std::invalid_argument("bad pi literal: '" + raw + "'");
        div = stod_all(trim(post.substr(1)));
    }
    return mult * kPi / div;
}

std::vector<double> parse_list(const std::string& raw) {
    std::vector<double> out;
    std::string s = trim(raw);
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
    return out;
}

std::uint64_t parse_u64(const std::string& raw) {
    std::string s = trim(raw);
    std::size_t used = 0;
    std::uint64_t x = 0;
    try {
        x = std::stoull(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("not an unsigned integer: '" + s + "'");
    }
    if (used != s.size()) throw std::invalid_argument("not an unsigned integer: '" + s + "'");
    return x;
}

std::string fmt(double x) { return csv::num(x); }

// Keeps at most ~512 points of a node series; the last node is always kept.
std::vector<double> decimate(std::span<const double> v) {
    std::vector<double> out;
    if (v.empty()) return out;
    std::size_t stride = std::max<std::size_t>(1, (v.size() + 511) / 512);
    for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
    if ((v.size() - 1) % stride != 0) out.push_back(v.back());
    return out;
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

void write_traj_csv(const ExperimentConfig& cfg, const std::string& stem,
                    const MildTrajectory& traj) {
    if (cfg.out_dir.empty()) return;
    ensure_dir(cfg.out_dir);
    std::ofstream os(std::filesystem::path(cfg.out_dir) / (stem + ".csv"));
    if (!os) throw std::runtime_error("cannot write trajectory csv in " + cfg.out_dir);
    write_trajectory_csv(os, traj);
}

std::size_t node_index_at(const TimeGrid& grid, double t) {
    double h = grid.node(1) - grid.node(0);
    auto i = static_cast<std::size_t>(std::llround(t / h));
    return std::min(i, grid.size() - 1);
}

std::vector<double> forward_norms(const MildTrajectory& traj) {
    std::vector<double> v(traj.forward_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = traj.forward_norm(i);
    return v;
}

// Scalar comparison instance fed with a measured norm history: v_i = ||u(t_i)||
// against the mu = lambda_1 relaxation premise with forcing envelope b.
HalanayInstance feed_instance(const MildTrajectory& traj, const ExperimentConfig& cfg,
                              double mu, double a, const DelaySpec& delay,
                              std::vector<double> b) {
    HalanayInstance inst;
    inst.mu = mu;
    inst.a = a;
    inst.params = cfg.params;
    inst.delay = delay;
    inst.grid = traj.grid;
    inst.v = forward_norms(traj);
    if (delay.tau == 0.0)
        inst.psi = {inst.v[0]};
    else
        inst.psi = {inst.v[0], inst.v[0]}; // constant history
    inst.b = std::move(b);
    return inst;
}

void append_report(RunRecord& rec, BoundReport rep, const std::string& suffix = {}) {
    rep.name += suffix;
    rec.reports.push_back(std::move(rep));
}

void push_series(RunRecord& rec, const std::string& name, std::span<const double> v) {
    rec.series.emplace_back(name, decimate(v));
}

RunRecord start_record(const ExperimentConfig& cfg) {
    RunRecord rec;
    rec.experiment = ExperimentConfig::kind_name(cfg.kind);
    rec.seed = cfg.seed;
    rec.config_echo = cfg.echo;
    return rec;
}

RunRecord refuse(RunRecord rec, std::string why) {
    rec.refused = true;
    rec.refusal = std::move(why);
    rec.finalize();
    return rec;
}

} // namespace

// ---------------------------------------------------------------------------
// config

ExperimentConfig::Kind ExperimentConfig::kind_from_name(const std::string& name) {
    if (name == "dissipativity") return Kind::Dissipativity;
    if (name == "asymptotic_stability") return Kind::AsymptoticStability;
    if (name == "decay_family") return Kind::DecayFamily;
    if (name == "halanay_suite") return Kind::HalanaySuite;
    if (name == "relaxation_suite") return Kind::RelaxationSuite;
    throw std::invalid_argument("unknown experiment kind: '" + name + "'");
}

std::string ExperimentConfig::kind_name(Kind kind) {
    switch (kind) {
        case Kind::Dissipativity: return "dissipativity";
        case Kind::AsymptoticStability: return "asymptotic_stability";
        case Kind::DecayFamily: return "decay_family";
        case Kind::HalanaySuite: return "halanay_suite";
        case Kind::RelaxationSuite: return "relaxation_suite";
    }
    throw std::logic_error("unreachable");
}

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
    ExperimentConfig cfg;
    std::string domain_kind = "interval";
    double Lx = cfg.domain.Lx;
    double Ly = 1.0;
    std::string delay_kind = "constant";
    double tau = 0.0;
    double q = 1.0;

    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line has no '=': '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        // the output directory is a destination, not an experiment parameter;
        // keeping it out of the echo makes records byte-comparable across runs
        if (key != "out") cfg.echo.emplace_back(key, val);

        if (key == "experiment.kind") cfg.kind = kind_from_name(val);
        else if (key == "model.alpha") cfg.params.alpha = parse_number(val);
        else if (key == "model.gamma") cfg.params.gamma = parse_number(val);
        else if (key == "domain.kind") domain_kind = val;
        else if (key == "domain.L" || key == "domain.Lx") Lx = parse_number(val);
        else if (key == "domain.Ly") Ly = parse_number(val);
        else if (key == "domain.N") cfg.modes = static_cast<std::size_t>(parse_u64(val));
        else if (key == "delay.kind") delay_kind = val;
        else if (key == "delay.tau") tau = parse_number(val);
        else if (key == "delay.q") q = parse_number(val);
        else if (key == "nonlin.kind") cfg.nonlin_kind = val;
        else if (key == "nonlin.p0") cfg.nonlin_p0 = parse_number(val);
        else if (key == "nonlin.c") cfg.nonlin_c = parse_number(val);
        else if (key == "grid.h") cfg.grid_h = parse_number(val);
        else if (key == "grid.T") cfg.horizon = parse_number(val);
        else if (key == "xi.norm") cfg.xi_norm = parse_number(val);
        else if (key == "xi.scales") cfg.xi_scales = parse_list(val);
        else if (key == "sweep.q") cfg.q_values = parse_list(val);
        else if (key == "sweep.alphas") cfg.alphas = parse_list(val);
        else if (key == "sweep.gammas") cfg.gammas = parse_list(val);
        else if (key == "sweep.mus") cfg.mus = parse_list(val);
        else if (key == "decay.tol") cfg.decay_tol = parse_number(val);
        else if (key == "seed") cfg.seed = parse_u64(val);
        else if (key == "out") cfg.out_dir = val;
        else throw std::invalid_argument("unknown config key: '" + key + "'");
    }

    if (domain_kind == "interval") cfg.domain = Domain::interval(Lx);
    else if (domain_kind == "rectangle") cfg.domain = Domain::rectangle(Lx, Ly);
    else throw std::invalid_argument("unknown domain kind: '" + domain_kind + "'");

    if (delay_kind == "constant") cfg.delay = DelaySpec::constant(tau);
    else if (delay_kind == "proportional") cfg.delay = DelaySpec::proportional(q, tau);
    else throw std::invalid_argument("unknown delay kind: '" + delay_kind + "'");

    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config: " + path);
    return parse(is);
}

void ExperimentConfig::validate() const {
    params.validate();
    domain.validate();
    if (modes == 0) throw std::invalid_argument("domain.N must be positive");
    if (!(grid_h > 0.0)) throw std::invalid_argument("grid.h must be positive");
    if (!(horizon > grid_h)) throw std::invalid_argument("grid.T must exceed grid.h");
    if (!(xi_norm >= 0.0)) throw std::invalid_argument("xi.norm must be nonnegative");
    if (!(decay_tol > 0.0)) throw std::invalid_argument("decay.tol must be positive");
    for (double s : xi_scales)
        if (!(s > 0.0)) throw std::invalid_argument("xi.scales entries must be positive");
    for (double qq : q_values)
        if (!(qq > 0.0) || qq > 1.0)
            throw std::invalid_argument("sweep.q entries must lie in (0, 1]");
    if (nonlin_kind != "zero" && nonlin_kind != "constant_force" &&
        nonlin_kind != "scaled_delay" && nonlin_kind != "quadratic_decay_force")
        throw std::invalid_argument("unknown nonlinearity kind: '" + nonlin_kind + "'");
}

// ---------------------------------------------------------------------------
// record

void RunRecord::finalize() {
    if (refused) {
        verdict = false;
        return;
    }
    verdict = true;
    for (const auto& r : reports)
        if (!r.skipped && !r.pass) verdict = false;
}

const BoundReport* RunRecord::find(const std::string& name) const {
    for (const auto& r : reports)
        if (r.name == name) return &r;
    return nullptr;
}

// ---------------------------------------------------------------------------
// seeded data and forcing registry

Field seeded_field(BasisPtr basis, double target, std::uint64_t seed) {
    Field f = zero_field(std::move(basis));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (std::size_t n = 0; n < f.coeffs.size(); ++n) {
        double damp = double((n + 1) * (n + 1));
        f.coeffs[n] = uni(rng) / damp;
    }
    double nrm = f.norm();
    if (target == 0.0 || nrm == 0.0) {
        std::fill(f.coeffs.begin(), f.coeffs.end(), 0.0);
        return f;
    }
    double s = target / nrm;
    for (auto& c : f.coeffs) c *= s;
    return f;
}

NonlinearitySpec make_nonlinearity(const std::string& kind, double p0, double c,
                                   BasisPtr basis) {
    NonlinearitySpec nl;
    nl.basis = basis;
    if (kind == "zero") {
        nl.f = [basis](double, const Field&) { return zero_field(basis); };
        nl.p = [](double) { return 0.0; };
        nl.envelope = NonlinearitySpec::Envelope::Sublinear;
        nl.ell = 0.0;
        nl.zero_at_origin = true;
        nl.sup_p = 0.0;
    } else if (kind == "constant_force") {
        if (!(p0 >= 0.0)) throw std::invalid_argument("constant_force needs p0 >= 0");
        nl.f = [basis, p0](double, const Field&) {
            Field g = zero_field(basis);
            g.coeffs[0] = p0;
            return g;
        };
        nl.p = [p0](double) { return p0; };
        nl.envelope = NonlinearitySpec::Envelope::Sublinear;
        nl.ell = 0.0;
        nl.zero_at_origin = false;
        nl.sup_p = p0;
    } else if (kind == "scaled_delay") {
        if (!(c >= 0.0)) throw std::invalid_argument("scaled_delay needs c >= 0");
        nl.f = [c](double, const Field& v) {
            Field g = v;
            for (auto& x : g.coeffs) x *= c;
            return g;
        };
        nl.p = [](double) { return 1.0; };
        nl.kappa = [c](double) { return c; };
        nl.envelope = NonlinearitySpec::Envelope::Lipschitz;
        nl.ell = c;
        nl.zero_at_origin = true;
        nl.sup_p = 1.0;
    } else if (kind == "quadratic_decay_force") {
        nl.f = [](double t, const Field& v) {
            Field g = v;
            double s = std::exp(-t) * v.norm();
            for (auto& x : g.coeffs) x *= s;
            return g;
        };
        nl.p = [](double t) { return std::exp(-t); };
        nl.G = [](double r) { return r * r; };
        nl.envelope = NonlinearitySpec::Envelope::GrowthTail;
        nl.ell = 0.0;
        nl.zero_at_origin = true;
        nl.sup_p = 1.0;
    } else {
        throw std::invalid_argument("unknown nonlinearity kind: '" + kind + "'");
    }
    nl.validate();
    return nl;
}

// ---------------------------------------------------------------------------
// dissipativity

RunRecord run_dissipativity(const ExperimentConfig& cfg) {
    RunRecord rec = start_record(cfg);
    BasisPtr basis = build_basis(cfg.domain, cfg.modes);
    double lambda1 = basis->lambda1();

    NonlinearitySpec nl;
    try {
        nl = make_nonlinearity(cfg.nonlin_kind, cfg.nonlin_p0, cfg.nonlin_c, basis);
    } catch (const std::exception& e) {
        return refuse(std::move(rec), e.what());
    }
    if (nl.envelope != NonlinearitySpec::Envelope::Sublinear)
        return refuse(std::move(rec), "dissipativity needs a sublinear forcing envelope, "
                                      "got kind '" + cfg.nonlin_kind + "'");
    double sup_p = nl.sup_p;
    if (!(sup_p < lambda1))
        return refuse(std::move(rec),
                      "hypothesis sup p < lambda_1 fails: sup p = " + fmt(sup_p) +
                          ", lambda_1 = " + fmt(lambda1));

    append_report(rec, BoundReport::make("hypothesis_sublinear_gap", {lambda1}, {sup_p}, 0.0,
                                         "strict inequality sup p < lambda_1"));
    append_report(rec, check_envelope(nl, cfg.horizon, 2.0, 64, cfg.seed));

    double R = sup_p / lambda1 + 1.0;
    rec.notes.push_back("absorbing radius R = sup p / lambda_1 + 1 = " + fmt(R));
    if (sup_p <= 0.618 * lambda1)
        rec.notes.push_back("sup p = " + fmt(sup_p) + " lies inside the absorbing range "
                            "(0.618 lambda_1 = " + fmt(0.618 * lambda1) + ")");
    else
        rec.notes.push_back("sup p = " + fmt(sup_p) + " exceeds 0.618 lambda_1 = " +
                            fmt(0.618 * lambda1) + "; the ball constant is not absorbed");

    if (cfg.xi_scales.empty()) {
        rec.notes.push_back("empty scale sweep; nothing to run");
        rec.finalize();
        return rec;
    }

    auto cells = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.grid_h));
    TimeGrid grid = TimeGrid::uniform(cfg.horizon, std::max<std::size_t>(cells, 2));
    ResolventTable table = build_resolvent_table(basis, cfg.params, grid);
    std::span<const double> om1 = table.row(0);
    const std::size_t K = grid.size();
    const double T = cfg.horizon;

    std::vector<double> tnodes(K);
    for (std::size_t i = 0; i < K; ++i) tnodes[i] = grid.node(i);
    push_series(rec, "t", tnodes);

    std::vector<double> entry_claimed, entry_measured;
    std::vector<double> stay_claimed, stay_measured;
    std::vector<double> tail_claimed, tail_measured;
    std::string entry_note = "settle time per scale (first entry, excursions):";

    std::size_t half = node_index_at(grid, T / 2.0);

    for (std::size_t si = 0; si < cfg.xi_scales.size(); ++si) {
        double target = cfg.xi_scales[si] * R;
        Field xi = seeded_field(basis, target, cfg.seed + si);

        ProblemSpec pb;
        pb.params = cfg.params;
        pb.basis = basis;
        pb.delay = cfg.delay;
        pb.history = History::constant(basis, xi, cfg.delay.tau);
        pb.nonlin = nl;
        pb.grid = grid;
        MildTrajectory traj = integrate(pb, table);

        std::vector<double> norms = forward_norms(traj);
        push_series(rec, "norms_scale" + std::to_string(si), norms);
        write_traj_csv(cfg, "trajectory_scale" + std::to_string(si), traj);

        // settle index: one past the last node outside the ball
        std::size_t settle = 0;
        std::size_t first_in = K;
        std::size_t excursions = 0;
        for (std::size_t i = 0; i < K; ++i) {
            if (norms[i] > R) {
                settle = i + 1;
                if (i > 0 && norms[i - 1] <= R && first_in < i) ++excursions;
            } else if (first_in == K) {
                first_in = i;
            }
        }
        double settle_t = settle < K ? grid.node(settle) : 2.0 * T;
        entry_claimed.push_back(T);
        entry_measured.push_back(settle_t);
        double stay = 0.0;
        for (std::size_t i = settle; i < K; ++i) stay = std::max(stay, norms[i]);
        stay_claimed.push_back(R);
        stay_measured.push_back(stay);
        entry_note += " [scale " + fmt(cfg.xi_scales[si]) + ": settle " + fmt(settle_t) +
                      ", first " + fmt(first_in < K ? grid.node(first_in) : 2.0 * T) +
                      ", excursions " + std::to_string(excursions) + "]";

        // direct tail certificate: ||u(t)|| <= omega(T/2) v0 + sup p / lambda_1 on [T/2, T]
        double v0 = norms[0];
        tail_claimed.push_back(sup_p / lambda1 + om1[half] * v0);
        double tail = 0.0;
        for (std::size_t i = half; i < K; ++i) tail = std::max(tail, norms[i]);
        tail_measured.push_back(tail);

        // scalar comparison route fed with the measured norms
        std::vector<double> b(K, sup_p);
        HalanayInstance inst = feed_instance(traj, cfg, lambda1, 0.0, cfg.delay, std::move(b));
        BoundReport premise = verify_premise(inst);
        BoundReport tail_rep = bound_limsup(inst, T / 2.0, cfg.decay_tol);
        std::string sfx = "_scale" + std::to_string(si);
        append_report(rec, premise, sfx);
        append_report(rec, std::move(tail_rep), sfx);
    }

    append_report(rec, BoundReport::make("absorbing_entry", std::move(entry_claimed),
                                         std::move(entry_measured), 0.0, entry_note));
    append_report(rec, BoundReport::make("absorbing_stay", std::move(stay_claimed),
                                         std::move(stay_measured), 0.0,
                                         "sup of the norm after the settle time"));
    append_report(rec, BoundReport::make("tail_window", std::move(tail_claimed),
                                         std::move(tail_measured), 0.0,
                                         "norm ceiling sup p / lambda_1 + omega(T/2) v0 "
                                         "measured over [T/2, T]"));

    // free evolution from the ball boundary decays monotonically
    {
        NonlinearitySpec zero = make_nonlinearity("zero", 0.0, 0.0, basis);
        ProblemSpec pb;
        pb.params = cfg.params;
        pb.basis = basis;
        pb.delay = cfg.delay;
        pb.history = History::constant(basis, seeded_field(basis, R, cfg.seed), cfg.delay.tau);
        pb.nonlin = zero;
        pb.grid = grid;
        MildTrajectory traj = integrate(pb, table);
        std::vector<double> norms = forward_norms(traj);
        std::vector<double> prev(norms.begin(), norms.end() - 1);
        std::vector<double> next(norms.begin() + 1, norms.end());
        append_report(rec, BoundReport::make("zero_forcing_monotone", std::move(prev),
                                             std::move(next), 1e-13 * (1.0 + norms[0]),
                                             "free evolution norms are nonincreasing"));
    }

    // coarse two-point spectrum sweep: a stiffer domain settles no later
    {
        double h2 = std::max(cfg.grid_h, 0.05);
        auto c2 = static_cast<std::size_t>(std::llround(T / h2));
        TimeGrid g2 = TimeGrid::uniform(T, std::max<std::size_t>(c2, 2));
        double scale = cfg.xi_scales.back();
        std::string note = "settle times under a 2-point lambda_1 sweep at scale " + fmt(scale) + ":";
        for (double shrink : {1.0, 0.5}) {
            Domain dom = cfg.domain;
            dom.Lx *= shrink;
            if (dom.two_dimensional()) dom.Ly *= shrink;
            BasisPtr b2 = build_basis(dom, std::min<std::size_t>(cfg.modes, 8));
            NonlinearitySpec nl2 = make_nonlinearity(cfg.nonlin_kind, cfg.nonlin_p0,
                                                     cfg.nonlin_c, b2);
            double R2 = nl2.sup_p / b2->lambda1() + 1.0;
            ProblemSpec pb;
            pb.params = cfg.params;
            pb.basis = b2;
            pb.delay = cfg.delay;
            pb.history = History::constant(b2, seeded_field(b2, scale * R2, cfg.seed), cfg.delay.tau);
            pb.nonlin = nl2;
            pb.grid = g2;
            MildTrajectory traj = integrate(pb);
            std::vector<double> norms = forward_norms(traj);
            std::size_t settle = 0;
            for (std::size_t i = 0; i < norms.size(); ++i)
                if (norms[i] > R2) settle = i + 1;
            note += " [lambda_1 " + fmt(b2->lambda1()) + ": settle " +
                    fmt(settle < norms.size() ? g2.node(settle) : 2.0 * T) + "]";
        }
        rec.notes.push_back(note + " (reported, not asserted)");
    }

    rec.finalize();
    return rec;
}

// ---------------------------------------------------------------------------
// asymptotic stability

RunRecord run_asymptotic_stability(const ExperimentConfig& cfg) {
    RunRecord rec = start_record(cfg);
    BasisPtr basis = build_basis(cfg.domain, cfg.modes);
    double lambda1 = basis->lambda1();

    NonlinearitySpec nl;
    try {
        nl = make_nonlinearity(cfg.nonlin_kind, cfg.nonlin_p0, cfg.nonlin_c, basis);
    } catch (const std::exception& e) {
        return refuse(std::move(rec), e.what());
    }
    if (nl.envelope != NonlinearitySpec::Envelope::Lipschitz)
        return refuse(std::move(rec), "asymptotic stability needs Lipschitz metadata, got kind '" +
                                          cfg.nonlin_kind + "'");

    SmallnessResult small;
    try {
        small = smallness_radius(nl, basis, cfg.params, cfg.horizon);
    } catch (const std::exception& e) {
        return refuse(std::move(rec), std::string("no smallness radius: ") + e.what());
    }
    double theta = small.zeta;
    double drift = nl.sup_p * (nl.ell + theta);
    if (!(drift < lambda1))
        return refuse(std::move(rec), "hypothesis sup p (ell + theta) < lambda_1 fails: " +
                                          fmt(drift) + " vs " + fmt(lambda1));
    if (!(cfg.xi_norm <= small.delta))
        return refuse(std::move(rec), "initial datum above the smallness radius: ||xi|| = " +
                                          fmt(cfg.xi_norm) + ", delta = " + fmt(small.delta));

    double C = lambda1 / (lambda1 - drift) + 1.0;
    rec.notes.push_back("smallness radii: delta = " + fmt(small.delta) + ", eta = " +
                        fmt(small.eta) + ", zeta = theta = " + fmt(theta) + ", M = " +
                        fmt(small.M) + "; bound constant C = " + fmt(C));
    append_report(rec, BoundReport::make("hypothesis_lipschitz_gap", {lambda1}, {drift}, 0.0,
                                         "strict inequality sup p (ell + theta) < lambda_1"));
    append_report(rec, BoundReport::make("smallness_admissible", {small.delta}, {cfg.xi_norm},
                                         0.0, "initial norm within the admissible radius"));
    append_report(rec, check_envelope(nl, cfg.horizon, 2.0 * small.eta, 64, cfg.seed));

    if (cfg.q_values.empty()) {
        rec.notes.push_back("empty q sweep; nothing to run");
        rec.finalize();
        return rec;
    }

    auto cells = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.grid_h));
    TimeGrid grid = TimeGrid::uniform(cfg.horizon, std::max<std::size_t>(cells, 2));
    ResolventTable table = build_resolvent_table(basis, cfg.params, grid);
    const std::size_t K = grid.size();

    std::vector<double> tnodes(K);
    for (std::size_t i = 0; i < K; ++i) tnodes[i] = grid.node(i);
    push_series(rec, "t", tnodes);

    Field xi = seeded_field(basis, cfg.xi_norm, cfg.seed);
    std::vector<double> decay_claimed, decay_measured;

    for (std::size_t qi = 0; qi < cfg.q_values.size(); ++qi) {
        double q = cfg.q_values[qi];
        DelaySpec delay = DelaySpec::proportional(q, cfg.delay.tau);

        ProblemSpec pb;
        pb.params = cfg.params;
        pb.basis = basis;
        pb.delay = delay;
        pb.history = History::constant(basis, xi, delay.tau);
        pb.nonlin = nl;
        pb.grid = grid;
        MildTrajectory traj = integrate(pb, table);

        std::vector<double> norms = forward_norms(traj);
        std::string tag = std::to_string(qi);
        push_series(rec, "norms_q" + tag, norms);
        write_traj_csv(cfg, "trajectory_q" + tag, traj);

        double v0 = norms[0];
        std::vector<double> claimed(K, C * v0);
        append_report(rec, BoundReport::make("uniform_bound_q" + tag, std::move(claimed), norms,
                                             0.0, "C ||xi|| with C = lambda_1 / (lambda_1 - "
                                                  "sup p (ell + theta)) + 1 at q = " + fmt(q)));
        decay_claimed.push_back(cfg.decay_tol * v0);
        decay_measured.push_back(norms.back());

        // scalar comparison route: a = measured Lipschitz level, b = 0
        double a = nl.sup_p * nl.ell;
        HalanayInstance inst = feed_instance(traj, cfg, lambda1, a, delay,
                                             std::vector<double>(K, 0.0));
        std::string sfx = "_q" + tag;
        BoundReport premise = verify_premise(inst);
        BoundReport global = bound_global(inst, premise);
        BoundReport tail = bound_limsup(inst, cfg.horizon / 2.0, cfg.decay_tol);
        append_report(rec, premise, sfx);
        append_report(rec, std::move(global), sfx);
        append_report(rec, std::move(tail), sfx);
    }

    append_report(rec, BoundReport::make("terminal_decay", std::move(decay_claimed),
                                         std::move(decay_measured), 0.0,
                                         "||u(T)|| <= decay_tol ||xi|| per q"));

    // trivial member: f = 0 from the same datum
    {
        NonlinearitySpec zero = make_nonlinearity("zero", 0.0, 0.0, basis);
        ProblemSpec pb;
        pb.params = cfg.params;
        pb.basis = basis;
        pb.delay = DelaySpec::constant(0.0);
        pb.history = History::constant(basis, xi, 0.0);
        pb.nonlin = zero;
        pb.grid = grid;
        MildTrajectory traj = integrate(pb, table);
        std::vector<double> norms = forward_norms(traj);
        append_report(rec, BoundReport::make("zero_forcing_decay", {cfg.decay_tol * norms[0]},
                                             {norms.back()}, 0.0,
                                             "free evolution decays below decay_tol ||xi||"));
    }

    rec.finalize();
    return rec;
}

// ---------------------------------------------------------------------------
// decay family

RunRecord run_decay_family(const ExperimentConfig& cfg) {
    RunRecord rec = start_record(cfg);
    BasisPtr basis = build_basis(cfg.domain, cfg.modes);

    NonlinearitySpec nl;
    try {
        nl = make_nonlinearity(cfg.nonlin_kind, cfg.nonlin_p0, cfg.nonlin_c, basis);
    } catch (const std::exception& e) {
        return refuse(std::move(rec), e.what());
    }
    if (nl.envelope != NonlinearitySpec::Envelope::GrowthTail)
        return refuse(std::move(rec), "the decay family needs growth metadata with a decaying "
                                      "tail, got kind '" + cfg.nonlin_kind + "'");

    SmallnessResult small;
    try {
        small = smallness_radius(nl, basis, cfg.params, cfg.horizon);
    } catch (const std::exception& e) {
        return refuse(std::move(rec), std::string("no smallness radius: ") + e.what());
    }
    rec.notes.push_back("smallness radii: delta = " + fmt(small.delta) + ", eta = " +
                        fmt(small.eta) + ", zeta = " + fmt(small.zeta) + ", M = " + fmt(small.M));
    append_report(rec, BoundReport::make("smallness_positive", {small.delta, small.eta},
                                         {0.0, 0.0}, 0.0, "delta and eta are positive"));
    append_report(rec, check_envelope(nl, cfg.horizon, 2.0 * small.eta, 64, cfg.seed));

    auto cells = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.grid_h));
    TimeGrid grid = TimeGrid::uniform(cfg.horizon, std::max<std::size_t>(cells, 2));
    ResolventTable table = build_resolvent_table(basis, cfg.params, grid);
    std::span<const double> om1 = table.row(0);
    const std::size_t K = grid.size();
    const double T = cfg.horizon;
    const double h = grid.node(1) - grid.node(0);

    std::vector<double> tnodes(K);
    for (std::size_t i = 0; i < K; ++i) tnodes[i] = grid.node(i);
    push_series(rec, "t", tnodes);

    // half-interval forcing tail: H(t) = int_0^{t/2} omega(t-s) p(s) ds stays
    // under the majorant omega(t/2) ||p||_1 and sinks below decay_tol.
    {
        double P1 = 0.0;
        for (std::size_t j = 1; j < K; ++j)
            P1 += 0.5 * h * (nl.p(grid.node(j - 1)) + nl.p(grid.node(j)));
        std::vector<double> maj_claimed, maj_measured, lvl_claimed, lvl_measured;
        std::size_t step = std::max<std::size_t>(2, 2 * (K / 128));
        for (std::size_t i = step; i < K; i += step) {
            std::size_t half = i / 2;
            double H = 0.0;
            for (std::size_t j = 0; j <= half; ++j) {
                double w = (j == 0 || j == half) ? 0.5 * h : h;
                H += w * om1[i - j] * nl.p(grid.node(j));
            }
            maj_claimed.push_back(om1[half] * P1 + 10.0 * table.max_est_error() * P1 + 1e-12);
            maj_measured.push_back(H);
            if (grid.node(i) >= T / 2.0) {
                lvl_claimed.push_back(cfg.decay_tol);
                lvl_measured.push_back(H);
            }
        }
        rec.notes.push_back("||p||_1 on the horizon = " + fmt(P1));
        append_report(rec, BoundReport::make("decay_tail_majorant", std::move(maj_claimed),
                                             std::move(maj_measured), 0.0,
                                             "half-interval forcing tail under omega(t/2) ||p||_1"));
        append_report(rec, BoundReport::make("decay_tail_level", std::move(lvl_claimed),
                                             std::move(lvl_measured), 0.0,
                                             "half-interval forcing tail below decay_tol on [T/2, T]"));
    }

    // family of small data: all stay in the eta ball and share the decay rate
    const std::size_t family = 16;
    double xi_target = small.delta / 2.0;
    std::vector<double> inv_claimed, inv_measured, dec_claimed, dec_measured;
    std::vector<std::vector<double>> histories;
    for (std::size_t m = 0; m < family; ++m) {
        Field xi = seeded_field(basis, xi_target, cfg.seed + m);
        ProblemSpec pb;
        pb.params = cfg.params;
        pb.basis = basis;
        pb.delay = cfg.delay;
        pb.history = History::constant(basis, xi, cfg.delay.tau);
        pb.nonlin = nl;
        pb.grid = grid;
        MildTrajectory traj = integrate(pb, table);
        std::vector<double> norms = forward_norms(traj);
        double sup = *std::max_element(norms.begin(), norms.end());
        inv_claimed.push_back(small.eta);
        inv_measured.push_back(sup);
        dec_claimed.push_back(cfg.decay_tol * xi_target);
        dec_measured.push_back(norms.back());
        if (m == 0) {
            push_series(rec, "norms_member0", norms);
            write_traj_csv(cfg, "trajectory_member0", traj);
        }
        histories.push_back(std::move(norms));
    }
    append_report(rec, BoundReport::make("family_invariance", std::move(inv_claimed),
                                         std::move(inv_measured), 0.0,
                                         "every member stays inside the eta ball"));
    append_report(rec, BoundReport::make("family_decay", std::move(dec_claimed),
                                         std::move(dec_measured), 0.0,
                                         "every member ends below decay_tol ||xi||"));

    // zero datum gives the zero solution exactly
    {
        ProblemSpec pb;
        pb.params = cfg.params;
        pb.basis = basis;
        pb.delay = cfg.delay;
        pb.history = History::constant(basis, zero_field(basis), cfg.delay.tau);
        pb.nonlin = nl;
        pb.grid = grid;
        MildTrajectory traj = integrate(pb, table);
        append_report(rec, BoundReport::make("family_zero_member", {0.0},
                                             {traj.sup_norm_forward()}, 0.0,
                                             "the zero datum stays exactly at zero"));
        write_traj_csv(cfg, "trajectory_zero", traj);
    }

    // equidecay table: family-sup of the suffix-sup, relative to the start level
    {
        const std::size_t levels = 16;
        std::vector<double> level_t(levels), level_sup(levels);
        for (std::size_t m2 = 0; m2 < levels; ++m2) {
            std::size_t i0 = node_index_at(grid, double(m2) * T / double(levels));
            level_t[m2] = grid.node(i0);
            double e = 0.0;
            for (const auto& norms : histories)
                for (std::size_t i = i0; i < K; ++i) e = std::max(e, norms[i]);
            level_sup[m2] = e / xi_target;
        }
        rec.series.emplace_back("equidecay_times", level_t);
        rec.series.emplace_back("equidecay_sup", level_sup);
        std::vector<double> mono_claimed(level_sup.begin(), level_sup.end() - 1);
        std::vector<double> mono_measured(level_sup.begin() + 1, level_sup.end());
        append_report(rec, BoundReport::make("equidecay_monotone", std::move(mono_claimed),
                                             std::move(mono_measured), 0.0,
                                             "suffix suprema are nonincreasing"));
        append_report(rec, BoundReport::make("equidecay_final", {cfg.decay_tol},
                                             {level_sup.back()}, 0.0,
                                             "relative family tail below decay_tol"));
    }

    rec.notes.push_back("the equidecay table is finite-horizon evidence for a uniformly "
                        "decaying family; no compactness of the solution set is claimed");
    rec.finalize();
    return rec;
}

// ---------------------------------------------------------------------------
// suites

RunRecord run_suites(const ExperimentConfig& cfg) {
    RunRecord rec = start_record(cfg);

    if (cfg.kind == ExperimentConfig::Kind::RelaxationSuite) {
        if (cfg.alphas.empty() || cfg.gammas.empty() || cfg.mus.empty())
            rec.notes.push_back("empty sweep; nothing to run");
        TimeGrid grid = TimeGrid::uniform(10.0, 1024);
        for (std::size_t ia = 0; ia < cfg.alphas.size(); ++ia)
            for (std::size_t ig = 0; ig < cfg.gammas.size(); ++ig)
                for (std::size_t im = 0; im < cfg.mus.size(); ++im) {
                    FracParams p{cfg.alphas[ia], cfg.gammas[ig]};
                    RelaxationSamples s = omega_volterra(p, cfg.mus[im], grid);
                    std::string sfx = "_a" + std::to_string(ia) + "g" + std::to_string(ig) +
                                      "m" + std::to_string(im);
                    std::string tag = " (alpha=" + fmt(p.alpha) + ", gamma=" + fmt(p.gamma) +
                                      ", mu=" + fmt(cfg.mus[im]) + ")";
                    for (auto& rep : check_kernel_bounds(s)) {
                        rep.note += tag;
                        append_report(rec, std::move(rep), sfx);
                    }
                    for (int order : {1, 2}) {
                        BoundReport rep = check_complete_monotonicity(s, order);
                        rep.note += tag;
                        append_report(rec, std::move(rep), sfx);
                    }
                }
        rec.finalize();
        return rec;
    }

    if (cfg.kind != ExperimentConfig::Kind::HalanaySuite)
        throw std::invalid_argument("run_suites handles the relaxation and halanay suites only");

    struct Inst {
        double mu, a;
        int bshape; // 0 zero, 1 constant, 2 ramp
    };
    const std::vector<Inst> instances = {
        {2.0, 1.0, 0}, {2.0, 1.0, 1}, {2.0, 1.0, 2},
        {1.0, 0.9, 0}, {1.0, 0.9, 1}, {1.0, 0.9, 2},
        {5.0, 0.5, 0}, {5.0, 0.5, 1}, {5.0, 0.5, 2},
        {2.0, 0.0, 1},
    };
    const double tau = 0.5;
    for (std::size_t ii = 0; ii < instances.size(); ++ii) {
        const Inst& in = instances[ii];
        double T = 200.0 / in.mu;
        auto cells = static_cast<std::size_t>(std::llround(T / cfg.grid_h));
        TimeGrid grid = TimeGrid::uniform(T, std::max<std::size_t>(cells, 4));
        std::vector<double> psi(6);
        for (std::size_t j = 0; j < psi.size(); ++j)
            psi[j] = 1.5 - 0.5 * double(j) / double(psi.size() - 1);
        std::vector<double> b(grid.size(), 0.0);
        if (in.bshape == 1) std::fill(b.begin(), b.end(), 0.3);
        if (in.bshape == 2)
            for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.3 * grid.node(i) / T;

        ExtremalStats stats;
        HalanayInstance inst = build_extremal(in.mu, in.a, cfg.params,
                                              DelaySpec::constant(tau), grid, psi, b, &stats);
        std::string sfx = "_i" + std::to_string(ii);
        std::string tag = " (mu=" + fmt(in.mu) + ", a=" + fmt(in.a) + ", b=" +
                          std::string(in.bshape == 0 ? "zero" : in.bshape == 1 ? "constant"
                                                                               : "ramp") + ")";
        BoundReport premise = verify_premise(inst);
        premise.note += tag;
        BoundReport global = bound_global(inst, premise);
        global.note += tag;
        append_report(rec, premise, sfx);
        append_report(rec, std::move(global), sfx);
        if (in.bshape == 0) {
            BoundReport tail = bound_limsup(inst, T / 2.0, cfg.decay_tol);
            tail.note += tag;
            append_report(rec, std::move(tail), sfx);
        }
        rec.notes.push_back("instance " + std::to_string(ii) + tag + ": sweeps=" +
                            std::to_string(stats.sweeps) + ", final_diff=" +
                            fmt(stats.final_diff) + ", contraction=" +
                            fmt(stats.max_contraction));
        if (!cfg.out_dir.empty()) {
            ensure_dir(cfg.out_dir);
            std::ofstream os(std::filesystem::path(cfg.out_dir) /
                             ("instance_" + std::to_string(ii) + ".csv"));
            write_instance_csv(os, inst);
        }
    }
    rec.finalize();
    return rec;
}

// ---------------------------------------------------------------------------
// dispatch and serialization

RunRecord run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunRecord rec;
    switch (cfg.kind) {
        case ExperimentConfig::Kind::Dissipativity: rec = run_dissipativity(cfg); break;
        case ExperimentConfig::Kind::AsymptoticStability: rec = run_asymptotic_stability(cfg); break;
        case ExperimentConfig::Kind::DecayFamily: rec = run_decay_family(cfg); break;
        case ExperimentConfig::Kind::HalanaySuite:
        case ExperimentConfig::Kind::RelaxationSuite: rec = run_suites(cfg); break;
    }
    if (!cfg.out_dir.empty()) save_run_record(rec, cfg.out_dir);
    return rec;
}

void write_run_record_json(std::ostream& os, const RunRecord& rec) {
    using json = nlohmann::ordered_json;
    json j;
    j["experiment"] = rec.experiment;
    j["seed"] = rec.seed;
    j["verdict"] = rec.refused ? "refused" : (rec.verdict ? "pass" : "fail");
    if (rec.refused) j["refusal"] = rec.refusal;
    json cfg = json::object();
    for (const auto& [k, v] : rec.config_echo) cfg[k] = v;
    j["config"] = std::move(cfg);
    json reports = json::array();
    for (const auto& r : rec.reports) {
        json jr;
        jr["name"] = r.name;
        jr["pass"] = r.pass;
        jr["skipped"] = r.skipped;
        jr["margin"] = r.margin;
        jr["tolerance"] = r.tolerance;
        jr["entries"] = r.claimed.size();
        if (!r.skipped && !r.claimed.empty()) {
            std::size_t w = r.argmin();
            jr["worst_index"] = w;
            jr["worst_claimed"] = r.claimed[w];
            jr["worst_measured"] = r.measured[w];
        }
        if (!r.note.empty()) jr["note"] = r.note;
        reports.push_back(std::move(jr));
    }
    j["reports"] = std::move(reports);
    json series = json::object();
    for (const auto& [name, v] : rec.series) series[name] = v;
    j["series"] = std::move(series);
    j["notes"] = rec.notes;
    os << j.dump(2) << '\n';
}

void save_run_record(const RunRecord& rec, const std::string& out_dir) {
    ensure_dir(out_dir);
    std::filesystem::path dir(out_dir);
    std::ofstream js(dir / "runrecord.json");
    if (!js) throw std::runtime_error("cannot write runrecord.json in " + out_dir);
    write_run_record_json(js, rec);
    std::ofstream cs(dir / "reports.csv");
    if (!cs) throw std::runtime_error("cannot write reports.csv in " + out_dir);
    write_reports_csv(cs, rec.reports);
}

} // namespace rslab
