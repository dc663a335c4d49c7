#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rslab/bound_report.hpp"
#include "rslab/dde.hpp"
#include "rslab/halanay.hpp"

namespace rslab {

// A complete experiment description parsed from a "key = value" text config.
// Keys are dotted (model.alpha, domain.L, delay.kind, ...); values may use pi
// literals (pi, pi/3, 2pi) and comma lists for sweeps.  Unknown keys are
// rejected so that typos cannot silently fall back to defaults.
struct ExperimentConfig {
    enum class Kind {
        Dissipativity,
        AsymptoticStability,
        DecayFamily,
        HalanaySuite,
        RelaxationSuite,
    };

    Kind kind = Kind::RelaxationSuite;
    FracParams params{0.5, 1.0};
    Domain domain = Domain::interval(3.14159265358979323846);
    std::size_t modes = 16;
    DelaySpec delay = DelaySpec::constant(0.0);
    std::string nonlin_kind = "zero";
    double nonlin_p0 = 0.5; // constant_force magnitude
    double nonlin_c = 0.5;  // scaled_delay factor
    double grid_h = 0.01;
    double horizon = 10.0;
    double xi_norm = 0.1;   // target norm of the seeded initial datum
    double decay_tol = 1e-3;
    std::vector<double> xi_scales{0.1, 1.0, 10.0, 100.0}; // multiples of the absorbing radius
    std::vector<double> q_values{0.25, 0.5, 1.0};
    std::vector<double> alphas{0.25, 0.5, 0.75}; // relaxation suite grid
    std::vector<double> gammas{0.1, 1.0, 10.0};
    std::vector<double> mus{0.5, 2.0, 20.0};
    std::uint64_t seed = 1;
    std::string out_dir;

    // Raw key/value pairs in parse order, echoed verbatim into run records.
    std::vector<std::pair<std::string, std::string>> echo;

    static ExperimentConfig parse(std::istream& is);
    static ExperimentConfig load(const std::string& path);
    static Kind kind_from_name(const std::string& name);
    static std::string kind_name(Kind kind);

    void validate() const;
};

// Everything one experiment run produced: the config echo, every bound report,
// named numeric series (norm histories are decimated to at most 512 points),
// and free-form observations.  verdict is true only when no hypothesis was
// refused and every non-skipped report passes; a run never asserts a theorem
// whose hypothesis failed, it refuses instead and says why.
struct RunRecord {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::vector<BoundReport> reports;
    std::vector<std::string> notes;
    std::vector<std::pair<std::string, std::vector<double>>> series;
    bool refused = false;
    std::string refusal;
    bool verdict = false;

    void finalize();
    const BoundReport* find(const std::string& name) const;
};

// Initial datum with coefficients drawn uniformly from [-1,1], damped by
// n^{-2}, then rescaled so the norm equals target exactly.  The same seed
// always produces the same field.
Field seeded_field(BasisPtr basis, double target, std::uint64_t seed);

// Config-level forcing registry: zero, constant_force (u-independent push of
// size p0 along the first mode), scaled_delay (f = c * v, the delayed-linear
// feedback), quadratic_decay_force (f = exp(-t) ||v|| v).
NonlinearitySpec make_nonlinearity(const std::string& kind, double p0, double c, BasisPtr basis);

RunRecord run_dissipativity(const ExperimentConfig& cfg);
RunRecord run_asymptotic_stability(const ExperimentConfig& cfg);
RunRecord run_decay_family(const ExperimentConfig& cfg);
RunRecord run_suites(const ExperimentConfig& cfg);

// Dispatch on cfg.kind; when cfg.out_dir is set, writes runrecord.json,
// reports.csv and representative trajectory CSVs there.
RunRecord run_experiment(const ExperimentConfig& cfg);

void write_run_record_json(std::ostream& os, const RunRecord& rec);
void save_run_record(const RunRecord& rec, const std::string& out_dir);

} // namespace rslab
