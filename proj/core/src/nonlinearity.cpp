#include "rslab/nonlinearity.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace rslab {

void NonlinearitySpec::validate() const {
    if (basis == nullptr) throw std::invalid_argument("nonlinearity: null basis");
    if (!f) throw std::invalid_argument("nonlinearity: missing evaluator");
    if (!p) throw std::invalid_argument("nonlinearity: missing envelope weight p");
    switch (envelope) {
    case Envelope::Growth:
    case Envelope::GrowthTail:
        if (!G) throw std::invalid_argument("nonlinearity: growth envelope needs G");
        break;
    case Envelope::Lipschitz:
        if (!kappa) throw std::invalid_argument("nonlinearity: Lipschitz envelope needs kappa");
        break;
    case Envelope::Sublinear:
        break;
    }
    if (!(ell >= 0.0)) throw std::invalid_argument("nonlinearity: ell must be nonnegative");
}

namespace {

Field random_probe(BasisPtr basis, double norm_target, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field v = zero_field(basis);
    for (auto& c : v.coeffs) c = u(rng);
    const double n = v.norm();
    if (n > 0.0)
        for (auto& c : v.coeffs) c *= norm_target / n;
    return v;
}

} // namespace

BoundReport check_envelope(const NonlinearitySpec& nl, double t_max, double r_max, int probes,
                           std::uint64_t seed) {
    nl.validate();
    if (!(t_max >= 0.0) || !(r_max > 0.0) || probes < 1)
        throw std::invalid_argument("check_envelope: bad probe parameters");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(0.0, t_max);
    std::uniform_real_distribution<double> ur(0.0, 1.0);

    std::vector<double> claimed, measured;
    claimed.reserve(static_cast<std::size_t>(probes) + 1);
    measured.reserve(static_cast<std::size_t>(probes) + 1);
    for (int i = 0; i < probes; ++i) {
        const double t = ut(rng);
        // geometric spread so the small-norm regime is probed too
        const double r = r_max * std::pow(1e-4, ur(rng));
        switch (nl.envelope) {
        case NonlinearitySpec::Envelope::Growth:
        case NonlinearitySpec::Envelope::GrowthTail: {
            Field v = random_probe(nl.basis, r, rng);
            claimed.push_back(nl.p(t) * nl.G(v.norm()));
            measured.push_back(nl.f(t, v).norm());
            break;
        }
        case NonlinearitySpec::Envelope::Sublinear: {
            Field v = random_probe(nl.basis, r, rng);
            claimed.push_back(nl.p(t) * (1.0 + v.norm()));
            measured.push_back(nl.f(t, v).norm());
            break;
        }
        case NonlinearitySpec::Envelope::Lipschitz: {
            Field v1 = random_probe(nl.basis, r * ur(rng), rng);
            Field v2 = random_probe(nl.basis, r * ur(rng), rng);
            const double ball = std::max(v1.norm(), v2.norm());
            Field f1 = nl.f(t, v1);
            Field f2 = nl.f(t, v2);
            double d2 = 0.0;
            for (std::size_t k = 0; k < f1.coeffs.size(); ++k) {
                const double d = f1.coeffs[k] - f2.coeffs[k];
                d2 += d * d;
            }
            double vd2 = 0.0;
            for (std::size_t k = 0; k < v1.coeffs.size(); ++k) {
                const double d = v1.coeffs[k] - v2.coeffs[k];
                vd2 += d * d;
            }
            claimed.push_back(nl.p(t) * nl.kappa(ball) * std::sqrt(vd2));
            measured.push_back(std::sqrt(d2));
            break;
        }
        }
    }
    if (nl.zero_at_origin) {
        claimed.push_back(0.0);
        measured.push_back(nl.f(0.5 * t_max, zero_field(nl.basis)).norm());
    }
    return BoundReport::make("nonlinearity_envelope", claimed, measured, 1e-12);
}

} // namespace rslab
