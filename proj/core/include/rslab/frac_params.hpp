#pragma once

#include <cmath>
#include <stdexcept>

namespace rslab {

// Parameters of the time-fractional damping term: order alpha in (0,1),
// strength gamma >= 0.  gamma == 0 degenerates to the classical exponential
// relaxation and is accepted only as an oracle/testing mode.
struct FracParams {
    double alpha;
    double gamma;

    void validate() const {
        if (!(alpha > 0.0) || !(alpha < 1.0))
            throw std::invalid_argument("FracParams: alpha must lie strictly in (0,1)");
        if (!(gamma >= 0.0))
            throw std::invalid_argument("FracParams: gamma must be >= 0");
    }

    bool degenerate() const { return gamma == 0.0; }
};

// Kernel g_beta(t) = t^(beta-1)/Gamma(beta), the standard fractional-calculus
// convolution kernel, valid for beta > 0, t > 0.
inline double g_kernel(double beta, double t) {
    if (!(beta > 0.0)) throw std::invalid_argument("g_kernel: beta must be > 0");
    if (!(t > 0.0)) throw std::invalid_argument("g_kernel: t must be > 0");
    return std::pow(t, beta - 1.0) / std::tgamma(beta);
}

} // namespace rslab
