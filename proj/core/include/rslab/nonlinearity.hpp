#pragma once

#include <cstdint>
#include <functional>
#include <limits>

#include "rslab/bound_report.hpp"
#include "rslab/spectral.hpp"

namespace rslab {

// The forcing term f(t, v) together with the growth metadata the stability
// theory consumes.  The envelope kind declares which inequality the metadata
// certifies:
//   Growth:     ||f(t,v)||              <= p(t) * G(||v||)
//   Sublinear:  ||f(t,v)||              <= p(t) * (1 + ||v||)
//   Lipschitz:  ||f(t,v1) - f(t,v2)||  <= p(t) * kappa(r) * ||v1 - v2||
//               whenever ||v1||, ||v2|| <= r
//   GrowthTail: Growth, and additionally the half-interval tail
//               sup_{t>=T} int_0^{t/2} omega(t-s,lambda_1) p(s) ds -> 0,
//               verified numerically by the decay experiment.
struct NonlinearitySpec {
    enum class Envelope { Growth, Sublinear, Lipschitz, GrowthTail };

    BasisPtr basis;
    std::function<Field(double, const Field&)> f;
    std::function<double(double)> p; // nonnegative envelope weight
    Envelope envelope = Envelope::Sublinear;
    std::function<double(double)> G;     // Growth / GrowthTail
    std::function<double(double)> kappa; // Lipschitz
    // limsup of G(r)/r (Growth kinds) or of kappa(r) (Lipschitz) as r -> 0.
    double ell = 0.0;
    bool zero_at_origin = false; // declares f(t, 0) = 0
    double sup_p = std::numeric_limits<double>::quiet_NaN(); // ||p||_inf when known

    void validate() const;
};

// Samples the declared envelope inequality on random probes (fields with
// coefficients supported everywhere, norms spread over (0, r_max]).  claimed
// is the envelope value, measured the actual ||f|| (or difference quotient);
// a negative margin beyond tolerance falsifies the metadata.
BoundReport check_envelope(const NonlinearitySpec& nl, double t_max, double r_max, int probes,
                           std::uint64_t seed);

} // namespace rslab
