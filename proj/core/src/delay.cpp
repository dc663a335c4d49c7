#include "rslab/delay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rslab {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

} // namespace

DelaySpec DelaySpec::constant(double tau) {
    require(std::isfinite(tau) && tau >= 0.0, "tau must be nonnegative");
    DelaySpec d;
    d.kind = Kind::Constant;
    d.tau = tau;
    return d;
}

DelaySpec DelaySpec::proportional(double q, double tau) {
    require(std::isfinite(tau) && tau >= 0.0, "tau must be nonnegative");
    require(q > 0.0 && q <= 1.0, "q must lie in (0, 1]");
    DelaySpec d;
    d.kind = Kind::Proportional;
    d.tau = tau;
    d.q = q;
    return d;
}

DelaySpec DelaySpec::custom(std::function<double(double)> lag, double tau) {
    require(std::isfinite(tau) && tau >= 0.0, "tau must be nonnegative");
    require(static_cast<bool>(lag), "custom delay needs a lag function");
    DelaySpec d;
    d.kind = Kind::Custom;
    d.tau = tau;
    d.lag = std::move(lag);
    return d;
}

double DelaySpec::delayed_arg(double t) const {
    double arg = 0.0;
    switch (kind) {
    case Kind::Constant:
        arg = t - tau;
        break;
    case Kind::Proportional:
        arg = q * t - tau;
        break;
    case Kind::Custom:
        arg = t - lag(t);
        break;
    }
    if (!(arg >= -tau && arg <= t))
        throw std::out_of_range("delayed argument leaves [-tau, t]");
    return arg;
}

BoundReport check_delay_divergence(const DelaySpec& delay, double T, std::size_t samples) {
    require(T > 0.0 && samples >= 2, "need a positive horizon and two samples");
    std::vector<double> args(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(samples - 1);
        args[i] = delay.delayed_arg(t);
    }
    // claimed: the final read address dominates every earlier one.
    std::vector<double> claimed(samples, args.back());
    return BoundReport::make("delay_divergence_trend", claimed, args, 0.0);
}

History::History(BasisPtr basis, double tau, std::size_t cells, std::vector<double> node_major)
    : basis_(std::move(basis)), tau_(tau) {
    require(basis_ != nullptr, "null basis");
    require(std::isfinite(tau_) && tau_ >= 0.0, "tau must be nonnegative");
    const std::size_t n = (tau_ == 0.0) ? 1 : cells + 1;
    require(tau_ == 0.0 || cells >= 1, "history needs at least one cell");
    require(node_major.size() == n * basis_->size(), "history sample count mismatch");
    s_nodes_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s_nodes_[i] = (tau_ == 0.0)
                          ? 0.0
                          : -tau_ + tau_ * static_cast<double>(i) / static_cast<double>(cells);
    s_nodes_.back() = 0.0;
    data_ = std::move(node_major);
}

History History::constant(BasisPtr basis, const Field& xi, double tau) {
    require(basis != nullptr && xi.basis != nullptr, "null basis");
    require(same_basis(*basis, *xi.basis), "basis mismatch");
    const std::size_t cells = (tau == 0.0) ? 0 : 1;
    const std::size_t n = (tau == 0.0) ? 1 : 2;
    std::vector<double> data(n * basis->size());
    for (std::size_t i = 0; i < n; ++i)
        std::copy(xi.coeffs.begin(), xi.coeffs.end(), data.begin() + i * basis->size());
    return History(std::move(basis), tau, cells, std::move(data));
}

History History::sampled(BasisPtr basis, double tau, std::size_t cells,
                         const std::function<Field(double)>& xi) {
    require(basis != nullptr, "null basis");
    require(static_cast<bool>(xi), "history needs a sampler");
    const std::size_t n = (tau == 0.0) ? 1 : cells + 1;
    std::vector<double> data(n * basis->size());
    for (std::size_t i = 0; i < n; ++i) {
        const double s = (tau == 0.0)
                             ? 0.0
                             : -tau + tau * static_cast<double>(i) / static_cast<double>(cells);
        Field f = xi(s);
        require(f.basis != nullptr && same_basis(*f.basis, *basis), "basis mismatch");
        std::copy(f.coeffs.begin(), f.coeffs.end(), data.begin() + i * basis->size());
    }
    return History(std::move(basis), tau, cells, std::move(data));
}

std::span<const double> History::coeffs_at(std::size_t i) const {
    const std::size_t N = basis_->size();
    return std::span<const double>(data_.data() + i * N, N);
}

Field History::at_zero() const {
    auto c = coeffs_at(s_nodes_.size() - 1);
    return Field{basis_, std::vector<double>(c.begin(), c.end())};
}

double History::sup_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < s_nodes_.size(); ++i) {
        double s2 = 0.0;
        for (double c : coeffs_at(i)) s2 += c * c;
        m = std::max(m, s2);
    }
    return std::sqrt(m);
}

void History::interp(double s, std::span<double> out) const {
    const std::size_t N = basis_->size();
    require(out.size() == N, "output size mismatch");
    if (!(s >= -tau_ - 1e-12 && s <= 1e-12))
        throw std::out_of_range("history read outside [-tau, 0]");
    if (s_nodes_.size() == 1 || s >= 0.0) {
        auto c = coeffs_at(s_nodes_.size() - 1);
        std::copy(c.begin(), c.end(), out.begin());
        return;
    }
    s = std::max(s, -tau_);
    const double cellw = tau_ / static_cast<double>(s_nodes_.size() - 1);
    std::size_t j = static_cast<std::size_t>((s + tau_) / cellw);
    j = std::min(j, s_nodes_.size() - 2);
    const double theta = (s - s_nodes_[j]) / (s_nodes_[j + 1] - s_nodes_[j]);
    auto a = coeffs_at(j);
    auto b = coeffs_at(j + 1);
    for (std::size_t k = 0; k < N; ++k) out[k] = (1.0 - theta) * a[k] + theta * b[k];
}

} // namespace rslab
