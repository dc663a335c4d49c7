#include "rslab/time_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace rslab {

TimeGrid::TimeGrid(Kind kind, double exponent, std::vector<double> nodes)
    : kind_(kind), exponent_(exponent), nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw std::invalid_argument("TimeGrid: need at least one cell");
    if (nodes_.front() != 0.0) throw std::invalid_argument("TimeGrid: nodes[0] must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (!(nodes_[i] > nodes_[i - 1]))
            throw std::invalid_argument("TimeGrid: nodes must increase strictly");
}

TimeGrid TimeGrid::uniform(double T, std::size_t cells) {
    if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: T must be > 0");
    if (cells == 0) throw std::invalid_argument("TimeGrid: cells must be > 0");
    std::vector<double> nodes(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
        nodes[i] = (static_cast<double>(i) * T) / static_cast<double>(cells);
    nodes[cells] = T;
    return TimeGrid(Kind::Uniform, 1.0, std::move(nodes));
}

TimeGrid TimeGrid::graded(double T, std::size_t cells, double exponent) {
    if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: T must be > 0");
    if (cells == 0) throw std::invalid_argument("TimeGrid: cells must be > 0");
    if (!(exponent >= 1.0)) throw std::invalid_argument("TimeGrid: grading exponent must be >= 1");
    std::vector<double> nodes(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) {
        double ratio = static_cast<double>(i) / static_cast<double>(cells);
        nodes[i] = T * std::pow(ratio, exponent);
    }
    nodes[cells] = T;
    return TimeGrid(Kind::Graded, exponent, std::move(nodes));
}

TimeGrid TimeGrid::refined() const {
    if (kind_ == Kind::Uniform) return uniform(T(), 2 * cells());
    return graded(T(), 2 * cells(), exponent_);
}

double TimeGrid::h() const {
    if (kind_ != Kind::Uniform) throw std::logic_error("TimeGrid::h: grid is not uniform");
    return nodes_[1];
}

TimeGrid default_relaxation_grid(double alpha, double T, std::size_t cells) {
    if (alpha < 0.5) return TimeGrid::graded(T, cells, 2.0);
    return TimeGrid::uniform(T, cells);
}

} // namespace rslab
