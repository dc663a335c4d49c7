#pragma once

#include <cstddef>
#include <vector>

namespace rslab {

// Monotone time grid on [0, T] with nodes[0] == 0.  Uniform grids enable the
// translation-invariant convolution weights; graded grids cluster nodes near
// t = 0 where the relaxation function has an algebraic boundary layer.
class TimeGrid {
  public:
    enum class Kind { Uniform, Graded };

    static TimeGrid uniform(double T, std::size_t cells);
    static TimeGrid graded(double T, std::size_t cells, double exponent);

    // Refines every cell in two.  Node values at even indices match the
    // parent grid bitwise, which step-halving error estimates rely on.
    TimeGrid refined() const;

    Kind kind() const { return kind_; }
    double T() const { return nodes_.back(); }
    double grading() const { return exponent_; }
    std::size_t cells() const { return nodes_.size() - 1; }
    std::size_t size() const { return nodes_.size(); }
    double node(std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }

    bool is_uniform() const { return kind_ == Kind::Uniform; }
    // Spacing of a uniform grid; throws for graded grids.
    double h() const;

  private:
    TimeGrid(Kind kind, double exponent, std::vector<double> nodes);

    Kind kind_;
    double exponent_;
    std::vector<double> nodes_;
};

// Default grid policy for relaxation sampling on [0, T]: exponent-2 grading
// when alpha < 0.5, uniform otherwise.
TimeGrid default_relaxation_grid(double alpha, double T, std::size_t cells);

} // namespace rslab
