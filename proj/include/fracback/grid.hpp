#pragma once

#include "fracback/errors.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>

namespace fracback {

/// Uniform interior mesh of the unit interval (0,1) or unit square (0,1)^2
/// with homogeneous Dirichlet boundary; boundary values are identically zero
/// and never stored. Node index i runs x-fastest: i = iy*nx + ix.
class Grid {
public:
    static Grid line(int nx) { return Grid(1, nx, 1); }
    static Grid square(int nx, int ny) { return Grid(2, nx, ny); }

    int dim() const { return dim_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int interior_count() const { return nx_ * ny_; }
    double hx() const { return 1.0 / (nx_ + 1); }
    double hy() const { return dim_ == 2 ? 1.0 / (ny_ + 1) : 1.0; }
    /// Quadrature weight of one node in the discrete L2 inner product.
    double weight() const { return dim_ == 2 ? hx() * hy() : hx(); }

    double x(int i) const { return hx() * (i % nx_ + 1); }
    double y(int i) const { return dim_ == 2 ? hy() * (i / nx_ + 1) : 0.0; }
    int ix(int i) const { return i % nx_; }
    int iy(int i) const { return i / nx_; }

    bool operator==(const Grid& o) const {
        return dim_ == o.dim_ && nx_ == o.nx_ && ny_ == o.ny_;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }

    std::string describe() const {
        return dim_ == 1 ? "line " + std::to_string(nx_)
                         : "square " + std::to_string(nx_) + " " + std::to_string(ny_);
    }

private:
    Grid(int dim, int nx, int ny) : dim_(dim), nx_(nx), ny_(ny) {
        if (nx_ < 3 || (dim_ == 2 && ny_ < 3)) {
            throw domain_error("grid: at least 3 interior points per axis");
        }
    }
    int dim_;
    int nx_;
    int ny_;
};

/// K-component grid function over the interior nodes of a Grid.
/// Storage is (M x K) column-major, so each component is contiguous and the
/// flattened view coincides with the component-major stacked vector used by
/// CoupledOperator.
class Field {
public:
    Field(const Grid& grid, int components)
        : grid_(grid),
          values_(Eigen::MatrixXd::Zero(grid.interior_count(), components)) {
        if (components < 1) throw domain_error("field: components must be >= 1");
    }

    static Field from_function(
        const Grid& grid, int components,
        const std::function<double(int /*component*/, double /*x*/, double /*y*/)>& f) {
        Field out(grid, components);
        for (int k = 0; k < components; ++k) {
            for (int i = 0; i < grid.interior_count(); ++i) {
                out.values_(i, k) = f(k, grid.x(i), grid.y(i));
            }
        }
        return out;
    }

    const Grid& grid() const { return grid_; }
    int components() const { return static_cast<int>(values_.cols()); }
    int size() const { return static_cast<int>(values_.size()); }

    double& at(int component, int node) { return values_(node, component); }
    double at(int component, int node) const { return values_(node, component); }

    Eigen::MatrixXd& values() { return values_; }
    const Eigen::MatrixXd& values() const { return values_; }

    /// Component-major stacked vector view (length K*M).
    Eigen::Map<Eigen::VectorXd> flat() {
        return Eigen::Map<Eigen::VectorXd>(values_.data(), values_.size());
    }
    Eigen::Map<const Eigen::VectorXd> flat() const {
        return Eigen::Map<const Eigen::VectorXd>(values_.data(), values_.size());
    }

    static Field from_flat(const Grid& grid, int components,
                           const Eigen::VectorXd& stacked) {
        Field out(grid, components);
        if (stacked.size() != out.size()) {
            throw shape_error("field: stacked vector has wrong length");
        }
        out.flat() = stacked;
        return out;
    }

    bool all_finite() const { return values_.allFinite(); }

    /// Discrete L2 norm, weighted by the grid quadrature weight.
    double norm() const { return std::sqrt(grid_.weight()) * flat().norm(); }
    double dot(const Field& other) const {
        check_same_shape(other);
        return grid_.weight() * flat().dot(other.flat());
    }

    void check_same_shape(const Field& other) const {
        if (grid_ != other.grid_ || components() != other.components()) {
            throw shape_error("field: grid/component mismatch");
        }
    }

private:
    Grid grid_;
    Eigen::MatrixXd values_;
};

} // namespace fracback
