#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ir {

/// Partition of [0,1] with nodes (i/N)^p, clustered at the neutral fixed
/// point.  The node nearest 1/2 is snapped to exactly 1/2 so that the branch
/// boundary is a cell boundary.
class GradedMesh {
public:
    GradedMesh(int cells, double grading);

    int cells() const { return static_cast<int>(nodes_.size()) - 1; }
    double grading() const { return grading_; }
    std::span<const double> nodes() const { return nodes_; }
    double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    double width(int j) const { return node(j + 1) - node(j); }

    /// Index of the node equal to 1/2; cells [0, half) lie in the left branch.
    int half_index() const { return half_; }

    /// Cell containing x (x = 1 maps to the last cell).
    int locate(double x) const;

    friend bool operator==(const GradedMesh& a, const GradedMesh& b) {
        return a.grading_ == b.grading_ && a.nodes_ == b.nodes_;
    }

private:
    std::vector<double> nodes_;
    double grading_;
    int half_;
};

using MeshPtr = std::shared_ptr<const GradedMesh>;

MeshPtr build_mesh(int cells, double grading);

enum class GridKind { cell_average, nodal };

const char* to_string(GridKind k);

/// A function on a graded mesh, stored as cell averages (N values) or nodal
/// samples (N+1 values).
class GridFunction {
public:
    GridFunction(MeshPtr mesh, std::vector<double> values, GridKind kind);

    static GridFunction constant(MeshPtr mesh, double c, GridKind kind);
    /// Nodal samples of f.
    static GridFunction sample(MeshPtr mesh, const std::function<double(double)>& f);
    /// Exact cell averages of f given its antiderivative.
    static GridFunction from_antiderivative(MeshPtr mesh,
                                            const std::function<double(double)>& antiderivative);
    /// Cell averages by Gauss-Legendre quadrature on each cell.
    static GridFunction cell_average_of(MeshPtr mesh, const std::function<double(double)>& f);

    const GradedMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    GridKind kind() const { return kind_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

private:
    MeshPtr mesh_;
    std::vector<double> values_;
    GridKind kind_;
};

/// How the first cell of a nodal integrand is treated.
struct EndpointRule {
    enum class Kind {
        regular,               ///< node-0 value used if finite, otherwise linear extrapolation
        integrable_singularity ///< power-law analytic limit on the first cell
    };
    Kind kind = Kind::regular;
    /// Local exponent s of f ~ c x^s at 0; NaN means fit it from nodes 1 and 2.
    double exponent = std::numeric_limits<double>::quiet_NaN();

    static EndpointRule singular(double s = std::numeric_limits<double>::quiet_NaN()) {
        return {Kind::integrable_singularity, s};
    }
};

/// Integral over [0,1]: exact sum for cell averages, trapezoid for nodal data.
double integrate(const GridFunction& f, EndpointRule rule = {});

/// Integral of f * phi, phi integrated per cell by Gauss-Legendre quadrature.
double integrate_against(const GridFunction& f, const std::function<double(double)>& phi);

/// Integral of a callable over [0,1] by Gauss-Legendre on each mesh cell.
double integrate_function(const GradedMesh& mesh, const std::function<double(double)>& f);

/// Cumulative integral int_0^{x_j} f at every node (N+1 values).
std::vector<double> cumulative_integral(const GridFunction& f);

/// Three-point nonuniform finite differences, one-sided at the endpoints.
GridFunction differentiate(const GridFunction& f);

/// Linear interpolation (nodal) or cell lookup (cell averages).
double evaluate(const GridFunction& f, double x);

/// Nodal samples obtained by averaging adjacent cell averages (one-sided at the ends).
GridFunction to_nodal(const GridFunction& f);

void write_csv(std::ostream& os, const GridFunction& f);
GridFunction read_csv(std::istream& is);
nlohmann::json to_json(const GridFunction& f);
GridFunction grid_function_from_json(const nlohmann::json& j);

} // namespace ir
