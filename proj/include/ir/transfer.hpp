#pragma once

#include "ir/map_core.hpp"
#include "ir/mesh.hpp"
#include "ir/params.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ir {

/// L phi (x) = sum_i g_i'(x) phi(g_i(x)) for x in (0,1).
double apply_pointwise(const ParamPoint& p, const std::function<double(double)>& phi, double x);

/// Row-stochastic Ulam matrix: entry (i,j) = m(I_i ∩ T^{-1} I_j) / m(I_i).
/// Stored row-compressed together with its transpose so that pushes are
/// gathers with a fixed summation order per output cell.
class UlamOperator {
public:
    UlamOperator(ParamPoint params, MeshPtr mesh, std::vector<std::uint64_t> row_ptr,
                 std::vector<std::uint32_t> col, std::vector<double> val);

    const ParamPoint& params() const { return params_; }
    const GradedMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    int size() const { return mesh_->cells(); }
    std::size_t nnz() const { return val_.size(); }

    std::span<const std::uint64_t> row_ptr() const { return row_ptr_; }
    std::span<const std::uint32_t> col() const { return col_; }
    std::span<const double> val() const { return val_; }

    double max_row_sum_deviation() const { return max_dev_; }

    /// Masses nu_j = sum_i mu_i P_ij.  Rows outside [row_lo, row_hi) are
    /// ignored, which restricts the push to one branch.
    std::vector<double> push_masses(std::span<const double> mu, int row_lo = 0,
                                    int row_hi = -1) const;

    friend bool operator==(const UlamOperator& a, const UlamOperator& b);

private:
    ParamPoint params_;
    MeshPtr mesh_;
    std::vector<std::uint64_t> row_ptr_;
    std::vector<std::uint32_t> col_;
    std::vector<double> val_;
    // transpose
    std::vector<std::uint64_t> t_ptr_;
    std::vector<std::uint32_t> t_row_;
    std::vector<double> t_val_;
    double max_dev_ = 0.0;
};

UlamOperator assemble_ulam(const ParamPoint& p, MeshPtr mesh);

enum class Branch { both, left, right };

/// One discrete transfer step on cell-average densities.
GridFunction push_density(const UlamOperator& U, const GridFunction& d, Branch branch = Branch::both);

/// Cell masses d_j |I_j| and back.
std::vector<double> cell_masses(const GridFunction& d);
GridFunction density_from_masses(MeshPtr mesh, std::span<const double> mu);

enum class DensityMethod {
    direct, ///< sparse LU on the stationarity equations
    power   ///< renormalized power iteration with Cesàro averaging
};

struct DensityOptions {
    DensityMethod method = DensityMethod::direct;
    int max_iter = 50000;
    double tol = 1e-8;
};

struct ConvergenceReport {
    DensityMethod method = DensityMethod::direct;
    bool converged = false;
    int iterations = 0;
    double final_increment = 0.0; ///< last L1 increment (power iteration)
    double residual = 0.0;        ///< || push(h) - h ||_1 of the returned density
    int average_from = 0;         ///< first iterate in the Cesàro window
    int average_to = 0;
    std::vector<double> increments; ///< L1 increment per iteration (power)
};

struct DensityResult {
    GridFunction density;
    ConvergenceReport report;
};

DensityResult invariant_density(const UlamOperator& U, const DensityOptions& opts = {});
DensityResult invariant_density(const ParamPoint& p, MeshPtr mesh, const DensityOptions& opts = {});

/// Local power-law exponent of cell averages near 0, fitted from cells 1 and 2.
double density_local_exponent(const GridFunction& h);

/// Pointwise density value; inside the first cell it extrapolates with the
/// fitted local exponent (diverging at 0 when that exponent is negative).
double density_value(const GridFunction& h, double x);

const char* to_string(DensityMethod m);
nlohmann::json to_json(const ConvergenceReport& r);

/// Context for the operator phi -> g^{-1} L (g phi) with g(x) = x^e,
/// e = 1/beta_u - alpha_u - 1 from the upper corner of the box.
class WeightedOperatorContext {
public:
    WeightedOperatorContext(ParamBox box, MeshPtr mesh);

    const ParamBox& box() const { return box_; }
    const GradedMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    double exponent() const { return exponent_; }
    /// Exact cell averages of the weight.
    std::span<const double> weight_averages() const { return gbar_; }

private:
    ParamBox box_;
    MeshPtr mesh_;
    double exponent_;
    std::vector<double> gbar_;
};

/// One weighted step; the result is in cell-average form.  Nodal input is
/// converted by averaging the two endpoint values of each cell.
GridFunction weighted_apply(const WeightedOperatorContext& ctx, const UlamOperator& U,
                            const GridFunction& phi);

/// Sup norms of n successive weighted steps applied to phi.
std::vector<double> weighted_sup_history(const WeightedOperatorContext& ctx, const UlamOperator& U,
                                         const GridFunction& phi, int n);

void write_ulam_binary(std::ostream& os, const UlamOperator& U);
UlamOperator read_ulam_binary(std::istream& is);
nlohmann::json ulam_summary(const UlamOperator& U);

} // namespace ir
