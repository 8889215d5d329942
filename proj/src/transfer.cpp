#include "ir/transfer.hpp"

#include "ir/parallel.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ir {

double apply_pointwise(const ParamPoint& p, const std::function<double(double)>& phi, double x) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("apply_pointwise: x must lie in (0,1)");
    double s = 0.0;
    for (int i = 1; i <= 2; ++i) {
        const auto d = inverse_branch_deriv(p, i, x);
        s += d.d1 * phi(d.g);
    }
    return s;
}

// ---------------------------------------------------------------- UlamOperator

UlamOperator::UlamOperator(ParamPoint params, MeshPtr mesh, std::vector<std::uint64_t> row_ptr,
                           std::vector<std::uint32_t> col, std::vector<double> val)
    : params_(params), mesh_(std::move(mesh)), row_ptr_(std::move(row_ptr)), col_(std::move(col)),
      val_(std::move(val)) {
    if (!mesh_) throw std::invalid_argument("UlamOperator: null mesh");
    const auto n = static_cast<std::size_t>(mesh_->cells());
    if (row_ptr_.size() != n + 1 || row_ptr_.front() != 0 || row_ptr_.back() != val_.size() ||
        col_.size() != val_.size())
        throw std::invalid_argument("UlamOperator: inconsistent sparse structure");

    std::vector<std::uint64_t> count(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (row_ptr_[i + 1] < row_ptr_[i]) throw std::invalid_argument("UlamOperator: row pointer not monotone");
        double s = 0.0;
        for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            if (col_[k] >= n) throw std::invalid_argument("UlamOperator: column index out of range");
            if (!(val_[k] >= 0.0)) throw std::invalid_argument("UlamOperator: negative or non-finite entry");
            s += val_[k];
            ++count[col_[k] + 1];
        }
        max_dev_ = std::max(max_dev_, std::abs(s - 1.0));
    }
    if (max_dev_ > 1e-10)
        throw std::runtime_error("UlamOperator: row sum deviates from 1 by " + std::to_string(max_dev_));

    // Transpose with rows visited in increasing order, so each column's
    // entries are sorted by source row.
    std::partial_sum(count.begin(), count.end(), count.begin());
    t_ptr_ = count;
    t_row_.resize(val_.size());
    t_val_.resize(val_.size());
    std::vector<std::uint64_t> fill(count.begin(), count.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const auto pos = fill[col_[k]]++;
            t_row_[pos] = static_cast<std::uint32_t>(i);
            t_val_[pos] = val_[k];
        }
    }
}

std::vector<double> UlamOperator::push_masses(std::span<const double> mu, int row_lo, int row_hi) const {
    const auto n = static_cast<std::size_t>(size());
    if (mu.size() != n) throw std::invalid_argument("push_masses: size mismatch");
    if (row_hi < 0) row_hi = size();
    const auto lo = static_cast<std::uint32_t>(row_lo);
    const auto hi = static_cast<std::uint32_t>(row_hi);
    std::vector<double> nu(n, 0.0);
    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t j_end = std::min(n, (b + 1) * kBlock);
        for (std::size_t j = b * kBlock; j < j_end; ++j) {
            double s = 0.0;
            for (auto k = t_ptr_[j]; k < t_ptr_[j + 1]; ++k) {
                const auto i = t_row_[k];
                if (i >= lo && i < hi) s += mu[i] * t_val_[k];
            }
            nu[j] = s;
        }
    });
    return nu;
}

bool operator==(const UlamOperator& a, const UlamOperator& b) {
    return a.params_ == b.params_ && *a.mesh_ == *b.mesh_ && a.row_ptr_ == b.row_ptr_ &&
           a.col_ == b.col_ && a.val_ == b.val_;
}

UlamOperator assemble_ulam(const ParamPoint& p, MeshPtr mesh) {
    if (!mesh) throw std::invalid_argument("assemble_ulam: null mesh");
    const GradedMesh& m = *mesh;
    const int n = m.cells();
    const int half = m.half_index();
    if (m.node(half) != 0.5) throw std::invalid_argument("assemble_ulam: mesh lacks node 1/2");

    // Branch preimages of every node; cell j of the image pulls back to
    // [G[j], G[j+1]] inside the branch domain.
    std::array<std::vector<double>, 2> G;
    for (int b = 0; b < 2; ++b) {
        G[b].resize(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) G[b][static_cast<std::size_t>(k)] = inverse_branch(p, b + 1, m.node(k));
        G[b].front() = b == 0 ? 0.0 : 0.5;
        G[b].back() = b == 0 ? 0.5 : 1.0;
        for (int k = 1; k <= n; ++k) {
            auto& g = G[b];
            if (g[static_cast<std::size_t>(k)] < g[static_cast<std::size_t>(k) - 1])
                throw std::runtime_error("assemble_ulam: branch preimages not monotone");
        }
    }

    constexpr int kBlock = 1024;
    const auto blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
    std::vector<std::vector<std::uint32_t>> bcol(blocks);
    std::vector<std::vector<double>> bval(blocks);
    std::vector<std::uint64_t> row_len(static_cast<std::size_t>(n), 0);

    parallel_for(blocks, [&](std::size_t blk) {
        const int i_lo = static_cast<int>(blk) * kBlock;
        const int i_hi = std::min(n, i_lo + kBlock);
        for (int i = i_lo; i < i_hi; ++i) {
            const auto& g = G[i < half ? 0 : 1];
            const double a = m.node(i);
            const double b = m.node(i + 1);
            const double w = b - a;
            auto it = std::upper_bound(g.begin(), g.end(), a);
            auto j = static_cast<int>(std::max<std::ptrdiff_t>(0, (it - g.begin()) - 1));
            std::uint64_t len = 0;
            for (; j < n && g[static_cast<std::size_t>(j)] < b; ++j) {
                const double overlap =
                    std::min(b, g[static_cast<std::size_t>(j) + 1]) - std::max(a, g[static_cast<std::size_t>(j)]);
                if (overlap <= 0.0) continue;
                bcol[blk].push_back(static_cast<std::uint32_t>(j));
                bval[blk].push_back(overlap / w);
                ++len;
            }
            row_len[static_cast<std::size_t>(i)] = len;
        }
    });

    std::vector<std::uint64_t> row_ptr(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i)
        row_ptr[static_cast<std::size_t>(i) + 1] = row_ptr[static_cast<std::size_t>(i)] + row_len[static_cast<std::size_t>(i)];
    std::vector<std::uint32_t> col;
    std::vector<double> val;
    col.reserve(row_ptr.back());
    val.reserve(row_ptr.back());
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        col.insert(col.end(), bcol[blk].begin(), bcol[blk].end());
        val.insert(val.end(), bval[blk].begin(), bval[blk].end());
    }
    return UlamOperator(p, std::move(mesh), std::move(row_ptr), std::move(col), std::move(val));
}

std::vector<double> cell_masses(const GridFunction& d) {
    if (d.kind() != GridKind::cell_average) throw std::invalid_argument("cell_masses: expected cell averages");
    std::vector<double> mu(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) mu[j] = d[j] * d.mesh().width(static_cast<int>(j));
    return mu;
}

GridFunction density_from_masses(MeshPtr mesh, std::span<const double> mu) {
    std::vector<double> v(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) v[j] = mu[j] / mesh->width(static_cast<int>(j));
    return GridFunction(std::move(mesh), std::move(v), GridKind::cell_average);
}

GridFunction push_density(const UlamOperator& U, const GridFunction& d, Branch branch) {
    if (d.kind() != GridKind::cell_average) throw std::invalid_argument("push_density: expected cell averages");
    if (!(d.mesh() == U.mesh())) throw std::invalid_argument("push_density: mesh mismatch");
    const auto mu = cell_masses(d);
    int lo = 0, hi = U.size();
    if (branch == Branch::left) hi = U.mesh().half_index();
    if (branch == Branch::right) lo = U.mesh().half_index();
    return density_from_masses(U.mesh_ptr(), U.push_masses(mu, lo, hi));
}

// ---------------------------------------------------------- invariant density

namespace {

double l1_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

void normalize(std::vector<double>& mu) {
    const double s = std::accumulate(mu.begin(), mu.end(), 0.0);
    for (auto& v : mu) v /= s;
}

std::vector<double> solve_direct(const UlamOperator& U, ConvergenceReport& rep) {
    using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
    const int n = U.size();
    const int pin = n - 1;
    std::vector<Eigen::Triplet<double, int>> trip;
    trip.reserve(U.nnz() + static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        if (j != pin) trip.emplace_back(j, j, 1.0);
    trip.emplace_back(pin, pin, 1.0);
    const auto rp = U.row_ptr();
    const auto cl = U.col();
    const auto vl = U.val();
    for (int i = 0; i < n; ++i) {
        for (auto k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
            const int j = static_cast<int>(cl[k]);
            if (j != pin) trip.emplace_back(j, i, -vl[k]);
        }
    }
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("invariant_density: sparse factorization failed");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[pin] = 1.0;
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw std::runtime_error("invariant_density: sparse solve failed");
    std::vector<double> mu(x.data(), x.data() + n);
    for (auto& v : mu) v = std::max(v, 0.0);
    normalize(mu);
    rep.iterations = 1;
    rep.converged = true;
    return mu;
}

// Running sums over blocks of consecutive iterates; blocks older than the
// Cesàro window are discarded as the iteration count grows.
struct IterateBlock {
    int first;
    int count;
    std::vector<double> sum;
};

std::vector<double> solve_power(const UlamOperator& U, const DensityOptions& opts, ConvergenceReport& rep) {
    const auto n = static_cast<std::size_t>(U.size());
    std::vector<double> mu(n);
    for (std::size_t j = 0; j < n; ++j) mu[j] = U.mesh().width(static_cast<int>(j));
    normalize(mu);

    std::vector<IterateBlock> blocks;
    int it = 0;
    double inc = std::numeric_limits<double>::infinity();
    while (it < opts.max_iter) {
        auto next = U.push_masses(mu);
        normalize(next);
        inc = l1_diff(next, mu);
        rep.increments.push_back(inc);
        mu = std::move(next);
        ++it;

        const int block_size = std::max(1, it / 64);
        if (blocks.empty() || blocks.back().count >= block_size) blocks.push_back({it, 0, std::vector<double>(n, 0.0)});
        auto& cur = blocks.back();
        for (std::size_t j = 0; j < n; ++j) cur.sum[j] += mu[j];
        ++cur.count;
        const int window_start = it - it / 4;
        while (blocks.size() > 1 && blocks[1].first <= window_start) blocks.erase(blocks.begin());

        if (inc < opts.tol) break;
    }
    rep.iterations = it;
    rep.final_increment = inc;
    rep.converged = inc < opts.tol;

    const int window_start = it - it / 4;
    std::vector<double> avg(n, 0.0);
    int used = 0;
    int first = it;
    for (const auto& b : blocks) {
        if (b.first < window_start && &b != &blocks.back()) continue;
        for (std::size_t j = 0; j < n; ++j) avg[j] += b.sum[j];
        used += b.count;
        first = std::min(first, b.first);
    }
    rep.average_from = first;
    rep.average_to = it;
    if (used == 0) return mu;
    normalize(avg);
    return avg;
}

} // namespace

DensityResult invariant_density(const UlamOperator& U, const DensityOptions& opts) {
    if (opts.max_iter < 1 || !(opts.tol > 0.0)) throw std::invalid_argument("invariant_density: bad options");
    ConvergenceReport rep;
    rep.method = opts.method;
    auto mu = opts.method == DensityMethod::direct ? solve_direct(U, rep) : solve_power(U, opts, rep);
    auto pushed = U.push_masses(mu);
    rep.residual = l1_diff(pushed, mu);
    return {density_from_masses(U.mesh_ptr(), mu), rep};
}

DensityResult invariant_density(const ParamPoint& p, MeshPtr mesh, const DensityOptions& opts) {
    return invariant_density(assemble_ulam(p, std::move(mesh)), opts);
}

double density_local_exponent(const GridFunction& h) {
    if (h.kind() != GridKind::cell_average) throw std::invalid_argument("density_local_exponent: expected cell averages");
    const auto& m = h.mesh();
    const double c1 = 0.5 * (m.node(1) + m.node(2));
    const double c2 = 0.5 * (m.node(2) + m.node(3));
    if (!(h[1] > 0.0 && h[2] > 0.0)) return 0.0;
    return std::log(h[2] / h[1]) / std::log(c2 / c1);
}

double density_value(const GridFunction& h, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("density_value: x outside [0,1]");
    const auto& m = h.mesh();
    if (h.kind() == GridKind::nodal) return evaluate(h, x);
    if (x >= m.node(1)) return evaluate(h, x);
    const double s = density_local_exponent(h);
    if (x == 0.0) return s < 0.0 ? std::numeric_limits<double>::infinity() : (s == 0.0 ? h[1] : 0.0);
    const double c1 = 0.5 * (m.node(1) + m.node(2));
    return h[1] * std::pow(x / c1, s);
}

const char* to_string(DensityMethod m) { return m == DensityMethod::direct ? "direct" : "power"; }

nlohmann::json to_json(const ConvergenceReport& r) {
    return {{"method", to_string(r.method)},   {"converged", r.converged},
            {"iterations", r.iterations},      {"final_increment", r.final_increment},
            {"residual", r.residual},          {"average_from", r.average_from},
            {"average_to", r.average_to}};
}

// ------------------------------------------------------- weighted operator

WeightedOperatorContext::WeightedOperatorContext(ParamBox box, MeshPtr mesh)
    : box_(box), mesh_(std::move(mesh)), exponent_(box_.upper().density_exponent()) {
    if (!mesh_) throw std::invalid_argument("WeightedOperatorContext: null mesh");
    if (!(exponent_ > -1.0 && exponent_ < 0.0))
        throw DomainError("WeightedOperatorContext: weight exponent must lie in (-1,0)");
    const double e1 = exponent_ + 1.0;
    gbar_.resize(static_cast<std::size_t>(mesh_->cells()));
    for (int j = 0; j < mesh_->cells(); ++j) {
        const double a = mesh_->node(j), b = mesh_->node(j + 1);
        gbar_[static_cast<std::size_t>(j)] = (std::pow(b, e1) - std::pow(a, e1)) / (e1 * (b - a));
    }
}

GridFunction weighted_apply(const WeightedOperatorContext& ctx, const UlamOperator& U, const GridFunction& phi) {
    if (!ctx.box().contains(U.params())) throw DomainError("weighted_apply: parameters outside the box");
    if (!(U.mesh() == ctx.mesh()) || !(phi.mesh() == ctx.mesh()))
        throw std::invalid_argument("weighted_apply: mesh mismatch");
    const auto n = static_cast<std::size_t>(U.size());
    std::vector<double> avg(n);
    if (phi.kind() == GridKind::cell_average) {
        std::copy(phi.values().begin(), phi.values().end(), avg.begin());
    } else {
        for (std::size_t j = 0; j < n; ++j) {
            const double a = phi[j], b = phi[j + 1];
            avg[j] = std::isfinite(a) ? 0.5 * (a + b) : b;
        }
    }
    const auto g = ctx.weight_averages();
    std::vector<double> mass(n);
    for (std::size_t j = 0; j < n; ++j) mass[j] = avg[j] * g[j] * U.mesh().width(static_cast<int>(j));
    auto nu = U.push_masses(mass);
    for (std::size_t j = 0; j < n; ++j) nu[j] /= g[j] * U.mesh().width(static_cast<int>(j));
    return GridFunction(U.mesh_ptr(), std::move(nu), GridKind::cell_average);
}

std::vector<double> weighted_sup_history(const WeightedOperatorContext& ctx, const UlamOperator& U,
                                         const GridFunction& phi, int n) {
    std::vector<double> sup;
    sup.reserve(static_cast<std::size_t>(std::max(n, 0)));
    GridFunction cur = phi;
    for (int k = 0; k < n; ++k) {
        cur = weighted_apply(ctx, U, cur);
        double s = 0.0;
        for (double v : cur.values()) s = std::max(s, std::abs(v));
        sup.push_back(s);
    }
    return sup;
}

// ------------------------------------------------------------ serialization

namespace {

constexpr std::array<char, 8> kMagic = {'U', 'L', 'A', 'M', '1', 0, 0, 0};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits;
    std::memcpy(&bits, &v, sizeof(T));
    char buf[sizeof(T)];
    for (std::size_t k = 0; k < sizeof(T); ++k) buf[k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
    os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw std::runtime_error("read_ulam_binary: truncated file");
    U bits = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(buf[k]) << (8 * k);
    T v;
    std::memcpy(&v, &bits, sizeof(T));
    return v;
}

} // namespace

void write_ulam_binary(std::ostream& os, const UlamOperator& U) {
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, 0);
    put<double>(os, U.params().alpha());
    put<double>(os, U.params().beta());
    put<double>(os, U.mesh().grading());
    put<std::uint64_t>(os, static_cast<std::uint64_t>(U.size()));
    put<std::uint64_t>(os, U.nnz());
    for (auto v : U.row_ptr()) put<std::uint64_t>(os, v);
    for (auto v : U.col()) put<std::uint32_t>(os, v);
    for (auto v : U.val()) put<double>(os, v);
    if (!os) throw std::runtime_error("write_ulam_binary: write failed");
}

UlamOperator read_ulam_binary(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic)
        throw std::runtime_error("read_ulam_binary: bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw std::runtime_error("read_ulam_binary: unsupported version");
    (void)get<std::uint32_t>(is);
    const double alpha = get<double>(is);
    const double beta = get<double>(is);
    const double grading = get<double>(is);
    const auto cells = get<std::uint64_t>(is);
    const auto nnz = get<std::uint64_t>(is);
    if (cells < 2 || cells > (1ULL << 31) || nnz > 64 * cells)
        throw std::runtime_error("read_ulam_binary: implausible sizes");
    std::vector<std::uint64_t> row_ptr(cells + 1);
    for (auto& v : row_ptr) v = get<std::uint64_t>(is);
    std::vector<std::uint32_t> col(nnz);
    for (auto& v : col) v = get<std::uint32_t>(is);
    std::vector<double> val(nnz);
    for (auto& v : val) v = get<double>(is);
    return UlamOperator(ParamPoint(alpha, beta), build_mesh(static_cast<int>(cells), grading),
                        std::move(row_ptr), std::move(col), std::move(val));
}

nlohmann::json ulam_summary(const UlamOperator& U) {
    return {{"format", "ULAM1"},
            {"alpha", U.params().alpha()},
            {"beta", U.params().beta()},
            {"cells", U.size()},
            {"grading", U.mesh().grading()},
            {"nnz", U.nnz()},
            {"max_row_sum_deviation", U.max_row_sum_deviation()}};
}

} // namespace ir
