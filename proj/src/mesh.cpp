#include "ir/mesh.hpp"

#include "ir/params.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ir {

namespace {

// 4-point Gauss-Legendre on [-1,1].
constexpr std::array<double, 4> kGaussX = {-0.8611363115940526, -0.3399810435848563,
                                           0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGaussW = {0.3478548451374538, 0.6521451548625461,
                                           0.6521451548625461, 0.3478548451374538};

double gauss_cell(double a, double b, const std::function<double(double)>& f) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < kGaussX.size(); ++k) s += kGaussW[k] * f(c + h * kGaussX[k]);
    return s * h;
}

std::size_t expected_size(const GradedMesh& m, GridKind kind) {
    const auto n = static_cast<std::size_t>(m.cells());
    return kind == GridKind::nodal ? n + 1 : n;
}

} // namespace

GradedMesh::GradedMesh(int cells, double grading) : grading_(grading), half_(0) {
    if (cells < 2) throw DomainError("build_mesh: need at least 2 cells");
    if (!(grading >= 1.0)) throw DomainError("build_mesh: grading exponent must be >= 1");
    const auto n = static_cast<std::size_t>(cells);
    nodes_.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        nodes_[i] = std::pow(static_cast<double>(i) / static_cast<double>(n), grading);
    }
    nodes_[0] = 0.0;
    nodes_[n] = 1.0;

    std::size_t best = 1;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(nodes_[i] - 0.5) < std::abs(nodes_[best] - 0.5)) best = i;
    }
    nodes_[best] = 0.5;
    half_ = static_cast<int>(best);
}

int GradedMesh::locate(double x) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    int j = static_cast<int>(it - nodes_.begin()) - 1;
    return std::clamp(j, 0, cells() - 1);
}

MeshPtr build_mesh(int cells, double grading) {
    return std::make_shared<const GradedMesh>(cells, grading);
}

const char* to_string(GridKind k) {
    return k == GridKind::nodal ? "nodal" : "cell-average";
}

GridFunction::GridFunction(MeshPtr mesh, std::vector<double> values, GridKind kind)
    : mesh_(std::move(mesh)), values_(std::move(values)), kind_(kind) {
    if (!mesh_) throw DomainError("GridFunction: null mesh");
    if (values_.size() != expected_size(*mesh_, kind_)) {
        throw DomainError("GridFunction: value count does not match mesh and kind");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        // Node 0 of nodal data may carry an integrable singularity.
        if (kind_ == GridKind::nodal && i == 0) continue;
        if (!std::isfinite(values_[i])) throw DomainError("GridFunction: non-finite value");
    }
}

GridFunction GridFunction::constant(MeshPtr mesh, double c, GridKind kind) {
    const auto n = expected_size(*mesh, kind);
    return {std::move(mesh), std::vector<double>(n, c), kind};
}

GridFunction GridFunction::sample(MeshPtr mesh, const std::function<double(double)>& f) {
    std::vector<double> v(mesh->nodes().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(mesh->nodes()[i]);
    return {std::move(mesh), std::move(v), GridKind::nodal};
}

GridFunction GridFunction::from_antiderivative(MeshPtr mesh,
                                               const std::function<double(double)>& F) {
    const int n = mesh->cells();
    std::vector<double> v(static_cast<std::size_t>(n));
    double left = F(mesh->node(0));
    for (int j = 0; j < n; ++j) {
        const double right = F(mesh->node(j + 1));
        v[static_cast<std::size_t>(j)] = (right - left) / mesh->width(j);
        left = right;
    }
    return {std::move(mesh), std::move(v), GridKind::cell_average};
}

GridFunction GridFunction::cell_average_of(MeshPtr mesh, const std::function<double(double)>& f) {
    const int n = mesh->cells();
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        v[static_cast<std::size_t>(j)] =
            gauss_cell(mesh->node(j), mesh->node(j + 1), f) / mesh->width(j);
    }
    return {std::move(mesh), std::move(v), GridKind::cell_average};
}

namespace {

double first_cell_nodal(const GridFunction& f, const EndpointRule& rule) {
    const auto& m = f.mesh();
    const double x1 = m.node(1), x2 = m.node(2);
    const double f1 = f[1], f2 = f[2];
    if (rule.kind == EndpointRule::Kind::integrable_singularity) {
        double s = rule.exponent;
        if (std::isnan(s)) {
            if (f1 == 0.0 || f2 == 0.0 || (f1 > 0) != (f2 > 0)) {
                throw DomainError("integrate: cannot fit local exponent at the origin");
            }
            s = std::log(f2 / f1) / std::log(x2 / x1);
        }
        if (!(s > -1.0)) throw DomainError("integrate: non-integrable singularity at the origin");
        return f1 * x1 / (s + 1.0);
    }
    double f0 = f[0];
    if (!std::isfinite(f0)) f0 = f1 - (f2 - f1) * x1 / (x2 - x1);
    return 0.5 * (f0 + f1) * x1;
}

} // namespace

double integrate(const GridFunction& f, EndpointRule rule) {
    const auto& m = f.mesh();
    const int n = m.cells();
    double s = 0.0;
    if (f.kind() == GridKind::cell_average) {
        for (int j = 0; j < n; ++j) s += f[static_cast<std::size_t>(j)] * m.width(j);
        return s;
    }
    s = first_cell_nodal(f, rule);
    for (int j = 1; j < n; ++j) {
        s += 0.5 * (f[static_cast<std::size_t>(j)] + f[static_cast<std::size_t>(j + 1)]) * m.width(j);
    }
    return s;
}

double integrate_against(const GridFunction& f, const std::function<double(double)>& phi) {
    const auto& m = f.mesh();
    const int n = m.cells();
    double s = 0.0;
    if (f.kind() == GridKind::cell_average) {
        for (int j = 0; j < n; ++j) {
            s += f[static_cast<std::size_t>(j)] * gauss_cell(m.node(j), m.node(j + 1), phi);
        }
        return s;
    }
    for (int j = 0; j < n; ++j) {
        const double a = m.node(j), b = m.node(j + 1);
        double fa = f[static_cast<std::size_t>(j)];
        const double fb = f[static_cast<std::size_t>(j + 1)];
        if (j == 0 && !std::isfinite(fa)) fa = fb;
        s += gauss_cell(a, b, [&](double x) { return (fa + (fb - fa) * (x - a) / (b - a)) * phi(x); });
    }
    return s;
}

double integrate_function(const GradedMesh& mesh, const std::function<double(double)>& f) {
    double s = 0.0;
    for (int j = 0; j < mesh.cells(); ++j) s += gauss_cell(mesh.node(j), mesh.node(j + 1), f);
    return s;
}

std::vector<double> cumulative_integral(const GridFunction& f) {
    const auto& m = f.mesh();
    const int n = m.cells();
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 0; j < n; ++j) {
        double piece;
        if (f.kind() == GridKind::cell_average) {
            piece = f[static_cast<std::size_t>(j)] * m.width(j);
        } else if (j == 0) {
            piece = first_cell_nodal(f, {});
        } else {
            piece = 0.5 * (f[static_cast<std::size_t>(j)] + f[static_cast<std::size_t>(j + 1)]) *
                    m.width(j);
        }
        c[static_cast<std::size_t>(j) + 1] = c[static_cast<std::size_t>(j)] + piece;
    }
    return c;
}

GridFunction differentiate(const GridFunction& f) {
    if (f.kind() != GridKind::nodal) throw DomainError("differentiate: nodal data required");
    const auto& m = f.mesh();
    const auto x = m.nodes();
    const std::size_t n = x.size() - 1;
    std::vector<double> d(n + 1);
    for (std::size_t j = 1; j < n; ++j) {
        const double h1 = x[j] - x[j - 1];
        const double h2 = x[j + 1] - x[j];
        d[j] = -h2 / (h1 * (h1 + h2)) * f[j - 1] + (h2 - h1) / (h1 * h2) * f[j] +
               h1 / (h2 * (h1 + h2)) * f[j + 1];
    }
    {
        const double h1 = x[1] - x[0];
        const double h2 = x[2] - x[1];
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
               h1 / (h2 * (h1 + h2)) * f[2];
    }
    {
        const double h1 = x[n - 1] - x[n - 2];
        const double h2 = x[n] - x[n - 1];
        d[n] = h2 / (h1 * (h1 + h2)) * f[n - 2] - (h1 + h2) / (h1 * h2) * f[n - 1] +
               (2.0 * h2 + h1) / (h2 * (h1 + h2)) * f[n];
    }
    return {f.mesh_ptr(), std::move(d), GridKind::nodal};
}

double evaluate(const GridFunction& f, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("evaluate: x outside [0,1]");
    const auto& m = f.mesh();
    const int j = m.locate(x);
    if (f.kind() == GridKind::cell_average) return f[static_cast<std::size_t>(j)];
    const double a = m.node(j), b = m.node(j + 1);
    const double fa = f[static_cast<std::size_t>(j)];
    const double fb = f[static_cast<std::size_t>(j + 1)];
    if (x == b) return fb;
    if (x == a) return fa;
    return fa + (fb - fa) * (x - a) / (b - a);
}

GridFunction to_nodal(const GridFunction& f) {
    if (f.kind() == GridKind::nodal) return f;
    const std::size_t n = f.size();
    std::vector<double> v(n + 1);
    v[0] = f[0];
    v[n] = f[n - 1];
    for (std::size_t j = 1; j < n; ++j) v[j] = 0.5 * (f[j - 1] + f[j]);
    return {f.mesh_ptr(), std::move(v), GridKind::nodal};
}

void write_csv(std::ostream& os, const GridFunction& f) {
    const auto old = os.precision(17);
    const auto& m = f.mesh();
    os << "# kind=" << to_string(f.kind()) << " cells=" << m.cells() << " grading=" << m.grading()
       << '\n';
    os << "x,value\n";
    for (std::size_t i = 0; i < f.size(); ++i) os << m.nodes()[i] << ',' << f[i] << '\n';
    os.precision(old);
}

GridFunction read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# kind=", 0) != 0) {
        throw DomainError("read_csv: missing '# kind=' header");
    }
    std::istringstream hs(line.substr(2));
    std::string kind_tok, cells_tok, grading_tok;
    hs >> kind_tok >> cells_tok >> grading_tok;
    const std::string kind_str = kind_tok.substr(kind_tok.find('=') + 1);
    const int cells = std::stoi(cells_tok.substr(cells_tok.find('=') + 1));
    const double grading = std::stod(grading_tok.substr(grading_tok.find('=') + 1));
    const GridKind kind = kind_str == "nodal" ? GridKind::nodal : GridKind::cell_average;
    if (kind_str != "nodal" && kind_str != "cell-average") throw DomainError("read_csv: bad kind");

    auto mesh = build_mesh(cells, grading);
    std::getline(is, line); // column header
    std::vector<double> values;
    values.reserve(expected_size(*mesh, kind));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const double x = std::strtod(line.substr(0, comma).c_str(), nullptr);
        const double v = std::strtod(line.substr(comma + 1).c_str(), nullptr);
        if (values.size() >= mesh->nodes().size() || x != mesh->nodes()[values.size()]) {
            throw DomainError("read_csv: abscissae do not match the mesh");
        }
        values.push_back(v);
    }
    return {std::move(mesh), std::move(values), kind};
}

nlohmann::json to_json(const GridFunction& f) {
    const auto& m = f.mesh();
    std::vector<double> x(m.nodes().begin(),
                          m.nodes().begin() + static_cast<std::ptrdiff_t>(f.size()));
    return {{"kind", to_string(f.kind())},
            {"cells", m.cells()},
            {"grading", m.grading()},
            {"x", x},
            {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

GridFunction grid_function_from_json(const nlohmann::json& j) {
    const std::string kind_str = j.at("kind").get<std::string>();
    const GridKind kind = kind_str == "nodal" ? GridKind::nodal : GridKind::cell_average;
    auto mesh = build_mesh(j.at("cells").get<int>(), j.at("grading").get<double>());
    auto values = j.at("values").get<std::vector<double>>();
    if (j.contains("x")) {
        const auto x = j.at("x").get<std::vector<double>>();
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i >= mesh->nodes().size() || x[i] != mesh->nodes()[i]) {
                throw DomainError("grid_function_from_json: abscissae do not match the mesh");
            }
        }
    }
    return {std::move(mesh), std::move(values), kind};
}

} // namespace ir
