#include "peakon/states.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace peakon {

namespace {

// Exact convolution of a cell-average density (cells [x_j, x_j + dx)) with exp(-a|x|)/(2a),
// evaluated at the nodes. Whole-line kernel; positive by construction.
std::vector<double> cell_convolve(const GridFn& f, double a)
{
    const std::size_t n = f.size();
    const double dx = f.grid.spacing;
    const double decay = std::exp(-a * dx);
    const double scale = -std::expm1(-a * dx) / (2.0 * a * a);
    std::vector<double> left(n, 0.0), right(n, 0.0), out(n);
    for (std::size_t i = 1; i < n; ++i) left[i] = decay * left[i - 1] + f[i - 1];
    right[n - 1] = f[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) right[i] = f[i] + decay * right[i + 1];
    for (std::size_t i = 0; i < n; ++i) out[i] = scale * (left[i] + right[i]);
    return out;
}

double log_cosh(double z)
{
    const double a = std::abs(z);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// Mollifier profile exp(1/(x^2-1)) on (-1, 1).
double bump(double x)
{
    const double x2 = x * x;
    return x2 < 1.0 ? std::exp(1.0 / (x2 - 1.0)) : 0.0;
}

}  // namespace

double MomentumMeasure::total_mass() const
{
    double m = 0.0;
    for (const auto& [x, mass] : atoms) m += mass;
    if (density) m += integrate(*density);
    return m;
}

void MomentumMeasure::validate() const
{
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto& [x, m] = atoms[i];
        if (!std::isfinite(x) || !(m > 0.0) || !std::isfinite(m)) throw DomainError("measure: atom masses must be positive and finite");
        if (i > 0 && !(x > atoms[i - 1].first)) throw DomainError("measure: atom positions must be strictly increasing");
    }
    if (density) {
        if (!density->all_finite()) throw DomainError("measure: density must be finite");
        if (density->min() < -1e-12) throw DomainError("measure: density must be nonnegative");
    }
}

GridFn measure_to_field(const MomentumMeasure& y, const UniformGrid& grid)
{
    y.validate();
    GridFn u(grid);
    if (y.density) {
        if (!(y.density->grid == grid)) throw DomainError("measure_to_field: density lives on a different grid");
        u.values = cell_convolve(*y.density, 1.0);
    }
    for (const auto& [x0, m] : y.atoms)
        for (std::size_t j = 0; j < grid.count; ++j) u[j] += m * green_kernel_value(1.0, grid.length, grid.node(j) - x0);
    return u;
}

GridFn measure_to_v(const MomentumMeasure& y, const UniformGrid& grid)
{
    y.validate();
    GridFn v(grid);
    if (y.density) {
        if (!(y.density->grid == grid)) throw DomainError("measure_to_v: density lives on a different grid");
        // (4-d^2)^{-1}(1-d^2)^{-1} = [(1-d^2)^{-1} - (4-d^2)^{-1}] / 3
        const auto k1 = cell_convolve(*y.density, 1.0);
        const auto k2 = cell_convolve(*y.density, 2.0);
        for (std::size_t j = 0; j < grid.count; ++j) v[j] = (k1[j] - k2[j]) / 3.0;
    }
    for (const auto& [x0, m] : y.atoms)
        for (std::size_t j = 0; j < grid.count; ++j) v[j] += 0.5 * m * rho(grid.node(j) - x0);
    return v;
}

PeakonState discretize_measure(const MomentumMeasure& y, double spacing)
{
    if (!(spacing > 0.0)) throw DomainError("discretize_measure: spacing must be positive");
    y.validate();
    std::vector<double> q, p;
    for (const auto& [x, m] : y.atoms) {
        q.push_back(x);
        p.push_back(0.5 * m);
    }
    if (y.density) {
        const GridFn& f = *y.density;
        const double dx = f.grid.spacing;
        std::map<long long, std::pair<double, double>> bins;  // bin -> (mass, first moment)
        for (std::size_t j = 0; j < f.size(); ++j) {
            if (!(f[j] > 0.0)) continue;
            const double a = f.grid.node(j);
            const double b = a + dx;
            auto k = static_cast<long long>(std::floor(a / spacing));
            for (double lo = a; lo < b; ++k) {
                const double hi = std::min(b, static_cast<double>(k + 1) * spacing);
                if (hi > lo) {
                    auto& [mass, moment] = bins[k];
                    mass += f[j] * (hi - lo);
                    moment += f[j] * 0.5 * (hi * hi - lo * lo);
                }
                lo = std::max(lo, hi);
            }
        }
        for (const auto& [k, mm] : bins) {
            if (!(mm.first > 0.0)) continue;
            q.push_back(mm.second / mm.first);
            p.push_back(0.5 * mm.first);
        }
    }
    return make_state(std::move(q), std::move(p));
}

MomentumMeasure measure_from_state(const PeakonState& s)
{
    s.validate();
    MomentumMeasure y;
    for (std::size_t i = 0; i < s.size(); ++i) y.atoms.emplace_back(s.q[i], 2.0 * s.p[i]);
    return y;
}

GridFn mollify(const GridFn& u, int n)
{
    if (n < 1) throw DomainError("mollify: n must be >= 1");
    const UniformGrid& g = u.grid;
    GridFn kernel(g);
    // Kernel indexed by periodic offset j*dx (index 0 is offset 0).
    double sum = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) {
        const double off = j <= g.count / 2 ? static_cast<double>(j) * g.spacing
                                             : -static_cast<double>(g.count - j) * g.spacing;
        kernel[j] = bump(n * off);
        sum += kernel[j];
    }
    if (sum == 0.0) return u;
    kernel *= 1.0 / sum;
    const Spectrum su = forward_fft(u);
    Spectrum sk = forward_fft(kernel);
    for (std::size_t m = 0; m < sk.size(); ++m) sk[m] *= su[m];
    return inverse_fft(g, sk);
}

double w11_norm(const GridFn& w, const GridFn& wx)
{
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += std::abs(w[j]) + std::abs(wx[j]);
    return s * w.grid.spacing;
}

void YplusSampleSpec::validate() const
{
    const bool ok = min_atoms <= max_atoms && min_bumps <= max_bumps && min_mass > 0.0 && max_mass >= min_mass &&
                    spread > 0.0 && min_amplitude > 0.0 && max_amplitude >= min_amplitude && min_width > 0.0 &&
                    max_width >= min_width && (max_atoms + max_bumps) > 0;
    if (!ok) throw DomainError("YplusSampleSpec: ranges must be positive and ordered");
    make_grid(grid_length, grid_count);
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

MomentumMeasure sample_Yplus(const YplusSampleSpec& spec)
{
    spec.validate();
    std::mt19937_64 engine(spec.seed);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit_uniform(engine()); };
    auto count = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(unit_uniform(engine()) * static_cast<double>(hi - lo + 1));
    };

    MomentumMeasure y;
    const std::size_t n_atoms = count(spec.min_atoms, spec.max_atoms);
    std::vector<double> q, m;
    for (std::size_t i = 0; i < n_atoms; ++i) {
        q.push_back(uniform(-spec.spread, spec.spread));
        m.push_back(uniform(spec.min_mass, spec.max_mass));
    }
    const PeakonState merged = make_state(q, m);
    for (std::size_t i = 0; i < merged.size(); ++i) y.atoms.emplace_back(merged.q[i], merged.p[i]);

    const std::size_t n_bumps = count(spec.min_bumps, spec.max_bumps);
    if (n_bumps > 0) {
        const UniformGrid g = make_grid(spec.grid_length, spec.grid_count);
        GridFn f(g);
        const double dx = g.spacing;
        for (std::size_t b = 0; b < n_bumps; ++b) {
            const bool gaussian = unit_uniform(engine()) < 0.5;
            const double amp = uniform(spec.min_amplitude, spec.max_amplitude);
            const double width = uniform(spec.min_width, spec.max_width);
            const double center = uniform(-spec.spread, spec.spread);
            if (gaussian) {
                const double s = std::numbers::sqrt2 * width;
                for (std::size_t j = 0; j < g.count; ++j) {
                    const double a = g.node(j);
                    f[j] += amp * width * std::sqrt(std::numbers::pi / 2.0) *
                            (std::erf((a + dx - center) / s) - std::erf((a - center) / s)) / dx;
                }
            } else {
                // amp * [tanh((x-c+l)/w) - tanh((x-c-l)/w)] / 2 with half length l.
                const double half = width * uniform(1.0, 3.0);
                const double w = width * uniform(0.1, 0.5);
                auto prim = [&](double x) {
                    return 0.5 * w * (log_cosh((x - center + half) / w) - log_cosh((x - center - half) / w));
                };
                for (std::size_t j = 0; j < g.count; ++j) {
                    const double a = g.node(j);
                    f[j] += amp * (prim(a + dx) - prim(a)) / dx;
                }
            }
        }
        for (double& v : f.values) v = std::max(v, 0.0);
        y.density = std::move(f);
    }
    return y;
}

std::string measure_to_json(const MomentumMeasure& y)
{
    nlohmann::json j;
    j["atoms"] = nlohmann::json::array();
    for (const auto& [x, m] : y.atoms) j["atoms"].push_back({x, m});
    if (y.density) {
        j["density"] = {{"grid", {{"L", y.density->grid.length}, {"N", y.density->grid.count}}},
                        {"values", y.density->values}};
    } else {
        j["density"] = nullptr;
    }
    return j.dump();
}

MomentumMeasure measure_from_json(const std::string& text)
{
    MomentumMeasure y;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& a : j.at("atoms")) y.atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
        if (j.contains("density") && !j["density"].is_null()) {
            const auto& d = j["density"];
            const auto g = make_grid(d.at("grid").at("L").get<double>(), d.at("grid").at("N").get<std::size_t>());
            y.density = GridFn(g, d.at("values").get<std::vector<double>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("measure JSON: ") + e.what());
    }
    y.validate();
    return y;
}

}  // namespace peakon
