#include "peakon/particles.hpp"

#include "peakon/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace peakon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// One-sided exponential sums at sorted query points:
//   left  = sum_{q_j < x} p_j e^{-r (x - q_j)}
//   at    = sum_{q_j == x} p_j
//   right = sum_{q_j > x} p_j e^{-r (q_j - x)}
struct SideSums {
    std::vector<double> left, at, right;
};

SideSums side_sums(const PeakonState& s, std::span<const double> sorted_x, double r)
{
    const std::size_t m = sorted_x.size();
    const std::size_t n = s.size();
    SideSums out{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)};

    double acc = 0.0;
    double pos = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = sorted_x[i];
        while (j < n && s.q[j] < x) {
            acc = (j == 0 ? 0.0 : acc * std::exp(-r * (s.q[j] - pos))) + s.p[j];
            pos = s.q[j];
            ++j;
        }
        out.left[i] = j == 0 ? 0.0 : acc * std::exp(-r * (x - pos));
        double at = 0.0;
        for (std::size_t k = j; k < n && s.q[k] == x; ++k) at += s.p[k];
        out.at[i] = at;
    }

    acc = 0.0;
    pos = 0.0;
    std::size_t taken = 0;  // atoms consumed from the right
    for (std::size_t ii = m; ii-- > 0;) {
        const double x = sorted_x[ii];
        while (taken < n && s.q[n - 1 - taken] > x) {
            const std::size_t k = n - 1 - taken;
            acc = (taken == 0 ? 0.0 : acc * std::exp(-r * (pos - s.q[k]))) + s.p[k];
            pos = s.q[k];
            ++taken;
        }
        out.right[ii] = taken == 0 ? 0.0 : acc * std::exp(-r * (pos - x));
    }
    return out;
}

double term_value(const ExpTerm& t, double lo, double hi, double x)
{
    double e = 0.0;
    if (t.a != 0.0) e -= t.a * (x - lo);
    if (t.b != 0.0) e -= t.b * (hi - x);
    return std::exp(e);
}

// Integral of exp(-a(x-lo) - b(hi-x)) over [x0, x1] inside the piece.
double term_integral(const ExpTerm& t, double lo, double hi, double x0, double x1)
{
    const double slope = t.b - t.a;
    if (slope == 0.0) {
        // A constant term only arises on bounded pieces.
        if (!std::isfinite(x0) || !std::isfinite(x1)) throw DomainError("PiecewiseExp: non-integrable tail term");
        return (x1 - x0) * term_value(t, lo, hi, x0);
    }
    if (!std::isfinite(x0)) return term_value(t, lo, hi, x1) / slope;   // slope > 0
    if (!std::isfinite(x1)) return -term_value(t, lo, hi, x0) / slope;  // slope < 0
    const double w = x1 - x0;
    if (slope > 0.0) return -term_value(t, lo, hi, x1) * std::expm1(-slope * w) / slope;
    return term_value(t, lo, hi, x0) * std::expm1(slope * w) / slope;
}

void push_term(std::vector<ExpTerm>& terms, double coef, double a, double b)
{
    if (coef == 0.0) return;
    for (ExpTerm& t : terms) {
        if (t.a == a && t.b == b) {
            t.coef += coef;
            return;
        }
    }
    terms.push_back({coef, a, b});
}

}  // namespace

bool PeakonState::is_valid() const
{
    if (q.size() != p.size()) return false;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!std::isfinite(q[i]) || !std::isfinite(p[i])) return false;
        if (i > 0 && !(q[i] > q[i - 1])) return false;
    }
    return true;
}

bool PeakonState::is_positive() const
{
    return is_valid() && std::all_of(p.begin(), p.end(), [](double v) { return v > 0.0; });
}

void PeakonState::validate() const
{
    if (q.size() != p.size()) throw DomainError("peakon state: q and p lengths differ");
    if (!is_valid()) throw DomainError("peakon state: positions must be finite and strictly increasing");
}

double PeakonState::momentum_mass() const { return 2.0 * std::accumulate(p.begin(), p.end(), 0.0); }

PeakonState PeakonState::translated(double shift) const
{
    PeakonState out = *this;
    for (double& x : out.q) x += shift;
    return out;
}

PeakonState make_state(std::vector<double> q, std::vector<double> p)
{
    if (q.size() != p.size()) throw DomainError("make_state: q and p lengths differ");
    std::vector<std::size_t> order(q.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
    PeakonState s;
    for (std::size_t idx : order) {
        if (!s.q.empty() && s.q.back() == q[idx]) {
            s.p.back() += p[idx];
        } else {
            s.q.push_back(q[idx]);
            s.p.push_back(p[idx]);
        }
    }
    return s;
}

PeakonState single_peakon(double c, double x0) { return PeakonState{{x0}, {c}}; }

double peakon_field(const PeakonState& s, double x)
{
    double u = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) u += s.p[i] * std::exp(-std::abs(x - s.q[i]));
    return u;
}

std::vector<double> peakon_field(const PeakonState& s, std::span<const double> points)
{
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = peakon_field(s, points[i]);
    return out;
}

double rho(double x)
{
    const double e = std::exp(-std::abs(x));
    return e / 3.0 - e * e / 6.0;
}

double rho_prime(double x)
{
    const double e = std::exp(-std::abs(x));
    const double mag = -e / 3.0 + e * e / 3.0;
    return x > 0.0 ? mag : (x < 0.0 ? -mag : 0.0);
}

double rho_second(double x)
{
    const double e = std::exp(-std::abs(x));
    return e / 3.0 - 2.0 * e * e / 3.0;
}

std::vector<double> rho_profile(std::span<const double> points)
{
    std::vector<double> out(points.size());
    std::transform(points.begin(), points.end(), out.begin(), [](double x) { return rho(x); });
    return out;
}

std::vector<FieldSample> evaluate_exact(const PeakonState& s, std::span<const double> points)
{
    s.validate();
    const std::size_t m = points.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<double> xs(m);
    for (std::size_t i = 0; i < m; ++i) xs[i] = points[order[i]];

    const SideSums s1 = side_sums(s, xs, 1.0);
    const SideSums s2 = side_sums(s, xs, 2.0);

    // h = P + Q with P(x) = 1/2 int_{-inf}^x e^{-(x-s)} u^2, Q(x) = 1/2 int_x^inf e^{-(s-x)} u^2,
    // integrated exactly between consecutive breakpoints (atoms and query points).
    std::vector<double> bp;
    bp.reserve(m + s.size());
    std::merge(xs.begin(), xs.end(), s.q.begin(), s.q.end(), std::back_inserter(bp));
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    const std::size_t nb = bp.size();
    std::vector<double> P(nb, 0.0), Q(nb, 0.0);
    if (nb > 0 && !s.empty()) {
        const SideSums b1 = side_sums(s, bp, 1.0);
        std::vector<double> lincl(nb), rincl(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            lincl[k] = b1.left[k] + b1.at[k];
            rincl[k] = b1.right[k] + b1.at[k];
        }
        P[0] = 0.5 * rincl[0] * rincl[0] / 3.0;
        for (std::size_t k = 0; k + 1 < nb; ++k) {
            const double d = bp[k + 1] - bp[k];
            const double e = std::exp(-d);
            const double om = -std::expm1(-d);
            const double om3 = -std::expm1(-3.0 * d) / 3.0;
            const double A = lincl[k];
            const double B = rincl[k + 1];
            P[k + 1] = e * P[k] + 0.5 * (A * A * e * om + 2.0 * A * B * e * om + B * B * om3);
        }
        Q[nb - 1] = 0.5 * lincl[nb - 1] * lincl[nb - 1] / 3.0;
        for (std::size_t k = nb - 1; k-- > 0;) {
            const double d = bp[k + 1] - bp[k];
            const double e = std::exp(-d);
            const double om = -std::expm1(-d);
            const double om3 = -std::expm1(-3.0 * d) / 3.0;
            const double A = lincl[k];
            const double B = rincl[k + 1];
            Q[k] = e * Q[k + 1] + 0.5 * (A * A * om3 + 2.0 * A * B * e * om + B * B * e * om);
        }
    }

    std::vector<FieldSample> out(m);
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i) {
        while (k < nb && bp[k] < xs[i]) ++k;
        FieldSample f;
        const double l1 = s1.left[i], a0 = s1.at[i], r1 = s1.right[i];
        const double l2 = s2.left[i], r2 = s2.right[i];
        f.u = l1 + a0 + r1;
        f.ux = -l1 + r1;
        f.ux_left = -l1 + a0 + r1;
        f.ux_right = -l1 - a0 + r1;
        const double w2 = l2 + a0 + r2;
        f.v = f.u / 3.0 - w2 / 6.0;
        f.vx = (-l1 + r1) / 3.0 + (l2 - r2) / 3.0;
        f.vxx = f.u / 3.0 - 2.0 * w2 / 3.0;
        if (k < nb) {
            f.h = P[k] + Q[k];
            f.hx = Q[k] - P[k];
        }
        out[order[i]] = f;
    }
    return out;
}

PiecewiseExp PiecewiseExp::from_state(const PeakonState& s, Field which)
{
    s.validate();
    const std::size_t n = s.size();
    PiecewiseExp out;
    if (n == 0) {
        out.pieces_.push_back({-kInf, kInf, {}});
        return out;
    }
    const SideSums b1 = side_sums(s, s.q, 1.0);
    const SideSums b2 = side_sums(s, s.q, 2.0);
    for (std::size_t k = 0; k <= n; ++k) {
        Piece pc;
        pc.lo = k == 0 ? -kInf : s.q[k - 1];
        pc.hi = k == n ? kInf : s.q[k];
        // alpha_r: atoms at or left of lo seen from lo; beta_r: atoms at or right of hi.
        const double a1 = k == 0 ? 0.0 : b1.left[k - 1] + b1.at[k - 1];
        const double a2 = k == 0 ? 0.0 : b2.left[k - 1] + b2.at[k - 1];
        const double c1 = k == n ? 0.0 : b1.right[k] + b1.at[k];
        const double c2 = k == n ? 0.0 : b2.right[k] + b2.at[k];
        auto& t = pc.terms;
        switch (which) {
        case Field::u:
            push_term(t, a1, 1, 0);
            push_term(t, c1, 0, 1);
            break;
        case Field::ux:
            push_term(t, -a1, 1, 0);
            push_term(t, c1, 0, 1);
            break;
        case Field::v:
            push_term(t, a1 / 3.0, 1, 0);
            push_term(t, c1 / 3.0, 0, 1);
            push_term(t, -a2 / 6.0, 2, 0);
            push_term(t, -c2 / 6.0, 0, 2);
            break;
        case Field::vx:
            push_term(t, -a1 / 3.0, 1, 0);
            push_term(t, c1 / 3.0, 0, 1);
            push_term(t, a2 / 3.0, 2, 0);
            push_term(t, -c2 / 3.0, 0, 2);
            break;
        case Field::vxx:
            push_term(t, a1 / 3.0, 1, 0);
            push_term(t, c1 / 3.0, 0, 1);
            push_term(t, -2.0 * a2 / 3.0, 2, 0);
            push_term(t, -2.0 * c2 / 3.0, 0, 2);
            break;
        }
        out.pieces_.push_back(std::move(pc));
    }
    return out;
}

PiecewiseExp PiecewiseExp::operator*(const PiecewiseExp& o) const
{
    if (pieces_.size() != o.pieces_.size()) throw DomainError("PiecewiseExp: mismatched breakpoints");
    PiecewiseExp out;
    out.pieces_.reserve(pieces_.size());
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
        const Piece& x = pieces_[k];
        const Piece& y = o.pieces_[k];
        if (x.lo != y.lo || x.hi != y.hi) throw DomainError("PiecewiseExp: mismatched breakpoints");
        Piece pc{x.lo, x.hi, {}};
        for (const ExpTerm& s : x.terms)
            for (const ExpTerm& t : y.terms) push_term(pc.terms, s.coef * t.coef, s.a + t.a, s.b + t.b);
        out.pieces_.push_back(std::move(pc));
    }
    return out;
}

PiecewiseExp PiecewiseExp::operator+(const PiecewiseExp& o) const
{
    if (pieces_.size() != o.pieces_.size()) throw DomainError("PiecewiseExp: mismatched breakpoints");
    PiecewiseExp out = *this;
    for (std::size_t k = 0; k < pieces_.size(); ++k)
        for (const ExpTerm& t : o.pieces_[k].terms) push_term(out.pieces_[k].terms, t.coef, t.a, t.b);
    return out;
}

PiecewiseExp PiecewiseExp::scaled(double s) const
{
    PiecewiseExp out = *this;
    for (Piece& pc : out.pieces_)
        for (ExpTerm& t : pc.terms) t.coef *= s;
    return out;
}

double PiecewiseExp::evaluate(double x) const
{
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x,
                               [](const Piece& pc, double v) { return pc.hi < v; });
    if (it == pieces_.end()) --it;
    double acc = 0.0;
    for (const ExpTerm& t : it->terms) acc += t.coef * term_value(t, it->lo, it->hi, x);
    return acc;
}

double PiecewiseExp::integrate(double x0, double x1) const
{
    if (!(x1 > x0)) return 0.0;
    double acc = 0.0;
    for (const Piece& pc : pieces_) {
        const double lo = std::max(pc.lo, x0);
        const double hi = std::min(pc.hi, x1);
        if (!(hi > lo)) continue;
        for (const ExpTerm& t : pc.terms) acc += t.coef * term_integral(t, pc.lo, pc.hi, lo, hi);
    }
    return acc;
}

double PiecewiseExp::integrate() const { return integrate(-kInf, kInf); }

std::vector<std::pair<double, double>> PiecewiseExp::quadrature() const
{
    constexpr double kTailDecay = 52.0;  // e^{-52} ~ 2.6e-23
    constexpr double kMaxSub = 0.5;
    std::vector<std::pair<double, double>> out;
    for (const Piece& pc : pieces_) {
        if (pc.terms.empty()) continue;
        double lo = pc.lo, hi = pc.hi;
        if (!std::isfinite(lo) && !std::isfinite(hi)) continue;
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            double slowest = kInf;
            for (const ExpTerm& t : pc.terms) slowest = std::min(slowest, std::isfinite(lo) ? t.a : t.b);
            const double span = kTailDecay / std::max(slowest, 1e-3);
            if (!std::isfinite(lo)) lo = hi - span;
            else hi = lo + span;
        }
        const double width = hi - lo;
        if (!(width > 0.0)) continue;
        const auto nsub = static_cast<std::size_t>(std::ceil(width / kMaxSub));
        const double h = width / static_cast<double>(nsub);
        for (std::size_t s = 0; s < nsub; ++s) {
            const double mid = lo + (static_cast<double>(s) + 0.5) * h;
            for (std::size_t g = 0; g < kGlNodes.size(); ++g) {
                const double x = mid + 0.5 * h * kGlNodes[g];
                double f = 0.0;
                for (const ExpTerm& t : pc.terms) f += t.coef * term_value(t, pc.lo, pc.hi, x);
                out.emplace_back(x, 0.5 * h * kGlWeights[g] * f);
            }
        }
    }
    return out;
}

double PiecewiseExp::integrate_weighted(const std::function<double(double)>& weight) const
{
    double acc = 0.0;
    for (const auto& [x, wf] : quadrature()) acc += wf * weight(x);
    return acc;
}

}  // namespace peakon
