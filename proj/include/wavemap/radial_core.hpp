#pragma once

// Radial grids, quadrature against r dr, norms, and the discrete operators
// used by the rest of the library.
//
// Discretization summary
//   * trapezoid weights w_i for the measure r dr;
//   * the radial Laplacian is in flux form on the edges between nodes, with a
//     ghost value 0 at r = 0 and a caller-chosen ghost value one spacing past
//     r_max.  The H-norm uses the same edges, so <L0 f|f> = |f|_H^2 exactly;
//   * Lambda0 = 1 + r d/dr and the virial operator A0 are built as skew forms
//     on the same edges, so they are antisymmetric in the discrete inner
//     product for fields that vanish at both end nodes.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "errors.hpp"

namespace wavemap {

inline constexpr double pi = std::numbers::pi;

// ---------------------------------------------------------------- grid

struct Grading {
    enum class Kind { uniform, geometric };
    Kind kind = Kind::uniform;
    double ratio = 1.0;

    static Grading uniform() { return {}; }
    static Grading geometric(double ratio) { return {Kind::geometric, ratio}; }
};

struct RadialGrid {
    std::vector<double> r;  ///< nodes, strictly increasing, r.back() == r_max
    std::vector<double> w;  ///< trapezoid weights for r dr
    /// Edge e joins node e-1 and node e.  Edge 0 joins the origin to r[0];
    /// edge n joins r[n-1] to the outer ghost node.  kappa = midpoint / length.
    std::vector<double> kappa;
    std::vector<double> edge_mid;
    double r_max = 0.0;
    double r_ghost = 0.0;
    Grading grading;

    std::size_t size() const { return r.size(); }
};

using Grid = std::shared_ptr<const RadialGrid>;

namespace detail {

inline Grid finish_grid(std::vector<double> nodes, double r_ghost, Grading g) {
    auto grid = std::make_shared<RadialGrid>();
    const std::size_t n = nodes.size();
    grid->r = std::move(nodes);
    grid->r_max = grid->r.back();
    grid->r_ghost = r_ghost;
    grid->grading = g;
    const auto& r = grid->r;
    grid->w.resize(n);
    grid->w[0] = 0.5 * (r[1] - r[0]) * r[0];
    for (std::size_t i = 1; i + 1 < n; ++i) grid->w[i] = 0.5 * (r[i + 1] - r[i - 1]) * r[i];
    grid->w[n - 1] = 0.5 * (r[n - 1] - r[n - 2]) * r[n - 1];
    grid->kappa.resize(n + 1);
    grid->edge_mid.resize(n + 1);
    auto edge = [&](std::size_t e, double lo, double hi) {
        grid->edge_mid[e] = 0.5 * (lo + hi);
        grid->kappa[e] = grid->edge_mid[e] / (hi - lo);
    };
    edge(0, 0.0, r[0]);
    for (std::size_t e = 1; e < n; ++e) edge(e, r[e - 1], r[e]);
    edge(n, r[n - 1], r_ghost);
    return grid;
}

}  // namespace detail

/// Uniform grid: r_i = (i+1) r_max / n.  Geometric grid: constant node ratio
/// ending at r_max.
inline Grid make_grid(double r_max, int n, Grading grading) {
    if (!(r_max > 0.0) || n < 16)
        throw Error(ErrorKind::invalid_argument, "radial_core", "make_grid needs r_max > 0 and n >= 16");
    std::vector<double> nodes(static_cast<std::size_t>(n));
    double ghost = 0.0;
    if (grading.kind == Grading::Kind::uniform) {
        const double h = r_max / n;
        for (int i = 0; i < n; ++i) nodes[i] = (i + 1) * h;
        nodes.back() = r_max;
        ghost = r_max + h;
    } else {
        const double q = grading.ratio;
        if (!(q > 1.0)) throw Error(ErrorKind::invalid_argument, "radial_core", "geometric ratio must exceed 1");
        const double lq = std::log(q);
        for (int i = 0; i < n; ++i) nodes[i] = r_max * std::exp(lq * (i - (n - 1)));
        nodes.back() = r_max;
        ghost = r_max * q;
        const auto inner = std::count_if(nodes.begin(), nodes.end(), [&](double x) { return x <= r_max / 100.0; });
        if (4 * inner < n)
            throw Error(ErrorKind::invalid_argument, "radial_core",
                        "geometric ratio too small: fewer than n/4 nodes below r_max/100");
    }
    return detail::finish_grid(std::move(nodes), ghost, grading);
}

/// Geometric grid through both r_min and r_max.
inline Grid make_geometric_span(double r_min, double r_max, int n) {
    if (!(r_min > 0.0) || !(r_max > r_min) || n < 16)
        throw Error(ErrorKind::invalid_argument, "radial_core", "make_geometric_span needs 0 < r_min < r_max, n >= 16");
    const double lq = std::log(r_max / r_min) / (n - 1);
    std::vector<double> nodes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) nodes[i] = r_min * std::exp(lq * i);
    nodes.front() = r_min;
    nodes.back() = r_max;
    return detail::finish_grid(std::move(nodes), r_max * std::exp(lq), Grading::geometric(std::exp(lq)));
}

// ---------------------------------------------------------------- fields

struct RadialField {
    Grid grid;
    std::vector<double> v;
    std::optional<int> origin_exponent;
    std::optional<int> tail_exponent;

    RadialField() = default;
    RadialField(Grid g, std::vector<double> values, std::optional<int> p = {}, std::optional<int> q = {})
        : grid(std::move(g)), v(std::move(values)), origin_exponent(p), tail_exponent(q) {
        if (!grid || v.size() != grid->size())
            throw Error(ErrorKind::invalid_argument, "radial_core", "field length must equal grid size");
        for (double x : v)
            if (!std::isfinite(x)) throw Error(ErrorKind::numerical_failure, "radial_core", "non-finite field value");
    }

    static RadialField zeros(const Grid& g) { return RadialField(g, std::vector<double>(g->size(), 0.0)); }

    static RadialField sample(const Grid& g, const std::function<double(double)>& fn, std::optional<int> p = {},
                              std::optional<int> q = {}) {
        std::vector<double> vals(g->size());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = fn(g->r[i]);
        return RadialField(g, std::move(vals), p, q);
    }

    std::size_t size() const { return v.size(); }
    double operator[](std::size_t i) const { return v[i]; }
};

struct StatePair {
    RadialField u;
    RadialField udot;

    StatePair() = default;
    StatePair(RadialField a, RadialField b) : u(std::move(a)), udot(std::move(b)) {
        if (u.grid != udot.grid)
            throw Error(ErrorKind::incompatible_grids, "radial_core", "state components on different grids");
    }
    const Grid& grid() const { return u.grid; }
};

inline void require_same_grid(const RadialField& f, const RadialField& g) {
    if (f.grid != g.grid && (f.grid->r != g.grid->r))
        throw Error(ErrorKind::incompatible_grids, "radial_core", "fields live on different grids");
}

// elementwise helpers, metadata dropped unless both sides agree
inline RadialField axpy(double a, const RadialField& x, const RadialField& y) {
    require_same_grid(x, y);
    std::vector<double> out(y.v);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x.v[i];
    return RadialField(y.grid, std::move(out));
}
inline RadialField operator+(const RadialField& a, const RadialField& b) { return axpy(1.0, a, b); }
inline RadialField operator-(const RadialField& a, const RadialField& b) { return axpy(-1.0, b, a); }
inline RadialField operator*(double s, const RadialField& a) {
    std::vector<double> out(a.v);
    for (double& x : out) x *= s;
    return RadialField(a.grid, std::move(out), a.origin_exponent, a.tail_exponent);
}
inline RadialField pointwise(const RadialField& a, const std::function<double(double, double)>& fn) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a.grid->r[i], a.v[i]);
    return RadialField(a.grid, std::move(out));
}

// ---------------------------------------------------------------- quadrature and norms

inline double inner(const RadialField& f, const RadialField& g) {
    require_same_grid(f, g);
    const auto& w = f.grid->w;
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f.v[i] * g.v[i];
    return s;
}

inline double norm_L2(const RadialField& f) { return std::sqrt(inner(f, f)); }

/// Gradient part of the H form over all edges, with ghost values 0 at the
/// origin and `outer` past r_max.
/// Inner closure.  A declared origin exponent p gives the flux r f' = p f at
/// r[0] (and accounts for the energy of r^p below r[0]); otherwise a ghost
/// value 0 sits at the origin.
inline double origin_coupling(const RadialField& f) {
    if (f.origin_exponent && *f.origin_exponent > 0) return static_cast<double>(*f.origin_exponent);
    return f.grid->kappa[0];
}

inline double gradient_form(const RadialField& f, double outer = 0.0) {
    const auto& G = *f.grid;
    const std::size_t n = G.size();
    double s = origin_coupling(f) * f.v[0] * f.v[0];
    for (std::size_t e = 1; e < n; ++e) {
        const double d = f.v[e] - f.v[e - 1];
        s += G.kappa[e] * d * d;
    }
    const double d = outer - f.v[n - 1];
    return s + G.kappa[n] * d * d;
}

inline double norm_H(const RadialField& f, int k) {
    const auto& G = *f.grid;
    double s = gradient_form(f);
    for (std::size_t i = 0; i < G.size(); ++i) s += k * k * G.w[i] * f.v[i] * f.v[i] / (G.r[i] * G.r[i]);
    if (!std::isfinite(s)) throw Error(ErrorKind::numerical_failure, "radial_core", "non-finite H norm");
    return std::sqrt(s);
}

/// Integral of (f_r^2 + k^2 f^2 / r^2) r dr over nodes with r <= r_cut.
inline double local_H_form(const RadialField& f, int k, double r_cut) {
    const auto& G = *f.grid;
    double s = origin_coupling(f) * f.v[0] * f.v[0];
    for (std::size_t e = 0; e < G.size(); ++e) {
        if (G.r[e] > r_cut) break;
        if (e > 0) {
            const double d = f.v[e] - f.v[e - 1];
            s += G.kappa[e] * d * d;
        }
        s += k * k * G.w[e] * f.v[e] * f.v[e] / (G.r[e] * G.r[e]);
    }
    return s;
}

// ---------------------------------------------------------------- operators

/// Flux-form radial Laplacian with the inner closure of origin_coupling and
/// ghost value `outer` past r_max.
inline RadialField laplacian(const RadialField& f, double outer = 0.0) {
    const auto& G = *f.grid;
    const std::size_t n = G.size();
    std::vector<double> out(n);
    double flux_lo = origin_coupling(f) * f.v[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double next = (i + 1 < n) ? f.v[i + 1] : outer;
        const double flux_hi = G.kappa[i + 1] * (next - f.v[i]);
        out[i] = (flux_hi - flux_lo) / G.w[i];
        flux_lo = flux_hi;
    }
    return RadialField(f.grid, std::move(out));
}

/// Pointwise second-order derivative: centered three-point on non-uniform
/// nodes, origin ghost 0 at r = 0, one-sided three-point at r_max.
inline RadialField derivative(const RadialField& f) {
    const auto& r = f.grid->r;
    const std::size_t n = r.size();
    std::vector<double> out(n);
    auto centered = [](double xm, double x0, double xp, double fm, double f0, double fp) {
        const double hm = x0 - xm, hp = xp - x0;
        return (-hp / (hm * (hm + hp))) * fm + ((hp - hm) / (hm * hp)) * f0 + (hm / (hp * (hm + hp))) * fp;
    };
    const bool origin_zero = !f.origin_exponent || *f.origin_exponent > 0;
    if (origin_zero)
        out[0] = centered(0.0, r[0], r[1], 0.0, f.v[0], f.v[1]);
    else
        out[0] = (f.v[1] - f.v[0]) / (r[1] - r[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = centered(r[i - 1], r[i], r[i + 1], f.v[i - 1], f.v[i], f.v[i + 1]);
    {
        const double x0 = r[n - 3], x1 = r[n - 2], x2 = r[n - 1];
        const double h1 = x1 - x0, h2 = x2 - x1;
        out[n - 1] = f.v[n - 3] * h2 / (h1 * (h1 + h2)) - f.v[n - 2] * (h1 + h2) / (h1 * h2) +
                     f.v[n - 1] * (h1 + 2.0 * h2) / (h2 * (h1 + h2));
    }
    return RadialField(f.grid, std::move(out));
}

/// Skew first-order operator a(r) d/dr + (a' + a/r)/2 with a(r) = coeff(r).
/// Boundary closures make it reproduce Lambda0 on constants when a(r) = r.
inline RadialField transport(const RadialField& f, const std::function<double(double)>& coeff) {
    const auto& G = *f.grid;
    const std::size_t n = G.size();
    std::vector<double> c(n + 1, 0.0);
    for (std::size_t e = 1; e < n; ++e) c[e] = G.edge_mid[e] * coeff(G.edge_mid[e]);
    const double m1 = G.edge_mid[1], mn = G.edge_mid[n - 1];
    const double alpha = (m1 * m1 - 2.0 * G.w[0]) * (c[1] / (m1 * m1));
    const double beta = (2.0 * G.w[n - 1] + mn * mn) * (c[n - 1] / (mn * mn));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        if (i + 1 < n) s += c[i + 1] * f.v[i + 1];
        if (i > 0) s -= c[i] * f.v[i - 1];
        if (i == 0) s -= alpha * f.v[0];
        if (i == n - 1) s += beta * f.v[n - 1];
        out[i] = s / (2.0 * G.w[i]);
    }
    return RadialField(f.grid, std::move(out));
}

inline RadialField lambda0(const RadialField& f) {
    auto out = transport(f, [](double r) { return r; });
    out.origin_exponent = f.origin_exponent;
    out.tail_exponent = f.tail_exponent;
    return out;
}

inline RadialField lambda(const RadialField& f) {
    auto out = lambda0(f);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= f.v[i];
    return out;
}

inline double closed_Q(int k, double r) { return 2.0 * std::atan(std::pow(r, k)); }
inline double closed_LamQ(int k, double r) {
    // 2k r^k/(1+r^{2k}), written to avoid overflow for large r
    if (r <= 1.0) {
        const double x = std::pow(r, k);
        return 2.0 * k * x / (1.0 + x * x);
    }
    const double y = std::pow(r, -k);
    return 2.0 * k * y / (1.0 + y * y);
}
inline double closed_Lam0LamQ(int k, double r) {
    // (1 + r d/dr) LamQ = LamQ + 2k^2 r^k (1 - r^{2k})/(1+r^{2k})^2
    const double x = (r <= 1.0) ? std::pow(r, k) : std::pow(r, -k);
    const double sgn = (r <= 1.0) ? 1.0 : -1.0;
    return closed_LamQ(k, r) + sgn * 2.0 * k * k * x * (1.0 - x * x) / ((1.0 + x * x) * (1.0 + x * x));
}
/// P = k^2 (cos 2Q - 1)/r^2 = -2 k^2 sin^2 Q / r^2
inline double closed_P(int k, double r) {
    const double s = closed_LamQ(k, r) / k;
    return -2.0 * k * k * s * s / (r * r);
}

/// Nonlinearity of the equation, u_tt - Delta u + f(u)/r^2 = 0.
inline double f_nl(int k, double u) { return 0.5 * k * k * std::sin(2.0 * u); }
inline double df_nl(int k, double u) { return k * k * std::cos(2.0 * u); }

struct OperatorSample {
    enum class Kind { laplacian, Lambda, Lambda0, L0, L_about_U, potential_P };
    Kind kind = Kind::laplacian;
    int k = 4;
    double scale = 1.0;                  ///< lambda for potential_P
    std::optional<RadialField> background;  ///< U for L_about_U
    double outer_value = 0.0;            ///< ghost value past r_max for Laplacian-type kinds
};

inline RadialField apply_operator(const OperatorSample& op, const RadialField& f) {
    using K = OperatorSample::Kind;
    const auto& G = *f.grid;
    auto with_potential = [&](auto&& pot) {
        auto out = laplacian(f, op.outer_value);
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = -out.v[i] + pot(i) * f.v[i];
        return out;
    };
    switch (op.kind) {
        case K::laplacian: return laplacian(f, op.outer_value);
        case K::Lambda: return lambda(f);
        case K::Lambda0: return lambda0(f);
        case K::L0:
            return with_potential([&](std::size_t i) { return op.k * op.k / (G.r[i] * G.r[i]); });
        case K::L_about_U: {
            if (!op.background)
                throw Error(ErrorKind::invalid_argument, "radial_core", "L_about_U requires a background field");
            require_same_grid(*op.background, f);
            const auto& U = op.background->v;
            return with_potential([&](std::size_t i) { return df_nl(op.k, U[i]) / (G.r[i] * G.r[i]); });
        }
        case K::potential_P: {
            if (!(op.scale > 0.0)) throw Error(ErrorKind::invalid_argument, "radial_core", "P needs scale > 0");
            std::vector<double> out(f.size());
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = closed_P(op.k, G.r[i] / op.scale) / (op.scale * op.scale) * f.v[i];
            return RadialField(f.grid, std::move(out));
        }
    }
    throw Error(ErrorKind::invalid_argument, "radial_core", "unknown operator kind");
}

inline OperatorSample op_L0(int k) { return {OperatorSample::Kind::L0, k, 1.0, std::nullopt, 0.0}; }
inline OperatorSample op_L_about(int k, RadialField U) {
    return {OperatorSample::Kind::L_about_U, k, 1.0, std::move(U), 0.0};
}

inline double norm_H2(const RadialField& f, int k) { return norm_L2(apply_operator(op_L0(k), f)); }

inline double norm_state(const StatePair& s, int k) {
    const double a = norm_H(s.u, k), b = norm_L2(s.udot);
    return std::sqrt(a * a + b * b);
}

inline double norm_LamInvH(const StatePair& s, int k) {
    return norm_state(StatePair(lambda(s.u), lambda0(s.udot)), k);
}

/// The multiple of pi nearest to the outermost value: the vacuum the field approaches.
inline double vacuum_value(const RadialField& u) { return pi * std::round(u.v.back() / pi); }

inline double energy(const StatePair& s, int k, std::optional<double> outer = {}) {
    const auto& G = *s.grid();
    const double ghost = outer ? *outer : vacuum_value(s.u);
    double e = gradient_form(s.u, ghost);
    for (std::size_t i = 0; i < G.size(); ++i) {
        const double sn = std::sin(s.u.v[i]);
        e += G.w[i] * (s.udot.v[i] * s.udot.v[i] + k * k * sn * sn / (G.r[i] * G.r[i]));
    }
    if (!std::isfinite(e)) throw Error(ErrorKind::numerical_failure, "radial_core", "non-finite energy");
    return pi * e;
}

// ---------------------------------------------------------------- interpolation and rescaling

/// Monotone cubic interpolation in log r, with power-law extrapolation by
/// the declared endpoint exponents (zero outside when none is declared).
class LogInterpolant {
public:
    LogInterpolant() = default;
    explicit LogInterpolant(const RadialField& f)
        : r0_(f.grid->r.front()), r1_(f.grid->r.back()), f0_(f.v.front()), f1_(f.v.back()),
          p_(f.origin_exponent), q_(f.tail_exponent) {
        std::vector<double> x(f.size()), y(f.v);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::log(f.grid->r[i]);
        spline_ = std::make_shared<Spline>(std::move(x), std::move(y));
    }

    double operator()(double r) const {
        if (r < r0_) return p_ ? f0_ * std::pow(r / r0_, *p_) : 0.0;
        if (r > r1_) return q_ ? f1_ * std::pow(r / r1_, *q_) : 0.0;
        return (*spline_)(std::log(r));
    }

private:
    using Spline = boost::math::interpolators::pchip<std::vector<double>>;
    double r0_ = 0, r1_ = 0, f0_ = 0, f1_ = 0;
    std::optional<int> p_, q_;
    std::shared_ptr<Spline> spline_;
};

enum class Convention { H, L2 };

inline RadialField rescale(const RadialField& f, double lam, Convention conv) {
    if (!(lam > 0.0)) throw Error(ErrorKind::invalid_argument, "radial_core", "rescale needs lambda > 0");
    if (lam == 1.0) return f;
    const auto& G = *f.grid;
    // the bulk of |f| must land on resolved nodes after rescaling
    std::size_t ipk = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (std::abs(f.v[i]) > std::abs(f.v[ipk])) ipk = i;
    if (lam * G.r[ipk] < 4.0 * G.r[0] && std::abs(f.v[ipk]) > 0.0)
        throw Error(ErrorKind::resolution_error, "radial_core", "rescaled profile falls below the innermost node");
    LogInterpolant interp(f);
    const double amp = conv == Convention::L2 ? 1.0 / lam : 1.0;
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = amp * interp(G.r[i] / lam);
    return RadialField(f.grid, std::move(out), f.origin_exponent, f.tail_exponent);
}

// ---------------------------------------------------------------- diagnostics and I/O

/// Least-squares slope of log|f| against log r over nodes in [r_lo, r_hi].
inline double loglog_slope(const RadialField& f, double r_lo, double r_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = f.grid->r[i];
        if (r < r_lo || r > r_hi || f.v[i] == 0.0) continue;
        const double x = std::log(r), y = std::log(std::abs(f.v[i]));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++m;
    }
    if (m < 3) throw Error(ErrorKind::insufficient_data, "radial_core", "too few nodes for a slope fit");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline double origin_slope(const RadialField& f) { return loglog_slope(f, f.grid->r.front(), 10.0 * f.grid->r.front()); }
inline double tail_slope(const RadialField& f) { return loglog_slope(f, f.grid->r_max / 10.0, f.grid->r_max); }

/// Least-squares slope of log y against log x.
inline double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(std::abs(y[i]));
        sx += a; sy += b; sxx += a * a; sxy += a * b;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline void write_field_csv(const std::string& path, const RadialField& f) {
    std::ofstream os(path);
    os.precision(17);
    os << "r,value\n";
    for (std::size_t i = 0; i < f.size(); ++i) os << f.grid->r[i] << ',' << f.v[i] << '\n';
}

inline void write_grid_csv(const std::string& path, const RadialGrid& g) {
    std::ofstream os(path);
    os.precision(17);
    os << "r,weight\n";
    for (std::size_t i = 0; i < g.size(); ++i) os << g.r[i] << ',' << g.w[i] << '\n';
}

}  // namespace wavemap
