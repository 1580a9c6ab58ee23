#pragma once

// Two-bubble ansatz Phi(mu, lam, a, b), its static residual, and the weighted
// cross-term norms between bubbles at scales lam << mu.

#include <array>
#include <cmath>
#include <string>

#include "profiles.hpp"

namespace wavemap {

struct ModParams {
    double mu = 1.0;
    double lam = 0.01;
    double a = 0.0;
    double b = 0.0;

    double nu() const { return lam / mu; }

    void validate() const {
        if (!(mu > 0.0) || !(lam > 0.0))
            throw Error(ErrorKind::invalid_regime, "ansatz", "scales must be positive");
        if (!(nu() < 0.1) || !(std::abs(a) < 0.1) || !(std::abs(b) < 0.1))
            throw Error(ErrorKind::invalid_regime, "ansatz",
                        "parameters outside nu < 0.1, |a| < 0.1, |b| < 0.1");
    }
};

/// Q_lam - Q_mu.  lam == mu gives the zero field.
inline RadialField two_bubble(double lam, double mu, const Grid& g, int k) {
    if (!(lam > 0.0) || lam > mu)
        throw Error(ErrorKind::invalid_regime, "ansatz", "two_bubble needs 0 < lam <= mu");
    return RadialField::sample(g, [&](double r) {
        if (lam == mu) return 0.0;
        // Q(x) - Q(y) = 2 atan((x - y)/(1 + x y)) for x, y >= 0 without losing digits near pi
        const double x = std::pow(r / lam, k), y = std::pow(r / mu, k);
        return 2.0 * std::atan2(x - y, 1.0 + x * y);
    }, k, -k);
}

namespace detail {

inline void require_resolved(double lam, const Grid& g) {
    const auto& r = g->r;
    if (r.front() > 0.5 * lam)
        throw Error(ErrorKind::resolution_error, "ansatz", "innermost node lies above half the inner scale");
    auto it = std::lower_bound(r.begin(), r.end(), lam);
    if (it == r.end() || it == r.begin()) return;
    if (*it - *(it - 1) > 0.25 * lam)
        throw Error(ErrorKind::resolution_error, "ansatz", "grid spacing exceeds a quarter of the inner scale");
}

/// sin Q(x) for tan(Q/2) = x^k; avoids overflow.
inline double sinQ(int k, double r) { return closed_LamQ(k, r) / k; }

}  // namespace detail

inline StatePair phi(const ModParams& p, const ProfileSet& ps, const Grid& g) {
    p.validate();
    detail::require_resolved(p.lam, g);
    const int k = ps.k();
    const double gam = ps.constants.gamma_k, tgam = ps.constants.tilde_gamma_k;
    const double nu = p.nu(), nuk = std::pow(nu, k);
    const double a = p.a, b = p.b, lam = p.lam, mu = p.mu;
    const std::size_t n = g->size();
    std::vector<double> u(n), ud(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = g->r[i];
        const double x = r / lam, y = r / mu;
        const double X = std::pow(x, k), Y = std::pow(y, k);
        const double A_l = ps.iA(x), B_l = ps.iB(x);
        const double A_m = ps.iA(y), Bt_m = ps.iBt(y);
        u[i] = 2.0 * std::atan2(X - Y, 1.0 + X * Y) + b * b * A_l + nuk * B_l - a * a * A_m - nuk * Bt_m;
        const double in = b * closed_LamQ(k, x) + b * b * b * ps.iLamA(x) - 2.0 * gam * b * nuk * A_l +
                          b * nuk * ps.iLamB(x) - k * b * nuk * B_l - k * a * nuk * nu * B_l;
        const double out = a * closed_LamQ(k, y) + a * a * a * ps.iLamA(y) + 2.0 * tgam * a * nuk * A_m +
                           a * nuk * ps.iLamBt(y) + k * b * nuk / nu * Bt_m + k * a * nuk * Bt_m;
        ud[i] = in / lam + out / mu;
    }
    return StatePair(RadialField(g, std::move(u), k, -k + 2), RadialField(g, std::move(ud), k, -k + 2));
}

/// The four explicit modulation terms of the static equation for Phi.
inline RadialField modulation_terms(const ModParams& p, const ProfileSet& ps, const Grid& g) {
    const int k = ps.k();
    const double gam = ps.constants.gamma_k, nuk = std::pow(p.nu(), k);
    return RadialField::sample(g, [&](double r) {
        const double x = r / p.lam, y = r / p.mu;
        return gam * nuk / (p.lam * p.lam) * closed_LamQ(k, x) -
               p.b * p.b / (p.lam * p.lam) * closed_Lam0LamQ(k, x) +
               gam * nuk / (p.mu * p.mu) * closed_LamQ(k, y) + p.a * p.a / (p.mu * p.mu) * closed_Lam0LamQ(k, y);
    });
}

/// -Delta Phi + f(Phi)/r^2 minus the modulation terms, with the discrete Laplacian.
inline RadialField static_residual(const ModParams& p, const ProfileSet& ps, const Grid& g) {
    const auto s = phi(p, ps, g);
    const int k = ps.k();
    auto out = laplacian(s.u, 0.0);
    const auto mod = modulation_terms(p, ps, g);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = g->r[i];
        out.v[i] = -out.v[i] + f_nl(k, s.u.v[i]) / (r * r) - mod.v[i];
    }
    return out;
}

/// The three grouped error brackets (without the 1/r^2 prefactor), evaluated
/// in cancellation-free closed form so that tiny powers of nu stay resolved.
/// The static residual equals -(b1 + b2 + b3)/r^2.
struct Brackets {
    RadialField b1, b2, b3;
};

inline double bracket1_value(int k, double r, double lam, double mu) {
    // f(x-y) - f(x) + f(y) = 2k^2 sin x sin y sin(x-y); with X=(r/lam)^k, Y=(r/mu)^k
    // the whole bracket collapses to -16k^2 (3XY^2 + 3X^2Y^3 + X^2Y^5 + Y^2/X)/((1+X^2)^2(1+Y^2)^2).
    using ld = long double;
    const ld X = std::pow(ld(r / lam), k), Y = std::pow(ld(r / mu), k);
    const ld DX = 1 + X * X, DY = 1 + Y * Y;
    const ld num = 3 * X * Y * Y + 3 * X * X * Y * Y * Y + X * X * Y * Y * Y * Y * Y + Y * Y / X;
    return static_cast<double>(-16.0L * k * k * num / (DX * DX * DY * DY));
}

inline Brackets residual_brackets(const ModParams& p, const ProfileSet& ps, const Grid& g) {
    p.validate();
    const int k = ps.k();
    const double nuk = std::pow(p.nu(), k);
    const std::size_t n = g->size();
    std::vector<double> v1(n), v2(n), v3(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = g->r[i], x = r / p.lam, y = r / p.mu;
        v1[i] = bracket1_value(k, r, p.lam, p.mu);
        const double X = std::pow(x, k), Y = std::pow(y, k);
        const double z = 2.0 * std::atan2(X - Y, 1.0 + X * Y);
        const double dl = p.b * p.b * ps.iA(x) + nuk * ps.iB(x);
        const double dm = p.a * p.a * ps.iA(y) + nuk * ps.iBt(y);
        const double d = dl - dm;
        // f(z+d) - f(z) - f'(z) d
        const double t = 2.0 * d;
        const double sin_minus = std::abs(t) < 1e-3 ? -t * t * t / 6.0 + std::pow(t, 5) / 120.0 : std::sin(t) - t;
        const double sd = std::sin(d);
        v2[i] = 0.5 * k * k * (-2.0 * std::sin(2.0 * z) * sd * sd + std::cos(2.0 * z) * sin_minus);
        // (f'(z) - f'(Q_lam)) dl - (f'(z) - f'(Q_mu)) dm
        const double Ql = closed_Q(k, x), Qm = closed_Q(k, y);
        const double sl = detail::sinQ(k, x), sm = detail::sinQ(k, y);
        v3[i] = 2.0 * k * k * std::sin(2.0 * Ql - Qm) * sm * dl + 2.0 * k * k * sl * std::sin(Ql - 2.0 * Qm) * dm;
    }
    return {RadialField(g, std::move(v1)), RadialField(g, std::move(v2)), RadialField(g, std::move(v3))};
}

/// || r^{-alpha} f ||_{L^2}
inline double weighted_norm(const RadialField& f, int alpha) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = f.v[i] * std::pow(f.grid->r[i], -alpha);
        s += f.grid->w[i] * x * x;
    }
    return std::sqrt(s);
}

/// Geometric grid wide enough for quadratures that involve both scales.
inline Grid two_scale_grid(double lam, double mu, int n = 12000) {
    return make_geometric_span(1e-4 * lam, 1e4 * mu, n);
}

struct CrossTerms {
    static constexpr std::array<const char*, 10> names = {
        "LQl^2 LQm", "LQl LQm^2", "LQl^2 Am", "LQl^2 Btm", "LQm^2 Al",
        "LQm^2 Bl", "LQl Am^2", "LQl Btm^2", "LQm Al^2", "LQm Bl^2"};
    /// exponent of nu each norm is bounded by (Btilde entry: k minus an arbitrarily small amount)
    static std::array<int, 10> expected_exponents(int k) { return {k, k, k, k, k - 2, k - 2, k, k, k, k}; }
    std::array<double, 10> values{};
};

inline CrossTerms cross_term_norms(double lam, double mu, const ProfileSet& ps) {
    if (!(lam > 0.0) || !(lam / mu <= 0.1))
        throw Error(ErrorKind::invalid_regime, "ansatz", "cross terms need nu <= 0.1");
    const int k = ps.k();
    const auto g = two_scale_grid(lam, mu);
    CrossTerms out;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = g->r[i], x = r / lam, y = r / mu;
        const double Ll = closed_LamQ(k, x), Lm = closed_LamQ(k, y);
        const double Al = ps.iA(x), Bl = ps.iB(x), Am = ps.iA(y), Btm = ps.iBt(y);
        const std::array<double, 10> t = {Ll * Ll * Lm, Ll * Lm * Lm, Ll * Ll * Am, Ll * Ll * Btm, Lm * Lm * Al,
                                          Lm * Lm * Bl, Ll * Am * Am, Ll * Btm * Btm, Lm * Al * Al, Lm * Bl * Bl};
        for (std::size_t j = 0; j < 10; ++j) out.values[j] += g->w[i] * t[j] * t[j] / (r * r);
    }
    for (double& v : out.values) v = std::sqrt(v);
    return out;
}

inline void write_state_csv(const std::string& path, const StatePair& s, const RadialField* extra = nullptr) {
    std::ofstream os(path);
    os.precision(17);
    os << "r,u,udot" << (extra ? ",residual" : "") << '\n';
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        os << s.u.grid->r[i] << ',' << s.u.v[i] << ',' << s.udot.v[i];
        if (extra) os << ',' << extra->v[i];
        os << '\n';
    }
}

}  // namespace wavemap
