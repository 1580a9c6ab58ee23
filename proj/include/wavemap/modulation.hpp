#pragma once

// Virial profile and truncated virial operators, orthogonality-based
// extraction of (mu, sigma, g), the b functional, the reduced modulation ODE,
// and monitoring of the b' inequality along tracked runs.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "evolver.hpp"

namespace wavemap {

// ---------------------------------------------------------------- virial profile

namespace detail {

/// Degree-11 smoothstep: 0 -> 1 on [0, 1] with five vanishing derivatives at both ends.
struct Smoothstep {
    std::array<double, 12> c{};

    Smoothstep() {
        auto binom = [](int n, int k) {
            double b = 1.0;
            for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
            return b;
        };
        for (int n = 0; n <= 5; ++n) c[6 + n] = binom(5 + n, n) * binom(11, 5 - n) * ((n % 2) ? -1.0 : 1.0);
    }

    /// d-th derivative on [0, 1], clamped outside.
    double operator()(double x, int d = 0) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return d == 0 ? 1.0 : 0.0;
        double s = 0.0;
        for (int j = 11; j >= d; --j) {
            double f = c[j];
            for (int m = 0; m < d; ++m) f *= (j - m);
            s = s * x + f;
        }
        return s;
    }

    double max_abs(int d) const {
        double m = 0.0;
        for (int i = 0; i <= 20000; ++i) m = std::max(m, std::abs((*this)(i / 20000.0, d)));
        return m;
    }
};

inline const Smoothstep& smoothstep() {
    static const Smoothstep s;
    return s;
}

}  // namespace detail

struct VirialCheck {
    std::string name;
    double worst = 0.0;  ///< worst observed value of the checked quantity (sign convention per bullet)
    double bound = 0.0;
    bool pass = false;
};

/// p'(r) = r phi(log(r / R)) with phi = 1 - S(s / L) a C^5 step from 1 to 0 over
/// s in [0, L]; L is the shortest length meeting every bullet with 10% slack.
struct VirialProfile {
    double c = 0.05;
    double R = 10.0;
    double L = 0.0;
    double R_tilde = 0.0;
    Grid grid;
    RadialField p, p1, p2;
    std::vector<VirialCheck> checks;

    /// d-th derivative of phi in s = log(r / R)
    double phi(double s, int d = 0) const {
        const auto& S = detail::smoothstep();
        const double v = S(s / L, d) / std::pow(L, d);
        return d == 0 ? 1.0 - v : -v;
    }
    double dp(double r) const { return r * phi(std::log(r / R)); }
    double ddp(double r) const {
        const double s = std::log(r / R);
        return phi(s) + phi(s, 1);
    }
};

inline VirialProfile make_virial_profile(double c, double R, int n_dense = 10000) {
    if (!(c > 0.0) || c > 0.1 || !(R >= 1.0))
        throw Error(ErrorKind::invalid_argument, "modulation", "virial profile needs 0 < c <= 0.1 and R >= 1");
    const auto& S = detail::smoothstep();
    const double m1 = S.max_abs(1), m2 = S.max_abs(2);
    const double target = 0.9 * c;
    VirialProfile vp;
    vp.c = c;
    vp.R = R;
    // 2 m1 / L + m2 / L^2 <= target bounds |r d_r Delta p| and dominates the other bullets
    vp.L = (2.0 * m1 + std::sqrt(4.0 * m1 * m1 + 4.0 * target * m2)) / (2.0 * target);
    vp.R_tilde = R * std::exp(vp.L);
    vp.grid = make_geometric_span(1e-2 * R, vp.R_tilde * std::exp(1.0), n_dense);
    const auto& G = *vp.grid;
    const std::size_t n = G.size();

    std::vector<double> p(n), p1(n), p2(n);
    double acc = 0.0;  // int_0^s e^{2 t} phi(t) dt, by trapezoid in s
    double s_prev = 0.0, f_prev = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = G.r[i];
        const double s = std::log(r / R);
        p1[i] = vp.dp(r);
        p2[i] = vp.ddp(r);
        if (r <= R) {
            p[i] = 0.5 * r * r;
            continue;
        }
        const double lo = std::max(s_prev, 0.0);
        const double f_lo = s_prev < 0.0 ? 1.0 : f_prev;
        const double f = std::exp(2.0 * s) * vp.phi(s);
        acc += 0.5 * (s - lo) * (f_lo + f);
        p[i] = 0.5 * R * R + R * R * acc;
        s_prev = s;
        f_prev = f;
    }
    vp.p = RadialField(vp.grid, std::move(p));
    vp.p1 = RadialField(vp.grid, std::move(p1));
    vp.p2 = RadialField(vp.grid, std::move(p2));

    struct Acc {
        double worst = -INFINITY;
        void operator()(double x) { worst = std::max(worst, x); }
    };
    Acc quad_err, const_err, b3a, b3b, b4a, b4b, b5, b6, b7, b8, b9;
    const double p_end = vp.p.v.back();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = G.r[i];
        const double s = std::log(r / R);
        const double f0 = vp.phi(s), f1 = vp.phi(s, 1), f2 = vp.phi(s, 2), f3 = vp.phi(s, 3);
        const double f4 = vp.phi(s, 4), f5 = vp.phi(s, 5);
        const double h = 2.0 * f2 + f3, h1 = 2.0 * f3 + f4, h2 = 2.0 * f4 + f5;
        if (r <= R) quad_err(std::abs(vp.p.v[i] / (0.5 * r * r) - 1.0));
        if (r >= vp.R_tilde) const_err(std::abs(vp.p.v[i] / p_end - 1.0));
        b3a(std::abs(vp.p1.v[i]) / r);
        b3b(std::abs(vp.p2.v[i]));
        b4a(-vp.p2.v[i]);
        b4b(-f0);
        b5(std::abs(2.0 * f1 + f2));
        b6(h);                            // r^2 Delta^2 p
        b7(-(4.0 * h - 4.0 * h1 + h2));   // -r^4 Delta^3 p
        b8(std::abs(f1));
        b9(std::abs(f2));
    }
    auto add = [&](const char* name, double worst, double bound) {
        vp.checks.push_back({name, worst, bound, worst <= bound});
    };
    add("p = r^2/2 for r <= R", quad_err.worst, 1e-14);
    add("p constant for r >= R_tilde", const_err.worst, 1e-14);
    add("|p'| <= C r and |p''| <= C", std::max(b3a.worst, b3b.worst), 3.0);
    add("p'' >= -c and p'/r >= -c", std::max(b4a.worst, b4b.worst), c);
    add("|r d_r Delta p| <= c", b5.worst, c);
    add("Delta^2 p <= c r^-2", b6.worst, c);
    add("Delta^3 p >= -c r^-4", b7.worst, c);
    add("|r (p'/r)'| <= c", b8.worst, c);
    add("|r (r (p'/r)')'| <= c", b9.worst, c);
    for (const auto& ch : vp.checks)
        if (!ch.pass)
            throw Error(ErrorKind::construction_failed, "modulation", "virial bullet violated: " + ch.name + " (" + std::to_string(ch.worst) + ")");
    return vp;
}

// ---------------------------------------------------------------- virial operators

/// p'(r / lam) d_r w
inline RadialField apply_A(double lam, const VirialProfile& vp, const RadialField& w) {
    if (!(lam > 0.0)) throw Error(ErrorKind::invalid_argument, "modulation", "lambda must be positive");
    auto d = derivative(w);
    for (std::size_t i = 0; i < d.size(); ++i) d.v[i] *= vp.dp(w.grid->r[i] / lam);
    return d;
}

/// (p''(r/lam) / (2 lam) + p'(r/lam) / (2 r)) w + p'(r/lam) d_r w, in skew form.
inline RadialField apply_A0(double lam, const VirialProfile& vp, const RadialField& w) {
    if (!(lam > 0.0)) throw Error(ErrorKind::invalid_argument, "modulation", "lambda must be positive");
    return transport(w, [&](double r) { return vp.dp(r / lam); });
}

struct PohozaevResult {
    double lhs = 0.0;
    double bound = 0.0;
    double implied_c0 = 0.0;  ///< smallest c0 for which lhs >= bound
    bool holds = false;
};

inline PohozaevResult pohozaev_check(double lam, const VirialProfile& vp, const RadialField& w, int k, double c0) {
    PohozaevResult out;
    const double hn = norm_H(w, k);
    if (hn == 0.0) {
        out.holds = true;
        return out;
    }
    const auto Lw = apply_operator(op_L0(k), w);
    out.lhs = inner(apply_A0(lam, vp, w), Lw);
    const double local = local_H_form(w, k, vp.R * lam);
    out.bound = (-c0 * hn * hn + local) / lam;
    out.implied_c0 = std::max(0.0, (local - lam * out.lhs) / (hn * hn));
    out.holds = out.lhs >= out.bound;
    return out;
}

// ---------------------------------------------------------------- reference family and extraction

/// Leading-order slaved parameters of the reference family, expressed through sigma.
inline double mu_hat(int k, double sigma) { return 1.0 - double(k) / (2.0 * (k + 2)) * sigma * sigma; }
inline double b_hat(const Constants& c, double sigma) { return c.rho_k * std::pow(sigma, 0.5 * c.k); }
inline double a_hat(const Constants& c, double sigma) {
    return double(c.k) / (c.k + 2) * c.rho_k * std::pow(sigma, 0.5 * (c.k + 2));
}

inline ModParams ref_params(double mu, double sigma, const Constants& c) {
    ModParams p;
    p.lam = mu * sigma;
    p.mu = mu * mu_hat(c.k, sigma);
    p.a = a_hat(c, sigma);
    p.b = b_hat(c, sigma);
    return p;
}

/// continuum: the sampled ansatz.  discrete: the ansatz plus its discrete
/// equilibrium correction, matching data prepared by evolve_ansatz.
enum class RefMode { continuum, discrete };

inline StatePair phi_ref(double mu, double sigma, const ProfileSet& ps, const Grid& g,
                         RefMode mode = RefMode::discrete) {
    const auto p = ref_params(mu, sigma, ps.constants);
    auto s = phi(p, ps, g);
    return mode == RefMode::discrete ? discrete_equilibrium(s, p, ps) : s;
}

/// (1/scale) f(r/scale) sampled on g.
inline RadialField underline(const Grid& g, double scale, double (*f)(int, double), int k) {
    return RadialField::sample(g, [&](double r) { return f(k, r / scale) / scale; });
}

using Mat2 = std::array<std::array<double, 2>, 2>;

struct Extraction {
    double mu = 0.0, sigma = 0.0;
    StatePair g;
    Mat2 M{};
    double ortho1 = 0.0, ortho2 = 0.0;  ///< <LamQ_mu|g>/mu and <LamQ_lam|g>/lam
    int iterations = 0;
};

namespace detail {

struct RefEval {
    StatePair U;
    RadialField dU_dmu, dU_dsigma;
};

inline RefEval ref_with_derivatives(double mu, double sigma, const ProfileSet& ps, const Grid& g, RefMode mode) {
    RefEval e{phi_ref(mu, sigma, ps, g, mode), {}, {}};
    const double hm = 1e-5 * mu, hs = 1e-5 * sigma;
    e.dU_dmu = (1.0 / (2.0 * hm)) * (phi_ref(mu + hm, sigma, ps, g, mode).u - phi_ref(mu - hm, sigma, ps, g, mode).u);
    e.dU_dsigma =
        (1.0 / (2.0 * hs)) * (phi_ref(mu, sigma + hs, ps, g, mode).u - phi_ref(mu, sigma - hs, ps, g, mode).u);
    return e;
}

}  // namespace detail

/// Modulation matrix with the g-dependent corrections.
inline Mat2 modulation_matrix(double mu, double sigma, const RadialField& dU_dmu, const RadialField& dU_dsigma,
                              const RadialField& g, int k) {
    const auto& G = g.grid;
    const double lam = mu * sigma;
    const auto LQm = underline(G, mu, closed_LamQ, k), LQl = underline(G, lam, closed_LamQ, k);
    const auto L0m = underline(G, mu, closed_Lam0LamQ, k), L0l = underline(G, lam, closed_Lam0LamQ, k);
    Mat2 M;
    M[0][0] = inner(LQm, dU_dmu) + inner(L0m, g) / mu;
    M[0][1] = inner(LQm, dU_dsigma) / mu;
    M[1][0] = inner(LQl, dU_dmu) + inner(L0l, g) / mu;
    M[1][1] = inner(LQl, dU_dsigma) / mu + inner(L0l, g) / lam;
    return M;
}

/// Newton iteration on the two orthogonality conditions of g = u - U(mu, sigma).
inline Extraction extract(const StatePair& s, const ProfileSet& ps, double mu_guess, double sigma_guess,
                          RefMode mode = RefMode::discrete) {
    if (!(sigma_guess > 0.0) || !(sigma_guess < 0.1) || !(mu_guess > 0.0))
        throw Error(ErrorKind::invalid_regime, "modulation", "extraction needs mu > 0 and 0 < sigma < 0.1");
    const int k = ps.k();
    const auto& G = s.grid();
    double mu = mu_guess, sigma = sigma_guess;
    Extraction out;
    double prev = INFINITY;
    int stalled = 0;
    for (int it = 1; it <= 50; ++it) {
        if (!(sigma > 0.0) || !(sigma < 0.1))
            throw Error(ErrorKind::invalid_regime, "modulation", "sigma left the regime during extraction");
        auto e = detail::ref_with_derivatives(mu, sigma, ps, G, mode);
        RadialField g = s.u - e.U.u;
        g.origin_exponent = k;
        const double lam = mu * sigma;
        const double F1 = inner(underline(G, mu, closed_LamQ, k), g);
        const double F2 = inner(underline(G, lam, closed_LamQ, k), g);
        const Mat2 M = modulation_matrix(mu, sigma, e.dU_dmu, e.dU_dsigma, g, k);
        out.mu = mu;
        out.sigma = sigma;
        out.M = M;
        out.ortho1 = F1 / mu;
        out.ortho2 = F2 / lam;
        out.iterations = it;
        const double res = std::hypot(out.ortho1, out.ortho2);
        if (res < 1e-15 || (res < 1e-10 && (res > 0.5 * prev || ++stalled > 3))) {
            out.g = StatePair(std::move(g), s.udot - e.U.udot);
            out.g.udot.origin_exponent = k;
            return out;
        }
        prev = res;
        // dF/d(mu, sigma) = -M diag(1, mu)
        const double J11 = -M[0][0], J12 = -mu * M[0][1], J21 = -M[1][0], J22 = -mu * M[1][1];
        const double det = J11 * J22 - J12 * J21;
        if (!std::isfinite(det) || det == 0.0) break;
        double dmu = -(J22 * F1 - J12 * F2) / det;
        double ds = -(-J21 * F1 + J11 * F2) / det;
        // damp to at most a factor-of-two change per step
        const double scale = std::max({1.0, 2.0 * std::abs(dmu) / mu, 2.0 * std::abs(ds) / sigma});
        mu += dmu / scale;
        sigma += ds / scale;
    }
    throw Error(ErrorKind::extraction_failed, "modulation", "Newton did not converge in 50 steps");
}

// ---------------------------------------------------------------- b functional

/// Continuum energy gradient of the ansatz.  The first component comes from the
/// closed-form identity -Delta Phi + f(Phi)/r^2 = modulation terms - brackets / r^2,
/// which avoids the O(h^2 / lam^2) error of a discrete Laplacian.
inline StatePair energy_gradient_ref(double mu, double sigma, const ProfileSet& ps, const Grid& g) {
    const auto p = ref_params(mu, sigma, ps.constants);
    auto first = modulation_terms(p, ps, g);
    const auto br = residual_brackets(p, ps, g);
    for (std::size_t i = 0; i < first.size(); ++i) {
        const double r = g->r[i];
        first.v[i] -= (br.b1.v[i] + br.b2.v[i] + br.b3.v[i]) / (r * r);
    }
    return StatePair(std::move(first), phi(p, ps, g).udot);
}

inline double pair_DE(const StatePair& dE, const StatePair& g) { return inner(dE.u, g.u) + inner(dE.udot, g.udot); }

struct BFunctional {
    double b = 0.0;
    double projection = 0.0;      ///< <DE(U)|g> / (rho sigma^{k/2})
    double virial = 0.0;          ///< <A0(mu sigma) g | g_dot>
    double dE_pairing = 0.0;      ///< <DE(U)|g>
    double lamQ_gdot = 0.0;       ///< <LamQ_{sigma mu}|g_dot>
};

inline BFunctional b_functional(const Extraction& ex, const ProfileSet& ps, const VirialProfile& vp) {
    if (!(ex.sigma > 0.0)) throw Error(ErrorKind::invalid_argument, "modulation", "sigma must be positive");
    const int k = ps.k();
    const auto& G = ex.g.grid();
    BFunctional out;
    const auto dE = energy_gradient_ref(ex.mu, ex.sigma, ps, G);
    out.dE_pairing = pair_DE(dE, ex.g);
    out.projection = out.dE_pairing / (ps.constants.rho_k * std::pow(ex.sigma, 0.5 * k));
    out.virial = inner(apply_A0(ex.mu * ex.sigma, vp, ex.g.u), ex.g.udot);
    out.b = out.projection + out.virial;
    out.lamQ_gdot = inner(underline(G, ex.mu * ex.sigma, closed_LamQ, k), ex.g.udot);
    return out;
}

// ---------------------------------------------------------------- reduced ODE

struct ParamTrajectory {
    std::vector<double> t, lam, mu, a, b;
    bool concentration_complete = false;
};

/// RK4 for lam' = -b, mu' = a, b' = -gamma lam^{k-1} / mu^k, a' = -gamma lam^k / mu^{k+1}.
/// t1 < t0 integrates backward.  Samples every `stride` steps and at t1.
inline ParamTrajectory reduced_ode(const ModParams& p0, const Constants& c, double t0, double t1, double dt,
                                   int stride = 1) {
    if (!(t0 > 0.0) || !(dt > 0.0) || t1 == t0 || !(t1 > 0.0))
        throw Error(ErrorKind::invalid_argument, "modulation", "reduced_ode needs t0, t1 > 0, t1 != t0 and dt > 0");
    if (!(p0.lam > 0.0) || !(p0.mu > 0.0))
        throw Error(ErrorKind::invalid_argument, "modulation", "reduced_ode needs positive scales");
    const int k = c.k;
    const double gam = c.gamma_k;
    using V = std::array<double, 4>;  // lam, mu, b, a
    auto F = [&](const V& s) {
        return V{-s[2], s[3], -gam * std::pow(s[0], k - 1) / std::pow(s[1], k),
                 -gam * std::pow(s[0], k) / std::pow(s[1], k + 1)};
    };
    V y{p0.lam, p0.mu, p0.b, p0.a};
    ParamTrajectory tr;
    auto push = [&](double t) {
        tr.t.push_back(t);
        tr.lam.push_back(y[0]);
        tr.mu.push_back(y[1]);
        tr.b.push_back(y[2]);
        tr.a.push_back(y[3]);
    };
    push(t0);
    const long steps = static_cast<long>(std::ceil(std::abs(t1 - t0) / dt - 1e-9));
    const double h = (t1 - t0) / steps;
    for (long j = 1; j <= steps; ++j) {
        const V k1 = F(y);
        V z;
        for (int i = 0; i < 4; ++i) z[i] = y[i] + 0.5 * h * k1[i];
        const V k2 = F(z);
        for (int i = 0; i < 4; ++i) z[i] = y[i] + 0.5 * h * k2[i];
        const V k3 = F(z);
        for (int i = 0; i < 4; ++i) z[i] = y[i] + h * k3[i];
        const V k4 = F(z);
        for (int i = 0; i < 4; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!(y[0] > 0.0)) {
            tr.concentration_complete = true;
            push(t0 + j * h);
            return tr;
        }
        if (j % stride == 0 || j == steps) push(t0 + j * h);
    }
    return tr;
}

/// Linear interpolation of a sampled series at time t (times may run in either direction).
inline double interp_series(const std::vector<double>& t, const std::vector<double>& y, double x) {
    const bool up = t.back() > t.front();
    std::size_t lo = 0, hi = t.size() - 1;
    while (hi - lo > 1) {
        const std::size_t m = (lo + hi) / 2;
        if ((t[m] <= x) == up) lo = m; else hi = m;
    }
    const double w = (x - t[lo]) / (t[hi] - t[lo]);
    return y[lo] + w * (y[hi] - y[lo]);
}

// ---------------------------------------------------------------- tracking and monitoring

struct ModTrack {
    std::vector<double> times, mu, sigma, a, b_slaved, a_slaved, g_Hnorm, gdot_L2norm, b_func, lamQ_gdot;
    std::vector<double> ortho1, ortho2, enexp, M11, M22;
};

/// Extracts (mu, sigma, g) along a trajectory with warm starts and evaluates the diagnostics.
inline ModTrack track(const Trajectory& tr, const ProfileSet& ps, const VirialProfile& vp, double mu_guess,
                      double sigma_guess, RefMode mode = RefMode::discrete) {
    const int k = ps.k();
    const double nQ = ps.constants.lamQ_norm_sq;
    ModTrack out;
    double mu = mu_guess, sigma = sigma_guess;
    for (std::size_t j = 0; j < tr.states.size(); ++j) {
        const auto& s = tr.states[j];
        const auto ex = extract(s, ps, mu, sigma, mode);
        mu = ex.mu;
        sigma = ex.sigma;
        const auto& G = s.grid();
        const auto bf = b_functional(ex, ps, vp);
        const double gh = norm_state(ex.g, k);
        out.times.push_back(tr.times[j]);
        out.mu.push_back(mu);
        out.sigma.push_back(sigma);
        out.a.push_back(a_hat(ps.constants, sigma));
        out.b_slaved.push_back(inner(underline(G, mu * sigma, closed_LamQ, k), s.udot) / nQ);
        out.a_slaved.push_back(inner(underline(G, mu, closed_LamQ, k), s.udot) / nQ);
        out.g_Hnorm.push_back(gh);
        out.gdot_L2norm.push_back(norm_L2(ex.g.udot));
        out.b_func.push_back(bf.b);
        out.lamQ_gdot.push_back(bf.lamQ_gdot);
        out.ortho1.push_back(ex.ortho1);
        out.ortho2.push_back(ex.ortho2);
        out.enexp.push_back(bf.dE_pairing + 0.5 * ps.constants.c1_coercivity * gh * gh);
        out.M11.push_back(ex.M[0][0] / nQ);
        out.M22.push_back(ex.M[1][1] / nQ);
    }
    return out;
}

struct BPrimeReport {
    double fraction_satisfied = 0.0;  ///< at c0 = 0.5
    double measured_c0 = 0.0;         ///< 90th percentile of the per-step implied c0
    double measured_c1 = 0.0;
    std::size_t samples = 0;
};

/// Finite-difference b'(t) against the right side of the b' inequality.
inline BPrimeReport monitor_b(const ModTrack& tr, const ProfileSet& ps, double c0 = 0.5) {
    const std::size_t n = tr.times.size();
    if (n < 10) throw Error(ErrorKind::insufficient_data, "modulation", "track needs at least 10 samples");
    const int k = ps.k();
    const double rho = ps.constants.rho_k;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return tr.times[x] < tr.times[y]; });
    std::vector<double> implied;
    std::size_t ok = 0;
    for (std::size_t m = 1; m + 1 < n; ++m) {
        const std::size_t i0 = idx[m - 1], i = idx[m], i1 = idx[m + 1];
        const double bp = (tr.b_func[i1] - tr.b_func[i0]) / (tr.times[i1] - tr.times[i0]);
        const double lam = tr.mu[i] * tr.sigma[i];
        const double sk = std::pow(tr.sigma[i], 0.5 * k);
        const double lead = k * rho / (2.0 * lam) * sk * tr.b_func[i];
        const double slack = (std::abs(tr.b_func[i]) * sk + tr.g_Hnorm[i] * tr.g_Hnorm[i]) / lam;
        if (bp <= lead + c0 * slack) ++ok;
        implied.push_back(slack > 0.0 ? std::max(0.0, (bp - lead) / slack) : (bp <= lead ? 0.0 : INFINITY));
    }
    BPrimeReport rep;
    rep.samples = implied.size();
    rep.fraction_satisfied = double(ok) / implied.size();
    std::sort(implied.begin(), implied.end());
    rep.measured_c0 = implied[std::min(implied.size() - 1, static_cast<std::size_t>(std::ceil(0.9 * implied.size())) - 1)];
    rep.measured_c1 = ps.constants.c1_coercivity;
    return rep;
}

/// Least-squares slope of log y against log x.
inline double power_law_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    return fit_exponent(x, y);
}

}  // namespace wavemap
