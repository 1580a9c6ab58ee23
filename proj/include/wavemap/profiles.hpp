#pragma once

// Harmonic-map profile Q, the constants rho_k, gamma_k, q_k, and the
// correction profiles A, B, Btilde solving L h = rhs with h orthogonal to LamQ.

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "radial_core.hpp"

namespace wavemap {

inline void require_k(int k, int k_min = 4) {
    if (k < k_min) throw Error(ErrorKind::invalid_argument, "profiles", "k ≥ 4 required");
}

struct Constants {
    int k = 4;
    double rho_k = 0;
    double gamma_k = 0;
    double tilde_gamma_k = 0;
    double q_k = 0;
    double lamQ_norm_sq = 0;
    double gamma_solvability = 0;  ///< 4<r^{k-2}(LamQ)^2|LamQ>/|LamQ|^2 by quadrature
    double c1_coercivity = 0;      ///< filled by build_profiles
};

inline double closed_rho(int k) { return std::sqrt(8.0 * k * std::sin(pi / k) / pi); }
inline double closed_gamma(int k) { return 0.5 * k * 8.0 * k * std::sin(pi / k) / pi; }
inline double closed_q(int k) { return std::pow(0.5 * (k - 2) * closed_rho(k), -2.0 / (k - 2)); }
inline double closed_lamQ_norm_sq(int k) { return 2.0 * pi / std::sin(pi / k); }

inline RadialField closed_form_Q(int k, const Grid& g) {
    require_k(k, 2);
    return RadialField::sample(g, [k](double r) { return closed_Q(k, r); }, k, 0);
}

inline RadialField closed_form_LamQ(int k, const Grid& g) {
    require_k(k, 2);
    return RadialField::sample(g, [k](double r) { return closed_LamQ(k, r); }, k, -k);
}

inline RadialField closed_form_Lam0LamQ(int k, const Grid& g) {
    return RadialField::sample(g, [k](double r) { return closed_Lam0LamQ(k, r); }, k, -k);
}

/// Default grid for profile solves.
inline Grid profile_grid(int n = 16000) { return make_geometric_span(1e-4, 1e4, n); }

inline Constants compute_constants(int k, const Grid& g) {
    require_k(k);
    Constants c;
    c.k = k;
    c.rho_k = closed_rho(k);
    c.gamma_k = 0.5 * k * c.rho_k * c.rho_k;
    c.q_k = closed_q(k);
    const auto LQ = closed_form_LamQ(k, g);
    c.lamQ_norm_sq = inner(LQ, LQ);
    const double rel = std::abs(c.lamQ_norm_sq / closed_lamQ_norm_sq(k) - 1.0);
    if (rel > 1e-3)
        throw Error(ErrorKind::grid_too_coarse, "profiles",
                    "quadrature of |LamQ|^2 misses the closed form by " + std::to_string(rel));
    double s_plus = 0.0, s_minus = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = g->r[i], l = LQ.v[i];
        s_plus += g->w[i] * std::pow(r, k - 2) * l * l * l;
        s_minus += g->w[i] * std::pow(r, -k - 2) * l * l * l;
    }
    c.gamma_solvability = 4.0 * s_plus / c.lamQ_norm_sq;
    c.tilde_gamma_k = 4.0 * s_minus / c.lamQ_norm_sq;
    return c;
}

/// Second solution of L y = 0 by reduction of order,
/// Gamma = LamQ * int_1^r ds/(s LamQ^2), in closed form:
/// (r^k - r^{-k} + 2 log(r) LamQ) / (4 k^2).
inline double closed_Gamma(int k, double r) {
    const double x = std::pow(r, k);
    return (x - 1.0 / x + 2.0 * std::log(r) * closed_LamQ(k, r)) / (4.0 * k * k);
}

/// Solves L h = rhs with <h|LamQ> = 0 by variation of parameters on the
/// fundamental system {LamQ, Gamma}.  The LamQ-weighted integral is taken from
/// the origin for r <= 1 and from infinity for r > 1, so the growing solution
/// never multiplies a cancelling difference.
inline RadialField solve_correction(const RadialField& rhs, int k, const Grid& g) {
    require_k(k);
    require_same_grid(rhs, RadialField::zeros(g));
    const std::size_t n = g->size();
    const auto y1 = closed_form_LamQ(k, g);
    std::vector<double> y2(n);
    for (std::size_t i = 0; i < n; ++i) y2[i] = closed_Gamma(k, g->r[i]);

    const double n1 = inner(y1, y1);
    const double nr = norm_L2(rhs);
    if (nr == 0.0) return RadialField(g, std::vector<double>(n, 0.0), k, 2 - k);
    const double proj = inner(rhs, y1);
    if (std::abs(proj) > 1e-6 * std::sqrt(n1) * nr)
        throw Error(ErrorKind::solvability_violation, "profiles",
                    "rhs not orthogonal to LamQ: relative defect " + std::to_string(proj / (std::sqrt(n1) * nr)));
    std::vector<double> F(rhs.v);
    for (std::size_t i = 0; i < n; ++i) F[i] -= proj / n1 * y1.v[i];

    const auto& r = g->r;
    // cumulative trapezoid integrals of y1 F r and y2 F r
    std::vector<double> J1f(n, 0.0), J1b(n, 0.0), J2(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double h = r[i] - r[i - 1];
        J1f[i] = J1f[i - 1] + 0.5 * h * (y1.v[i - 1] * F[i - 1] * r[i - 1] + y1.v[i] * F[i] * r[i]);
        J2[i] = J2[i - 1] + 0.5 * h * (y2[i - 1] * F[i - 1] * r[i - 1] + y2[i] * F[i] * r[i]);
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        const double h = r[i + 1] - r[i];
        J1b[i] = J1b[i + 1] + 0.5 * h * (y1.v[i] * F[i] * r[i] + y1.v[i + 1] * F[i + 1] * r[i + 1]);
    }
    std::vector<double> hvals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double J1 = r[i] <= 1.0 ? J1f[i] : -J1b[i];
        hvals[i] = y1.v[i] * J2[i] - y2[i] * J1;
        if (!std::isfinite(hvals[i]))
            throw Error(ErrorKind::numerical_failure, "profiles", "variation of parameters overflowed");
    }
    RadialField h(g, std::move(hvals), k, 2 - k);
    const double c = inner(h, y1) / n1;
    for (std::size_t i = 0; i < n; ++i) h.v[i] -= c * y1.v[i];
    return h;
}

/// Bottom of <L w|w>/|w|_H^2 on {<w|LamQ> = 0}: inverse iteration on the
/// bordered pencil, stiffness from L about Q and mass from the H form.
inline double coercivity_constant(int k, const Grid& g, int max_iter = 500) {
    require_k(k);
    const std::size_t n = g->size();
    const auto& G = *g;
    const auto LQ = closed_form_LamQ(k, g);
    using SpMat = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> ts, tm;
    auto add_edge = [&](std::vector<Eigen::Triplet<double>>& t, std::size_t a, std::size_t b, double kap) {
        t.emplace_back(a, a, kap);
        t.emplace_back(b, b, kap);
        t.emplace_back(a, b, -kap);
        t.emplace_back(b, a, -kap);
    };
    for (auto* t : {&ts, &tm}) {
        t->emplace_back(0, 0, static_cast<double>(k));  // origin closure, fields ~ r^k
        for (std::size_t e = 1; e < n; ++e) add_edge(*t, e - 1, e, G.kappa[e]);
        t->emplace_back(n - 1, n - 1, G.kappa[n]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double r2 = G.r[i] * G.r[i];
        ts.emplace_back(i, i, G.w[i] * df_nl(k, closed_Q(k, G.r[i])) / r2);
        tm.emplace_back(i, i, G.w[i] * k * k / r2);
    }
    for (std::size_t i = 0; i < n; ++i) {
        ts.emplace_back(i, n, G.w[i] * LQ.v[i]);
        ts.emplace_back(n, i, G.w[i] * LQ.v[i]);
    }
    SpMat S(n + 1, n + 1), M(n, n);
    S.setFromTriplets(ts.begin(), ts.end());
    M.setFromTriplets(tm.begin(), tm.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(S);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorKind::numerical_failure, "profiles", "bordered coercivity system is singular");

    Eigen::VectorXd x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(-std::pow(std::log(G.r[i]), 2));  // generic start
    Eigen::VectorXd rhs(n + 1);
    double mu = 0.0, mu_prev = -1.0;
    for (int it = 0; it < max_iter; ++it) {
        rhs.head(n) = M * x;
        rhs[n] = 0.0;
        Eigen::VectorXd sol = lu.solve(rhs);
        x = sol.head(n);
        x /= std::sqrt(x.dot(M * x));
        mu = x.dot(S.topLeftCorner(n, n) * x);
        if (std::abs(mu - mu_prev) < 1e-12 * std::abs(mu)) break;
        mu_prev = mu;
    }
    return mu;
}

struct ProfileSet {
    Constants constants;
    Grid grid;
    RadialField Q, LamQ, Lam0LamQ, A, B, Btilde;
    RadialField LamA, LamB, LamBtilde;
    // interpolants for evaluation at arbitrary radii
    LogInterpolant iA, iB, iBt, iLamA, iLamB, iLamBt;

    int k() const { return constants.k; }
};

inline RadialField rhs_A(int k, const Grid& g) { return -1.0 * closed_form_Lam0LamQ(k, g); }

inline RadialField rhs_B(const Constants& c, const Grid& g) {
    const int k = c.k;
    return RadialField::sample(g, [&](double r) {
        const double l = closed_LamQ(k, r);
        return c.gamma_k * l - 4.0 * std::pow(r, k - 2) * l * l;
    }, k, -k);
}

inline RadialField rhs_Btilde(const Constants& c, const Grid& g) {
    const int k = c.k;
    return RadialField::sample(g, [&](double r) {
        const double l = closed_LamQ(k, r);
        return -c.tilde_gamma_k * l + 4.0 * std::pow(r, -k - 2) * l * l;
    }, k - 2, -k);
}

inline ProfileSet build_profiles(int k, const Grid& g, bool with_coercivity = true) {
    require_k(k);
    ProfileSet ps;
    ps.grid = g;
    ps.constants = compute_constants(k, g);
    ps.Q = closed_form_Q(k, g);
    ps.LamQ = closed_form_LamQ(k, g);
    ps.Lam0LamQ = closed_form_Lam0LamQ(k, g);
    ps.A = solve_correction(rhs_A(k, g), k, g);
    ps.B = solve_correction(rhs_B(ps.constants, g), k, g);
    ps.Btilde = solve_correction(rhs_Btilde(ps.constants, g), k, g);
    ps.LamA = lambda(ps.A);
    ps.LamB = lambda(ps.B);
    ps.LamBtilde = lambda(ps.Btilde);
    ps.LamA.origin_exponent = ps.LamB.origin_exponent = ps.LamBtilde.origin_exponent = k;
    ps.LamA.tail_exponent = ps.LamB.tail_exponent = ps.LamBtilde.tail_exponent = 2 - k;
    ps.iA = LogInterpolant(ps.A);
    ps.iB = LogInterpolant(ps.B);
    ps.iBt = LogInterpolant(ps.Btilde);
    ps.iLamA = LogInterpolant(ps.LamA);
    ps.iLamB = LogInterpolant(ps.LamB);
    ps.iLamBt = LogInterpolant(ps.LamBtilde);
    if (with_coercivity) ps.constants.c1_coercivity = coercivity_constant(k, make_geometric_span(1e-3, 1e3, 1000));
    return ps;
}

inline void write_profiles_csv(const std::string& path, const ProfileSet& ps) {
    std::ofstream os(path);
    os.precision(17);
    os << "r,Q,LamQ,A,B,Btilde\n";
    for (std::size_t i = 0; i < ps.grid->size(); ++i)
        os << ps.grid->r[i] << ',' << ps.Q.v[i] << ',' << ps.LamQ.v[i] << ',' << ps.A.v[i] << ',' << ps.B.v[i]
           << ',' << ps.Btilde.v[i] << '\n';
}

}  // namespace wavemap
