#pragma once

// Kick-drift-kick leapfrog for u_tt = u_rr + u_r / r - f(u) / r^2.

#include <cmath>
#include <vector>

#include "ansatz.hpp"

namespace wavemap {

enum class OuterBC {
    dirichlet_zero,
    dirichlet_frozen,  ///< ghost held at the initial boundary value (vacuum multiple of pi or tail value)
};

enum class OriginBC {
    dirichlet,  ///< ghost value 0 at r = 0
    power_law,  ///< u ~ r^k below the first node (flux r u_r = k u)
};

struct EvolveConfig {
    double dt = 0.0;  ///< 0 selects the largest stable step allowed by cfl
    double t0 = 0.0;
    double t_end = 1.0;
    double cfl = 0.5;
    int record_every = 100;
    int samples = 0;  ///< > 0 overrides record_every to give about this many records
    OuterBC outer_bc = OuterBC::dirichlet_frozen;
    OriginBC origin_bc = OriginBC::dirichlet;
    double blowup_factor = 1e3;
};

enum class RunStatus { completed, concentration_detected };

struct Trajectory {
    std::vector<double> times;
    std::vector<StatePair> states;
    std::vector<double> energies;
    RunStatus status = RunStatus::completed;
    double dt = 0.0;
    long steps = 0;
};

namespace detail {

inline double min_spacing(const RadialGrid& g) {
    double h = g.r[0];
    for (std::size_t i = 1; i < g.size(); ++i) h = std::min(h, g.r[i] - g.r[i - 1]);
    return h;
}

/// Gershgorin bound on the spectral radius of -Delta + k^2 / r^2.
inline double spectral_bound(const RadialGrid& g, int k, double origin_coef) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double lo = i == 0 ? origin_coef : g.kappa[i];
        s = std::max(s, 2.0 * (lo + g.kappa[i + 1]) / g.w[i] + double(k * k) / (g.r[i] * g.r[i]));
    }
    return s;
}

/// Flat stepping kernel; avoids per-step allocation.
struct Stepper {
    const RadialGrid& g;
    int k;
    double origin_coef;
    double outer;
    std::vector<double> inv_w, inv_r2;

    Stepper(const RadialGrid& grid, int k_, double oc, double out) : g(grid), k(k_), origin_coef(oc), outer(out) {
        inv_w.resize(g.size());
        inv_r2.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            inv_w[i] = 1.0 / g.w[i];
            inv_r2[i] = 1.0 / (g.r[i] * g.r[i]);
        }
    }

    void accel(const std::vector<double>& u, std::vector<double>& a) const {
        const std::size_t n = u.size();
        const double half_k2 = 0.5 * k * k;
        double flux_lo = origin_coef * u[0];
        for (std::size_t i = 0; i < n; ++i) {
            const double next = (i + 1 < n) ? u[i + 1] : outer;
            const double flux_hi = g.kappa[i + 1] * (next - u[i]);
            a[i] = (flux_hi - flux_lo) * inv_w[i] - half_k2 * std::sin(2.0 * u[i]) * inv_r2[i];
            flux_lo = flux_hi;
        }
    }
};

}  // namespace detail

/// (u_dot, Delta u - f(u)/r^2), closures taken from the field metadata and `outer`.
inline StatePair rhs(const StatePair& s, int k, double outer = 0.0) {
    for (std::size_t i = 0; i < s.u.size(); ++i)
        if (!std::isfinite(s.u.v[i]) || !std::isfinite(s.udot.v[i]))
            throw Error(ErrorKind::numerical_failure, "evolver", "non-finite state");
    auto acc = laplacian(s.u, outer);
    for (std::size_t i = 0; i < acc.size(); ++i) {
        const double r = s.u.grid->r[i];
        acc.v[i] -= f_nl(k, s.u.v[i]) / (r * r);
    }
    return StatePair(s.udot, std::move(acc));
}

inline double outer_value(const StatePair& s, OuterBC bc) {
    return bc == OuterBC::dirichlet_frozen ? s.u.v.back() : 0.0;
}

inline Trajectory evolve(const StatePair& s0, int k, const EvolveConfig& cfg) {
    require_k(k, 1);
    const auto grid = s0.grid();
    const auto& G = *grid;
    if (!(cfg.cfl > 0.0) || cfg.cfl > 0.5)
        throw Error(ErrorKind::invalid_argument, "evolver", "cfl must lie in (0, 0.5]");
    if (!std::isfinite(cfg.t_end - cfg.t0) || cfg.t_end == cfg.t0)
        throw Error(ErrorKind::invalid_argument, "evolver", "t_end must differ from t0");
    // t_end < t0 integrates backward in time; leapfrog is time-reversible so only the sign of dt changes
    const double dir = cfg.t_end > cfg.t0 ? 1.0 : -1.0;
    const double span = std::abs(cfg.t_end - cfg.t0);
    if (cfg.record_every < 1) throw Error(ErrorKind::invalid_argument, "evolver", "record_every must be positive");

    StatePair s = s0;
    if (cfg.origin_bc == OriginBC::power_law)
        s.u.origin_exponent = k;
    else
        s.u.origin_exponent.reset();
    s.udot.origin_exponent = s.u.origin_exponent;
    const double origin_coef = origin_coupling(s.u);
    const double outer = outer_value(s0, cfg.outer_bc);

    const double h_min = detail::min_spacing(G);
    const double dt_stable = 1.9 / std::sqrt(detail::spectral_bound(G, k, origin_coef));
    const double dt_cfl = cfg.cfl * h_min;
    double dt = cfg.dt > 0.0 ? cfg.dt : std::min(dt_cfl, dt_stable);
    if (dt > dt_cfl * (1.0 + 1e-12) || dt > dt_stable)
        throw Error(ErrorKind::invalid_argument, "evolver", "time step violates the CFL or stability bound");
    long steps = static_cast<long>(std::ceil(span / dt - 1e-9));
    // with a sample count, round steps up so records are equally spaced through t_end
    if (cfg.samples > 0) steps = (steps + cfg.samples - 1) / cfg.samples * cfg.samples;
    dt = span / steps;
    const long stride = cfg.samples > 0 ? steps / cfg.samples : cfg.record_every;

    const double E0 = energy(s, k, outer);
    if (!std::isfinite(E0)) throw Error(ErrorKind::invalid_argument, "evolver", "initial energy is not finite");
    // floor keeps nearly static data from tripping the detector on ordinary radiation
    const double ref = std::max(norm_L2(s.udot), 1e-3 * std::sqrt(std::abs(E0)));

    Trajectory tr;
    tr.dt = dt;
    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.energies.push_back(energy(s, k, outer));
        tr.states.push_back(s);
    };
    record(cfg.t0);

    detail::Stepper st(G, k, origin_coef, outer);
    const double h = dir * dt;
    auto& u = s.u.v;
    auto& v = s.udot.v;
    std::vector<double> a(u.size());
    st.accel(u, a);
    const std::size_t n = u.size();
    for (long step = 1; step <= steps; ++step) {
        for (std::size_t i = 0; i < n; ++i) {
            v[i] += 0.5 * h * a[i];
            u[i] += h * v[i];
        }
        st.accel(u, a);
        for (std::size_t i = 0; i < n; ++i) v[i] += 0.5 * h * a[i];
        tr.steps = step;
        if (step % stride == 0 || step == steps) {
            const double t = cfg.t0 + step * h;
            const double vn = norm_L2(s.udot);
            if (!std::isfinite(vn)) throw Error(ErrorKind::numerical_failure, "evolver", "non-finite state");
            record(t);
            if (ref > 0.0 && vn > cfg.blowup_factor * ref) {
                tr.status = RunStatus::concentration_detected;
                break;
            }
        }
    }
    return tr;
}

/// Adds the small static correction d, orthogonal to LamQ at both scales, for which
/// the discrete force -Delta_h(Phi + d) + f(Phi + d)/r^2 matches the continuum
/// force of Phi up to kernel directions.  Sampling the continuum ansatz directly
/// leaves an O(h^2/lam^2) force mismatch that radiates from t0 on.
inline StatePair discrete_equilibrium(const StatePair& s, const ModParams& p, const ProfileSet& ps,
                                      OriginBC origin = OriginBC::power_law,
                                      OuterBC outer_bc = OuterBC::dirichlet_frozen) {
    const int k = ps.k();
    const auto& g = s.grid();
    const auto& G = *g;
    const std::size_t n = G.size();
    RadialField u = s.u;
    if (origin == OriginBC::power_law)
        u.origin_exponent = k;
    else
        u.origin_exponent.reset();
    const double oc = origin_coupling(u);
    const double outer = outer_value(s, outer_bc);
    const auto lap = laplacian(u, outer);
    const auto mod = modulation_terms(p, ps, g);
    const auto br = residual_brackets(p, ps, g);

    using SpMat = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = G.r[i], r2 = r * r;
        const double force_h = -lap.v[i] + f_nl(k, u.v[i]) / r2;
        const double force_c = mod.v[i] - (br.b1.v[i] + br.b2.v[i] + br.b3.v[i]) / r2;
        rhs[i] = G.w[i] * (force_c - force_h);
        t.emplace_back(i, i, G.kappa[i + 1] + (i == 0 ? oc : G.kappa[i]) + G.w[i] * df_nl(k, u.v[i]) / r2);
        if (i + 1 < n) {
            t.emplace_back(i, i + 1, -G.kappa[i + 1]);
            t.emplace_back(i + 1, i, -G.kappa[i + 1]);
        }
        const double l1 = G.w[i] * closed_LamQ(k, r / p.lam), l2 = G.w[i] * closed_LamQ(k, r / p.mu);
        t.emplace_back(i, n, l1);
        t.emplace_back(n, i, l1);
        t.emplace_back(i, n + 1, l2);
        t.emplace_back(n + 1, i, l2);
    }
    SpMat A(n + 2, n + 2);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorKind::numerical_failure, "evolver", "discrete equilibrium system is singular");
    const Eigen::VectorXd x = lu.solve(rhs);
    StatePair out = s;
    for (std::size_t i = 0; i < n; ++i) out.u.v[i] += x[i];
    return out;
}

/// Formal-trajectory parameters for inner scale lam with outer scale near 1.
inline ModParams formal_params(int k, double lam, const Constants& c) {
    ModParams p;
    p.lam = lam;
    p.mu = 1.0 - double(k) / (2.0 * (k + 2)) * lam * lam;
    p.b = c.rho_k * std::pow(lam, 0.5 * k);
    p.a = double(k) / (k + 2) * c.rho_k * std::pow(lam, 0.5 * (k + 2));
    return p;
}

/// Time on the special solution at which the inner scale equals lam.
inline double formal_time(int k, double lam, const Constants& c) { return std::pow(c.q_k / lam, 0.5 * (k - 2)); }

/// Evolves phi(p0), optionally with the discrete equilibrium correction applied first.
inline Trajectory evolve_ansatz(const ModParams& p0, const ProfileSet& ps, const Grid& g, const EvolveConfig& cfg,
                                bool discrete_consistent = true) {
    auto s0 = phi(p0, ps, g);
    if (discrete_consistent) s0 = discrete_equilibrium(s0, p0, ps, cfg.origin_bc, cfg.outer_bc);
    return evolve(s0, ps.k(), cfg);
}

}  // namespace wavemap
