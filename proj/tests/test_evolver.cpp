#include <gtest/gtest.h>

#include "wavemap/modulation.hpp"

using namespace wavemap;

namespace {

Grid grid() { return make_geometric_span(1e-3, 40.0, 1200); }

RadialField bump(const Grid& g, double c, double h, double a) {
    return RadialField::sample(g, [&](double r) {
        const double x = (r - c) / h;
        return std::abs(x) < 1.0 ? a * std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
    });
}

/// Radius where u first crosses pi/2, linearly interpolated.
double half_crossing(const RadialField& u) {
    for (std::size_t i = 1; i < u.size(); ++i)
        if (u.v[i] >= 0.5 * pi) {
            const double t = (0.5 * pi - u.v[i - 1]) / (u.v[i] - u.v[i - 1]);
            return u.grid->r[i - 1] + t * (u.grid->r[i] - u.grid->r[i - 1]);
        }
    return NAN;
}

}  // namespace

TEST(Rhs, StaticBubble) {
    const auto g = make_geometric_span(1e-3, 1e3, 4000);
    const auto Q = closed_form_Q(4, g);
    const auto out = rhs(StatePair(Q, RadialField::zeros(g)), 4, pi);
    EXPECT_EQ(norm_L2(out.u), 0.0);
    EXPECT_LT(norm_L2(out.udot) / norm_L2(laplacian(Q, pi)), 1e-3);
}

TEST(Rhs, FreeVelocity) {
    const auto g = grid();
    const auto v = bump(g, 2.0, 1.0, 0.3);
    const auto out = rhs(StatePair(RadialField::zeros(g), v), 4);
    EXPECT_EQ(out.u.v, v.v);
    EXPECT_EQ(norm_L2(out.udot), 0.0);
}

TEST(Rhs, LinearizationAboutQ) {
    const int k = 4;
    const auto g = make_geometric_span(1e-3, 1e3, 4000);
    const auto Q = closed_form_Q(k, g);
    const auto phi = bump(g, 1.0, 0.6, 1.0);
    const auto base = rhs(StatePair(Q, RadialField::zeros(g)), k, pi).udot;
    const auto Lphi = apply_operator(op_L_about(k, Q), phi);
    auto err = [&](double eps) {
        const auto d = rhs(StatePair(Q + eps * phi, RadialField::zeros(g)), k, pi).udot;
        return norm_L2((1.0 / eps) * (d - base) + Lphi);
    };
    EXPECT_NEAR(err(1e-2) / err(5e-3), 2.0, 0.1);
}

TEST(Evolve, ZeroStaysZero) {
    const auto g = grid();
    EvolveConfig c;
    c.t_end = 1.0;
    const auto tr = evolve(StatePair(RadialField::zeros(g), RadialField::zeros(g)), 4, c);
    for (const auto& s : tr.states) {
        EXPECT_EQ(norm_L2(s.u), 0.0);
        EXPECT_EQ(norm_L2(s.udot), 0.0);
    }
}

TEST(Evolve, BubbleIsStatic) {
    const int k = 4;
    const auto g = grid();
    const auto Q = closed_form_Q(k, g);
    EvolveConfig c;
    c.t_end = 5.0;
    c.origin_bc = OriginBC::power_law;
    const auto tr = evolve(StatePair(Q, RadialField::zeros(g)), k, c);
    for (const auto& s : tr.states) EXPECT_LT(norm_state(StatePair(s.u - Q, s.udot), k), 1e-3);
}

TEST(Evolve, SmallDataDisperses) {
    const int k = 4;
    const auto g = make_grid(60.0, 1200, Grading::uniform());
    const double R = 2.0;
    EvolveConfig c;
    c.t_end = 40.0;
    c.samples = 40;
    c.outer_bc = OuterBC::dirichlet_zero;
    const auto tr = evolve(StatePair(bump(g, 1.0, 1.0, 0.05), RadialField::zeros(g)), k, c);
    // qualitative: after the pulse leaves the support the amplitude decays, up to small reshaping bumps
    double first = NAN, prev = INFINITY, last = NAN;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (tr.times[i] < 2.0 * R) continue;
        double sup = 0.0;
        for (double x : tr.states[i].u.v) sup = std::max(sup, std::abs(x));
        if (std::isnan(first)) first = sup;
        EXPECT_LE(sup, prev * 1.05) << tr.times[i];
        prev = sup;
        last = sup;
    }
    EXPECT_LT(last, 0.5 * first);
}

TEST(Evolve, EnergyConserved) {
    const int k = 4;
    const auto ps = build_profiles(k, profile_grid(), false);
    const auto g = make_geometric_span(5e-4, 40.0, 905);
    const auto p = formal_params(k, 0.03, ps.constants);
    EvolveConfig c;
    c.t0 = formal_time(k, 0.03, ps.constants);
    c.t_end = c.t0 + 2.0;
    c.samples = 20;
    c.origin_bc = OriginBC::power_law;
    const auto tr = evolve_ansatz(p, ps, g, c);
    for (double E : tr.energies) EXPECT_NEAR(E / tr.energies.front(), 1.0, 1e-4);
    EXPECT_EQ(tr.status, RunStatus::completed);
}

TEST(Evolve, StartsAtRestThenMoves) {
    // oracle: reduced ODE from rest, lam'' = -gamma lam^{k-1} / mu^k
    const int k = 4;
    const auto ps = build_profiles(k, profile_grid(), false);
    const auto g = make_geometric_span(5e-4, 40.0, 905);
    ModParams p;
    p.lam = 0.05;
    const double horizon = 0.5 * std::pow(p.lam, 1.0 - 0.5 * k) / ps.constants.rho_k;
    EvolveConfig c;
    c.t_end = horizon;
    c.samples = 10;
    c.origin_bc = OriginBC::power_law;
    const auto tr = evolve_ansatz(p, ps, g, c);
    const auto ode = reduced_ode(p, ps.constants, 1.0, 1.0 + horizon, 1e-3, 10);
    const double x0 = half_crossing(tr.states.front().u);
    EXPECT_NEAR(x0 / p.lam, 1.0, 0.02);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double lam_ode = interp_series(ode.t, ode.lam, 1.0 + tr.times[i]);
        EXPECT_NEAR(half_crossing(tr.states[i].u) / x0, lam_ode / p.lam, 0.05) << tr.times[i];
        if (tr.times[i] <= 0.5 * horizon) {
            EXPECT_LT(std::abs(lam_ode / p.lam - 1.0), 0.1);
        }
    }
}

TEST(Evolve, TimeReversible) {
    const int k = 4;
    const auto g = grid();
    const StatePair s0(bump(g, 1.0, 0.5, 0.4), bump(g, 1.5, 0.5, 0.2));
    EvolveConfig f;
    f.t_end = 1.0;
    f.samples = 10;
    const auto fw = evolve(s0, k, f);
    EvolveConfig b = f;
    b.t0 = 1.0;
    b.t_end = 0.0;
    const auto bw = evolve(fw.states.back(), k, b);
    EXPECT_LT(norm_L2(bw.states.back().u - s0.u), 1e-10);
    EXPECT_NEAR(bw.times.back(), 0.0, 1e-12);
}

TEST(Evolve, RejectsBadConfig) {
    const auto g = grid();
    const StatePair s(RadialField::zeros(g), RadialField::zeros(g));
    EvolveConfig c;
    c.cfl = 0.9;
    EXPECT_THROW(evolve(s, 4, c), Error);
    c.cfl = 0.5;
    c.t_end = c.t0;
    EXPECT_THROW(evolve(s, 4, c), Error);
    c.t_end = 1.0;
    c.dt = 1.0;
    EXPECT_THROW(evolve(s, 4, c), Error);
}

TEST(Evolve, FormalTrajectoryConsistent) {
    const auto c = compute_constants(4, profile_grid());
    const double t = formal_time(4, 0.01, c);
    EXPECT_NEAR(c.q_k / t, 0.01, 1e-15);
    const auto p = formal_params(4, 0.01, c);
    EXPECT_NEAR(p.b, c.rho_k * 1e-4, 1e-16);
}

TEST(DiscreteEquilibrium, CorrectionOrthogonalToKernel) {
    const int k = 4;
    const auto ps = build_profiles(k, profile_grid(), false);
    const auto g = make_geometric_span(5e-4, 40.0, 905);
    const auto p = formal_params(k, 0.02, ps.constants);
    const auto s = phi(p, ps, g);
    const auto d = discrete_equilibrium(s, p, ps).u - s.u;
    const auto e1 = RadialField::sample(g, [&](double r) { return closed_LamQ(k, r / p.lam); });
    const auto e2 = RadialField::sample(g, [&](double r) { return closed_LamQ(k, r / p.mu); });
    EXPECT_LT(std::abs(inner(d, e1)) / (norm_L2(d) * norm_L2(e1)), 1e-10);
    EXPECT_LT(std::abs(inner(d, e2)) / (norm_L2(d) * norm_L2(e2)), 1e-10);
    EXPECT_LT(norm_H(d, k) / norm_H(s.u, k), 1e-2);
}
