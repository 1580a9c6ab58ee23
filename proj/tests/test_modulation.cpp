#include <gtest/gtest.h>

#include "wavemap/modulation.hpp"

using namespace wavemap;

namespace {

const ProfileSet& ps4() {
    static const ProfileSet ps = build_profiles(4, profile_grid(), true);
    return ps;
}

const VirialProfile& vp() {
    static const VirialProfile v = make_virial_profile(0.05, 10.0);
    return v;
}

Grid evo_grid() { return make_geometric_span(5e-4, 40.0, 905); }

RadialField log_bump(const Grid& g, double r0, double h, double a = 1.0) {
    return RadialField::sample(g, [&](double r) {
        const double x = std::log(r / r0) / h;
        return std::abs(x) < 1.0 ? a * std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
    });
}

}  // namespace

TEST(Virial, AllBulletsHold) {
    for (const auto& ch : vp().checks) EXPECT_TRUE(ch.pass) << ch.name << " worst=" << ch.worst;
    EXPECT_EQ(vp().checks.size(), 9u);
}

TEST(Virial, InnerAndOuterRegions) {
    const auto& v = vp();
    EXPECT_EQ(v.dp(5.0), 5.0);
    EXPECT_EQ(v.ddp(5.0), 1.0);
    for (std::size_t i = 0; i < v.grid->size(); ++i)
        if (v.grid->r[i] <= v.R) {
            EXPECT_NEAR(v.p.v[i] / (0.5 * v.grid->r[i] * v.grid->r[i]), 1.0, 1e-14);
        }
    const double end = v.dp(v.R_tilde) / v.R_tilde;
    EXPECT_GE(end, 0.0);
    EXPECT_LE(end, v.c * (1.0 + 1e-6));
}

TEST(Virial, RejectsBadParameters) {
    EXPECT_THROW(make_virial_profile(0.0, 10.0), Error);
    EXPECT_THROW(make_virial_profile(0.05, 0.5), Error);
}

TEST(VirialOperator, InnerRegionIsLambda0) {
    const double lam = 0.05;
    const auto g = make_geometric_span(1e-5, 1e3, 4000);
    const auto w = log_bump(g, lam, 1.0);  // support r <= e lam < R lam
    const auto a = apply_A0(lam, vp(), w), b = (1.0 / lam) * lambda0(w);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (g->r[i] < 0.5 * vp().R * lam) {
            EXPECT_NEAR(a.v[i], b.v[i], 1e-10 * (1.0 + std::abs(b.v[i])));
        }
}

TEST(VirialOperator, Antisymmetric) {
    const double lam = 0.05;
    const auto g = make_geometric_span(1e-5, 1e3, 4000);
    for (double r0 : {0.02, 0.3, 2.0, 40.0}) {
        const auto w = log_bump(g, r0, 1.7);
        const auto Aw = apply_A0(lam, vp(), w);
        EXPECT_LT(std::abs(inner(Aw, w)) / (norm_L2(Aw) * norm_L2(w)), 1e-8) << r0;
    }
}

TEST(VirialOperator, ApproachesLambda0AsRGrows) {
    const int k = 4;
    const double lam = 0.05;
    const auto g = make_geometric_span(1e-5, 1e3, 4000);
    const auto LQ = RadialField::sample(g, [&](double r) { return closed_LamQ(k, r / lam); }, k, -k);
    const auto ref = (1.0 / lam) * transport(LQ, [](double r) { return r; });
    double prev = INFINITY;
    for (double R : {2.0, 5.0, 10.0, 20.0}) {
        const double d = norm_L2(apply_A0(lam, make_virial_profile(0.05, R), LQ) - ref);
        EXPECT_LT(d, prev) << R;
        prev = d;
    }
}

TEST(Pohozaev, TruncatedLamQHoldsWithMargin) {
    const int k = 4;
    const double lam = 0.05;
    const auto g = make_geometric_span(1e-5, 1e3, 4000);
    const auto w = RadialField::sample(g, [&](double r) {
        const double x = std::log(r / (20.0 * lam));
        const double cut = x <= 0.0 ? 1.0 : (x < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0);
        return closed_LamQ(k, r / lam) * cut;
    }, k);
    const auto res = pohozaev_check(lam, vp(), w, k, 0.05);
    EXPECT_TRUE(res.holds);
    EXPECT_GT(res.lhs - res.bound, 0.0);
}

TEST(Pohozaev, InnerSupportIsExact) {
    const int k = 4;
    const double lam = 0.05;
    const auto g = make_geometric_span(1e-5, 1e3, 4000);
    const auto w = log_bump(g, 0.1 * lam, 1.0);
    const auto res = pohozaev_check(lam, vp(), w, k, 0.05);
    const double direct = inner(lambda0(w), apply_operator(op_L0(k), w)) / lam;
    EXPECT_NEAR(res.lhs, direct, 1e-8 * std::abs(direct));
}

TEST(Pohozaev, ZeroField) {
    const auto g = make_geometric_span(1e-5, 1e3, 400);
    const auto res = pohozaev_check(0.05, vp(), RadialField::zeros(g), 4, 0.05);
    EXPECT_EQ(res.lhs, 0.0);
    EXPECT_EQ(res.bound, 0.0);
    EXPECT_TRUE(res.holds);
}

TEST(Extraction, ExactMember) {
    const int k = 4;
    const auto g = evo_grid();
    const double mu = 0.98, sigma = 0.015;
    const auto s = phi_ref(mu, sigma, ps4(), g);
    const auto ex = extract(s, ps4(), 1.2, 0.01);
    EXPECT_NEAR(ex.mu / mu, 1.0, 1e-10);
    EXPECT_NEAR(ex.sigma / sigma, 1.0, 1e-10);
    EXPECT_LT(norm_state(ex.g, k), 1e-10);
    const double nQ = ps4().constants.lamQ_norm_sq;
    EXPECT_NEAR(ex.M[0][0] / nQ, 1.0, 0.1);
    EXPECT_NEAR(ex.M[1][1] / nQ, -1.0, 0.1);
}

TEST(Extraction, ContinuumReferenceAlsoExact) {
    const auto g = evo_grid();
    const auto s = phi_ref(1.0, 0.02, ps4(), g, RefMode::continuum);
    const auto ex = extract(s, ps4(), 1.1, 0.03, RefMode::continuum);
    EXPECT_NEAR(ex.sigma / 0.02, 1.0, 1e-10);
}

TEST(Extraction, QuadraticUnderOrthogonalPerturbation) {
    const int k = 4;
    const auto g = evo_grid();
    const double mu = 1.0, sigma = 0.01;
    const auto U = phi_ref(mu, sigma, ps4(), g);
    const auto e1 = underline(g, mu, closed_LamQ, k), e2 = underline(g, mu * sigma, closed_LamQ, k);
    auto psi = log_bump(g, 0.03, 1.5) + 0.5 * log_bump(g, 0.5, 1.0);
    // Gram-Schmidt against both kernel directions
    const double a11 = inner(e1, e1), a12 = inner(e1, e2), a22 = inner(e2, e2);
    const double b1 = inner(e1, psi), b2 = inner(e2, psi), det = a11 * a22 - a12 * a12;
    psi = psi - ((a22 * b1 - a12 * b2) / det) * e1 - ((a11 * b2 - a12 * b1) / det) * e2;
    auto err = [&](double eps) {
        StatePair s = U;
        for (std::size_t i = 0; i < s.u.size(); ++i) s.u.v[i] += std::expm1(eps * psi.v[i]);
        const auto ex = extract(s, ps4(), mu, sigma);
        return std::abs(ex.mu / mu - 1.0) + std::abs(ex.sigma / sigma - 1.0);
    };
    EXPECT_NEAR(err(0.02) / err(0.01), 4.0, 0.4);
}

TEST(Extraction, RegimeRejected) {
    const auto g = evo_grid();
    const auto s = phi_ref(1.0, 0.02, ps4(), g);
    try {
        (void)extract(s, ps4(), 1.0, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_regime);
    }
}

TEST(BFunctional, VanishesOnFamily) {
    const auto g = evo_grid();
    const auto ex = extract(phi_ref(1.0, 0.02, ps4(), g), ps4(), 1.0, 0.02);
    const auto bf = b_functional(ex, ps4(), vp());
    EXPECT_LT(std::abs(bf.b), 1e-9);
    EXPECT_LT(std::abs(bf.lamQ_gdot), 1e-9);
}

TEST(BFunctional, VirialPartIsQuadratic) {
    const int k = 4;
    const auto g = evo_grid();
    Extraction ex;
    ex.mu = 1.0;
    ex.sigma = 0.02;
    auto at = [&](double eps) {
        ex.g = StatePair(eps * log_bump(g, 0.05, 1.2), eps * log_bump(g, 0.08, 1.0));
        const double gh = norm_state(ex.g, k);
        return b_functional(ex, ps4(), vp()).virial / (gh * gh);
    };
    EXPECT_NEAR(at(1e-3) / at(2e-3), 1.0, 1e-10);
}

TEST(ReducedOde, FormalRates) {
    const auto& c = ps4().constants;
    const double t0 = 50.0;
    ModParams p;
    p.lam = c.q_k / t0;
    p.b = c.q_k / (t0 * t0);
    p.mu = 1.0 - c.q_k * c.q_k / 3.0 / (t0 * t0);
    p.a = 2.0 * c.q_k * c.q_k / 3.0 / (t0 * t0 * t0);
    const auto tr = reduced_ode(p, c, t0, 200.0, 1e-3, 10);
    EXPECT_NEAR(interp_series(tr.t, tr.lam, 100.0) / interp_series(tr.t, tr.lam, 50.0), 0.5, 0.005);
    EXPECT_NEAR(tr.b.back() * 200.0 * 200.0 / c.q_k, 1.0, 0.01);
    EXPECT_NEAR(tr.a.back() * std::pow(200.0, 3) / (2.0 / 3.0 * c.q_k * c.q_k), 1.0, 0.02);
    const auto fine = reduced_ode(p, c, t0, t0 + 10.0, 1e-3, 1);
    for (std::size_t i = 1; i + 1 < fine.t.size(); i += 1000) {
        const double dmu = (fine.mu[i + 1] - fine.mu[i - 1]) / (fine.t[i + 1] - fine.t[i - 1]);
        EXPECT_NEAR(dmu / fine.a[i], 1.0, 1e-6);
    }
}

TEST(ReducedOde, BackwardMatchesForward) {
    const auto& c = ps4().constants;
    ModParams p;
    p.lam = c.q_k / 20.0;
    p.b = c.q_k / 400.0;
    const auto fw = reduced_ode(p, c, 20.0, 40.0, 1e-3);
    ModParams q;
    q.lam = fw.lam.back();
    q.mu = fw.mu.back();
    q.a = fw.a.back();
    q.b = fw.b.back();
    const auto bw = reduced_ode(q, c, 40.0, 20.0, 1e-3);
    EXPECT_NEAR(bw.lam.back() / p.lam, 1.0, 1e-10);
}

TEST(ReducedOde, RejectsBadInput) { EXPECT_THROW(reduced_ode(ModParams{}, ps4().constants, 1.0, 1.0, 1e-3), Error); }

TEST(Monitor, ExactFamilyPathIsTrivial) {
    const auto g = evo_grid();
    Trajectory tr;
    for (int j = 0; j < 12; ++j) {
        const double sigma = 0.03 * std::pow(0.9, j);
        tr.times.push_back(j);
        tr.states.push_back(phi_ref(1.0, sigma, ps4(), g));
        tr.energies.push_back(0.0);
    }
    const auto m = track(tr, ps4(), vp(), 1.0, 0.03);
    for (double x : m.g_Hnorm) EXPECT_LT(x, 1e-10);
    const auto rep = monitor_b(m, ps4());
    EXPECT_EQ(rep.samples, 10u);
}

TEST(Monitor, TooFewSamples) {
    ModTrack m;
    m.times = {0.0, 1.0};
    try {
        (void)monitor_b(m, ps4());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
    }
}
