#include <random>

#include <gtest/gtest.h>

#include "wavemap/ansatz.hpp"

using namespace wavemap;

namespace {
const ProfileSet& ps4() {
    static const ProfileSet ps = build_profiles(4, profile_grid(), false);
    return ps;
}
}  // namespace

TEST(TwoBubble, EqualScalesVanish) {
    const auto g = two_scale_grid(0.5, 0.5);
    for (double v : two_bubble(0.5, 0.5, g, 4).v) EXPECT_EQ(v, 0.0);
}

TEST(TwoBubble, TailSlope) {
    const auto g = make_geometric_span(1e-4, 1e4, 8000);
    EXPECT_NEAR(tail_slope(two_bubble(0.01, 1.0, g, 4)), -4.0, 0.05);
}

TEST(TwoBubble, HNormAgainstQuadrature) {
    // oracle: Simpson in s = log r with d_r Q(r/l) = LamQ(r/l) / r
    const int k = 4;
    const double lam = 0.01, mu = 1.0;
    auto integrand = [&](double s) {
        const double r = std::exp(s);
        const double d = closed_LamQ(k, r / lam) - closed_LamQ(k, r / mu);
        const double u = 2.0 * std::atan2(std::pow(r / lam, k) - std::pow(r / mu, k),
                                          1.0 + std::pow(r / lam, k) * std::pow(r / mu, k));
        return d * d + k * k * u * u;
    };
    const double a = std::log(1e-6), b = std::log(1e4);
    const int m = 200000;
    const double h = (b - a) / m;
    double sum = integrand(a) + integrand(b);
    for (int i = 1; i < m; ++i) sum += (i % 2 ? 4.0 : 2.0) * integrand(a + i * h);
    const double oracle = sum * h / 3.0;
    const auto g = two_scale_grid(lam, mu);
    const double hn = norm_H(two_bubble(lam, mu, g, k), k);
    EXPECT_NEAR(hn * hn / oracle, 1.0, 1e-2);
}

TEST(TwoBubble, RejectsOrder) { EXPECT_THROW(two_bubble(1.0, 0.5, two_scale_grid(0.5, 1.0), 4), Error); }

TEST(Phi, StaticParameters) {
    const auto& ps = ps4();
    ModParams p;
    p.lam = 0.01;
    const auto g = two_scale_grid(p.lam, p.mu, 6000);
    const auto s = phi(p, ps, g);
    const double nuk = std::pow(p.nu(), 4);
    for (std::size_t i = 0; i < g->size(); i += 37) {
        const double r = g->r[i];
        const double ref = closed_Q(4, r / p.lam) + nuk * ps.iB(r / p.lam) - closed_Q(4, r) - nuk * ps.iBt(r);
        EXPECT_NEAR(s.u.v[i], ref, 1e-12);
        EXPECT_EQ(s.udot.v[i], 0.0);
    }
}

TEST(Phi, VelocityBoundedByParameters) {
    const auto& ps = ps4();
    const double nQ = std::sqrt(ps.constants.lamQ_norm_sq);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> nu(1e-3, 0.05), ab(-0.05, 0.05);
    for (int i = 0; i < 20; ++i) {
        ModParams p;
        p.lam = nu(rng);
        p.a = ab(rng);
        p.b = ab(rng);
        const auto g = two_scale_grid(p.lam, p.mu, 6000);
        const auto s = phi(p, ps, g);
        EXPECT_LE(norm_L2(s.udot), 2.0 * nQ * (std::abs(p.a) + std::abs(p.b)));
    }
}

TEST(Phi, InnerProjectionRecoversB) {
    const auto& ps = ps4();
    ModParams p;
    p.lam = 0.01;
    p.a = 0.004;
    p.b = 0.007;
    const auto g = two_scale_grid(p.lam, p.mu);
    const auto s = phi(p, ps, g);
    const auto e = RadialField::sample(g, [&](double r) { return closed_LamQ(4, r / p.lam) / p.lam; });
    EXPECT_NEAR(inner(e, s.udot) / ps.constants.lamQ_norm_sq / p.b, 1.0, 0.1);
}

TEST(Phi, UnresolvedRejected) {
    ModParams p;
    p.lam = 0.01;
    try {
        (void)phi(p, ps4(), make_geometric_span(0.1, 10.0, 200));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::resolution_error);
    }
}

TEST(Phi, OutOfRegimeRejected) {
    ModParams p;
    p.lam = 0.5;
    EXPECT_THROW(p.validate(), Error);
    p.lam = 0.01;
    p.b = 0.2;
    EXPECT_THROW(p.validate(), Error);
}

TEST(Residual, VanishesAsNuShrinks) {
    const auto& ps = ps4();
    double prev = INFINITY;
    for (double nu : {0.08, 0.04, 0.02, 0.01}) {
        ModParams p;
        p.lam = nu;
        const auto br = residual_brackets(p, ps, two_scale_grid(nu, 1.0));
        const double n = weighted_norm(br.b1 + br.b2 + br.b3, 1);
        EXPECT_LT(n, prev);
        prev = n;
    }
    EXPECT_LT(prev, 1e-6);
}

TEST(Residual, FirstBracketExponent) {
    const auto& ps = ps4();
    std::vector<double> nus = {0.02, 0.04, 0.08}, v;
    for (double nu : nus) {
        ModParams p;
        p.lam = nu;
        v.push_back(weighted_norm(residual_brackets(p, ps, two_scale_grid(nu, 1.0)).b1, 1));
    }
    EXPECT_NEAR(fit_exponent(nus, v), 8.0, 0.5);
}

TEST(Residual, QuadraticRemainder) {
    const int k = 4;
    const auto& ps = ps4();
    ModParams p;
    p.lam = 0.02;
    const auto g = two_scale_grid(p.lam, p.mu, 6000);
    const auto base = phi(p, ps, g).u;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(std::log(0.005), std::log(2.0)), h(0.3, 1.5), a(0.01, 0.1);
    std::vector<double> C;
    for (int i = 0; i < 10; ++i) {
        const double ci = c(rng), hi = h(rng), ai = a(rng);
        const auto w = RadialField::sample(g, [&](double r) {
            const double x = (std::log(r) - ci) / hi;
            return std::abs(x) < 1.0 ? ai * std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
        });
        std::vector<double> rem(g->size());
        for (std::size_t j = 0; j < g->size(); ++j) {
            const double z = base.v[j], d = w.v[j];
            rem[j] = f_nl(k, z + d) - f_nl(k, z) - df_nl(k, z) * d;
        }
        const double hn = norm_H(w, k);
        C.push_back(weighted_norm(RadialField(g, rem), 1) / (hn * hn));
    }
    const double mx = *std::max_element(C.begin(), C.end()), mn = *std::min_element(C.begin(), C.end());
    EXPECT_LT(mx, double(k * k));
    EXPECT_GT(mn, 0.0);
}

TEST(CrossTerms, LeadingExponents) {
    const auto& ps = ps4();
    const auto a = cross_term_norms(0.05, 1.0, ps), b = cross_term_norms(0.1, 1.0, ps);
    for (double v : b.values) EXPECT_TRUE(std::isfinite(v));
    auto slope = [&](std::size_t j) { return std::log(b.values[j] / a.values[j]) / std::log(2.0); };
    EXPECT_NEAR(slope(0), 4.0, 0.5) << CrossTerms::names[0];
    EXPECT_NEAR(slope(5), 2.0, 0.5) << CrossTerms::names[5];
}

TEST(CrossTerms, AllExponentsInAsymptoticRange) {
    const auto& ps = ps4();
    const std::vector<double> nus = {0.02, 0.04, 0.08};
    std::array<std::vector<double>, 10> v;
    for (double nu : nus) {
        const auto c = cross_term_norms(nu, 1.0, ps);
        for (std::size_t j = 0; j < 10; ++j) v[j].push_back(c.values[j]);
    }
    const auto e = CrossTerms::expected_exponents(4);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(fit_exponent(nus, v[j]), e[j], 0.5) << CrossTerms::names[j];
}

TEST(CrossTerms, RegimeRejected) { EXPECT_THROW(cross_term_norms(0.2, 1.0, ps4()), Error); }
