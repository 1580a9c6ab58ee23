#include <gtest/gtest.h>

#include "wavemap/profiles.hpp"

using namespace wavemap;

namespace {
const ProfileSet& ps4() {
    static const ProfileSet ps = build_profiles(4, profile_grid(), false);
    return ps;
}
}  // namespace

TEST(Constants, RequireK) {
    try {
        require_k(3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
        EXPECT_NE(std::string(e.what()).find("k ≥ 4 required"), std::string::npos);
    }
}

TEST(Constants, ClosedFormsAtK4) {
    EXPECT_NEAR(closed_rho(4) / 2.683702, 1.0, 1e-4);
    EXPECT_NEAR(closed_gamma(4) / 14.40451, 1.0, 1e-4);
    EXPECT_NEAR(closed_q(4) / 0.372620, 1.0, 1e-4);
    EXPECT_NEAR(closed_lamQ_norm_sq(4), 2.0 * pi * std::sqrt(2.0), 1e-12);
}

TEST(Constants, QuadratureIdentity) {
    for (int k : {4, 5, 6}) {
        const auto c = compute_constants(k, profile_grid());
        EXPECT_NEAR(c.lamQ_norm_sq / closed_lamQ_norm_sq(k), 1.0, 1e-5) << k;
        EXPECT_NEAR(16.0 * k / c.lamQ_norm_sq / (c.rho_k * c.rho_k), 1.0, 1e-5) << k;
        EXPECT_NEAR(c.gamma_solvability / c.gamma_k, 1.0, 1e-4) << k;
        EXPECT_NEAR(c.tilde_gamma_k / c.gamma_k, 1.0, 1e-4) << k;
    }
}

TEST(Constants, CoarseGridRejected) {
    try {
        (void)compute_constants(4, make_geometric_span(1e-1, 1e1, 40));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::grid_too_coarse);
    }
}

TEST(ClosedForm, LamQInversionSymmetry) {
    const auto g = make_geometric_span(1e-3, 1e3, 2001);
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = g->r[i];
        EXPECT_NEAR(closed_LamQ(4, r), closed_LamQ(4, 1.0 / r), 1e-10);
    }
}

TEST(Correction, ZeroRhs) {
    const auto g = profile_grid(4000);
    const auto h = solve_correction(RadialField::zeros(g), 4, g);
    for (double v : h.v) EXPECT_EQ(v, 0.0);
}

TEST(Correction, ManufacturedSolution) {
    const int k = 4;
    const auto g = profile_grid();
    auto bump = RadialField::sample(g, [](double r) {
        const double x = std::log(r) - 0.3;
        return std::abs(x) < 1.5 ? std::exp(-1.0 / (1.0 - x * x / 2.25)) * std::sin(2.0 * x) : 0.0;
    });
    const auto LQ = closed_form_LamQ(k, g);
    const auto phi = bump - (inner(bump, LQ) / inner(LQ, LQ)) * LQ;
    const auto rhs = apply_operator(op_L_about(k, closed_form_Q(k, g)), phi);
    const auto h = solve_correction(rhs, k, g);
    EXPECT_LT(norm_H(h - phi, k) / norm_H(phi, k), 1e-4);
}

TEST(Correction, SolvabilityViolation) {
    const auto g = profile_grid(4000);
    try {
        (void)solve_correction(closed_form_LamQ(4, g), 4, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::solvability_violation);
    }
}

TEST(Profiles, ResidualsAndOrthogonality) {
    const auto& ps = ps4();
    const auto& g = ps.grid;
    const auto L = op_L_about(4, closed_form_Q(4, g));
    const auto rA = rhs_A(4, g), rB = rhs_B(ps.constants, g), rBt = rhs_Btilde(ps.constants, g);
    EXPECT_LT(norm_L2(apply_operator(L, ps.A) - rA) / norm_L2(rA), 1e-4);
    EXPECT_LT(norm_L2(apply_operator(L, ps.B) - rB) / norm_L2(rB), 1e-4);
    EXPECT_LT(norm_L2(apply_operator(L, ps.Btilde) - rBt) / norm_L2(rBt), 1e-4);
    EXPECT_LT(std::abs(inner(ps.A, ps.LamQ)) / (norm_L2(ps.A) * norm_L2(ps.LamQ)), 1e-6);
}

TEST(Profiles, EndpointSlopes) {
    const auto& ps = ps4();
    for (const auto* f : {&ps.A, &ps.B, &ps.Btilde}) {
        EXPECT_NEAR(origin_slope(*f), 4.0, 0.2);
        EXPECT_NEAR(tail_slope(*f), -2.0, 0.2);
    }
}

TEST(Coercivity, PositiveAndConverged) {
    const double a = coercivity_constant(4, make_geometric_span(1e-3, 1e3, 1000));
    const double b = coercivity_constant(4, make_geometric_span(1e-3, 1e3, 2000));
    EXPECT_GT(a, 0.0);
    EXPECT_LT(std::abs(b / a - 1.0), 0.1);
}
