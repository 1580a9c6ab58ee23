// Builds the k = 4 profiles, prepares a two-bubble state and recovers its scales.
#include <cstdio>

#include "wavemap/harness.hpp"

int main() {
    using namespace wavemap;
    const int k = 4;
    const auto ps = build_profiles(k, profile_grid(), false);
    std::printf("rho_4 = %.6f  gamma_4 = %.6f  q_4 = %.6f\n", ps.constants.rho_k, ps.constants.gamma_k,
                ps.constants.q_k);

    const auto g = make_geometric_span(5e-4, 40.0, 905);
    const double lam = 0.02;
    const auto p = formal_params(k, lam, ps.constants);
    EvolveConfig ec;
    ec.t0 = formal_time(k, lam, ps.constants);
    ec.t_end = ec.t0 + 1.0;
    ec.samples = 4;
    ec.origin_bc = OriginBC::power_law;
    const auto tr = evolve_ansatz(p, ps, g, ec);

    double mu = p.mu, sigma = p.lam / p.mu;
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto ex = extract(tr.states[i], ps, mu, sigma);
        mu = ex.mu;
        sigma = ex.sigma;
        std::printf("t = %8.4f  lambda = %.6f  formal = %.6f  |g|_H = %.2e  E = %.8f\n", tr.times[i], mu * sigma,
                    ps.constants.q_k / tr.times[i], norm_state(ex.g, k), tr.energies[i]);
    }
}
