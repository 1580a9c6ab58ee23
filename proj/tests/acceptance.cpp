// One line per acceptance criterion, computed by the full verification battery at k = 4.
#include <cstdio>
#include <map>

#include "wavemap/harness.hpp"

int main() {
    wavemap::ScenarioConfig cfg;
    cfg.k = 4;
    wavemap::VerifyReport rep;
    try {
        rep = wavemap::verify_all(cfg);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::map<int, std::vector<const wavemap::CheckRecord*>> by;
    for (const auto& c : rep.checks) by[c.criterion].push_back(&c);
    bool all = true;
    for (int crit = 1; crit <= 12; ++crit) {
        const auto& v = by[crit];
        bool ok = !v.empty();
        std::string failed;
        for (const auto* c : v)
            if (!c->pass) {
                ok = false;
                failed += (failed.empty() ? "" : "; ") + c->name + " = " + std::to_string(c->measured);
            }
        all = all && ok;
        std::printf("criterion %2d: %s (%zu checks)%s%s\n", crit, ok ? "PASS" : "FAIL", v.size(),
                    failed.empty() ? "" : "  failed: ", failed.c_str());
    }
    std::printf("details:\n");
    for (const auto& c : rep.checks)
        std::printf("  [%s] %2d %-60s measured=%.6g target=%.6g %s\n", c.pass ? "ok" : "FAIL", c.criterion,
                    c.name.c_str(), c.measured, c.target, c.note.c_str());
    return all ? 0 : 1;
}
