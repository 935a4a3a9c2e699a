// Acceptance run: one PASS/FAIL line per criterion, failing checks listed underneath.
// Exit status is the number of failing criteria (capped at 1).
#include "peakon/experiments.hpp"
#include "peakon/series.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace peakon;

namespace {

struct Criterion {
    int id;
    std::string title;
    std::string config;  // "verify" or an experiment name
    std::function<void(const RunConfig&, RunResult&)> body;
};

}  // namespace

int main(int argc, char** argv)
{
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    const std::vector<Criterion> criteria{
        {1, "operator identities", "verify", verify_operators},
        {2, "Y+ inequality battery", "verify", verify_inequalities},
        {3, "norm equivalence", "verify", verify_norms},
        {4, "Psi properties", "verify", verify_psi},
        {5, "conservation", "verify", verify_conservation},
        {6, "single peakon exactness", "verify", verify_exactness},
        {7, "transport identity", "transport-identity", experiment_transport_identity},
        {8, "flux identity coefficient", "flux-identity", experiment_flux_identity},
        {9, "jump law", "jump-law", experiment_jump_law},
        {10, "almost monotonicity", "monotonicity", experiment_monotonicity},
        {11, "asymptotic stability", "stability", experiment_stability},
        {12, "train stability", "train", experiment_train},
        {13, "antipeakon symmetry", "antipeakon-symmetry", experiment_antipeakon_symmetry},
        {14, "disputed constants", "verify", verify_constants},
    };
    const int only = argc > 1 ? std::stoi(argv[1]) : 0;

    int failed = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        RunConfig cfg = c.config == "verify" ? default_config("verify", "all") : default_config("experiment", c.config);
        RunResult out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(cfg, out);
        } catch (const std::exception& e) {
            out.stats.aborted = true;
            out.stats.abort_reason = e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool pass = out.passed() && !out.checks.empty();
        failed += pass ? 0 : 1;
        std::printf("criterion %2d %s  %s (%zu checks, %.1f s)\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(),
                    out.checks.size(), secs);
        for (const auto& k : out.checks)
            if (!k.pass)
                std::printf("    failed %s: %s %s %s\n", k.name.c_str(), format_real(k.value).c_str(), k.relation.c_str(),
                            format_real(k.threshold).c_str());
        for (const auto& k : out.comparisons)
            std::printf("    compare %s: stated %s, oracle %s, adopted %s\n", k.name.c_str(), format_real(k.stated).c_str(),
                        format_real(k.oracle).c_str(), k.adopted.c_str());
        if (out.stats.aborted) std::printf("    abort: %s\n", out.stats.abort_reason.c_str());
    }
    return failed == 0 ? 0 : 1;
}
