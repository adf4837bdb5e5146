// Acceptance gate: runs every suite back to back and reduces their gated
// checks to one verdict line per criterion. Exits nonzero when any criterion
// fails, including a suite crash or a blown wall-clock budget.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "homoglab/suites/common.hpp"
#include "homoglab/suites/fluctuations.hpp"
#include "homoglab/suites/identities.hpp"
#include "homoglab/suites/normality.hpp"
#include "homoglab/suites/refinement.hpp"
#include "homoglab/suites/scaling.hpp"
#include "homoglab/suites/sensitivity.hpp"

using namespace homoglab;

namespace {

struct SuitePlan {
    const char* name;
    SuiteResult (*run)(const SuiteOptions&);
    double budget_minutes;
    std::vector<int> criteria;
};

const std::map<int, std::string> criterion_names = {
    {1, "exact identities at solver tolerance, d=2 N=64 n<=2"},
    {2, "constant coefficients collapse the hierarchy"},
    {3, "1-D closed forms: harmonic mean and corrector gradient"},
    {4, "refinement-class residuals decay at first order in h"},
    {5, "two-scale expansion error scales linearly in eps"},
    {6, "variance decay matches the central limit scaling"},
    {7, "pathwise commutator gap variance shrinks per eps halving"},
    {8, "standardized fluctuations are Gaussian at eps=1/32"},
    {9, "leading variance tensor predicts held-out probes"},
    {10, "noise derivative and spectral gap inequalities hold"},
};

} // namespace

int main(int argc, char** argv) {
    SuiteOptions opts;
    opts.threads = argc > 1 ? std::atoi(argv[1]) : 1;
    if (opts.threads < 1) opts.threads = 1;

    const std::vector<SuitePlan> plans = {
        {"identities", &run_identity_suite, 12.0, {1, 2, 3}},
        {"refinement", &run_refinement_suite, 30.0, {4}},
        {"scaling", &run_scaling_suite, 105.0, {5, 6}},
        {"fluctuations", &run_fluctuation_suite, 60.0, {7}},
        {"normality", &run_normality_suite, 105.0, {8, 9}},
        {"sensitivity", &run_sensitivity_suite, 15.0, {10}},
    };

    std::map<int, bool> verdict;
    std::map<int, std::string> notes;
    for (const SuitePlan& p : plans)
        for (int c : p.criteria) verdict[c] = false;

    for (const SuitePlan& plan : plans) {
        SuiteOptions suite_opts = opts;
        suite_opts.out_dir = std::string("acceptance_out/") + plan.name;
        std::cout << "running " << plan.name << " suite..." << std::endl;
        SuiteResult r;
        try {
            r = plan.run(suite_opts);
        } catch (const std::exception& e) {
            std::cout << "suite " << plan.name << " aborted: " << e.what() << "\n";
            for (int c : plan.criteria) notes[c] = "suite aborted";
            continue;
        }
        print_suite(std::cout, r);

        const double budget = plan.budget_minutes * 60.0;
        const bool in_budget = r.elapsed_seconds <= budget;
        if (!in_budget)
            std::cout << "suite " << plan.name << " exceeded its " << plan.budget_minutes
                      << " minute budget\n";

        for (int c : plan.criteria) {
            bool pass = in_budget;
            bool seen = false;
            for (const CheckResult& chk : r.checks)
                if (chk.criterion == c) {
                    seen = true;
                    pass = pass && chk.pass;
                }
            verdict[c] = pass && seen;
            if (!seen)
                notes[c] = "no checks ran";
            else if (!in_budget)
                notes[c] = "budget exceeded (" + detail::short_num(r.elapsed_seconds) + " s)";
        }
    }

    std::cout << "\nacceptance summary\n";
    bool all_ok = true;
    for (const auto& [criterion, pass] : verdict) {
        all_ok = all_ok && pass;
        std::cout << "[" << (pass ? "PASS" : "FAIL") << "] criterion " << criterion << ": "
                  << criterion_names.at(criterion);
        const auto note = notes.find(criterion);
        if (note != notes.end() && !pass) std::cout << " [" << note->second << "]";
        std::cout << "\n";
    }
    std::cout << (all_ok ? "all criteria passed\n" : "some criteria FAILED\n");
    return all_ok ? 0 : 1;
}
