#pragma once

#include <chrono>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace homoglab {

// One gated check inside a suite. `criterion` numbers the acceptance row the
// check belongs to so callers can aggregate a per-criterion verdict.
struct CheckResult {
    int criterion = 0;
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    std::string relation; // "<=", ">=", "in [lo, hi]"
    bool pass = false;
    std::string detail;
};

struct SuiteResult {
    std::string name;
    std::vector<CheckResult> checks;
    double elapsed_seconds = 0.0;

    bool passed() const {
        for (const CheckResult& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct SuiteOptions {
    int threads = 1;
    std::string out_dir;     // empty: no artifacts written
    std::uint64_t seed0 = 1; // base of the suite's seed blocks
    std::string config_hash = "unconfigured";
};

namespace detail {

inline std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

} // namespace detail

inline CheckResult check_le(int criterion, const std::string& name, double value, double bound,
                            const std::string& detail = std::string()) {
    return {criterion, name, value, bound, "<=", value <= bound, detail};
}

inline CheckResult check_ge(int criterion, const std::string& name, double value, double bound,
                            const std::string& detail = std::string()) {
    return {criterion, name, value, bound, ">=", value >= bound, detail};
}

inline CheckResult check_band(int criterion, const std::string& name, double value, double lo,
                              double hi, const std::string& detail = std::string()) {
    CheckResult c{criterion, name, value, 0.0, "", value >= lo && value <= hi, detail};
    c.relation = "in [" + detail::short_num(lo) + ", " + detail::short_num(hi) + "]";
    return c;
}

inline void print_suite(std::ostream& out, const SuiteResult& r) {
    out << "suite " << r.name << " (" << detail::short_num(r.elapsed_seconds) << " s)\n";
    for (const CheckResult& c : r.checks) {
        out << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << ": "
            << detail::short_num(c.value);
        if (c.relation == "<=" || c.relation == ">=")
            out << ' ' << c.relation << ' ' << detail::short_num(c.bound);
        else
            out << ' ' << c.relation;
        if (!c.detail.empty()) out << "  (" << c.detail << ")";
        out << '\n';
    }
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace homoglab
