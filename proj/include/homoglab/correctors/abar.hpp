#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "homoglab/core/multiindex.hpp"
#include "homoglab/core/smallmat.hpp"
#include "homoglab/correctors/hierarchy.hpp"

namespace homoglab {

// The homogenized tensors separated from the sample that produced them.
// entries[n-1][rank(tuple)][j] is e_j . abar^n_{i1..i_{n-1}} e_{i_n} for the
// n-tuple (i1..i_n). Identity suites use the per-sample tensors; fluctuation
// suites use a frozen calibration mean so the tensors are deterministic.
struct AbarTensors {
    int d = 0;
    int max_order = 0;
    std::string provenance; // "per-sample" or "ensemble(<count>)"
    std::vector<std::vector<std::array<double, 3>>> entries;

    double entry(int n, int j, const IndexTuple& t) const {
        return entries[static_cast<std::size_t>(n - 1)][tuple_rank(d, t)][static_cast<std::size_t>(j)];
    }

    Mat order1() const {
        Mat m = Mat::zero(d);
        for (int i = 0; i < d; ++i) {
            IndexTuple t{i};
            for (int j = 0; j < d; ++j) m(j, i) = entry(1, j, t);
        }
        return m;
    }

    static AbarTensors from_correctors(const CorrectorSet& set) {
        AbarTensors out;
        out.d = set.grid.dim();
        out.max_order = set.max_order();
        out.provenance = "per-sample";
        for (int n = 1; n <= out.max_order; ++n) out.entries.push_back(set.level(n).abar);
        return out;
    }

    static AbarTensors scaled_identity(int d, int max_order, double c = 1.0) {
        AbarTensors out;
        out.d = d;
        out.max_order = max_order;
        out.provenance = "constant";
        for (int n = 1; n <= max_order; ++n) {
            const std::size_t count = static_cast<std::size_t>(pow_int(d, n));
            out.entries.emplace_back(count, std::array<double, 3>{0.0, 0.0, 0.0});
            if (n == 1)
                for (int i = 0; i < d; ++i)
                    out.entries.back()[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = c;
        }
        return out;
    }
};

struct AbarCalibration {
    AbarTensors mean;
    AbarTensors stderr_; // standard error of the mean, entry by entry
    int samples = 0;
};

inline AbarCalibration calibrate_abar(const std::vector<AbarTensors>& per_sample) {
    if (per_sample.empty()) throw std::invalid_argument("calibrate_abar: empty ensemble");
    const AbarTensors& first = per_sample.front();
    AbarCalibration cal;
    cal.samples = static_cast<int>(per_sample.size());
    cal.mean = first;
    cal.stderr_ = first;
    cal.mean.provenance = "ensemble(" + std::to_string(cal.samples) + ")";
    cal.stderr_.provenance = cal.mean.provenance;
    for (std::size_t n = 0; n < first.entries.size(); ++n) {
        for (std::size_t t = 0; t < first.entries[n].size(); ++t) {
            for (int j = 0; j < first.d; ++j) {
                const std::size_t ju = static_cast<std::size_t>(j);
                long double sum = 0.0L, sumsq = 0.0L;
                for (const AbarTensors& s : per_sample) {
                    const long double v = s.entries[n][t][ju];
                    sum += v;
                    sumsq += v * v;
                }
                const long double m = sum / cal.samples;
                cal.mean.entries[n][t][ju] = static_cast<double>(m);
                if (cal.samples > 1) {
                    long double var = (sumsq - cal.samples * m * m) / (cal.samples - 1);
                    if (var < 0.0L) var = 0.0L;
                    cal.stderr_.entries[n][t][ju] =
                        static_cast<double>(std::sqrt(static_cast<double>(var)) / std::sqrt(static_cast<double>(cal.samples)));
                } else {
                    cal.stderr_.entries[n][t][ju] = 0.0;
                }
            }
        }
    }
    return cal;
}

} // namespace homoglab
