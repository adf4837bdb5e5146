#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "homoglab/core/errors.hpp"
#include "homoglab/correctors/abar.hpp"
#include "homoglab/correctors/hierarchy.hpp"
#include "homoglab/io/sha256.hpp"
#include "homoglab/lab/ensemble.hpp"
#include "homoglab/random/gaussian_field.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/stats/normality.hpp"
#include "homoglab/stats/scaling.hpp"

namespace homoglab {

using Json = nlohmann::json;

// Full-precision text form: 17 significant digits round-trip any double.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline void encode_f64_le(std::string& out, const double* p, std::size_t count) {
    const std::size_t base = out.size();
    out.resize(base + count * 8);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data() + base, p, count * 8);
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            unsigned char b[8];
            std::memcpy(b, p + i, 8);
            for (int k = 0; k < 8; ++k) out[base + i * 8 + k] = static_cast<char>(b[7 - k]);
        }
    }
}

inline std::vector<double> decode_f64_le(const std::string& bytes) {
    if (bytes.size() % 8 != 0)
        throw io_error("binary field payload is not a whole number of 8-byte values");
    std::vector<double> vals(bytes.size() / 8);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(vals.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < vals.size(); ++i) {
            unsigned char b[8];
            for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bytes[i * 8 + 7 - k]);
            std::memcpy(&vals[i], b, 8);
        }
    }
    return vals;
}

inline std::string sha256_of(const std::string& bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex_digest();
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw io_error("write to '" + path + "' failed");
}

} // namespace detail

inline std::string hash_file(const std::string& path) {
    return detail::sha256_of(detail::read_file_bytes(path));
}

// Returns the sha256 of the on-disk (little-endian) byte stream.
inline std::string write_f64_file(const std::string& path, const double* data, std::size_t count) {
    std::string bytes;
    detail::encode_f64_le(bytes, data, count);
    detail::write_file_bytes(path, bytes);
    return detail::sha256_of(bytes);
}

inline std::vector<double> read_f64_file(const std::string& path,
                                         const std::string& expected_sha256 = std::string()) {
    const std::string bytes = detail::read_file_bytes(path);
    if (!expected_sha256.empty()) {
        const std::string got = detail::sha256_of(bytes);
        if (got != expected_sha256)
            throw io_error("checksum mismatch for '" + path + "': sidecar says " +
                           expected_sha256 + ", file hashes to " + got);
    }
    return detail::decode_f64_le(bytes);
}

inline void write_json_file(const std::string& path, const Json& j) {
    detail::write_file_bytes(path, j.dump(2) + "\n");
}

inline Json read_json_file(const std::string& path) {
    const std::string bytes = detail::read_file_bytes(path);
    Json j = Json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw io_error("'" + path + "' is not valid JSON");
    return j;
}

// ---------------------------------------------------------------------------
// Field files: <stem>.f64 (flat little-endian doubles, row-major cell order,
// channel-major when kappa > 1) plus <stem>.json sidecar.

struct FieldMeta {
    int d = 0;
    int n = 0;
    double length = 0.0;
    int kappa = 1;
    std::uint64_t seed = 0;
    std::string kernel_hash;
    std::string map;
    std::string config_hash;
};

inline std::string save_field(const std::string& dir, const std::string& stem,
                              const std::vector<double>& values, const FieldMeta& meta) {
    namespace fs = std::filesystem;
    const std::string bin = (fs::path(dir) / (stem + ".f64")).string();
    const std::string sha = write_f64_file(bin, values.data(), values.size());
    Json sidecar{
        {"format", "f64-le-rowmajor-v1"},
        {"grid", Json{{"d", meta.d}, {"n", meta.n}, {"length", meta.length}}},
        {"kappa", meta.kappa},
        {"seed", meta.seed},
        {"kernel_hash", meta.kernel_hash},
        {"map", meta.map},
        {"config_hash", meta.config_hash},
        {"count", values.size()},
        {"sha256", sha},
    };
    write_json_file((fs::path(dir) / (stem + ".json")).string(), sidecar);
    return sha;
}

inline std::vector<double> load_field(const std::string& dir, const std::string& stem,
                                      FieldMeta* meta_out = nullptr) {
    namespace fs = std::filesystem;
    const std::string side_path = (fs::path(dir) / (stem + ".json")).string();
    const Json side = read_json_file(side_path);
    try {
        if (side.at("format").get<std::string>() != "f64-le-rowmajor-v1")
            throw io_error("'" + side_path + "' declares an unknown field format");
        const std::string sha = side.at("sha256").get<std::string>();
        std::vector<double> values =
            read_f64_file((fs::path(dir) / (stem + ".f64")).string(), sha);
        if (values.size() != side.at("count").get<std::size_t>())
            throw io_error("'" + side_path + "' count disagrees with the binary payload");
        if (meta_out) {
            meta_out->d = side.at("grid").at("d").get<int>();
            meta_out->n = side.at("grid").at("n").get<int>();
            meta_out->length = side.at("grid").at("length").get<double>();
            meta_out->kappa = side.at("kappa").get<int>();
            meta_out->seed = side.at("seed").get<std::uint64_t>();
            meta_out->kernel_hash = side.at("kernel_hash").get<std::string>();
            meta_out->map = side.at("map").get<std::string>();
            meta_out->config_hash = side.at("config_hash").get<std::string>();
        }
        return values;
    } catch (const Json::exception& e) {
        throw io_error("'" + side_path + "' is missing sidecar fields: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV with pinned headers and %.17g numbers.

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : path_(path), columns_(header.size()) {
        const std::filesystem::path p(path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw io_error("cannot open '" + path + "' for writing");
        write_row(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_)
            throw io_error("row with " + std::to_string(cells.size()) + " cells in '" + path_ +
                           "' (header has " + std::to_string(columns_) + ")");
        write_row(cells);
    }

    static std::string num(double v) { return format_g17(v); }

    // Flushes and reports failure; destructor alone would swallow it.
    void done() {
        out_.flush();
        if (!out_) throw io_error("write to '" + path_ + "' failed");
    }

private:
    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::string path_;
    std::size_t columns_;
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Content-addressed run manifest.

struct ManifestEntry {
    std::string path; // relative to the manifest's directory
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct ArtifactManifest {
    std::string config_hash;
    std::string calibration_id;
    std::vector<ManifestEntry> entries;

    void record(const std::string& rel_path, const std::string& sha, std::uint64_t bytes) {
        entries.push_back({rel_path, sha, bytes});
    }

    void record_file(const std::string& dir, const std::string& rel_path) {
        const std::string full = (std::filesystem::path(dir) / rel_path).string();
        const std::string bytes = detail::read_file_bytes(full);
        entries.push_back({rel_path, detail::sha256_of(bytes), bytes.size()});
    }

    void write(const std::string& path) const {
        std::vector<ManifestEntry> sorted = entries;
        std::sort(sorted.begin(), sorted.end(),
                  [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
        Json files = Json::array();
        for (const ManifestEntry& e : sorted)
            files.push_back(Json{{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
        write_json_file(path, Json{{"format", "artifact-manifest-v1"},
                                   {"config_hash", config_hash},
                                   {"calibration_id", calibration_id},
                                   {"files", files}});
    }
};

// Rehashes every file listed by dir/manifest.json.
inline void verify_manifest(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string mpath = (fs::path(dir) / "manifest.json").string();
    const Json m = read_json_file(mpath);
    try {
        for (const Json& f : m.at("files")) {
            const std::string rel = f.at("path").get<std::string>();
            const std::string want = f.at("sha256").get<std::string>();
            const std::string got = hash_file((fs::path(dir) / rel).string());
            if (got != want)
                throw io_error("checksum mismatch for '" + rel + "' under '" + dir +
                               "': manifest says " + want + ", file hashes to " + got);
        }
    } catch (const Json::exception& e) {
        throw io_error("'" + mpath + "' is malformed: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Corrector hierarchy: one binary per (level, tuple, object) plus a manifest
// carrying the residual table and the homogenized tensor entries.

namespace detail {

inline std::string tuple_suffix(const IndexTuple& t) {
    std::string s = "i";
    for (const int k : t) s += static_cast<char>('0' + k);
    return s;
}

} // namespace detail

inline void save_corrector_set(const std::string& dir, const CorrectorSet& set,
                               const FieldMeta& meta, ArtifactManifest* manifest = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const int d = set.grid.dim();
    Json levels = Json::array();
    std::vector<std::pair<std::string, std::string>> written; // rel path, sha
    for (int n = 1; n <= set.max_order(); ++n) {
        const CorrectorLevel& lev = set.level(n);
        Json rows = Json::array();
        for (std::size_t ti = 0; ti < lev.tuples.size(); ++ti) {
            const IndexTuple& t = lev.tuples[ti];
            const std::string tag = "n" + std::to_string(n) + "_" + detail::tuple_suffix(t);

            const std::string phi_rel = "phi_" + tag + ".f64";
            const ScalarField& phi = lev.phi[ti];
            written.emplace_back(phi_rel, write_f64_file((fs::path(dir) / phi_rel).string(),
                                                         phi.data(), set.grid.cells()));

            const std::string q_rel = "q_" + tag + ".f64";
            std::vector<double> qflat;
            qflat.reserve(static_cast<std::size_t>(d) * set.grid.cells());
            for (int k = 0; k < d; ++k)
                qflat.insert(qflat.end(), lev.q[ti].component(k),
                             lev.q[ti].component(k) + set.grid.cells());
            written.emplace_back(q_rel, write_f64_file((fs::path(dir) / q_rel).string(),
                                                       qflat.data(), qflat.size()));

            std::string sigma_rel;
            if (lev.sigma[ti].pair_count() > 0) {
                sigma_rel = "sigma_" + tag + ".f64";
                std::vector<double> sflat;
                const std::size_t pairs = lev.sigma[ti].pair_count();
                sflat.reserve(pairs * set.grid.cells());
                for (std::size_t p = 0; p < pairs; ++p)
                    sflat.insert(sflat.end(), lev.sigma[ti].pair_plane(static_cast<int>(p)),
                                 lev.sigma[ti].pair_plane(static_cast<int>(p)) + set.grid.cells());
                written.emplace_back(sigma_rel, write_f64_file((fs::path(dir) / sigma_rel).string(),
                                                               sflat.data(), sflat.size()));
            }

            Json abar_row = Json::array();
            for (int j = 0; j < d; ++j) abar_row.push_back(lev.abar[ti][static_cast<std::size_t>(j)]);
            Json tuple_json = Json::array();
            for (const int k : t) tuple_json.push_back(k);
            rows.push_back(Json{
                {"tuple", tuple_json},
                {"phi", phi_rel},
                {"q", q_rel},
                {"sigma", sigma_rel},
                {"abar", abar_row},
                {"rhs_div_norm", lev.rhs_div_norm[ti]},
                {"div_q_norm", lev.div_q_norm[ti]},
                {"q_mean_abs", lev.q_mean_abs[ti]},
                {"curl_mean_abs", lev.curl_mean_abs[ti]},
                {"sigma_gap_norm", lev.sigma_gap_norm[ti]},
                {"sigma_gap_bound", lev.sigma_gap_bound[ti]},
                {"solver_iterations", lev.reports[ti].iterations},
                {"solver_residual", lev.reports[ti].rel_residual},
            });
        }
        levels.push_back(Json{{"order", n}, {"tuples", rows}});
    }

    Json files = Json::array();
    for (const auto& [rel, sha] : written) {
        files.push_back(Json{{"path", rel}, {"sha256", sha}});
        if (manifest) manifest->record_file(dir, rel);
    }
    write_json_file((fs::path(dir) / "manifest.json").string(),
                    Json{{"format", "corrector-set-v1"},
                         {"dual", set.dual},
                         {"grid", Json{{"d", meta.d}, {"n", meta.n}, {"length", meta.length}}},
                         {"seed", meta.seed},
                         {"kernel_hash", meta.kernel_hash},
                         {"map", meta.map},
                         {"config_hash", meta.config_hash},
                         {"levels", levels},
                         {"files", files}});
}

// ---------------------------------------------------------------------------
// Calibration: deterministic JSON, byte-identical across reruns of the same
// seeds on the same build.

inline Json abar_to_json(const AbarTensors& t) {
    Json entries = Json::array();
    for (const auto& level : t.entries) {
        Json rows = Json::array();
        for (const auto& row : level) {
            Json cols = Json::array();
            for (int j = 0; j < t.d; ++j) cols.push_back(row[static_cast<std::size_t>(j)]);
            rows.push_back(cols);
        }
        entries.push_back(rows);
    }
    return Json{{"d", t.d}, {"max_order", t.max_order}, {"provenance", t.provenance},
                {"entries", entries}};
}

inline AbarTensors abar_from_json(const Json& j) {
    AbarTensors t;
    try {
        t.d = j.at("d").get<int>();
        t.max_order = j.at("max_order").get<int>();
        t.provenance = j.at("provenance").get<std::string>();
        for (const Json& level : j.at("entries")) {
            std::vector<std::array<double, 3>> rows;
            for (const Json& row : level) {
                std::array<double, 3> cols{0.0, 0.0, 0.0};
                for (std::size_t k = 0; k < row.size() && k < 3; ++k) cols[k] = row[k].get<double>();
                rows.push_back(cols);
            }
            t.entries.push_back(std::move(rows));
        }
    } catch (const Json::exception& e) {
        throw io_error(std::string("malformed homogenized-tensor record: ") + e.what());
    }
    if (t.entries.size() != static_cast<std::size_t>(t.max_order))
        throw io_error("homogenized-tensor record levels disagree with max_order");
    return t;
}

inline void save_calibration(const std::string& path, const LabCalibration& cal,
                             const std::string& config_hash) {
    write_json_file(path, Json{{"format", "abar-calibration-v1"},
                               {"id", cal.id},
                               {"order", cal.order},
                               {"samples", cal.primal.samples},
                               {"seeds", cal.seeds},
                               {"config_hash", config_hash},
                               {"primal", Json{{"mean", abar_to_json(cal.primal.mean)},
                                               {"stderr", abar_to_json(cal.primal.stderr_)}}},
                               {"dual", Json{{"mean", abar_to_json(cal.dual.mean)},
                                             {"stderr", abar_to_json(cal.dual.stderr_)}}}});
}

inline LabCalibration load_calibration(const std::string& path) {
    const Json j = read_json_file(path);
    LabCalibration cal;
    try {
        if (j.at("format").get<std::string>() != "abar-calibration-v1")
            throw io_error("'" + path + "' is not a calibration file");
        cal.id = j.at("id").get<std::string>();
        cal.order = j.at("order").get<int>();
        cal.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        cal.primal.mean = abar_from_json(j.at("primal").at("mean"));
        cal.primal.stderr_ = abar_from_json(j.at("primal").at("stderr"));
        cal.primal.samples = j.at("samples").get<int>();
        cal.dual.mean = abar_from_json(j.at("dual").at("mean"));
        cal.dual.stderr_ = abar_from_json(j.at("dual").at("stderr"));
        cal.dual.samples = cal.primal.samples;
    } catch (const Json::exception& e) {
        throw io_error("'" + path + "' is missing calibration fields: " + e.what());
    }
    return cal;
}

// ---------------------------------------------------------------------------
// Ensemble results: per-seed CSV plus JSON summary.

inline const std::vector<std::string>& ensemble_csv_header() {
    static const std::vector<std::string> h = {
        "seed", "value", "reference", "solver_iterations", "solver_residual", "status"};
    return h;
}

inline void save_ensemble(const std::string& dir, const std::string& stem,
                          const EnsembleResult& r, ArtifactManifest* manifest = nullptr) {
    namespace fs = std::filesystem;
    const std::string csv_rel = stem + ".csv";
    CsvWriter csv((fs::path(dir) / csv_rel).string(), ensemble_csv_header());
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        const bool failed = std::isnan(r.values[i]);
        csv.row({std::to_string(r.seeds[i]),
                 failed ? std::string() : format_g17(r.values[i]),
                 r.references.empty() || failed ? std::string() : format_g17(r.references[i]),
                 i < r.reports.size() ? std::to_string(r.reports[i].iterations) : std::string("0"),
                 i < r.reports.size() ? format_g17(r.reports[i].rel_residual) : std::string("0"),
                 failed ? std::string("failed") : std::string("ok")});
    }
    csv.done();

    const std::vector<double> ok = r.ok_values();
    double mean = 0.0, variance = 0.0;
    for (const double v : ok) mean += v;
    if (!ok.empty()) mean /= static_cast<double>(ok.size());
    for (const double v : ok) variance += (v - mean) * (v - mean);
    if (ok.size() > 1) variance /= static_cast<double>(ok.size() - 1);

    Json summary{
        {"format", "ensemble-result-v1"},
        {"observable", observable_kind_name(r.kind)},
        {"order", r.order},
        {"eps", r.eps},
        {"config_hash", r.config_hash},
        {"calibration_id", r.calibration_id},
        {"seed_count", r.seeds.size()},
        {"ok_count", ok.size()},
        {"mean", mean},
        {"variance", variance},
        {"stderr", ok.size() > 1 ? std::sqrt(variance / static_cast<double>(ok.size())) : 0.0},
        {"failures", r.failures},
        {"per_seed_csv", csv_rel},
    };
    write_json_file((fs::path(dir) / (stem + ".json")).string(), summary);
    if (manifest) {
        manifest->record_file(dir, csv_rel);
        manifest->record_file(dir, stem + ".json");
    }
}

// ---------------------------------------------------------------------------
// Rate fits: CSV of the series plus JSON fit summary.

inline const std::vector<std::string>& rate_csv_header() {
    static const std::vector<std::string> h = {"eps", "mean_error", "stderr"};
    return h;
}

inline void save_rate_fit(const std::string& dir, const std::string& stem,
                          const std::vector<double>& eps, const std::vector<double>& means,
                          const std::vector<double>& stderrs, const PowerLawFit* fit,
                          ArtifactManifest* manifest = nullptr) {
    namespace fs = std::filesystem;
    if (eps.size() != means.size() || (!stderrs.empty() && stderrs.size() != eps.size()))
        throw io_error("rate series arrays disagree in length");
    const std::string csv_rel = stem + ".csv";
    CsvWriter csv((fs::path(dir) / csv_rel).string(), rate_csv_header());
    for (std::size_t i = 0; i < eps.size(); ++i)
        csv.row({format_g17(eps[i]), format_g17(means[i]),
                 stderrs.empty() ? std::string("0") : format_g17(stderrs[i])});
    csv.done();

    Json summary{{"format", "rate-fit-v1"}, {"series_csv", csv_rel}, {"points", eps.size()}};
    if (!eps.empty()) {
        summary["window"] = Json{{"min", *std::min_element(eps.begin(), eps.end())},
                                 {"max", *std::max_element(eps.begin(), eps.end())}};
    }
    if (fit) {
        summary["slope"] = fit->slope;
        summary["intercept"] = fit->intercept;
        summary["slope_stderr"] = fit->slope_stderr;
        summary["monotone"] = fit->monotone;
    }
    write_json_file((fs::path(dir) / (stem + "_fit.json")).string(), summary);
    if (manifest) {
        manifest->record_file(dir, csv_rel);
        manifest->record_file(dir, stem + "_fit.json");
    }
}

// QQ data: sorted standardized samples against Gaussian quantiles.
inline const std::vector<std::string>& qq_csv_header() {
    static const std::vector<std::string> h = {"rank", "standardized", "normal_quantile"};
    return h;
}

inline void save_qq_csv(const std::string& dir, const std::string& stem,
                        const std::vector<double>& samples, ArtifactManifest* manifest = nullptr) {
    namespace fs = std::filesystem;
    if (samples.size() < 2) throw io_error("QQ data needs at least two samples");
    double mean = 0.0;
    for (const double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const double v : samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples.size() - 1);
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) throw io_error("QQ data is degenerate: zero sample variance");

    std::vector<double> z(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) z[i] = (samples[i] - mean) / sd;
    std::sort(z.begin(), z.end());

    const std::string csv_rel = stem + ".csv";
    CsvWriter csv((fs::path(dir) / csv_rel).string(), qq_csv_header());
    const double n = static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        csv.row({std::to_string(i + 1), format_g17(z[i]),
                 format_g17(normal_quantile((static_cast<double>(i) + 0.5) / n))});
    csv.done();
    if (manifest) manifest->record_file(dir, csv_rel);
}

// ---------------------------------------------------------------------------
// Gaussian field cache keyed by HOMOGLAB_CACHE.

inline std::string field_cache_dir() {
    const char* env = std::getenv("HOMOGLAB_CACHE");
    return env ? std::string(env) : std::string();
}

inline std::string field_cache_stem(const TorusGrid& grid, const KernelC0& kernel, int kappa,
                                    std::uint64_t seed) {
    Sha256 h;
    const std::string text = "field|d=" + std::to_string(grid.dim()) + "|n=" +
                             std::to_string(grid.n()) + "|L=" + format_g17(grid.side()) +
                             "|kappa=" + std::to_string(kappa) + "|kernel=" +
                             kernel.content_hash() + "|seed=" + std::to_string(seed);
    h.update(text.data(), text.size());
    return "field_" + h.hex_digest().substr(0, 24);
}

// Builds through the cache when HOMOGLAB_CACHE is set, otherwise directly.
inline GaussianFieldSample sample_field_cached(const TorusGrid& grid, const KernelC0& kernel,
                                               int kappa, std::uint64_t seed) {
    const std::string dir = field_cache_dir();
    if (dir.empty()) {
        const WhiteNoiseSample noise = sample_white_noise(grid, kappa, seed);
        return build_gaussian_field(noise, kernel);
    }
    const std::string stem = field_cache_stem(grid, kernel, kappa, seed);
    namespace fs = std::filesystem;
    if (fs::exists(fs::path(dir) / (stem + ".json"))) {
        FieldMeta meta;
        std::vector<double> values = load_field(dir, stem, &meta);
        if (meta.d != grid.dim() || meta.n != grid.n() || meta.kappa != kappa ||
            meta.seed != seed || meta.kernel_hash != kernel.content_hash())
            throw io_error("cache entry '" + stem + "' does not match the requested field");
        GaussianFieldSample field(grid, kappa);
        if (values.size() != field.values.size())
            throw io_error("cache entry '" + stem + "' has the wrong cell count");
        field.values = std::move(values);
        field.seed = seed;
        field.kernel_hash = kernel.content_hash();
        field.path_used = "cache";
        return field;
    }
    const WhiteNoiseSample noise = sample_white_noise(grid, kappa, seed);
    GaussianFieldSample field = build_gaussian_field(noise, kernel);
    FieldMeta meta;
    meta.d = grid.dim();
    meta.n = grid.n();
    meta.length = grid.side();
    meta.kappa = kappa;
    meta.seed = seed;
    meta.kernel_hash = kernel.content_hash();
    meta.map = "gaussian-field";
    save_field(dir, stem, field.values, meta);
    return field;
}

// Routes a context's field sampling through the disk cache. A no-op shim
// when HOMOGLAB_CACHE is unset, so callers can attach it unconditionally.
inline void attach_field_cache(LabContext& ctx) {
    ctx.field_source = [](const LabContext& c, std::uint64_t seed) {
        return sample_field_cached(*c.grid, c.kernel, c.map.kappa, seed);
    };
}

} // namespace homoglab
