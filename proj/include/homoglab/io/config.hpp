#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "homoglab/core/errors.hpp"
#include "homoglab/io/sha256.hpp"
#include "homoglab/random/coefficient.hpp"

namespace homoglab {

// Run configuration grammar, version 1.
//
//   # comment (full line or trailing)
//   version = 1
//   grid.d = 2
//   grid.N = 64
//   grid.eps = 0.125          <- repeating a key appends to a list
//   grid.eps = 0.0625
//   ensemble.seeds.evaluate = 100..149, 200
//
// One `key = value` pair per line. Keys are dotted paths of
// [a-z0-9_] segments. Values are free text up to a comment or end
// of line, whitespace-trimmed. Seed values accept comma-separated
// integers and inclusive `a..b` ranges.

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool valid_key(const std::string& key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    bool prev_dot = false;
    for (const char ch : key) {
        if (ch == '.') {
            if (prev_dot) return false;
            prev_dot = true;
            continue;
        }
        prev_dot = false;
        if (!(std::islower(static_cast<unsigned char>(ch)) ||
              std::isdigit(static_cast<unsigned char>(ch)) || ch == '_'))
            return false;
    }
    return true;
}

} // namespace detail

struct ConfigDoc {
    std::vector<ConfigEntry> entries; // file order

    bool has(const std::string& key) const {
        return std::any_of(entries.begin(), entries.end(),
                           [&](const ConfigEntry& e) { return e.key == key; });
    }

    std::vector<const ConfigEntry*> matches(const std::string& key) const {
        std::vector<const ConfigEntry*> out;
        for (const ConfigEntry& e : entries)
            if (e.key == key) out.push_back(&e);
        return out;
    }

    const ConfigEntry& single(const std::string& key) const {
        const auto hits = matches(key);
        if (hits.empty()) throw config_error("missing required key '" + key + "'");
        if (hits.size() > 1)
            throw config_error("key '" + key + "' given " + std::to_string(hits.size()) +
                               " times (lines " + std::to_string(hits[0]->line) + " and " +
                               std::to_string(hits[1]->line) + "); expected once");
        return *hits[0];
    }

    std::string get_string(const std::string& key) const { return single(key).value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }

    double get_double(const std::string& key) const {
        const ConfigEntry& e = single(key);
        return parse_double(e);
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long get_int(const std::string& key) const {
        const ConfigEntry& e = single(key);
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(e.value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != e.value.size())
            throw config_error("line " + std::to_string(e.line) + ": key '" + key +
                               "' expects an integer, got '" + e.value + "'");
        return v;
    }

    long get_int(const std::string& key, long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const ConfigEntry* e : matches(key)) out.push_back(parse_double(*e));
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key) const {
        std::vector<std::string> out;
        for (const ConfigEntry* e : matches(key)) out.push_back(e->value);
        return out;
    }

    // Canonical text: distinct keys in lexicographic order, each key's
    // values in file order. Hash is therefore invariant under reordering
    // of unrelated lines and under comment or whitespace changes, while
    // list order under one key stays significant.
    std::string canonical_text() const {
        std::vector<std::string> keys;
        for (const ConfigEntry& e : entries) keys.push_back(e.key);
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        std::string out;
        for (const std::string& k : keys)
            for (const ConfigEntry* e : matches(k)) {
                out += k;
                out += '=';
                out += e->value;
                out += '\n';
            }
        return out;
    }

    std::string hash() const {
        Sha256 h;
        const std::string text = canonical_text();
        h.update(text.data(), text.size());
        return h.hex_digest();
    }

private:
    static double parse_double(const ConfigEntry& e) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(e.value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != e.value.size())
            throw config_error("line " + std::to_string(e.line) + ": key '" + e.key +
                               "' expects a number, got '" + e.value + "'");
        return v;
    }
};

inline ConfigDoc parse_config_text(const std::string& text) {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::size_t hash_pos = raw.find('#');
        if (hash_pos != std::string::npos) raw.erase(hash_pos);
        const std::string line = detail::trim_copy(raw);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) +
                               ": expected 'key = value', got '" + line + "'");
        ConfigEntry entry;
        entry.key = detail::trim_copy(line.substr(0, eq));
        entry.value = detail::trim_copy(line.substr(eq + 1));
        entry.line = lineno;
        if (!detail::valid_key(entry.key))
            throw config_error("line " + std::to_string(lineno) + ": malformed key '" +
                               entry.key + "'");
        if (entry.value.empty())
            throw config_error("line " + std::to_string(lineno) + ": key '" + entry.key +
                               "' has an empty value");
        doc.entries.push_back(std::move(entry));
    }
    return doc;
}

inline ConfigDoc load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// Seed grammar: "12", "1..8", "1..8, 40, 100..103". Ranges are inclusive.
inline std::vector<std::uint64_t> parse_seed_spec(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        token = detail::trim_copy(token);
        if (token.empty()) throw config_error("empty entry in seed list '" + text + "'");
        const std::size_t dots = token.find("..");
        try {
            if (dots == std::string::npos) {
                seeds.push_back(std::stoull(token));
            } else {
                const std::uint64_t lo = std::stoull(detail::trim_copy(token.substr(0, dots)));
                const std::uint64_t hi = std::stoull(detail::trim_copy(token.substr(dots + 2)));
                if (hi < lo)
                    throw config_error("seed range '" + token + "' runs backwards");
                if (hi - lo > 1000000)
                    throw config_error("seed range '" + token + "' spans more than 10^6 seeds");
                for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
            }
        } catch (const config_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("malformed seed entry '" + token + "'");
        }
    }
    if (seeds.empty()) throw config_error("seed list '" + text + "' is empty");
    return seeds;
}

inline const std::vector<std::string>& known_suite_names() {
    static const std::vector<std::string> names = {
        "identities", "refinement", "scaling",
        "fluctuations", "normality", "sensitivity",
    };
    return names;
}

struct RunConfig {
    int version = 1;
    int d = 2;
    int n = 64;                 // cells per side
    std::vector<double> eps;    // requested scale separations, finest last
    int order = 2;              // corrector levels carried by calibration

    double kernel_radius = 2.0; // covariance support radius in lattice units
    int kappa = 1;
    CoefficientMapSpec map;

    std::vector<std::uint64_t> calibration_seeds;
    std::vector<std::uint64_t> evaluation_seeds;

    std::vector<std::string> suites;
    double identity_tol = 1e-10;
    double ensemble_tol = 1e-8;

    std::string output_dir = "out";
    int threads = 1;
    std::string config_hash; // canonical hash of the source document

    static RunConfig from_doc(const ConfigDoc& doc) {
        static const std::set<std::string> known = {
            "version",
            "grid.d", "grid.n", "grid.eps",
            "ensemble.order",
            "ensemble.kernel.radius", "ensemble.kernel.kappa",
            "ensemble.map", "ensemble.lambda",
            "ensemble.map.constant_value", "ensemble.map.channel_offset",
            "ensemble.map.linear_base", "ensemble.map.linear_slope",
            "ensemble.seeds.calibrate", "ensemble.seeds.evaluate",
            "suite.run",
            "tol.identity", "tol.ensemble",
            "output.dir", "threads",
        };
        for (const ConfigEntry& e : doc.entries)
            if (!known.count(e.key))
                throw config_error("line " + std::to_string(e.line) + ": unknown key '" +
                                   e.key + "'");

        RunConfig cfg;
        cfg.version = static_cast<int>(doc.get_int("version"));
        if (cfg.version != 1)
            throw config_error("unsupported config version " + std::to_string(cfg.version) +
                               "; this build reads version 1");

        cfg.d = static_cast<int>(doc.get_int("grid.d"));
        if (cfg.d < 1 || cfg.d > 3)
            throw config_error("grid.d must be 1, 2, or 3");
        cfg.n = static_cast<int>(doc.get_int("grid.n"));
        if (cfg.n < 2) throw config_error("grid.n must be at least 2");
        cfg.eps = doc.get_double_list("grid.eps");
        for (const double e : cfg.eps)
            if (!(e > 0.0) || e > 1.0)
                throw config_error("grid.eps entries must lie in (0, 1]");

        cfg.order = static_cast<int>(doc.get_int("ensemble.order", 2));
        if (cfg.order < 1) throw config_error("ensemble.order must be positive");

        cfg.kernel_radius = doc.get_double("ensemble.kernel.radius", 2.0);
        if (!(cfg.kernel_radius > 0.0))
            throw config_error("ensemble.kernel.radius must be positive");
        cfg.kappa = static_cast<int>(doc.get_int("ensemble.kernel.kappa", 1));
        if (cfg.kappa < 1) throw config_error("ensemble.kernel.kappa must be positive");

        cfg.map.kind = CoefficientMapSpec::kind_from_name(
            doc.get_string("ensemble.map", "clipped-sigmoid-isotropic"));
        cfg.map.d = cfg.d;
        cfg.map.kappa = cfg.kappa;
        cfg.map.lambda = doc.get_double("ensemble.lambda", 0.25);
        if (!(cfg.map.lambda > 0.0) || cfg.map.lambda >= 1.0)
            throw config_error("ensemble.lambda must lie in (0, 1)");
        cfg.map.constant_value = doc.get_double("ensemble.map.constant_value", 1.0);
        cfg.map.channel_offset = doc.get_double("ensemble.map.channel_offset", 0.5);
        cfg.map.linear_base = doc.get_double("ensemble.map.linear_base", 1.0);
        cfg.map.linear_slope = doc.get_double("ensemble.map.linear_slope", 0.5);

        if (doc.has("ensemble.seeds.calibrate"))
            cfg.calibration_seeds = parse_seed_spec(doc.get_string("ensemble.seeds.calibrate"));
        if (doc.has("ensemble.seeds.evaluate"))
            cfg.evaluation_seeds = parse_seed_spec(doc.get_string("ensemble.seeds.evaluate"));

        cfg.suites = doc.get_string_list("suite.run");
        for (const std::string& s : cfg.suites) {
            const auto& names = known_suite_names();
            if (std::find(names.begin(), names.end(), s) == names.end()) {
                std::string msg = "unknown suite '" + s + "'; available:";
                for (const std::string& n : names) msg += " " + n;
                throw config_error(msg);
            }
        }

        cfg.identity_tol = doc.get_double("tol.identity", 1e-10);
        cfg.ensemble_tol = doc.get_double("tol.ensemble", 1e-8);
        if (!(cfg.identity_tol > 0.0) || !(cfg.ensemble_tol > 0.0))
            throw config_error("tolerances must be positive");

        cfg.output_dir = doc.get_string("output.dir", "out");
        cfg.threads = static_cast<int>(doc.get_int("threads", 1));
        if (cfg.threads < 1) throw config_error("threads must be positive");

        cfg.config_hash = doc.hash();
        return cfg;
    }
};

inline RunConfig load_run_config(const std::string& path) {
    return RunConfig::from_doc(load_config_file(path));
}

} // namespace homoglab
