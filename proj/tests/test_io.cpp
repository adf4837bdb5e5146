#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"

#include "homoglab/core/errors.hpp"
#include "homoglab/io/config.hpp"
#include "homoglab/io/persist.hpp"
#include "homoglab/random/kernel.hpp"
#include "homoglab/random/white_noise.hpp"

using namespace homoglab;
namespace fs = std::filesystem;

namespace {

// fresh directory under the system temp root, wiped on construction
fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("homoglab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void flip_byte(const fs::path& p, std::size_t offset) {
    std::string bytes = slurp(p);
    REQUIRE(offset < bytes.size());
    bytes[offset] = static_cast<char>(bytes[offset] ^ 0x5a);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("config parser handles comments, dotted keys, and repeated keys", "[io]") {
    const std::string text =
        "# run shape\n"
        "version = 1\n"
        "grid.d = 2   # trailing comment\n"
        "grid.n = 64\n"
        "\n"
        "grid.eps = 0.125\n"
        "grid.eps = 0.0625\n"
        "suite.run = identities\n"
        "suite.run = scaling\n"
        "output.dir = out/run_a\n";
    const ConfigDoc doc = parse_config_text(text);

    REQUIRE(doc.get_int("version") == 1);
    REQUIRE(doc.get_int("grid.d") == 2);
    REQUIRE(doc.get_string("output.dir") == "out/run_a");
    REQUIRE(doc.get_double_list("grid.eps") == std::vector<double>{0.125, 0.0625});
    REQUIRE(doc.get_string_list("suite.run") == std::vector<std::string>{"identities", "scaling"});
    REQUIRE(doc.get_int("threads", 3) == 3);

    // repeated keys stay lists; asking for a single value names both lines
    REQUIRE_THROWS_MATCHES(doc.get_double("grid.eps"), config_error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("lines 6 and 7")));
    REQUIRE_THROWS_AS(doc.get_string("missing.key"), config_error);

    REQUIRE_THROWS_MATCHES(parse_config_text("version = 1\njust words\n"), config_error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 2")));
    REQUIRE_THROWS_AS(parse_config_text("Grid.N = 4\n"), config_error);
    REQUIRE_THROWS_AS(parse_config_text("grid..n = 4\n"), config_error);
    REQUIRE_THROWS_AS(parse_config_text("grid.n =\n"), config_error);
    REQUIRE_THROWS_MATCHES(parse_config_text("grid.n = four\n").get_int("grid.n"), config_error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("integer")));
}

TEST_CASE("config hash ignores layout but tracks values", "[io]") {
    const ConfigDoc a = parse_config_text(
        "version = 1\n"
        "grid.n = 32\n"
        "grid.eps = 0.25\n"
        "grid.eps = 0.125\n");
    const ConfigDoc b = parse_config_text(
        "# reordered, extra comments and spacing\n"
        "grid.eps = 0.25\n\n"
        "grid.n   =   32\n"
        "grid.eps = 0.125   # finest last\n"
        "version=1\n");
    REQUIRE(a.hash() == b.hash());
    REQUIRE(a.hash().size() == 64);

    const ConfigDoc changed = parse_config_text(
        "version = 1\ngrid.n = 33\ngrid.eps = 0.25\ngrid.eps = 0.125\n");
    REQUIRE(a.hash() != changed.hash());

    // list order under one key is part of the meaning
    const ConfigDoc swapped = parse_config_text(
        "version = 1\ngrid.n = 32\ngrid.eps = 0.125\ngrid.eps = 0.25\n");
    REQUIRE(a.hash() != swapped.hash());
}

TEST_CASE("seed specs expand ranges and reject malformed input", "[io]") {
    REQUIRE(parse_seed_spec("12") == std::vector<std::uint64_t>{12});
    REQUIRE(parse_seed_spec("1..4") == std::vector<std::uint64_t>{1, 2, 3, 4});
    REQUIRE(parse_seed_spec(" 7..9 , 40, 100..101 ") ==
            std::vector<std::uint64_t>{7, 8, 9, 40, 100, 101});

    REQUIRE_THROWS_MATCHES(parse_seed_spec("8..3"), config_error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("backwards")));
    REQUIRE_THROWS_MATCHES(parse_seed_spec("1..2000002"), config_error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("10^6")));
    REQUIRE_THROWS_AS(parse_seed_spec("1,,3"), config_error);
    REQUIRE_THROWS_AS(parse_seed_spec("ten"), config_error);
    REQUIRE_THROWS_AS(parse_seed_spec(""), config_error);
}

TEST_CASE("run config validates keys and ranges", "[io]") {
    const std::string good =
        "version = 1\n"
        "grid.d = 2\n"
        "grid.n = 64\n"
        "grid.eps = 0.125\n"
        "grid.eps = 0.0625\n"
        "ensemble.order = 2\n"
        "ensemble.map = nonsymmetric-skew\n"
        "ensemble.lambda = 0.25\n"
        "ensemble.seeds.calibrate = 1..32\n"
        "ensemble.seeds.evaluate = 100..149\n"
        "suite.run = identities\n"
        "suite.run = fluctuations\n"
        "tol.identity = 1e-9\n"
        "output.dir = runs/demo\n"
        "threads = 2\n";
    const RunConfig cfg = RunConfig::from_doc(parse_config_text(good));
    REQUIRE(cfg.d == 2);
    REQUIRE(cfg.n == 64);
    REQUIRE(cfg.eps == std::vector<double>{0.125, 0.0625});
    REQUIRE(cfg.order == 2);
    REQUIRE(cfg.map.kind == CoefficientMapSpec::Kind::nonsymmetric_skew);
    REQUIRE(cfg.calibration_seeds.size() == 32);
    REQUIRE(cfg.evaluation_seeds.size() == 50);
    REQUIRE(cfg.suites == std::vector<std::string>{"identities", "fluctuations"});
    REQUIRE(cfg.identity_tol == 1e-9);
    REQUIRE(cfg.ensemble_tol == 1e-8);
    REQUIRE(cfg.output_dir == "runs/demo");
    REQUIRE(cfg.threads == 2);
    REQUIRE(cfg.config_hash == parse_config_text(good).hash());

    auto rejects = [&](const std::string& text, const std::string& needle) {
        REQUIRE_THROWS_MATCHES(RunConfig::from_doc(parse_config_text(text)), config_error,
                               Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(needle)));
    };
    rejects("version = 1\ngrid.d = 2\ngrid.n = 16\ngrid.eps = 0.5\ngrid.typo = 3\n", "unknown key");
    rejects("version = 2\ngrid.d = 2\ngrid.n = 16\ngrid.eps = 0.5\n", "version");
    rejects("version = 1\ngrid.d = 4\ngrid.n = 16\ngrid.eps = 0.5\n", "grid.d");
    rejects("version = 1\ngrid.d = 2\ngrid.n = 16\ngrid.eps = 1.5\n", "grid.eps");
    rejects("version = 1\ngrid.d = 2\ngrid.n = 16\ngrid.eps = 0.5\nsuite.run = warmup\n", "unknown suite");
    rejects("version = 1\ngrid.d = 2\ngrid.n = 16\ngrid.eps = 0.5\nensemble.lambda = 1.0\n",
            "ensemble.lambda");
}

TEST_CASE("f64 files round-trip bitwise and detect corruption", "[io]") {
    const fs::path dir = scratch_dir("f64");
    const std::vector<double> values = {0.0, -0.0, 1.0 / 3.0, -2.75e298, 5e-324,
                                        3.141592653589793, -1e-17};
    const std::string path = (dir / "blob.f64").string();
    const std::string sha = write_f64_file(path, values.data(), values.size());
    REQUIRE(sha.size() == 64);

    const std::vector<double> back = read_f64_file(path, sha);
    REQUIRE(back.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t a = 0, b = 0;
        std::memcpy(&a, &values[i], 8);
        std::memcpy(&b, &back[i], 8);
        REQUIRE(a == b);
    }

    flip_byte(path, 13);
    REQUIRE_THROWS_MATCHES(read_f64_file(path, sha), io_error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("checksum")));

    std::ofstream(dir / "short.f64", std::ios::binary) << "12345";
    REQUIRE_THROWS_AS(read_f64_file((dir / "short.f64").string()), io_error);
    REQUIRE_THROWS_AS(read_f64_file((dir / "absent.f64").string()), io_error);
}

TEST_CASE("field files carry their sidecar metadata", "[io]") {
    const fs::path dir = scratch_dir("field");
    std::vector<double> values(64);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = 0.01 * static_cast<double>(i) - 0.3;

    FieldMeta meta;
    meta.d = 2;
    meta.n = 8;
    meta.length = 4.0;
    meta.kappa = 1;
    meta.seed = 77;
    meta.kernel_hash = "deadbeef";
    meta.map = "test-map";
    meta.config_hash = "cafe";
    save_field(dir.string(), "sample", values, meta);

    const Json side = read_json_file((dir / "sample.json").string());
    REQUIRE(side.at("format").get<std::string>() == "f64-le-rowmajor-v1");
    REQUIRE(side.at("count").get<std::size_t>() == values.size());

    FieldMeta got;
    const std::vector<double> back = load_field(dir.string(), "sample", &got);
    REQUIRE(back == values);
    REQUIRE(got.d == 2);
    REQUIRE(got.n == 8);
    REQUIRE(got.length == 4.0);
    REQUIRE(got.seed == 77);
    REQUIRE(got.kernel_hash == "deadbeef");
    REQUIRE(got.map == "test-map");
    REQUIRE(got.config_hash == "cafe");

    flip_byte(dir / "sample.f64", 40);
    REQUIRE_THROWS_AS(load_field(dir.string(), "sample"), io_error);
}

TEST_CASE("calibration files rerun byte-identically and round-trip", "[io]") {
    const fs::path dir = scratch_dir("calibration");

    LabCalibration cal;
    cal.order = 2;
    cal.seeds = {3, 5, 9};
    cal.id = "abc123";
    cal.primal.samples = 3;
    cal.primal.mean = AbarTensors::scaled_identity(2, 2, 1.25);
    cal.primal.mean.entries[1][0][1] = -0.0625; // a genuinely asymmetric slot
    cal.primal.stderr_ = AbarTensors::scaled_identity(2, 2, 0.001);
    cal.dual.samples = 3;
    cal.dual.mean = AbarTensors::scaled_identity(2, 2, 1.25);
    cal.dual.stderr_ = AbarTensors::scaled_identity(2, 2, 0.002);

    const std::string p1 = (dir / "one.json").string();
    const std::string p2 = (dir / "two.json").string();
    save_calibration(p1, cal, "confhash");
    save_calibration(p2, cal, "confhash");
    REQUIRE(slurp(p1) == slurp(p2));

    const LabCalibration back = load_calibration(p1);
    REQUIRE(back.id == "abc123");
    REQUIRE(back.order == 2);
    REQUIRE(back.seeds == cal.seeds);
    REQUIRE(back.primal.samples == 3);
    REQUIRE(back.primal.mean.entry(2, 1, {0, 0}) == -0.0625);
    REQUIRE(back.primal.mean.entry(1, 1, {1}) == 1.25);
    REQUIRE(back.dual.stderr_.entry(1, 0, {0}) == 0.002);

    std::ofstream(dir / "junk.json") << "{\"format\": \"something-else\"}\n";
    REQUIRE_THROWS_AS(load_calibration((dir / "junk.json").string()), io_error);
}

TEST_CASE("manifest verification rehashes every artifact", "[io]") {
    const fs::path dir = scratch_dir("manifest");
    std::ofstream(dir / "a.txt") << "alpha\n";
    fs::create_directories(dir / "sub");
    std::ofstream(dir / "sub" / "b.txt") << "beta\n";

    ArtifactManifest m;
    m.config_hash = "cfg";
    m.calibration_id = "cal";
    m.record_file(dir.string(), "a.txt");
    m.record_file(dir.string(), "sub/b.txt");
    m.write((dir / "manifest.json").string());

    REQUIRE_NOTHROW(verify_manifest(dir.string()));

    std::ofstream(dir / "sub" / "b.txt", std::ios::trunc) << "tampered\n";
    REQUIRE_THROWS_MATCHES(verify_manifest(dir.string()), io_error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("sub/b.txt")));
}

TEST_CASE("csv writer pins the column count", "[io]") {
    const fs::path dir = scratch_dir("csv");
    const std::string path = (dir / "table.csv").string();
    CsvWriter csv(path, {"x", "y"});
    csv.row({"1", CsvWriter::num(0.5)});
    REQUIRE_THROWS_AS(csv.row({"1", "2", "3"}), io_error);
    REQUIRE_THROWS_AS(csv.row({"1"}), io_error);
    csv.row({"2", CsvWriter::num(1.0 / 3.0)});
    csv.done();

    const std::string text = slurp(path);
    REQUIRE(text.rfind("x,y\n1,0.5\n", 0) == 0);
    REQUIRE(text.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("qq files standardize and reject degenerate samples", "[io]") {
    const fs::path dir = scratch_dir("qq");
    REQUIRE_THROWS_AS(save_qq_csv(dir.string(), "one", {1.0}), io_error);
    REQUIRE_THROWS_AS(save_qq_csv(dir.string(), "flat", {2.0, 2.0, 2.0}), io_error);

    save_qq_csv(dir.string(), "ok", {0.4, -1.0, 2.5, 0.1, -0.6, 1.2});
    const std::string text = slurp(dir / "ok.csv");
    REQUIRE(text.rfind("rank,standardized,normal_quantile\n", 0) == 0);
    // six data lines after the header
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 7);
}

TEST_CASE("field cache misses build and hits reload bitwise", "[io]") {
    const fs::path dir = scratch_dir("cache");
    REQUIRE(setenv("HOMOGLAB_CACHE", dir.string().c_str(), 1) == 0);

    const TorusGrid g(2, 16, 8.0);
    const KernelC0 kernel = default_bump_kernel(2, g.h());

    const GaussianFieldSample fresh = sample_field_cached(g, kernel, 1, 42);
    REQUIRE(fresh.path_used != "cache");
    const GaussianFieldSample cached = sample_field_cached(g, kernel, 1, 42);
    REQUIRE(cached.path_used == "cache");
    REQUIRE(cached.values == fresh.values);
    REQUIRE(cached.seed == 42);

    // the cache key separates seeds
    const GaussianFieldSample other = sample_field_cached(g, kernel, 1, 43);
    REQUIRE(other.path_used != "cache");
    REQUIRE(other.values != fresh.values);

    // the context shim routes sampling through the same store
    LabContext ctx;
    ctx.grid = &g;
    ctx.kernel = kernel;
    ctx.map = CoefficientMapSpec{};
    ctx.map.d = 2;
    attach_field_cache(ctx);
    const GaussianFieldSample via_ctx = ctx.sample_field(42);
    REQUIRE(via_ctx.path_used == "cache");
    REQUIRE(via_ctx.values == fresh.values);

    REQUIRE(unsetenv("HOMOGLAB_CACHE") == 0);
    const GaussianFieldSample direct = sample_field_cached(g, kernel, 1, 42);
    REQUIRE(direct.path_used != "cache");
    REQUIRE(direct.values == fresh.values);
}
