#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "homoglab/homoglab.hpp"

namespace fs = std::filesystem;
using namespace homoglab;

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_dir;
    std::string seed_spec;
    std::string suite;
    int threads = 0;  // 0: take the config value
    double tol = 0.0; // 0: take the config value
};

std::string resolve_out(const CliArgs& cli, const RunConfig* cfg) {
    if (!cli.out_dir.empty()) return cli.out_dir;
    if (cfg != nullptr) return cfg->output_dir;
    return "out";
}

int resolve_threads(const CliArgs& cli, const RunConfig& cfg) {
    const int t = cli.threads > 0 ? cli.threads : cfg.threads;
    if (t < 1) throw config_error("threads must be positive");
    return t;
}

RunConfig require_config(const CliArgs& cli) {
    if (cli.config_path.empty())
        throw config_error("this command needs --config <file>");
    return load_run_config(cli.config_path);
}

void write_dir_manifest(const std::string& dir, const std::string& config_hash,
                        const std::string& calibration_id) {
    ArtifactManifest manifest;
    manifest.config_hash = config_hash;
    manifest.calibration_id = calibration_id;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        manifest.record_file(dir, rel);
    }
    manifest.write((fs::path(dir) / "manifest.json").string());
}

int cmd_calibrate(const CliArgs& cli) {
    const RunConfig cfg = require_config(cli);
    if (cfg.eps.empty()) throw config_error("calibrate: config sets no grid.eps");

    const TorusGrid grid(cfg.d, cfg.n, 1.0 / cfg.eps.front());
    LabContext ctx;
    ctx.grid = &grid;
    ctx.kernel = default_bump_kernel(cfg.d, grid.h(), cfg.kappa, cfg.kernel_radius);
    ctx.map = cfg.map;
    ctx.hierarchy_tol = cli.tol > 0.0 ? cli.tol : cfg.ensemble_tol;
    ctx.solver_tol = ctx.hierarchy_tol;
    attach_field_cache(ctx);

    const std::vector<std::uint64_t> seeds =
        cli.seed_spec.empty() ? cfg.calibration_seeds : parse_seed_spec(cli.seed_spec);
    if (seeds.empty())
        throw config_error("calibrate: no seeds (set ensemble.seeds.calibrate or pass --seeds)");
    const int threads = resolve_threads(cli, cfg);

    std::cout << "calibrating order " << cfg.order << " tensors on d=" << cfg.d << ", N=" << cfg.n
              << ", L=" << grid.side() << " over " << seeds.size() << " seeds\n";
    const LabCalibration cal = calibrate_lab(ctx, cfg.order, seeds, threads);

    const std::string out = resolve_out(cli, &cfg);
    fs::create_directories(out);
    const std::string path = (fs::path(out) / "calibration.json").string();
    save_calibration(path, cal, cfg.config_hash);
    write_dir_manifest(out, cfg.config_hash, cal.id);

    const Mat mean = cal.primal.mean.order1();
    const Mat se = cal.primal.stderr_.order1();
    std::cout << "abar1 (ensemble mean +- stderr):\n";
    for (int i = 0; i < cfg.d; ++i) {
        std::cout << " ";
        for (int j = 0; j < cfg.d; ++j)
            std::cout << "  " << format_g17(mean(i, j)) << " +- " << format_g17(se(i, j));
        std::cout << "\n";
    }
    for (int n = 2; n <= cfg.order; ++n) {
        double worst = 0.0, worst_se = 0.0;
        for (const IndexTuple& t : enumerate_tuples(cfg.d, n))
            for (int j = 0; j < cfg.d; ++j) {
                worst = std::max(worst, std::abs(cal.primal.mean.entry(n, j, t)));
                worst_se = std::max(worst_se, cal.primal.stderr_.entry(n, j, t));
            }
        std::cout << "abar" << n << ": max |entry| = " << format_g17(worst)
                  << ", max stderr = " << format_g17(worst_se) << "\n";
    }
    std::cout << "calibration " << cal.id << " written to " << path << "\n";
    return 0;
}

bool suite_needs_calibration(const std::string& suite) {
    return suite == "scaling" || suite == "fluctuations" || suite == "normality";
}

SuiteResult dispatch_suite(const std::string& suite, const SuiteOptions& opts) {
    if (suite == "identities") return run_identity_suite(opts);
    if (suite == "refinement") return run_refinement_suite(opts);
    if (suite == "scaling") return run_scaling_suite(opts);
    if (suite == "fluctuations") return run_fluctuation_suite(opts);
    if (suite == "normality") return run_normality_suite(opts);
    return run_sensitivity_suite(opts);
}

Json summary_json(const SuiteResult& r, const std::string& config_hash,
                  const std::string& calibration_id) {
    Json checks = Json::array();
    for (const CheckResult& c : r.checks)
        checks.push_back(Json{{"criterion", c.criterion},
                              {"name", c.name},
                              {"value", c.value},
                              {"bound", c.bound},
                              {"relation", c.relation},
                              {"pass", c.pass},
                              {"detail", c.detail}});
    return Json{{"format", "suite-summary-v1"},
                {"suite", r.name},
                {"elapsed_seconds", r.elapsed_seconds},
                {"passed", r.passed()},
                {"config_hash", config_hash},
                {"calibration_id", calibration_id},
                {"checks", checks}};
}

int cmd_run(const CliArgs& cli) {
    const RunConfig cfg = require_config(cli);
    const auto& names = known_suite_names();
    if (std::find(names.begin(), names.end(), cli.suite) == names.end()) {
        std::string list;
        for (const std::string& n : names) list += (list.empty() ? "" : ", ") + n;
        throw config_error("unknown suite '" + cli.suite + "' (one of: " + list + ")");
    }

    const std::string out = resolve_out(cli, &cfg);
    std::string calibration_id = "per-sample";
    if (suite_needs_calibration(cli.suite)) {
        const std::string path = (fs::path(out) / "calibration.json").string();
        if (!fs::exists(path))
            throw config_error("suite '" + cli.suite +
                               "' runs against persisted ensemble tensors and none were found at '" +
                               path + "'; run `homoglab calibrate --config " + cli.config_path +
                               " --out " + out + "` first");
        const LabCalibration cal = load_calibration(path);
        calibration_id = cal.id;
        std::cout << "using calibration " << cal.id << " (order " << cal.order << ", "
                  << cal.primal.samples << " samples)\n";
    }

    SuiteOptions opts;
    opts.threads = resolve_threads(cli, cfg);
    opts.config_hash = cfg.config_hash;
    opts.out_dir = (fs::path(out) / cli.suite).string();
    if (!cli.seed_spec.empty()) {
        const std::vector<std::uint64_t> seeds = parse_seed_spec(cli.seed_spec);
        opts.seed0 = seeds.front();
    } else if (!cfg.calibration_seeds.empty()) {
        opts.seed0 = cfg.calibration_seeds.front();
    }
    fs::create_directories(opts.out_dir);

    const SuiteResult result = dispatch_suite(cli.suite, opts);
    print_suite(std::cout, result);
    write_json_file((fs::path(opts.out_dir) / "suite_summary.json").string(),
                    summary_json(result, cfg.config_hash, calibration_id));
    write_dir_manifest(opts.out_dir, cfg.config_hash, calibration_id);
    std::cout << "artifacts under " << opts.out_dir << "\n";
    return result.passed() ? 0 : 1;
}

// Minimal reader for the CSVs this tool writes: no quoting, no escapes.
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

int cmd_report(const CliArgs& cli) {
    RunConfig cfg;
    bool have_cfg = false;
    if (!cli.config_path.empty()) {
        cfg = load_run_config(cli.config_path);
        have_cfg = true;
    }
    const std::string out = resolve_out(cli, have_cfg ? &cfg : nullptr);
    if (!fs::exists(out)) throw config_error("report: no result directory at '" + out + "'");

    const fs::path report_dir = fs::path(out) / "report";
    fs::create_directories(report_dir);

    std::vector<fs::path> jsons, csvs;
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), out);
        if (rel.begin()->string() == "report") continue;
        if (entry.path().extension() == ".json") jsons.push_back(entry.path());
        if (entry.path().extension() == ".csv") csvs.push_back(entry.path());
    }
    std::sort(jsons.begin(), jsons.end());
    std::sort(csvs.begin(), csvs.end());

    int emitted = 0;

    // one row per persisted ensemble: the inputs of every variance plot
    {
        std::vector<std::vector<std::string>> rows;
        for (const fs::path& p : jsons) {
            Json j;
            try {
                j = read_json_file(p.string());
            } catch (const std::exception&) {
                continue;
            }
            if (!j.is_object() || j.value("format", "") != "ensemble-result-v1") continue;
            const int ok = j.value("ok_count", 0);
            if (ok < 2) {
                std::cerr << "warning: skipped '" << p.string() << "': empty variance series\n";
                continue;
            }
            rows.push_back({fs::relative(p, out).generic_string(), j.value("observable", ""),
                            std::to_string(j.value("order", 0)), format_g17(j.value("eps", 0.0)),
                            std::to_string(j.value("seed_count", 0)), std::to_string(ok),
                            format_g17(j.value("mean", 0.0)), format_g17(j.value("variance", 0.0)),
                            format_g17(j.value("stderr", 0.0))});
        }
        if (!rows.empty()) {
            CsvWriter w((report_dir / "variance_series.csv").string(),
                        {"source", "observable", "order", "eps", "seed_count", "ok_count", "mean",
                         "variance", "stderr"});
            for (const auto& r : rows) w.row(r);
            w.done();
            ++emitted;
        }
    }

    // log-log scaling bundles from every rate CSV with a matching fit
    for (const fs::path& p : jsons) {
        Json j;
        try {
            j = read_json_file(p.string());
        } catch (const std::exception&) {
            continue;
        }
        if (!j.is_object() || j.value("format", "") != "rate-fit-v1") continue;
        const std::string stem = p.stem().string(); // "<name>_fit"
        if (stem.size() < 5) continue;
        const fs::path series = p.parent_path() / (stem.substr(0, stem.size() - 4) + ".csv");
        if (!fs::exists(series)) continue;
        const auto rows = read_csv(series);
        if (rows.size() < 2) continue;
        CsvWriter w((report_dir / ("loglog_" + series.stem().string() + ".csv")).string(),
                    {"log10_eps", "log10_mean", "slope", "slope_stderr"});
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double eps = std::stod(rows[i][0]);
            const double mean = std::stod(rows[i][1]);
            if (!(eps > 0.0) || !(mean > 0.0)) continue;
            w.row({w.num(std::log10(eps)), w.num(std::log10(mean)),
                   w.num(j.value("slope", 0.0)), w.num(j.value("slope_stderr", 0.0))});
        }
        w.done();
        ++emitted;
    }

    // QQ data passes through untouched
    for (const fs::path& p : csvs) {
        if (p.filename().string().find("_qq") == std::string::npos) continue;
        fs::copy_file(p, report_dir / ("qq_" + p.parent_path().filename().string() + ".csv"),
                      fs::copy_options::overwrite_existing);
        ++emitted;
    }

    // residual-vs-h curves from the refinement table
    for (const fs::path& p : csvs) {
        if (p.filename() != "refinement_residuals.csv") continue;
        const auto rows = read_csv(p);
        if (rows.size() < 2) continue;
        CsvWriter w((report_dir / "residual_vs_h.csv").string(),
                    {"identity", "n", "log10_h", "log10_residual"});
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double h = std::stod(rows[i][3]);
            const double res = std::stod(rows[i][4]);
            if (!(h > 0.0) || !(res > 0.0)) continue;
            w.row({rows[i][0], rows[i][1], w.num(std::log10(h)), w.num(std::log10(res))});
        }
        w.done();
        ++emitted;
    }

    if (emitted == 0)
        throw config_error("report: no recognized artifacts under '" + out + "'");
    std::cout << "report bundles written to " << report_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for stochastic homogenization on the discrete torus"};
    app.require_subcommand(1);

    CliArgs cli;
    app.add_option("--config", cli.config_path, "run configuration file");
    app.add_option("--out", cli.out_dir, "output directory (default: the config's output.dir)");
    app.add_option("--seeds", cli.seed_spec, "seed list or range, e.g. 1..32 or 7,11,13");
    app.add_option("--threads", cli.threads, "worker threads (default: the config's value)");
    app.add_option("--tol", cli.tol, "solver tolerance override for calibration");

    CLI::App* cal = app.add_subcommand("calibrate", "average the homogenized tensors and persist them");
    CLI::App* run = app.add_subcommand("run", "execute one suite and gate its criteria");
    run->add_option("suite", cli.suite, "identities|refinement|scaling|fluctuations|normality|sensitivity")
        ->required();
    CLI::App* rep = app.add_subcommand("report", "emit tidy plot-data CSVs from a result directory");
    cal->fallthrough();
    run->fallthrough();
    rep->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cal->parsed()) return cmd_calibrate(cli);
        if (run->parsed()) return cmd_run(cli);
        return cmd_report(cli);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
