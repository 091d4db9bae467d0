#include "qtrap/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "qtrap/analysis.hpp"
#include "qtrap/config.hpp"
#include "qtrap/csv.hpp"
#include "qtrap/dynamics.hpp"
#include "qtrap/ensemble.hpp"
#include "qtrap/hamiltonian.hpp"
#include "qtrap/network.hpp"
#include "qtrap/spectra.hpp"

namespace fs = std::filesystem;

namespace qtrap {

int exit_code_for(const Error& e) {
    if (dynamic_cast<const ConvergenceFailure*>(&e) ||
        dynamic_cast<const GeometryInfeasible*>(&e) ||
        dynamic_cast<const DegenerateGeometry*>(&e) ||
        dynamic_cast<const NonPositiveDecayRate*>(&e))
        return 2;
    if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const MissingArtifacts*>(&e) ||
        dynamic_cast<const IndexOutOfRange*>(&e) || dynamic_cast<const InvalidGeometry*>(&e) ||
        dynamic_cast<const WindowTooNarrow*>(&e) || dynamic_cast<const NonPositiveValues*>(&e) ||
        dynamic_cast<const InsufficientPoints*>(&e) || dynamic_cast<const InsufficientData*>(&e))
        return 1;
    return 2;  // wrapped realization failures and anything unclassified
}

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::map<std::string, std::string> read_keyvalue_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifacts("cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

// The config echo written to each run's metadata file; also the compatibility
// fingerprint checked before resuming into an existing directory.
std::vector<std::pair<std::string, std::string>> point_fingerprint(const RunConfig& config,
                                                                   const SweepPoint& point) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("geometry", to_string(config.geometry));
    kv.emplace_back("n", std::to_string(point.n));
    kv.emplace_back("r", std::to_string(point.r));
    kv.emplace_back("gamma", fmt17(point.gamma));
    kv.emplace_back("sigma", fmt17(config.sigma));
    kv.emplace_back("delta_min", fmt17(config.delta_min));
    kv.emplace_back("seed", std::to_string(config.seed));
    kv.emplace_back("tau_min", fmt17(config.tau_min));
    kv.emplace_back("tau_max", fmt17(config.tau_max));
    kv.emplace_back("points_per_decade", std::to_string(config.points_per_decade));
    kv.emplace_back("exact_mode", config.exact_mode ? "true" : "false");
    if (config.fit_window)
        kv.emplace_back("fit_window",
                        fmt17(config.fit_window->first) + ":" + fmt17(config.fit_window->second));
    return kv;
}

void write_manifest(const std::string& path, const RunOptions& options, const RunConfig& config,
                    const std::string& started, const std::string& finished) {
    std::string body;
    body += "config=" + options.config_path + "\n";
    body += "out=" + options.out_dir + "\n";
    body += std::string("version=") + kToolVersion + "\n";
    body += "workers=" + std::to_string(options.workers) + "\n";
    body += std::string("geometry=") + to_string(config.geometry) + "\n";
    body += "seed=" + std::to_string(config.seed) + "\n";
    body += "started_utc=" + started + "\n";
    for (const auto& point : config.points)
        body += "point=" + point.tag + " n=" + std::to_string(point.n) +
                " r=" + std::to_string(point.r) + " gamma=" + fmt17(point.gamma) + "\n";
    body += finished.empty() ? "status=running\n"
                             : "status=complete\nfinished_utc=" + finished + "\n";
    write_text_file(path, body);
}

void write_survival_avg(const std::string& path, const RunConfig& config, const SweepPoint& point,
                        const EnsembleResult& result) {
    std::string body;
    body += metadata_line({{"n", std::to_string(point.n)},
                           {"r", std::to_string(point.r)},
                           {"gamma", fmt17(point.gamma)},
                           {"seed", std::to_string(config.seed)},
                           {"geometry", to_string(config.geometry)}}) +
            "\n";
    const bool exact = result.pi_exact_mean.size() > 0;
    body += "t,tau,pi_mean,pi_min,pi_max,jensen_lb";
    if (exact) body += ",pi_exact_mean";
    body += "\n";
    for (Eigen::Index i = 0; i < result.grid.size(); ++i) {
        body += fmt17(result.grid.t(i)) + "," + fmt17(result.grid.tau(i)) + "," +
                fmt17(result.pi_mean(i)) + "," + fmt17(result.pi_min(i)) + "," +
                fmt17(result.pi_max(i)) + "," + fmt17(result.jensen_lower(i));
        if (exact) body += "," + fmt17(result.pi_exact_mean(i));
        body += "\n";
    }
    write_text_file(path, body);
}

void write_gamma_avg(const std::string& path, const RunConfig& config, const SweepPoint& point,
                     const EnsembleResult& result) {
    std::string body;
    body += metadata_line({{"n", std::to_string(point.n)},
                           {"r", std::to_string(point.r)},
                           {"gamma", fmt17(point.gamma)},
                           {"seed", std::to_string(config.seed)},
                           {"mean_gamma_r", fmt17(result.mean_gamma_r)}}) +
            "\n";
    body += "l,l_over_n,gamma_mean\n";
    const auto n = static_cast<double>(point.n);
    for (Eigen::Index l = 0; l < result.avg_sorted_rates.size(); ++l)
        body += std::to_string(l + 1) + "," + fmt17(static_cast<double>(l + 1) / n) + "," +
                fmt17(result.avg_sorted_rates(l)) + "\n";
    write_text_file(path, body);
}

void write_point_metadata(const std::string& path, const RunConfig& config,
                          const SweepPoint& point, const EnsembleResult& result) {
    std::string body;
    for (const auto& [k, v] : point_fingerprint(config, point)) body += k + "=" + v + "\n";
    body += "mean_gamma_r=" + fmt17(result.mean_gamma_r) + "\n";
    body += "resample_total=" + std::to_string(result.resample_total) + "\n";
    body += "wall_seconds=" + fmt17(result.wall_seconds) + "\n";
    write_text_file(path, body);
}

void run_point(const RunConfig& config, const SweepPoint& point, const RunOptions& options,
               std::ostream& out) {
    const fs::path dir = fs::path(options.out_dir) / point.tag;
    fs::create_directories(dir);

    const fs::path meta_path = dir / "metadata";
    if (fs::exists(meta_path)) {
        const auto existing = read_keyvalue_file(meta_path.string());
        for (const auto& [k, v] : point_fingerprint(config, point)) {
            const auto it = existing.find(k);
            if (it == existing.end() || it->second != v)
                throw InvalidArgument("run directory " + dir.string() + ": existing metadata has " +
                                      k + "=" + (it == existing.end() ? "<missing>" : it->second) +
                                      " but the config says " + k + "=" + v +
                                      "; use a fresh --out to change parameters");
        }
    }

    EnsembleConfig ec;
    ec.n_nodes = point.n;
    ec.realizations = point.r;
    ec.gamma = point.gamma;
    ec.sigma = config.sigma;
    ec.delta_min = config.delta_min;
    ec.master_seed = config.seed;
    ec.geometry = config.geometry;
    ec.grid = TimeGrid::rescaled(config.tau_min, config.tau_max, config.points_per_decade,
                                 point.n, point.gamma);
    ec.exact_survival = config.exact_mode;
    if (!config.exact_mode) ec.checkpoint_dir = (dir / "checkpoints").string();
    ec.workers = options.workers;

    const EnsembleResult result = run_ensemble(ec);

    write_survival_avg((dir / "survival_avg.csv").string(), config, point, result);
    write_gamma_avg((dir / "gamma_avg.csv").string(), config, point, result);
    write_point_metadata(meta_path.string(), config, point, result);

    out << point.tag << ": R=" << point.r;
    if (result.loaded_checkpoints > 0)
        out << " (" << result.loaded_checkpoints << " from checkpoints)";
    out << ", mean trap strength " << result.mean_gamma_r << ", " << result.wall_seconds
        << " s\n";
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.config_path.empty()) throw InvalidArgument("run: --config is required");
        if (options.out_dir.empty()) throw InvalidArgument("run: --out is required");
        if (options.workers < 1) throw InvalidArgument("run: --workers must be >= 1");
        RunConfig config = parse_config_file(options.config_path);
        if (options.exact) config.exact_mode = true;

        fs::create_directories(options.out_dir);
        const std::string manifest = (fs::path(options.out_dir) / "manifest").string();
        const std::string started = utc_timestamp();
        write_manifest(manifest, options, config, started, "");
        for (const auto& point : config.points) run_point(config, point, options, out);
        write_manifest(manifest, options, config, started, utc_timestamp());
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

namespace {

struct RunArtifacts {
    std::string dir;
    int n = 0;
    int r = 0;
    double gamma = 1.0;
    std::pair<double, double> tau_window{0, 0};  // resolved fit window
    bool window_auto = false;
    SurvivalCurve mean_curve;
    Eigen::VectorXd avg_rates;
};

RunArtifacts load_run_dir(const std::string& dir,
                          const std::optional<std::pair<double, double>>& override_window) {
    RunArtifacts art;
    art.dir = dir;
    const auto meta = read_keyvalue_file((fs::path(dir) / "metadata").string());
    const auto need = [&](const std::string& key) {
        const auto it = meta.find(key);
        if (it == meta.end())
            throw MissingArtifacts(dir + "/metadata: missing key '" + key + "'");
        return it->second;
    };
    art.n = std::stoi(need("n"));
    art.r = std::stoi(need("r"));
    art.gamma = std::stod(need("gamma"));

    const CsvTable survival = read_csv_file((fs::path(dir) / "survival_avg.csv").string());
    const auto t = survival.values("t");
    const auto pi = survival.values("pi_mean");
    TimeGrid grid;
    grid.t = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
    grid.tau = grid.t * (art.gamma / (static_cast<double>(art.n) * art.n * art.n));
    art.mean_curve.grid = std::move(grid);
    art.mean_curve.values =
        Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
    art.mean_curve.kind = CurveKind::spectral_form;
    art.mean_curve.provenance = {art.n, art.gamma, "ensemble", art.r};

    const CsvTable rates = read_csv_file((fs::path(dir) / "gamma_avg.csv").string());
    const auto g = rates.values("gamma_mean");
    art.avg_rates = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    if (art.avg_rates.size() != art.n)
        throw MissingArtifacts(dir + "/gamma_avg.csv: expected " + std::to_string(art.n) +
                               " rates, found " + std::to_string(art.avg_rates.size()));

    const double t_scale = static_cast<double>(art.n) * art.n * art.n / art.gamma;
    if (override_window) {
        art.tau_window = *override_window;
    } else if (const auto it = meta.find("fit_window"); it != meta.end()) {
        art.tau_window = parse_window(it->second);
    } else {
        const auto [t_lo, t_hi] = auto_fit_window(art.mean_curve);
        art.tau_window = {t_lo / t_scale, t_hi / t_scale};
        art.window_auto = true;
    }
    return art;
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.run_dirs.empty()) throw InvalidArgument("analyze: no run directories given");
        if (options.out_dir.empty()) throw InvalidArgument("analyze: --out is required");

        struct FitRow {
            int n;
            double gamma;
            PowerLawFit fit;
            std::pair<double, double> tau_window;
        };
        std::vector<FitRow> rows;
        std::map<double, std::vector<ScalingPoint>> by_gamma;

        for (const auto& dir : options.run_dirs) {
            const RunArtifacts art = load_run_dir(dir, options.window);
            const double t_scale = static_cast<double>(art.n) * art.n * art.n / art.gamma;
            const PowerLawFit fit = fit_power_law(art.mean_curve, art.tau_window.first * t_scale,
                                                  art.tau_window.second * t_scale);
            rows.push_back({art.n, art.gamma, fit, art.tau_window});
            by_gamma[art.gamma].push_back({static_cast<double>(art.n), fit.eta});
            out << art.dir << ": eta=" << fit.eta << " +- " << fit.eta_err << " over tau=["
                << art.tau_window.first << ", " << art.tau_window.second << "]"
                << (art.window_auto ? " (auto window)" : "") << ", residual " << fit.residual
                << "\n";

            const DensityEstimate density = estimate_rate_density(art.avg_rates);
            const double laplace_dev =
                laplace_consistency(density, art.mean_curve, art.tau_window.first * t_scale,
                                    art.tau_window.second * t_scale);
            std::string body;
            body += metadata_line({{"n", std::to_string(art.n)},
                                   {"gamma", fmt17(art.gamma)},
                                   {"bins", std::to_string(density.bin_centers.size())},
                                   {"laplace_max_rel_dev", fmt17(laplace_dev)},
                                   {"window_tau", fmt17(art.tau_window.first) + ":" +
                                                      fmt17(art.tau_window.second)}}) +
                    "\n";
            body += "gamma_bin,rho\n";
            for (Eigen::Index b = 0; b < density.bin_centers.size(); ++b)
                body += fmt17(density.bin_centers(b)) + "," + fmt17(density.densities(b)) + "\n";
            write_text_file((fs::path(dir) / "density.csv").string(), body);
            out << art.dir << ": density over " << density.bin_centers.size()
                << " bins, Laplace max rel dev " << laplace_dev << "\n";
        }

        fs::create_directories(options.out_dir);
        std::sort(rows.begin(), rows.end(), [](const FitRow& a, const FitRow& b) {
            if (a.gamma != b.gamma) return a.gamma < b.gamma;
            return a.n < b.n;
        });
        std::string fits_body = "n,gamma,eta,eta_err,window_lo,window_hi,residual\n";
        for (const auto& row : rows)
            fits_body += std::to_string(row.n) + "," + fmt17(row.gamma) + "," + fmt17(row.fit.eta) +
                         "," + fmt17(row.fit.eta_err) + "," + fmt17(row.tau_window.first) + "," +
                         fmt17(row.tau_window.second) + "," + fmt17(row.fit.residual) + "\n";
        write_text_file((fs::path(options.out_dir) / "fits.csv").string(), fits_body);

        std::string scaling_body = "gamma,eta0,mu\n";
        bool any_scaling = false;
        for (auto& [gamma, points] : by_gamma) {
            std::sort(points.begin(), points.end(),
                      [](const ScalingPoint& a, const ScalingPoint& b) { return a.n < b.n; });
            const bool distinct =
                points.size() >= 2 && points.front().n != points.back().n;
            if (!distinct) {
                out << "scaling skipped for gamma=" << gamma
                    << ": need >= 2 system sizes, have " << points.size() << "\n";
                continue;
            }
            const ScalingReport report = size_scaling(points, gamma);
            scaling_body += fmt17(gamma) + "," + fmt17(report.eta0) + "," + fmt17(report.mu) + "\n";
            out << "scaling gamma=" << gamma << ": eta0=" << report.eta0 << ", mu=" << report.mu
                << " from " << points.size() << " sizes\n";
            any_scaling = true;
        }
        if (any_scaling)
            write_text_file((fs::path(options.out_dir) / "scaling.csv").string(), scaling_body);
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_chain_bench(const ChainBenchOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.n < 10) throw InvalidArgument("chain-bench: need n >= 10");
        if (!(options.gamma > 0)) throw InvalidArgument("chain-bench: gamma must be > 0");
        const bool small_n = options.n < 50;

        const NodeConfiguration nodes = generate_chain(options.n);
        CouplingMatrix<double> h0 = build_h0_chain<double>(nodes);
        const TrapSpec<double> trap = make_trap_spec(h0, options.gamma, nodes.trap_nodes);
        const TrappedHamiltonian<double> h = build_full_hamiltonian(std::move(h0), trap);
        const auto [eps, rates] = trapped_eigenvalues(h);

        const TimeGrid grid = TimeGrid::rescaled(1e-4, 1e2, 200, options.n, options.gamma);
        const SurvivalCurve curve = mean_survival_spectral(rates, grid);

        // Decay exponent over the early plateau-free stretch of rescaled time.
        const double t_scale =
            static_cast<double>(options.n) * options.n * options.n / options.gamma;
        const PowerLawFit fit = fit_power_law(curve, 1e-4 * t_scale, 1e-2 * t_scale);
        const double eta_tol = small_n ? 0.2 : 0.1;

        // Sorted rates against index: middle third in log index space.
        const double ln = std::log(static_cast<double>(options.n));
        const auto l_lo = static_cast<Eigen::Index>(std::ceil(std::exp(ln / 3.0)));
        const auto l_hi = static_cast<Eigen::Index>(std::floor(std::exp(2.0 * ln / 3.0)));
        std::vector<double> lx, ly;
        for (Eigen::Index l = l_lo; l <= l_hi && l <= rates.size(); ++l)
            if (rates(l - 1) > 0) {
                lx.push_back(std::log(static_cast<double>(l)));
                ly.push_back(std::log(rates(l - 1)));
            }
        if (lx.size() < 3)
            throw InsufficientData("chain-bench: too few rates in the middle-index third");
        const double rate_slope =
            detail::least_squares_line(
                Eigen::Map<const Eigen::VectorXd>(lx.data(), lx.size()),
                Eigen::Map<const Eigen::VectorXd>(ly.data(), ly.size()))
                .slope;
        const double rate_tol = small_n ? 0.4 : 0.2;

        // Rate density slope over the interior quantile range.
        const DensityEstimate density = estimate_rate_density(rates);
        const double q_lo = rate_quantile(rates, 0.02);
        const double q_hi = rate_quantile(rates, 0.98);
        const double rho_slope = density_log_slope(density, q_lo, q_hi);
        const double rho_tol = small_n ? 0.3 : 0.15;

        const auto report = [&](const std::string& name, double value, double target,
                                double tol) {
            const bool pass = std::abs(value - target) <= tol;
            out << name << ": " << value << " (target " << target << " +- " << tol << ") "
                << (pass ? "PASS" : "FAIL") << "\n";
            return pass;
        };
        out << "chain benchmark: n=" << options.n << " gamma=" << options.gamma
            << (small_n ? " [small-n: tolerances widened]" : "") << "\n";
        bool all = true;
        all &= report("survival exponent eta", fit.eta, 0.5, eta_tol);
        all &= report("rate-vs-index slope", rate_slope, 2.0, rate_tol);
        all &= report("density slope", rho_slope, -0.5, rho_tol);
        out << (all ? "chain benchmark: all PASS\n" : "chain benchmark: FAIL\n");

        if (!options.out_dir.empty()) {
            fs::create_directories(options.out_dir);
            std::string surv = metadata_line({{"n", std::to_string(options.n)},
                                              {"gamma", fmt17(options.gamma)},
                                              {"geometry", "chain1d"}}) +
                               "\nt,tau,pi\n";
            for (Eigen::Index i = 0; i < grid.size(); ++i)
                surv += fmt17(grid.t(i)) + "," + fmt17(grid.tau(i)) + "," +
                        fmt17(curve.values(i)) + "\n";
            write_text_file((fs::path(options.out_dir) / "survival.csv").string(), surv);

            std::string spec = metadata_line({{"n", std::to_string(options.n)},
                                              {"gamma", fmt17(options.gamma)},
                                              {"gamma_r", fmt17(trap.realization_strength)}}) +
                               "\nl,epsilon,gamma\n";
            for (Eigen::Index l = 0; l < rates.size(); ++l)
                spec += std::to_string(l + 1) + "," + fmt17(eps(l)) + "," + fmt17(rates(l)) + "\n";
            write_text_file((fs::path(options.out_dir) / "spectrum.csv").string(), spec);
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace qtrap
