#include "qtrap/ensemble.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>

#include "qtrap/csv.hpp"
#include "qtrap/hamiltonian.hpp"
#include "qtrap/rng.hpp"
#include "qtrap/spectra.hpp"

namespace qtrap {

namespace {

Eigen::VectorXd spectral_survival_from_rates(const Eigen::VectorXd& rates, const TimeGrid& grid) {
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        out(i) = (rates.array() * (-2.0 * grid.t(i))).exp().mean();
    return out;
}

std::string checkpoint_path(const std::string& dir, int index) {
    return dir + "/real_" + std::to_string(index) + ".csv";
}

}  // namespace

RealizationRecord run_realization(const EnsembleConfig& config, int index) {
    RealizationRecord record;
    record.index = index;
    record.seed = realization_seed(config.master_seed, index);
    try {
        NodeConfiguration nodes =
            config.geometry == GeometryKind::chain1d
                ? generate_chain(config.n_nodes)
                : generate_configuration(config.n_nodes, record.seed, config.delta_min);
        record.resamples = nodes.resample_count;

        CouplingMatrix<double> h0 = config.geometry == GeometryKind::chain1d
                                        ? build_h0_chain<double>(nodes)
                                        : build_h0_long_range<double>(nodes, config.sigma);
        const TrapSpec<double> trap = make_trap_spec(h0, config.gamma, nodes.trap_nodes);
        record.gamma_r = trap.realization_strength;
        const TrappedHamiltonian<double> h = build_full_hamiltonian(std::move(h0), trap);

        if (config.exact_survival) {
            const TrappedSpectrum<double> spec = decompose_trapped(h);
            record.sorted_rates = spec.decay_rates;
            record.survival_exact =
                mean_survival_exact(spec, nodes.trap_nodes, config.grid).values;
        } else {
            record.sorted_rates = trapped_eigenvalues(h).second;
        }
        record.survival = spectral_survival_from_rates(record.sorted_rates, config.grid);
    } catch (const Error& e) {
        throw Error("realization " + std::to_string(index) + ": " + e.what());
    }
    return record;
}

void write_realization_checkpoint(const std::string& path, const RealizationRecord& record) {
    std::string body;
    body += metadata_line({{"gamma_r", fmt17(record.gamma_r)},
                           {"seed", std::to_string(record.seed)},
                           {"resamples", std::to_string(record.resamples)}}) +
            "\n";
    body += "l,gamma\n";
    for (Eigen::Index l = 0; l < record.sorted_rates.size(); ++l)
        body += std::to_string(l + 1) + "," + fmt17(record.sorted_rates(l)) + "\n";
    const std::string tmp = path + ".tmp";
    write_text_file(tmp, body);
    std::filesystem::rename(tmp, path);
}

std::optional<RealizationRecord> load_realization_checkpoint(const std::string& path,
                                                             const EnsembleConfig& config,
                                                             int index) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    const CsvTable table = read_csv_file(path);
    const auto meta = parse_metadata(table.comments);
    RealizationRecord record;
    record.index = index;
    record.seed = realization_seed(config.master_seed, index);
    const auto seed_it = meta.find("seed");
    if (seed_it == meta.end() || std::stoull(seed_it->second) != record.seed)
        throw InvalidArgument("checkpoint " + path + ": seed does not match master seed " +
                              std::to_string(config.master_seed) + " at index " +
                              std::to_string(index));
    const auto gr_it = meta.find("gamma_r");
    if (gr_it == meta.end())
        throw InvalidArgument("checkpoint " + path + ": missing gamma_r");
    record.gamma_r = std::stod(gr_it->second);
    if (const auto rs_it = meta.find("resamples"); rs_it != meta.end())
        record.resamples = std::stol(rs_it->second);
    const std::vector<double> gamma_col = table.values("gamma");
    record.sorted_rates =
        Eigen::Map<const Eigen::VectorXd>(gamma_col.data(), static_cast<Eigen::Index>(gamma_col.size()));
    if (record.sorted_rates.size() != config.n_nodes)
        throw InvalidArgument("checkpoint " + path + ": expected " +
                              std::to_string(config.n_nodes) + " rates, found " +
                              std::to_string(record.sorted_rates.size()));
    for (Eigen::Index l = 1; l < record.sorted_rates.size(); ++l)
        if (record.sorted_rates(l) < record.sorted_rates(l - 1))
            throw InvalidArgument("checkpoint " + path + ": rates not sorted ascending");
    record.survival = spectral_survival_from_rates(record.sorted_rates, config.grid);
    record.loaded_from_checkpoint = true;
    return record;
}

EnsembleResult run_ensemble(const EnsembleConfig& config) {
    if (config.n_nodes < 2)
        throw InvalidArgument("run_ensemble: need at least 2 nodes, got " +
                              std::to_string(config.n_nodes));
    if (config.realizations < 1)
        throw InvalidArgument("run_ensemble: need at least 1 realization");
    if (config.grid.size() == 0) throw InvalidArgument("run_ensemble: empty time grid");
    if (config.exact_survival && !config.checkpoint_dir.empty())
        throw InvalidArgument("run_ensemble: exact mode does not support checkpoints");

    const auto t0 = std::chrono::steady_clock::now();
    const int r_total = config.realizations;
    std::vector<RealizationRecord> records(r_total);
    std::vector<char> done(r_total, 0);

    if (!config.checkpoint_dir.empty()) {
        std::filesystem::create_directories(config.checkpoint_dir);
        for (int r = 1; r <= r_total; ++r) {
            auto loaded =
                load_realization_checkpoint(checkpoint_path(config.checkpoint_dir, r), config, r);
            if (loaded) {
                records[r - 1] = std::move(*loaded);
                done[r - 1] = 1;
            }
        }
    }

    std::atomic<int> next{0};
    std::mutex failure_mutex;
    int failed_index = r_total + 1;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const int slot = next.fetch_add(1);
            if (slot >= r_total) return;
            if (done[slot]) continue;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure && failed_index < slot + 1) return;
            }
            try {
                records[slot] = run_realization(config, slot + 1);
                if (!config.checkpoint_dir.empty())
                    write_realization_checkpoint(checkpoint_path(config.checkpoint_dir, slot + 1),
                                                 records[slot]);
                done[slot] = 1;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (slot + 1 < failed_index) {
                    failed_index = slot + 1;
                    failure = std::current_exception();
                }
                return;
            }
        }
    };

    const int n_workers = std::max(1, std::min(config.workers, r_total));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    EnsembleResult result;
    result.config = config;
    result.grid = config.grid;
    const Eigen::Index npts = config.grid.size();
    result.pi_mean.setZero(npts);
    result.pi_min.setConstant(npts, std::numeric_limits<double>::infinity());
    result.pi_max.setConstant(npts, -std::numeric_limits<double>::infinity());
    result.avg_sorted_rates.setZero(config.n_nodes);
    if (config.exact_survival) result.pi_exact_mean.setZero(npts);

    for (int r = 0; r < r_total; ++r) {
        const RealizationRecord& rec = records[r];
        result.pi_mean += rec.survival;
        result.pi_min = result.pi_min.cwiseMin(rec.survival);
        result.pi_max = result.pi_max.cwiseMax(rec.survival);
        result.avg_sorted_rates += rec.sorted_rates;
        result.mean_gamma_r += rec.gamma_r;
        result.resample_total += rec.resamples;
        if (rec.loaded_from_checkpoint) ++result.loaded_checkpoints;
        if (config.exact_survival) result.pi_exact_mean += rec.survival_exact;
    }
    const double inv_r = 1.0 / static_cast<double>(r_total);
    result.pi_mean *= inv_r;
    result.avg_sorted_rates *= inv_r;
    result.mean_gamma_r *= inv_r;
    if (config.exact_survival) result.pi_exact_mean *= inv_r;
    result.jensen_lower = spectral_survival_from_rates(result.avg_sorted_rates, config.grid);
    if (config.keep_per_realization) result.realizations = std::move(records);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace qtrap
