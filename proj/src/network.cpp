#include "qtrap/network.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "qtrap/csv.hpp"
#include "qtrap/rng.hpp"

namespace qtrap {

const char* to_string(GeometryKind kind) noexcept {
    return kind == GeometryKind::disordered3d ? "disordered3d" : "chain1d";
}

GeometryKind geometry_kind_from_string(const std::string& name) {
    if (name == "disordered3d") return GeometryKind::disordered3d;
    if (name == "chain1d") return GeometryKind::chain1d;
    throw InvalidArgument("unknown geometry kind: '" + name + "'");
}

bool NodeConfiguration::is_trap(int j) const {
    return std::binary_search(trap_nodes.begin(), trap_nodes.end(), j);
}

NodeConfiguration generate_configuration(int n, std::uint64_t seed, double delta_min) {
    if (n < 2) throw InvalidArgument("generate_configuration: n must be >= 2, got " + std::to_string(n));
    if (delta_min < 0) throw InvalidArgument("generate_configuration: delta_min must be >= 0");

    NodeConfiguration config;
    config.coords.resize(n, 3);
    config.trap_nodes = {0};
    config.geometry_kind = GeometryKind::disordered3d;
    config.seed = seed;

    RandomEngine engine(seed);
    const double box = static_cast<double>(n);
    const double d2min = delta_min * delta_min;
    const long budget = 100L * n;

    int placed = 0;
    while (placed < n) {
        Eigen::RowVector3d p;
        p(0) = uniform01(engine) * box;
        p(1) = uniform01(engine) * box;
        p(2) = uniform01(engine) * box;
        if (placed > 0 && d2min > 0) {
            const double closest =
                (config.coords.topRows(placed).rowwise() - p).rowwise().squaredNorm().minCoeff();
            if (closest < d2min) {
                if (++config.resample_count > budget) {
                    throw GeometryInfeasible(
                        "generate_configuration: exceeded " + std::to_string(budget) +
                        " redraws placing " + std::to_string(n) + " nodes with delta_min=" +
                        std::to_string(delta_min));
                }
                continue;
            }
        }
        config.coords.row(placed++) = p;
    }
    return config;
}

NodeConfiguration generate_chain(int n, double spacing) {
    if (n < 2) throw InvalidArgument("generate_chain: n must be >= 2, got " + std::to_string(n));
    if (!(spacing > 0)) throw InvalidArgument("generate_chain: spacing must be > 0");

    NodeConfiguration config;
    config.coords.setZero(n, 3);
    for (int j = 0; j < n; ++j) config.coords(j, 0) = (j + 1) * spacing;
    config.trap_nodes = {0};
    config.geometry_kind = GeometryKind::chain1d;
    return config;
}

static void check_index(const NodeConfiguration& config, int j, const char* where) {
    if (j < 0 || j >= config.n_nodes())
        throw IndexOutOfRange(std::string(where) + ": node index " + std::to_string(j) +
                              " outside [0, " + std::to_string(config.n_nodes()) + ")");
}

double pairwise_distance(const NodeConfiguration& config, int j, int k) {
    check_index(config, j, "pairwise_distance");
    check_index(config, k, "pairwise_distance");
    return (config.coords.row(j) - config.coords.row(k)).norm();
}

Eigen::MatrixXd distance_matrix(const NodeConfiguration& config) {
    const int n = config.n_nodes();
    Eigen::MatrixXd d(n, n);
    for (int j = 0; j < n; ++j) {
        d(j, j) = 0.0;
        for (int k = j + 1; k < n; ++k) {
            d(j, k) = d(k, j) = (config.coords.row(j) - config.coords.row(k)).norm();
        }
    }
    return d;
}

void write_nodes_csv(std::ostream& out, const NodeConfiguration& config) {
    out << "node_index,x1,x2,x3,is_trap\n";
    for (int j = 0; j < config.n_nodes(); ++j) {
        out << (j + 1) << ',' << fmt17(config.coords(j, 0)) << ',' << fmt17(config.coords(j, 1))
            << ',' << fmt17(config.coords(j, 2)) << ',' << (config.is_trap(j) ? 1 : 0) << '\n';
    }
}

}  // namespace qtrap
