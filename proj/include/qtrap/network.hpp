#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qtrap/errors.hpp"

namespace qtrap {

enum class GeometryKind { disordered3d, chain1d };

const char* to_string(GeometryKind kind) noexcept;
GeometryKind geometry_kind_from_string(const std::string& name);

// A realized node geometry. Node indices are 0-based throughout the C++ API;
// CSV output uses 1-based indices.
struct NodeConfiguration {
    Eigen::Matrix<double, Eigen::Dynamic, 3> coords;  // row j = (x1, x2, x3) of node j
    std::vector<int> trap_nodes;                      // non-empty, sorted, 0-based
    GeometryKind geometry_kind = GeometryKind::disordered3d;
    std::uint64_t seed = 0;
    long resample_count = 0;  // rejected draws during generation (diagnostics)

    int n_nodes() const { return static_cast<int>(coords.rows()); }
    bool is_trap(int j) const;
};

// N points i.i.d. uniform on [0, n]^3; any point closer than delta_min to an
// already placed one is redrawn (whole triple), up to 100*n redraws total.
// Trap is node 0. Identical (n, seed, delta_min) give bit-identical output.
NodeConfiguration generate_configuration(int n, std::uint64_t seed, double delta_min = 1e-2);

// Collinear equally spaced nodes at ((j+1)*spacing, 0, 0); trap at the end
// node 0. Deterministic control geometry.
NodeConfiguration generate_chain(int n, double spacing = 1.0);

double pairwise_distance(const NodeConfiguration& config, int j, int k);

// Full N x N Euclidean distance matrix.
Eigen::MatrixXd distance_matrix(const NodeConfiguration& config);

// CSV dump: `node_index,x1,x2,x3,is_trap`, node_index 1-based, 17 significant
// digits.
void write_nodes_csv(std::ostream& out, const NodeConfiguration& config);

}  // namespace qtrap
