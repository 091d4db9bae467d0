#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qtrap/errors.hpp"
#include "qtrap/network.hpp"

namespace qtrap {

// Trap-free coupling matrix H0. Laplacian structure: strictly negative
// off-diagonals (long-range kind), diagonal equal to minus the row's
// off-diagonal sum, so every row sums to zero and (1,...,1) is a zero mode.
template <class Scalar = double>
struct CouplingMatrix {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> entries;
    GeometryKind geometry_kind = GeometryKind::disordered3d;
    Scalar interaction_exponent = Scalar(3);

    Eigen::Index dim() const { return entries.rows(); }

    // Infinity norm; cheap upper bound for the spectral radius, used to scale
    // roundoff floors.
    Scalar scale() const {
        return entries.cwiseAbs().rowwise().sum().maxCoeff();
    }
};

template <class Scalar = double>
struct TrapSpec {
    std::vector<int> trap_nodes;   // 0-based, sorted
    Scalar base_strength{};        // Gamma (dimensionless multiplier)
    Scalar realization_strength{}; // Gamma_r (energy units)
};

// H = H0 - i*Gamma_r * sum_{m in traps} |m><m|. Complex symmetric by
// construction; imaginary part negative semidefinite.
template <class Scalar = double>
struct TrappedHamiltonian {
    CouplingMatrix<Scalar> real_part;
    Eigen::Vector<Scalar, Eigen::Dynamic> imag_diagonal;  // -Gamma_r on traps, 0 elsewhere

    Eigen::Index dim() const { return real_part.dim(); }

    Scalar trap_strength() const { return -imag_diagonal.minCoeff(); }

    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic> full() const {
        using C = std::complex<Scalar>;
        Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic> h =
            real_part.entries.template cast<C>();
        for (Eigen::Index j = 0; j < dim(); ++j) h(j, j) += C(0, imag_diagonal(j));
        return h;
    }
};

// Off-diagonal -Delta_{jk}^(-sigma), diagonal sum_{k != j} Delta_{jk}^(-sigma).
template <class Scalar = double>
CouplingMatrix<Scalar> build_h0_long_range(const NodeConfiguration& config, Scalar sigma = Scalar(3)) {
    const Eigen::Index n = config.n_nodes();
    CouplingMatrix<Scalar> h0;
    h0.geometry_kind = config.geometry_kind;
    h0.interaction_exponent = sigma;
    h0.entries.setZero(n, n);
    const Eigen::MatrixXd dist = distance_matrix(config);
    for (Eigen::Index j = 0; j < n; ++j) {
        Scalar diag(0);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == j) continue;
            const double d = dist(j, k);
            if (d <= 0.0)
                throw DegenerateGeometry("build_h0_long_range: nodes " + std::to_string(j) +
                                         " and " + std::to_string(k) + " coincide");
            const Scalar w = std::pow(Scalar(d), -sigma);
            h0.entries(j, k) = -w;
            diag += w;
        }
        h0.entries(j, j) = diag;
    }
    return h0;
}

// Nearest-neighbor tridiagonal Laplacian control: off-diagonal -1 between
// chain neighbors, diagonal = neighbor count (1 at ends, 2 inside).
template <class Scalar = double>
CouplingMatrix<Scalar> build_h0_chain(const NodeConfiguration& config) {
    if (config.geometry_kind != GeometryKind::chain1d)
        throw InvalidGeometry("build_h0_chain: requires chain1d geometry");
    const Eigen::Index n = config.n_nodes();
    CouplingMatrix<Scalar> h0;
    h0.geometry_kind = GeometryKind::chain1d;
    h0.interaction_exponent = Scalar(0);
    h0.entries.setZero(n, n);
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
        h0.entries(j, j + 1) = Scalar(-1);
        h0.entries(j + 1, j) = Scalar(-1);
    }
    for (Eigen::Index j = 0; j < n; ++j)
        h0.entries(j, j) = (j == 0 || j == n - 1) ? Scalar(1) : Scalar(2);
    return h0;
}

// Gamma_r = Gamma * <trap|H0|trap>.
template <class Scalar>
Scalar realization_trap_strength(const CouplingMatrix<Scalar>& h0, Scalar gamma, int trap) {
    if (trap < 0 || trap >= h0.dim())
        throw IndexOutOfRange("realization_trap_strength: trap index " + std::to_string(trap));
    return gamma * h0.entries(trap, trap);
}

// Gamma_r is set from the first trap node's diagonal; with multiple traps the
// same strength applies to every trap node.
template <class Scalar>
TrapSpec<Scalar> make_trap_spec(const CouplingMatrix<Scalar>& h0, Scalar gamma,
                                std::vector<int> trap_nodes) {
    if (trap_nodes.empty()) throw InvalidArgument("make_trap_spec: empty trap set");
    if (static_cast<Eigen::Index>(trap_nodes.size()) >= h0.dim())
        throw InvalidArgument("make_trap_spec: trap set must be a proper subset of the nodes");
    TrapSpec<Scalar> spec;
    spec.trap_nodes = std::move(trap_nodes);
    spec.base_strength = gamma;
    spec.realization_strength = realization_trap_strength(h0, gamma, spec.trap_nodes.front());
    return spec;
}

template <class Scalar>
TrappedHamiltonian<Scalar> build_full_hamiltonian(CouplingMatrix<Scalar> h0,
                                                  const TrapSpec<Scalar>& trap) {
    TrappedHamiltonian<Scalar> h;
    h.imag_diagonal.setZero(h0.dim());
    for (int m : trap.trap_nodes) {
        if (m < 0 || m >= h0.dim())
            throw IndexOutOfRange("build_full_hamiltonian: trap index " + std::to_string(m));
        h.imag_diagonal(m) = -trap.realization_strength;
    }
    h.real_part = std::move(h0);
    return h;
}

}  // namespace qtrap
