#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "qtrap/errors.hpp"
#include "qtrap/hamiltonian.hpp"

namespace qtrap {

template <class Scalar = double>
struct RealSpectrum {
    Eigen::Vector<Scalar, Eigen::Dynamic> eigenvalues;  // ascending
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // orthonormal columns
};

enum class SortOrder { by_gamma_ascending, by_epsilon_ascending };

namespace detail {
// Live-instance accounting for the ensemble memory contract (at most
// workers+1 decompositions alive at once). Negligible cost; kept in release
// builds so the contract stays testable.
struct SpectrumCounter {
    static inline std::atomic<long> live{0};
    static inline std::atomic<long> peak{0};

    SpectrumCounter() { bump(); }
    SpectrumCounter(const SpectrumCounter&) { bump(); }
    SpectrumCounter(SpectrumCounter&&) noexcept { bump(); }
    SpectrumCounter& operator=(const SpectrumCounter&) = default;
    SpectrumCounter& operator=(SpectrumCounter&&) noexcept = default;
    ~SpectrumCounter() { live.fetch_sub(1, std::memory_order_relaxed); }

    static void bump() {
        long now = live.fetch_add(1, std::memory_order_relaxed) + 1;
        long prev = peak.load(std::memory_order_relaxed);
        while (prev < now && !peak.compare_exchange_weak(prev, now)) {
        }
    }
    static void reset_peak() { peak.store(live.load()); }
};
}  // namespace detail

// Spectrum of the complex symmetric H = H0 - i*Gamma. Right eigenvectors are
// stored with the complex-symmetric normalization v^T v = 1 (plain transpose,
// no conjugation), so the left eigenvector of mode l is the transpose of the
// right one and biorthonormality holds without extra storage.
template <class Scalar = double>
struct TrappedSpectrum : private detail::SpectrumCounter {
    using Complex = std::complex<Scalar>;

    Eigen::Vector<Scalar, Eigen::Dynamic> real_parts;   // epsilon_l
    Eigen::Vector<Scalar, Eigen::Dynamic> decay_rates;  // gamma_l >= 0
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> right_vectors;  // columns
    SortOrder sort_order = SortOrder::by_gamma_ascending;

    Eigen::Index dim() const { return real_parts.size(); }

    Eigen::Vector<Complex, Eigen::Dynamic> eigenvalues() const {
        return real_parts.template cast<Complex>() -
               Complex(0, 1) * decay_rates.template cast<Complex>();
    }

    static long live_count() { return detail::SpectrumCounter::live.load(); }
    static long peak_count() { return detail::SpectrumCounter::peak.load(); }
    static void reset_peak_count() { detail::SpectrumCounter::reset_peak(); }
};

template <class Scalar>
RealSpectrum<Scalar> decompose_hermitian(const CouplingMatrix<Scalar>& h0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver(
        h0.entries);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("decompose_hermitian: eigensolver did not converge (n=" +
                                 std::to_string(h0.dim()) + ")");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {

// Negative decay rates beyond this floor signal solver failure; above it they
// are roundoff and get clamped to zero. The Gamma_r term alone is too small a
// yardstick at weak trapping: QR noise scales with the matrix norm, not with
// Gamma_r, so an eps-scaled term is included.
template <class Scalar>
Scalar negative_rate_floor(Scalar gamma_r, Scalar h0_scale) {
    return Scalar(1e-12) * gamma_r +
           Scalar(100) * std::numeric_limits<Scalar>::epsilon() * h0_scale;
}

template <class Scalar>
Scalar clamp_rate(Scalar g, Scalar floor, Eigen::Index l) {
    if (g < -floor)
        throw NonPositiveDecayRate("decay rate " + std::to_string(static_cast<double>(g)) +
                                   " at mode " + std::to_string(l) +
                                   " is negative beyond the roundoff floor " +
                                   std::to_string(static_cast<double>(floor)));
    return g < Scalar(0) ? Scalar(0) : g;
}

template <class Scalar>
std::vector<Eigen::Index> sort_permutation(const Eigen::Vector<Scalar, Eigen::Dynamic>& eps,
                                           const Eigen::Vector<Scalar, Eigen::Dynamic>& gam,
                                           SortOrder order) {
    std::vector<Eigen::Index> perm(eps.size());
    std::iota(perm.begin(), perm.end(), Eigen::Index(0));
    if (order == SortOrder::by_gamma_ascending) {
        std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (gam(a) != gam(b)) return gam(a) < gam(b);
            return eps(a) < eps(b);
        });
    } else {
        std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (eps(a) != eps(b)) return eps(a) < eps(b);
            return gam(a) < gam(b);
        });
    }
    return perm;
}

}  // namespace detail

// Eigenvalues only (no vectors), via complex Schur reduction: the fast path
// for ensemble rate spectra. Returns (epsilon_l, gamma_l) sorted per `order`.
template <class Scalar>
std::pair<Eigen::Vector<Scalar, Eigen::Dynamic>, Eigen::Vector<Scalar, Eigen::Dynamic>>
trapped_eigenvalues(const TrappedHamiltonian<Scalar>& h,
                    SortOrder order = SortOrder::by_gamma_ascending) {
    using Complex = std::complex<Scalar>;
    Eigen::ComplexSchur<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>> schur(h.full(),
                                                                                      false);
    if (schur.info() != Eigen::Success)
        throw ConvergenceFailure("trapped_eigenvalues: Schur reduction did not converge (n=" +
                                 std::to_string(h.dim()) + ")");
    const auto diag = schur.matrixT().diagonal();
    Eigen::Vector<Scalar, Eigen::Dynamic> eps = diag.real();
    Eigen::Vector<Scalar, Eigen::Dynamic> gam = -diag.imag();
    const Scalar floor = detail::negative_rate_floor(h.trap_strength(), h.real_part.scale());
    for (Eigen::Index l = 0; l < gam.size(); ++l) gam(l) = detail::clamp_rate(gam(l), floor, l);
    const auto perm = detail::sort_permutation(eps, gam, order);
    Eigen::Vector<Scalar, Eigen::Dynamic> eps_s(eps.size()), gam_s(gam.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) {
        eps_s(i) = eps(perm[i]);
        gam_s(i) = gam(perm[i]);
    }
    return {std::move(eps_s), std::move(gam_s)};
}

template <class Scalar>
TrappedSpectrum<Scalar> decompose_trapped(const TrappedHamiltonian<Scalar>& h,
                                          SortOrder order = SortOrder::by_gamma_ascending) {
    using Complex = std::complex<Scalar>;
    using MatrixC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::ComplexEigenSolver<MatrixC> solver(h.full(), true);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("decompose_trapped: eigensolver did not converge (n=" +
                                 std::to_string(h.dim()) + ")");

    const Eigen::Index n = h.dim();
    TrappedSpectrum<Scalar> spec;
    spec.sort_order = order;
    spec.real_parts = solver.eigenvalues().real();
    spec.decay_rates = -solver.eigenvalues().imag();
    spec.right_vectors = solver.eigenvectors();

    // v^T v = 1 normalization; a vanishing v^T v means a (numerically)
    // self-orthogonal vector, i.e. the complex-symmetric eigenbasis is
    // defective and the spectral expansion is unusable.
    for (Eigen::Index l = 0; l < n; ++l) {
        const Complex q = spec.right_vectors.col(l).transpose() * spec.right_vectors.col(l);
        if (std::abs(q) < Scalar(1e-12))
            throw ConvergenceFailure("decompose_trapped: self-orthogonal eigenvector at mode " +
                                     std::to_string(l) + " (|v^T v|=" + std::to_string(std::abs(q)) +
                                     "); biorthonormal basis unavailable");
        spec.right_vectors.col(l) /= std::sqrt(q);
    }

    const Scalar floor = detail::negative_rate_floor(h.trap_strength(), h.real_part.scale());
    for (Eigen::Index l = 0; l < n; ++l)
        spec.decay_rates(l) = detail::clamp_rate(spec.decay_rates(l), floor, l);

    const auto perm = detail::sort_permutation(spec.real_parts, spec.decay_rates, order);
    Eigen::Vector<Scalar, Eigen::Dynamic> eps_s(n), gam_s(n);
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> vec_s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        eps_s(i) = spec.real_parts(perm[i]);
        gam_s(i) = spec.decay_rates(perm[i]);
        vec_s.col(i) = spec.right_vectors.col(perm[i]);
    }
    spec.real_parts = std::move(eps_s);
    spec.decay_rates = std::move(gam_s);
    spec.right_vectors = std::move(vec_s);
    return spec;
}

// First-order decay rates for a single trap: gamma_l = Gamma_r * <trap|Psi_l0>^2,
// in spec0's eigenvalue order.
template <class Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> perturbative_rates(const RealSpectrum<Scalar>& spec0,
                                                         int trap, Scalar gamma_r) {
    if (trap < 0 || trap >= spec0.eigenvalues.size())
        throw IndexOutOfRange("perturbative_rates: trap index " + std::to_string(trap));
    return gamma_r * spec0.eigenvectors.row(trap).array().square().matrix().transpose();
}

// Rank pairing of a trapped spectrum with the trap-free one: both sorted by
// real part, paired position-wise. degeneracy_gaps(i) is the distance from the
// paired H0 eigenvalue to its nearest H0 neighbor, the diagnostic for flagging
// near-degenerate modes where non-degenerate perturbation theory breaks down.
struct SpectraPairing {
    std::vector<Eigen::Index> trapped_to_real;  // index into spec0, per trapped mode
    Eigen::VectorXd real_part_gaps;             // |epsilon_l - lambda_paired|
    Eigen::VectorXd degeneracy_gaps;
};

template <class Scalar>
SpectraPairing match_spectra(const TrappedSpectrum<Scalar>& trapped,
                             const RealSpectrum<Scalar>& spec0) {
    const Eigen::Index n = trapped.dim();
    if (n != spec0.eigenvalues.size())
        throw InvalidArgument("match_spectra: dimension mismatch");

    std::vector<Eigen::Index> by_eps(n);
    std::iota(by_eps.begin(), by_eps.end(), Eigen::Index(0));
    std::stable_sort(by_eps.begin(), by_eps.end(), [&](Eigen::Index a, Eigen::Index b) {
        return trapped.real_parts(a) < trapped.real_parts(b);
    });

    SpectraPairing pairing;
    pairing.trapped_to_real.resize(n);
    pairing.real_part_gaps.resize(n);
    pairing.degeneracy_gaps.resize(n);
    for (Eigen::Index rank = 0; rank < n; ++rank) {
        const Eigen::Index l = by_eps[rank];
        pairing.trapped_to_real[l] = rank;  // spec0 eigenvalues already ascend
        pairing.real_part_gaps(l) =
            std::abs(double(trapped.real_parts(l) - spec0.eigenvalues(rank)));
        double gap = std::numeric_limits<double>::infinity();
        if (rank > 0) gap = std::min(gap, double(spec0.eigenvalues(rank) - spec0.eigenvalues(rank - 1)));
        if (rank + 1 < n)
            gap = std::min(gap, double(spec0.eigenvalues(rank + 1) - spec0.eigenvalues(rank)));
        pairing.degeneracy_gaps(l) = gap;
    }
    return pairing;
}

// --- validation helpers (used by tests and the acceptance suite) ---

template <class Scalar>
Scalar biorthonormality_error(const TrappedSpectrum<Scalar>& spec) {
    using MatrixC = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
    MatrixC g = spec.right_vectors.transpose() * spec.right_vectors;
    g.diagonal().array() -= std::complex<Scalar>(1, 0);
    return g.cwiseAbs().maxCoeff();
}

// max-norm error of sum_l |Psi_l><Psi~_l| against the identity.
template <class Scalar>
Scalar completeness_error(const TrappedSpectrum<Scalar>& spec) {
    using MatrixC = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
    MatrixC p = spec.right_vectors * spec.right_vectors.transpose();
    p.diagonal().array() -= std::complex<Scalar>(1, 0);
    return p.cwiseAbs().maxCoeff();
}

// max-norm error of sum_l E_l |Psi_l><Psi~_l| against H.
template <class Scalar>
Scalar reconstruction_error(const TrappedSpectrum<Scalar>& spec,
                            const TrappedHamiltonian<Scalar>& h) {
    using MatrixC = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
    MatrixC rebuilt = spec.right_vectors * spec.eigenvalues().asDiagonal() *
                      spec.right_vectors.transpose();
    return (rebuilt - h.full()).cwiseAbs().maxCoeff();
}

// max over modes of ||H v_l - E_l v_l||_2.
template <class Scalar>
Scalar max_residual(const TrappedSpectrum<Scalar>& spec, const TrappedHamiltonian<Scalar>& h) {
    const auto full = h.full();
    const auto ev = spec.eigenvalues();
    Scalar worst(0);
    for (Eigen::Index l = 0; l < spec.dim(); ++l) {
        // v^T v = 1 vectors can have large 2-norm near self-orthogonality;
        // measure the residual on the unit-norm direction.
        auto v = (spec.right_vectors.col(l) / spec.right_vectors.col(l).norm()).eval();
        worst = std::max(worst, (full * v - ev(l) * v).norm());
    }
    return worst;
}

template <class Scalar>
Scalar max_residual(const RealSpectrum<Scalar>& spec, const CouplingMatrix<Scalar>& h0) {
    Scalar worst(0);
    for (Eigen::Index l = 0; l < spec.eigenvalues.size(); ++l) {
        worst = std::max(worst, (h0.entries * spec.eigenvectors.col(l) -
                                 spec.eigenvalues(l) * spec.eigenvectors.col(l))
                                    .norm());
    }
    return worst;
}

}  // namespace qtrap
