#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qtrap/errors.hpp"
#include "qtrap/spectra.hpp"

namespace qtrap {

// Strictly increasing times with t = 0 prepended, log-uniform over
// (t_min, t_max]; tau = t*Gamma/N^3 carried alongside.
struct TimeGrid {
    Eigen::VectorXd t;
    Eigen::VectorXd tau;

    Eigen::Index size() const { return t.size(); }

    // points_per_decade log-spaced points per decade of [tau_min, tau_max]
    // (endpoints included), converted to raw time via t = tau * n^3 / gamma.
    static TimeGrid rescaled(double tau_min, double tau_max, int points_per_decade, int n,
                             double gamma) {
        if (!(tau_min > 0) || !(tau_max > tau_min))
            throw InvalidArgument("TimeGrid: need 0 < tau_min < tau_max");
        if (points_per_decade < 1) throw InvalidArgument("TimeGrid: points_per_decade must be >= 1");
        if (!(gamma > 0)) throw InvalidArgument("TimeGrid: gamma must be > 0");
        const double lg_min = std::log10(tau_min);
        const double lg_max = std::log10(tau_max);
        const auto npts =
            static_cast<Eigen::Index>(std::lround(points_per_decade * (lg_max - lg_min))) + 1;
        const Eigen::Index m = std::max<Eigen::Index>(npts, 2);
        const double scale = static_cast<double>(n) * n * n / gamma;

        TimeGrid grid;
        grid.t.resize(m + 1);
        grid.tau.resize(m + 1);
        grid.t(0) = 0.0;
        grid.tau(0) = 0.0;
        const double step = (lg_max - lg_min) / static_cast<double>(m - 1);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double e = (i == m - 1) ? lg_max : lg_min + step * static_cast<double>(i);
            const double tau = std::pow(10.0, e);
            grid.tau(i + 1) = tau;
            grid.t(i + 1) = tau * scale;
        }
        return grid;
    }

    // Raw strictly increasing positive times; t = 0 prepended if absent.
    static TimeGrid from_times(const Eigen::VectorXd& times, int n, double gamma) {
        const bool has_zero = times.size() > 0 && times(0) == 0.0;
        TimeGrid grid;
        grid.t.resize(times.size() + (has_zero ? 0 : 1));
        if (!has_zero) grid.t(0) = 0.0;
        grid.t.tail(times.size()) = times;
        for (Eigen::Index i = 1; i < grid.t.size(); ++i)
            if (!(grid.t(i) > grid.t(i - 1)))
                throw InvalidArgument("TimeGrid: times must be strictly increasing and positive");
        grid.tau = grid.t * (gamma / (static_cast<double>(n) * n * n));
        return grid;
    }
};

enum class CurveKind { exact_propagator, spectral_form, jensen_bound };

struct CurveProvenance {
    int n = 0;
    double gamma = 0.0;
    std::string source;  // seed or "ensemble"
    int realizations = 1;
};

struct SurvivalCurve {
    TimeGrid grid;
    Eigen::VectorXd values;
    CurveKind kind = CurveKind::spectral_form;
    CurveProvenance provenance;
};

// Checks values[0] = 1, range [0, 1], and monotone decay, all within `slack`
// (default per kind: propagator curves accumulate more roundoff).
inline void validate_survival(const SurvivalCurve& curve, double slack = -1.0) {
    if (slack < 0) slack = curve.kind == CurveKind::exact_propagator ? 1e-10 : 1e-12;
    if (curve.values.size() != curve.grid.size())
        throw InvalidArgument("survival curve: value/grid size mismatch");
    if (std::abs(curve.values(0) - 1.0) > slack)
        throw InvalidArgument("survival curve: value at t=0 is " + std::to_string(curve.values(0)));
    for (Eigen::Index i = 0; i < curve.values.size(); ++i) {
        const double v = curve.values(i);
        if (!(v >= -slack && v <= 1.0 + slack))
            throw InvalidArgument("survival curve: value " + std::to_string(v) +
                                  " outside [0,1] at point " + std::to_string(i));
        if (i > 0 && v > curve.values(i - 1) + slack)
            throw InvalidArgument("survival curve: increase at point " + std::to_string(i));
    }
}

// U(t) = sum_l e^{-i E_l t} |Psi_l><Psi~_l| = V diag(e^{-i E_l t}) V^T.
template <class Scalar>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic> propagator(
    const TrappedSpectrum<Scalar>& spec, double t) {
    using Complex = std::complex<Scalar>;
    Eigen::Vector<Complex, Eigen::Dynamic> phases =
        (-Complex(0, 1) * Scalar(t) * spec.eigenvalues().array()).exp().matrix();
    return spec.right_vectors * phases.asDiagonal() * spec.right_vectors.transpose();
}

// pi_kj(t) = |sum_l e^{-i E_l t} <k|Psi_l><Psi~_l|j>|^2.
template <class Scalar>
Scalar transition_probability(const TrappedSpectrum<Scalar>& spec, int j, int k, double t) {
    if (j < 0 || j >= spec.dim() || k < 0 || k >= spec.dim())
        throw IndexOutOfRange("transition_probability: node index outside [0, n)");
    if (t < 0) throw InvalidArgument("transition_probability: t must be >= 0");
    using Complex = std::complex<Scalar>;
    const auto ev = spec.eigenvalues();
    Complex amplitude(0);
    for (Eigen::Index l = 0; l < spec.dim(); ++l)
        amplitude += std::exp(-Complex(0, 1) * Scalar(t) * ev(l)) * spec.right_vectors(k, l) *
                     spec.right_vectors(j, l);
    return std::norm(amplitude);
}

// Pi_M(t) = (1/(N-M)) sum_{j,k not in traps} pi_kj(t), via the full propagator
// once per time point.
template <class Scalar>
SurvivalCurve mean_survival_exact(const TrappedSpectrum<Scalar>& spec,
                                  const std::vector<int>& traps, const TimeGrid& grid) {
    using Complex = std::complex<Scalar>;
    const Eigen::Index n = spec.dim();
    const Eigen::Index m = static_cast<Eigen::Index>(traps.size());
    if (m >= n) throw InvalidArgument("mean_survival_exact: traps must leave at least one node");
    std::vector<char> is_trap(n, 0);
    for (int node : traps) {
        if (node < 0 || node >= n)
            throw IndexOutOfRange("mean_survival_exact: trap index " + std::to_string(node));
        is_trap[node] = 1;
    }
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> v_free(n - m, n);
    for (Eigen::Index row = 0, j = 0; j < n; ++j)
        if (!is_trap[j]) v_free.row(row++) = spec.right_vectors.row(j);

    SurvivalCurve curve;
    curve.grid = grid;
    curve.kind = CurveKind::exact_propagator;
    curve.values.resize(grid.size());
    const auto ev = spec.eigenvalues();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        Eigen::Vector<Complex, Eigen::Dynamic> phases =
            (-Complex(0, 1) * Scalar(grid.t(i)) * ev.array()).exp().matrix();
        const auto u_free =
            (v_free * phases.asDiagonal() * v_free.transpose()).eval();
        curve.values(i) = static_cast<double>(u_free.squaredNorm()) / static_cast<double>(n - m);
    }
    return curve;
}

// Pi(t) = (1/N) sum_l e^{-2 gamma_l t}; Pi(0) = 1 exactly.
template <class Derived>
SurvivalCurve mean_survival_spectral(const Eigen::MatrixBase<Derived>& rates,
                                     const TimeGrid& grid) {
    const Eigen::VectorXd r = rates.derived().template cast<double>();
    for (Eigen::Index l = 0; l < r.size(); ++l)
        if (!(r(l) >= 0))
            throw InvalidArgument("mean_survival_spectral: negative rate at mode " +
                                  std::to_string(l));
    SurvivalCurve curve;
    curve.grid = grid;
    curve.kind = CurveKind::spectral_form;
    curve.values.resize(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        curve.values(i) = (r.array() * (-2.0 * grid.t(i))).exp().mean();
    return curve;
}

// Jensen lower bound from index-averaged sorted rates:
// bound(t) = (1/N) sum_l e^{-2 t <gamma_l>_R} <= <Pi(t)>_R.
template <class Derived>
SurvivalCurve jensen_lower_bound(const Eigen::MatrixBase<Derived>& avg_rates,
                                 const TimeGrid& grid) {
    SurvivalCurve curve = mean_survival_spectral(avg_rates, grid);
    curve.kind = CurveKind::jensen_bound;
    return curve;
}

}  // namespace qtrap
