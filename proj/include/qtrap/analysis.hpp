#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qtrap/dynamics.hpp"
#include "qtrap/errors.hpp"

namespace qtrap {

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
    double slope_err = 0.0;
    Eigen::Index n = 0;
};

template <class DX, class DY>
LineFit least_squares_line(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
    LineFit fit;
    fit.n = x.size();
    const double xm = x.mean();
    const double ym = y.mean();
    const double sxx = (x.array() - xm).square().sum();
    const double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    const auto resid = (y.array() - fit.intercept - fit.slope * x.array()).eval();
    const double ss = resid.square().sum();
    fit.rms_residual = std::sqrt(ss / static_cast<double>(fit.n));
    if (fit.n > 2) fit.slope_err = std::sqrt(ss / static_cast<double>(fit.n - 2) / sxx);
    return fit;
}

}  // namespace detail

// Result of a log-log power-law fit of a survival curve over [t_lo, t_hi]:
// Pi(t) ~ amplitude * t^(-eta). Window bounds are in raw time, matching the
// curve's grid.t; the CLI converts to and from rescaled tau at its boundary.
struct PowerLawFit {
    double eta = 0.0;
    double amplitude = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double residual = 0.0;  // RMS of log-log residuals
    double eta_err = 0.0;   // standard error of the fitted slope
    int n_points = 0;
};

inline PowerLawFit fit_power_law(const SurvivalCurve& curve, double t_lo, double t_hi) {
    if (!(t_lo > 0) || !(t_hi > t_lo))
        throw InvalidArgument("fit_power_law: need 0 < t_lo < t_hi");
    std::vector<double> lx, ly;
    for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
        const double t = curve.grid.t(i);
        if (t < t_lo || t > t_hi) continue;
        const double v = curve.values(i);
        if (!(v > 0))
            throw NonPositiveValues("fit_power_law: survival value " + std::to_string(v) +
                                    " at t=" + std::to_string(t));
        lx.push_back(std::log(t));
        ly.push_back(std::log(v));
    }
    if (lx.size() < 10)
        throw WindowTooNarrow("fit_power_law: only " + std::to_string(lx.size()) +
                              " grid points in window, need >= 10");
    const auto fit = detail::least_squares_line(Eigen::Map<const Eigen::VectorXd>(lx.data(), lx.size()),
                                                Eigen::Map<const Eigen::VectorXd>(ly.data(), ly.size()));
    PowerLawFit out;
    out.eta = -fit.slope;
    out.amplitude = std::exp(fit.intercept);
    out.window_lo = t_lo;
    out.window_hi = t_hi;
    out.residual = fit.rms_residual;
    out.eta_err = fit.slope_err;
    out.n_points = static_cast<int>(fit.n);
    return out;
}

// Moving log-log slope of a curve (window of 2*half_width+1 points), used by
// the automatic window selector. Points with t = 0 or Pi <= 0 are skipped.
struct LocalSlopes {
    Eigen::VectorXd t;       // window-center times
    Eigen::VectorXd slopes;  // d(log Pi)/d(log t)
};

inline LocalSlopes local_log_slopes(const SurvivalCurve& curve, int half_width = 2) {
    std::vector<double> lt, lv;
    for (Eigen::Index i = 0; i < curve.grid.size(); ++i)
        if (curve.grid.t(i) > 0 && curve.values(i) > 0) {
            lt.push_back(std::log(curve.grid.t(i)));
            lv.push_back(std::log(curve.values(i)));
        }
    const auto m = static_cast<Eigen::Index>(lt.size());
    const Eigen::Index w = 2 * half_width + 1;
    LocalSlopes out;
    if (m < w) return out;
    out.t.resize(m - w + 1);
    out.slopes.resize(m - w + 1);
    for (Eigen::Index i = 0; i + w <= m; ++i) {
        const auto fit = detail::least_squares_line(
            Eigen::Map<const Eigen::VectorXd>(lt.data() + i, w),
            Eigen::Map<const Eigen::VectorXd>(lv.data() + i, w));
        out.t(i) = std::exp(lt[i + half_width]);
        out.slopes(i) = fit.slope;
    }
    return out;
}

// Longest contiguous time window whose local slopes stay within
// rel_tol * |window mean slope| of each other. Returns raw-time bounds.
inline std::pair<double, double> auto_fit_window(const SurvivalCurve& curve,
                                                 double rel_tol = 0.2, int half_width = 2) {
    const LocalSlopes ls = local_log_slopes(curve, half_width);
    const Eigen::Index m = ls.slopes.size();
    Eigen::Index best_lo = 0, best_hi = 0;
    for (Eigen::Index lo = 0; lo < m; ++lo) {
        double smin = ls.slopes(lo), smax = ls.slopes(lo), ssum = ls.slopes(lo);
        for (Eigen::Index hi = lo + 1; hi < m; ++hi) {
            smin = std::min(smin, ls.slopes(hi));
            smax = std::max(smax, ls.slopes(hi));
            ssum += ls.slopes(hi);
            const double mean = ssum / static_cast<double>(hi - lo + 1);
            if (smax - smin > rel_tol * std::abs(mean)) break;
            if (hi - lo > best_hi - best_lo) {
                best_lo = lo;
                best_hi = hi;
            }
        }
    }
    if (best_hi - best_lo + 1 < 10)
        throw WindowTooNarrow("auto_fit_window: no stable-slope window of >= 10 points");
    return {ls.t(best_lo), ls.t(best_hi)};
}

// eta(N) = eta0 * N^mu across system sizes at fixed Gamma.
struct ScalingPoint {
    double n = 0.0;
    double eta = 0.0;
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    double eta0 = 0.0;
    double mu = 0.0;
    double gamma_value = 0.0;
};

// Two points: the exact two-size formula mu = ln(eta2/eta1)/ln(N2/N1).
// More: least squares in (ln N, ln eta).
inline ScalingReport size_scaling(std::vector<ScalingPoint> points, double gamma_value = 0.0) {
    std::sort(points.begin(), points.end(),
              [](const ScalingPoint& a, const ScalingPoint& b) { return a.n < b.n; });
    std::vector<double> ln_n, ln_eta;
    for (const auto& p : points) {
        if (!(p.eta > 0))
            throw NonPositiveValues("size_scaling: eta must be positive, got " +
                                    std::to_string(p.eta) + " at N=" + std::to_string(p.n));
        if (!ln_n.empty() && std::log(p.n) == ln_n.back())
            throw InsufficientPoints("size_scaling: duplicate N=" + std::to_string(p.n));
        ln_n.push_back(std::log(p.n));
        ln_eta.push_back(std::log(p.eta));
    }
    if (ln_n.size() < 2)
        throw InsufficientPoints("size_scaling: need at least 2 distinct N, got " +
                                 std::to_string(ln_n.size()));
    ScalingReport report;
    report.points = std::move(points);
    report.gamma_value = gamma_value;
    if (ln_n.size() == 2) {
        report.mu = (ln_eta[1] - ln_eta[0]) / (ln_n[1] - ln_n[0]);
        report.eta0 = std::exp(ln_eta[0] - report.mu * ln_n[0]);
    } else {
        const auto fit = detail::least_squares_line(
            Eigen::Map<const Eigen::VectorXd>(ln_n.data(), ln_n.size()),
            Eigen::Map<const Eigen::VectorXd>(ln_eta.data(), ln_eta.size()));
        report.mu = fit.slope;
        report.eta0 = std::exp(fit.intercept);
    }
    return report;
}

// rho(gamma) = dx/dgamma with x = l/N: the density of the scaled eigenvalue
// index over decay rates. Histogram over log-spaced bins of the positive
// rates; densities are per unit gamma and integrate to positive_count/N.
struct DensityEstimate {
    Eigen::VectorXd bin_edges;    // n_bins + 1, geometric
    Eigen::VectorXd bin_centers;  // geometric midpoints
    Eigen::VectorXd densities;
    double normalization = 0.0;  // sum of rho * dgamma
    Eigen::Index total_count = 0;
    Eigen::Index positive_count = 0;
};

inline int default_density_bins(Eigen::Index n_rates) {
    return std::max(10, static_cast<int>(n_rates / 25));
}

template <class Derived>
DensityEstimate estimate_rate_density(const Eigen::MatrixBase<Derived>& sorted_rates,
                                      int n_bins = 0) {
    const Eigen::VectorXd rates = sorted_rates.derived().template cast<double>();
    const Eigen::Index n = rates.size();
    std::vector<double> pos;
    pos.reserve(n);
    for (Eigen::Index l = 0; l < n; ++l) {
        if (l > 0 && rates(l) < rates(l - 1))
            throw InvalidArgument("estimate_rate_density: rates must be sorted ascending");
        if (rates(l) > 0) pos.push_back(rates(l));
    }
    if (pos.size() < 2 || pos.front() == pos.back())
        throw InsufficientData("estimate_rate_density: need >= 2 distinct positive rates");
    if (n_bins <= 0) n_bins = default_density_bins(n);

    DensityEstimate est;
    est.total_count = n;
    est.positive_count = static_cast<Eigen::Index>(pos.size());
    est.bin_edges.resize(n_bins + 1);
    const double lg_lo = std::log10(pos.front());
    const double lg_hi = std::log10(pos.back());
    for (int b = 0; b <= n_bins; ++b) {
        const double e = (b == n_bins) ? lg_hi : lg_lo + (lg_hi - lg_lo) * b / n_bins;
        est.bin_edges(b) = std::pow(10.0, e);
    }
    est.bin_centers.resize(n_bins);
    est.densities.setZero(n_bins);
    for (int b = 0; b < n_bins; ++b)
        est.bin_centers(b) = std::sqrt(est.bin_edges(b) * est.bin_edges(b + 1));
    for (double g : pos) {
        auto it = std::upper_bound(est.bin_edges.data(), est.bin_edges.data() + n_bins + 1, g);
        int b = static_cast<int>(it - est.bin_edges.data()) - 1;
        b = std::clamp(b, 0, n_bins - 1);
        est.densities(b) += 1.0;
    }
    for (int b = 0; b < n_bins; ++b) {
        const double width = est.bin_edges(b + 1) - est.bin_edges(b);
        est.densities(b) /= static_cast<double>(n) * width;
        est.normalization += est.densities(b) * width;
    }
    return est;
}

// Finite-difference estimator of the same density: central differences of the
// inverse function x(gamma) on the sorted rate curve.
struct DensityCurve {
    Eigen::VectorXd gamma;
    Eigen::VectorXd rho;
};

template <class Derived>
DensityCurve density_finite_difference(const Eigen::MatrixBase<Derived>& sorted_rates) {
    const Eigen::VectorXd rates = sorted_rates.derived().template cast<double>();
    const Eigen::Index n = rates.size();
    std::vector<double> g, r;
    for (Eigen::Index l = 1; l + 1 < n; ++l) {
        const double dg = rates(l + 1) - rates(l - 1);
        if (!(rates(l) > 0) || !(dg > 0)) continue;
        g.push_back(rates(l));
        r.push_back(2.0 / static_cast<double>(n) / dg);
    }
    if (g.size() < 2)
        throw InsufficientData("density_finite_difference: fewer than 2 usable points");
    DensityCurve curve;
    curve.gamma = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    curve.rho = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
    return curve;
}

inline double rate_quantile(const Eigen::VectorXd& sorted_rates, double q) {
    std::vector<double> pos;
    for (Eigen::Index l = 0; l < sorted_rates.size(); ++l)
        if (sorted_rates(l) > 0) pos.push_back(sorted_rates(l));
    if (pos.empty()) throw InsufficientData("rate_quantile: no positive rates");
    const double idx = q * static_cast<double>(pos.size() - 1);
    const auto lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, pos.size() - 1);
    return pos[lo] + (idx - static_cast<double>(lo)) * (pos[hi] - pos[lo]);
}

// Log-log slope of a histogram density over populated bins inside
// [gamma_lo, gamma_hi].
inline double density_log_slope(const DensityEstimate& est, double gamma_lo, double gamma_hi) {
    std::vector<double> lx, ly;
    for (Eigen::Index b = 0; b < est.bin_centers.size(); ++b) {
        const double c = est.bin_centers(b);
        if (c < gamma_lo || c > gamma_hi || !(est.densities(b) > 0)) continue;
        lx.push_back(std::log(c));
        ly.push_back(std::log(est.densities(b)));
    }
    if (lx.size() < 2)
        throw InsufficientData("density_log_slope: fewer than 2 populated bins in window");
    return detail::least_squares_line(Eigen::Map<const Eigen::VectorXd>(lx.data(), lx.size()),
                                      Eigen::Map<const Eigen::VectorXd>(ly.data(), ly.size()))
        .slope;
}

// Density exponent from the rank function: a fit of log(l/N) against
// log(gamma_l) over rates inside the window, minus one. This is the sorted
// rate list inverted in integrated form; it stays well conditioned where a
// pointwise histogram has one count per bin. For rho ~ gamma^(eta-1) the
// returned value is eta - 1.
template <class Derived>
double density_exponent_rank(const Eigen::MatrixBase<Derived>& sorted_rates, double gamma_lo,
                             double gamma_hi) {
    const Eigen::VectorXd rates = sorted_rates.derived().template cast<double>();
    const Eigen::Index n = rates.size();
    std::vector<double> lx, ly;
    for (Eigen::Index l = 0; l < n; ++l) {
        const double g = rates(l);
        if (!(g > 0) || g < gamma_lo || g > gamma_hi) continue;
        lx.push_back(std::log(g));
        ly.push_back(std::log(static_cast<double>(l + 1) / static_cast<double>(n)));
    }
    if (lx.size() < 2)
        throw InsufficientData("density_exponent_rank: fewer than 2 rates in window");
    return detail::least_squares_line(Eigen::Map<const Eigen::VectorXd>(lx.data(), lx.size()),
                                      Eigen::Map<const Eigen::VectorXd>(ly.data(), ly.size()))
               .slope -
           1.0;
}

// Forward Laplace transform of the estimated density: quadrature of
// rho(gamma) e^{-2 gamma t} over the histogram bins (plus the zero-rate mass)
// against the spectral curve; returns the max relative deviation over
// [t_lo, t_hi].
inline double laplace_consistency(const DensityEstimate& density, const SurvivalCurve& curve,
                                  double t_lo, double t_hi) {
    const double zero_mass =
        static_cast<double>(density.total_count - density.positive_count) /
        static_cast<double>(density.total_count);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
        const double t = curve.grid.t(i);
        if (t < t_lo || t > t_hi) continue;
        double laplace = zero_mass;
        for (Eigen::Index b = 0; b < density.bin_centers.size(); ++b) {
            const double width = density.bin_edges(b + 1) - density.bin_edges(b);
            laplace += density.densities(b) * width * std::exp(-2.0 * density.bin_centers(b) * t);
        }
        worst = std::max(worst, std::abs(laplace - curve.values(i)) / curve.values(i));
    }
    return worst;
}

}  // namespace qtrap
