#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>

#include "qtrap/dynamics.hpp"
#include "qtrap/hamiltonian.hpp"
#include "qtrap/network.hpp"
#include "qtrap/rng.hpp"
#include "qtrap/spectra.hpp"

using namespace qtrap;

TEST_CASE("rescaled grid covers the window with t = tau * n^3 / gamma") {
    const int n = 100;
    const double gamma = 1e-3;
    const auto grid = TimeGrid::rescaled(1e-4, 1e2, 200, n, gamma);

    CHECK(grid.size() == 1202);  // 200 per decade * 6 decades + endpoint + t=0
    CHECK(grid.t(0) == 0.0);
    CHECK(grid.tau(0) == 0.0);
    for (Eigen::Index i = 1; i < grid.size(); ++i) CHECK(grid.t(i) > grid.t(i - 1));
    CHECK(grid.tau(1) == doctest::Approx(1e-4).epsilon(1e-14));
    CHECK(grid.tau(grid.size() - 1) == doctest::Approx(1e2).epsilon(1e-14));

    const double scale = double(n) * n * n / gamma;
    for (Eigen::Index i = 0; i < grid.size(); ++i) CHECK(grid.t(i) == grid.tau(i) * scale);
}

TEST_CASE("degenerate log window still yields a two-point grid") {
    const auto grid = TimeGrid::rescaled(1.0, 1.000001, 10, 2, 1.0);
    CHECK(grid.size() == 3);
    CHECK(grid.t(0) == 0.0);
    CHECK(grid.tau(1) < grid.tau(2));
}

TEST_CASE("grid construction rejects bad windows") {
    CHECK_THROWS_AS(TimeGrid::rescaled(0.0, 1.0, 10, 2, 1.0), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid::rescaled(-1.0, 1.0, 10, 2, 1.0), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid::rescaled(1.0, 1.0, 10, 2, 1.0), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid::rescaled(1e-2, 1.0, 0, 2, 1.0), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid::rescaled(1e-2, 1.0, 10, 2, 0.0), InvalidArgument);
}

TEST_CASE("explicit time lists get t = 0 prepended exactly once") {
    Eigen::VectorXd times(3);
    times << 0.5, 1.0, 4.0;
    const auto grid = TimeGrid::from_times(times, 10, 2.0);
    CHECK(grid.size() == 4);
    CHECK(grid.t(0) == 0.0);
    CHECK(grid.t(3) == 4.0);
    CHECK(grid.tau(3) == doctest::Approx(4.0 * 2.0 / 1000.0).epsilon(1e-15));

    Eigen::VectorXd with_zero(2);
    with_zero << 0.0, 1.0;
    CHECK(TimeGrid::from_times(with_zero, 10, 2.0).size() == 2);

    Eigen::VectorXd bad(3);
    bad << 0.5, 0.5, 1.0;
    CHECK_THROWS_AS(TimeGrid::from_times(bad, 10, 2.0), InvalidArgument);
    Eigen::VectorXd negative(1);
    negative << -1.0;
    CHECK_THROWS_AS(TimeGrid::from_times(negative, 10, 2.0), InvalidArgument);
}

TEST_CASE("equal decay rates give a single exponential") {
    Eigen::VectorXd rates = Eigen::VectorXd::Constant(7, 0.3);
    const auto grid = TimeGrid::rescaled(1e-2, 1e1, 40, 7, 1.0);
    const auto curve = mean_survival_spectral(rates, grid);
    CHECK(curve.kind == CurveKind::spectral_form);
    CHECK(curve.values(0) == 1.0);
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        CHECK(curve.values(i) == doctest::Approx(std::exp(-0.6 * grid.t(i))).epsilon(1e-13));

    Eigen::VectorXd negative(2);
    negative << 0.1, -0.2;
    CHECK_THROWS_AS(mean_survival_spectral(negative, grid), InvalidArgument);
}

TEST_CASE("survival validation catches malformed curves") {
    const auto grid = TimeGrid::rescaled(1e-2, 1e0, 20, 4, 1.0);
    auto curve = mean_survival_spectral(Eigen::VectorXd::Constant(4, 0.5), grid);
    CHECK_NOTHROW(validate_survival(curve));

    auto bad = curve;
    bad.values(0) = 0.9;
    CHECK_THROWS_AS(validate_survival(bad), InvalidArgument);

    bad = curve;
    bad.values(5) = 1.5;
    CHECK_THROWS_AS(validate_survival(bad), InvalidArgument);

    bad = curve;
    bad.values(7) = bad.values(6) + 1e-6;
    CHECK_THROWS_AS(validate_survival(bad), InvalidArgument);

    bad = curve;
    bad.values.conservativeResize(3);
    CHECK_THROWS_AS(validate_survival(bad), InvalidArgument);
}

TEST_CASE("spectral propagator matches the matrix exponential") {
    const auto config = generate_configuration(6, 42);
    const auto h0 = build_h0_long_range<double>(config, 3.0);
    const auto h = build_full_hamiltonian(h0, make_trap_spec(h0, 0.5, config.trap_nodes));
    const auto spec = decompose_trapped(h);

    const Eigen::MatrixXcd full = h.full();
    for (double t : {0.0, 0.05 / h0.scale(), 0.5 / h0.scale(), 2.0 / h0.scale()}) {
        const Eigen::MatrixXcd direct = (std::complex<double>(0, -t) * full).exp();
        const Eigen::MatrixXcd viaspec = propagator(spec, t);
        CHECK((direct - viaspec).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("transition probabilities start as Kronecker deltas") {
    const auto config = generate_configuration(8, 7);
    const auto h0 = build_h0_long_range<double>(config, 3.0);
    const auto h = build_full_hamiltonian(h0, make_trap_spec(h0, 1.0, config.trap_nodes));
    const auto spec = decompose_trapped(h);

    for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 8; ++k) {
            const double expected = (j == k) ? 1.0 : 0.0;
            CHECK(std::abs(transition_probability(spec, j, k, 0.0) - expected) < 1e-10);
        }

    const double t = 0.3 / h0.scale();
    const Eigen::MatrixXcd u = propagator(spec, t);
    for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 8; ++k)
            CHECK(transition_probability(spec, j, k, t) ==
                  doctest::Approx(std::norm(u(k, j))).epsilon(1e-10));

    CHECK_THROWS_AS(transition_probability(spec, -1, 0, t), IndexOutOfRange);
    CHECK_THROWS_AS(transition_probability(spec, 0, 8, t), IndexOutOfRange);
    CHECK_THROWS_AS(transition_probability(spec, 0, 0, -1.0), InvalidArgument);
}

TEST_CASE("mean survival equals the averaged pairwise transition sum") {
    const auto config = generate_configuration(8, 19);
    const auto h0 = build_h0_long_range<double>(config, 3.0);
    const auto h = build_full_hamiltonian(h0, make_trap_spec(h0, 1.0, {0}));
    const auto spec = decompose_trapped(h);

    Eigen::VectorXd times(3);
    times << 0.1 / h0.scale(), 1.0 / h0.scale(), 10.0 / h0.scale();
    const auto grid = TimeGrid::from_times(times, 8, 1.0);
    const auto curve = mean_survival_exact(spec, {0}, grid);
    CHECK(curve.kind == CurveKind::exact_propagator);
    CHECK(std::abs(curve.values(0) - 1.0) < 1e-10);

    for (Eigen::Index i = 1; i < grid.size(); ++i) {
        double total = 0.0;
        for (int j = 1; j < 8; ++j)
            for (int k = 1; k < 8; ++k)
                total += transition_probability(spec, j, k, grid.t(i));
        CHECK(curve.values(i) == doctest::Approx(total / 7.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(mean_survival_exact(spec, {8}, grid), IndexOutOfRange);
    CHECK_THROWS_AS(mean_survival_exact(spec, {0, 1, 2, 3, 4, 5, 6, 7}, grid), InvalidArgument);
}

TEST_CASE("two-node dynamics match the closed form") {
    // With H = [[1 - i g, -1], [-1, 1]] and s = sqrt(4 - g^2), the non-trap
    // amplitude is e^{-it} e^{-gt/2} (cos(st/2) + (g/s) sin(st/2)): the exact
    // curve carries an interference factor, the rate form is a bare e^{-gt}.
    const double g = 0.1;
    const double s = std::sqrt(4.0 - g * g);
    const auto chain = generate_chain(2);
    const auto h0 = build_h0_chain<double>(chain);
    const auto h = build_full_hamiltonian(h0, make_trap_spec(h0, g, {0}));
    const auto spec = decompose_trapped(h);

    const auto grid = TimeGrid::rescaled(1e-3, 1e1, 60, 2, g);
    const auto exact = mean_survival_exact(spec, {0}, grid);
    const auto spectral = mean_survival_spectral(spec.decay_rates, grid);

    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double t = grid.t(i);
        const double envelope = std::cos(s * t / 2) + (g / s) * std::sin(s * t / 2);
        CHECK(std::abs(exact.values(i) - std::exp(-g * t) * envelope * envelope) < 1e-12);
        CHECK(spectral.values(i) == doctest::Approx(std::exp(-g * t)).epsilon(1e-12));
    }
}

TEST_CASE("weakly trapped networks show genuine survival revivals") {
    // Probability only leaks at the trap, so the site-averaged propagator
    // curve is not monotone: interference brings amplitude back to the
    // surviving sites. The rate-sum form, by contrast, decays monotonically.
    const auto config = generate_configuration(50, realization_seed(12345, 1));
    const auto h0 = build_h0_long_range<double>(config, 3.0);
    const auto h = build_full_hamiltonian(h0, make_trap_spec(h0, 1e-2, config.trap_nodes));
    const auto spec = decompose_trapped(h);

    const auto grid = TimeGrid::rescaled(1e-4, 1e2, 100, 50, 1e-2);
    const auto exact = mean_survival_exact(spec, config.trap_nodes, grid);

    double max_increase = 0.0;
    for (Eigen::Index i = 1; i < grid.size(); ++i)
        max_increase = std::max(max_increase, exact.values(i) - exact.values(i - 1));
    CHECK(max_increase > 1e-8);
    CHECK(max_increase < 1e-2);
    CHECK_THROWS_AS(validate_survival(exact), InvalidArgument);

    const auto spectral = mean_survival_spectral(spec.decay_rates, grid);
    CHECK_NOTHROW(validate_survival(spectral, 0.0));
}

TEST_CASE("single-realization lower bound degenerates to the rate form") {
    Eigen::VectorXd rates(4);
    rates << 0.0, 0.1, 0.2, 0.7;
    const auto grid = TimeGrid::rescaled(1e-2, 1e1, 30, 4, 1.0);
    const auto bound = jensen_lower_bound(rates, grid);
    const auto curve = mean_survival_spectral(rates, grid);
    CHECK(bound.kind == CurveKind::jensen_bound);
    for (Eigen::Index i = 0; i < grid.size(); ++i) CHECK(bound.values(i) == curve.values(i));
}
