#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtrap/network.hpp"

namespace qtrap {

// One resolved (N, R, Gamma) ensemble point of a sweep.
struct SweepPoint {
    int n = 0;
    int r = 0;
    double gamma = 1.0;
    std::string tag;  // "n<N>_g<Gamma:%g>", the output subdirectory name
};

// Parsed run configuration: global keys plus the expanded sweep points.
// Sweep semantics: cartesian product of the n and gamma lists; r is either a
// scalar (applies to every n) or a list aligned with n, since realistic
// realization counts shrink as N grows.
struct RunConfig {
    GeometryKind geometry = GeometryKind::disordered3d;
    double sigma = 3.0;
    double delta_min = 1e-2;
    std::uint64_t seed = 0;
    double tau_min = 1e-4;
    double tau_max = 1e2;
    int points_per_decade = 200;
    bool exact_mode = false;
    std::optional<std::pair<double, double>> fit_window;  // rescaled tau bounds

    std::vector<SweepPoint> points;
};

std::string sweep_tag(int n, double gamma);

// Line-oriented "key = value" text; '#' comments; optional [sweep] sections,
// each inheriting the globals and contributing its own n x gamma block.
// Unknown keys are hard errors naming the key.
RunConfig parse_config(std::istream& in, const std::string& what);
RunConfig parse_config_file(const std::string& path);

// "lo:hi" with 0 < lo < hi.
std::pair<double, double> parse_window(const std::string& text);

}  // namespace qtrap
