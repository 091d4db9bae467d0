#include "qtrap/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qtrap/errors.hpp"

namespace qtrap {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("config key '" + key + "': cannot parse '" + value +
                              "' as a number");
    }
}

long parse_integer(const std::string& value, const std::string& key) {
    const double v = parse_double(value, key);
    const auto i = static_cast<long>(v);
    if (static_cast<double>(i) != v)
        throw InvalidArgument("config key '" + key + "': '" + value + "' is not an integer");
    return i;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw InvalidArgument("config key '" + key + "': expected true or false, got '" + value + "'");
}

// The n/r/gamma triple of one sweep block, before expansion.
struct Block {
    std::vector<int> n_list;
    std::vector<int> r_list;
    std::vector<double> gamma_list;
    bool touched = false;
};

void expand_block(const Block& block, const std::string& what, RunConfig& config,
                  std::set<std::string>& tags) {
    if (block.n_list.empty())
        throw InvalidArgument(what + ": sweep block is missing key 'n'");
    if (block.gamma_list.empty())
        throw InvalidArgument(what + ": sweep block is missing key 'gamma'");
    if (block.r_list.empty())
        throw InvalidArgument(what + ": sweep block is missing key 'r'");
    if (block.r_list.size() != 1 && block.r_list.size() != block.n_list.size())
        throw InvalidArgument(what + ": key 'r' must be a scalar or a list aligned with 'n' (" +
                              std::to_string(block.r_list.size()) + " vs " +
                              std::to_string(block.n_list.size()) + " entries)");
    for (std::size_t i = 0; i < block.n_list.size(); ++i) {
        const int r = block.r_list.size() == 1 ? block.r_list[0] : block.r_list[i];
        for (double gamma : block.gamma_list) {
            SweepPoint point;
            point.n = block.n_list[i];
            point.r = r;
            point.gamma = gamma;
            point.tag = sweep_tag(point.n, gamma);
            if (!tags.insert(point.tag).second)
                throw InvalidArgument(what + ": duplicate sweep point '" + point.tag + "'");
            config.points.push_back(std::move(point));
        }
    }
}

}  // namespace

std::string sweep_tag(int n, double gamma) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "n%d_g%g", n, gamma);
    return buf;
}

std::pair<double, double> parse_window(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw InvalidArgument("window '" + text + "': expected the form lo:hi");
    const double lo = parse_double(trim(text.substr(0, colon)), "window");
    const double hi = parse_double(trim(text.substr(colon + 1)), "window");
    if (!(lo > 0) || !(hi > lo))
        throw InvalidArgument("window '" + text + "': need 0 < lo < hi");
    return {lo, hi};
}

RunConfig parse_config(std::istream& in, const std::string& what) {
    RunConfig config;
    Block global;
    std::vector<Block> sweeps;
    Block* current = &global;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = what + ": line " + std::to_string(lineno);

        if (line.front() == '[') {
            if (line != "[sweep]")
                throw InvalidArgument(where + ": unknown section '" + line + "'");
            sweeps.emplace_back();
            current = &sweeps.back();
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(where + ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw InvalidArgument(where + ": expected 'key = value', got '" + line + "'");

        if (key == "n" || key == "r" || key == "gamma") {
            current->touched = true;
            for (const auto& item : split_list(value)) {
                if (key == "n") {
                    const long n = parse_integer(item, key);
                    if (n < 2) throw InvalidArgument(where + ": n must be >= 2, got " + item);
                    current->n_list.push_back(static_cast<int>(n));
                } else if (key == "r") {
                    const long r = parse_integer(item, key);
                    if (r < 1) throw InvalidArgument(where + ": r must be >= 1, got " + item);
                    current->r_list.push_back(static_cast<int>(r));
                } else {
                    const double g = parse_double(item, key);
                    if (!(g > 0)) throw InvalidArgument(where + ": gamma must be > 0, got " + item);
                    current->gamma_list.push_back(g);
                }
            }
            continue;
        }

        if (current != &global)
            throw InvalidArgument(where + ": key '" + key +
                                  "' is global and not allowed inside [sweep]");
        if (key == "geometry") {
            config.geometry = geometry_kind_from_string(value);
        } else if (key == "sigma") {
            config.sigma = parse_double(value, key);
            if (!(config.sigma > 0)) throw InvalidArgument(where + ": sigma must be > 0");
        } else if (key == "delta_min") {
            config.delta_min = parse_double(value, key);
            if (config.delta_min < 0) throw InvalidArgument(where + ": delta_min must be >= 0");
        } else if (key == "seed") {
            const double v = parse_double(value, key);
            if (v < 0) throw InvalidArgument(where + ": seed must be >= 0");
            config.seed = static_cast<std::uint64_t>(v);
        } else if (key == "tau_min") {
            config.tau_min = parse_double(value, key);
        } else if (key == "tau_max") {
            config.tau_max = parse_double(value, key);
        } else if (key == "points_per_decade") {
            config.points_per_decade = static_cast<int>(parse_integer(value, key));
            if (config.points_per_decade < 1)
                throw InvalidArgument(where + ": points_per_decade must be >= 1");
        } else if (key == "exact_mode") {
            config.exact_mode = parse_bool(value, key);
        } else if (key == "fit_window") {
            config.fit_window = parse_window(value);
        } else {
            throw InvalidArgument(where + ": unknown config key '" + key + "'");
        }
    }

    if (!(config.tau_min > 0) || !(config.tau_max > config.tau_min))
        throw InvalidArgument(what + ": need 0 < tau_min < tau_max");

    std::set<std::string> tags;
    if (global.touched) expand_block(global, what, config, tags);
    for (const auto& block : sweeps) expand_block(block, what, config, tags);
    if (config.points.empty())
        throw InvalidArgument(what + ": no sweep points (keys n, r, gamma are required)");
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifacts("cannot open config file " + path);
    return parse_config(in, path);
}

}  // namespace qtrap
