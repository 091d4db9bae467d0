#include "qtrap/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qtrap/errors.hpp"

namespace qtrap {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string metadata_line(const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string line = "#";
    for (const auto& [k, v] : kv) line += " " + k + "=" + v;
    return line;
}

std::map<std::string, std::string> parse_metadata(const std::vector<std::string>& comments) {
    std::map<std::string, std::string> out;
    for (const auto& line : comments) {
        std::istringstream ss(line);
        std::string token;
        while (ss >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos || eq == 0) continue;
            out[token.substr(0, eq)] = token.substr(eq + 1);
        }
    }
    return out;
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> CsvTable::values(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw InvalidArgument("missing CSV column '" + name + "'");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[static_cast<std::size_t>(c)]);
    return out;
}

static std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

CsvTable read_csv(std::istream& in, const std::string& what) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!have_header) table.comments.push_back(line);
            continue;
        }
        if (!have_header) {
            table.header = split_csv_line(line);
            have_header = true;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != table.header.size())
            throw InvalidArgument(what + ": line " + std::to_string(lineno) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(table.header.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            // strtod rather than stod: survival tails underflow into
            // subnormals, which stod reports as out of range.
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v))
                throw InvalidArgument(what + ": line " + std::to_string(lineno) +
                                      ": cannot parse '" + f + "' as a number");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw InvalidArgument(what + ": no header line found");
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifacts("cannot open " + path);
    return read_csv(in, path);
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open " + path + " for writing");
    out << body;
    if (!out) throw InvalidArgument("failed writing " + path);
}

}  // namespace qtrap
