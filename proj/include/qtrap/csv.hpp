#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qtrap {

// Shortest decimal form that round-trips a binary64 exactly (printf %.17g).
std::string fmt17(double v);

// One '#'-prefixed metadata line: "# key1=v1 key2=v2 ...".
std::string metadata_line(const std::vector<std::pair<std::string, std::string>>& kv);

// Inverse of metadata_line over a block of comment lines.
std::map<std::string, std::string> parse_metadata(const std::vector<std::string>& comments);

struct CsvTable {
    std::vector<std::string> comments;  // leading '#' lines, without newline
    std::vector<std::string> header;    // column names
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 if absent
    std::vector<double> values(const std::string& name) const;  // throws if absent
};

// Strict reader for the library's own CSV dialect: optional leading '#'
// comment lines, one header line, numeric rows.
CsvTable read_csv(std::istream& in, const std::string& what);
CsvTable read_csv_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& body);

}  // namespace qtrap
