#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace degenlab::cli {

inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string cell(double x) { return format_number(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(std::string x) { return x; }
inline std::string cell(const char* x) { return x; }

struct CsvTable {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    template <class... Ts>
    void add(Ts&&... xs) {
        rows.push_back({cell(std::forward<Ts>(xs))...});
    }
};

/// What a subcommand produces: a JSON summary plus any number of tables.
struct Artifacts {
    json summary;
    std::vector<CsvTable> tables;
};

/// One comment line (format version and config echo), the column names, then the rows.
inline std::string render_csv(const CsvTable& t, const RunConfig& rc) {
    std::string s = "# format_version=" + std::string(kFormatVersion) + " config=" + rc.echo().dump() + "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) s += (c ? "," : "") + t.columns[c];
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) s += (c ? "," : "") + row[c];
        s += "\n";
    }
    return s;
}

inline json render_json(const Artifacts& a, const RunConfig& rc) {
    json files = json::array();
    for (const auto& t : a.tables) files.push_back(t.name + ".csv");
    return {{"format_version", kFormatVersion}, {"config", rc.echo()}, {"result", a.summary}, {"tables", files}};
}

/// Writes <out>/<subcommand>.json and <out>/<table>.csv; returns the JSON document.
inline json write_artifacts(const Artifacts& a, const RunConfig& rc) {
    namespace fs = std::filesystem;
    const fs::path dir(rc.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("out", "cannot create " + rc.out + ": " + ec.message());
    for (const auto& t : a.tables) {
        std::ofstream f(dir / (t.name + ".csv"), std::ios::binary);
        if (!f) throw ConfigError("out", "cannot write " + (dir / (t.name + ".csv")).string());
        f << render_csv(t, rc);
    }
    const json doc = render_json(a, rc);
    std::ofstream f(dir / (rc.subcommand + ".json"), std::ios::binary);
    if (!f) throw ConfigError("out", "cannot write " + (dir / (rc.subcommand + ".json")).string());
    f << doc.dump(2) << "\n";
    return doc;
}

}  // namespace degenlab::cli
