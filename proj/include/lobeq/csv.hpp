#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lobeq::csv {

/// Shortest round-trippable decimal rendering of a double. Infinities come
/// out as the literal tokens "inf" / "-inf".
inline std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format(long long v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(const std::string& v) { return v; }
inline std::string format(const char* v) { return v; }

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Comma-separated writer with a leading comment line carrying the config
/// hash and seed so outputs are attributable and reproducible.
class Writer {
public:
    Writer(const std::string& path, std::uint64_t config_hash, std::uint64_t seed)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(config_hash));
        out_ << "# config_hash=" << buf << " seed=" << seed << '\n';
    }

    void header(const std::vector<std::string>& names) { line(names); }

    template <typename... Ts>
    void row(const Ts&... vals) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, out_ << format(vals)), ...);
        out_ << '\n';
    }

    void comment(const std::string& text) { out_ << "# " << text << '\n'; }

private:
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::ofstream out_;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<double> numeric_column(const std::string& name) const {
        const int c = column_index(name);
        if (c < 0) throw std::runtime_error("csv: missing column " + name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(std::stod(r[c]));
        return out;
    }
};

/// Reads a CSV written by Writer: '#' lines are comments, the first data
/// line is the header.
inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (t.columns.empty())
            t.columns = std::move(cells);
        else
            t.rows.push_back(std::move(cells));
    }
    return t;
}

}  // namespace lobeq::csv
