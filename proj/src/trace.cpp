#include "ldi/trace.hpp"
#include "ldi/errors.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ldi {

int Trace::column_index(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

const std::vector<double>& Trace::column(const std::string& name) const {
    int i = column_index(name);
    if (i < 0) throw InvalidInput("trace has no column named " + name);
    return cols[i];
}

std::vector<double>& Trace::add_column(const std::string& name) {
    names.push_back(name);
    cols.emplace_back();
    return cols.back();
}

std::string format_csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

void Trace::write_csv(std::ostream& os) const {
    os << "t_s";
    for (const auto& n : names) os << ',' << n;
    os << '\n';
    for (size_t k = 0; k < t.size(); ++k) {
        os << format_csv_number(t[k]);
        for (const auto& c : cols) os << ',' << format_csv_number(c[k]);
        os << '\n';
    }
}

void Trace::write_csv_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary); // binary: keep LF endings everywhere
    if (!f) throw CsvError("cannot open for writing: " + path);
    write_csv(f);
    if (!f) throw CsvError("short write: " + path);
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, const std::string& path, size_t lineno) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw CsvError(path + ":" + std::to_string(lineno) +
                       ": not a number: '" + s + "'");
    }
}
} // namespace

Trace Trace::read_csv_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CsvError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw CsvError(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "t_s")
        throw CsvError(path + ": first column must be t_s");
    Trace tr;
    tr.names.assign(header.begin() + 1, header.end());
    tr.cols.resize(tr.names.size());
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw CsvError(path + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
        tr.t.push_back(parse_number(cells[0], path, lineno));
        for (size_t i = 1; i < cells.size(); ++i)
            tr.cols[i - 1].push_back(parse_number(cells[i], path, lineno));
    }
    if (tr.t.empty()) throw CsvError(path + ": no data rows");
    return tr;
}

} // namespace ldi
