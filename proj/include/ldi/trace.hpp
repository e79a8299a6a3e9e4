#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ldi {

// Columnar time-series record: a shared time axis plus named value columns
// (probe currents, the stimulus level, node voltages).
struct Trace {
    std::vector<double> t;                    // seconds
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;    // parallel to names, same length as t

    size_t size() const { return t.size(); }
    int column_index(const std::string& name) const;        // -1 if absent
    const std::vector<double>& column(const std::string& name) const; // throws InvalidInput
    std::vector<double>& add_column(const std::string& name);

    // Header "t_s,<names...>", 15 significant digits, LF endings.
    void write_csv(std::ostream& os) const;
    void write_csv_file(const std::string& path) const;

    // Inverse of write_csv; first column must be t_s. Throws CsvError.
    static Trace read_csv_file(const std::string& path);
};

// Shared numeric formatting for every CSV the tool writes: shortest form
// with up to 15 significant digits (deterministic across runs).
std::string format_csv_number(double v);

} // namespace ldi
