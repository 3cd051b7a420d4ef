#pragma once

#include <string>
#include <vector>

namespace griddispatch::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
    double num(std::size_t row, int col) const;
};

// Reads a comma-separated file with a mandatory header row. Throws
// std::runtime_error on missing file or ragged rows.
Table read_file(const std::string& path);
Table parse(const std::string& text);

// Fixed "%.10g" formatting keeps emitted files byte-stable across runs.
std::string format_num(double v);

class Writer {
public:
    explicit Writer(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& cells);
    std::string str() const;
    // Atomic: writes to <path>.tmp then renames over path.
    void write_file(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text_atomic(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

} // namespace griddispatch::csv
