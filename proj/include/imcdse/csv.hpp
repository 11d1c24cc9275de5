#pragma once
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace imcdse {

// shortest round-trip text; NaN becomes an empty field
std::string fmt_num(double v);
std::string fmt_num(int64_t v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header);
    CsvWriter& col(double v);
    CsvWriter& col(int64_t v);
    CsvWriter& col(int v) { return col(int64_t(v)); }
    CsvWriter& col(const std::string& s);
    void end_row();
    void close();

private:
    std::ofstream out_;
    std::string path_;
    std::string line_;
    bool first_ = true;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    size_t column(const std::string& name) const; // throws SchemaError
    double num(size_t row, size_t col) const;     // empty -> NaN
};

CsvTable read_csv(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

} // namespace imcdse
