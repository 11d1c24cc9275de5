#include "imcdse/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "imcdse/errors.hpp"

namespace imcdse {

std::string fmt_num(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fmt_num(int64_t v) { return std::to_string(v); }

CsvWriter::CsvWriter(const std::string& path, const std::string& header) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    out_ << header << '\n';
}

CsvWriter& CsvWriter::col(double v) { return col(fmt_num(v)); }
CsvWriter& CsvWriter::col(int64_t v) { return col(fmt_num(v)); }

CsvWriter& CsvWriter::col(const std::string& s) {
    if (!first_) line_ += ',';
    line_ += s;
    first_ = false;
    return *this;
}

void CsvWriter::end_row() {
    line_ += '\n';
    out_ << line_;
    line_.clear();
    first_ = true;
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
}

static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') { out.push_back(cur); cur.clear(); }
        else if (c != '\r') cur += c;
    }
    out.push_back(cur);
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto r = split(line);
        if (r.size() != t.header.size())
            throw SchemaError(path + ": row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(r.size()) +
                              " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(r));
    }
    return t;
}

size_t CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw SchemaError("missing column '" + name + "'");
}

double CsvTable::num(size_t row, size_t col) const {
    const std::string& s = rows.at(row).at(col);
    if (s.empty()) return std::nan("");
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw SchemaError("not a number: '" + s + "'");
    return v;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

} // namespace imcdse
