#pragma once

#include <string>
#include <vector>

#include "flowrl/common.hpp"

namespace flowrl {

// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

// Lossless hex-float form ("1.8p+1" style) and its inverse.
std::string format_double_hex(double x);
double parse_double_hex(const std::string& s);

// Strict decimal parse: the whole string must be consumed.
double parse_double(const std::string& s);
long parse_long(const std::string& s);

std::vector<std::string> split_csv_line(const std::string& line);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// UTC timestamp, e.g. "2026-08-19T12:00:00Z".
std::string timestamp_utc();

// Appends rows to an in-memory CSV document; caller writes it out in one go
// so reruns are byte-comparable.
class CsvDoc {
public:
    explicit CsvDoc(const std::string& header);
    void row(const std::vector<std::string>& fields);
    const std::string& text() const { return text_; }
    void save(const std::string& path) const;

private:
    std::string text_;
    std::size_t cols_;
};

}  // namespace flowrl
