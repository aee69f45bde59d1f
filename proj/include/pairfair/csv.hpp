#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pairfair::csv {

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends,
/// embedded newlines inside quotes. Unquoted fields are whitespace-trimmed.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record; false at end of input. `line` is the 1-based physical line
    /// on which the record started.
    bool next(std::vector<std::string>& fields, std::size_t& line);

private:
    std::istream& in_;
    std::size_t line_ = 1;
};

std::string escape(const std::string& field);
std::string join(const std::vector<std::string>& fields);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace pairfair::csv
