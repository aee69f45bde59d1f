#include "pairfair/csv.hpp"

#include <fmt/format.h>

#include <fstream>
#include <istream>
#include <sstream>

#include "pairfair/error.hpp"
#include "pairfair/kv_config.hpp"

namespace pairfair::csv {

bool Reader::next(std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    line = line_;

    std::string field;
    bool quoted = false;      // field started with a quote
    bool in_quotes = false;
    bool any = false;
    auto finish_field = [&] {
        fields.push_back(quoted ? field : trim(field));
        field.clear();
        quoted = false;
    };

    for (; c != EOF; c = in_.get()) {
        any = true;
        const char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line_;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && trim(field).empty() && !quoted) {
            field.clear();
            quoted = true;
            in_quotes = true;
        } else if (ch == ',') {
            finish_field();
        } else if (ch == '\r') {
            if (in_.peek() == '\n') in_.get();
            ++line_;
            break;
        } else if (ch == '\n') {
            ++line_;
            break;
        } else if (!quoted) {
            field.push_back(ch);
        } else if (ch != ' ' && ch != '\t') {
            throw DataError(fmt::format("line {}: characters after closing quote", line));
        }
    }
    if (in_quotes) throw DataError(fmt::format("line {}: unterminated quoted field", line));
    if (any) finish_field();
    return true;
}

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos && trim(field) == field) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += "\"";
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

std::string format_double(double v) { return fmt::format("{}", v); }

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace pairfair::csv
