#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pairfair {

/// Declarative key/value configuration shared by schema, match and run files.
///
/// One `key = value` per line; `#` starts a comment; blank lines are skipped;
/// keys keep their file order. List values are comma separated.
class KvConfig {
public:
    static KvConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KvConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;  // throws DataError when absent
    std::optional<std::string> find(const std::string& key) const;

    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // empty when absent

    /// Keys with the given prefix, in file order, prefix stripped.
    std::vector<std::pair<std::string, std::string>> with_prefix(const std::string& prefix) const;

    void set(const std::string& key, const std::string& value);

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    const std::string& origin() const noexcept { return origin_; }

    std::string serialize() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
    std::string origin_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s);
double parse_double(std::string_view s, const std::string& what);
long long parse_int(std::string_view s, const std::string& what);
bool parse_bool(std::string_view s, const std::string& what);

}  // namespace pairfair
