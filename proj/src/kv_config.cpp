#include "pairfair/kv_config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pairfair/error.hpp"

namespace pairfair {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view s, const std::string& what) {
    const std::string t = trim(s);
    if (t.empty()) throw DataError(what + ": empty numeric value");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
        throw DataError(what + ": cannot parse '" + t + "' as a finite number");
    }
    return v;
}

long long parse_int(std::string_view s, const std::string& what) {
    const std::string t = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw DataError(what + ": cannot parse '" + t + "' as an integer");
    }
    return v;
}

bool parse_bool(std::string_view s, const std::string& what) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw DataError(what + ": expected true/false, got '" + t + "'");
}

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw DataError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.has(key)) throw DataError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.set(key, trim(std::string_view(t).substr(eq + 1)));
    }
    return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

bool KvConfig::has(const std::string& key) const { return index_.count(key) != 0; }

const std::string& KvConfig::get(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) throw DataError(origin_ + ": missing required key '" + key + "'");
    return entries_[it->second].second;
}

std::optional<std::string> KvConfig::find(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].second;
}

std::string KvConfig::get_or(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    const auto v = find(key);
    return v ? parse_double(*v, origin_ + ": " + key) : fallback;
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
    const auto v = find(key);
    return v ? parse_int(*v, origin_ + ": " + key) : fallback;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    const auto v = find(key);
    return v ? parse_bool(*v, origin_ + ": " + key) : fallback;
}

std::vector<std::string> KvConfig::get_list(const std::string& key) const {
    const auto v = find(key);
    return v ? split_list(*v) : std::vector<std::string>{};
}

std::vector<std::pair<std::string, std::string>> KvConfig::with_prefix(const std::string& prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : entries_) {
        if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) {
            out.emplace_back(k.substr(prefix.size()), v);
        }
    }
    return out;
}

void KvConfig::set(const std::string& key, const std::string& value) {
    const auto it = index_.find(key);
    if (it != index_.end()) {
        entries_[it->second].second = value;
        return;
    }
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
}

std::string KvConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

}  // namespace pairfair
