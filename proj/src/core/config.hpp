#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace rewarddance {

// Plain `key = value` configuration. Lines starting with '#' are comments and
// `include <path>` splices another file (relative to the including file).
// Later assignments override earlier ones. Every value remembers where it
// came from so that diagnostics can name the file, line and field.
class Config {
public:
    struct Entry {
        std::string value;
        std::string origin; // "file:line" or "<set>"
    };

    static Config load(const std::filesystem::path& path);
    static Config parse(const std::string& text, const std::string& source_name = "<string>");

    void set(const std::string& key, const std::string& value, const std::string& origin = "<set>");
    bool contains(const std::string& key) const { return entries_.contains(key); }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    std::optional<std::string> find(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::int64_t> get_int_list(const std::string& key, const std::vector<std::int64_t>& fallback) const;
    std::vector<std::string> get_string_list(const std::string& key, const std::vector<std::string>& fallback) const;

    // Deterministic `key = value` snapshot, sorted by key.
    std::string dump() const;

    // Throws a Config error naming the origin of `key`.
    [[noreturn]] void invalid(const std::string& key, const std::string& why) const;

private:
    void parse_into(const std::string& text, const std::string& source_name,
                    const std::filesystem::path& base_dir, int depth);

    std::map<std::string, Entry> entries_;
};

} // namespace rewarddance
