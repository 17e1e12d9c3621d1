#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rewarddance {

namespace {

constexpr int kMaxIncludeDepth = 16;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Config, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

} // namespace

Config Config::load(const std::filesystem::path& path)
{
    Config cfg;
    cfg.parse_into(read_file(path), path.string(), path.parent_path(), 0);
    return cfg;
}

Config Config::parse(const std::string& text, const std::string& source_name)
{
    Config cfg;
    cfg.parse_into(text, source_name, std::filesystem::current_path(), 0);
    return cfg;
}

void Config::parse_into(const std::string& text, const std::string& source_name,
                        const std::filesystem::path& base_dir, int depth)
{
    require(depth < kMaxIncludeDepth, ErrorCode::Config, source_name + ": include nesting too deep");
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (line.rfind("include", 0) == 0 && (line.size() == 7 || line[7] == ' ' || line[7] == '\t')) {
            const std::string target = trim(line.substr(7));
            require(!target.empty(), ErrorCode::Config, where + ": include needs a path");
            const std::filesystem::path inc = base_dir / target;
            parse_into(read_file(inc), inc.string(), inc.parent_path(), depth + 1);
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCode::Config, where + ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), ErrorCode::Config, where + ": empty key");
        set(key, trim(line.substr(eq + 1)), where);
    }
}

void Config::set(const std::string& key, const std::string& value, const std::string& origin)
{
    entries_[key] = Entry { value, origin };
}

std::optional<std::string> Config::find(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second.value;
}

void Config::invalid(const std::string& key, const std::string& why) const
{
    auto it = entries_.find(key);
    const std::string origin = it == entries_.end() ? std::string("<default>") : it->second.origin;
    fail(ErrorCode::Config, origin + ": field '" + key + "': " + why);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    return find(key).value_or(fallback);
}

std::string Config::require_string(const std::string& key) const
{
    auto v = find(key);
    if (!v) {
        fail(ErrorCode::Config, "missing required field '" + key + "'");
    }
    return *v;
}

double Config::get_double(const std::string& key, double fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) {
            invalid(key, "trailing characters in number '" + *v + "'");
        }
        return d;
    } catch (const std::logic_error&) {
        invalid(key, "expected a number, got '" + *v + "'");
    }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
        invalid(key, "expected an integer, got '" + *v + "'");
    }
    return out;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
        invalid(key, "expected a non-negative integer, got '" + *v + "'");
    }
    return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
        return false;
    }
    invalid(key, "expected a boolean, got '" + *v + "'");
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key, const std::vector<std::int64_t>& fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    std::vector<std::int64_t> out;
    for (const auto& item : split_list(*v)) {
        std::int64_t x = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (ec != std::errc() || ptr != item.data() + item.size()) {
            invalid(key, "expected a comma-separated integer list, got '" + *v + "'");
        }
        out.push_back(x);
    }
    return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key, const std::vector<std::string>& fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    return split_list(*v);
}

std::string Config::dump() const
{
    std::ostringstream out;
    for (const auto& [k, e] : entries_) {
        out << k << " = " << e.value << '\n';
    }
    return out.str();
}

} // namespace rewarddance
