#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace hairnet {

/// Line-based `key = value` configuration. `#` starts a comment.
/// Keys are checked against an allow-list when values are read through
/// require_known(), so typos surface as ConfigError.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    /// Values from `HAIRNET_<KEY>` environment variables replace file values.
    void apply_env_overrides(const std::set<std::string>& keys);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void require_known(const std::set<std::string>& known) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace hairnet
