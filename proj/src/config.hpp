#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace relugd {

// Configuration problems carry the offending line when known; they map to CLI
// exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    int line_number;
};

// Flat typed key-value format with [section] headers. '#' starts a comment,
// keys are 'name = value'. Keys outside the known schema are hard errors.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::string require_string(const std::string& section, const std::string& key) const;

    double get_real(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    // comma-separated lists
    std::vector<double> get_real_list(const std::string& section, const std::string& key,
                                      std::vector<double> fallback) const;
    std::vector<long long> get_int_list(const std::string& section, const std::string& key,
                                        std::vector<long long> fallback) const;
    std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                             std::vector<std::string> fallback) const;

    // value must be one of `allowed`, else ConfigError with the key's line
    std::string get_choice(const std::string& section, const std::string& key,
                           const std::string& fallback,
                           const std::vector<std::string>& allowed) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries_;  // "section.key"

    const Entry* find(const std::string& section, const std::string& key) const;
};

} // namespace relugd
