#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace relugd {

namespace {

// every key the tool understands; anything else is a config error
const std::set<std::string>& schema() {
    static const std::set<std::string> keys = {
        "instance.family",       "instance.d",
        "instance.teacher_norm", "instance.b_v",
        "instance.teacher_seed", "instance.label_model",
        "instance.noise_std",    "instance.noise_half_width",
        "instance.mix_prob",     "instance.flip_radius",
        "instance.flip_magnitude", "instance.clip_bound",
        "instance.c1",           "instance.c2",
        "gd.c_eta",              "gd.t_max",
        "gd.grad_source",        "gd.grad_mc_n",
        "gd.train_n",            "gd.holdout_n",
        "gd.eps",                "gd.quad_nodes",
        "gd.select_stride",
        "init.mode",             "init.beta",
        "init.m",                "init.restarts",
        "init.delta",            "init.c3",
        "init.trials",           "init.d_list",
        "init.b_v_list",
        "sweep.d_list",          "sweep.opt_list",
        "sweep.b_v_list",        "sweep.family_list",
        "sweep.replicates",
        "lemmas.points",         "lemmas.mc_n",
        "regularity.trials",     "regularity.n",
        "regularity.family_list",
        "output.dir",            "output.write_trajectories",
        "run.master_seed",       "run.jobs",
    };
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_string(os.str());
}

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no);
        const std::string full = section + "." + key;
        if (!schema().count(full))
            throw ConfigError("unknown key '" + key + "' in section [" + section + "]", line_no);
        if (cfg.entries_.count(full))
            throw ConfigError("duplicate key '" + key + "' in section [" + section + "]", line_no);
        cfg.entries_[full] = {value, line_no};
    }
    return cfg;
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    const auto it = entries_.find(section + "." + key);
    return it == entries_.end() ? nullptr : &it->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

std::string Config::require_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError("missing required key '" + key + "' in section [" + section + "]");
    return e->value;
}

namespace {

double parse_real(const std::string& value, const std::string& full, int line) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("'" + full + "' expects a real number, got '" + value + "'", line);
    return x;
}

long long parse_int(const std::string& value, const std::string& full, int line) {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("'" + full + "' expects an integer, got '" + value + "'", line);
    return x;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

} // namespace

double Config::get_real(const std::string& section, const std::string& key,
                        double fallback) const {
    const Entry* e = find(section, key);
    return e ? parse_real(e->value, section + "." + key, e->line) : fallback;
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
    const Entry* e = find(section, key);
    return e ? parse_int(e->value, section + "." + key, e->line) : fallback;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(e->value.c_str(), &end, 10);
    if (end == e->value.c_str() || *end != '\0' || errno == ERANGE ||
        e->value.find('-') != std::string::npos)
        throw ConfigError("'" + section + "." + key + "' expects an unsigned integer, got '" +
                              e->value + "'",
                          e->line);
    return static_cast<std::uint64_t>(x);
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw ConfigError("'" + section + "." + key + "' expects a boolean, got '" + e->value + "'",
                      e->line);
}

std::vector<double> Config::get_real_list(const std::string& section, const std::string& key,
                                          std::vector<double> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(e->value))
        out.push_back(parse_real(item, section + "." + key, e->line));
    if (out.empty())
        throw ConfigError("'" + section + "." + key + "' expects a nonempty list", e->line);
    return out;
}

std::vector<long long> Config::get_int_list(const std::string& section, const std::string& key,
                                            std::vector<long long> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<long long> out;
    for (const auto& item : split_list(e->value))
        out.push_back(parse_int(item, section + "." + key, e->line));
    if (out.empty())
        throw ConfigError("'" + section + "." + key + "' expects a nonempty list", e->line);
    return out;
}

std::vector<std::string> Config::get_string_list(const std::string& section,
                                                 const std::string& key,
                                                 std::vector<std::string> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    auto out = split_list(e->value);
    if (out.empty())
        throw ConfigError("'" + section + "." + key + "' expects a nonempty list", e->line);
    return out;
}

std::string Config::get_choice(const std::string& section, const std::string& key,
                               const std::string& fallback,
                               const std::vector<std::string>& allowed) const {
    const Entry* e = find(section, key);
    const std::string value = e ? e->value : fallback;
    if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
        std::string opts;
        for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
        throw ConfigError("'" + section + "." + key + "' must be one of " + opts + ", got '" +
                              value + "'",
                          e ? e->line : 0);
    }
    return value;
}

} // namespace relugd
