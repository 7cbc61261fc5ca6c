#include "gpe/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace gpe {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig(std::vector<std::string> known_keys) : known_(std::move(known_keys)) {}

void RunConfig::check_known(const std::string& key) const {
    if (std::find(known_.begin(), known_.end(), key) == known_.end())
        throw ConfigError("unknown config key: " + key);
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    check_known(key);
    values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::get_str(const std::string& key, const std::string& fallback) const {
    check_known(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_real(const std::string& key, double fallback) const {
    const std::string s = get_str(key, "");
    if (s.empty()) return fallback;
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size()) throw ConfigError("bad numeric value for " + key + ": " + s);
    return v;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const std::string s = get_str(key, "");
    if (s.empty()) return fallback;
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size()) throw ConfigError("bad integer value for " + key + ": " + s);
    return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    const std::string s = get_str(key, "");
    if (s.empty()) return fallback;
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw ConfigError("bad boolean value for " + key + ": " + s);
}

std::string RunConfig::resolved(const std::map<std::string, std::string>& defaults) const {
    std::ostringstream os;
    for (const std::string& key : known_) {
        const auto it = values_.find(key);
        if (it != values_.end()) {
            os << key << " = " << it->second << "\n";
        } else {
            const auto dit = defaults.find(key);
            os << key << " = " << (dit == defaults.end() ? "" : dit->second) << "\n";
        }
    }
    return os.str();
}

}  // namespace gpe
