#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpe {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat "key = value" configuration; '#' starts a comment. Unknown keys are
// rejected against the caller-supplied registry.
class RunConfig {
public:
    explicit RunConfig(std::vector<std::string> known_keys);

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Every known key with its resolved value, one "key = value" per line.
    std::string resolved(const std::map<std::string, std::string>& defaults) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    void check_known(const std::string& key) const;
    std::vector<std::string> known_;
    std::map<std::string, std::string> values_;
};

}  // namespace gpe
