#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logitnets {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 2;
inline constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value text; '#' starts a comment, blank lines are skipped.
class Config {
public:
    static Config parse(std::string_view text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    // All getters throw UsageError naming the key when it is missing or malformed.
    const std::string& str(const std::string& key) const;
    double num(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::vector<std::string> list(const std::string& key) const;  // comma separated
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    const std::map<std::string, std::string>& values() const { return values_; }
    // Canonical "key=value\n" lines in key order; the config hash is taken over this.
    std::string canonical() const;

private:
    std::map<std::string, std::string> values_;
};

struct Manifest {
    std::string command;
    std::string config_hash;  // FNV-1a, 16 hex digits
    std::uint64_t seed = 0;
    std::string started, finished;  // UTC, ISO 8601
    std::vector<std::string> outputs;
    long long checks = 0, failures = 0;
    bool passed = false;

    std::string json() const;
};

// Entry point behind the logitnets executable. Returns the process exit code.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace logitnets
