#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace dermseg {

// Flat key=value configuration. Every module key is addressable as
// "module.key"; unknown keys are rejected so typos cannot silently fall back
// to defaults. The effective values (defaults overlaid with overrides) are
// what run manifests echo.
class Config {
public:
    Config();

    static Config load(const std::filesystem::path& path);

    // "key=value" text, e.g. from a --set flag.
    void set_line(const std::string& line);
    void set(const std::string& key, const std::string& value);

    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    const std::string& get(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace dermseg
