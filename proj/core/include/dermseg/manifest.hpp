#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace dermseg {

// FNV-1a over the file bytes; used to fingerprint run artifacts.
uint64_t fnv1a64_file(const std::filesystem::path& path);

// Sorted key=value record of a command run: configuration, seed, and the
// hashes of everything it wrote. Reruns with equal settings produce equal
// manifests.
class Manifest {
public:
    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    void set(const std::string& key, int64_t value) { entries_[key] = std::to_string(value); }
    void set(const std::string& key, uint64_t value) { entries_[key] = std::to_string(value); }
    void set_double(const std::string& key, double value);

    // "hash.<name>=<fnv64 hex>"
    void add_artifact(const std::filesystem::path& path, const std::string& name);

    void write(const std::filesystem::path& path) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace dermseg
