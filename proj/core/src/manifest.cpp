#include "dermseg/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "dermseg/errors.hpp"

namespace dermseg {

uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path.string());
    uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<uint8_t>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

void Manifest::set_double(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    entries_[key] = buf;
}

void Manifest::add_artifact(const std::filesystem::path& path, const std::string& name) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(path)));
    entries_["hash." + name] = buf;
}

void Manifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    for (const auto& [key, value] : entries_) out << key << "=" << value << "\n";
}

}  // namespace dermseg
