#include "dermseg/config.hpp"

#include <fstream>
#include <stdexcept>

#include "dermseg/errors.hpp"

namespace dermseg {

namespace {

// key -> default; this table is the schema.
const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table = {
        {"fcm.c", "5"},
        {"fcm.m", "2.0"},
        {"fcm.tol", "1e-4"},
        {"fcm.max_iter", "100"},
        {"kmeans.k", "2"},
        {"kmeans.restarts", "10"},
        {"hair.enabled", "true"},
        {"hair.radius", "7"},
        {"hair.thresh", "0.04"},
        {"border.lum_thresh", "0.1"},
        {"unet.depth", "4"},
        {"unet.base_features", "16"},
        {"unet.dropout", "0.5"},
        {"unet.content_size", "250"},
        {"train.iterations", "10000"},
        {"train.lr", "0.0002"},
        {"train.augment", "true"},
        {"train.checkpoint_every", "1000"},
        {"eval.threshold_on_test", "false"},
        {"gaussian.fwhm", "125"},
    };
    return table;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config::Config() : values_(defaults()) {}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path.string());
    Config cfg;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        cfg.set_line(t);
    }
    return cfg;
}

void Config::set_line(const std::string& line) {
    auto eq = line.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("config: expected key=value, got '" + line + "'");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    if (!defaults().count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
    values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    return it->second;
}

int Config::get_int(const std::string& key) const {
    try {
        return std::stoi(get(key));
    } catch (const std::logic_error&) {
        throw std::invalid_argument("config: " + key + " is not an integer");
    }
}

double Config::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::logic_error&) {
        throw std::invalid_argument("config: " + key + " is not a number");
    }
}

uint64_t Config::get_u64(const std::string& key) const {
    try {
        return std::stoull(get(key));
    } catch (const std::logic_error&) {
        throw std::invalid_argument("config: " + key + " is not an unsigned integer");
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: " + key + " is not a boolean");
}

}  // namespace dermseg
