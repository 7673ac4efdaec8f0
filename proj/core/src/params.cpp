#include "dermseg/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dermseg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "ParamStore serialization assumes a little-endian host");

namespace dermseg {

namespace {
constexpr char kMagic[5] = {'D', 'S', 'E', 'G', '1'};
}

Tensor& ParamStore::create(const std::string& name, Tensor init) {
    if (entries_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    Entry e;
    e.grad = Tensor(init.shape, 0.0);
    e.value = std::move(init);
    return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParamStore::value(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second.value;
}

const Tensor& ParamStore::value(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second.value;
}

Tensor& ParamStore::grad(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second.grad;
}

void ParamStore::zero_grad() {
    for (auto& [name, e] : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

size_t ParamStore::parameter_count() const {
    size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.numel();
    return n;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void ParamStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write parameter file: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    for (const auto& [name, e] : entries_) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(e.value.rank()));
        for (int d : e.value.shape) write_pod<uint64_t>(out, static_cast<uint64_t>(d));
        out.write(reinterpret_cast<const char*>(e.value.data.data()),
                  static_cast<std::streamsize>(e.value.data.size() * sizeof(double)));
    }
    if (!out) throw IoError("short write: " + path.string());
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open parameter file: " + path.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not a DSEG1 parameter file: " + path.string());
    }
    ParamStore store;
    while (true) {
        uint32_t name_len = read_pod<uint32_t>(in);
        if (in.eof()) break;
        if (!in || name_len > 4096) throw IoError("corrupt parameter file: " + path.string());
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        uint32_t rank = read_pod<uint32_t>(in);
        if (!in || rank > 8) throw IoError("corrupt parameter file: " + path.string());
        std::vector<int> shape(rank);
        for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(read_pod<uint64_t>(in));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw IoError("truncated parameter file: " + path.string());
        store.create(name, std::move(t));
    }
    return store;
}

bool ParamStore::operator==(const ParamStore& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (const auto& [name, e] : entries_) {
        auto it = o.entries_.find(name);
        if (it == o.entries_.end()) return false;
        if (e.value.shape != it->second.value.shape || e.value.data != it->second.value.data) {
            return false;
        }
    }
    return true;
}

}  // namespace dermseg
