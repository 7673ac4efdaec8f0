#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "dermseg/tensor.hpp"

namespace dermseg {

// Named parameter tensors with matching gradient buffers. Iteration order is
// name-sorted, which keeps the serialized form canonical.
class ParamStore {
public:
    struct Entry {
        Tensor value;
        Tensor grad;
    };

    Tensor& create(const std::string& name, Tensor init);
    Tensor& value(const std::string& name);
    const Tensor& value(const std::string& name) const;
    Tensor& grad(const std::string& name);
    bool contains(const std::string& name) const { return entries_.count(name) > 0; }

    void zero_grad();
    size_t parameter_count() const;  // total scalar count
    size_t tensor_count() const { return entries_.size(); }

    std::map<std::string, Entry>& entries() { return entries_; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    // Flat binary: magic "DSEG1", then per parameter (sorted by name):
    // u32 name length, name bytes, u32 rank, u64 dims, little-endian f64 data.
    void save(const std::filesystem::path& path) const;
    static ParamStore load(const std::filesystem::path& path);

    bool operator==(const ParamStore& o) const;

private:
    std::map<std::string, Entry> entries_;
};

}  // namespace dermseg
