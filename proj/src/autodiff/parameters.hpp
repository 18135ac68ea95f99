#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autodiff/value.hpp"

namespace ffae::ad {

// Named trainable values, iterated in insertion order.
class ParameterSet {
public:
    using Entry = std::pair<std::string, Value>;

    Value add(std::string name, Tensor init);
    void add(std::string name, Value existing);

    bool contains(std::string_view name) const;
    const Value& at(std::string_view name) const;
    Value& at(std::string_view name);

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t scalar_count() const;
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }

    void zero_grad();

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

// "FFCK" container: u32 count, then per entry u32 name length, name,
// u32 rank, u32 dims, float64 payload. Little-endian throughout.
void write_named_tensors(std::ostream& out, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> read_named_tensors(std::istream& in);

void save_parameters(const std::filesystem::path& path, const ParameterSet& params);
// Loads by name into existing parameters; every parameter must be present
// with a matching shape.
void load_parameters(const std::filesystem::path& path, ParameterSet& params);

}  // namespace ffae::ad
