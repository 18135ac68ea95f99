#include "autodiff/parameters.hpp"

#include <fstream>
#include <stdexcept>

#include "common/binary_io.hpp"

namespace ffae::ad {

Value ParameterSet::add(std::string name, Tensor init) {
    Value v = parameter(std::move(init));
    add(std::move(name), v);
    return v;
}

void ParameterSet::add(std::string name, Value existing) {
    if (index_.contains(name)) throw std::invalid_argument("ParameterSet: duplicate parameter name " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(existing));
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

const Value& ParameterSet::at(std::string_view name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParameterSet: no parameter named " + std::string(name));
    return entries_[it->second].second;
}

Value& ParameterSet::at(std::string_view name) {
    return const_cast<Value&>(static_cast<const ParameterSet&>(*this).at(name));
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t total = 0;
    for (const auto& [name, v] : entries_) total += v.value().size();
    return total;
}

void ParameterSet::zero_grad() {
    for (auto& [name, v] : entries_) v.zero_grad();
}

void write_named_tensors(std::ostream& out, const std::vector<NamedTensor>& entries) {
    io::write_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        io::write_string(out, e.name);
        io::write_u32(out, 2);
        io::write_u32(out, static_cast<std::uint32_t>(e.tensor.rows()));
        io::write_u32(out, static_cast<std::uint32_t>(e.tensor.cols()));
        for (double v : e.tensor.data()) io::write_f64(out, v);
    }
}

std::vector<NamedTensor> read_named_tensors(std::istream& in) {
    const std::uint32_t count = io::read_u32(in);
    std::vector<NamedTensor> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor e;
        e.name = io::read_string(in);
        const std::uint32_t rank = io::read_u32(in);
        if (rank == 0 || rank > 2)
            throw std::runtime_error("named tensor " + e.name + ": unsupported rank " + std::to_string(rank));
        std::size_t rows = 1;
        std::size_t cols = io::read_u32(in);
        if (rank == 2) {
            rows = cols;
            cols = io::read_u32(in);
        }
        std::vector<double> data(rows * cols);
        for (double& v : data) v = io::read_f64(in);
        e.tensor = Tensor(rows, cols, std::move(data));
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_parameters(const std::filesystem::path& path, const ParameterSet& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    std::vector<NamedTensor> entries;
    entries.reserve(params.size());
    for (const auto& [name, v] : params) entries.push_back({name, v.value()});
    io::write_magic(out, "FFCK");
    write_named_tensors(out, entries);
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

void load_parameters(const std::filesystem::path& path, ParameterSet& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
    io::expect_magic(in, "FFCK", path.string());
    auto entries = read_named_tensors(in);
    if (entries.size() != params.size())
        throw std::runtime_error("checkpoint " + path.string() + " holds " + std::to_string(entries.size()) +
                                 " tensors, model expects " + std::to_string(params.size()));
    for (auto& e : entries) {
        if (!params.contains(e.name)) throw std::runtime_error("checkpoint has unknown parameter " + e.name);
        Value& p = params.at(e.name);
        if (!p.value().same_shape(e.tensor))
            throw std::runtime_error("checkpoint parameter " + e.name + " has shape " + e.tensor.shape_string() +
                                     ", model expects " + p.value().shape_string());
        p.mutable_value() = std::move(e.tensor);
    }
}

}  // namespace ffae::ad
