#include "latte/params.hpp"

#include <algorithm>

namespace latte {

void ParamStore::add(std::string name, Tensor t) {
    if (has(name)) throw ValidationError("ParamStore: duplicate parameter '" + name + "'");
    entries_.emplace_back(std::move(name), std::move(t));
}

bool ParamStore::has(std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == name; });
}

const Tensor& ParamStore::at(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.first == name) return e.second;
    throw ValidationError("ParamStore: unknown parameter '" + std::string(name) + "'");
}

Tensor& ParamStore::at(std::string_view name) {
    for (auto& e : entries_)
        if (e.first == name) return e.second;
    throw ValidationError("ParamStore: unknown parameter '" + std::string(name) + "'");
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
}

ParamStore ParamStore::watch_all(Tape& tape) const {
    ParamStore out;
    out.entries_ = entries_;
    for (auto& e : out.entries_) {
        e.second.tape = nullptr;
        e.second.node = -1;
        tape.watch(e.second);
    }
    return out;
}

std::vector<double> ParamStore::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_size());
    for (const auto& e : entries_) flat.insert(flat.end(), e.second.data.begin(), e.second.data.end());
    return flat;
}

void ParamStore::unflatten(const std::vector<double>& flat) {
    if (flat.size() != total_size())
        throw ValidationError("ParamStore: flat vector length " + std::to_string(flat.size()) +
                              " does not match parameter count " + std::to_string(total_size()));
    std::size_t off = 0;
    for (auto& e : entries_) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), e.second.size(),
                    e.second.data.begin());
        off += e.second.size();
    }
}

std::vector<double> ParamStore::flat_grad(const Gradients& g) const {
    std::vector<double> flat;
    flat.reserve(total_size());
    for (const auto& e : entries_) {
        const auto& gb = g.at(e.second);
        flat.insert(flat.end(), gb.begin(), gb.end());
    }
    return flat;
}

std::size_t ParamStore::size_of_prefix(std::string_view prefix) const {
    std::size_t n = 0;
    for (const auto& e : entries_)
        if (e.first.size() >= prefix.size() && e.first.compare(0, prefix.size(), prefix) == 0)
            n += e.second.size();
    return n;
}

}  // namespace latte
