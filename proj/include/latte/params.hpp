#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latte/tensor.hpp"

namespace latte {

/// Ordered collection of named learnable tensors. Insertion order is the
/// canonical order for flattening, optimizer state, and checkpoints.
/// Names follow "module.local" (e.g. "emsa.g0.conv1_w", "maa.w_mk").
class ParamStore {
public:
    void add(std::string name, Tensor t);
    bool has(std::string_view name) const;
    const Tensor& at(std::string_view name) const;
    Tensor& at(std::string_view name);

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
    std::size_t total_size() const;

    /// Copies with every tensor registered as a leaf on `tape`.
    ParamStore watch_all(Tape& tape) const;

    /// Canonical flat views (entry order, row-major within each tensor).
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);

    /// Flat gradient in the same canonical order; valid on a store whose
    /// tensors were watched on the tape that produced `g`.
    std::vector<double> flat_grad(const Gradients& g) const;

    /// Sum of entry sizes for names starting with `prefix`.
    std::size_t size_of_prefix(std::string_view prefix) const;

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace latte
