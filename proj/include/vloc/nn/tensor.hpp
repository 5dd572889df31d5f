#pragma once

#include <array>
#include <map>
#include <string>

#include <Eigen/Core>

#include "vloc/common/error.hpp"

namespace vloc::nn {

/// Dense row-major 2-D tensor. Vectors are 1×n or n×1.
template <typename T>
using Tensor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
std::array<Eigen::Index, 2> shape(const Tensor<T>& t) {
    return {t.rows(), t.cols()};
}

/// Named parameters, iterated in lexicographic name order.
template <typename T>
class ParamStore {
  public:
    using Map = std::map<std::string, Tensor<T>, std::less<>>;
    using value_type = T;

    Tensor<T>& add(const std::string& name, Tensor<T> value) {
        auto [it, inserted] = params_.emplace(name, std::move(value));
        if (!inserted) throw Error("DuplicateParameter", name);
        return it->second;
    }

    Tensor<T>& at(std::string_view name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw Error("UnknownParameter", std::string(name));
        return it->second;
    }
    const Tensor<T>& at(std::string_view name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw Error("UnknownParameter", std::string(name));
        return it->second;
    }
    bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }

    std::size_t size() const { return params_.size(); }
    std::size_t num_values() const {
        std::size_t n = 0;
        for (const auto& [k, v] : params_) n += static_cast<std::size_t>(v.size());
        return n;
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& [k, v] : params_) out.add(k, v.template cast<U>());
        return out;
    }

    friend bool operator==(const ParamStore& a, const ParamStore& b) {
        if (a.params_.size() != b.params_.size()) return false;
        auto ib = b.params_.begin();
        for (const auto& [k, v] : a.params_) {
            if (k != ib->first || v.rows() != ib->second.rows() || v.cols() != ib->second.cols() ||
                !(v.array() == ib->second.array()).all())
                return false;
            ++ib;
        }
        return true;
    }

  private:
    Map params_;
};

template <typename T>
using GradStore = std::map<std::string, Tensor<T>, std::less<>>;

} // namespace vloc::nn
