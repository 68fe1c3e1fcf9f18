#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scenegnn/error.hpp"
#include "scenegnn/tensor.hpp"

namespace scenegnn::nn {

/// Named trainable tensors, iterated in insertion order.
class ParameterStore {
 public:
  using Entry = std::pair<std::string, Tensor>;

  Tensor& add(const std::string& name, Tensor t) {
    if (index_.contains(name)) throw Error(ErrorKind::InvalidConfig, "duplicate parameter '" + name + "'");
    t.set_requires_grad(true);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(t));
    return entries_.back().second;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const Tensor& get(const std::string& name) const { return entries_.at(lookup(name)).second; }
  Tensor& get(const std::string& name) { return entries_.at(lookup(name)).second; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : entries_) t.zero_grad();
  }

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    for (const auto& [_, t] : entries_) out.push_back(t);
    return out;
  }

  /// Independent copy of every tensor.
  ParameterStore clone() const {
    ParameterStore out;
    for (const auto& [name, t] : entries_) out.add(name, t.clone());
    return out;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorKind::InvalidConfig, "unknown parameter '" + name + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::size_t param_count(const ParameterStore& store) { return store.element_count(); }

}  // namespace scenegnn::nn
