#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chgat/autograd.hpp"
#include "chgat/error.hpp"

namespace chgat {

/// Named trainable parameter groups in registration order. Names are the
/// stable keys used by checkpoints and gradient checks.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    ad::Var var;
  };

  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  ad::Var add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (index_.count(name)) throw InvalidArgument("duplicate parameter name: " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back({name, ad::Var::parameter(rows, cols)});
    return entries_.back().var;
  }

  const ad::Var& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("no parameter named " + name);
    return entries_[it->second].var;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t group_count() const noexcept { return entries_.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.var.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) std::fill(e.var.mutable_grad().begin(), e.var.mutable_grad().end(), 0.0);
  }

  /// Parameters are stored at single precision; computation runs in double.
  void round_to_float() {
    for (auto& e : entries_)
      for (auto& x : e.var.mutable_value()) x = static_cast<double>(static_cast<float>(x));
  }

  using Snapshot = std::vector<std::vector<double>>;

  Snapshot snapshot() const {
    Snapshot s;
    s.reserve(entries_.size());
    for (const auto& e : entries_) s.push_back(e.var.value());
    return s;
  }

  void restore(const Snapshot& s) {
    if (s.size() != entries_.size()) throw ShapeMismatch("snapshot group count");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].size() != entries_[i].var.size()) throw ShapeMismatch("snapshot size of " + entries_[i].name);
      entries_[i].var.mutable_value() = s[i];
    }
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Uniform doubles in [0, 1) with a bit-exact definition independent of the
/// standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline void fill_uniform(ad::Var& v, double bound, std::mt19937_64& rng) {
  for (auto& x : v.mutable_value()) x = (2.0 * uniform01(rng) - 1.0) * bound;
}

inline void fill_constant(ad::Var& v, double value) {
  for (auto& x : v.mutable_value()) x = value;
}

}  // namespace chgat
