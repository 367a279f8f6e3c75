#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace bc {

// Dense bitset over a fixed universe. Sets of H, H^2 and H^3 all live here.
class Bits {
 public:
  Bits() = default;
  explicit Bits(std::size_t n, bool fill = false)
      : n_(n), w_((n + 63) / 64, fill ? ~0ULL : 0ULL) {
    trim();
  }

  std::size_t size() const { return n_; }
  bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1ULL; }
  bool operator[](std::size_t i) const { return test(i); }
  void set(std::size_t i, bool v = true) {
    if (v)
      w_[i >> 6] |= 1ULL << (i & 63);
    else
      w_[i >> 6] &= ~(1ULL << (i & 63));
  }
  void reset(std::size_t i) { set(i, false); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : w_) c += std::popcount(w);
    return c;
  }
  bool none() const {
    for (auto w : w_)
      if (w) return false;
    return true;
  }
  bool any() const { return !none(); }
  bool all() const { return count() == n_; }

  std::size_t and_count(const Bits& o) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < w_.size(); ++i) c += std::popcount(w_[i] & o.w_[i]);
    return c;
  }
  bool subset_of(const Bits& o) const {
    for (std::size_t i = 0; i < w_.size(); ++i)
      if (w_[i] & ~o.w_[i]) return false;
    return true;
  }
  bool intersects(const Bits& o) const {
    for (std::size_t i = 0; i < w_.size(); ++i)
      if (w_[i] & o.w_[i]) return true;
    return false;
  }

  Bits& operator&=(const Bits& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
    return *this;
  }
  Bits& operator|=(const Bits& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
    return *this;
  }
  Bits& operator^=(const Bits& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
    return *this;
  }
  // set difference
  Bits& operator-=(const Bits& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i];
    return *this;
  }
  friend Bits operator&(Bits a, const Bits& b) { return a &= b; }
  friend Bits operator|(Bits a, const Bits& b) { return a |= b; }
  friend Bits operator^(Bits a, const Bits& b) { return a ^= b; }
  friend Bits operator-(Bits a, const Bits& b) { return a -= b; }
  Bits operator~() const {
    Bits r = *this;
    for (auto& w : r.w_) w = ~w;
    r.trim();
    return r;
  }
  bool operator==(const Bits& o) const { return n_ == o.n_ && w_ == o.w_; }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < w_.size(); ++k) {
      std::uint64_t w = w_[k];
      while (w) {
        int b = std::countr_zero(w);
        f(k * 64 + static_cast<std::size_t>(b));
        w &= w - 1;
      }
    }
  }
  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> r;
    r.reserve(count());
    for_each([&](std::size_t i) { r.push_back(i); });
    return r;
  }
  std::vector<double> as_function() const {
    std::vector<double> r(n_, 0.0);
    for_each([&](std::size_t i) { r[i] = 1.0; });
    return r;
  }
  const std::vector<std::uint64_t>& words() const { return w_; }

 private:
  void trim() {
    if (n_ % 64 && !w_.empty()) w_.back() &= (1ULL << (n_ % 64)) - 1;
  }
  std::size_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace bc
