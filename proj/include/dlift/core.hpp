#pragma once

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlift/errors.hpp"

namespace dlift {

inline constexpr int kMaxDim = 24;

// Labels are +1 / -1.
using Label = int;
inline constexpr Label kPlus = 1;
inline constexpr Label kMinus = -1;

// A point of {+1,-1}^n. Bit i of `bits` is set iff x_i = +1, so `bits` is
// also the point's index into a dense PMF.
class Point {
 public:
  Point() = default;
  Point(int n, std::uint32_t bits);

  static Point parse(std::string_view text);  // "+-+" style

  int dim() const noexcept { return n_; }
  std::uint32_t bits() const noexcept { return bits_; }
  Label operator[](int i) const noexcept { return (bits_ >> i) & 1u ? kPlus : kMinus; }

  std::string encode() const;

  friend bool operator==(const Point&, const Point&) = default;

 private:
  int n_ = 0;
  std::uint32_t bits_ = 0;
};

// A pattern in {+1,-1,*}^n. `fixed` marks non-* coordinates; `values` holds
// the +1 coordinates among them.
class Restriction {
 public:
  Restriction() = default;
  Restriction(int n, std::uint32_t fixed, std::uint32_t values);

  static Restriction all(int n);
  static Restriction parse(std::string_view text);  // "+-*" style
  // The depth-n restriction that pins every coordinate to x.
  static Restriction of_point(const Point& x);

  int dim() const noexcept { return n_; }
  int depth() const noexcept { return std::popcount(fixed_); }
  std::uint32_t fixed() const noexcept { return fixed_; }
  std::uint32_t values() const noexcept { return values_; }
  std::uint32_t free_mask() const noexcept { return full_mask() & ~fixed_; }
  bool is_free(int i) const noexcept { return ((fixed_ >> i) & 1u) == 0; }
  // 0 for a free coordinate, else the fixed sign.
  int value(int i) const noexcept;
  std::uint64_t volume() const noexcept { return std::uint64_t{1} << (n_ - depth()); }

  bool contains_bits(std::uint32_t bits) const noexcept {
    return ((bits ^ values_) & fixed_) == 0;
  }
  bool contains(const Point& x) const;

  Restriction refine(int i, Label b) const;
  bool disjoint_from(const Restriction& other) const;
  // Every point of `inner` lies in *this.
  bool covers(const Restriction& inner) const;

  std::string encode() const;
  // Injective for a fixed dimension.
  std::uint64_t key() const noexcept {
    return (static_cast<std::uint64_t>(fixed_) << 32) | values_;
  }

  friend bool operator==(const Restriction&, const Restriction&) = default;

 private:
  std::uint32_t full_mask() const noexcept {
    return n_ == 32 ? ~0u : ((1u << n_) - 1u);
  }

  int n_ = 0;
  std::uint32_t fixed_ = 0;
  std::uint32_t values_ = 0;
};

// Lexicographic order on canonical encodings with '*' < '+' < '-'.
bool canonical_less(const Restriction& a, const Restriction& b);

bool consistent(const Point& x, const Restriction& rho);
Restriction refine(const Restriction& rho, int i, Label b);

std::ostream& operator<<(std::ostream& os, const Point& x);
std::ostream& operator<<(std::ostream& os, const Restriction& rho);

// One entry of a labeled multiset. `count` is the multiplicity.
struct LabeledExample {
  Point x;
  Label y = kPlus;
  std::uint64_t count = 1;
};

// A multiset of labeled points sharing one dimension. Items keep insertion
// order; compacted() merges duplicates, which learners and error functionals
// cannot distinguish from the expanded sequence.
class LabeledSample {
 public:
  LabeledSample() = default;
  explicit LabeledSample(int n) : n_(n) {}
  LabeledSample(int n, std::vector<LabeledExample> items);

  int dim() const noexcept { return n_; }
  // Total multiplicity.
  std::uint64_t size() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }
  std::span<const LabeledExample> items() const noexcept { return items_; }

  void add(const Point& x, Label y, std::uint64_t count = 1);

  LabeledSample compacted() const;
  // Items [begin, begin+count) of the expanded sequence.
  LabeledSample slice(std::uint64_t begin, std::uint64_t count) const;

  static LabeledSample read_csv(std::istream& in, int n);
  void write_csv(std::ostream& out) const;

 private:
  int n_ = 0;
  std::vector<LabeledExample> items_;
  std::uint64_t total_ = 0;
};

LabeledSample filter_sample(const LabeledSample& s, const Restriction& rho);

// Raw misclassification count with its denominator; comparisons between
// errors stay exact.
struct ErrorCount {
  std::uint64_t mistakes = 0;
  std::uint64_t total = 0;

  double value() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(mistakes) / static_cast<double>(total);
  }
  ErrorCount& operator+=(const ErrorCount& o) noexcept {
    mistakes += o.mistakes;
    total += o.total;
    return *this;
  }
};

}  // namespace dlift
