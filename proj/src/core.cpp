#include "dlift/core.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <utility>

namespace dlift {
namespace {

void check_dim(int n) {
  if (n < 0 || n > kMaxDim) {
    throw UsageError("dimension " + std::to_string(n) + " outside [0, " +
                     std::to_string(kMaxDim) + "]");
  }
}

}  // namespace

Point::Point(int n, std::uint32_t bits) : n_(n), bits_(bits) {
  check_dim(n);
  if (n < 32 && (bits >> n) != 0) {
    throw UsageError("point bits exceed dimension");
  }
}

Point Point::parse(std::string_view text) {
  const int n = static_cast<int>(text.size());
  check_dim(n);
  std::uint32_t bits = 0;
  for (int i = 0; i < n; ++i) {
    if (text[i] == '+') {
      bits |= 1u << i;
    } else if (text[i] != '-') {
      throw UsageError("point encoding must use '+' and '-': " + std::string(text));
    }
  }
  return Point(n, bits);
}

std::string Point::encode() const {
  std::string out(n_, '-');
  for (int i = 0; i < n_; ++i) {
    if ((bits_ >> i) & 1u) out[i] = '+';
  }
  return out;
}

Restriction::Restriction(int n, std::uint32_t fixed, std::uint32_t values)
    : n_(n), fixed_(fixed), values_(values) {
  check_dim(n);
  if ((fixed_ & ~full_mask()) != 0 || (values_ & ~fixed_) != 0) {
    throw UsageError("malformed restriction masks");
  }
}

Restriction Restriction::all(int n) { return Restriction(n, 0, 0); }

Restriction Restriction::parse(std::string_view text) {
  const int n = static_cast<int>(text.size());
  check_dim(n);
  std::uint32_t fixed = 0, values = 0;
  for (int i = 0; i < n; ++i) {
    switch (text[i]) {
      case '*': break;
      case '+': fixed |= 1u << i; values |= 1u << i; break;
      case '-': fixed |= 1u << i; break;
      default:
        throw UsageError("restriction encoding must use '+', '-', '*': " + std::string(text));
    }
  }
  return Restriction(n, fixed, values);
}

Restriction Restriction::of_point(const Point& x) {
  const std::uint32_t full = x.dim() == 32 ? ~0u : ((1u << x.dim()) - 1u);
  return Restriction(x.dim(), full, x.bits());
}

int Restriction::value(int i) const noexcept {
  if (is_free(i)) return 0;
  return (values_ >> i) & 1u ? kPlus : kMinus;
}

bool Restriction::contains(const Point& x) const {
  if (x.dim() != n_) {
    throw UsageError("dimension mismatch: point has n=" + std::to_string(x.dim()) +
                     ", restriction has n=" + std::to_string(n_));
  }
  return contains_bits(x.bits());
}

Restriction Restriction::refine(int i, Label b) const {
  if (i < 0 || i >= n_) throw UsageError("coordinate out of range");
  if (b != kPlus && b != kMinus) throw UsageError("refinement value must be +1 or -1");
  if (!is_free(i)) {
    throw UsageError("coordinate " + std::to_string(i) + " already fixed in " + encode());
  }
  const std::uint32_t bit = 1u << i;
  return Restriction(n_, fixed_ | bit, b == kPlus ? (values_ | bit) : values_);
}

bool Restriction::disjoint_from(const Restriction& other) const {
  return ((values_ ^ other.values_) & fixed_ & other.fixed_) != 0;
}

bool Restriction::covers(const Restriction& inner) const {
  return (fixed_ & ~inner.fixed_) == 0 && ((values_ ^ inner.values_) & fixed_) == 0;
}

std::string Restriction::encode() const {
  std::string out(n_, '*');
  for (int i = 0; i < n_; ++i) {
    if (!is_free(i)) out[i] = (values_ >> i) & 1u ? '+' : '-';
  }
  return out;
}

bool canonical_less(const Restriction& a, const Restriction& b) {
  const int n = std::min(a.dim(), b.dim());
  for (int i = 0; i < n; ++i) {
    const int ra = a.is_free(i) ? 0 : (a.value(i) == kPlus ? 1 : 2);
    const int rb = b.is_free(i) ? 0 : (b.value(i) == kPlus ? 1 : 2);
    if (ra != rb) return ra < rb;
  }
  return a.dim() < b.dim();
}

bool consistent(const Point& x, const Restriction& rho) { return rho.contains(x); }

Restriction refine(const Restriction& rho, int i, Label b) { return rho.refine(i, b); }

std::ostream& operator<<(std::ostream& os, const Point& x) { return os << x.encode(); }
std::ostream& operator<<(std::ostream& os, const Restriction& rho) {
  return os << rho.encode();
}

LabeledSample::LabeledSample(int n, std::vector<LabeledExample> items)
    : n_(n), items_(std::move(items)) {
  check_dim(n);
  for (const auto& e : items_) {
    if (e.x.dim() != n_) throw UsageError("sample point dimension mismatch");
    if (e.y != kPlus && e.y != kMinus) throw UsageError("labels must be +1 or -1");
    total_ += e.count;
  }
}

void LabeledSample::add(const Point& x, Label y, std::uint64_t count) {
  if (x.dim() != n_) throw UsageError("sample point dimension mismatch");
  if (y != kPlus && y != kMinus) throw UsageError("labels must be +1 or -1");
  if (count == 0) return;
  items_.push_back({x, y, count});
  total_ += count;
}

LabeledSample LabeledSample::compacted() const {
  std::map<std::pair<std::uint32_t, int>, std::uint64_t> merged;
  for (const auto& e : items_) merged[{e.x.bits(), e.y}] += e.count;
  std::vector<LabeledExample> out;
  out.reserve(merged.size());
  for (const auto& [key, count] : merged) {
    out.push_back({Point(n_, key.first), key.second, count});
  }
  return LabeledSample(n_, std::move(out));
}

LabeledSample LabeledSample::slice(std::uint64_t begin, std::uint64_t count) const {
  if (begin + count > total_) throw UsageError("slice exceeds sample size");
  LabeledSample out(n_);
  std::uint64_t pos = 0;
  const std::uint64_t end = begin + count;
  for (const auto& e : items_) {
    const std::uint64_t lo = std::max(pos, begin);
    const std::uint64_t hi = std::min(pos + e.count, end);
    if (lo < hi) out.add(e.x, e.y, hi - lo);
    pos += e.count;
    if (pos >= end) break;
  }
  return out;
}

LabeledSample LabeledSample::read_csv(std::istream& in, int n) {
  LabeledSample out(n);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "x_bits,label") continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw UsageError("malformed sample row: " + line);
    const Point x = Point::parse(std::string_view(line).substr(0, comma));
    const std::string label = line.substr(comma + 1);
    Label y;
    if (label == "1" || label == "+1") {
      y = kPlus;
    } else if (label == "-1") {
      y = kMinus;
    } else {
      throw UsageError("malformed label: " + label);
    }
    out.add(x, y);
  }
  return out;
}

void LabeledSample::write_csv(std::ostream& out) const {
  out << "x_bits,label\n";
  for (const auto& e : items_) {
    const std::string enc = e.x.encode();
    for (std::uint64_t c = 0; c < e.count; ++c) out << enc << ',' << e.y << '\n';
  }
}

LabeledSample filter_sample(const LabeledSample& s, const Restriction& rho) {
  if (s.dim() != rho.dim()) throw UsageError("dimension mismatch in filter_sample");
  LabeledSample out(s.dim());
  for (const auto& e : s.items()) {
    if (rho.contains_bits(e.x.bits())) out.add(e.x, e.y, e.count);
  }
  return out;
}

}  // namespace dlift
