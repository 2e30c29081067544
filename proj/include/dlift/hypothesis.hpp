#pragma once

#include <concepts>
#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dlift/core.hpp"
#include "dlift/decomposition.hpp"
#include "json.hpp"

namespace dlift {

class HypothesisMap;

// chi_mask(x) weighted by an integer coefficient.
struct Monomial {
  std::uint32_t mask = 0;
  std::int64_t weight = 0;

  friend bool operator==(const Monomial&, const Monomial&) = default;
};

// A total, deterministic predictor {+1,-1}^n -> {+1,-1} with a JSON
// description. Kinds:
//   constant    fixed label
//   polynomial  sign(sum_T w_T chi_T(x)), zero maps to +1
//   lookup      table of points, default label elsewhere
//   tree        decision tree routing to per-leaf hypotheses
class Hypothesis {
 public:
  enum class Kind { Constant, Polynomial, Lookup, Tree };

  Hypothesis();  // constant +1

  static Hypothesis constant(Label y);
  static Hypothesis polynomial(int n, std::vector<Monomial> terms);
  static Hypothesis lookup(int n, std::vector<std::pair<std::uint32_t, Label>> table,
                           Label fallback);
  // `leaves` must hold an entry for every leaf of `tree` under the all-* root.
  static Hypothesis tree(int n, DecisionTree tree, const HypothesisMap& leaves);

  // Sign of a sum of signed literals, e.g. {{0,+1},{3,-1},{5,+1}}.
  static Hypothesis majority(int n, const std::vector<std::pair<int, Label>>& literals);
  static Hypothesis parity(int n, std::uint32_t mask);

  Kind kind() const noexcept;
  Label operator()(const Point& x) const { return eval_bits(x.bits()); }
  Label eval_bits(std::uint32_t bits) const;

  nlohmann::json to_json() const;
  static Hypothesis from_json(const nlohmann::json& j);

 private:
  struct Impl;
  explicit Hypothesis(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

// Restriction -> hypothesis, keyed by the restriction's packed pattern (a
// bijection with its canonical text encoding at fixed n).
class HypothesisMap {
 public:
  HypothesisMap() = default;
  explicit HypothesisMap(int n) : n_(n) {}

  int dim() const noexcept { return n_; }
  std::size_t size() const noexcept { return map_.size(); }

  void insert(const Restriction& rho, Hypothesis h);
  bool contains(const Restriction& rho) const { return map_.count(rho.key()) != 0; }
  const Hypothesis* find(const Restriction& rho) const;
  // Throws InvariantViolation when the entry is missing.
  const Hypothesis& at(const Restriction& rho) const;

  // Entries in canonical restriction order.
  std::vector<std::pair<Restriction, Hypothesis>> entries() const;

  nlohmann::json to_json() const;
  static HypothesisMap from_json(const nlohmann::json& j);

 private:
  int n_ = 0;
  std::unordered_map<std::uint64_t, std::pair<Restriction, Hypothesis>> map_;
};

Label eval_tree_hypothesis(const DecisionTree& t, const HypothesisMap& h, const Point& x);
// nullopt is the "no consistent entry" prediction.
std::optional<Label> eval_list_hypothesis(const SubcubeList& l, const HypothesisMap& h,
                                          const Point& x);

template <class F>
concept TotalPredictor = requires(const F& f, const Point& x) {
  { f(x) } -> std::convertible_to<Label>;
};

template <class F>
concept PartialPredictor = requires(const F& f, const Point& x) {
  { f(x) } -> std::same_as<std::optional<Label>>;
};

// Weighted misclassification count. A nullopt prediction is a mistake.
template <class F>
  requires TotalPredictor<F> || PartialPredictor<F>
ErrorCount raw_error(const F& predict, const LabeledSample& s) {
  ErrorCount err;
  for (const auto& e : s.items()) {
    bool wrong;
    if constexpr (PartialPredictor<F>) {
      const std::optional<Label> p = predict(e.x);
      wrong = !p.has_value() || *p != e.y;
    } else {
      wrong = static_cast<Label>(predict(e.x)) != e.y;
    }
    if (wrong) err.mistakes += e.count;
    err.total += e.count;
  }
  return err;
}

// Fraction misclassified; 0 on an empty sample.
template <class F>
  requires TotalPredictor<F> || PartialPredictor<F>
double empirical_error(const F& predict, const LabeledSample& s) {
  return raw_error(predict, s).value();
}

}  // namespace dlift
