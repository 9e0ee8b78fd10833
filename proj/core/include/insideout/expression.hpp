#pragma once

#include <array>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "insideout/random.hpp"

namespace insideout {

enum class NodeKind { Constant, Variable, Add, Sub, Mul, Div, Sin, Cos, Exp, Log };

std::string_view to_string(NodeKind kind) noexcept;
int arity(NodeKind kind) noexcept;

/// Random target function over the source features.
///
/// Nodes are stored in prefix order, so the children of an internal node
/// start immediately after it. Evaluation is total on finite input:
///   - division returns 1 when |denominator| < 1e-9,
///   - log operates on |x| + 1e-9,
///   - exp clamps its argument to [-50, 50],
///   - every node's value saturates at +/-1e150 so products cannot overflow.
class ExpressionTree {
 public:
  struct Node {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;         // Constant
    std::size_t feature = 0;    // Variable
    bool operator==(const Node&) const = default;
  };

  static constexpr double kDivisionEpsilon = 1e-9;
  static constexpr double kLogEpsilon = 1e-9;
  static constexpr double kExpClamp = 50.0;
  static constexpr double kSaturation = 1e150;

  ExpressionTree() = default;
  /// Throws InvalidArgument unless `prefix` is a single complete tree.
  explicit ExpressionTree(std::vector<Node> prefix);

  static ExpressionTree constant(double value);
  static ExpressionTree variable(std::size_t feature);
  static ExpressionTree unary(NodeKind op, const ExpressionTree& child);
  static ExpressionTree binary(NodeKind op, const ExpressionTree& left,
                               const ExpressionTree& right);

  /// Parses `(add (var 0) (sin (var 1)))`; bare numbers are constants.
  static ExpressionTree parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] double evaluate(std::span<const double> x) const;

  [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  /// A lone leaf has depth 1.
  [[nodiscard]] std::size_t depth() const;
  [[nodiscard]] std::set<std::size_t> features() const;
  [[nodiscard]] bool references_feature() const;
  /// One past the largest referenced feature index (0 if none).
  [[nodiscard]] std::size_t required_features() const;

  friend bool operator==(const ExpressionTree&, const ExpressionTree&) = default;

 private:
  std::vector<Node> nodes_;
};

struct TreeGrowOptions {
  /// Probability that a leaf is a feature reference rather than a constant.
  double variable_leaf_probability = 0.7;
  /// Probability that an internal node is binary rather than unary.
  double binary_probability = 0.7;
  double constant_lo = -5.0;
  double constant_hi = 5.0;
  /// Reference every feature: the root is a balanced tree of binary
  /// operators over per-feature subtrees. When n exceeds the leaf capacity
  /// 2^(max_depth - 1), a random subset of that size is covered.
  bool cover_all_features = true;
  /// Relative weights of add, sub, mul, div.
  std::array<double, 4> binary_weights{1.0, 1.0, 1.0, 1.0};
  /// Relative weights of sin, cos, exp, log.
  std::array<double, 4> unary_weights{1.0, 1.0, 1.0, 1.0};

  bool operator==(const TreeGrowOptions&) const = default;
};

inline constexpr std::size_t kDefaultTreeDepth = 6;

/// Grow-method random tree over n features. The leaf probability at depth d
/// is d / max_depth, so nodes at max_depth are always leaves. Trees without
/// a feature reference are redrawn.
ExpressionTree random_expression_tree(std::size_t n, RandomStream& rng,
                                      std::size_t max_depth = kDefaultTreeDepth,
                                      const TreeGrowOptions& options = {});

}  // namespace insideout
