#include "insideout/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <span>
#include <optional>
#include <numeric>
#include <functional>

#include <fmt/format.h>

#include "insideout/error.hpp"

namespace insideout {

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Constant: return "const";
    case NodeKind::Variable: return "var";
    case NodeKind::Add: return "add";
    case NodeKind::Sub: return "sub";
    case NodeKind::Mul: return "mul";
    case NodeKind::Div: return "div";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Exp: return "exp";
    case NodeKind::Log: return "log";
  }
  return "?";
}

int arity(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Constant:
    case NodeKind::Variable: return 0;
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp:
    case NodeKind::Log: return 1;
    default: return 2;
  }
}

namespace {

/// Index one past the subtree rooted at `i`, or npos when truncated.
std::size_t subtree_end(const std::vector<ExpressionTree::Node>& nodes, std::size_t i) {
  std::size_t pending = 1;
  while (pending > 0) {
    if (i >= nodes.size()) return std::string::npos;
    pending += static_cast<std::size_t>(arity(nodes[i].kind));
    --pending;
    ++i;
  }
  return i;
}

double saturate(double v) {
  return std::clamp(v, -ExpressionTree::kSaturation, ExpressionTree::kSaturation);
}

double eval_at(const std::vector<ExpressionTree::Node>& nodes, std::size_t& i,
               std::span<const double> x) {
  const auto& node = nodes[i++];
  switch (node.kind) {
    case NodeKind::Constant: return saturate(node.value);
    case NodeKind::Variable: return saturate(x[node.feature]);
    case NodeKind::Sin: return std::sin(eval_at(nodes, i, x));
    case NodeKind::Cos: return std::cos(eval_at(nodes, i, x));
    case NodeKind::Exp:
      return saturate(std::exp(std::clamp(eval_at(nodes, i, x), -ExpressionTree::kExpClamp,
                                          ExpressionTree::kExpClamp)));
    case NodeKind::Log:
      return std::log(std::abs(eval_at(nodes, i, x)) + ExpressionTree::kLogEpsilon);
    default: break;
  }
  const double a = eval_at(nodes, i, x);
  const double b = eval_at(nodes, i, x);
  switch (node.kind) {
    case NodeKind::Add: return saturate(a + b);
    case NodeKind::Sub: return saturate(a - b);
    case NodeKind::Mul: return saturate(a * b);
    case NodeKind::Div:
      return std::abs(b) < ExpressionTree::kDivisionEpsilon ? 1.0 : saturate(a / b);
    default: return 0.0;
  }
}

class SexprParser {
 public:
  explicit SexprParser(std::string_view text) : text_(text) {}

  std::vector<ExpressionTree::Node> parse() {
    std::vector<ExpressionTree::Node> out;
    parse_expr(out);
    skip_space();
    if (pos_ != text_.size()) error("trailing input");
    return out;
  }

 private:
  [[noreturn]] void error(std::string_view what) const {
    fail(ErrorCode::ParseError,
         fmt::format("expression parse error at offset {}: {}", pos_, what));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view atom() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) error("expected atom");
    return text_.substr(start, pos_ - start);
  }

  double number(std::string_view token) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      error(fmt::format("'{}' is not a number", token));
    }
    return v;
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c) error(fmt::format("expected '{}'", c));
    ++pos_;
  }

  void parse_expr(std::vector<ExpressionTree::Node>& out) {
    skip_space();
    if (pos_ >= text_.size()) error("unexpected end of input");
    if (text_[pos_] != '(') {
      out.push_back({NodeKind::Constant, number(atom()), 0});
      return;
    }
    ++pos_;
    const auto op = atom();
    static constexpr NodeKind kinds[] = {NodeKind::Constant, NodeKind::Variable, NodeKind::Add,
                                         NodeKind::Sub,      NodeKind::Mul,      NodeKind::Div,
                                         NodeKind::Sin,      NodeKind::Cos,      NodeKind::Exp,
                                         NodeKind::Log};
    const auto* it = std::find_if(std::begin(kinds), std::end(kinds),
                                  [&](NodeKind k) { return insideout::to_string(k) == op; });
    if (it == std::end(kinds)) error(fmt::format("unknown operator '{}'", op));
    const NodeKind kind = *it;
    if (kind == NodeKind::Constant) {
      out.push_back({kind, number(atom()), 0});
    } else if (kind == NodeKind::Variable) {
      const double v = number(atom());
      if (v < 0 || v != std::floor(v)) error("feature index must be a non-negative integer");
      out.push_back({kind, 0.0, static_cast<std::size_t>(v)});
    } else {
      out.push_back({kind, 0.0, 0});
      for (int a = 0; a < arity(kind); ++a) parse_expr(out);
    }
    expect(')');
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void write_sexpr(const std::vector<ExpressionTree::Node>& nodes, std::size_t& i,
                 std::string& out) {
  const auto& node = nodes[i++];
  switch (node.kind) {
    case NodeKind::Constant: out += fmt::format("{:.17g}", node.value); return;
    case NodeKind::Variable: out += fmt::format("(var {})", node.feature); return;
    default: break;
  }
  out += '(';
  out += to_string(node.kind);
  for (int a = 0; a < arity(node.kind); ++a) {
    out += ' ';
    write_sexpr(nodes, i, out);
  }
  out += ')';
}

}  // namespace

ExpressionTree::ExpressionTree(std::vector<Node> prefix) : nodes_(std::move(prefix)) {
  require(!nodes_.empty(), ErrorCode::InvalidArgument, "expression tree is empty");
  require(subtree_end(nodes_, 0) == nodes_.size(), ErrorCode::InvalidArgument,
          "prefix node list does not form exactly one tree");
}

ExpressionTree ExpressionTree::constant(double value) {
  return ExpressionTree({{NodeKind::Constant, value, 0}});
}

ExpressionTree ExpressionTree::variable(std::size_t feature) {
  return ExpressionTree({{NodeKind::Variable, 0.0, feature}});
}

ExpressionTree ExpressionTree::unary(NodeKind op, const ExpressionTree& child) {
  require(arity(op) == 1, ErrorCode::InvalidArgument, "operator is not unary");
  std::vector<Node> nodes{{op, 0.0, 0}};
  nodes.insert(nodes.end(), child.nodes_.begin(), child.nodes_.end());
  return ExpressionTree(std::move(nodes));
}

ExpressionTree ExpressionTree::binary(NodeKind op, const ExpressionTree& left,
                                      const ExpressionTree& right) {
  require(arity(op) == 2, ErrorCode::InvalidArgument, "operator is not binary");
  std::vector<Node> nodes{{op, 0.0, 0}};
  nodes.insert(nodes.end(), left.nodes_.begin(), left.nodes_.end());
  nodes.insert(nodes.end(), right.nodes_.begin(), right.nodes_.end());
  return ExpressionTree(std::move(nodes));
}

ExpressionTree ExpressionTree::parse(std::string_view text) {
  return ExpressionTree(SexprParser(text).parse());
}

std::string ExpressionTree::to_string() const {
  std::string out;
  std::size_t i = 0;
  if (!nodes_.empty()) write_sexpr(nodes_, i, out);
  return out;
}

double ExpressionTree::evaluate(std::span<const double> x) const {
  require(x.size() >= required_features(), ErrorCode::DimensionMismatch,
          fmt::format("expression references {} features but sample has {}",
                      required_features(), x.size()));
  std::size_t i = 0;
  return eval_at(nodes_, i, x);
}

std::size_t ExpressionTree::depth() const {
  std::function<std::size_t(std::size_t&)> walk = [&](std::size_t& i) -> std::size_t {
    const int a = arity(nodes_[i++].kind);
    std::size_t deepest = 0;
    for (int c = 0; c < a; ++c) deepest = std::max(deepest, walk(i));
    return deepest + 1;
  };
  std::size_t i = 0;
  return nodes_.empty() ? 0 : walk(i);
}

std::set<std::size_t> ExpressionTree::features() const {
  std::set<std::size_t> out;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Variable) out.insert(n.feature);
  }
  return out;
}

bool ExpressionTree::references_feature() const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [](const Node& n) { return n.kind == NodeKind::Variable; });
}

std::size_t ExpressionTree::required_features() const {
  std::size_t needed = 0;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::Variable) needed = std::max(needed, n.feature + 1);
  }
  return needed;
}

namespace {

std::size_t weighted_index(const std::array<double, 4>& weights, RandomStream& rng) {
  const double total = weights[0] + weights[1] + weights[2] + weights[3];
  double u = rng.uniform01() * total;
  for (std::size_t i = 0; i < 3; ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return 3;
}

/// `only_feature` pins every variable leaf to one feature when set.
void grow(std::size_t n, RandomStream& rng, std::size_t depth, std::size_t max_depth,
          const TreeGrowOptions& opt, std::vector<ExpressionTree::Node>& out,
          std::optional<std::size_t> only_feature = std::nullopt) {
  const double leaf_probability =
      static_cast<double>(depth) / static_cast<double>(std::max<std::size_t>(max_depth, 1));
  if (depth >= max_depth || rng.bernoulli(leaf_probability)) {
    if (rng.bernoulli(opt.variable_leaf_probability)) {
      const auto feature =
          only_feature ? *only_feature : static_cast<std::size_t>(rng.uniform_index(n));
      out.push_back({NodeKind::Variable, 0.0, feature});
    } else {
      out.push_back({NodeKind::Constant, rng.uniform(opt.constant_lo, opt.constant_hi), 0});
    }
    return;
  }
  static constexpr NodeKind binary_ops[] = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul,
                                            NodeKind::Div};
  static constexpr NodeKind unary_ops[] = {NodeKind::Sin, NodeKind::Cos, NodeKind::Exp,
                                           NodeKind::Log};
  const bool binary = rng.bernoulli(opt.binary_probability);
  const NodeKind op = binary ? binary_ops[weighted_index(opt.binary_weights, rng)]
                            : unary_ops[weighted_index(opt.unary_weights, rng)];
  out.push_back({op, 0.0, 0});
  for (int c = 0; c < arity(op); ++c) grow(n, rng, depth + 1, max_depth, opt, out, only_feature);
}

void grow_feature_subtree(std::size_t feature, RandomStream& rng, std::size_t depth,
                          std::size_t max_depth, const TreeGrowOptions& opt,
                          std::vector<ExpressionTree::Node>& out) {
  for (;;) {
    std::vector<ExpressionTree::Node> sub;
    grow(feature + 1, rng, depth, max_depth, opt, sub, feature);
    const bool has_variable = std::any_of(sub.begin(), sub.end(), [](const auto& node) {
      return node.kind == NodeKind::Variable;
    });
    if (has_variable) {
      out.insert(out.end(), sub.begin(), sub.end());
      return;
    }
  }
}

void grow_covering(std::span<const std::size_t> features, RandomStream& rng, std::size_t depth,
                   std::size_t max_depth, const TreeGrowOptions& opt,
                   std::vector<ExpressionTree::Node>& out) {
  if (features.size() == 1) {
    grow_feature_subtree(features[0], rng, depth, max_depth, opt, out);
    return;
  }
  static constexpr NodeKind binary_ops[] = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul,
                                            NodeKind::Div};
  out.push_back({binary_ops[weighted_index(opt.binary_weights, rng)], 0.0, 0});
  const std::size_t half = features.size() / 2;
  grow_covering(features.first(half), rng, depth + 1, max_depth, opt, out);
  grow_covering(features.subspan(half), rng, depth + 1, max_depth, opt, out);
}

}  // namespace

ExpressionTree random_expression_tree(std::size_t n, RandomStream& rng, std::size_t max_depth,
                                      const TreeGrowOptions& options) {
  require(n >= 1, ErrorCode::InvalidArgument, "expression tree needs n >= 1 features");
  require(max_depth >= 1, ErrorCode::InvalidArgument, "max_depth must be >= 1");
  require(options.variable_leaf_probability > 0.0, ErrorCode::InvalidArgument,
          "variable_leaf_probability must be > 0");
  for (const auto* weights : {&options.binary_weights, &options.unary_weights}) {
    double total = 0.0;
    for (double w : *weights) {
      require(w >= 0.0 && std::isfinite(w), ErrorCode::InvalidArgument,
              "operator weights must be finite and >= 0");
      total += w;
    }
    require(total > 0.0, ErrorCode::InvalidArgument, "operator weights must not all be zero");
  }
  if (options.cover_all_features) {
    std::vector<std::size_t> features(n);
    std::iota(features.begin(), features.end(), 0);
    shuffle(features.begin(), features.end(), rng);
    const std::size_t capacity =
        max_depth > 60 ? n : std::min<std::size_t>(n, std::size_t{1} << (max_depth - 1));
    features.resize(capacity);
    std::vector<ExpressionTree::Node> nodes;
    grow_covering(features, rng, 1, max_depth, options, nodes);
    return ExpressionTree(std::move(nodes));
  }
  for (;;) {
    std::vector<ExpressionTree::Node> nodes;
    grow(n, rng, 1, max_depth, options, nodes);
    ExpressionTree tree(std::move(nodes));
    if (tree.references_feature()) return tree;
  }
}

}  // namespace insideout
