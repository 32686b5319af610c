#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Arithmetic expressions over instrument coordinates z[i], heterogeneity
// coordinates v[i] and an outcome variable y. Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | z[int] | v[int] | y | log(expr) | exp(expr) | (expr)
namespace mte::expr {

enum class Op { constant, z, v, y, neg, add, sub, mul, div, log, exp };

struct Context {
    std::span<const double> z;
    std::span<const double> v;
    double y = std::numeric_limits<double>::quiet_NaN();
};

// c + sum_i coef[i] * v[i]
struct Affine {
    double constant = 0.0;
    std::map<int, double> coef;
};

class Expression {
public:
    Expression() { nodes_.push_back(Node{}); }
    static Expression parse(std::string_view text);
    static Expression constant(double c);

    double eval(const Context& ctx) const { return eval_node(root_, ctx); }
    // Canonical text; parse(str()) reproduces the same tree.
    std::string str() const;

    std::set<int> z_refs() const;
    std::set<int> v_refs() const;
    bool uses_y() const;
    // Exact affine form in v when the expression has no z, y or nonlinear v terms.
    std::optional<Affine> affine_in_v() const;

    bool operator==(const Expression& other) const;

private:
    struct Node {
        Op op = Op::constant;
        double value = 0.0;
        int index = 0;
        int lhs = -1;
        int rhs = -1;
    };
    friend class Parser;

    double eval_node(int i, const Context& ctx) const;
    void print(int i, std::string& out) const;
    bool equal_nodes(int a, const Expression& other, int b) const;
    std::optional<Affine> affine_node(int i) const;

    std::vector<Node> nodes_;
    int root_ = 0;
};

} // namespace mte::expr
