#include "mte/expression.hpp"

#include "mte/errors.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <system_error>

namespace mte::expr {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Expression run()
    {
        Expression e;
        e.nodes_.clear();
        out_ = &e;
        e.root_ = parse_expr();
        skip();
        if (pos_ != s_.size())
            fail("unexpected trailing input");
        return e;
    }

private:
    using Node = Expression::Node;

    [[noreturn]] void fail(const std::string& why) const
    {
        throw ConfigError("expression '" + std::string(s_) + "': " + why + " at offset " + std::to_string(pos_));
    }

    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Node n)
    {
        out_->nodes_.push_back(n);
        return static_cast<int>(out_->nodes_.size()) - 1;
    }

    int binary(Op op, int l, int r) { return add(Node{op, 0.0, 0, l, r}); }

    int parse_expr()
    {
        int lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = binary(Op::add, lhs, parse_term());
            else if (accept('-'))
                lhs = binary(Op::sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    int parse_term()
    {
        int lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = binary(Op::mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = binary(Op::div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    int parse_unary()
    {
        if (accept('-')) {
            const int inner = parse_unary();
            Node& n = out_->nodes_[static_cast<std::size_t>(inner)];
            if (n.op == Op::constant) {
                n.value = -n.value;
                return inner;
            }
            return add(Node{Op::neg, 0.0, 0, inner, -1});
        }
        return parse_primary();
    }

    int parse_index()
    {
        if (!accept('['))
            fail("expected '['");
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        if (start == pos_)
            fail("expected coordinate index");
        const int idx = std::atoi(std::string(s_.substr(start, pos_ - start)).c_str());
        if (!accept(']'))
            fail("expected ']'");
        return idx;
    }

    int parse_primary()
    {
        skip();
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_expr();
            if (!accept(')'))
                fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double value = 0.0;
            const char* first = s_.data() + pos_;
            auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), value);
            if (ec != std::errc())
                fail("malformed number");
            pos_ += static_cast<std::size_t>(ptr - first);
            return add(Node{Op::constant, value, 0, -1, -1});
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            const std::string_view name = s_.substr(start, pos_ - start);
            if (name == "z")
                return add(Node{Op::z, 0.0, parse_index(), -1, -1});
            if (name == "v")
                return add(Node{Op::v, 0.0, parse_index(), -1, -1});
            if (name == "y")
                return add(Node{Op::y, 0.0, 0, -1, -1});
            if (name == "log" || name == "exp") {
                if (!accept('('))
                    fail("expected '(' after function name");
                const int arg = parse_expr();
                if (!accept(')'))
                    fail("expected ')'");
                return add(Node{name == "log" ? Op::log : Op::exp, 0.0, 0, arg, -1});
            }
            pos_ = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    Expression* out_ = nullptr;
};

Expression Expression::parse(std::string_view text) { return Parser(text).run(); }

Expression Expression::constant(double c)
{
    Expression e;
    e.nodes_.clear();
    e.nodes_.push_back(Node{Op::constant, c, 0, -1, -1});
    e.root_ = 0;
    return e;
}

double Expression::eval_node(int i, const Context& ctx) const
{
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
    case Op::constant:
        return n.value;
    case Op::z:
        if (static_cast<std::size_t>(n.index) >= ctx.z.size())
            throw DomainError("expression references z[" + std::to_string(n.index) + "] beyond the instrument vector");
        return ctx.z[static_cast<std::size_t>(n.index)];
    case Op::v:
        if (static_cast<std::size_t>(n.index) >= ctx.v.size())
            throw DomainError("expression references v[" + std::to_string(n.index) + "] beyond the heterogeneity vector");
        return ctx.v[static_cast<std::size_t>(n.index)];
    case Op::y:
        return ctx.y;
    case Op::neg:
        return -eval_node(n.lhs, ctx);
    case Op::add:
        return eval_node(n.lhs, ctx) + eval_node(n.rhs, ctx);
    case Op::sub:
        return eval_node(n.lhs, ctx) - eval_node(n.rhs, ctx);
    case Op::mul:
        return eval_node(n.lhs, ctx) * eval_node(n.rhs, ctx);
    case Op::div:
        return eval_node(n.lhs, ctx) / eval_node(n.rhs, ctx);
    case Op::log: {
        const double a = eval_node(n.lhs, ctx);
        return a == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(a);
    }
    case Op::exp:
        return std::exp(eval_node(n.lhs, ctx));
    }
    return 0.0;
}

namespace {

int precedence(Op op)
{
    switch (op) {
    case Op::add:
    case Op::sub:
        return 1;
    case Op::mul:
    case Op::div:
        return 2;
    case Op::neg:
        return 3;
    default:
        return 4;
    }
}

std::string format_number(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace

void Expression::print(int i, std::string& out) const
{
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    auto child = [&](int c, bool strict) {
        const Node& cn = nodes_[static_cast<std::size_t>(c)];
        int cp = precedence(cn.op);
        if (cn.op == Op::constant && cn.value < 0.0)
            cp = 3;
        const int p = precedence(n.op);
        const bool paren = cp < p || (strict && cp == p);
        if (paren)
            out += '(';
        print(c, out);
        if (paren)
            out += ')';
    };
    switch (n.op) {
    case Op::constant:
        out += format_number(n.value);
        return;
    case Op::z:
        out += "z[" + std::to_string(n.index) + "]";
        return;
    case Op::v:
        out += "v[" + std::to_string(n.index) + "]";
        return;
    case Op::y:
        out += "y";
        return;
    case Op::neg:
        out += '-';
        child(n.lhs, false);
        return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: {
        child(n.lhs, false);
        const char* sym = n.op == Op::add ? " + " : n.op == Op::sub ? " - " : n.op == Op::mul ? "*" : "/";
        out += sym;
        child(n.rhs, true);
        return;
    }
    case Op::log:
    case Op::exp:
        out += n.op == Op::log ? "log(" : "exp(";
        print(n.lhs, out);
        out += ')';
        return;
    }
}

std::string Expression::str() const
{
    std::string out;
    print(root_, out);
    return out;
}

std::set<int> Expression::z_refs() const
{
    std::set<int> r;
    for (const auto& n : nodes_)
        if (n.op == Op::z)
            r.insert(n.index);
    return r;
}

std::set<int> Expression::v_refs() const
{
    std::set<int> r;
    for (const auto& n : nodes_)
        if (n.op == Op::v)
            r.insert(n.index);
    return r;
}

bool Expression::uses_y() const
{
    for (const auto& n : nodes_)
        if (n.op == Op::y)
            return true;
    return false;
}

std::optional<Affine> Expression::affine_node(int i) const
{
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    auto scale = [](Affine a, double s) {
        a.constant *= s;
        for (auto& [k, c] : a.coef)
            c *= s;
        return a;
    };
    auto combine = [](Affine a, const Affine& b, double sign) {
        a.constant += sign * b.constant;
        for (const auto& [k, c] : b.coef)
            a.coef[k] += sign * c;
        return a;
    };
    switch (n.op) {
    case Op::constant:
        return Affine{n.value, {}};
    case Op::v:
        return Affine{0.0, {{n.index, 1.0}}};
    case Op::z:
    case Op::y:
        return std::nullopt;
    case Op::neg: {
        auto a = affine_node(n.lhs);
        if (!a)
            return a;
        return scale(*a, -1.0);
    }
    case Op::add:
    case Op::sub: {
        auto a = affine_node(n.lhs), b = affine_node(n.rhs);
        if (!a || !b)
            return std::nullopt;
        return combine(*a, *b, n.op == Op::add ? 1.0 : -1.0);
    }
    case Op::mul: {
        auto a = affine_node(n.lhs), b = affine_node(n.rhs);
        if (!a || !b)
            return std::nullopt;
        if (a->coef.empty())
            return scale(*b, a->constant);
        if (b->coef.empty())
            return scale(*a, b->constant);
        return std::nullopt;
    }
    case Op::div: {
        auto a = affine_node(n.lhs), b = affine_node(n.rhs);
        if (!a || !b || !b->coef.empty())
            return std::nullopt;
        return scale(*a, 1.0 / b->constant);
    }
    case Op::log:
    case Op::exp: {
        auto a = affine_node(n.lhs);
        if (!a || !a->coef.empty())
            return std::nullopt;
        return Affine{n.op == Op::log ? std::log(a->constant) : std::exp(a->constant), {}};
    }
    }
    return std::nullopt;
}

std::optional<Affine> Expression::affine_in_v() const
{
    auto a = affine_node(root_);
    if (a) {
        for (auto it = a->coef.begin(); it != a->coef.end();)
            it = it->second == 0.0 ? a->coef.erase(it) : std::next(it);
    }
    return a;
}

bool Expression::equal_nodes(int a, const Expression& other, int b) const
{
    const Node& x = nodes_[static_cast<std::size_t>(a)];
    const Node& y = other.nodes_[static_cast<std::size_t>(b)];
    if (x.op != y.op)
        return false;
    switch (x.op) {
    case Op::constant:
        return x.value == y.value;
    case Op::z:
    case Op::v:
        return x.index == y.index;
    case Op::y:
        return true;
    case Op::neg:
    case Op::log:
    case Op::exp:
        return equal_nodes(x.lhs, other, y.lhs);
    default:
        return equal_nodes(x.lhs, other, y.lhs) && equal_nodes(x.rhs, other, y.rhs);
    }
}

bool Expression::operator==(const Expression& other) const { return equal_nodes(root_, other, other.root_); }

} // namespace mte::expr
