#pragma once

// Closed-form field expressions used by run configurations.
//
// Grammar (whitespace-insensitive):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | 'pi' | func '(' args ')' | '(' expr ')'
//   func    := tanh(e) | exp(e) | gauss(mu, sigma)     gauss = exp(-((x-mu)/sigma)^2)

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "relspec/errors.hpp"
#include "relspec/grid.hpp"

namespace relspec {

class Expression {
 public:
  using Fn = std::function<double(double)>;

  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Fn f = p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected character '" + std::string(1, text[p.pos]) + "'");
    return Expression(text, std::move(f));
  }

  double operator()(double x) const { return fn_(x); }
  const std::string& text() const { return text_; }

  ScalarField sample(const Grid1D& grid) const { return ScalarField::sample(grid, fn_, text_); }

 private:
  Expression(std::string text, Fn f) : text_(std::move(text)), fn_(std::move(f)) {}

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ConfigError("expression '" + s + "': " + msg + " at column " + std::to_string(pos + 1));
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    Fn expr() {
      Fn lhs = term();
      for (;;) {
        if (eat('+')) {
          Fn rhs = term();
          lhs = [l = std::move(lhs), r = std::move(rhs)](double x) { return l(x) + r(x); };
        } else if (eat('-')) {
          Fn rhs = term();
          lhs = [l = std::move(lhs), r = std::move(rhs)](double x) { return l(x) - r(x); };
        } else {
          return lhs;
        }
      }
    }
    Fn term() {
      Fn lhs = unary();
      for (;;) {
        if (eat('*')) {
          Fn rhs = unary();
          lhs = [l = std::move(lhs), r = std::move(rhs)](double x) { return l(x) * r(x); };
        } else if (eat('/')) {
          Fn rhs = unary();
          lhs = [l = std::move(lhs), r = std::move(rhs)](double x) { return l(x) / r(x); };
        } else {
          return lhs;
        }
      }
    }
    // Unary minus binds looser than '^', so -x^2 = -(x^2).
    Fn unary() {
      if (eat('-')) {
        Fn inner = unary();
        return [f = std::move(inner)](double x) { return -f(x); };
      }
      return power();
    }
    Fn power() {
      Fn base = primary();
      if (eat('^')) {
        Fn ex = unary();
        return [b = std::move(base), e = std::move(ex)](double x) { return std::pow(b(x), e(x)); };
      }
      return base;
    }
    Fn primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          fail("malformed number");
        }
        pos += used;
        return [v](double) { return v; };
      }
      if (eat('(')) {
        Fn inner = expr();
        expect(')');
        return inner;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string name = s.substr(start, pos - start);
        if (name == "x") return [](double x) { return x; };
        if (name == "pi") return [](double) { return std::numbers::pi; };
        if (name == "tanh" || name == "exp") {
          expect('(');
          Fn arg = expr();
          expect(')');
          if (name == "tanh") return [a = std::move(arg)](double x) { return std::tanh(a(x)); };
          return [a = std::move(arg)](double x) { return std::exp(a(x)); };
        }
        if (name == "gauss") {
          expect('(');
          Fn mu = expr();
          expect(',');
          Fn sigma = expr();
          expect(')');
          return [m = std::move(mu), sg = std::move(sigma)](double x) {
            const double u = (x - m(x)) / sg(x);
            return std::exp(-u * u);
          };
        }
        pos = start;
        fail("unknown identifier '" + name + "'");
      }
      fail("unexpected character '" + std::string(1, c) + "'");
    }
  };

  std::string text_;
  Fn fn_;
};

}  // namespace relspec
