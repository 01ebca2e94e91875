#include "sdp/tape.hpp"

#include <cmath>
#include <numbers>

namespace sdp {

double Var::val() const { return tape->value(*this); }

std::uint32_t GradTape::push(Op op, std::uint32_t a, std::uint32_t b, double val) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.val = val;
  nodes_.push_back(n);
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t GradTape::check(Var v) const {
  if (v.tape != this || v.idx >= nodes_.size())
    throw UnrecordedNode("Var not recorded on this tape");
  return v.idx;
}

Var GradTape::leaf(double value) { return {this, push(Op::Leaf, 0, 0, value)}; }
Var GradTape::constant(double value) { return {this, push(Op::Const, 0, 0, value)}; }

Var GradTape::add(Var a, Var b) {
  return {this, push(Op::Add, check(a), check(b), nodes_[a.idx].val + nodes_[b.idx].val)};
}
Var GradTape::sub(Var a, Var b) {
  return {this, push(Op::Sub, check(a), check(b), nodes_[a.idx].val - nodes_[b.idx].val)};
}
Var GradTape::mul(Var a, Var b) {
  return {this, push(Op::Mul, check(a), check(b), nodes_[a.idx].val * nodes_[b.idx].val)};
}
Var GradTape::div(Var a, Var b) {
  return {this, push(Op::Div, check(a), check(b), nodes_[a.idx].val / nodes_[b.idx].val)};
}
Var GradTape::neg(Var a) { return {this, push(Op::Neg, check(a), 0, -nodes_[a.idx].val)}; }
Var GradTape::exp(Var a) {
  return {this, push(Op::Exp, check(a), 0, std::exp(nodes_[a.idx].val))};
}
Var GradTape::log(Var a) {
  return {this, push(Op::Log, check(a), 0, std::log(nodes_[a.idx].val))};
}
Var GradTape::sqrt(Var a) {
  return {this, push(Op::Sqrt, check(a), 0, std::sqrt(nodes_[a.idx].val))};
}
Var GradTape::abs(Var a) {
  return {this, push(Op::Abs, check(a), 0, std::fabs(nodes_[a.idx].val))};
}
Var GradTape::erf(Var a) {
  return {this, push(Op::Erf, check(a), 0, std::erf(nodes_[a.idx].val))};
}
Var GradTape::atan(Var a) {
  return {this, push(Op::Atan, check(a), 0, std::atan(nodes_[a.idx].val))};
}
Var GradTape::sigmoid(Var a) {
  const double x = nodes_[check(a)].val;
  const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                            : std::exp(x) / (1.0 + std::exp(x));
  return {this, push(Op::Sigmoid, a.idx, 0, s)};
}
Var GradTape::max(Var a, Var b) {
  const double va = nodes_[check(a)].val;
  const double vb = nodes_[check(b)].val;
  return {this, push(Op::Max, a.idx, b.idx, va >= vb ? va : vb)};
}
Var GradTape::relu(Var a) {
  const double v = nodes_[check(a)].val;
  return {this, push(Op::Relu, a.idx, 0, v > 0.0 ? v : 0.0)};
}
Var GradTape::step(Var a) {
  return {this, push(Op::Step, check(a), 0, nodes_[check(a)].val >= 0.0 ? 1.0 : 0.0)};
}

Var GradTape::dot(std::span<const Var> xs, std::span<const Var> ws) {
  if (xs.size() != ws.size()) throw UnrecordedNode("dot: length mismatch");
  const std::uint32_t off = static_cast<std::uint32_t>(aux_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::uint32_t xi = check(xs[i]);
    const std::uint32_t wi = check(ws[i]);
    aux_.push_back(xi);
    aux_.push_back(wi);
    acc += nodes_[xi].val * nodes_[wi].val;
  }
  Node n;
  n.op = Op::Dot;
  n.aux_off = off;
  n.aux_len = static_cast<std::uint32_t>(xs.size());
  n.val = acc;
  nodes_.push_back(n);
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

double GradTape::value(Var v) const { return nodes_[check(v)].val; }

void GradTape::backward(Var loss) {
  const std::uint32_t root = check(loss);
  grad_.assign(nodes_.size(), 0.0);
  grad_[root] = 1.0;
  for (std::uint32_t i = root + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    const double g = grad_[i];
    if (g == 0.0) continue;
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
      case Op::Step:
        break;
      case Op::Add:
        grad_[n.a] += g;
        grad_[n.b] += g;
        break;
      case Op::Sub:
        grad_[n.a] += g;
        grad_[n.b] -= g;
        break;
      case Op::Mul:
        grad_[n.a] += g * nodes_[n.b].val;
        grad_[n.b] += g * nodes_[n.a].val;
        break;
      case Op::Div: {
        const double vb = nodes_[n.b].val;
        grad_[n.a] += g / vb;
        grad_[n.b] -= g * nodes_[n.a].val / (vb * vb);
        break;
      }
      case Op::Neg:
        grad_[n.a] -= g;
        break;
      case Op::Exp:
        grad_[n.a] += g * n.val;
        break;
      case Op::Log:
        grad_[n.a] += g / nodes_[n.a].val;
        break;
      case Op::Sqrt:
        grad_[n.a] += g * 0.5 / n.val;
        break;
      case Op::Abs:
        grad_[n.a] += nodes_[n.a].val >= 0.0 ? g : -g;
        break;
      case Op::Erf: {
        const double x = nodes_[n.a].val;
        grad_[n.a] += g * 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
        break;
      }
      case Op::Atan: {
        const double x = nodes_[n.a].val;
        grad_[n.a] += g / (1.0 + x * x);
        break;
      }
      case Op::Sigmoid:
        grad_[n.a] += g * n.val * (1.0 - n.val);
        break;
      case Op::Max:
        if (nodes_[n.a].val >= nodes_[n.b].val)
          grad_[n.a] += g;
        else
          grad_[n.b] += g;
        break;
      case Op::Relu:
        if (nodes_[n.a].val >= 0.0) grad_[n.a] += g;
        break;
      case Op::Dot: {
        const std::uint32_t* pairs = &aux_[n.aux_off];
        for (std::uint32_t k = 0; k < n.aux_len; ++k) {
          const std::uint32_t x = pairs[2 * k];
          const std::uint32_t w = pairs[2 * k + 1];
          grad_[x] += g * nodes_[w].val;
          grad_[w] += g * nodes_[x].val;
        }
        break;
      }
    }
  }
}

double GradTape::gradient(Var v) const {
  const std::uint32_t i = check(v);
  if (i >= grad_.size()) throw UnrecordedNode("gradient: run backward first");
  return grad_[i];
}

void GradTape::clear() {
  nodes_.clear();
  aux_.clear();
  grad_.clear();
}

Var operator+(Var a, Var b) { return a.tape->add(a, b); }
Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
Var operator/(Var a, Var b) { return a.tape->div(a, b); }
Var operator-(Var a) { return a.tape->neg(a); }
Var operator+(Var a, double b) { return a + a.tape->constant(b); }
Var operator-(Var a, double b) { return a - a.tape->constant(b); }
Var operator*(Var a, double b) { return a * a.tape->constant(b); }
Var operator/(Var a, double b) { return a / a.tape->constant(b); }
Var operator+(double a, Var b) { return b.tape->constant(a) + b; }
Var operator-(double a, Var b) { return b.tape->constant(a) - b; }
Var operator*(double a, Var b) { return b.tape->constant(a) * b; }
Var operator/(double a, Var b) { return b.tape->constant(a) / b; }

}  // namespace sdp
