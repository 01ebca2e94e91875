#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdp {

struct UnrecordedNode : std::runtime_error {
  explicit UnrecordedNode(const char* what) : std::runtime_error(what) {}
};

class GradTape;

/// Handle to a scalar recorded on a GradTape.
struct Var {
  GradTape* tape = nullptr;
  std::uint32_t idx = 0;

  double val() const;
};

/// Reverse-mode scalar tape.  Primitives cover everything the losses and
/// marginal propagation need; `dot` is a fused inner product so dense
/// layers do not pay per-madd node overhead.
class GradTape {
 public:
  Var leaf(double value);
  Var constant(double value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var abs(Var a);
  Var erf(Var a);
  Var atan(Var a);
  Var sigmoid(Var a);
  Var max(Var a, Var b);
  Var relu(Var a);
  /// Heaviside step with the x = 0 point on the pass-through branch;
  /// derivative 0 everywhere (the ReLU-family scale factor).
  Var step(Var a);
  /// sum_i xs[i] * ws[i]
  Var dot(std::span<const Var> xs, std::span<const Var> ws);

  double value(Var v) const;

  /// Reverse sweep from `loss`; afterwards gradient(v) returns dloss/dv.
  void backward(Var loss);
  double gradient(Var v) const;

  /// Drop all nodes, keeping capacity.
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    Leaf, Const, Add, Sub, Mul, Div, Neg, Exp, Log, Sqrt, Abs, Erf, Atan,
    Sigmoid, Max, Relu, Step, Dot
  };
  struct Node {
    Op op;
    std::uint32_t a = 0, b = 0;
    std::uint32_t aux_off = 0, aux_len = 0;  // Dot: aux_len pairs in aux_
    double val = 0.0;
  };

  std::uint32_t push(Op op, std::uint32_t a, std::uint32_t b, double val);
  std::uint32_t check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> aux_;
  std::vector<double> grad_;
};

// Convenience operators.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator-(Var a, double b);
Var operator*(Var a, double b);
Var operator/(Var a, double b);
Var operator+(double a, Var b);
Var operator-(double a, Var b);
Var operator*(double a, Var b);
Var operator/(double a, Var b);

}  // namespace sdp
