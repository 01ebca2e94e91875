#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sdp/matrix.hpp"
#include "sdp/rng.hpp"

namespace sdp {

enum class ActKind { ReLU, LeakyReLU, Sigmoid, SiLU, GELU };

struct DenseLayer {
  Matrix weights;  // m x n
  Vector bias;     // m
};

struct ActivationLayer {
  ActKind kind = ActKind::ReLU;
  double slope = 0.01;  // LeakyReLU only, in (0,1)
};

struct MaxPoolLayer {
  std::size_t group_size = 2;
};

using Layer = std::variant<DenseLayer, ActivationLayer, MaxPoolLayer>;

struct Network {
  std::vector<Layer> layers;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;

  void validate() const;  // throws DimMismatch if layer dims do not chain
};

// Scalar activation value and derivative.  Convention: ReLU'(0) = 1 and
// LeakyReLU'(0) = 1, matching the pass-through branch of the propagation
// rule for locations at exactly 0.
double activation_value(ActKind kind, double slope, double x);
double activation_deriv(ActKind kind, double slope, double x);

Vector forward(const Network& net, const Vector& x);

// Inputs seen by each layer during forward; back() is the network output.
std::vector<Vector> forward_trace(const Network& net, const Vector& x);

// output_dim x input_dim Jacobian at x.  Uses forward-mode sweeps when
// input_dim <= output_dim and reverse-mode otherwise, so the cost stays at
// around min(k_in, k_out) network evaluations.
Matrix jacobian(const Network& net, const Vector& x);

// One vector-Jacobian product v^T J given a forward trace (reverse sweep).
Vector vjp(const Network& net, const std::vector<Vector>& trace, const Vector& v);

struct ShapeSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // widths of hidden Dense+activation blocks
  std::size_t output_dim = 0;
  ActKind activation = ActKind::ReLU;
  double leaky_slope = 0.01;
};

// Kaiming-uniform fan-in init for Dense weights, zero bias.
Network init_params(const ShapeSpec& spec, SeededRng& rng);

// JSON schema: {"input_dim": n, "output_dim": m, "layers": [
//   {"type":"dense","rows":m,"cols":n,"weights":[...row-major...],"bias":[...]},
//   {"type":"activation","kind":"relu"|"leaky_relu"|"sigmoid"|"silu"|"gelu","slope":s},
//   {"type":"maxpool","group_size":g}]}
std::string to_json(const Network& net);
Network network_from_json(const std::string& json_text);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

std::size_t param_count(const Network& net);
void get_params(const Network& net, Vector& out);
void set_params(Network& net, const Vector& params);

}  // namespace sdp
