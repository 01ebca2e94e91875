#include "sdp/network.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "sdp/special.hpp"

namespace sdp {

void Network::validate() const {
  std::size_t width = input_dim;
  for (const auto& layer : layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (d->weights.cols != width) throw DimMismatch("dense input width");
      if (d->bias.size() != d->weights.rows) throw DimMismatch("dense bias");
      width = d->weights.rows;
    } else if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
      if (a->kind == ActKind::LeakyReLU && !(a->slope > 0.0 && a->slope < 1.0))
        throw DimMismatch("leaky relu slope out of (0,1)");
    } else {
      const auto& mp = std::get<MaxPoolLayer>(layer);
      if (mp.group_size == 0 || width % mp.group_size != 0)
        throw DimMismatch("maxpool group size must divide width");
      width /= mp.group_size;
    }
  }
  if (width != output_dim) throw DimMismatch("output width");
}

double activation_value(ActKind kind, double slope, double x) {
  switch (kind) {
    case ActKind::ReLU:
      return x > 0.0 ? x : 0.0;
    case ActKind::LeakyReLU:
      return x > 0.0 ? x : slope * x;
    case ActKind::Sigmoid:
      return sigmoid(x);
    case ActKind::SiLU:
      return x * sigmoid(x);
    case ActKind::GELU:
      return x * std_normal_cdf(x);
  }
  return 0.0;
}

double activation_deriv(ActKind kind, double slope, double x) {
  switch (kind) {
    case ActKind::ReLU:
      return x >= 0.0 ? 1.0 : 0.0;
    case ActKind::LeakyReLU:
      return x >= 0.0 ? 1.0 : slope;
    case ActKind::Sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case ActKind::SiLU: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
    case ActKind::GELU:
      return std_normal_cdf(x) + x * std_normal_pdf(x);
  }
  return 0.0;
}

namespace {

Vector apply_layer(const Layer& layer, const Vector& x) {
  if (const auto* d = std::get_if<DenseLayer>(&layer))
    return add(matvec(d->weights, x), d->bias);
  if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = activation_value(a->kind, a->slope, x[i]);
    return y;
  }
  const auto& mp = std::get<MaxPoolLayer>(layer);
  const std::size_t g = mp.group_size;
  Vector y(x.size() / g);
  for (std::size_t i = 0; i < y.size(); ++i) {
    double best = x[i * g];
    for (std::size_t j = 1; j < g; ++j) best = std::max(best, x[i * g + j]);
    y[i] = best;
  }
  return y;
}

// Lowest index wins on ties.
std::size_t group_argmax(const Vector& x, std::size_t base, std::size_t g) {
  std::size_t arg = base;
  for (std::size_t j = 1; j < g; ++j)
    if (x[base + j] > x[arg]) arg = base + j;
  return arg;
}

}  // namespace

Vector forward(const Network& net, const Vector& x) {
  if (x.size() != net.input_dim) throw DimMismatch("forward: input dim");
  Vector v = x;
  for (const auto& layer : net.layers) v = apply_layer(layer, v);
  return v;
}

std::vector<Vector> forward_trace(const Network& net, const Vector& x) {
  if (x.size() != net.input_dim) throw DimMismatch("forward_trace: input dim");
  std::vector<Vector> trace;
  trace.reserve(net.layers.size() + 1);
  trace.push_back(x);
  for (const auto& layer : net.layers) trace.push_back(apply_layer(layer, trace.back()));
  return trace;
}

Vector vjp(const Network& net, const std::vector<Vector>& trace, const Vector& v) {
  Vector g = v;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const Vector& in = trace[li];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      g = matvec_t(d->weights, g);
    } else if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] *= activation_deriv(a->kind, a->slope, in[i]);
    } else {
      const auto& mp = std::get<MaxPoolLayer>(layer);
      Vector expanded(in.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i)
        expanded[group_argmax(in, i * mp.group_size, mp.group_size)] = g[i];
      g = std::move(expanded);
    }
  }
  return g;
}

Matrix jacobian(const Network& net, const Vector& x) {
  if (x.size() != net.input_dim) throw DimMismatch("jacobian: input dim");
  if (net.input_dim <= net.output_dim) {
    // Forward mode: carry d(out)/d(x_j) columns alongside the value.
    Vector v = x;
    Matrix jac = Matrix::identity(net.input_dim);  // rows track current layer width
    for (const auto& layer : net.layers) {
      if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        jac = matmul(d->weights, jac);
      } else if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          const double deriv = activation_deriv(a->kind, a->slope, v[i]);
          for (std::size_t j = 0; j < jac.cols; ++j) jac(i, j) *= deriv;
        }
      } else {
        const auto& mp = std::get<MaxPoolLayer>(layer);
        Matrix pooled(v.size() / mp.group_size, jac.cols);
        for (std::size_t i = 0; i < pooled.rows; ++i) {
          const std::size_t arg = group_argmax(v, i * mp.group_size, mp.group_size);
          for (std::size_t j = 0; j < jac.cols; ++j) pooled(i, j) = jac(arg, j);
        }
        jac = std::move(pooled);
      }
      v = apply_layer(layer, v);
    }
    return jac;
  }
  // Reverse mode: one VJP per output dimension.
  const auto trace = forward_trace(net, x);
  Matrix jac(net.output_dim, net.input_dim);
  Vector e(net.output_dim, 0.0);
  for (std::size_t i = 0; i < net.output_dim; ++i) {
    e[i] = 1.0;
    const Vector row = vjp(net, trace, e);
    e[i] = 0.0;
    for (std::size_t j = 0; j < net.input_dim; ++j) jac(i, j) = row[j];
  }
  return jac;
}

Network init_params(const ShapeSpec& spec, SeededRng& rng) {
  Network net;
  net.input_dim = spec.input_dim;
  net.output_dim = spec.output_dim;
  std::size_t fan_in = spec.input_dim;
  auto dense = [&](std::size_t out_w) {
    DenseLayer d;
    d.weights = Matrix(out_w, fan_in);
    d.bias = Vector(out_w, 0.0);
    const double bound = std::numbers::sqrt3 * std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& w : d.weights.data) w = bound * (2.0 * rng.uniform() - 1.0);
    fan_in = out_w;
    return d;
  };
  for (std::size_t width : spec.hidden) {
    net.layers.emplace_back(dense(width));
    net.layers.emplace_back(ActivationLayer{spec.activation, spec.leaky_slope});
  }
  net.layers.emplace_back(dense(spec.output_dim));
  net.validate();
  return net;
}

namespace {

const char* act_name(ActKind k) {
  switch (k) {
    case ActKind::ReLU: return "relu";
    case ActKind::LeakyReLU: return "leaky_relu";
    case ActKind::Sigmoid: return "sigmoid";
    case ActKind::SiLU: return "silu";
    case ActKind::GELU: return "gelu";
  }
  return "relu";
}

ActKind act_from_name(const std::string& s) {
  if (s == "relu") return ActKind::ReLU;
  if (s == "leaky_relu") return ActKind::LeakyReLU;
  if (s == "sigmoid") return ActKind::Sigmoid;
  if (s == "silu") return ActKind::SiLU;
  if (s == "gelu") return ActKind::GELU;
  throw std::invalid_argument("unknown activation kind: " + s);
}

}  // namespace

std::string to_json(const Network& net) {
  nlohmann::json j;
  j["input_dim"] = net.input_dim;
  j["output_dim"] = net.output_dim;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    nlohmann::json lj;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      lj["type"] = "dense";
      lj["rows"] = d->weights.rows;
      lj["cols"] = d->weights.cols;
      lj["weights"] = d->weights.data;
      lj["bias"] = d->bias;
    } else if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
      lj["type"] = "activation";
      lj["kind"] = act_name(a->kind);
      if (a->kind == ActKind::LeakyReLU) lj["slope"] = a->slope;
    } else {
      lj["type"] = "maxpool";
      lj["group_size"] = std::get<MaxPoolLayer>(layer).group_size;
    }
    j["layers"].push_back(std::move(lj));
  }
  return j.dump(2);
}

Network network_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  Network net;
  net.input_dim = j.at("input_dim").get<std::size_t>();
  net.output_dim = j.at("output_dim").get<std::size_t>();
  for (const auto& lj : j.at("layers")) {
    const std::string type = lj.at("type").get<std::string>();
    if (type == "dense") {
      DenseLayer d;
      d.weights = Matrix(lj.at("rows").get<std::size_t>(), lj.at("cols").get<std::size_t>());
      d.weights.data = lj.at("weights").get<std::vector<double>>();
      if (d.weights.data.size() != d.weights.rows * d.weights.cols)
        throw DimMismatch("network json: weight count");
      d.bias = lj.at("bias").get<Vector>();
      net.layers.emplace_back(std::move(d));
    } else if (type == "activation") {
      ActivationLayer a;
      a.kind = act_from_name(lj.at("kind").get<std::string>());
      if (lj.contains("slope")) a.slope = lj.at("slope").get<double>();
      net.layers.emplace_back(a);
    } else if (type == "maxpool") {
      net.layers.emplace_back(MaxPoolLayer{lj.at("group_size").get<std::size_t>()});
    } else {
      throw std::invalid_argument("unknown layer type: " + type);
    }
  }
  net.validate();
  return net;
}

void save_network(const Network& net, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << to_json(net) << "\n";
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return network_from_json(ss.str());
}

std::size_t param_count(const Network& net) {
  std::size_t n = 0;
  for (const auto& layer : net.layers)
    if (const auto* d = std::get_if<DenseLayer>(&layer))
      n += d->weights.data.size() + d->bias.size();
  return n;
}

void get_params(const Network& net, Vector& out) {
  out.clear();
  out.reserve(param_count(net));
  for (const auto& layer : net.layers)
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      out.insert(out.end(), d->weights.data.begin(), d->weights.data.end());
      out.insert(out.end(), d->bias.begin(), d->bias.end());
    }
}

void set_params(Network& net, const Vector& params) {
  std::size_t off = 0;
  for (auto& layer : net.layers)
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
      for (double& w : d->weights.data) w = params[off++];
      for (double& b : d->bias) b = params[off++];
    }
  if (off != params.size()) throw DimMismatch("set_params: parameter count");
}

}  // namespace sdp
