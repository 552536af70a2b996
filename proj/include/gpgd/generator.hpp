#pragma once

#include "gpgd/core.hpp"

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

//! @file generator.hpp
//! Feedforward generative networks G: R^k -> R^n built from affine layers and
//! pointwise activations, with forward evaluation and vector-Jacobian products.

namespace gpgd {

//------------------------------------------------------------------------------
// Activations

enum class ActivationKind { identity, relu, leaky_relu, tanh };

class Activation
{
public:
  Activation() = default;

  static Activation identity() { return Activation(ActivationKind::identity, 0.0); }
  static Activation relu() { return Activation(ActivationKind::relu, 0.0); }
  static Activation tanh() { return Activation(ActivationKind::tanh, 0.0); }
  static Activation leaky_relu(double slope)
  {
    require(slope > 0.0 && slope < 1.0, "leaky-relu slope must lie strictly inside (0, 1)");
    return Activation(ActivationKind::leaky_relu, slope);
  }

  ActivationKind kind() const { return kind_; }
  double slope() const { return slope_; }

  double apply(double t) const
  {
    switch (kind_) {
      case ActivationKind::identity: return t;
      case ActivationKind::relu: return t > 0.0 ? t : 0.0;
      case ActivationKind::leaky_relu: return t > 0.0 ? t : slope_ * t;
      case ActivationKind::tanh: return std::tanh(t);
    }
    return t;
  }

  //! Derivative; kinks use the convention derivative(0) = 0 for relu and
  //! `slope` for leaky-relu (the left branch).
  double derivative(double t) const
  {
    switch (kind_) {
      case ActivationKind::identity: return 1.0;
      case ActivationKind::relu: return t > 0.0 ? 1.0 : 0.0;
      case ActivationKind::leaky_relu: return t > 0.0 ? 1.0 : slope_;
      case ActivationKind::tanh: {
        const double th = std::tanh(t);
        return 1.0 - th * th;
      }
    }
    return 1.0;
  }

  //! True for activations with a kink at zero.
  bool has_kink() const
  {
    return kind_ == ActivationKind::relu || kind_ == ActivationKind::leaky_relu;
  }

  std::string name() const
  {
    switch (kind_) {
      case ActivationKind::identity: return "identity";
      case ActivationKind::relu: return "relu";
      case ActivationKind::leaky_relu: return "leaky-relu";
      case ActivationKind::tanh: return "tanh";
    }
    return "identity";
  }

  //! Parses "identity", "relu", "tanh" or "leaky-relu" (slope required).
  static Activation parse(const std::string& name, std::optional<double> slope = std::nullopt)
  {
    if (name == "identity") return identity();
    if (name == "relu") return relu();
    if (name == "tanh") return tanh();
    if (name == "leaky-relu") {
      if (!slope) throw ConfigError("leaky-relu activation requires a slope");
      return leaky_relu(*slope);
    }
    throw ConfigError("unknown activation '" + name + "'");
  }

  friend bool operator==(const Activation&, const Activation&) = default;

private:
  Activation(ActivationKind kind, double slope) : kind_(kind), slope_(slope) {}

  ActivationKind kind_ = ActivationKind::identity;
  double slope_ = 0.0;
};

//------------------------------------------------------------------------------
// Layers and networks

struct Layer
{
  Matrix weights; // out_dim x in_dim
  Vector bias;    // out_dim
  Activation activation;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
};

//! Immutable feedforward network. Dimension chaining is validated at
//! construction; every public operation is a pure function of its inputs.
class GeneratorNetwork
{
public:
  explicit GeneratorNetwork(std::vector<Layer> layers) : layers_(std::move(layers))
  {
    require(!layers_.empty(), "generator needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& layer = layers_[i];
      require(layer.weights.rows() > 0 && layer.weights.cols() > 0,
              "layer " + std::to_string(i) + ": empty weight matrix");
      require(layer.bias.size() == layer.weights.rows(),
              "layer " + std::to_string(i) + ": bias length " + std::to_string(layer.bias.size()) +
                  " does not match weight rows " + std::to_string(layer.weights.rows()));
      if (i > 0)
        require(layers_[i - 1].out_dim() == layer.in_dim(),
                "layer " + std::to_string(i) + ": input dim " + std::to_string(layer.in_dim()) +
                    " does not chain with previous output dim " +
                    std::to_string(layers_[i - 1].out_dim()));
    }
  }

  Index latent_dim() const { return layers_.front().in_dim(); }
  Index output_dim() const { return layers_.back().out_dim(); }
  Index depth() const { return static_cast<Index>(layers_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }

  //! Single identity-activation layer, i.e. an affine map.
  bool is_affine() const
  {
    return layers_.size() == 1 && layers_.front().activation.kind() == ActivationKind::identity;
  }

  Vector forward(const Vector& z) const
  {
    check_latent(z);
    Vector h = z;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& layer = layers_[i];
      require(h.size() == layer.in_dim(), "forward: dimension mismatch at layer " + std::to_string(i));
      Vector pre = layer.weights * h + layer.bias;
      h = pre.unaryExpr([&](double t) { return layer.activation.apply(t); });
    }
    return h;
  }

  //! J(z)^T * cotangent, by reverse accumulation through the layers.
  Vector vjp(const Vector& z, const Vector& cotangent) const
  {
    check_latent(z);
    require(cotangent.size() == output_dim(),
            "vjp: cotangent length " + std::to_string(cotangent.size()) + " != output dim " +
                std::to_string(output_dim()));

    std::vector<Vector> preacts;
    preacts.reserve(layers_.size());
    Vector h = z;
    for (const Layer& layer : layers_) {
      preacts.push_back(layer.weights * h + layer.bias);
      h = preacts.back().unaryExpr([&](double t) { return layer.activation.apply(t); });
    }

    Vector g = cotangent;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const Layer& layer = layers_[i];
      const Vector& pre = preacts[i];
      for (Index j = 0; j < g.size(); ++j) g(j) *= layer.activation.derivative(pre(j));
      g = layer.weights.transpose() * g;
    }
    return g;
  }

  //! Preactivations of every layer at z (used to test for generic points).
  std::vector<Vector> preactivations(const Vector& z) const
  {
    check_latent(z);
    std::vector<Vector> out;
    Vector h = z;
    for (const Layer& layer : layers_) {
      out.push_back(layer.weights * h + layer.bias);
      h = out.back().unaryExpr([&](double t) { return layer.activation.apply(t); });
    }
    return out;
  }

  //! Smallest |preactivation| over kinked layers; +inf when there are none.
  double kink_margin(const Vector& z) const
  {
    double margin = std::numeric_limits<double>::infinity();
    const auto pre = preactivations(z);
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i].activation.has_kink()) margin = std::min(margin, pre[i].cwiseAbs().minCoeff());
    return margin;
  }

private:
  void check_latent(const Vector& z) const
  {
    require(z.size() == latent_dim(), "latent length " + std::to_string(z.size()) +
                                          " does not match layer 0 input dim " +
                                          std::to_string(latent_dim()));
    require(all_finite(z), "latent vector has non-finite entries");
  }

  std::vector<Layer> layers_;
};

inline Vector forward(const GeneratorNetwork& g, const Vector& z) { return g.forward(z); }

inline Vector vjp(const GeneratorNetwork& g, const Vector& z, const Vector& cotangent)
{
  return g.vjp(z, cotangent);
}

//------------------------------------------------------------------------------
// Constructors

//! Linear generator G(z) = W z. W must have full column rank.
inline GeneratorNetwork make_linear_generator(const Matrix& w)
{
  require(w.rows() >= w.cols() && w.cols() > 0, "linear generator needs n >= k >= 1");
  const double smin = smallest_singular_value(w);
  require(smin > 1e-10, "linear generator weights are rank deficient (smallest singular value " +
                            std::to_string(smin) + ")");
  return GeneratorNetwork({Layer{w, Vector::Zero(w.rows()), Activation::identity()}});
}

struct RandomGeneratorSpec
{
  Index latent_dim = 2;
  Index output_dim = 20;
  Index depth = 2;
  std::vector<Index> hidden_widths{8};
  Activation activation = Activation::relu();
  Activation output_activation = Activation::identity();
};

//! Random expansive network: Gaussian weights with variance 2/in_dim, zero
//! biases. Hidden layers use `activation`, the last layer `output_activation`.
//! Non-expansive width sequences are allowed but reported in `warnings`
//! (or on std::clog when no sink is given).
inline GeneratorNetwork make_random_generator(const RandomGeneratorSpec& spec, std::uint64_t seed,
                                              std::vector<std::string>* warnings = nullptr)
{
  require(spec.latent_dim >= 1 && spec.output_dim >= 1 && spec.depth >= 1,
          "random generator: k, n, d must be positive");
  require(static_cast<Index>(spec.hidden_widths.size()) == spec.depth - 1,
          "random generator: expected " + std::to_string(spec.depth - 1) + " hidden widths, got " +
              std::to_string(spec.hidden_widths.size()));

  std::vector<Index> dims{spec.latent_dim};
  dims.insert(dims.end(), spec.hidden_widths.begin(), spec.hidden_widths.end());
  dims.push_back(spec.output_dim);

  for (std::size_t i = 1; i < dims.size(); ++i) {
    require(dims[i] >= 1, "random generator: widths must be positive");
    if (dims[i] < dims[i - 1]) {
      const std::string msg = "random generator: width sequence is not expansive at layer " +
                              std::to_string(i - 1) + " (" + std::to_string(dims[i - 1]) + " -> " +
                              std::to_string(dims[i]) + ")";
      if (warnings)
        warnings->push_back(msg);
      else
        std::clog << "warning: " << msg << '\n';
    }
  }

  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const Index in = dims[i];
    const Index out = dims[i + 1];
    const bool last = i + 2 == dims.size();
    layers.push_back(Layer{rng.normal_matrix(out, in, std::sqrt(2.0 / static_cast<double>(in))),
                           Vector::Zero(out), last ? spec.output_activation : spec.activation});
  }
  return GeneratorNetwork(std::move(layers));
}

} // namespace gpgd
