#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "regnet/autodiff.hpp"
#include "regnet/tensor.hpp"

namespace regnet {

enum class Activation { kNone, kTanh, kRelu };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kRelu;
};

struct Layer {
  Tensor weight;  // out x in
  Tensor bias;    // out x 1
  Activation activation = Activation::kRelu;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Parameters of the MLP embedding f: R^D -> R^M.
struct EncoderParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  // Weights and biases in layer order: w0, b0, w1, b1, ...
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

// Throws ConfigError if consecutive dimensions do not chain.
void validate_layer_spec(const std::vector<LayerSpec>& spec);

// D -> hidden (relu) -> ... -> M with a linear output layer.
std::vector<LayerSpec> mlp_spec(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                std::size_t output_dim,
                                Activation hidden_activation = Activation::kRelu);

// Glorot-uniform weights (half-width sqrt(6 / (in + out))), zero biases.
EncoderParams init_encoder(std::uint64_t seed, const std::vector<LayerSpec>& spec);

// Encoder parameters registered as differentiable leaves of one tape.
class BoundEncoder {
 public:
  BoundEncoder(const EncoderParams& params, Tape& tape);

  Tape& tape() const noexcept { return *tape_; }
  const std::vector<Var>& leaves() const noexcept { return leaves_; }
  const EncoderParams& params() const noexcept { return *params_; }

  // Gradients of the last backward pass, shaped like the parameters.
  EncoderParams gradients() const;

 private:
  const EncoderParams* params_;
  Tape* tape_;
  std::vector<Var> leaves_;
};

// Columns of `batch` (D x B) are examples; returns the M x B embedding.
Var embed(const BoundEncoder& encoder, const Var& batch);
Var embed(const BoundEncoder& encoder, const Tensor& batch);

// Checkpoint I/O. Text format, see README ("Checkpoint format").
void save_encoder(const EncoderParams& params, std::ostream& out);
EncoderParams load_encoder(std::istream& in);
void save_encoder(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_encoder(const std::filesystem::path& path);

}  // namespace regnet
