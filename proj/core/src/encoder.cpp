#include "regnet/encoder.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "regnet/error.hpp"
#include "regnet/rng.hpp"

namespace regnet {
namespace {

constexpr std::string_view kMagic = "regnet-encoder";
constexpr int kFormatVersion = 1;

void write_values(std::ostream& out, std::string_view tag, const Tensor& t) {
  out << tag;
  char buf[32];
  for (double x : t.data()) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
  }
  out << '\n';
}

Tensor read_values(std::istream& in, std::string_view tag, std::size_t rows, std::size_t cols) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint truncated before '" + std::string(tag) + "'");
  std::istringstream ls(line);
  std::string word;
  ls >> word;
  if (word != tag) {
    throw IoError("checkpoint: expected '" + std::string(tag) + "', found '" + word + "'");
  }
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(ls >> word)) throw IoError("checkpoint: too few values for '" + std::string(tag) + "'");
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), x);
    if (ec != std::errc() || ptr != word.data() + word.size()) {
      throw IoError("checkpoint: bad number '" + word + "'");
    }
    if (!std::isfinite(x)) throw IoError("checkpoint: non-finite value '" + word + "'");
    t[i] = x;
  }
  if (ls >> word) throw IoError("checkpoint: too many values for '" + std::string(tag) + "'");
  return t;
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "none";
}

Activation parse_activation(std::string_view name) {
  if (name == "none") return Activation::kNone;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t EncoderParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().weight.cols();
}

std::size_t EncoderParams::output_dim() const {
  return layers.empty() ? 0 : layers.back().weight.rows();
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<Tensor*> EncoderParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> EncoderParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void validate_layer_spec(const std::vector<LayerSpec>& spec) {
  if (spec.empty()) throw ConfigError("encoder needs at least one layer");
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].in == 0 || spec[i].out == 0) {
      throw ConfigError("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i + 1 < spec.size() && spec[i].out != spec[i + 1].in) {
      throw ConfigError("layer " + std::to_string(i) + " outputs " + std::to_string(spec[i].out) +
                        " but layer " + std::to_string(i + 1) + " expects " +
                        std::to_string(spec[i + 1].in));
    }
  }
}

std::vector<LayerSpec> mlp_spec(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                std::size_t output_dim, Activation hidden_activation) {
  std::vector<LayerSpec> spec;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    spec.push_back({in, h, hidden_activation});
    in = h;
  }
  spec.push_back({in, output_dim, Activation::kNone});
  return spec;
}

EncoderParams init_encoder(std::uint64_t seed, const std::vector<LayerSpec>& spec) {
  validate_layer_spec(spec);
  Rng rng(seed);
  EncoderParams params;
  for (const auto& s : spec) {
    const double half_width = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    params.layers.push_back(Layer{Tensor::random_uniform(s.out, s.in, rng, -half_width, half_width),
                                  Tensor(s.out, 1), s.activation});
  }
  return params;
}

BoundEncoder::BoundEncoder(const EncoderParams& params, Tape& tape)
    : params_(&params), tape_(&tape) {
  for (const Tensor* t : params.tensors()) leaves_.push_back(tape.variable(*t));
}

EncoderParams BoundEncoder::gradients() const {
  EncoderParams g = *params_;
  auto dst = g.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = leaves_[i].grad();
  return g;
}

Var embed(const BoundEncoder& encoder, const Var& batch) {
  const auto& layers = encoder.params().layers;
  if (batch.rows() != encoder.params().input_dim()) {
    throw ShapeError("embed: batch has " + std::to_string(batch.rows()) +
                     " rows, encoder expects " + std::to_string(encoder.params().input_dim()));
  }
  Var h = batch;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = add_column(matmul(encoder.leaves()[2 * i], h), encoder.leaves()[2 * i + 1]);
    switch (layers[i].activation) {
      case Activation::kNone: break;
      case Activation::kTanh: h = tanh(h); break;
      case Activation::kRelu: h = relu(h); break;
    }
  }
  return h;
}

Var embed(const BoundEncoder& encoder, const Tensor& batch) {
  return embed(encoder, encoder.tape().constant(batch));
}

void save_encoder(const EncoderParams& params, std::ostream& out) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "layers " << params.layers.size() << '\n';
  for (const auto& l : params.layers) {
    out << "layer " << l.weight.rows() << ' ' << l.weight.cols() << ' '
        << activation_name(l.activation) << '\n';
    write_values(out, "w", l.weight);
    write_values(out, "b", l.bias);
  }
  out << "end\n";
}

EncoderParams load_encoder(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw IoError("not a regnet encoder checkpoint");
  if (version != kFormatVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "layers") throw IoError("checkpoint: missing layer count");
  EncoderParams params;
  std::vector<LayerSpec> spec;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t rows = 0, cols = 0;
    std::string act;
    if (!(in >> word >> rows >> cols >> act) || word != "layer") {
      throw IoError("checkpoint: bad header for layer " + std::to_string(i));
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    Layer layer;
    try {
      layer.activation = parse_activation(act);
    } catch (const ConfigError& e) {
      throw IoError(std::string("checkpoint: ") + e.what());
    }
    layer.weight = read_values(in, "w", rows, cols);
    layer.bias = read_values(in, "b", rows, 1);
    spec.push_back({cols, rows, layer.activation});
    params.layers.push_back(std::move(layer));
  }
  if (!(in >> word) || word != "end") throw IoError("checkpoint: missing 'end' marker");
  try {
    validate_layer_spec(spec);
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  return params;
}

void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  save_encoder(params, out);
  if (!out) throw IoError("write failed for " + path.string());
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return load_encoder(in);
}

}  // namespace regnet
