#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "oracles.hpp"
#include "regnet/encoder.hpp"
#include "regnet/error.hpp"

using namespace regnet;

namespace {

// Tape-free forward pass of one column.
std::vector<double> forward(const EncoderParams& p, std::vector<double> x) {
  for (const auto& layer : p.layers) {
    std::vector<double> y(layer.weight.rows());
    for (std::size_t i = 0; i < y.size(); ++i) {
      double acc = layer.bias[i];
      for (std::size_t j = 0; j < x.size(); ++j) acc += layer.weight(i, j) * x[j];
      if (layer.activation == Activation::kTanh) acc = std::tanh(acc);
      if (layer.activation == Activation::kRelu) acc = acc > 0 ? acc : 0.0;
      y[i] = acc;
    }
    x = std::move(y);
  }
  return x;
}

Tensor embed_values(const EncoderParams& p, const Tensor& batch) {
  Tape tape;
  BoundEncoder enc(p, tape);
  return embed(enc, batch).value();
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("init is deterministic with zero biases") {
  const auto spec = mlp_spec(4, {}, 3);
  CHECK(init_encoder(9, spec) == init_encoder(9, spec));
  CHECK_FALSE(init_encoder(9, spec) == init_encoder(10, spec));
  const auto p = init_encoder(1, mlp_spec(8, {6, 5}, 4));
  for (const auto& layer : p.layers) CHECK(layer.bias == Tensor(layer.bias.rows(), 1));
  CHECK(p.input_dim() == 8);
  CHECK(p.output_dim() == 4);
  CHECK(p.parameter_count() == 8 * 6 + 6 + 6 * 5 + 5 + 5 * 4 + 4);
}

TEST_CASE("init weights follow the scaled uniform law") {
  const auto p = init_encoder(3, {{100, 100, Activation::kNone}});
  const double half = std::sqrt(6.0 / 200.0);
  std::vector<double> w(p.layers[0].weight.values());
  for (double x : w) CHECK(std::abs(x) <= half);
  const double sigma = half / std::sqrt(3.0);
  CHECK(std::abs(oracle::mean(w)) < 3.0 * sigma / std::sqrt(static_cast<double>(w.size())));
  CHECK(std::abs(oracle::sample_std(w) - sigma) < 0.02 * sigma);
}

TEST_CASE("broken layer chain is a config error") {
  CHECK_THROWS_AS(init_encoder(0, {{4, 3, Activation::kRelu}, {2, 5, Activation::kNone}}),
                  ConfigError);
  CHECK_THROWS_AS(init_encoder(0, {}), ConfigError);
}

TEST_CASE("identity network passes inputs through") {
  EncoderParams p;
  p.layers.push_back({Tensor::identity(3), Tensor(3, 1), Activation::kNone});
  const Tensor x = Tensor::from_rows({{1, -2}, {3, 4}, {-5, 6}});
  CHECK(embed_values(p, x) == x);
}

TEST_CASE("forward pass matches a tape-free evaluation") {
  Rng rng(4);
  auto p = init_encoder(4, mlp_spec(6, {7, 5}, 3, Activation::kTanh));
  for (Tensor* t : p.tensors()) *t = Tensor::random_normal(t->rows(), t->cols(), rng);
  p.layers[1].activation = Activation::kRelu;
  const Tensor batch = Tensor::random_normal(6, 9, rng);
  const Tensor out = embed_values(p, batch);
  for (std::size_t c = 0; c < batch.cols(); ++c) {
    const auto ref = forward(p, batch.col(c).values());
    for (std::size_t r = 0; r < ref.size(); ++r) CHECK(std::abs(out(r, c) - ref[r]) < 1e-14);
  }
}

TEST_CASE("batching and column permutation") {
  Rng rng(5);
  const auto p = init_encoder(5, mlp_spec(4, {8}, 3));
  const Tensor batch = Tensor::random_normal(4, 6, rng);
  const Tensor out = embed_values(p, batch);
  for (std::size_t c = 0; c < 6; ++c) CHECK(embed_values(p, batch.col(c)) == out.col(c));
  const std::size_t perm[] = {3, 0, 5, 1, 4, 2};
  Tensor permuted(4, 6);
  for (std::size_t c = 0; c < 6; ++c) permuted.set_col(c, batch.col(perm[c]));
  const Tensor out_p = embed_values(p, permuted);
  for (std::size_t c = 0; c < 6; ++c) CHECK(out_p.col(c) == out.col(perm[c]));
  CHECK(embed_values(p, batch) == out);
}

TEST_CASE("embed rejects the wrong input dimension") {
  const auto p = init_encoder(5, mlp_spec(4, {8}, 3));
  CHECK_THROWS_AS(embed_values(p, Tensor(5, 2)), ShapeError);
}

TEST_CASE("checkpoint round trip is value-exact") {
  Rng rng(6);
  auto p = init_encoder(6, mlp_spec(5, {4}, 3, Activation::kTanh));
  for (Tensor* t : p.tensors()) *t = Tensor::random_normal(t->rows(), t->cols(), rng) * 1e-3;
  p.layers[0].weight(0, 0) = 1.0 / 3.0;
  p.layers[0].weight(1, 1) = -0.0;
  p.layers[1].bias[0] = 5e-324;
  std::stringstream buf;
  save_encoder(p, buf);
  CHECK(buf.str().rfind("regnet-encoder 1\n", 0) == 0);
  const EncoderParams q = load_encoder(buf);
  CHECK(q == p);
  for (std::size_t i = 0; i < p.tensors().size(); ++i) {
    const auto a = p.tensors()[i]->values(), b = q.tensors()[i]->values();
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("malformed checkpoints are io errors") {
  for (const char* text : {"", "regnet-encoder 2\nlayers 0\nend\n", "regnet-encoder 1\nlayers 1\n",
                           "regnet-encoder 1\nlayers 1\nlayer 2 2 relu\nw 1 2 3\nb 0 0\nend\n",
                           "regnet-encoder 1\nlayers 1\nlayer 1 1 sigmoid\nw 1\nb 0\nend\n",
                           "regnet-encoder 1\nlayers 1\nlayer 1 1 relu\nw nan\nb 0\nend\n",
                           "regnet-encoder 1\nlayers 1\nlayer 1 1 relu\nw 1\nb inf\nend\n"}) {
    std::istringstream in(text);
    CHECK_THROWS_AS(load_encoder(in), IoError);
  }
}

}  // TEST_SUITE
