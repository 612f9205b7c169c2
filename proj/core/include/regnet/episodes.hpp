#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "regnet/rng.hpp"
#include "regnet/tensor.hpp"

namespace regnet {

enum class Split { kTrain, kVal, kTest, kAll };

std::string split_name(Split split);

// Labeled feature vectors, stored column-wise (D x count).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, Tensor features, std::vector<int> labels, Split split = Split::kAll);

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  Split split() const noexcept { return split_; }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t feature_dim() const noexcept { return features_.rows(); }
  const Tensor& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  Tensor example(std::size_t i) const { return features_.col(i); }
  int label(std::size_t i) const { return labels_.at(i); }

  // Class id -> indices of its examples, in dataset order.
  const std::map<int, std::vector<std::size_t>>& class_index() const noexcept { return index_; }
  std::vector<int> classes() const;
  std::size_t class_count() const noexcept { return index_.size(); }

  // Examples whose class is in `keep`, preserving order.
  Dataset subset(const std::vector<int>& keep, std::string name, Split split) const;

 private:
  std::string name_;
  Tensor features_;
  std::vector<int> labels_;
  Split split_ = Split::kAll;
  std::map<int, std::vector<std::size_t>> index_;
};

// One N-way K-shot task. Columns are class-major: support column n*K + k and
// query column n*Q + q belong to episode class n.
struct Episode {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t q_query = 0;
  Tensor support;  // D x (N*K)
  Tensor queries;  // D x (N*Q)
  std::vector<std::size_t> support_labels;
  std::vector<std::size_t> query_labels;
  std::vector<int> classes;                  // episode class n -> original class id
  std::vector<std::size_t> support_indices;  // dataset example indices
  std::vector<std::size_t> query_indices;

  // Original id -> episode label.
  std::map<int, std::size_t> relabeling() const;
};

Episode sample_episode(const Dataset& data, std::size_t n_way, std::size_t k_shot,
                       std::size_t q_query, Rng& rng);

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n_classes = 30;
  std::size_t per_class = 50;
  std::size_t dim = 32;
  double spread = 1.0;
  double within_std = 0.5;
  // Optional class-independent nuisance: the first `nuisance_dims`
  // coordinates get extra Gaussian noise with this std. Zero keeps the noise
  // isotropic.
  std::size_t nuisance_dims = 0;
  double nuisance_std = 0.0;
};

// Class centers uniform in [-spread, spread]^D, examples are center plus
// Gaussian noise (isotropic unless nuisance is set). Class ids are
// 0..n_classes-1.
Dataset synth_gaussian(const SynthSpec& spec, std::string name = "synth");

// Adds `offset` to every example.
Dataset translate(const Dataset& data, const Tensor& offset, std::string name);

// CSV: header line, then `label,f1,...,fD` rows.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& data, const std::filesystem::path& path);
Dataset parse_csv(const std::string& text, std::string name);

struct ClassSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Class-level partition. val and test get floor(fraction * classes) classes
// each, train gets the remainder. Deterministic given seed.
ClassSplit split_classes(const Dataset& data, const std::array<double, 3>& fractions,
                         std::uint64_t seed);

}  // namespace regnet
