#include "regnet/episodes.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>

#include "regnet/error.hpp"

namespace regnet {
namespace {

// Moves a uniformly random selection of `count` items to the front of `items`.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(items.size() - i));
    std::swap(items[i], items[j]);
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
}

std::string format_double(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

std::string split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kAll: return "all";
  }
  return "all";
}

Dataset::Dataset(std::string name, Tensor features, std::vector<int> labels, Split split)
    : name_(std::move(name)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      split_(split) {
  if (features_.cols() != labels_.size()) {
    throw ShapeError("Dataset: " + std::to_string(features_.cols()) + " feature columns but " +
                     std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) index_[labels_[i]].push_back(i);
}

std::vector<int> Dataset::classes() const {
  std::vector<int> out;
  out.reserve(index_.size());
  for (const auto& [id, _] : index_) out.push_back(id);
  return out;
}

Dataset Dataset::subset(const std::vector<int>& keep, std::string name, Split split) const {
  const std::set<int> wanted(keep.begin(), keep.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (wanted.count(labels_[i])) rows.push_back(i);
  }
  Tensor features(feature_dim(), rows.size());
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t r = 0; r < feature_dim(); ++r) features(r, j) = features_(r, rows[j]);
    labels.push_back(labels_[rows[j]]);
  }
  return Dataset(std::move(name), std::move(features), std::move(labels), split);
}

std::map<int, std::size_t> Episode::relabeling() const {
  std::map<int, std::size_t> out;
  for (std::size_t n = 0; n < classes.size(); ++n) out[classes[n]] = n;
  return out;
}

Episode sample_episode(const Dataset& data, std::size_t n_way, std::size_t k_shot,
                       std::size_t q_query, Rng& rng) {
  if (n_way == 0 || k_shot == 0 || q_query == 0) {
    throw SamplingError("sample_episode: N, K and Q must be positive");
  }
  const std::size_t needed = k_shot + q_query;
  std::vector<int> eligible;
  for (const auto& [id, members] : data.class_index()) {
    if (members.size() >= needed) eligible.push_back(id);
  }
  if (eligible.size() < n_way) {
    throw SamplingError("sample_episode: dataset '" + data.name() + "' has " +
                        std::to_string(eligible.size()) + " classes with at least " +
                        std::to_string(needed) + " examples, need " + std::to_string(n_way) +
                        " (short by " + std::to_string(n_way - eligible.size()) + ")");
  }
  partial_shuffle(eligible, n_way, rng);

  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.q_query = q_query;
  ep.classes.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(n_way));
  const std::size_t dim = data.feature_dim();
  ep.support = Tensor(dim, n_way * k_shot);
  ep.queries = Tensor(dim, n_way * q_query);
  const Tensor& feats = data.features();

  for (std::size_t n = 0; n < n_way; ++n) {
    std::vector<std::size_t> members = data.class_index().at(ep.classes[n]);
    partial_shuffle(members, needed, rng);
    for (std::size_t k = 0; k < k_shot; ++k) {
      const std::size_t col = n * k_shot + k;
      for (std::size_t r = 0; r < dim; ++r) ep.support(r, col) = feats(r, members[k]);
      ep.support_labels.push_back(n);
      ep.support_indices.push_back(members[k]);
    }
    for (std::size_t q = 0; q < q_query; ++q) {
      const std::size_t col = n * q_query + q;
      const std::size_t src = members[k_shot + q];
      for (std::size_t r = 0; r < dim; ++r) ep.queries(r, col) = feats(r, src);
      ep.query_labels.push_back(n);
      ep.query_indices.push_back(src);
    }
  }
  return ep;
}

Dataset synth_gaussian(const SynthSpec& spec, std::string name) {
  if (spec.n_classes < 2) throw ConfigError("synth_gaussian: need at least two classes");
  if (spec.dim == 0) throw ConfigError("synth_gaussian: dimension must be positive");
  if (!(spec.within_std >= 0.0) || !(spec.spread >= 0.0) || !(spec.nuisance_std >= 0.0)) {
    throw ConfigError("synth_gaussian: spread and noise levels must be >= 0");
  }
  if (spec.nuisance_dims > spec.dim) {
    throw ConfigError("synth_gaussian: nuisance_dims exceeds the dimension");
  }
  Rng rng(spec.seed);
  const Tensor centers =
      Tensor::random_uniform(spec.dim, spec.n_classes, rng, -spec.spread, spec.spread);
  Tensor features(spec.dim, spec.n_classes * spec.per_class);
  std::vector<int> labels;
  labels.reserve(features.cols());
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const std::size_t col = c * spec.per_class + i;
      for (std::size_t r = 0; r < spec.dim; ++r) {
        features(r, col) = centers(r, c) + spec.within_std * rng.normal();
      }
      for (std::size_t r = 0; r < spec.nuisance_dims; ++r) {
        features(r, col) += spec.nuisance_std * rng.normal();
      }
      labels.push_back(static_cast<int>(c));
    }
  }
  return Dataset(std::move(name), std::move(features), std::move(labels));
}

Dataset translate(const Dataset& data, const Tensor& offset, std::string name) {
  if (!offset.is_vector() || offset.rows() != data.feature_dim()) {
    throw ShapeError("translate: offset " + offset.shape_str() + " for dimension " +
                     std::to_string(data.feature_dim()));
  }
  Tensor features = data.features();
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) features(r, c) += offset[r];
  }
  return Dataset(std::move(name), std::move(features), data.labels(), data.split());
}

Dataset parse_csv(const std::string& text, std::string name) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!have_header) {
      have_header = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() < 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected label and features",
                       line_no);
    }
    if (dim == 0) dim = fields.size() - 1;
    if (fields.size() - 1 != dim) {
      throw ParseError("line " + std::to_string(line_no) + ": ragged row with " +
                           std::to_string(fields.size() - 1) + " features, expected " +
                           std::to_string(dim),
                       line_no);
    }
    int label = 0;
    if (!parse_number(fields[0], label)) {
      throw ParseError("line " + std::to_string(line_no) + ": label '" + std::string(fields[0]) +
                           "' is not an integer",
                       line_no);
    }
    labels.push_back(label);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double x = 0.0;
      if (!parse_number(fields[f], x) || !std::isfinite(x)) {
        throw ParseError("line " + std::to_string(line_no) + ": feature " + std::to_string(f) +
                             " '" + std::string(fields[f]) + "' is not a finite number",
                         line_no);
      }
      values.push_back(x);
    }
  }
  if (labels.empty()) {
    throw ParseError("csv '" + name + "': no data rows (empty file or header only)", line_no);
  }
  // Rows were read example-major; store them as columns.
  const std::size_t count = labels.size();
  Tensor features(dim, count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t r = 0; r < dim; ++r) features(r, i) = values[i * dim + r];
  }
  return Dataset(std::move(name), std::move(features), std::move(labels));
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.stem().string());
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "label";
  for (std::size_t r = 0; r < data.feature_dim(); ++r) out << ",f" << (r + 1);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.label(i);
    for (std::size_t r = 0; r < data.feature_dim(); ++r) {
      out << ',' << format_double(data.features()(r, i));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ClassSplit split_classes(const Dataset& data, const std::array<double, 3>& fractions,
                         std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split_classes: fractions must be >= 0");
    total += f;
  }
  if (total > 1.0 + 1e-9) throw ConfigError("split_classes: fractions sum above 1");

  std::vector<int> classes = data.classes();
  const std::size_t count = classes.size();
  // The small slack keeps products like 0.16 * 100 from flooring to 15.
  auto portion = [&](double f) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(count) + 1e-9));
  };
  const std::size_t n_val = portion(fractions[1]);
  const std::size_t n_test = portion(fractions[2]);
  if (n_val + n_test > count) throw ConfigError("split_classes: fractions exceed class count");
  const std::size_t n_train = count - n_val - n_test;

  Rng rng(seed);
  partial_shuffle(classes, count, rng);
  auto take = [&](std::size_t begin, std::size_t n) {
    return std::vector<int>(classes.begin() + static_cast<std::ptrdiff_t>(begin),
                            classes.begin() + static_cast<std::ptrdiff_t>(begin + n));
  };
  return ClassSplit{
      data.subset(take(0, n_train), data.name(), Split::kTrain),
      data.subset(take(n_train, n_val), data.name(), Split::kVal),
      data.subset(take(n_train + n_val, n_test), data.name(), Split::kTest),
  };
}

}  // namespace regnet
