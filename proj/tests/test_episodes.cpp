#include <doctest.h>

#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "regnet/episodes.hpp"
#include "regnet/error.hpp"

using namespace regnet;

namespace {

Dataset small_dataset(std::size_t classes, std::size_t per_class, std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.seed = seed;
  spec.n_classes = classes;
  spec.per_class = per_class;
  spec.dim = 4;
  return synth_gaussian(spec);
}

std::set<int> class_set(const Dataset& d) {
  const auto c = d.classes();
  return {c.begin(), c.end()};
}

}  // namespace

TEST_SUITE("episodes") {

TEST_CASE("forced episode uses every example") {
  const Dataset data = small_dataset(3, 5);
  Rng rng(1);
  const Episode ep = sample_episode(data, 3, 2, 3, rng);
  CHECK(ep.support.cols() == 6);
  CHECK(ep.queries.cols() == 9);
  std::set<std::size_t> used(ep.support_indices.begin(), ep.support_indices.end());
  used.insert(ep.query_indices.begin(), ep.query_indices.end());
  CHECK(used.size() == 15);
  CHECK(class_set(data) == std::set<int>(ep.classes.begin(), ep.classes.end()));
}

TEST_CASE("episodes are deterministic given the rng seed") {
  const Dataset data = small_dataset(10, 20);
  Rng a(5), b(5);
  const Episode x = sample_episode(data, 5, 3, 4, a);
  const Episode y = sample_episode(data, 5, 3, 4, b);
  CHECK(x.support == y.support);
  CHECK(x.queries == y.queries);
  CHECK(x.query_indices == y.query_indices);
}

TEST_CASE("episode structure holds over many samples") {
  const Dataset data = small_dataset(12, 15);
  Rng rng(6);
  for (int t = 0; t < 1000; ++t) {
    const Episode ep = sample_episode(data, 5, 2, 3, rng);
    std::set<std::size_t> support(ep.support_indices.begin(), ep.support_indices.end());
    for (std::size_t q : ep.query_indices) CHECK(support.count(q) == 0);
    CHECK(support.size() == 10);
    const auto relabel = ep.relabeling();
    CHECK(relabel.size() == 5);
    std::set<std::size_t> targets;
    for (const auto& [orig, label] : relabel) targets.insert(label);
    CHECK(targets == std::set<std::size_t>{0, 1, 2, 3, 4});
    for (std::size_t i = 0; i < ep.support_indices.size(); ++i) {
      CHECK(relabel.at(data.label(ep.support_indices[i])) == ep.support_labels[i]);
      CHECK(i / 2 == ep.support_labels[i]);
    }
    for (std::size_t i = 0; i < ep.query_indices.size(); ++i) {
      CHECK(relabel.at(data.label(ep.query_indices[i])) == ep.query_labels[i]);
      CHECK(ep.queries.col(i) == data.example(ep.query_indices[i]));
    }
  }
}

TEST_CASE("class selection is uniform") {
  const Dataset data = small_dataset(20, 6);
  Rng rng(7);
  constexpr int kTrials = 10000;
  std::map<int, int> counts;
  for (int t = 0; t < kTrials; ++t) {
    for (int c : sample_episode(data, 5, 1, 1, rng).classes) ++counts[c];
  }
  const double p = 5.0 / 20.0;
  const double sigma = std::sqrt(kTrials * p * (1 - p));
  CHECK(counts.size() == 20);
  for (const auto& [c, n] : counts) CHECK(std::abs(n - kTrials * p) < 3.5 * sigma);
}

TEST_CASE("sampling errors name the shortfall") {
  const Dataset data = small_dataset(4, 5);
  Rng rng(1);
  try {
    sample_episode(data, 5, 1, 1, rng);
    FAIL("expected SamplingError");
  } catch (const SamplingError& e) {
    CHECK(std::string(e.what()).find("short by 1") != std::string::npos);
  }
  CHECK_THROWS_AS(sample_episode(data, 2, 3, 3, rng), SamplingError);
}

TEST_CASE("synthetic data") {
  SynthSpec spec;
  spec.n_classes = 3;
  spec.per_class = 4;
  spec.within_std = 0.0;
  const Dataset flat = synth_gaussian(spec);
  for (const auto& [c, idx] : flat.class_index()) {
    for (std::size_t i : idx) CHECK(flat.example(i) == flat.example(idx.front()));
  }
  spec.within_std = 0.3;
  CHECK(synth_gaussian(spec).features() == synth_gaussian(spec).features());
  CHECK_THROWS_AS(synth_gaussian(SynthSpec{.n_classes = 1}), ConfigError);
}

TEST_CASE("synthetic class means sit near their centers") {
  SynthSpec spec;
  spec.n_classes = 2;
  spec.per_class = 1000;
  spec.dim = 6;
  spec.within_std = 0.4;
  const Dataset data = synth_gaussian(spec);
  // Centers come from the first draws of the same stream.
  Rng rng(spec.seed);
  const Tensor centers = Tensor::random_uniform(6, 2, rng, -spec.spread, spec.spread);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t r = 0; r < 6; ++r) {
      std::vector<double> xs;
      for (std::size_t i : data.class_index().at(static_cast<int>(c))) xs.push_back(data.features()(r, i));
      CHECK(std::abs(oracle::mean(xs) - centers(r, c)) < 5 * spec.within_std / std::sqrt(1000.0));
    }
  }
}

TEST_CASE("nuisance noise only widens the leading features") {
  SynthSpec spec;
  spec.n_classes = 2;
  spec.per_class = 2000;
  spec.dim = 4;
  spec.within_std = 0.1;
  spec.nuisance_dims = 2;
  spec.nuisance_std = 2.0;
  const Dataset data = synth_gaussian(spec);
  const auto& idx = data.class_index().at(0);
  for (std::size_t r = 0; r < 4; ++r) {
    std::vector<double> xs;
    for (std::size_t i : idx) xs.push_back(data.features()(r, i));
    const double expected = r < 2 ? std::sqrt(0.01 + 4.0) : 0.1;
    CHECK(std::abs(oracle::sample_std(xs) - expected) < 0.05 * expected);
  }
  spec.nuisance_dims = 5;
  CHECK_THROWS_AS(synth_gaussian(spec), ConfigError);
}

TEST_CASE("translate shifts every example") {
  const Dataset data = small_dataset(3, 4);
  const Tensor offset = Tensor::column({1, -2, 0.5, 0});
  const Dataset moved = translate(data, offset, "moved");
  CHECK(moved.name() == "moved");
  CHECK(moved.labels() == data.labels());
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(moved.example(i) == data.example(i) + offset);
  CHECK_THROWS_AS(translate(data, Tensor::column({1}), "bad"), ShapeError);
}

TEST_CASE("csv parsing") {
  const Dataset d = parse_csv("label,a,b,c\n3,1.5,-2,0\r\n7,4,5e-3,+6\n", "tiny");
  CHECK(d.size() == 2);
  CHECK(d.feature_dim() == 3);
  CHECK(d.labels() == std::vector<int>{3, 7});
  CHECK(d.example(0) == Tensor::column({1.5, -2, 0}));
  CHECK(d.example(1) == Tensor::column({4, 5e-3, 6}));

  try {
    parse_csv("label,a,b\n0,1,2\n0,1,2\n1,1,2\n1,1\n", "ragged");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("label,a\n0,x\n", "bad"), ParseError);
  CHECK_THROWS_AS(parse_csv("label,a\n0.5,1\n", "bad"), ParseError);
  CHECK_THROWS_AS(parse_csv("", "empty"), ParseError);
  CHECK_THROWS_AS(parse_csv("label,a\n", "header-only"), ParseError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), IoError);
}

TEST_CASE("csv round trip is value-exact") {
  SynthSpec spec;
  spec.n_classes = 5;
  spec.per_class = 7;
  spec.dim = 3;
  const Dataset data = synth_gaussian(spec);
  const auto path = std::filesystem::temp_directory_path() / "regnet_roundtrip.csv";
  save_csv(data, path);
  const Dataset back = load_csv(path);
  std::filesystem::remove(path);
  CHECK(back.features() == data.features());
  CHECK(back.labels() == data.labels());
  CHECK(back.name() == "regnet_roundtrip");
}

TEST_CASE("class splits") {
  SynthSpec spec;
  spec.n_classes = 100;
  spec.per_class = 2;
  spec.dim = 2;
  const Dataset data = synth_gaussian(spec);

  const ClassSplit all = split_classes(data, {1.0, 0.0, 0.0}, 3);
  CHECK(all.train.class_count() == 100);
  CHECK(all.val.size() == 0);
  CHECK(all.test.size() == 0);

  const ClassSplit s = split_classes(data, {0.64, 0.16, 0.20}, 3);
  CHECK(s.train.class_count() == 64);
  CHECK(s.val.class_count() == 16);
  CHECK(s.test.class_count() == 20);
  std::set<int> seen;
  for (const Dataset* part : {&s.train, &s.val, &s.test}) {
    for (int c : part->classes()) CHECK(seen.insert(c).second);
  }
  CHECK(seen == class_set(data));
  CHECK(s.test.split() == Split::kTest);

  const ClassSplit again = split_classes(data, {0.64, 0.16, 0.20}, 3);
  CHECK(again.test.classes() == s.test.classes());

  // Floor for val and test, remainder to train.
  const Dataset seven = small_dataset(7, 2);
  const ClassSplit r = split_classes(seven, {0.4, 0.3, 0.3}, 0);
  CHECK(r.val.class_count() == 2);
  CHECK(r.test.class_count() == 2);
  CHECK(r.train.class_count() == 3);
  CHECK_THROWS_AS(split_classes(seven, {0.5, 0.5, 0.5}, 0), ConfigError);
}

}  // TEST_SUITE
