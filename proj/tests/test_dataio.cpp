#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "rsvm/cccp.hpp"
#include "rsvm/dataset.hpp"
#include "rsvm/oracle.hpp"

using namespace rsvm;

TEST_SUITE_BEGIN("dataio");

TEST_CASE("parse: basic line") {
  Dataset ds = parse_libsvm_string("+1 1:0.5 3:1.2\n");
  REQUIRE(ds.n() == 1);
  CHECK(ds.labels[0] == 1);
  REQUIRE(ds.rows[0].size() == 2);
  CHECK(ds.rows[0][0].index == 1);
  CHECK(ds.rows[0][0].value == doctest::Approx(0.5));
  CHECK(ds.rows[0][1].index == 3);
  CHECK(ds.rows[0][1].value == doctest::Approx(1.2));
  CHECK(ds.max_feature == 3);
}

TEST_CASE("parse: zero label maps to -1") {
  Dataset ds = parse_libsvm_string("0 1:1.0\n");
  CHECK(ds.labels[0] == -1);
}

TEST_CASE("parse: non-increasing indices rejected") {
  CHECK_THROWS_WITH_AS(parse_libsvm_string("1 3:1 2:1\n"),
                       doctest::Contains("non-increasing"), std::runtime_error);
}

TEST_CASE("parse: malformed tokens carry the line number") {
  CHECK_THROWS_WITH_AS(parse_libsvm_string("1 1:0.5\n1 2:abc\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_AS(parse_libsvm_string("huh 1:0.5\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_libsvm_string("1 0:0.5\n"), std::runtime_error);
}

TEST_CASE("parse: empty input") {
  CHECK_THROWS_WITH_AS(parse_libsvm_string("\n\n"),
                       doctest::Contains("no samples"), std::runtime_error);
}

TEST_CASE("parse: blank lines skipped, labels normalized") {
  Dataset ds = parse_libsvm_string("2.5 1:1\n\n-3 2:4\n");
  REQUIRE(ds.n() == 2);
  CHECK(ds.labels[0] == 1);
  CHECK(ds.labels[1] == -1);
}

TEST_CASE("round-trip: serialize then reparse is identical") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Dataset ds = fixtures::random_dataset(seed, 17, 9, 2.0);
    Dataset back = parse_libsvm_string(to_libsvm_string(ds));
    REQUIRE(back.n() == ds.n());
    CHECK(back.max_feature == ds.max_feature);
    for (int i = 0; i < ds.n(); ++i) {
      CHECK(back.labels[i] == ds.labels[i]);
      REQUIRE(back.rows[i].size() == ds.rows[i].size());
      for (std::size_t k = 0; k < ds.rows[i].size(); ++k) {
        CHECK(back.rows[i][k].index == ds.rows[i][k].index);
        CHECK(back.rows[i][k].value == ds.rows[i][k].value);  // bit-exact
      }
    }
  }
}

TEST_CASE("subsample: m=n is a permutation, deterministic") {
  Dataset ds = fixtures::random_dataset(11, 5, 4);
  Dataset a = subsample(ds, 5, 7);
  Dataset b = subsample(ds, 5, 7);
  CHECK(to_libsvm_string(a) == to_libsvm_string(b));
  std::multiset<std::string> orig, got;
  for (int i = 0; i < 5; ++i) {
    Dataset one;
    one.rows = {ds.rows[i]};
    one.labels = {ds.labels[i]};
    orig.insert(to_libsvm_string(one));
    one.rows = {a.rows[i]};
    one.labels = {a.labels[i]};
    got.insert(to_libsvm_string(one));
  }
  CHECK(orig == got);
}

TEST_CASE("subsample: repeated draw identical, m>n rejected") {
  Dataset ds = fixtures::random_dataset(2, 8, 4);
  CHECK(to_libsvm_string(subsample(ds, 3, 7)) ==
        to_libsvm_string(subsample(ds, 3, 7)));
  Dataset tiny = fixtures::random_dataset(3, 2, 2);
  CHECK_THROWS_AS(subsample(tiny, 3, 0), std::invalid_argument);
}

TEST_CASE("make_synthetic: flip count and shared geometry") {
  Dataset clean = make_synthetic(100, 0.0, 6.0, 1);
  Dataset noisy = make_synthetic(100, 0.05, 6.0, 1);
  int diffs = 0;
  for (int i = 0; i < 100; ++i) {
    CHECK(clean.rows[i][0].value == noisy.rows[i][0].value);
    CHECK(clean.rows[i][1].value == noisy.rows[i][1].value);
    diffs += (clean.labels[i] != noisy.labels[i]);
  }
  CHECK(diffs == 5);
}

TEST_CASE("make_synthetic: parameter validation") {
  CHECK_THROWS_AS(make_synthetic(2, 0.6, 6.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_synthetic(1, 0.0, 6.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_synthetic(10, 0.0, 0.0, 0), std::invalid_argument);
}

TEST_CASE("make_synthetic: separable set is solved exactly by a hinge SVM") {
  // Derived with the reference solver: linear kernel, mu = 0 (plain hinge).
  Dataset ds = make_synthetic(100, 0.0, 6.0, 1);
  KernelCache kernel(ds, KernelSpec{KernelKind::linear, 0.0});
  CilProblem pr = build_problem(ds, kernel, 1.0, std::vector<double>(100, 0.0));
  auto [alpha, b] = oracle::solve_cil_reference(pr, 1e-8);
  int correct = 0;
  for (int i = 0; i < ds.n(); ++i) {
    double f = b;
    for (int j = 0; j < ds.n(); ++j)
      if (alpha[j] != 0.0)
        f += alpha[j] * kernel_eval(kernel.spec(), ds.rows[j], ds.rows[i]);
    correct += ((f >= 0 ? 1 : -1) == ds.labels[i]);
  }
  CHECK(correct == 100);
}

TEST_SUITE_END();
