#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "pathbin/rng.hpp"

using pathbin::RandomStream;

TEST_CASE("same seed reproduces the sequence exactly") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams are independent of parent consumption") {
  RandomStream parent(7);
  RandomStream child_before = parent.derive(3);
  parent.next_u64();
  parent.next_u64();
  RandomStream child_after = parent.derive(3);
  CHECK(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("distinct derive ids give distinct streams") {
  RandomStream parent(7);
  CHECK(parent.derive(1).next_u64() != parent.derive(2).next_u64());
}

TEST_CASE("uniform01 stays in [0, 1) and covers the range") {
  RandomStream s(123);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = s.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("gaussian sample moments match N(0, 1)") {
  RandomStream s(99);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = s.gaussian();
    sum += g;
    sum2 += g * g;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform_index is unbiased over a small modulus") {
  RandomStream s(5);
  std::vector<int> counts(5, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++counts[s.uniform_index(5)];
  for (int c : counts) CHECK(std::abs(c - n / 5) < n / 50);
}

TEST_CASE("shuffle permutes without loss") {
  RandomStream s(11);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto orig = v;
  s.shuffle(v);
  CHECK(v != orig);
  std::sort(v.begin(), v.end());
  CHECK(v == orig);
}
