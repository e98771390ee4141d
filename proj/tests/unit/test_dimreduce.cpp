#include <doctest.h>

#include "semtok/dimreduce.hpp"
#include "semtok/error.hpp"
#include "support.hpp"

using namespace semtok;
using namespace semtok::testing;

TEST_CASE("truncate") {
  EmbeddingMatrix m(1, 4, {1, 2, 3, 4});
  auto t = truncate(m, 2);
  CHECK(t.dim() == 2);
  CHECK(t.at(0, 0) == 1.0f);
  CHECK(t.at(0, 1) == 2.0f);
  CHECK(bitwise_equal(truncate(m, 4), m));
  CHECK_THROWS_AS(truncate(m, 0), Error);
  CHECK_THROWS_AS(truncate(m, 5), Error);
}

TEST_CASE("truncate equals a slice of a 10x768 matrix") {
  auto m = random_matrix(10, 768, 12);
  auto t = truncate(m, 32);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 32; ++j) CHECK(t.at(i, j) == m.at(i, j));
}

TEST_CASE("zero pad") {
  EmbeddingMatrix m(1, 2, {1, 2});
  auto p = zero_pad(m, 4);
  CHECK(p.values()[2] == 0.0f);
  CHECK(p.values()[3] == 0.0f);
  CHECK(bitwise_equal(zero_pad(m, 2), m));
  CHECK_THROWS_AS(zero_pad(m, 1), Error);
  CHECK(bitwise_equal(truncate(zero_pad(m, 9), 2), m));
}
