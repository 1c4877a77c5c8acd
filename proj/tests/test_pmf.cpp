#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "randbin/pmf.hpp"

using namespace randbin;

TEST_CASE("pmf construction validates mass and sign") {
  CHECK_NOTHROW(Pmf({"X", 2}, {0.5, 0.5}));
  CHECK_THROWS_AS(Pmf({"X", 2}, {0.6, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(Pmf({"X", 2}, {1.1, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(Pmf({"X", 2}, {0.5}), std::invalid_argument);
  // Off by more than the tolerance is rejected, not renormalized.
  CHECK_THROWS_AS(Pmf({"X", 2}, {0.49, 0.49}), std::invalid_argument);
}

TEST_CASE("joint pmf indexing is row-major with last axis fastest") {
  const JointPmf j({{"X", 2}, {"Y", 3}}, {0.1, 0.2, 0.05, 0.15, 0.3, 0.2});
  const std::vector<int> p{1, 2};
  CHECK(j.flat_index(p) == 5);
  CHECK(j.prob(p) == doctest::Approx(0.2));
  std::vector<int> out(2);
  j.unflatten(3, out);
  CHECK(out[0] == 1);
  CHECK(out[1] == 0);
  CHECK_THROWS_AS(j.axis_index("Q"), std::invalid_argument);
  CHECK_THROWS_AS(JointPmf({{"X", 2}, {"X", 2}},
                           std::vector<double>{0.25, 0.25, 0.25, 0.25}),
                  std::invalid_argument);
}

TEST_CASE("rank-0 joint acts as the unit distribution") {
  const JointPmf unit({}, {1.0});
  CHECK(unit.size() == 1);
  CHECK(unit.prob(std::vector<int>{}) == doctest::Approx(1.0));
}

TEST_CASE("marginal preserves mass and original axis order") {
  const JointPmf j({{"X", 2}, {"Y", 2}}, {0.3, 0.2, 0.1, 0.4});
  const JointPmf mx = j.marginal(std::vector<int>{0});
  CHECK(mx[0] == doctest::Approx(0.5));
  CHECK(mx[1] == doctest::Approx(0.5));
  // Requested out of order, result still (X, Y).
  const JointPmf same = j.marginal(std::vector<int>{1, 0});
  CHECK(same.axis(0).name == "X");
  CHECK(same.axis(1).name == "Y");
}

TEST_CASE("channel composes with inputs") {
  const Channel ch = Channel::bsc(0.25);
  const JointPmf j = ch.joint(Pmf::uniform({"X", 2}));
  CHECK(j.prob(std::vector<int>{0, 0}) == doctest::Approx(0.375));
  CHECK(j.prob(std::vector<int>{0, 1}) == doctest::Approx(0.125));
  CHECK_THROWS_AS(Channel({"X", 2}, {{"Y", 2}}, {{0.9, 0.2}, {0.5, 0.5}}),
                  std::invalid_argument);
}

TEST_CASE("cov matrix eigenvalues") {
  CHECK(CovMatrix2{1.0, 0.0, 2.0}.min_eigenvalue() == doctest::Approx(1.0));
  CHECK(CovMatrix2{1.0, 1.0, 1.0}.min_eigenvalue() == doctest::Approx(0.0));
  CHECK_FALSE(CovMatrix2{1.0, 2.0, 1.0}.is_psd());
}
