#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "randbin/binning.hpp"
#include "randbin/errors.hpp"
#include "randbin/measures.hpp"
#include "randbin/rng.hpp"

using namespace randbin;

namespace {

JointPmf random_source(Rng& rng, std::vector<Alphabet> axes) {
  std::size_t cells = 1;
  for (const auto& a : axes) cells *= static_cast<std::size_t>(a.size);
  std::vector<double> w(cells);
  double tot = 0.0;
  for (auto& x : w) {
    x = rng.exponential();
    tot += x;
  }
  for (auto& x : w) x /= tot;
  double s = 0.0;
  for (double x : w) s += x;
  w.back() += 1.0 - s;
  return JointPmf(std::move(axes), std::move(w));
}

// Uniform binary source, no side information.
const JointPmf kBinaryUniform({{"X", 2}}, {0.5, 0.5});

BinningSpec one_part_spec(int alphabet, int bins) {
  return BinningSpec{{BinningPart{{"X", alphabet}, bins}}};
}

}  // namespace

TEST_CASE("sample_binning statistics") {
  Rng rng(1);
  SUBCASE("single bin forces the constant map") {
    const BinningSpec spec = one_part_spec(3, 1);
    const BinningAssignment a = sample_binning(spec, rng);
    CHECK(a.maps[0] == std::vector<int>{0, 0, 0});
  }
  SUBCASE("bins of one symbol are uniform") {
    const BinningSpec spec = one_part_spec(1, 4);
    const int trials = 100000;
    std::vector<int> counts(4, 0);
    for (int t = 0; t < trials; ++t) ++counts[static_cast<std::size_t>(
        sample_binning(spec, rng).maps[0][0])];
    const double sigma = std::sqrt(0.25 * 0.75 / trials);
    for (int b = 0; b < 4; ++b)
      CHECK(std::fabs(counts[static_cast<std::size_t>(b)] / static_cast<double>(trials) - 0.25) <=
            3 * sigma);
  }
  SUBCASE("two symbols' bins are independent") {
    const BinningSpec spec = one_part_spec(2, 2);
    const int trials = 100000;
    int joint[2][2] = {{0, 0}, {0, 0}};
    for (int t = 0; t < trials; ++t) {
      const auto a = sample_binning(spec, rng);
      ++joint[a.maps[0][0]][a.maps[0][1]];
    }
    const double sigma = std::sqrt(0.25 * 0.75 / trials);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(std::fabs(joint[i][j] / static_cast<double>(trials) - 0.25) <= 3 * sigma);
  }
}

TEST_CASE("assignment enumeration is mixed-radix and complete") {
  const BinningSpec spec{{BinningPart{{"A", 2}, 2}, BinningPart{{"B", 1}, 3}}};
  AssignmentEnumerator en(spec);
  CHECK(en.count() == 12);
  // First increment touches part 0 / symbol 0.
  std::vector<std::vector<std::vector<int>>> seen;
  do {
    seen.push_back(en.current().maps);
  } while (en.next());
  CHECK(seen.size() == 12);
  CHECK(seen[0] == std::vector<std::vector<int>>{{0, 0}, {0}});
  CHECK(seen[1] == std::vector<std::vector<int>>{{1, 0}, {0}});
  CHECK(seen[2] == std::vector<std::vector<int>>{{0, 1}, {0}});
  CHECK(seen[4] == std::vector<std::vector<int>>{{0, 0}, {1}});
  SUBCASE("guard trips on oversized enumerations") {
    const BinningSpec big{{BinningPart{{"A", 30}, 4}}};
    CHECK_THROWS_AS(AssignmentEnumerator{big}, GuardError);
  }
}

TEST_CASE("induced bin pmf") {
  SUBCASE("single bins reproduce the side marginal") {
    Rng rng(2);
    const JointPmf source = random_source(rng, {{"X", 2}, {"Z", 3}});
    const BinningSpec spec = one_part_spec(2, 1);
    const BinningAssignment a{{{0, 0}}};
    const JointPmf induced = induced_bin_pmf(source, spec, a);
    const JointPmf pz = source.marginal(std::vector<int>{1});
    for (int z = 0; z < 3; ++z)
      CHECK(induced.prob(std::vector<int>{z, 0}) ==
            doctest::Approx(pz[static_cast<std::size_t>(z)]).epsilon(1e-12));
  }
  SUBCASE("identity assignment splits the mass") {
    const BinningSpec spec = one_part_spec(2, 2);
    const BinningAssignment identity{{{0, 1}}};
    const JointPmf induced = induced_bin_pmf(kBinaryUniform, spec, identity);
    CHECK(induced[0] == doctest::Approx(0.5));
    CHECK(induced[1] == doctest::Approx(0.5));
  }
  SUBCASE("constant assignment piles the mass into one bin") {
    const BinningSpec spec = one_part_spec(2, 2);
    const BinningAssignment constant{{{0, 0}}};
    const JointPmf induced = induced_bin_pmf(kBinaryUniform, spec, constant);
    CHECK(induced[0] == doctest::Approx(1.0));
    CHECK(induced[1] == doctest::Approx(0.0));
  }
  SUBCASE("bin marginal preserves the side marginal exactly") {
    Rng rng(3);
    const JointPmf source = random_source(rng, {{"X", 3}, {"Y", 2}, {"Z", 2}});
    const BinningSpec spec{{BinningPart{{"X", 3}, 2}, BinningPart{{"Y", 2}, 3}}};
    const BinningAssignment a = sample_binning(spec, rng);
    const JointPmf induced = induced_bin_pmf(source, spec, a);
    const JointPmf pz_direct = source.marginal(std::vector<int>{2});
    const JointPmf pz_induced = induced.marginal(std::vector<int>{0});
    for (int z = 0; z < 2; ++z)
      CHECK(pz_induced[static_cast<std::size_t>(z)] ==
            doctest::Approx(pz_direct[static_cast<std::size_t>(z)]).epsilon(1e-13));
  }
  SUBCASE("average over all assignments is uniform bins times the side marginal") {
    Rng rng(4);
    const JointPmf source = random_source(rng, {{"X", 2}, {"Z", 2}});
    const BinningSpec spec = one_part_spec(2, 2);
    AssignmentEnumerator en(spec);
    std::vector<double> avg(4, 0.0);
    do {
      const JointPmf induced = induced_bin_pmf(source, spec, en.current());
      for (std::size_t i = 0; i < 4; ++i) avg[i] += induced[i];
    } while (en.next());
    for (auto& v : avg) v /= static_cast<double>(en.count());
    const JointPmf pz = source.marginal(std::vector<int>{1});
    for (int z = 0; z < 2; ++z)
      for (int b = 0; b < 2; ++b)
        CHECK(avg[static_cast<std::size_t>(z * 2 + b)] ==
              doctest::Approx(pz[static_cast<std::size_t>(z)] / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("good set membership hand checks") {
  const JointPmf unit_side({}, {1.0});
  SUBCASE("single bin with vanishing gamma admits all mass points") {
    const BinningSpec spec = one_part_spec(2, 1);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 1e-9};
    const TvGoodSet good(params);
    CHECK(good.contains(std::vector<int>{0}));
    CHECK(good.contains(std::vector<int>{1}));
    CHECK(good.complement_mass() == doctest::Approx(0.0));
  }
  SUBCASE("two bins at gamma one excludes the uniform pair") {
    const BinningSpec spec = one_part_spec(2, 2);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 1.0};
    const TvGoodSet good(params);
    CHECK_FALSE(good.contains(std::vector<int>{0}));
    CHECK(good.complement_mass() == doctest::Approx(1.0));
  }
  SUBCASE("one bin at gamma half keeps them") {
    const BinningSpec spec = one_part_spec(2, 1);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 0.5};
    const TvGoodSet good(params);
    CHECK(good.contains(std::vector<int>{0}));
  }
  SUBCASE("zero-probability points are excluded by convention") {
    const JointPmf source({{"X", 2}}, {1.0, 0.0});
    const BinningSpec spec = one_part_spec(2, 1);
    const TvBoundParams params{&source, &spec, &unit_side, 1e-9};
    const TvGoodSet good(params);
    CHECK_FALSE(good.contains(std::vector<int>{1}));
  }
}

TEST_CASE("expected tv bound worked values") {
  const JointPmf unit_side({}, {1.0});
  SUBCASE("single bin, gamma half") {
    const BinningSpec spec = one_part_spec(2, 1);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 0.5};
    CHECK(expected_tv_bound(params) ==
          doctest::Approx(std::exp2(-0.75)).epsilon(1e-12));
  }
  SUBCASE("two bins, gamma one is vacuous") {
    const BinningSpec spec = one_part_spec(2, 2);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 1.0};
    CHECK(expected_tv_bound(params) == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("the two concentration-term spellings differ by sqrt(2)") {
    const BinningSpec spec = one_part_spec(2, 1);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 0.5};
    const double tight = expected_tv_bound(params, TvBoundVariant::tight);
    const double loose = expected_tv_bound(params, TvBoundVariant::loose);
    CHECK(loose == doctest::Approx(tight * std::numbers::sqrt2).epsilon(1e-12));
  }
}

TEST_CASE("exact expected tv oracles") {
  SUBCASE("single bin gives zero") {
    CHECK(exact_expected_tv(kBinaryUniform, one_part_spec(2, 1)) == doctest::Approx(0.0));
  }
  SUBCASE("the four-assignment binary instance is exactly a quarter") {
    const double tv = exact_expected_tv(kBinaryUniform, one_part_spec(2, 2));
    CHECK(std::fabs(tv - 0.25) <= 1e-15);
  }
  SUBCASE("the sixteen-assignment quaternary instance") {
    const JointPmf source({{"X", 4}}, {0.25, 0.25, 0.25, 0.25});
    const double tv = exact_expected_tv(source, one_part_spec(4, 2));
    CHECK(std::fabs(tv - 0.1875) <= 1e-15);
    const JointPmf unit_side({}, {1.0});
    const BinningSpec spec = one_part_spec(4, 2);
    for (double gamma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const TvBoundParams params{&source, &spec, &unit_side, gamma};
      CHECK(tv <= expected_tv_bound(params) + 1e-12);
    }
  }
}

TEST_CASE("mc expected tv") {
  Rng rng(77);
  SUBCASE("deterministic instance collapses to zero") {
    const auto est = mc_expected_tv(kBinaryUniform, one_part_spec(2, 1), 100, rng);
    CHECK(est.estimate == doctest::Approx(0.0));
    CHECK(est.half_width == doctest::Approx(0.0));
  }
  SUBCASE("recovers the exact quarter") {
    const auto est = mc_expected_tv(kBinaryUniform, one_part_spec(2, 2), 100000, rng);
    CHECK(std::fabs(est.estimate - 0.25) <= est.half_width);
  }
  SUBCASE("half width shrinks like one over root trials") {
    Rng r1(5), r2(5);
    const auto small = mc_expected_tv(kBinaryUniform, one_part_spec(2, 2), 1000, r1);
    const auto large = mc_expected_tv(kBinaryUniform, one_part_spec(2, 2), 4000, r2);
    CHECK(small.half_width / large.half_width == doctest::Approx(2.0).epsilon(0.25));
  }
  SUBCASE("worker count does not change the estimate") {
    Rng r1(9), r2(9);
    const auto serial = mc_expected_tv(kBinaryUniform, one_part_spec(2, 2), 5000, r1, 1);
    const auto parallel = mc_expected_tv(kBinaryUniform, one_part_spec(2, 2), 5000, r2, 4);
    CHECK(serial.estimate == doctest::Approx(parallel.estimate).epsilon(1e-15));
  }
}

TEST_CASE("variance diagnostic") {
  const JointPmf unit_side({}, {1.0});
  SUBCASE("single symbol has zero variance") {
    const JointPmf source({{"X", 1}}, {1.0});
    const BinningSpec spec = one_part_spec(1, 2);
    const TvBoundParams params{&source, &spec, &unit_side, 0.5};
    const auto diag = variance_diagnostic(params, {}, std::vector<int>{0});
    CHECK(diag.exact_var == doctest::Approx(0.0));
    CHECK(diag.exact_var <= diag.bound + 1e-15);
  }
  SUBCASE("large gamma empties the set") {
    const BinningSpec spec = one_part_spec(2, 1);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 50.0};
    const auto diag = variance_diagnostic(params, {}, std::vector<int>{0});
    CHECK(diag.exact_var == doctest::Approx(0.0));
  }
  SUBCASE("binary two-bin instance satisfies the bound") {
    const BinningSpec spec = one_part_spec(2, 2);
    const TvBoundParams params{&kBinaryUniform, &spec, &unit_side, 0.5};
    for (int b = 0; b < 2; ++b) {
      const auto diag = variance_diagnostic(params, {}, std::vector<int>{b});
      CHECK(diag.exact_var <= diag.bound + 1e-15);
    }
  }
}

TEST_CASE("tv bound dominates the exact oracle on a randomized sweep") {
  Rng rng(2025);
  const std::vector<double> gammas{0.25, 0.5, 1.0, 2.0, 4.0};
  int instances = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int parts = 1 + static_cast<int>(rng.uniform_int(2));
    std::vector<Alphabet> axes;
    BinningSpec spec;
    for (int v = 0; v < parts; ++v) {
      const int size = 1 + static_cast<int>(rng.uniform_int(3));
      const int bins = 1 + static_cast<int>(rng.uniform_int(3));
      const std::string name = "X" + std::to_string(v);
      axes.push_back({name, size});
      spec.parts.push_back({{name, size}, bins});
    }
    const int zsize = 1 + static_cast<int>(rng.uniform_int(2));
    axes.push_back({"Z", zsize});
    const JointPmf source = random_source(rng, axes);
    const double exact = exact_expected_tv(source, spec);

    const JointPmf t_marginal = source.marginal(std::vector<int>{parts});
    const JointPmf t_uniform = JointPmf::uniform({{"Z", zsize}});
    for (const JointPmf* tz : {&t_marginal, &t_uniform})
      for (double gamma : gammas) {
        const TvBoundParams params{&source, &spec, tz, gamma};
        CHECK(exact <= expected_tv_bound(params) + 1e-12);
        ++instances;
      }
  }
  CHECK(instances >= 100);
}
