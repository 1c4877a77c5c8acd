#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "randbin/rng.hpp"
#include "randbin/slc.hpp"

using namespace randbin;

namespace {

const JointPmf kBinaryUniform({{"X", 2}}, {0.5, 0.5});

BinningSpec one_part_spec(int alphabet, int bins) {
  return BinningSpec{{BinningPart{{"X", alphabet}, bins}}};
}

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

// Product of single-axis marginals, same axes.
JointPmf product_of_marginals(const JointPmf& p) {
  std::vector<std::vector<double>> singles;
  for (int i = 0; i < p.rank(); ++i) {
    const JointPmf m = p.marginal(std::vector<int>{i});
    singles.emplace_back(m.probs().begin(), m.probs().end());
  }
  std::vector<double> table(p.size());
  std::vector<int> point(static_cast<std::size_t>(p.rank()));
  for (std::size_t flat = 0; flat < p.size(); ++flat) {
    p.unflatten(flat, point);
    double v = 1.0;
    for (int i = 0; i < p.rank(); ++i)
      v *= singles[static_cast<std::size_t>(i)][static_cast<std::size_t>(point[static_cast<std::size_t>(i)])];
    table[flat] = v;
  }
  double s = 0.0;
  for (double x : table) s += x;
  table.back() += 1.0 - s;
  return JointPmf(p.axes(), std::move(table));
}

// Independent spelled-out evaluation of the correct-decoding lower bound for
// two parts and one side axis: every marginal is recomputed with plain loops.
double lower_bound_reference_2part(const JointPmf& p, const JointPmf& t, int m1, int m2) {
  const int n1 = p.axis(0).size, n2 = p.axis(1).size, nz = p.axis(2).size;
  auto tp = [&](int a, int b, int z) { return t.prob(std::vector<int>{a, b, z}); };
  double total = 0.0;
  for (int a = 0; a < n1; ++a)
    for (int b = 0; b < n2; ++b)
      for (int z = 0; z < nz; ++z) {
        const double pv = p.prob(std::vector<int>{a, b, z});
        if (pv == 0.0 || tp(a, b, z) == 0.0) continue;
        double t_bz = 0.0, t_az = 0.0;
        for (int aa = 0; aa < n1; ++aa) t_bz += tp(aa, b, z);
        for (int bb = 0; bb < n2; ++bb) t_az += tp(a, bb, z);
        double t_z = 0.0;
        for (int aa = 0; aa < n1; ++aa)
          for (int bb = 0; bb < n2; ++bb) t_z += tp(aa, bb, z);
        const double h1 = t_bz / tp(a, b, z);       // 2^{h_t(x1 | x2, z)}
        const double h2 = t_az / tp(a, b, z);       // 2^{h_t(x2 | x1, z)}
        const double h12 = t_z / tp(a, b, z);       // 2^{h_t(x1, x2 | z)}
        const double denom = 1.0 + h1 / m1 + h2 / m2 + h12 / (m1 * m2);
        total += pv / denom;
      }
  return total;
}

}  // namespace

TEST_CASE("posterior shapes") {
  const BinningSpec spec = one_part_spec(2, 2);
  SUBCASE("a singleton bin is a point mass") {
    const BinningAssignment identity{{{0, 1}}};
    const SlcDecoder dec{&kBinaryUniform, &spec, &identity};
    const auto post = slc_posterior(dec, {}, std::vector<int>{1});
    REQUIRE(post.has_value());
    CHECK((*post)[0] == doctest::Approx(0.0));
    CHECK((*post)[1] == doctest::Approx(1.0));
  }
  SUBCASE("uniform metric over a full bin stays uniform") {
    const BinningAssignment all_zero{{{0, 0}}};
    const SlcDecoder dec{&kBinaryUniform, &spec, &all_zero};
    const auto post = slc_posterior(dec, {}, std::vector<int>{0});
    REQUIRE(post.has_value());
    CHECK((*post)[0] == doctest::Approx(0.5));
    CHECK((*post)[1] == doctest::Approx(0.5));
  }
  SUBCASE("skewed metric normalizes within the bin") {
    const JointPmf t({{"X", 2}}, {0.75, 0.25});
    const BinningAssignment all_zero{{{0, 0}}};
    const SlcDecoder dec{&t, &spec, &all_zero};
    const auto post = slc_posterior(dec, {}, std::vector<int>{0});
    REQUIRE(post.has_value());
    CHECK((*post)[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK((*post)[1] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("empty support reports undecodable") {
    const JointPmf t({{"X", 2}}, {1.0, 0.0});
    const BinningAssignment identity{{{0, 1}}};
    const SlcDecoder dec{&t, &spec, &identity};
    CHECK_FALSE(slc_posterior(dec, {}, std::vector<int>{1}).has_value());
  }
}

TEST_CASE("stochastic decode statistics") {
  const BinningSpec spec = one_part_spec(2, 2);
  Rng rng(6);
  SUBCASE("point mass posterior always returns that point") {
    const BinningAssignment identity{{{0, 1}}};
    const SlcDecoder dec{&kBinaryUniform, &spec, &identity};
    for (int i = 0; i < 50; ++i) {
      const auto got = slc_decode(dec, {}, std::vector<int>{0}, rng);
      REQUIRE(got.has_value());
      CHECK((*got)[0] == 0);
    }
  }
  SUBCASE("skewed posterior hits binomial frequencies") {
    const JointPmf t({{"X", 2}}, {0.75, 0.25});
    const BinningAssignment all_zero{{{0, 0}}};
    const SlcDecoder dec{&t, &spec, &all_zero};
    const int trials = 100000;
    int first = 0;
    for (int i = 0; i < trials; ++i)
      if ((*slc_decode(dec, {}, std::vector<int>{0}, rng))[0] == 0) ++first;
    const double sigma = std::sqrt(0.75 * 0.25 / trials);
    CHECK(std::fabs(first / static_cast<double>(trials) - 0.75) <= 3 * sigma);
  }
  SUBCASE("deterministic mode takes the argmax") {
    const JointPmf t({{"X", 2}}, {0.75, 0.25});
    const BinningAssignment all_zero{{{0, 0}}};
    const SlcDecoder dec{&t, &spec, &all_zero};
    for (int i = 0; i < 10; ++i)
      CHECK((*slc_decode(dec, {}, std::vector<int>{0}, rng, true))[0] == 0);
  }
}

TEST_CASE("correct-decoding lower bound") {
  SUBCASE("matched binary with two bins") {
    CHECK(correct_decode_lower_bound(kBinaryUniform, kBinaryUniform, one_part_spec(2, 2)) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("huge bin count pushes the bound to one") {
    const BinningSpec spec = one_part_spec(2, 1 << 20);
    CHECK(correct_decode_lower_bound(kBinaryUniform, kBinaryUniform, spec) ==
          doctest::Approx(1.0).epsilon(1e-5));
  }
  SUBCASE("two-part instances match an independent reimplementation") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<Alphabet> axes{{"X0", 2}, {"X1", 3}, {"Z", 2}};
      const JointPmf p = random_source(rng, axes);
      const JointPmf t = trial % 2 == 0 ? p : random_source(rng, axes);
      const BinningSpec spec{{BinningPart{{"X0", 2}, 2}, BinningPart{{"X1", 3}, 3}}};
      CHECK(correct_decode_lower_bound(p, t, spec) ==
            doctest::Approx(lower_bound_reference_2part(p, t, 2, 3)).epsilon(1e-12));
    }
  }
  SUBCASE("monotone nondecreasing in each bin count for matched metrics") {
    Rng rng(9);
    const JointPmf p = random_source(rng, {{"X", 3}, {"Z", 2}});
    double prev = 0.0;
    for (int m = 1; m <= 8; m *= 2) {
      const double b = correct_decode_lower_bound(p, p, one_part_spec(3, m));
      CHECK(b >= prev - 1e-12);
      prev = b;
    }
  }
}

TEST_CASE("decode good set and error bound") {
  SUBCASE("deterministic metric with two bins") {
    // t: Z = X noiselessly, so h_t(x | z) = 0 on the diagonal.
    const JointPmf t({{"X", 2}, {"Z", 2}}, {0.5, 0.0, 0.0, 0.5});
    const BinningSpec spec = one_part_spec(2, 2);
    const DecodeBoundParams params{&t, &spec, 0.5};
    const DecodeGoodSet good(params);
    CHECK(good.contains(std::vector<int>{0, 0}));
    CHECK(good.contains(std::vector<int>{1, 1}));
    SUBCASE("off-diagonal points have infinite surprise and are excluded") {
      CHECK_FALSE(good.contains(std::vector<int>{0, 1}));
    }
  }
  SUBCASE("gamma above the bin budget empties the set") {
    const BinningSpec spec = one_part_spec(2, 2);
    const DecodeBoundParams params{&kBinaryUniform, &spec, 1.5};
    const DecodeGoodSet good(params);
    CHECK_FALSE(good.contains(std::vector<int>{0}));
    CHECK_FALSE(good.contains(std::vector<int>{1}));
  }
  SUBCASE("single-part bound instantiation") {
    const JointPmf t({{"X", 2}, {"Z", 2}}, {0.5, 0.0, 0.0, 0.5});
    const JointPmf p = t;
    const BinningSpec spec = one_part_spec(2, 2);
    const DecodeBoundParams params{&t, &spec, 1.0};
    // All mass is in the set (1 - 0 > 1 is false!) — check the arithmetic:
    // log2 M - h = 1 - 0 = 1, not > 1, so everything is outside.
    CHECK(decode_error_bound(p, params) == doctest::Approx(1.0 + 0.5).epsilon(1e-12));
  }
  SUBCASE("generous bins push the additive term to zero") {
    const JointPmf t({{"X", 2}, {"Z", 2}}, {0.5, 0.0, 0.0, 0.5});
    const BinningSpec spec = one_part_spec(2, 1 << 20);
    const DecodeBoundParams params{&t, &spec, 10.0};
    CHECK(decode_error_bound(t, params) == doctest::Approx(std::exp2(-10.0)).epsilon(1e-9));
  }
}

TEST_CASE("exact expected correct decoding") {
  SUBCASE("the four-assignment binary instance is exactly three quarters") {
    const double c = exact_expected_correct(kBinaryUniform, kBinaryUniform, one_part_spec(2, 2));
    CHECK(std::fabs(c - 0.75) <= 1e-15);
  }
  SUBCASE("bijective assignments decode perfectly") {
    const BinningSpec spec = one_part_spec(2, 2);
    const BinningAssignment bijective{{{1, 0}}};
    const SlcDecoder dec{&kBinaryUniform, &spec, &bijective};
    for (int x = 0; x < 2; ++x) {
      const auto post = slc_posterior(dec, {}, std::vector<int>{bijective.maps[0][static_cast<std::size_t>(x)]});
      REQUIRE(post.has_value());
      CHECK((*post)[static_cast<std::size_t>(x)] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("mc error probability") {
  Rng rng(10);
  SUBCASE("noiseless side information never errs") {
    const JointPmf p({{"X", 2}, {"Z", 2}}, {0.5, 0.0, 0.0, 0.5});
    const auto est = mc_error_prob(p, p, one_part_spec(2, 1), 2000, rng);
    CHECK(est.estimate == doctest::Approx(0.0));
  }
  SUBCASE("recovers one minus the exact correct probability") {
    const auto est = mc_error_prob(kBinaryUniform, kBinaryUniform, one_part_spec(2, 2),
                                   100000, rng);
    CHECK(std::fabs(est.estimate - 0.25) <= est.half_width);
  }
  SUBCASE("worker invariance") {
    Rng r1(33), r2(33);
    const auto a = mc_error_prob(kBinaryUniform, kBinaryUniform, one_part_spec(2, 2), 4000, r1, 1);
    const auto b = mc_error_prob(kBinaryUniform, kBinaryUniform, one_part_spec(2, 2), 4000, r2, 3);
    CHECK(a.estimate == doctest::Approx(b.estimate));
  }
}

TEST_CASE("sandwich and weakening chain on a randomized sweep") {
  Rng rng(2026);
  const std::vector<double> gammas{0.25, 0.5, 1.0, 2.0, 4.0};
  int instances = 0;
  for (int trial = 0; trial < 30; ++trial) {
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
    const JointPmf p = random_source(rng, axes);
    const JointPmf t_uniform = JointPmf::uniform(axes);
    const JointPmf t_marginals = product_of_marginals(p);

    for (const JointPmf* t : {&p, &t_uniform, &t_marginals}) {
      const double lower = correct_decode_lower_bound(p, *t, spec);
      const double exact = exact_expected_correct(p, *t, spec);
      CHECK(lower <= exact + 1e-12);
      for (double gamma : gammas) {
        const DecodeBoundParams params{t, &spec, gamma};
        const double upper = decode_error_bound(p, params);
        CHECK(1.0 - exact <= upper + 1e-12);
        // Internal consistency of the weakening chain.
        const DecodeGoodSet good(params);
        const double p_good = 1.0 - good.complement_mass(p);
        const double vparts = static_cast<double>(parts);
        const double chain =
            p_good / (1.0 + (std::exp2(vparts) - 1.0) * std::exp2(-gamma));
        CHECK(chain <= lower + 1e-12);
        ++instances;
      }
    }
  }
  CHECK(instances >= 150);
}

TEST_CASE("two-user union bound") {
  Rng rng(12);
  // Direct enumeration oracle.
  const JointPmf p = random_source(rng, {{"U1", 2}, {"U2", 2}, {"Y1", 2}, {"Y2", 2}});
  const JointPmf t1 = p.marginal(std::vector<int>{0, 2});
  const JointPmf t2 = p.marginal(std::vector<int>{1, 3});
  const double log2_f1 = 3.0, log2_f2 = 2.0, gamma = 0.75;

  double outside = 0.0;
  for (int u1 = 0; u1 < 2; ++u1)
    for (int u2 = 0; u2 < 2; ++u2)
      for (int y1 = 0; y1 < 2; ++y1)
        for (int y2 = 0; y2 < 2; ++y2) {
          const double pv = p.prob(std::vector<int>{u1, u2, y1, y2});
          if (pv == 0.0) continue;
          auto h = [](const JointPmf& t, int u, int y) {
            double ty = t.prob(std::vector<int>{0, y}) + t.prob(std::vector<int>{1, y});
            return std::log2(ty) - std::log2(t.prob(std::vector<int>{u, y}));
          };
          const bool in1 = log2_f1 - h(t1, u1, y1) > gamma;
          const bool in2 = log2_f2 - h(t2, u2, y2) > gamma;
          if (!(in1 && in2)) outside += pv;
        }
  CHECK(two_user_error_bound(p, t1, t2, log2_f1, log2_f2, gamma) ==
        doctest::Approx(outside + 4.0 * std::exp2(-gamma)).epsilon(1e-12));
  CHECK(two_user_error_bound(p, t1, t2, log2_f1, log2_f2, gamma, PairBoundConstant::three) ==
        doctest::Approx(outside + 3.0 * std::exp2(-gamma)).epsilon(1e-12));
}
