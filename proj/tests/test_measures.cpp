#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "randbin/errors.hpp"
#include "randbin/measures.hpp"
#include "randbin/rng.hpp"

using namespace randbin;

namespace {

const std::vector<std::string> kX{"X"};
const std::vector<std::string> kY{"Y"};

JointPmf bsc_joint(double p) { return Channel::bsc(p).joint(Pmf::uniform({"X", 2})); }

JointPmf random_joint(Rng& rng, std::vector<Alphabet> axes) {
  std::size_t cells = 1;
  for (const auto& a : axes) cells *= static_cast<std::size_t>(a.size);
  std::vector<double> w(cells);
  double total = 0.0;
  for (auto& x : w) {
    x = rng.exponential();
    total += x;
  }
  for (auto& x : w) x /= total;
  // Repair rounding drift so the constructor tolerance is met exactly.
  double s = 0.0;
  for (double x : w) s += x;
  w.back() += 1.0 - s;
  return JointPmf(std::move(axes), std::move(w));
}

// Independent oracle: dispersion from the composed joint table.
double dispersion_from_joint(const JointPmf& j) {
  const int nx = j.axis(0).size, ny = j.axis(1).size;
  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      const double p = j.prob(std::vector<int>{x, y});
      px[x] += p;
      py[y] += p;
    }
  double v = 0.0;
  for (int x = 0; x < nx; ++x) {
    if (px[x] == 0.0) continue;
    double m = 0.0, m2 = 0.0;
    for (int y = 0; y < ny; ++y) {
      const double p = j.prob(std::vector<int>{x, y});
      if (p == 0.0) continue;
      const double iota = std::log2(p / (px[x] * py[y]));
      const double w = p / px[x];
      m += w * iota;
      m2 += w * iota * iota;
    }
    v += px[x] * (m2 - m * m);
  }
  return v;
}

}  // namespace

TEST_CASE("marginalize") {
  const JointPmf j({{"X", 2}, {"Y", 2}}, {0.3, 0.2, 0.1, 0.4});
  SUBCASE("hand-summed rows") {
    const JointPmf m = marginalize(j, kX);
    CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("identity case") {
    const std::vector<std::string> both{"X", "Y"};
    const JointPmf m = marginalize(j, both);
    CHECK(total_variation(m, j) == doctest::Approx(0.0));
  }
  SUBCASE("uniform symmetry") {
    const JointPmf u = JointPmf::uniform({{"X", 2}, {"Y", 2}});
    const JointPmf m = marginalize(u, kX);
    CHECK(m[0] == doctest::Approx(0.5));
  }
  SUBCASE("unknown axis") {
    const std::vector<std::string> bad{"Q"};
    CHECK_THROWS_AS(marginalize(j, bad), std::invalid_argument);
  }
}

TEST_CASE("condition") {
  SUBCASE("bayes rule on a bsc") {
    const JointPmf j = bsc_joint(0.25);
    const std::vector<AxisValue> given{{"Y", 0}};
    const JointPmf c = condition(j, kX, given);
    CHECK(c[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("independent axes give the marginal") {
    const JointPmf j({{"X", 2}, {"Y", 2}}, {0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4});
    const std::vector<AxisValue> given{{"Y", 1}};
    const JointPmf c = condition(j, kX, given);
    CHECK(c[0] == doctest::Approx(0.3).epsilon(1e-12));
  }
  SUBCASE("deterministic channel gives a point mass") {
    const JointPmf j({{"X", 2}, {"Y", 2}}, {0.5, 0.0, 0.0, 0.5});
    const std::vector<AxisValue> given{{"Y", 1}};
    const JointPmf c = condition(j, kX, given);
    CHECK(c[1] == doctest::Approx(1.0));
  }
  SUBCASE("zero-probability conditioning point") {
    const JointPmf j({{"X", 2}, {"Y", 2}}, {0.5, 0.0, 0.5, 0.0});
    const std::vector<AxisValue> given{{"Y", 1}};
    CHECK_THROWS_AS(condition(j, kX, given), std::domain_error);
  }
}

TEST_CASE("iid extension") {
  const JointPmf j = bsc_joint(0.25);
  SUBCASE("n = 1 is the identity table") {
    const JointPmf e = iid_extend(j, 1);
    for (std::size_t i = 0; i < j.size(); ++i) CHECK(e[i] == doctest::Approx(j[i]));
  }
  SUBCASE("bernoulli half cube") {
    const JointPmf b({{"X", 2}}, {0.5, 0.5});
    const JointPmf e = iid_extend(b, 3);
    CHECK(e.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(e[i] == doctest::Approx(0.125));
  }
  SUBCASE("hand product at n = 2") {
    const JointPmf e = iid_extend(j, 2);
    CHECK(e.prob(std::vector<int>{0, 0, 0, 1}) == doctest::Approx(0.375 * 0.125).epsilon(1e-12));
  }
  SUBCASE("lazy view equals product of per-letter values") {
    Rng rng(3);
    const IidProductView view(j, 5);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<int> pts(10);
      double expect = 1.0;
      for (int i = 0; i < 5; ++i) {
        pts[2 * i] = static_cast<int>(rng.uniform_int(2));
        pts[2 * i + 1] = static_cast<int>(rng.uniform_int(2));
        expect *= j.prob(std::vector<int>{pts[2 * i], pts[2 * i + 1]});
      }
      CHECK(view.prob(pts) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("materialization guard") {
    const JointPmf b({{"X", 2}}, {0.5, 0.5});
    CHECK_THROWS_AS(iid_extend(b, 30), GuardError);
  }
}

TEST_CASE("conditional information") {
  const JointPmf j = bsc_joint(0.25);
  const std::vector<AxisValue> x0{{"X", 0}};
  const std::vector<AxisValue> y0{{"Y", 0}};
  CHECK(conditional_information(j, x0, y0) ==
        doctest::Approx(std::log2(1.0 / 0.75)).epsilon(1e-12));
  SUBCASE("certain symbol carries no information") {
    const JointPmf d({{"X", 2}, {"Y", 2}}, {0.5, 0.0, 0.0, 0.5});
    CHECK(conditional_information(d, x0, y0) == doctest::Approx(0.0));
  }
  SUBCASE("zero-probability target gives the infinite sentinel") {
    const JointPmf d({{"X", 2}, {"Y", 2}}, {0.5, 0.0, 0.0, 0.5});
    const std::vector<AxisValue> x1{{"X", 1}};
    CHECK(conditional_information(d, x1, y0) == kInfBits);
  }
  SUBCASE("zero-probability conditioning errors") {
    const JointPmf d({{"X", 2}, {"Y", 2}}, {0.5, 0.0, 0.5, 0.0});
    const std::vector<AxisValue> y1{{"Y", 1}};
    CHECK_THROWS_AS(conditional_information(d, x0, y1), std::domain_error);
  }
}

TEST_CASE("information density") {
  const JointPmf j = bsc_joint(0.25);
  const std::vector<AxisValue> x0{{"X", 0}};
  const std::vector<AxisValue> y0{{"Y", 0}};
  const std::vector<AxisValue> y1{{"Y", 1}};
  CHECK(information_density(j, x0, y0) == doctest::Approx(std::log2(1.5)).epsilon(1e-12));
  CHECK(information_density(j, x0, y1) == doctest::Approx(-1.0).epsilon(1e-12));
  SUBCASE("independent axes have zero density everywhere") {
    const JointPmf u = JointPmf::uniform({{"X", 2}, {"Y", 3}});
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 3; ++y) {
        const std::vector<AxisValue> xa{{"X", x}};
        const std::vector<AxisValue> ya{{"Y", y}};
        CHECK(information_density(u, xa, ya) == doctest::Approx(0.0));
      }
  }
}

TEST_CASE("entropy") {
  SUBCASE("uniform alphabet") {
    const JointPmf u = JointPmf::uniform({{"X", 8}});
    CHECK(entropy(u, kX) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("entropy of a copy given the copy is zero") {
    // X' = X through a noiseless channel.
    const Channel copy({"X", 2}, {{"X2", 2}}, {{1.0, 0.0}, {0.0, 1.0}});
    const JointPmf j = copy.joint(Pmf::uniform({"X", 2}));
    const std::vector<std::string> x2{"X2"};
    CHECK(entropy(j, kX, x2) == doctest::Approx(0.0));
  }
  SUBCASE("bsc posterior entropy") {
    const double h2 = -(0.25 * std::log2(0.25) + 0.75 * std::log2(0.75));
    CHECK(entropy(bsc_joint(0.25), kX, kY) == doctest::Approx(h2).epsilon(1e-12));
  }
}

TEST_CASE("total variation") {
  const JointPmf a({{"X", 2}}, {1.0, 0.0});
  const JointPmf b({{"X", 2}}, {0.0, 1.0});
  const JointPmf c({{"X", 2}}, {0.5, 0.5});
  CHECK(total_variation(a, a) == doctest::Approx(0.0));
  CHECK(total_variation(a, b) == doctest::Approx(1.0));
  CHECK(total_variation(a, c) == doctest::Approx(0.5));
  const JointPmf other({{"Y", 2}}, {1.0, 0.0});
  CHECK_THROWS_AS(total_variation(a, other), std::invalid_argument);
}

TEST_CASE("total variation is a metric on random triples") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_joint(rng, {{"X", 3}, {"Y", 2}});
    const auto q = random_joint(rng, {{"X", 3}, {"Y", 2}});
    const auto r = random_joint(rng, {{"X", 3}, {"Y", 2}});
    CHECK(total_variation(p, q) == doctest::Approx(total_variation(q, p)).epsilon(1e-12));
    CHECK(total_variation(p, p) < 1e-12);
    CHECK(total_variation(p, r) <= total_variation(p, q) + total_variation(q, r) + 1e-12);
  }
}

TEST_CASE("channel dispersion") {
  SUBCASE("noiseless channel has zero dispersion") {
    const Channel noiseless({"X", 2}, {{"Y", 2}}, {{1.0, 0.0}, {0.0, 1.0}});
    CHECK(channel_dispersion(Pmf::uniform({"X", 2}), noiseless) == doctest::Approx(0.0));
  }
  SUBCASE("output independent of input has zero dispersion") {
    const Channel junk({"X", 2}, {{"Y", 2}}, {{0.3, 0.7}, {0.3, 0.7}});
    CHECK(channel_dispersion(Pmf::uniform({"X", 2}), junk) == doctest::Approx(0.0));
  }
  SUBCASE("bsc quarter against the two-point formula and the table oracle") {
    const double v = channel_dispersion(Pmf::uniform({"X", 2}), Channel::bsc(0.25));
    const double two_point = 0.75 * 0.25 * std::pow(std::log2(3.0), 2.0);
    CHECK(v == doctest::Approx(two_point).epsilon(1e-12));
    CHECK(v == doctest::Approx(dispersion_from_joint(bsc_joint(0.25))).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.47101).epsilon(1e-4));
  }
  SUBCASE("nonnegative, zero for random deterministic maps") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
      const int nx = 2 + static_cast<int>(rng.uniform_int(3));
      const int ny = 2 + static_cast<int>(rng.uniform_int(3));
      std::vector<std::vector<double>> rows;
      for (int x = 0; x < nx; ++x) {
        std::vector<double> row(static_cast<std::size_t>(ny), 0.0);
        row[rng.uniform_int(static_cast<std::uint64_t>(ny))] = 1.0;
        rows.push_back(std::move(row));
      }
      const Channel det({"X", nx}, {{"Y", ny}}, rows);
      const double v = channel_dispersion(Pmf::uniform({"X", nx}), det);
      CHECK(v >= 0.0);
      CHECK(v == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("broadcast covariance") {
  SUBCASE("outputs independent of inputs give the zero matrix") {
    const Channel junk({"X", 2}, {{"Y1", 2}, {"Y2", 2}},
                       {{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}});
    const JointPmf q({{"U1", 2}, {"U2", 2}, {"X", 2}},
                     {0.25, 0.0, 0.0, 0.25, 0.25, 0.0, 0.0, 0.25});
    const CovMatrix2 v = bc_covariance(q, junk);
    CHECK(v.v11 == doctest::Approx(0.0));
    CHECK(v.v12 == doctest::Approx(0.0));
    CHECK(v.v22 == doctest::Approx(0.0));
  }
  SUBCASE("independent branches make the diagonal the per-user dispersions") {
    // X = (U1, U2), Y1 = BSC(0.1)(U1), Y2 = BSC(0.2)(U2).
    const double pu1 = 0.6, p1 = 0.1, p2 = 0.2;
    std::vector<double> qtab(16, 0.0);
    for (int u1 = 0; u1 < 2; ++u1)
      for (int u2 = 0; u2 < 2; ++u2) {
        const double pu = (u1 == 0 ? pu1 : 1 - pu1) * 0.5;
        qtab[static_cast<std::size_t>(((u1 * 2 + u2) * 4) + (u1 * 2 + u2))] = pu;
      }
    const JointPmf q({{"U1", 2}, {"U2", 2}, {"X", 4}}, qtab);
    std::vector<std::vector<double>> rows;
    for (int x = 0; x < 4; ++x) {
      const int u1 = x / 2, u2 = x % 2;
      std::vector<double> row(4);
      for (int y1 = 0; y1 < 2; ++y1)
        for (int y2 = 0; y2 < 2; ++y2)
          row[static_cast<std::size_t>(y1 * 2 + y2)] =
              (y1 == u1 ? 1 - p1 : p1) * (y2 == u2 ? 1 - p2 : p2);
      rows.push_back(std::move(row));
    }
    const Channel ch({"X", 4}, {{"Y1", 2}, {"Y2", 2}}, rows);
    const CovMatrix2 v = bc_covariance(q, ch);
    const double d1 = channel_dispersion(Pmf({"U", 2}, {pu1, 1 - pu1}), Channel::bsc(p1));
    const double d2 = channel_dispersion(Pmf::uniform({"U", 2}), Channel::bsc(p2));
    CHECK(v.v11 == doctest::Approx(d1).epsilon(1e-10));
    CHECK(v.v22 == doctest::Approx(d2).epsilon(1e-10));
    CHECK(v.v12 == doctest::Approx(0.0));
  }
  SUBCASE("identical branches are fully correlated") {
    // U1 = U2 = X uniform, Y1 = Y2 = one shared BSC(0.25) output.
    const JointPmf q({{"U1", 2}, {"U2", 2}, {"X", 2}},
                     {0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5});
    const Channel ch({"X", 2}, {{"Y1", 2}, {"Y2", 2}},
                     {{0.75, 0.0, 0.0, 0.25}, {0.25, 0.0, 0.0, 0.75}});
    const CovMatrix2 v = bc_covariance(q, ch);
    const double expect = 0.75 * 0.25 * std::pow(std::log2(3.0), 2.0);
    CHECK(v.v11 == doctest::Approx(expect).epsilon(1e-12));
    CHECK(v.v22 == doctest::Approx(expect).epsilon(1e-12));
    CHECK(v.v12 == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("random instances stay symmetric psd") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
      const auto q = random_joint(rng, {{"U1", 2}, {"U2", 2}, {"X", 3}});
      std::vector<std::vector<double>> rows;
      for (int x = 0; x < 3; ++x) {
        std::vector<double> row(4);
        double tot = 0.0;
        for (auto& r : row) {
          r = rng.exponential();
          tot += r;
        }
        for (auto& r : row) r /= tot;
        double s = 0.0;
        for (double r : row) s += r;
        row.back() += 1.0 - s;
        rows.push_back(std::move(row));
      }
      const Channel ch({"X", 3}, {{"Y1", 2}, {"Y2", 2}}, rows);
      const CovMatrix2 v = bc_covariance(q, ch);
      CHECK(v.min_eigenvalue() >= -1e-10);
    }
  }
}

TEST_CASE("wiretap variances") {
  SUBCASE("constant eavesdropper output gives zero v_z") {
    const JointPmf q({{"U", 2}, {"X", 2}}, {0.5, 0.0, 0.0, 0.5});
    const Channel ch({"X", 2}, {{"Y", 2}, {"Z", 1}}, {{0.75, 0.25}, {0.25, 0.75}});
    const auto v = wiretap_variances(q, ch);
    CHECK(v.v_z == doctest::Approx(0.0));
    CHECK(v.v_y == doctest::Approx(0.47101).epsilon(1e-4));
  }
  SUBCASE("noiseless main channel gives zero v_y") {
    const JointPmf q({{"U", 2}, {"X", 2}}, {0.5, 0.0, 0.0, 0.5});
    const Channel ch({"X", 2}, {{"Y", 2}, {"Z", 2}},
                     {{0.7, 0.3, 0.0, 0.0}, {0.0, 0.0, 0.3, 0.7}});
    const auto v = wiretap_variances(q, ch);
    CHECK(v.v_y == doctest::Approx(0.0));
  }
  SUBCASE("conditioning variants coincide when u determines x") {
    const JointPmf q({{"U", 2}, {"X", 2}}, {0.6, 0.0, 0.0, 0.4});
    const Channel ch({"X", 2}, {{"Y", 2}, {"Z", 2}},
                     {{0.63, 0.27, 0.07, 0.03}, {0.12, 0.28, 0.18, 0.42}});
    const auto a = wiretap_variances(q, ch, VarianceConditioning::given_ux);
    const auto b = wiretap_variances(q, ch, VarianceConditioning::given_u);
    CHECK(a.v_y == doctest::Approx(b.v_y).epsilon(1e-12));
    CHECK(a.v_z == doctest::Approx(b.v_z).epsilon(1e-12));
  }
}

TEST_CASE("expectation identities hold on random joints") {
  Rng rng(41);
  const std::vector<std::string> xs{"X"};
  const std::vector<std::string> ys{"Y"};
  for (int trial = 0; trial < 30; ++trial) {
    const auto j = random_joint(rng, {{"X", 3}, {"Y", 3}});
    double h_cond = 0.0, mi = 0.0;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) {
        const double p = j.prob(std::vector<int>{x, y});
        if (p == 0.0) continue;
        const std::vector<AxisValue> xa{{"X", x}};
        const std::vector<AxisValue> ya{{"Y", y}};
        h_cond += p * conditional_information(j, xa, ya);
        mi += p * information_density(j, xa, ya);
      }
    CHECK(h_cond == doctest::Approx(entropy(j, xs, ys)).epsilon(1e-9));
    CHECK(mi == doctest::Approx(entropy(j, xs) - entropy(j, xs, ys)).epsilon(1e-9));
  }
}
