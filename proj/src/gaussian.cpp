#include "randbin/gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace randbin {

double std_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double std_phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_q_inv(double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::domain_error("std_q_inv: eps must lie in (0,1)");
  double lo = -40.0, hi = 40.0;  // std_q decreasing: f(lo) ~ 1, f(hi) ~ 0
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = std_q(mid);
    if (v == eps) return mid;
    if (v > eps)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// Gauss-Legendre nodes/weights used by the bivariate integrator.
constexpr std::array<double, 3> kW6 = {0.1713244923791705, 0.3607615730481384,
                                       0.4679139345726904};
constexpr std::array<double, 3> kX6 = {0.9324695142031522, 0.6612093864662647,
                                       0.2386191860831970};
constexpr std::array<double, 6> kW12 = {0.04717533638651177, 0.1069393259953183,
                                        0.1600783285433464,  0.2031674267230659,
                                        0.2334925365383547,  0.2491470458134029};
constexpr std::array<double, 6> kX12 = {0.9815606342467191, 0.9041172563704750,
                                        0.7699026741943050, 0.5873179542866171,
                                        0.3678314989981802, 0.1252334085114692};
constexpr std::array<double, 10> kW20 = {0.01761400713915212, 0.04060142980038694,
                                         0.06267204833410906, 0.08327674157670475,
                                         0.1019301198172404,  0.1181945319615184,
                                         0.1316886384491766,  0.1420961093183821,
                                         0.1491729864726037,  0.1527533871307259};
constexpr std::array<double, 10> kX20 = {0.9931285991850949,  0.9639719272779138,
                                         0.9122344282513259,  0.8391169718222188,
                                         0.7463319064601508,  0.6360536807265150,
                                         0.5108670019508271,  0.3737060887154196,
                                         0.2277858511416451,  0.07652652113349733};

// Upper-orthant probability P(X > dh, Y > dk) for standard bivariate normal
// with correlation r. Transcription of Genz's BVND quadrature (tvpack); the
// |r| >= 0.925 branch uses his asymptotic-corrected integral.
double bvn_upper(double dh, double dk, double r) {
  const double twopi = 2.0 * std::numbers::pi;
  const double* w = kW20.data();
  const double* x = kX20.data();
  int lg = 10;
  if (std::fabs(r) < 0.3) {
    w = kW6.data();
    x = kX6.data();
    lg = 3;
  } else if (std::fabs(r) < 0.75) {
    w = kW12.data();
    x = kX12.data();
    lg = 6;
  }
  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  if (std::fabs(r) < 0.925) {
    if (std::fabs(r) > 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < lg; ++i)
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * x[i] + 1.0) / 2.0);
          bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      bvn = bvn * asr / (2.0 * twopi);
    }
    bvn += std_phi(-h) * std_phi(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::fabs(r) < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        const double sp = std::sqrt(twopi) * std_phi(-b / a);
        bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < lg; ++i)
        for (int is = -1; is <= 1; is += 2) {
          const double xs = a * (is * x[i] + 1.0) * a * (is * x[i] + 1.0);
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + d * xs);
            const double ep = std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
            bvn += a * w[i] * std::exp(asr) * (ep - sp);
          }
        }
      bvn = -bvn / twopi;
    }
    if (r > 0.0) {
      bvn += std_phi(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += std_phi(k) - std_phi(h);
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

constexpr double kDegenerateVariance = 1e-14;

struct Standardized {
  // Indices of live (positive-variance) coordinates and their z-scores.
  std::vector<int> live;
  std::vector<double> z;
  bool violated = false;  // a collapsed coordinate fails its threshold
};

Standardized standardize(std::span<const double> mean, std::span<const double> cov,
                         std::span<const double> x) {
  const std::size_t d = x.size();
  Standardized s;
  for (std::size_t i = 0; i < d; ++i) {
    const double v = cov[i * d + i];
    if (v < -1e-10) throw std::domain_error("mvn_lower_orthant: negative variance");
    if (v <= kDegenerateVariance) {
      if (x[i] < mean[i] - 1e-12) s.violated = true;
    } else {
      s.live.push_back(static_cast<int>(i));
      s.z.push_back((x[i] - mean[i]) / std::sqrt(v));
    }
  }
  return s;
}

// Genz sequential conditioning over a shifted rank-1 lattice; returns the
// mean over 12 shifts and writes the spread estimate.
double mvn3_qmc(const double cov[9], const double b[3], double* err) {
  double chol[9] = {0};
  double m[9];
  std::copy(cov, cov + 9, m);
  for (int j = 0; j < 3; ++j) {
    double s = m[j * 3 + j];
    for (int k = 0; k < j; ++k) s -= chol[j * 3 + k] * chol[j * 3 + k];
    if (s <= kDegenerateVariance)
      throw std::domain_error("mvn_lower_orthant: 3-D covariance not positive definite");
    chol[j * 3 + j] = std::sqrt(s);
    for (int i = j + 1; i < 3; ++i) {
      double t = m[i * 3 + j];
      for (int k = 0; k < j; ++k) t -= chol[i * 3 + k] * chol[j * 3 + k];
      chol[i * 3 + j] = t / chol[j * 3 + j];
    }
  }

  auto phinv = [](double p) {
    p = std::clamp(p, 1e-16, 1.0 - 1e-16);
    return -std_q_inv(p);  // std_phi(phinv(p)) = p
  };

  // Fixed Richtmyer generators and deterministic shifts: no hidden state.
  const double alpha1 = std::sqrt(2.0) - 1.0;
  const double alpha2 = std::sqrt(3.0) - 1.0;
  const int shifts = 12, points = 4096;
  double vals[shifts];
  for (int s = 0; s < shifts; ++s) {
    const double s1 = std::fmod(0.5 + 0.41421356 * s, 1.0);
    const double s2 = std::fmod(0.25 + 0.73205080 * s, 1.0);
    double acc = 0.0;
    const double e1 = std_phi(b[0] / chol[0]);
    for (int kpt = 1; kpt <= points; ++kpt) {
      const double u1 = std::fmod(kpt * alpha1 + s1, 1.0);
      const double u2 = std::fmod(kpt * alpha2 + s2, 1.0);
      const double y1 = phinv(u1 * e1);
      const double e2 = std_phi((b[1] - chol[3] * y1) / chol[4]);
      const double y2 = phinv(u2 * e2);
      const double e3 = std_phi((b[2] - chol[6] * y1 - chol[7] * y2) / chol[8]);
      acc += e1 * e2 * e3;
    }
    vals[s] = acc / points;
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= shifts;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= (shifts - 1);
  if (err) *err = 3.0 * std::sqrt(var / shifts);
  return std::clamp(mean, 0.0, 1.0);
}

}  // namespace

double bvn_lower(double h, double k, double rho) {
  if (std::fabs(rho) > 1.0 + 1e-9) throw std::domain_error("bvn_lower: |rho| > 1");
  rho = std::clamp(rho, -1.0, 1.0);
  if (rho >= 1.0 - 1e-12) return std_phi(std::min(h, k));
  if (rho <= -1.0 + 1e-12) return std::max(0.0, std_phi(h) + std_phi(k) - 1.0);
  return bvn_upper(-h, -k, rho);
}

double mvn_lower_orthant(std::span<const double> mean, std::span<const double> cov,
                         std::span<const double> x, double* err_estimate) {
  const std::size_t d = x.size();
  if (d < 1 || d > 3) throw std::domain_error("mvn_lower_orthant: dimension must be 1..3");
  if (mean.size() != d || cov.size() != d * d)
    throw std::invalid_argument("mvn_lower_orthant: shape mismatch");
  if (err_estimate) *err_estimate = 0.0;

  const Standardized s = standardize(mean, cov, x);
  if (s.violated) return 0.0;
  switch (s.live.size()) {
    case 0:
      return 1.0;
    case 1:
      return std_phi(s.z[0]);
    case 2: {
      const std::size_t i = static_cast<std::size_t>(s.live[0]);
      const std::size_t j = static_cast<std::size_t>(s.live[1]);
      const double rho = cov[i * d + j] / std::sqrt(cov[i * d + i] * cov[j * d + j]);
      return bvn_lower(s.z[0], s.z[1], rho);
    }
    default: {
      double b[3], cc[9];
      for (int i = 0; i < 3; ++i) {
        b[i] = x[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
        for (int j = 0; j < 3; ++j)
          cc[i * 3 + j] = cov[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(j)];
      }
      return mvn3_qmc(cc, b, err_estimate);
    }
  }
}

namespace {

double region_prob(const GaussRegionSpec& spec, double x1, double x2) {
  const double mean[2] = {0.0, 0.0};
  const double cov[4] = {spec.cov.v11, spec.cov.v12, spec.cov.v12, spec.cov.v22};
  const double x[2] = {x1, x2};
  return mvn_lower_orthant(mean, cov, x);
}

}  // namespace

bool region_membership(const GaussRegionSpec& spec, double x1, double x2) {
  if (!(spec.eps > 0.0 && spec.eps < 1.0))
    throw std::domain_error("region_membership: eps must lie in (0,1)");
  if (!spec.cov.is_psd()) throw std::domain_error("region_membership: covariance not PSD");
  return region_prob(spec, x1, x2) >= 1.0 - spec.eps - 1e-6;
}

std::vector<std::pair<double, double>> region_boundary(
    const GaussRegionSpec& spec, std::span<const std::pair<double, double>> directions) {
  if (!(spec.eps > 0.0 && spec.eps < 1.0))
    throw std::domain_error("region_boundary: eps must lie in (0,1)");
  const double z_low = std_q_inv(1.0 - 1e-3);  // Phi(z_low) = 1e-3
  const double a1 = spec.cov.v11 > kDegenerateVariance ? std::sqrt(spec.cov.v11) * z_low : 0.0;
  const double a2 = spec.cov.v22 > kDegenerateVariance ? std::sqrt(spec.cov.v22) * z_low : 0.0;

  std::vector<std::pair<double, double>> points;
  points.reserve(directions.size());
  for (const auto& [d1, d2] : directions) {
    if (!(d1 > 0.0 && d2 > 0.0))
      throw std::invalid_argument("region_boundary: directions must have positive components");
    auto member = [&](double t) {
      return region_prob(spec, a1 + t * d1, a2 + t * d2) >= 1.0 - spec.eps;
    };
    if (member(0.0)) {
      points.emplace_back(a1, a2);
      continue;
    }
    double lo = 0.0, hi = 1.0;
    int expand = 0;
    while (!member(hi)) {
      lo = hi;
      hi *= 2.0;
      if (++expand > 60)
        throw std::runtime_error(
            "region_boundary: non-bracketing search, scanned t in [0, " + std::to_string(hi) +
            "] along direction (" + std::to_string(d1) + ", " + std::to_string(d2) + ")");
    }
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      if (member(mid))
        hi = mid;
      else
        lo = mid;
    }
    points.emplace_back(a1 + hi * d1, a2 + hi * d2);
  }
  return points;
}

std::vector<std::pair<double, double>> quadrant_directions(int count) {
  if (count < 1) throw std::invalid_argument("quadrant_directions: count must be >= 1");
  std::vector<std::pair<double, double>> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double theta =
        (static_cast<double>(i) + 0.5) / static_cast<double>(count) * std::numbers::pi / 2.0;
    dirs.emplace_back(std::cos(theta), std::sin(theta));
  }
  return dirs;
}

double berry_esseen_radius(const MomentTriple& m, std::int64_t n, double c0) {
  if (!(m.variance > 0.0)) throw std::domain_error("berry_esseen_radius: variance must be > 0");
  if (n < 1) throw std::invalid_argument("berry_esseen_radius: n must be >= 1");
  const double sigma = std::sqrt(m.variance);
  return c0 * m.third_abs_central / (sigma * sigma * sigma * std::sqrt(static_cast<double>(n)));
}

}  // namespace randbin
