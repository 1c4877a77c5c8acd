#include "randbin/secondorder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace randbin {

double GammaRule::value(std::int64_t n) const {
  return log2_coeff * std::log2(static_cast<double>(n)) + constant;
}

double LogTermPolicy::type_constant_or(int alphabet_size) const {
  return type_constant_override ? *type_constant_override : type_constant(alphabet_size);
}

namespace {

// h[u][y] = -log2 q(u | y) from a rank-2 marginal; +inf on zero cells.
std::vector<double> cond_info_table(const JointPmf& m_uy) {
  const int nu = m_uy.axis(0).size, ny = m_uy.axis(1).size;
  std::vector<double> py(static_cast<std::size_t>(ny), 0.0);
  for (int u = 0; u < nu; ++u)
    for (int y = 0; y < ny; ++y) py[static_cast<std::size_t>(y)] += m_uy[static_cast<std::size_t>(u * ny + y)];
  std::vector<double> h(static_cast<std::size_t>(nu * ny), kInfBits);
  for (int u = 0; u < nu; ++u)
    for (int y = 0; y < ny; ++y) {
      const double p = m_uy[static_cast<std::size_t>(u * ny + y)];
      if (p > 0.0)
        h[static_cast<std::size_t>(u * ny + y)] =
            std::log2(py[static_cast<std::size_t>(y)]) - std::log2(p);
    }
  return h;
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
};

// Mean/variance of h[u][.] under the weights w[.] (two-pass).
MeanVar weighted_moments(std::span<const double> h, std::span<const double> w) {
  MeanVar out;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) out.mean += w[i] * h[i];
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) out.var += w[i] * (h[i] - out.mean) * (h[i] - out.mean);
  return out;
}

double apx_slack_bits(int num_parts, const GammaRule& gamma_apx, std::int64_t n) {
  return std::exp2((static_cast<double>(num_parts) - gamma_apx.value(n)) / 2.0 - 1.0);
}

}  // namespace

RtildeResult p2p_rtilde(const P2PSetup& setup, const LogTermPolicy& policy) {
  if (setup.n < 2) throw std::invalid_argument("p2p_rtilde: n must be >= 2");
  if (!(setup.eps > 0.0 && setup.eps < 1.0))
    throw std::invalid_argument("p2p_rtilde: eps must lie in (0,1)");
  const double dn = static_cast<double>(setup.n);

  const NType type = nearest_ntype(setup.input, setup.n);
  const JointPmf joint = setup.channel.joint(setup.input);
  const std::vector<double> h = cond_info_table(joint);
  const std::size_t ny = setup.channel.output_size();

  double mean = 0.0, var = 0.0;
  for (int x = 0; x < setup.input.size(); ++x) {
    const double phi = static_cast<double>(type.counts[static_cast<std::size_t>(x)]) / dn;
    if (phi == 0.0) continue;
    const MeanVar mv = weighted_moments(
        std::span<const double>(h).subspan(static_cast<std::size_t>(x) * ny, ny),
        setup.channel.row(x));
    mean += phi * mv.mean;
    var += phi * mv.var;
  }

  RtildeResult out;
  out.per_letter_variance = var;
  out.eps_gauss = setup.eps;
  if (policy.eps_adjust == EpsAdjust::subtract_slack) {
    const double slack = apx_slack_bits(1, policy.gamma_apx, setup.n) +
                         std::exp2(-policy.gamma_dec.value(setup.n));
    out.eps_gauss = setup.eps - slack;
    if (out.eps_gauss <= 0.0)
      throw std::domain_error(
          "p2p_rtilde: eps adjustments leave no budget (eps of order 1/sqrt(n))");
  }
  out.mean_bits = dn * mean;
  out.dispersion_bits = std::sqrt(dn * var) * (var > 0.0 ? std_q_inv(out.eps_gauss) : 0.0);
  out.log_bits = policy.c_multiplier * policy.gamma_dec.value(setup.n);
  out.total_bits = out.mean_bits + out.dispersion_bits + out.log_bits;
  return out;
}

RateResult p2p_rate(const P2PSetup& setup, const LogTermPolicy& policy) {
  RateResult out;
  out.rtilde = p2p_rtilde(setup, policy);
  const double dn = static_cast<double>(setup.n);
  const NType type = nearest_ntype(setup.input, setup.n);
  double h_type = 0.0;
  for (std::int64_t c : type.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / dn;
    h_type -= p * std::log2(p);
  }
  const double L = policy.type_constant_or(setup.input.size());
  out.type_entropy_bits = dn * h_type;
  out.cap_log_bits = policy.c_multiplier * (L + 2.0) * std::log2(dn);
  const double total = out.type_entropy_bits - out.cap_log_bits - out.rtilde.total_bits;
  out.unclamped_rate = total / dn;
  out.clamped = out.unclamped_rate < 0.0;
  out.rate = std::max(0.0, out.unclamped_rate);
  return out;
}

BCRegionCalculator::BCRegionCalculator(const BCSetup& setup, const LogTermPolicy& policy,
                                       int region_directions)
    : n_(setup.n) {
  if (setup.n < 2) throw std::invalid_argument("bc region: n must be >= 2");
  if (!(setup.eps > 0.0 && setup.eps < 1.0))
    throw std::invalid_argument("bc region: eps must lie in (0,1)");
  if (setup.q_u1u2x.rank() != 3)
    throw std::invalid_argument("bc region: q must have axes (U1, U2, input)");
  if (setup.channel.outputs().size() != 2)
    throw std::invalid_argument("bc region: channel must have two outputs");
  const double dn = static_cast<double>(setup.n);

  const JointPmf full = setup.channel.extend(setup.q_u1u2x);  // (U1,U2,X,Y1,Y2)
  const std::vector<std::string> u1{full.axis(0).name};
  const std::vector<std::string> u2{full.axis(1).name};
  const std::vector<std::string> y1{full.axis(3).name};
  const std::vector<std::string> y2{full.axis(4).name};
  std::vector<std::string> u12{full.axis(0).name, full.axis(1).name};

  h_u1_ = entropy(full, u1);
  h_u2_ = entropy(full, u2);
  h_joint_ = entropy(full, u12);
  h_cond_[0] = entropy(full, u1, y1);
  h_cond_[1] = entropy(full, u2, y2);
  cov_ = bc_covariance(setup.q_u1u2x, setup.channel);

  eps_region_ = setup.eps;
  if (policy.eps_adjust == EpsAdjust::subtract_slack) {
    const double union_c = policy.bc_union_constant == PairBoundConstant::four ? 4.0 : 3.0;
    eps_region_ = setup.eps - apx_slack_bits(2, policy.gamma_apx, setup.n) -
                  union_c * std::exp2(-policy.gamma_dec.value(setup.n));
    if (eps_region_ <= 0.0)
      throw std::domain_error("bc region: eps adjustments leave no budget");
  }

  const double log2n = std::log2(dn);
  const double l1 = policy.type_constant_or(setup.q_u1u2x.axis(0).size);
  const double l2 = policy.type_constant_or(setup.q_u1u2x.axis(1).size);
  const double l12 =
      policy.type_constant_or(setup.q_u1u2x.axis(0).size * setup.q_u1u2x.axis(1).size);
  cap1_ = h_u1_ - policy.c_multiplier * (l1 + 2.0) * log2n / dn;
  cap2_ = h_u2_ - policy.c_multiplier * (l2 + 2.0) * log2n / dn;
  cap_sum_ = h_joint_ - policy.c_multiplier * (l12 + 2.0) * log2n / dn;
  dec_log_per_use_ = policy.c_multiplier * policy.gamma_dec.value(setup.n) / dn;

  const GaussRegionSpec region{cov_, eps_region_};
  const auto dirs = quadrant_directions(region_directions);
  region_points_ = region_boundary(region, dirs);
}

bool BCRegionCalculator::contains(double r1, double r2) const {
  if (r1 < 0.0 || r2 < 0.0) return false;
  const double sqrt_n = std::sqrt(static_cast<double>(n_));
  for (const auto& [g1, g2] : region_points_) {
    const double rt1 = std::max(0.0, h_cond_[0] + g1 / sqrt_n + dec_log_per_use_);
    const double rt2 = std::max(0.0, h_cond_[1] + g2 / sqrt_n + dec_log_per_use_);
    if (r1 + rt1 <= cap1_ && r2 + rt2 <= cap2_ && r1 + r2 + rt1 + rt2 <= cap_sum_)
      return true;
  }
  return false;
}

std::vector<std::pair<double, double>> BCRegionCalculator::boundary(
    std::span<const std::pair<double, double>> directions) const {
  std::vector<std::pair<double, double>> out;
  out.reserve(directions.size());
  for (const auto& [d1, d2] : directions) {
    if (!(d1 > 0.0 && d2 > 0.0))
      throw std::invalid_argument("bc boundary: directions must have positive components");
    if (!contains(0.0, 0.0)) {
      out.emplace_back(0.0, 0.0);
      continue;
    }
    double lo = 0.0, hi = 1.0;
    while (contains(hi * d1, hi * d2) && hi < 64.0) {
      lo = hi;
      hi *= 2.0;
    }
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      if (contains(mid * d1, mid * d2))
        lo = mid;
      else
        hi = mid;
    }
    out.emplace_back(lo * d1, lo * d2);
  }
  return out;
}

bool bc_region_membership(const BCSetup& setup, double r1, double r2,
                          const LogTermPolicy& policy) {
  return BCRegionCalculator(setup, policy).contains(r1, r2);
}

std::vector<std::pair<double, double>> bc_region_boundary(
    const BCSetup& setup, const LogTermPolicy& policy,
    std::span<const std::pair<double, double>> directions) {
  return BCRegionCalculator(setup, policy).boundary(directions);
}

WiretapRateResult wiretap_rate(const WiretapSetup& setup, const LogTermPolicy& policy) {
  if (setup.n < 2) throw std::invalid_argument("wiretap_rate: n must be >= 2");
  if (!(setup.eps_r > 0.0 && setup.eps_r < 1.0) || !(setup.eps_sec > 0.0 && setup.eps_sec < 1.0))
    throw std::invalid_argument("wiretap_rate: eps_r and eps_sec must lie in (0,1)");
  if (!(setup.theta > 0.0 && setup.theta < 1.0))
    throw std::domain_error("wiretap_rate: theta endpoints make a budget vanish");
  if (setup.q_ux.rank() != 2)
    throw std::invalid_argument("wiretap_rate: q must have axes (U, input)");
  if (setup.channel.outputs().size() != 2)
    throw std::invalid_argument("wiretap_rate: channel must have outputs (Y, Z)");
  const double dn = static_cast<double>(setup.n);

  const JointPmf full = setup.channel.extend(setup.q_ux);  // (U, X, Y, Z)
  const JointPmf m_u = full.marginal(std::vector<int>{0});
  const NType type = nearest_ntype(m_u.to_pmf(), setup.n);
  std::vector<double> phi(static_cast<std::size_t>(m_u.size()));
  double h_type = 0.0, h_cross = 0.0, log_t = type_class_log_size(type);
  for (std::size_t u = 0; u < phi.size(); ++u) {
    phi[u] = static_cast<double>(type.counts[u]) / dn;
    if (phi[u] > 0.0) {
      h_type -= phi[u] * std::log2(phi[u]);
      if (m_u[u] <= 0.0)
        throw std::domain_error("wiretap_rate: type puts mass on a zero-probability symbol");
      h_cross -= phi[u] * std::log2(m_u[u]);
    }
  }

  const int nu = full.axis(0).size, nx = full.axis(1).size;
  const int ny = full.axis(2).size, nz = full.axis(3).size;
  const JointPmf m_uy = full.marginal(std::vector<int>{0, 2});
  const JointPmf m_uz = full.marginal(std::vector<int>{0, 3});
  const std::vector<double> h_y = cond_info_table(m_uy);
  const std::vector<double> h_z = cond_info_table(m_uz);

  // Type-weighted per-letter moments; conditioning set selected by policy.
  double mu_y = 0.0, v_y = 0.0, mu_z = 0.0, v_z = 0.0;
  const JointPmf m_ux = full.marginal(std::vector<int>{0, 1});
  const JointPmf m_uxy = full.marginal(std::vector<int>{0, 1, 2});
  const JointPmf m_uxz = full.marginal(std::vector<int>{0, 1, 3});
  for (int u = 0; u < nu; ++u) {
    if (phi[static_cast<std::size_t>(u)] == 0.0) continue;
    const double pu = m_u[static_cast<std::size_t>(u)];
    // Conditional output laws given u.
    std::vector<double> wy(static_cast<std::size_t>(ny)), wz(static_cast<std::size_t>(nz));
    for (int y = 0; y < ny; ++y)
      wy[static_cast<std::size_t>(y)] = m_uy[static_cast<std::size_t>(u * ny + y)] / pu;
    for (int z = 0; z < nz; ++z)
      wz[static_cast<std::size_t>(z)] = m_uz[static_cast<std::size_t>(u * nz + z)] / pu;
    const MeanVar my = weighted_moments(
        std::span<const double>(h_y).subspan(static_cast<std::size_t>(u) * static_cast<std::size_t>(ny),
                                             static_cast<std::size_t>(ny)),
        wy);
    const MeanVar mz = weighted_moments(
        std::span<const double>(h_z).subspan(static_cast<std::size_t>(u) * static_cast<std::size_t>(nz),
                                             static_cast<std::size_t>(nz)),
        wz);
    mu_y += phi[static_cast<std::size_t>(u)] * my.mean;
    mu_z += phi[static_cast<std::size_t>(u)] * mz.mean;
    if (policy.wiretap_conditioning == VarianceConditioning::given_u) {
      v_y += phi[static_cast<std::size_t>(u)] * my.var;
      v_z += phi[static_cast<std::size_t>(u)] * mz.var;
    } else {
      for (int x = 0; x < nx; ++x) {
        const double pux = m_ux[static_cast<std::size_t>(u * nx + x)];
        if (pux <= 0.0) continue;
        std::vector<double> wyx(static_cast<std::size_t>(ny)), wzx(static_cast<std::size_t>(nz));
        for (int y = 0; y < ny; ++y)
          wyx[static_cast<std::size_t>(y)] =
              m_uxy[static_cast<std::size_t>((u * nx + x) * ny + y)] / pux;
        for (int z = 0; z < nz; ++z)
          wzx[static_cast<std::size_t>(z)] =
              m_uxz[static_cast<std::size_t>((u * nx + x) * nz + z)] / pux;
        const MeanVar myx = weighted_moments(
            std::span<const double>(h_y).subspan(
                static_cast<std::size_t>(u) * static_cast<std::size_t>(ny),
                static_cast<std::size_t>(ny)),
            wyx);
        const MeanVar mzx = weighted_moments(
            std::span<const double>(h_z).subspan(
                static_cast<std::size_t>(u) * static_cast<std::size_t>(nz),
                static_cast<std::size_t>(nz)),
            wzx);
        const double w = phi[static_cast<std::size_t>(u)] * (pux / pu);
        v_y += w * myx.var;
        v_z += w * mzx.var;
      }
    }
  }

  WiretapRateResult out;
  out.v_y = v_y;
  out.v_z = v_z;
  out.eps_gauss_rel = setup.theta * setup.eps_r;
  out.eps_gauss_sec = (1.0 - setup.theta) * setup.eps_sec;
  if (policy.eps_adjust == EpsAdjust::subtract_slack) {
    const double apx = apx_slack_bits(1, policy.gamma_apx, setup.n);
    out.eps_gauss_rel -= apx + std::exp2(-policy.gamma_dec.value(setup.n));
    out.eps_gauss_sec -= 3.0 * apx + apx_slack_bits(1, policy.gamma_apx, setup.n);
    if (out.eps_gauss_rel <= 0.0 || out.eps_gauss_sec <= 0.0)
      throw std::domain_error("wiretap_rate: eps adjustments leave no budget");
  }
  if (out.eps_gauss_rel >= 1.0 || out.eps_gauss_sec >= 1.0)
    throw std::domain_error("wiretap_rate: split budgets must stay below one");

  const double log2n = std::log2(dn);
  const double l_u = policy.type_constant_or(nu);
  out.dec_log_bits = policy.c_multiplier * policy.gamma_dec.value(setup.n);
  out.type_cap_log_bits = policy.c_multiplier * (l_u + 2.0) * log2n;
  out.secrecy_cap_log_bits = policy.c_multiplier * policy.gamma_apx.value(setup.n);
  const double rtilde = dn * mu_y +
                        (v_y > 0.0 ? std::sqrt(dn * v_y) * std_q_inv(out.eps_gauss_rel) : 0.0) +
                        out.dec_log_bits;
  const double type_budget = dn * h_type - out.type_cap_log_bits;
  const double secrecy_budget =
      log_t - dn * h_cross + dn * mu_z -
      (v_z > 0.0 ? std::sqrt(dn * v_z) * std_q_inv(out.eps_gauss_sec) : 0.0) -
      out.secrecy_cap_log_bits;

  out.rtilde_bits = rtilde;
  out.type_budget_bits = type_budget;
  out.secrecy_budget_bits = secrecy_budget;
  out.unclamped_rate = (std::min(type_budget, secrecy_budget) - rtilde) / dn;
  out.clamped = out.unclamped_rate < 0.0;
  out.rate = std::max(0.0, out.unclamped_rate);
  return out;
}

}  // namespace randbin
