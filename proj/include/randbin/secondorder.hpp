#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "randbin/binning.hpp"
#include "randbin/gaussian.hpp"
#include "randbin/measures.hpp"
#include "randbin/pmf.hpp"
#include "randbin/rng.hpp"
#include "randbin/slc.hpp"
#include "randbin/typeclass.hpp"

// Finite-blocklength rate calculators and protocol simulators for
// point-to-point, broadcast and wiretap channels. Rates are assembled in the
// derivation-consistent form: second-order terms enter as
// -sqrt(V/n) * Qinv(eps) at per-use scale, log terms are explicit, and every
// result carries its components so each number can be reproduced from the
// lower-level modules.

namespace randbin {

// gamma(n) = log2_coeff * log2(n) + constant, in bits.
struct GammaRule {
  double log2_coeff = 1.0;
  double constant = 0.0;
  double value(std::int64_t n) const;
};

// Whether the slack consumed by the uniformity approximation and the
// decoder's additive term is subtracted from the Gaussian budget. The
// faithful accounting subtracts it and reports an error when the budget is
// exhausted (eps of order 1/sqrt(n)); `none` evaluates Qinv at the plain
// target, which is the spelling the asymptotic comparisons use.
enum class EpsAdjust { subtract_slack, none };

struct LogTermPolicy {
  // Scales every log2(n) rate penalty; slack terms are not scaled.
  double c_multiplier = 1.0;
  // Overrides the type-counting constant L (default |alphabet| - 1).
  std::optional<double> type_constant_override;
  GammaRule gamma_apx{1.0, 0.0};  // uniformity step, default log2(n)
  GammaRule gamma_dec{0.5, 0.0};  // decoding step, default 0.5*log2(n)
  EpsAdjust eps_adjust = EpsAdjust::subtract_slack;
  VarianceConditioning wiretap_conditioning = VarianceConditioning::given_ux;
  PairBoundConstant bc_union_constant = PairBoundConstant::four;

  double type_constant_or(int alphabet_size) const;
};

struct P2PSetup {
  Pmf input;
  Channel channel;
  std::int64_t n = 0;
  double eps = 0.0;
};

// Bin-index budget the decoder needs: n*Rtilde in total bits.
struct RtildeResult {
  double total_bits = 0.0;
  double mean_bits = 0.0;        // n * E_type[h(X|Y)]
  double dispersion_bits = 0.0;  // sqrt(n V_type) * Qinv(eps_gauss)
  double log_bits = 0.0;         // scaled gamma_dec
  double eps_gauss = 0.0;
  double per_letter_variance = 0.0;
};

RtildeResult p2p_rtilde(const P2PSetup& setup, const LogTermPolicy& policy = {});

struct RateResult {
  double rate = 0.0;  // bits per use, clamped at zero
  bool clamped = false;
  double unclamped_rate = 0.0;
  double type_entropy_bits = 0.0;  // n * H_type(X)
  double cap_log_bits = 0.0;       // scaled (L+2) log2 n
  RtildeResult rtilde;
};

RateResult p2p_rate(const P2PSetup& setup, const LogTermPolicy& policy = {});

struct P2PSimOptions {
  enum class Method { auto_select, brute, lazy };
  Method method = Method::auto_select;
  // Overrides for the bin budgets, log2 scale (testing aid).
  std::optional<double> force_log2_m;
  std::optional<double> force_log2_f;
  int workers = 1;
  std::size_t brute_space_limit = 1u << 20;
};

struct P2PSimResult {
  McEstimate message_error;
  McEstimate sequence_error;
  std::int64_t encoder_failures = 0;
  const char* method = "";
};

// End-to-end protocol simulation at the given rate: random binning encoder
// over the input type class, channel transmission, mismatched stochastic
// likelihood decoding restricted to the shared bin. Small spaces run a
// fully explicit sampler; large blocklengths use a distributionally
// equivalent lazy realization of the random binning.
P2PSimResult p2p_simulate(const P2PSetup& setup, double rate, const LogTermPolicy& policy,
                          std::int64_t trials, Rng& rng, const P2PSimOptions& options = {});

struct BCSetup {
  JointPmf q_u1u2x;  // axes (U1, U2, channel input)
  Channel channel;   // two output axes
  std::int64_t n = 0;
  double eps = 0.0;
};

// Precomputed per-setup quantities so membership queries are cheap.
class BCRegionCalculator {
 public:
  BCRegionCalculator(const BCSetup& setup, const LogTermPolicy& policy = {},
                     int region_directions = 256);

  bool contains(double r1, double r2) const;
  // Largest t with t*(d1,d2) inside, per direction, bisected to 1e-6 bits.
  std::vector<std::pair<double, double>> boundary(
      std::span<const std::pair<double, double>> directions) const;

  double h_u1() const { return h_u1_; }
  double h_u2() const { return h_u2_; }
  double h_joint() const { return h_joint_; }
  double h_u1_given_y1() const { return h_cond_[0]; }
  double h_u2_given_y2() const { return h_cond_[1]; }
  const CovMatrix2& covariance() const { return cov_; }
  double eps_region() const { return eps_region_; }

 private:
  std::int64_t n_;
  double h_u1_, h_u2_, h_joint_;
  double h_cond_[2];
  CovMatrix2 cov_;
  double eps_region_;
  double cap1_, cap2_, cap_sum_;  // right-hand sides of the linear caps
  double dec_log_per_use_;
  std::vector<std::pair<double, double>> region_points_;
};

bool bc_region_membership(const BCSetup& setup, double r1, double r2,
                          const LogTermPolicy& policy = {});

std::vector<std::pair<double, double>> bc_region_boundary(
    const BCSetup& setup, const LogTermPolicy& policy,
    std::span<const std::pair<double, double>> directions);

struct WiretapSetup {
  JointPmf q_ux;    // axes (U, channel input)
  Channel channel;  // output axes (Y, Z): receiver then eavesdropper
  std::int64_t n = 0;
  double eps_r = 0.0;
  double eps_sec = 0.0;
  double theta = 0.5;
};

struct WiretapRateResult {
  double rate = 0.0;  // bits per use, clamped at zero
  bool clamped = false;
  double unclamped_rate = 0.0;
  double type_budget_bits = 0.0;     // uniformity cap on n(R + Rtilde)
  double secrecy_budget_bits = 0.0;  // eavesdropper cap on n(R + Rtilde)
  double rtilde_bits = 0.0;
  double v_y = 0.0;
  double v_z = 0.0;
  double eps_gauss_rel = 0.0;
  double eps_gauss_sec = 0.0;
  double type_cap_log_bits = 0.0;     // log penalty inside the type budget
  double secrecy_cap_log_bits = 0.0;  // log penalty inside the secrecy budget
  double dec_log_bits = 0.0;          // log penalty inside rtilde
};

WiretapRateResult wiretap_rate(const WiretapSetup& setup, const LogTermPolicy& policy = {});

struct WiretapSimOptions {
  bool allow_estimator = false;      // opt-in for the plug-in path
  int f_scan = 8;                    // sampled shared-randomness values
  std::size_t exact_space_limit = 1u << 20;
  std::optional<std::int64_t> force_m;
  std::optional<std::int64_t> force_f;
  int workers = 1;
};

struct WiretapSimResult {
  double tv_estimate = 0.0;
  double tv_half_width = 0.0;  // 0 on the exact path
  double tv_bias_bound = 0.0;  // 0 on the exact path
  double error_estimate = 0.0;
  std::int64_t f_scanned = 0;
  std::int64_t m_bins = 0;
  std::int64_t f_bins = 0;
  std::int64_t empty_cells = 0;
  const char* method = "";
};

// Protocol evaluation for one sampled assignment with the best of several
// sampled shared-randomness values: secrecy total variation at the
// eavesdropper and decoding error at the receiver. Small spaces are
// evaluated exactly (zero-width estimates); larger ones need the opt-in
// plug-in estimator, which reports a bias bound.
WiretapSimResult wiretap_simulate_secrecy(const WiretapSetup& setup, double rate,
                                          const LogTermPolicy& policy, std::int64_t trials,
                                          Rng& rng, const WiretapSimOptions& options = {});

}  // namespace randbin
