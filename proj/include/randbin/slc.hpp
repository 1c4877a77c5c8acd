#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "randbin/binning.hpp"
#include "randbin/pmf.hpp"
#include "randbin/rng.hpp"

// Stochastic likelihood decoding of binned sources with side information.
// The decoder draws from the (possibly mismatched) posterior
// T(x | z, b) ~ t(x | z) 1{B(x) = b}. This module carries the exact lower
// bound on expected correct decoding, its weakened error upper bound with
// the associated good set, and exact/Monte Carlo verification oracles.
//
// Axis conventions follow binning.hpp: part axes first, side axes after.

namespace randbin {

struct SlcDecoder {
  const JointPmf* t_joint = nullptr;  // decoding metric over (parts, side)
  const BinningSpec* spec = nullptr;
  const BinningAssignment* assignment = nullptr;
};

// Posterior over the flattened part product (part 0 major). Empty when no
// bin-consistent candidate has positive metric: an undecodable observation
// that callers count as an error event.
std::optional<std::vector<double>> slc_posterior(const SlcDecoder& dec,
                                                 std::span<const int> side_point,
                                                 std::span<const int> bin_point);

// One draw from the posterior; with deterministic=true, the argmax with
// lexicographic tie-break (test aid only).
std::optional<std::vector<int>> slc_decode(const SlcDecoder& dec, std::span<const int> side_point,
                                           std::span<const int> bin_point, Rng& rng,
                                           bool deterministic = false);

// Exact lower bound on the expected probability of correct decoding:
// E_p[ 1 / (1 + sum_S M_S^{-1} 2^{h_t(X_S | X_{S^c}, Z)}) ].
double correct_decode_lower_bound(const JointPmf& p_joint, const JointPmf& t_joint,
                                  const BinningSpec& spec);

struct DecodeBoundParams {
  const JointPmf* t_joint = nullptr;
  const BinningSpec* spec = nullptr;
  double gamma_bits = 0.0;
};

// Good set: every nonempty part-subset S has
// sum_{v in S} log2 M_v - h_t(x_S | z) > gamma.
class DecodeGoodSet {
 public:
  explicit DecodeGoodSet(const DecodeBoundParams& params);
  bool contains(std::span<const int> point) const;
  double complement_mass(const JointPmf& p_joint) const;

 private:
  const JointPmf* t_joint_;
  double gamma_;
  int num_parts_;
  std::vector<double> log2_bins_;
  std::optional<JointPmf> side_marginal_;
  std::vector<JointPmf> subset_marginals_;
  std::vector<std::vector<int>> subset_point_axes_;
  std::vector<int> side_axes_;
};

// Weakened upper bound on expected decoding error:
// p(good set complement) + (2^|V| - 1) 2^{-gamma}.
double decode_error_bound(const JointPmf& p_joint, const DecodeBoundParams& params);

// Exact expectation over all assignments of the probability of correct
// decoding. Guarded like exact_expected_tv.
double exact_expected_correct(const JointPmf& p_joint, const JointPmf& t_joint,
                              const BinningSpec& spec);

// Empirical error frequency of the sampled protocol: draw assignment, draw
// source, encode, decode, compare the full tuple.
McEstimate mc_error_prob(const JointPmf& p_joint, const JointPmf& t_joint,
                         const BinningSpec& spec, std::int64_t trials, Rng& rng,
                         int workers = 1);

// Additive constant in the two-user union bound; both spellings are kept.
enum class PairBoundConstant { four, three };

// Two-user variant with per-user metrics and the union error event
// (either component wrong): p(S^c) + c 2^{-gamma} with
// S = { log2 F_j - h_{t_j}(u_j | y_j) > gamma, j = 1, 2 }.
double two_user_error_bound(const JointPmf& p_u1u2y1y2, const JointPmf& t1_u1y1,
                            const JointPmf& t2_u2y2, double log2_f1, double log2_f2,
                            double gamma_bits, PairBoundConstant c = PairBoundConstant::four);

}  // namespace randbin
