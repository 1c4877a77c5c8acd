#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "randbin/pmf.hpp"
#include "randbin/rng.hpp"

// Distributed random binning: each part's symbols are mapped i.i.d. uniformly
// into bins. This module carries the achievability-of-uniformity bound on
// E || P(bins, z) - uniform x p(z) ||_TV, its defining good set, exact
// enumeration oracles over all assignments, Monte Carlo estimation, and the
// variance diagnostic behind the bound's concentration step.
//
// Convention: a source JointPmf lists the binned part axes first, in the
// order of the BinningSpec, followed by any side-information axes.

namespace randbin {

struct BinningPart {
  Alphabet alphabet;
  int num_bins = 1;
};

struct BinningSpec {
  std::vector<BinningPart> parts;

  int num_parts() const { return static_cast<int>(parts.size()); }
  double log2_bins(int part) const;
  double log2_total_bins() const;
  std::size_t bin_cells() const;  // prod M_v
  // log2 of the number of distinct assignments, sum |X_v| * log2 M_v.
  double log2_assignment_count() const;
  void validate() const;
};

struct BinningAssignment {
  std::vector<std::vector<int>> maps;  // per part, symbol -> bin in [0, M)

  std::size_t bin_flat(const BinningSpec& spec, std::span<const int> symbols) const;
};

// Each symbol's bin i.i.d. uniform, independent across symbols and parts.
BinningAssignment sample_binning(const BinningSpec& spec, Rng& rng);

// Deterministic mixed-radix enumeration of every assignment; the digit for
// part 0 / symbol 0 advances fastest.
class AssignmentEnumerator {
 public:
  explicit AssignmentEnumerator(const BinningSpec& spec, std::size_t guard_cells = 1000000);
  std::size_t count() const { return count_; }
  const BinningAssignment& current() const { return current_; }
  bool next();
  void reset();

 private:
  const BinningSpec* spec_;
  BinningAssignment current_;
  std::size_t count_;
};

// P(z, b) = sum_x p(x, z) prod_v 1{B_v(x_v) = b_v}; axes are the source's
// side-information axes followed by one bin axis per part.
JointPmf induced_bin_pmf(const JointPmf& source, const BinningSpec& spec,
                         const BinningAssignment& assignment);

// Parameters of the good set: points where every nonempty part-subset S
// satisfies h_p(x_S, z) - h_t(z) - sum_{v in S} log2 M_v > gamma.
struct TvBoundParams {
  const JointPmf* source = nullptr;
  const BinningSpec* spec = nullptr;
  const JointPmf* t_z = nullptr;  // over the side axes; rank 0 when there are none
  double gamma_bits = 0.0;
};

class TvGoodSet {
 public:
  explicit TvGoodSet(const TvBoundParams& params);
  // Full coordinate point: part symbols then side symbols. Zero-probability
  // points are non-members by convention.
  bool contains(std::span<const int> point) const;
  // p-mass of the complement.
  double complement_mass() const;

 private:
  const JointPmf* source_;
  const JointPmf* t_z_;
  double gamma_;
  int num_parts_;
  std::vector<double> log2_bins_;
  std::vector<JointPmf> subset_marginals_;          // per nonempty mask
  std::vector<std::vector<int>> subset_point_axes_; // full-point positions feeding each marginal
  std::vector<int> side_axes_;
};

// Both spellings of the concentration term are kept; they differ by sqrt(2).
enum class TvBoundVariant {
  tight,  // additive term 2^((|V| - gamma)/2 - 1)
  loose,  // additive term 2^((|V| - 1 - gamma)/2)
};

// Upper bound on the expected total variation between the induced (bins, z)
// pmf and uniform bins x p(z): p(good set complement) + additive term.
double expected_tv_bound(const TvBoundParams& params,
                         TvBoundVariant variant = TvBoundVariant::tight);

// Exact average of total_variation(induced, uniform x p_z) over all
// assignments. Guarded at 1e6 assignments.
double exact_expected_tv(const JointPmf& source, const BinningSpec& spec);

struct McEstimate {
  double estimate = 0.0;
  double half_width = 0.0;  // 99% normal-approximation confidence half-width
  std::int64_t trials = 0;
};

McEstimate mc_expected_tv(const JointPmf& source, const BinningSpec& spec, std::int64_t trials,
                          Rng& rng, int workers = 1);

struct VarianceDiagnostic {
  double exact_var = 0.0;
  double bound = 0.0;
};

// Variance over assignments of the good-set-restricted partial pmf at a
// fixed (z, b) cell, against its closed-form bound
// M^{-2} 2^(|V| - gamma) p(z) t(z).
VarianceDiagnostic variance_diagnostic(const TvBoundParams& params,
                                       std::span<const int> side_point,
                                       std::span<const int> bin_point);

}  // namespace randbin
