#pragma once

#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "randbin/pmf.hpp"

// Information-theoretic functionals over JointPmf. All logarithms are base 2
// and all results are in bits (variances in bits^2). Conventions:
// 0*log(0) = 0 in entropies; conditional information of a zero-probability
// point is +infinity; information density of a zero-mass cell is -infinity.

namespace randbin {

inline constexpr double kInfBits = std::numeric_limits<double>::infinity();

// A named axis pinned to a symbol.
struct AxisValue {
  std::string axis;
  int value = 0;
};

// Marginal onto the named axes (original axis order kept).
JointPmf marginalize(const JointPmf& joint, std::span<const std::string> keep);

// p(target | given), normalized. Throws std::domain_error when the given
// point has zero probability.
JointPmf condition(const JointPmf& joint, std::span<const std::string> target,
                   std::span<const AxisValue> given);

// n-fold product of the joint with itself, materialized. Axis names get a
// per-copy suffix. Guarded at 2^24 cells; use IidProductView beyond that.
JointPmf iid_extend(const JointPmf& joint, int n);

// Lazy n-fold product: evaluation only, no table.
class IidProductView {
 public:
  IidProductView(const JointPmf& base, int n);
  int copies() const { return n_; }
  // `points` holds n consecutive base-rank coordinate blocks.
  double prob(std::span<const int> points) const;
  double log2_prob(std::span<const int> points) const;

 private:
  const JointPmf* base_;
  int n_;
};

// h_p(target | given) = -log2 p(target | given) in bits.
double conditional_information(const JointPmf& joint, std::span<const AxisValue> target,
                               std::span<const AxisValue> given);

// log2( p(a,b) / (p(a) p(b)) ). The two axis sets must be disjoint.
double information_density(const JointPmf& joint, std::span<const AxisValue> a,
                           std::span<const AxisValue> b);

// Shannon conditional entropy H(target | given) in bits.
double entropy(const JointPmf& joint, std::span<const std::string> target,
               std::span<const std::string> given = {});

double total_variation(const JointPmf& p, const JointPmf& q);

// E_X[ Var_{Y|X}( i(X;Y) | X ) ] for the joint input x channel, bits^2.
double channel_dispersion(const Pmf& input, const Channel& channel);

// E_{U1,U2} Cov_{Y1,Y2|U1,U2}[ (i(U1;Y1), i(U2;Y2))^T ] for a two-output
// channel fed through q(u1,u2,x). The channel input axis is matched by name.
CovMatrix2 bc_covariance(const JointPmf& q_u1u2x, const Channel& channel);

// Which conditioning the per-user variance uses; both spellings appear in
// the wiretap rate and coincide when U = X.
enum class VarianceConditioning { given_ux, given_u };

struct WiretapVariances {
  double v_y = 0.0;
  double v_z = 0.0;
};

// Per-letter variances of i(U;Y) and i(U;Z) for a two-output channel fed
// through q(u,x).
WiretapVariances wiretap_variances(const JointPmf& q_ux, const Channel& channel,
                                   VarianceConditioning conditioning = VarianceConditioning::given_ux);

}  // namespace randbin
