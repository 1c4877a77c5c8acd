#pragma once

#include <cstdint>
#include <vector>

#include "randbin/pmf.hpp"
#include "randbin/rng.hpp"

// Method-of-types machinery: nearest n-type construction, exact type-class
// sizes via log-gamma, and uniform sampling over a type class.

namespace randbin {

struct NType {
  Alphabet alphabet;
  std::int64_t n = 0;
  std::vector<std::int64_t> counts;

  Pmf implied_pmf() const;
};

// The n-type closest to q in infinity norm: floor(n*q) plus remainder mass
// distributed by largest fractional part, ties broken by lowest symbol
// index. Always satisfies ||counts/n - q||_inf <= 1/n.
NType nearest_ntype(const Pmf& q, std::int64_t n);

// Exact log2 of the multinomial coefficient n! / prod(counts!).
double type_class_log_size(const NType& type);

// Self-information (bits) of any member under the uniform-over-type-class
// distribution; numerically identical to type_class_log_size.
double type_log_mass(const NType& type);

// Uniformly random member of the type class (shuffled multiset).
std::vector<int> sample_from_type(const NType& type, Rng& rng);

// Standard type-counting constant L = |alphabet| - 1, so that
// log2|T| >= n*H - L*log2(n).
double type_constant(int alphabet_size);

// Uniform distribution over a type class.
class TypeClassDist {
 public:
  explicit TypeClassDist(NType type);
  const NType& type() const { return type_; }
  double log2_size() const { return log2_size_; }
  // -log2 P(x^n) for members; equals log2_size().
  double member_log_mass() const { return log2_size_; }
  std::vector<int> sample(Rng& rng) const { return sample_from_type(type_, rng); }

 private:
  NType type_;
  double log2_size_;
};

}  // namespace randbin
