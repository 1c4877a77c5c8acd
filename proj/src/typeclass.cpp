#include "randbin/typeclass.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace randbin {

Pmf NType::implied_pmf() const {
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  return Pmf(alphabet, std::move(p));
}

NType nearest_ntype(const Pmf& q, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("nearest_ntype: n must be >= 1");
  const int k = q.size();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k));
  std::vector<double> frac(static_cast<std::size_t>(k));
  std::int64_t assigned = 0;
  for (int i = 0; i < k; ++i) {
    const double scaled = static_cast<double>(n) * q[i];
    const double fl = std::floor(scaled);
    counts[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(fl);
    frac[static_cast<std::size_t>(i)] = scaled - fl;
    assigned += counts[static_cast<std::size_t>(i)];
  }
  std::int64_t remaining = n - assigned;
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
  });
  for (std::int64_t r = 0; r < remaining; ++r)
    ++counts[static_cast<std::size_t>(order[static_cast<std::size_t>(r % k)])];
  return NType{q.alphabet(), n, std::move(counts)};
}

double type_class_log_size(const NType& type) {
  if (type.n < 1) throw std::invalid_argument("type_class_log_size: invalid type");
  double log_e = std::lgamma(static_cast<double>(type.n) + 1.0);
  std::int64_t total = 0;
  for (std::int64_t c : type.counts) {
    if (c < 0) throw std::invalid_argument("type_class_log_size: negative count");
    log_e -= std::lgamma(static_cast<double>(c) + 1.0);
    total += c;
  }
  if (total != type.n) throw std::invalid_argument("type_class_log_size: counts do not sum to n");
  return log_e / std::numbers::ln2;
}

double type_log_mass(const NType& type) { return type_class_log_size(type); }

std::vector<int> sample_from_type(const NType& type, Rng& rng) {
  std::vector<int> seq;
  seq.reserve(static_cast<std::size_t>(type.n));
  for (std::size_t sym = 0; sym < type.counts.size(); ++sym)
    seq.insert(seq.end(), static_cast<std::size_t>(type.counts[sym]), static_cast<int>(sym));
  // Fisher-Yates
  for (std::size_t i = seq.size(); i > 1; --i)
    std::swap(seq[i - 1], seq[rng.uniform_int(i)]);
  return seq;
}

double type_constant(int alphabet_size) {
  if (alphabet_size < 1) throw std::invalid_argument("type_constant: alphabet size must be >= 1");
  return static_cast<double>(alphabet_size - 1);
}

TypeClassDist::TypeClassDist(NType type)
    : type_(std::move(type)), log2_size_(type_class_log_size(type_)) {}

}  // namespace randbin
