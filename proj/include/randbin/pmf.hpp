#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Finite discrete probability objects: alphabets, pmfs, dense joint tables
// and channels. Everything is immutable after construction and validated on
// construction (probabilities nonnegative, mass 1 within 1e-12); inputs
// outside tolerance are rejected rather than silently renormalized.

namespace randbin {

inline constexpr double kPmfMassTolerance = 1e-12;

struct Alphabet {
  std::string name;
  int size = 0;

  friend bool operator==(const Alphabet&, const Alphabet&) = default;
};

class Pmf {
 public:
  Pmf(Alphabet alphabet, std::vector<double> probs);

  static Pmf uniform(Alphabet alphabet);
  static Pmf point_mass(Alphabet alphabet, int symbol);

  const Alphabet& alphabet() const { return alphabet_; }
  int size() const { return alphabet_.size; }
  double operator[](int i) const { return probs_[static_cast<std::size_t>(i)]; }
  std::span<const double> probs() const { return probs_; }

 private:
  Alphabet alphabet_;
  std::vector<double> probs_;
};

// Dense joint pmf over a product alphabet, row-major with the last axis
// varying fastest. Axis names must be unique.
class JointPmf {
 public:
  JointPmf(std::vector<Alphabet> axes, std::vector<double> probs);

  static JointPmf from_pmf(const Pmf& pmf);
  static JointPmf uniform(std::vector<Alphabet> axes);

  int rank() const { return static_cast<int>(axes_.size()); }
  const Alphabet& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  const std::vector<Alphabet>& axes() const { return axes_; }
  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t flat) const { return probs_[flat]; }

  // Index of the axis with the given name; throws std::invalid_argument if absent.
  int axis_index(std::string_view name) const;
  bool has_axis(std::string_view name) const;

  std::size_t flat_index(std::span<const int> point) const;
  void unflatten(std::size_t flat, std::span<int> point) const;
  double prob(std::span<const int> point) const { return probs_[flat_index(point)]; }

  // Marginal onto the given axes (any order, duplicates ignored); the result
  // keeps the axes in their original order. Mass is preserved.
  JointPmf marginal(std::span<const int> keep_axes) const;

  // Rank-1 joints convert to a Pmf.
  Pmf to_pmf() const;

  bool same_axes(const JointPmf& other) const;

 private:
  JointPmf() = default;

  std::vector<Alphabet> axes_;
  std::vector<double> probs_;
  std::vector<std::size_t> strides_;
};

// Conditional pmf q(outputs | input); each row is a pmf over the flattened
// output product alphabet.
class Channel {
 public:
  Channel(Alphabet input, std::vector<Alphabet> outputs, std::vector<std::vector<double>> rows);

  // Binary symmetric channel with crossover probability p.
  static Channel bsc(double p, std::string input_name = "X", std::string output_name = "Y");

  const Alphabet& input() const { return input_; }
  const std::vector<Alphabet>& outputs() const { return outputs_; }
  std::size_t output_size() const;
  std::span<const double> row(int x) const { return rows_[static_cast<std::size_t>(x)]; }

  // Joint (input, outputs...) from an input pmf.
  JointPmf joint(const Pmf& input) const;

  // Extends a joint pmf by feeding its axis named like this channel's input
  // through the channel: result axes = base axes followed by output axes.
  JointPmf extend(const JointPmf& base) const;

 private:
  Alphabet input_;
  std::vector<Alphabet> outputs_;
  std::vector<std::vector<double>> rows_;
};

// Symmetric 2x2 covariance, bits^2 per letter.
struct CovMatrix2 {
  double v11 = 0.0;
  double v12 = 0.0;
  double v22 = 0.0;

  double min_eigenvalue() const;
  bool is_psd(double tol = 1e-10) const { return min_eigenvalue() >= -tol; }
};

}  // namespace randbin
