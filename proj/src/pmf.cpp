#include "randbin/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "randbin/kernels.hpp"

namespace randbin {

namespace {

void check_mass(std::span<const double> probs, const char* what) {
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument(std::string(what) + ": negative or non-finite probability");
  }
  const double mass = kernels::sum(probs);
  if (std::fabs(mass - 1.0) > kPmfMassTolerance)
    throw std::invalid_argument(std::string(what) + ": mass " + std::to_string(mass) +
                                " deviates from 1 beyond tolerance");
}

}  // namespace

Pmf::Pmf(Alphabet alphabet, std::vector<double> probs)
    : alphabet_(std::move(alphabet)), probs_(std::move(probs)) {
  if (alphabet_.size < 1) throw std::invalid_argument("Pmf: alphabet size must be >= 1");
  if (probs_.size() != static_cast<std::size_t>(alphabet_.size))
    throw std::invalid_argument("Pmf: probability vector length mismatch");
  check_mass(probs_, "Pmf");
}

Pmf Pmf::uniform(Alphabet alphabet) {
  std::vector<double> p(static_cast<std::size_t>(alphabet.size),
                        1.0 / static_cast<double>(alphabet.size));
  return Pmf(std::move(alphabet), std::move(p));
}

Pmf Pmf::point_mass(Alphabet alphabet, int symbol) {
  std::vector<double> p(static_cast<std::size_t>(alphabet.size), 0.0);
  p.at(static_cast<std::size_t>(symbol)) = 1.0;
  return Pmf(std::move(alphabet), std::move(p));
}

JointPmf::JointPmf(std::vector<Alphabet> axes, std::vector<double> probs)
    : axes_(std::move(axes)), probs_(std::move(probs)) {
  std::unordered_set<std::string> names;
  std::size_t cells = 1;
  for (const auto& a : axes_) {
    if (a.size < 1) throw std::invalid_argument("JointPmf: axis size must be >= 1");
    if (!names.insert(a.name).second)
      throw std::invalid_argument("JointPmf: duplicate axis label '" + a.name + "'");
    cells *= static_cast<std::size_t>(a.size);
  }
  if (probs_.size() != cells)
    throw std::invalid_argument("JointPmf: table size mismatch");
  check_mass(probs_, "JointPmf");
  strides_.assign(axes_.size(), 1);
  for (int i = static_cast<int>(axes_.size()) - 2; i >= 0; --i)
    strides_[static_cast<std::size_t>(i)] =
        strides_[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(axes_[static_cast<std::size_t>(i) + 1].size);
}

JointPmf JointPmf::from_pmf(const Pmf& pmf) {
  return JointPmf({pmf.alphabet()}, std::vector<double>(pmf.probs().begin(), pmf.probs().end()));
}

JointPmf JointPmf::uniform(std::vector<Alphabet> axes) {
  std::size_t cells = 1;
  for (const auto& a : axes) cells *= static_cast<std::size_t>(a.size);
  std::vector<double> p(cells, 1.0 / static_cast<double>(cells));
  return JointPmf(std::move(axes), std::move(p));
}

int JointPmf::axis_index(std::string_view name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("JointPmf: unknown axis '" + std::string(name) + "'");
}

bool JointPmf::has_axis(std::string_view name) const {
  for (const auto& a : axes_)
    if (a.name == name) return true;
  return false;
}

std::size_t JointPmf::flat_index(std::span<const int> point) const {
  if (point.size() != axes_.size())
    throw std::invalid_argument("JointPmf: point rank mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (point[i] < 0 || point[i] >= axes_[i].size)
      throw std::out_of_range("JointPmf: symbol out of range");
    flat += static_cast<std::size_t>(point[i]) * strides_[i];
  }
  return flat;
}

void JointPmf::unflatten(std::size_t flat, std::span<int> point) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    point[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
}

JointPmf JointPmf::marginal(std::span<const int> keep_axes) const {
  std::vector<int> keep(keep_axes.begin(), keep_axes.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (int k : keep)
    if (k < 0 || k >= rank()) throw std::invalid_argument("JointPmf: bad axis index in marginal");

  JointPmf out;
  out.axes_.reserve(keep.size());
  std::size_t out_cells = 1;
  for (int k : keep) {
    out.axes_.push_back(axes_[static_cast<std::size_t>(k)]);
    out_cells *= static_cast<std::size_t>(axes_[static_cast<std::size_t>(k)].size);
  }
  out.strides_.assign(out.axes_.size(), 1);
  for (int i = static_cast<int>(out.axes_.size()) - 2; i >= 0; --i)
    out.strides_[static_cast<std::size_t>(i)] =
        out.strides_[static_cast<std::size_t>(i) + 1] *
        static_cast<std::size_t>(out.axes_[static_cast<std::size_t>(i) + 1].size);
  out.probs_.assign(out_cells, 0.0);

  std::vector<int> point(axes_.size());
  for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
    unflatten(flat, point);
    std::size_t oflat = 0;
    for (std::size_t j = 0; j < keep.size(); ++j)
      oflat += static_cast<std::size_t>(point[static_cast<std::size_t>(keep[j])]) * out.strides_[j];
    out.probs_[oflat] += probs_[flat];
  }
  return out;
}

Pmf JointPmf::to_pmf() const {
  if (rank() != 1) throw std::invalid_argument("JointPmf::to_pmf: rank must be 1");
  return Pmf(axes_[0], probs_);
}

bool JointPmf::same_axes(const JointPmf& other) const { return axes_ == other.axes_; }

Channel::Channel(Alphabet input, std::vector<Alphabet> outputs, std::vector<std::vector<double>> rows)
    : input_(std::move(input)), outputs_(std::move(outputs)), rows_(std::move(rows)) {
  if (input_.size < 1) throw std::invalid_argument("Channel: input size must be >= 1");
  if (outputs_.empty()) throw std::invalid_argument("Channel: needs at least one output axis");
  if (rows_.size() != static_cast<std::size_t>(input_.size))
    throw std::invalid_argument("Channel: one row per input symbol required");
  const std::size_t cells = output_size();
  for (std::size_t x = 0; x < rows_.size(); ++x) {
    if (rows_[x].size() != cells)
      throw std::invalid_argument("Channel: row " + std::to_string(x) + " length mismatch");
    check_mass(rows_[x], "Channel row");
  }
}

Channel Channel::bsc(double p, std::string input_name, std::string output_name) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bsc: p outside [0,1]");
  return Channel({std::move(input_name), 2}, {{std::move(output_name), 2}},
                 {{1.0 - p, p}, {p, 1.0 - p}});
}

std::size_t Channel::output_size() const {
  std::size_t cells = 1;
  for (const auto& a : outputs_) cells *= static_cast<std::size_t>(a.size);
  return cells;
}

JointPmf Channel::joint(const Pmf& input) const {
  return extend(JointPmf::from_pmf(Pmf(input_, std::vector<double>(input.probs().begin(),
                                                                   input.probs().end()))));
}

JointPmf Channel::extend(const JointPmf& base) const {
  const int in_axis = base.axis_index(input_.name);
  if (base.axis(in_axis).size != input_.size)
    throw std::invalid_argument("Channel::extend: input axis size mismatch");
  std::vector<Alphabet> axes = base.axes();
  for (const auto& a : outputs_) axes.push_back(a);
  const std::size_t out_cells = output_size();
  std::vector<double> probs(base.size() * out_cells);
  std::vector<int> point(static_cast<std::size_t>(base.rank()));
  for (std::size_t flat = 0; flat < base.size(); ++flat) {
    base.unflatten(flat, point);
    const double p = base[flat];
    const std::span<const double> r = row(point[static_cast<std::size_t>(in_axis)]);
    double* dst = probs.data() + flat * out_cells;
    for (std::size_t y = 0; y < out_cells; ++y) dst[y] = p * r[y];
  }
  return JointPmf(std::move(axes), std::move(probs));
}

double CovMatrix2::min_eigenvalue() const {
  const double tr = v11 + v22;
  const double disc = std::sqrt(std::max(0.0, (v11 - v22) * (v11 - v22) + 4.0 * v12 * v12));
  return 0.5 * (tr - disc);
}

}  // namespace randbin
