#include "randbin/binning.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "randbin/errors.hpp"
#include "randbin/kernels.hpp"

namespace randbin {

double BinningSpec::log2_bins(int part) const {
  return std::log2(static_cast<double>(parts[static_cast<std::size_t>(part)].num_bins));
}

double BinningSpec::log2_total_bins() const {
  double s = 0.0;
  for (int v = 0; v < num_parts(); ++v) s += log2_bins(v);
  return s;
}

std::size_t BinningSpec::bin_cells() const {
  std::size_t cells = 1;
  for (const auto& p : parts) cells *= static_cast<std::size_t>(p.num_bins);
  return cells;
}

double BinningSpec::log2_assignment_count() const {
  double s = 0.0;
  for (const auto& p : parts)
    s += static_cast<double>(p.alphabet.size) * std::log2(static_cast<double>(p.num_bins));
  return s;
}

void BinningSpec::validate() const {
  if (parts.empty()) throw std::invalid_argument("BinningSpec: needs at least one part");
  for (const auto& p : parts) {
    if (p.alphabet.size < 1) throw std::invalid_argument("BinningSpec: empty alphabet");
    if (p.num_bins < 1) throw std::invalid_argument("BinningSpec: bins must be >= 1");
  }
}

std::size_t BinningAssignment::bin_flat(const BinningSpec& spec,
                                        std::span<const int> symbols) const {
  std::size_t flat = 0;
  for (std::size_t v = 0; v < maps.size(); ++v)
    flat = flat * static_cast<std::size_t>(spec.parts[v].num_bins) +
           static_cast<std::size_t>(maps[v][static_cast<std::size_t>(symbols[v])]);
  return flat;
}

BinningAssignment sample_binning(const BinningSpec& spec, Rng& rng) {
  spec.validate();
  BinningAssignment a;
  a.maps.resize(spec.parts.size());
  for (std::size_t v = 0; v < spec.parts.size(); ++v) {
    a.maps[v].resize(static_cast<std::size_t>(spec.parts[v].alphabet.size));
    for (auto& bin : a.maps[v])
      bin = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.parts[v].num_bins)));
  }
  return a;
}

AssignmentEnumerator::AssignmentEnumerator(const BinningSpec& spec, std::size_t guard_cells)
    : spec_(&spec) {
  spec.validate();
  const double log2_count = spec.log2_assignment_count();
  if (log2_count > std::log2(static_cast<double>(guard_cells)) + 1e-9)
    throw GuardError("AssignmentEnumerator: assignment count exceeds enumeration guard");
  count_ = static_cast<std::size_t>(std::llround(std::exp2(log2_count)));
  reset();
}

void AssignmentEnumerator::reset() {
  current_.maps.clear();
  for (const auto& p : spec_->parts)
    current_.maps.emplace_back(static_cast<std::size_t>(p.alphabet.size), 0);
}

bool AssignmentEnumerator::next() {
  for (std::size_t v = 0; v < current_.maps.size(); ++v)
    for (std::size_t s = 0; s < current_.maps[v].size(); ++s) {
      if (++current_.maps[v][s] < spec_->parts[v].num_bins) return true;
      current_.maps[v][s] = 0;
    }
  return false;  // wrapped around
}

namespace {

struct SourceLayout {
  int num_parts = 0;
  std::vector<int> part_axes;  // 0..V-1 by convention
  std::vector<int> side_axes;  // V..rank-1

  static SourceLayout infer(const JointPmf& source, const BinningSpec& spec) {
    spec.validate();
    if (source.rank() < spec.num_parts())
      throw std::invalid_argument("source joint has fewer axes than binning parts");
    SourceLayout l;
    l.num_parts = spec.num_parts();
    for (int v = 0; v < l.num_parts; ++v) {
      if (source.axis(v).size != spec.parts[static_cast<std::size_t>(v)].alphabet.size)
        throw std::invalid_argument("source axis size does not match binning part");
      l.part_axes.push_back(v);
    }
    for (int i = l.num_parts; i < source.rank(); ++i) l.side_axes.push_back(i);
    return l;
  }
};

}  // namespace

JointPmf induced_bin_pmf(const JointPmf& source, const BinningSpec& spec,
                         const BinningAssignment& assignment) {
  const SourceLayout layout = SourceLayout::infer(source, spec);

  std::vector<Alphabet> axes;
  std::size_t side_cells = 1;
  for (int i : layout.side_axes) {
    axes.push_back(source.axis(i));
    side_cells *= static_cast<std::size_t>(source.axis(i).size);
  }
  for (const auto& p : spec.parts)
    axes.push_back({p.alphabet.name + "_bin", p.num_bins});

  const std::size_t bin_cells = spec.bin_cells();
  std::vector<double> table(side_cells * bin_cells, 0.0);

  std::vector<int> point(static_cast<std::size_t>(source.rank()));
  for (std::size_t flat = 0; flat < source.size(); ++flat) {
    const double p = source[flat];
    if (p == 0.0) continue;
    source.unflatten(flat, point);
    std::size_t side_flat = 0;
    for (int i : layout.side_axes)
      side_flat = side_flat * static_cast<std::size_t>(source.axis(i).size) +
                  static_cast<std::size_t>(point[static_cast<std::size_t>(i)]);
    const std::size_t b = assignment.bin_flat(spec, std::span<const int>(point).first(
                                                        static_cast<std::size_t>(layout.num_parts)));
    table[side_flat * bin_cells + b] += p;
  }
  return JointPmf(std::move(axes), std::move(table));
}

TvGoodSet::TvGoodSet(const TvBoundParams& params)
    : source_(params.source), t_z_(params.t_z), gamma_(params.gamma_bits) {
  if (!source_ || !params.spec || !t_z_) throw std::invalid_argument("TvGoodSet: null params");
  if (!(gamma_ > 0.0)) throw std::invalid_argument("TvGoodSet: gamma must be positive");
  const SourceLayout layout = SourceLayout::infer(*source_, *params.spec);
  num_parts_ = layout.num_parts;
  side_axes_ = layout.side_axes;
  if (num_parts_ > 16) throw GuardError("TvGoodSet: too many parts for subset enumeration");
  if (t_z_->rank() != static_cast<int>(side_axes_.size()))
    throw std::invalid_argument("TvGoodSet: t_z rank does not match side axes");
  for (std::size_t i = 0; i < side_axes_.size(); ++i)
    if (t_z_->axis(static_cast<int>(i)).size != source_->axis(side_axes_[i]).size)
      throw std::invalid_argument("TvGoodSet: t_z axis size mismatch");

  for (int v = 0; v < num_parts_; ++v)
    log2_bins_.push_back(params.spec->log2_bins(v));

  const unsigned masks = 1u << num_parts_;
  for (unsigned mask = 1; mask < masks; ++mask) {
    std::vector<int> axes;
    for (int v = 0; v < num_parts_; ++v)
      if (mask & (1u << v)) axes.push_back(v);
    axes.insert(axes.end(), side_axes_.begin(), side_axes_.end());
    subset_marginals_.push_back(source_->marginal(axes));
    subset_point_axes_.push_back(std::move(axes));
  }
}

bool TvGoodSet::contains(std::span<const int> point) const {
  if (source_->prob(point) == 0.0) return false;

  double h_t = 0.0;
  if (!side_axes_.empty()) {
    std::vector<int> zpoint(side_axes_.size());
    for (std::size_t i = 0; i < side_axes_.size(); ++i)
      zpoint[i] = point[static_cast<std::size_t>(side_axes_[i])];
    const double tz = t_z_->prob(zpoint);
    if (tz == 0.0) return false;  // h_t infinite, no margin possible
    h_t = -std::log2(tz);
  }

  std::vector<int> sub;
  for (std::size_t m = 0; m < subset_marginals_.size(); ++m) {
    const auto& axes = subset_point_axes_[m];
    sub.resize(axes.size());
    double log2_m_s = 0.0;
    for (std::size_t j = 0; j < axes.size(); ++j) {
      sub[j] = point[static_cast<std::size_t>(axes[j])];
      if (axes[j] < num_parts_) log2_m_s += log2_bins_[static_cast<std::size_t>(axes[j])];
    }
    const double p = subset_marginals_[m].prob(sub);
    const double h_p = -std::log2(p);  // p > 0 since the full point has mass
    if (!(h_p - h_t - log2_m_s > gamma_)) return false;
  }
  return true;
}

double TvGoodSet::complement_mass() const {
  double mass = 0.0;
  std::vector<int> point(static_cast<std::size_t>(source_->rank()));
  for (std::size_t flat = 0; flat < source_->size(); ++flat) {
    const double p = (*source_)[flat];
    if (p == 0.0) continue;
    source_->unflatten(flat, point);
    if (!contains(point)) mass += p;
  }
  return mass;
}

double expected_tv_bound(const TvBoundParams& params, TvBoundVariant variant) {
  if (!params.source || params.source->size() > 1000000)
    throw GuardError("expected_tv_bound: product alphabet exceeds 1e6 cells");
  const TvGoodSet good(params);
  const double v = static_cast<double>(params.spec->num_parts());
  const double additive = variant == TvBoundVariant::tight
                              ? std::exp2((v - params.gamma_bits) / 2.0 - 1.0)
                              : std::exp2((v - 1.0 - params.gamma_bits) / 2.0);
  return good.complement_mass() + additive;
}

namespace {

// Flattened view of the source used by the enumeration loops.
struct SourceCells {
  std::vector<double> prob;
  std::vector<std::size_t> side_flat;
  std::vector<std::vector<int>> part_sym;  // per part, per cell
  std::size_t side_cells = 1;

  SourceCells(const JointPmf& source, const BinningSpec& spec) {
    const SourceLayout layout = SourceLayout::infer(source, spec);
    part_sym.resize(static_cast<std::size_t>(layout.num_parts));
    for (int i : layout.side_axes) side_cells *= static_cast<std::size_t>(source.axis(i).size);
    std::vector<int> point(static_cast<std::size_t>(source.rank()));
    for (std::size_t flat = 0; flat < source.size(); ++flat) {
      source.unflatten(flat, point);
      prob.push_back(source[flat]);
      std::size_t sf = 0;
      for (int i : layout.side_axes)
        sf = sf * static_cast<std::size_t>(source.axis(i).size) +
             static_cast<std::size_t>(point[static_cast<std::size_t>(i)]);
      side_flat.push_back(sf);
      for (int v = 0; v < layout.num_parts; ++v)
        part_sym[static_cast<std::size_t>(v)].push_back(point[static_cast<std::size_t>(v)]);
    }
  }
};

std::vector<double> reference_table(const JointPmf& source, const BinningSpec& spec,
                                    const SourceCells& cells) {
  const std::size_t bin_cells = spec.bin_cells();
  std::vector<double> pz(cells.side_cells, 0.0);
  for (std::size_t i = 0; i < cells.prob.size(); ++i) pz[cells.side_flat[i]] += cells.prob[i];
  std::vector<double> ref(cells.side_cells * bin_cells);
  const double ub = 1.0 / static_cast<double>(bin_cells);
  for (std::size_t z = 0; z < cells.side_cells; ++z)
    for (std::size_t b = 0; b < bin_cells; ++b) ref[z * bin_cells + b] = pz[z] * ub;
  (void)source;
  return ref;
}

double tv_for_assignment(const BinningSpec& spec, const SourceCells& cells,
                         const BinningAssignment& a, std::span<const double> ref,
                         std::vector<double>& scratch) {
  const std::size_t bin_cells = spec.bin_cells();
  std::fill(scratch.begin(), scratch.end(), 0.0);
  const int num_parts = spec.num_parts();
  for (std::size_t i = 0; i < cells.prob.size(); ++i) {
    if (cells.prob[i] == 0.0) continue;
    std::size_t b = 0;
    for (int v = 0; v < num_parts; ++v)
      b = b * static_cast<std::size_t>(spec.parts[static_cast<std::size_t>(v)].num_bins) +
          static_cast<std::size_t>(
              a.maps[static_cast<std::size_t>(v)][static_cast<std::size_t>(
                  cells.part_sym[static_cast<std::size_t>(v)][i])]);
    scratch[cells.side_flat[i] * bin_cells + b] += cells.prob[i];
  }
  return kernels::half_l1_distance(scratch, ref);
}

}  // namespace

double exact_expected_tv(const JointPmf& source, const BinningSpec& spec) {
  AssignmentEnumerator en(spec);
  const SourceCells cells(source, spec);
  const std::vector<double> ref = reference_table(source, spec, cells);
  std::vector<double> scratch(ref.size());

  double total = 0.0;
  std::size_t n = 0;
  do {
    total += tv_for_assignment(spec, cells, en.current(), ref, scratch);
    ++n;
  } while (en.next());
  if (n != en.count()) throw std::logic_error("exact_expected_tv: enumeration miscount");
  return total / static_cast<double>(n);
}

McEstimate mc_expected_tv(const JointPmf& source, const BinningSpec& spec, std::int64_t trials,
                          Rng& rng, int workers) {
  if (trials < 2) throw std::invalid_argument("mc_expected_tv: trials must be >= 2");
  const SourceCells cells(source, spec);
  const std::vector<double> ref = reference_table(source, spec, cells);

  constexpr std::int64_t kBlock = 1024;
  const std::int64_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> block_seed(static_cast<std::size_t>(blocks));
  for (auto& s : block_seed) s = rng.next_u64();

  auto run_block = [&](std::int64_t b) {
    Rng local(block_seed[static_cast<std::size_t>(b)]);
    const std::int64_t lo = b * kBlock;
    const std::int64_t hi = std::min(trials, lo + kBlock);
    std::vector<double> scratch(ref.size());
    double s1 = 0.0, s2 = 0.0;
    for (std::int64_t t = lo; t < hi; ++t) {
      const BinningAssignment a = sample_binning(spec, local);
      const double tv = tv_for_assignment(spec, cells, a, ref, scratch);
      s1 += tv;
      s2 += tv * tv;
    }
    return std::pair<double, double>(s1, s2);
  };

  double s1 = 0.0, s2 = 0.0;
  if (workers <= 1) {
    for (std::int64_t b = 0; b < blocks; ++b) {
      const auto [a1, a2] = run_block(b);
      s1 += a1;
      s2 += a2;
    }
  } else {
    std::vector<std::future<std::pair<double, double>>> futs;
    futs.reserve(static_cast<std::size_t>(blocks));
    for (std::int64_t b = 0; b < blocks; ++b)
      futs.push_back(std::async(std::launch::async, run_block, b));
    for (auto& f : futs) {  // merged in block order regardless of completion order
      const auto [a1, a2] = f.get();
      s1 += a1;
      s2 += a2;
    }
  }

  McEstimate out;
  out.trials = trials;
  out.estimate = s1 / static_cast<double>(trials);
  const double var =
      std::max(0.0, s2 / static_cast<double>(trials) - out.estimate * out.estimate);
  constexpr double z99 = 2.5758293035489004;
  out.half_width = z99 * std::sqrt(var / static_cast<double>(trials));
  return out;
}

VarianceDiagnostic variance_diagnostic(const TvBoundParams& params,
                                       std::span<const int> side_point,
                                       std::span<const int> bin_point) {
  const JointPmf& source = *params.source;
  const BinningSpec& spec = *params.spec;
  const TvGoodSet good(params);
  const SourceLayout layout = SourceLayout::infer(source, spec);
  if (side_point.size() != layout.side_axes.size())
    throw std::invalid_argument("variance_diagnostic: side point rank mismatch");
  if (bin_point.size() != static_cast<std::size_t>(spec.num_parts()))
    throw std::invalid_argument("variance_diagnostic: bin point rank mismatch");

  // Cells of the source matching the fixed side point and lying in the good set.
  std::vector<std::vector<int>> member_syms;
  std::vector<double> member_prob;
  std::vector<int> point(static_cast<std::size_t>(source.rank()));
  double pz = 0.0;
  for (std::size_t flat = 0; flat < source.size(); ++flat) {
    source.unflatten(flat, point);
    bool match = true;
    for (std::size_t i = 0; i < layout.side_axes.size(); ++i)
      if (point[static_cast<std::size_t>(layout.side_axes[i])] != side_point[i]) {
        match = false;
        break;
      }
    if (!match) continue;
    pz += source[flat];
    if (source[flat] == 0.0 || !good.contains(point)) continue;
    member_syms.emplace_back(point.begin(), point.begin() + layout.num_parts);
    member_prob.push_back(source[flat]);
  }

  AssignmentEnumerator en(spec);
  std::vector<double> values;
  values.reserve(en.count());
  do {
    const auto& a = en.current();
    double v = 0.0;
    for (std::size_t i = 0; i < member_syms.size(); ++i) {
      bool in_bin = true;
      for (int part = 0; part < spec.num_parts(); ++part)
        if (a.maps[static_cast<std::size_t>(part)][static_cast<std::size_t>(
                member_syms[i][static_cast<std::size_t>(part)])] !=
            bin_point[static_cast<std::size_t>(part)]) {
          in_bin = false;
          break;
        }
      if (in_bin) v += member_prob[i];
    }
    values.push_back(v);
  } while (en.next());

  double mean = kernels::sum(values) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());

  double tz = 1.0;
  if (!layout.side_axes.empty()) {
    std::vector<int> zp(side_point.begin(), side_point.end());
    tz = params.t_z->prob(zp);
  }
  const double m_total = std::exp2(spec.log2_total_bins());
  const double v_count = static_cast<double>(spec.num_parts());
  VarianceDiagnostic out;
  out.exact_var = var;
  out.bound = std::exp2(v_count - params.gamma_bits) * pz * tz / (m_total * m_total);
  return out;
}

}  // namespace randbin
