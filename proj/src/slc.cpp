#include "randbin/slc.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "randbin/errors.hpp"
#include "randbin/kernels.hpp"

namespace randbin {

namespace {

struct Layout {
  int num_parts = 0;
  std::size_t part_cells = 1;
  std::size_t side_cells = 1;

  Layout(const JointPmf& joint, const BinningSpec& spec) {
    spec.validate();
    num_parts = spec.num_parts();
    if (joint.rank() < num_parts)
      throw std::invalid_argument("slc: joint has fewer axes than binning parts");
    for (int v = 0; v < num_parts; ++v) {
      if (joint.axis(v).size != spec.parts[static_cast<std::size_t>(v)].alphabet.size)
        throw std::invalid_argument("slc: joint axis does not match binning part");
      part_cells *= static_cast<std::size_t>(joint.axis(v).size);
    }
    for (int i = num_parts; i < joint.rank(); ++i)
      side_cells *= static_cast<std::size_t>(joint.axis(i).size);
  }
};

// With parts leading, a joint flat index is part_flat * side_cells + side_flat.
inline double cell(const JointPmf& joint, const Layout& l, std::size_t part_flat,
                   std::size_t side_flat) {
  return joint[part_flat * l.side_cells + side_flat];
}

void part_unflatten(const BinningSpec& spec, std::size_t part_flat, std::span<int> syms) {
  for (int v = spec.num_parts() - 1; v >= 0; --v) {
    const std::size_t size = static_cast<std::size_t>(spec.parts[static_cast<std::size_t>(v)].alphabet.size);
    syms[static_cast<std::size_t>(v)] = static_cast<int>(part_flat % size);
    part_flat /= size;
  }
}

std::size_t side_flatten(const JointPmf& joint, int num_parts, std::span<const int> side_point) {
  std::size_t f = 0;
  for (int i = num_parts; i < joint.rank(); ++i)
    f = f * static_cast<std::size_t>(joint.axis(i).size) +
        static_cast<std::size_t>(side_point[static_cast<std::size_t>(i - num_parts)]);
  return f;
}

}  // namespace

std::optional<std::vector<double>> slc_posterior(const SlcDecoder& dec,
                                                 std::span<const int> side_point,
                                                 std::span<const int> bin_point) {
  const Layout l(*dec.t_joint, *dec.spec);
  const std::size_t side_flat = side_flatten(*dec.t_joint, l.num_parts, side_point);

  std::vector<double> weights(l.part_cells, 0.0);
  std::vector<int> syms(static_cast<std::size_t>(l.num_parts));
  double total = 0.0;
  for (std::size_t pf = 0; pf < l.part_cells; ++pf) {
    part_unflatten(*dec.spec, pf, syms);
    bool in_bin = true;
    for (int v = 0; v < l.num_parts; ++v)
      if (dec.assignment->maps[static_cast<std::size_t>(v)]
                              [static_cast<std::size_t>(syms[static_cast<std::size_t>(v)])] !=
          bin_point[static_cast<std::size_t>(v)]) {
        in_bin = false;
        break;
      }
    if (!in_bin) continue;
    const double w = cell(*dec.t_joint, l, pf, side_flat);
    weights[pf] = w;
    total += w;
  }
  if (total <= 0.0) return std::nullopt;
  for (double& w : weights) w /= total;
  return weights;
}

std::optional<std::vector<int>> slc_decode(const SlcDecoder& dec, std::span<const int> side_point,
                                           std::span<const int> bin_point, Rng& rng,
                                           bool deterministic) {
  const auto posterior = slc_posterior(dec, side_point, bin_point);
  if (!posterior) return std::nullopt;
  std::size_t pick = 0;
  if (deterministic) {
    pick = static_cast<std::size_t>(
        std::max_element(posterior->begin(), posterior->end()) - posterior->begin());
  } else {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < posterior->size(); ++i) {
      if ((*posterior)[i] == 0.0) continue;
      pick = i;  // last positive cell absorbs rounding slack
      acc += (*posterior)[i];
      if (u < acc) break;
    }
  }
  std::vector<int> syms(static_cast<std::size_t>(dec.spec->num_parts()));
  part_unflatten(*dec.spec, pick, syms);
  return syms;
}

double correct_decode_lower_bound(const JointPmf& p_joint, const JointPmf& t_joint,
                                  const BinningSpec& spec) {
  if (!p_joint.same_axes(t_joint))
    throw std::invalid_argument("correct_decode_lower_bound: p and t axes differ");
  const Layout l(p_joint, spec);
  if (l.num_parts > 16) throw GuardError("correct_decode_lower_bound: too many parts");

  // Marginals of t onto (S^c, side) for every nonempty S.
  const unsigned masks = 1u << l.num_parts;
  std::vector<JointPmf> comp_marginals;
  std::vector<double> inv_m_s;
  comp_marginals.reserve(masks - 1);
  for (unsigned mask = 1; mask < masks; ++mask) {
    std::vector<int> axes;
    double log2_m = 0.0;
    for (int v = 0; v < l.num_parts; ++v) {
      if (mask & (1u << v))
        log2_m += spec.log2_bins(v);
      else
        axes.push_back(v);
    }
    for (int i = l.num_parts; i < p_joint.rank(); ++i) axes.push_back(i);
    comp_marginals.push_back(t_joint.marginal(axes));
    inv_m_s.push_back(std::exp2(-log2_m));
  }

  std::vector<int> point(static_cast<std::size_t>(p_joint.rank()));
  std::vector<int> sub(static_cast<std::size_t>(p_joint.rank()));
  double total = 0.0;
  for (std::size_t flat = 0; flat < p_joint.size(); ++flat) {
    const double p = p_joint[flat];
    if (p == 0.0) continue;
    const double t = t_joint[flat];
    if (t == 0.0) continue;  // infinite metric surprise: zero contribution
    p_joint.unflatten(flat, point);
    double denom = 1.0;
    for (unsigned mask = 1; mask < masks; ++mask) {
      const JointPmf& m = comp_marginals[mask - 1];
      sub.resize(static_cast<std::size_t>(m.rank()));
      int j = 0;
      for (int v = 0; v < l.num_parts; ++v)
        if (!(mask & (1u << v))) sub[static_cast<std::size_t>(j++)] = point[static_cast<std::size_t>(v)];
      for (int i = l.num_parts; i < p_joint.rank(); ++i)
        sub[static_cast<std::size_t>(j++)] = point[static_cast<std::size_t>(i)];
      const double t_comp = m.prob(std::span<const int>(sub).first(static_cast<std::size_t>(j)));
      // 2^{h_t(x_S | x_{S^c}, z)} = t(x_{S^c}, z) / t(x, z)
      denom += inv_m_s[mask - 1] * t_comp / t;
    }
    total += p / denom;
  }
  return total;
}

DecodeGoodSet::DecodeGoodSet(const DecodeBoundParams& params)
    : t_joint_(params.t_joint), gamma_(params.gamma_bits) {
  if (!t_joint_ || !params.spec) throw std::invalid_argument("DecodeGoodSet: null params");
  if (!(gamma_ > 0.0)) throw std::invalid_argument("DecodeGoodSet: gamma must be positive");
  const Layout l(*t_joint_, *params.spec);
  num_parts_ = l.num_parts;
  if (num_parts_ > 16) throw GuardError("DecodeGoodSet: too many parts");
  for (int v = 0; v < num_parts_; ++v) log2_bins_.push_back(params.spec->log2_bins(v));
  for (int i = num_parts_; i < t_joint_->rank(); ++i) side_axes_.push_back(i);
  side_marginal_ = t_joint_->marginal(side_axes_);

  const unsigned masks = 1u << num_parts_;
  for (unsigned mask = 1; mask < masks; ++mask) {
    std::vector<int> axes;
    for (int v = 0; v < num_parts_; ++v)
      if (mask & (1u << v)) axes.push_back(v);
    axes.insert(axes.end(), side_axes_.begin(), side_axes_.end());
    subset_marginals_.push_back(t_joint_->marginal(axes));
    subset_point_axes_.push_back(std::move(axes));
  }
}

bool DecodeGoodSet::contains(std::span<const int> point) const {
  std::vector<int> zpoint(side_axes_.size());
  for (std::size_t i = 0; i < side_axes_.size(); ++i)
    zpoint[i] = point[static_cast<std::size_t>(side_axes_[i])];
  const double tz = side_axes_.empty() ? 1.0 : side_marginal_->prob(zpoint);
  if (tz == 0.0) return false;
  const double log2_tz = std::log2(tz);

  std::vector<int> sub;
  for (std::size_t m = 0; m < subset_marginals_.size(); ++m) {
    const auto& axes = subset_point_axes_[m];
    sub.resize(axes.size());
    double log2_m_s = 0.0;
    for (std::size_t j = 0; j < axes.size(); ++j) {
      sub[j] = point[static_cast<std::size_t>(axes[j])];
      if (axes[j] < num_parts_) log2_m_s += log2_bins_[static_cast<std::size_t>(axes[j])];
    }
    const double t_sub = subset_marginals_[m].prob(sub);
    if (t_sub == 0.0) return false;  // h_t infinite
    const double h_t = log2_tz - std::log2(t_sub);
    if (!(log2_m_s - h_t > gamma_)) return false;
  }
  return true;
}

double DecodeGoodSet::complement_mass(const JointPmf& p_joint) const {
  if (!p_joint.same_axes(*t_joint_))
    throw std::invalid_argument("DecodeGoodSet: p and t axes differ");
  double mass = 0.0;
  std::vector<int> point(static_cast<std::size_t>(p_joint.rank()));
  for (std::size_t flat = 0; flat < p_joint.size(); ++flat) {
    const double p = p_joint[flat];
    if (p == 0.0) continue;
    p_joint.unflatten(flat, point);
    if (!contains(point)) mass += p;
  }
  return mass;
}

double decode_error_bound(const JointPmf& p_joint, const DecodeBoundParams& params) {
  const DecodeGoodSet good(params);
  const double v = static_cast<double>(params.spec->num_parts());
  return good.complement_mass(p_joint) +
         (std::exp2(v) - 1.0) * std::exp2(-params.gamma_bits);
}

double exact_expected_correct(const JointPmf& p_joint, const JointPmf& t_joint,
                              const BinningSpec& spec) {
  if (!p_joint.same_axes(t_joint))
    throw std::invalid_argument("exact_expected_correct: p and t axes differ");
  const Layout l(p_joint, spec);
  AssignmentEnumerator en(spec);

  const std::size_t bin_cells = spec.bin_cells();
  std::vector<std::size_t> part_bin(l.part_cells);
  std::vector<double> denom(bin_cells * l.side_cells);
  std::vector<int> syms(static_cast<std::size_t>(l.num_parts));

  double total = 0.0;
  std::size_t n = 0;
  do {
    const auto& a = en.current();
    for (std::size_t pf = 0; pf < l.part_cells; ++pf) {
      part_unflatten(spec, pf, syms);
      part_bin[pf] = a.bin_flat(spec, syms);
    }
    std::fill(denom.begin(), denom.end(), 0.0);
    for (std::size_t pf = 0; pf < l.part_cells; ++pf)
      for (std::size_t sf = 0; sf < l.side_cells; ++sf)
        denom[part_bin[pf] * l.side_cells + sf] += cell(t_joint, l, pf, sf);
    double correct = 0.0;
    for (std::size_t pf = 0; pf < l.part_cells; ++pf)
      for (std::size_t sf = 0; sf < l.side_cells; ++sf) {
        const double p = cell(p_joint, l, pf, sf);
        const double t = cell(t_joint, l, pf, sf);
        if (p == 0.0 || t == 0.0) continue;
        correct += p * t / denom[part_bin[pf] * l.side_cells + sf];
      }
    total += correct;
    ++n;
  } while (en.next());
  return total / static_cast<double>(n);
}

McEstimate mc_error_prob(const JointPmf& p_joint, const JointPmf& t_joint,
                         const BinningSpec& spec, std::int64_t trials, Rng& rng, int workers) {
  if (trials < 2) throw std::invalid_argument("mc_error_prob: trials must be >= 2");
  if (!p_joint.same_axes(t_joint))
    throw std::invalid_argument("mc_error_prob: p and t axes differ");
  const Layout l(p_joint, spec);

  // Source cumulative for inverse sampling.
  std::vector<double> cdf(p_joint.probs().begin(), p_joint.probs().end());
  for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] += cdf[i - 1];

  constexpr std::int64_t kBlock = 1024;
  const std::int64_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> block_seed(static_cast<std::size_t>(blocks));
  for (auto& s : block_seed) s = rng.next_u64();

  auto run_block = [&](std::int64_t b) -> std::int64_t {
    Rng local(block_seed[static_cast<std::size_t>(b)]);
    const std::int64_t lo = b * kBlock;
    const std::int64_t hi = std::min(trials, lo + kBlock);
    std::vector<int> syms(static_cast<std::size_t>(l.num_parts));
    std::vector<int> bins(static_cast<std::size_t>(l.num_parts));
    std::vector<int> side(static_cast<std::size_t>(p_joint.rank() - l.num_parts));
    std::vector<int> point(static_cast<std::size_t>(p_joint.rank()));
    std::int64_t errors = 0;
    for (std::int64_t t = lo; t < hi; ++t) {
      const BinningAssignment a = sample_binning(spec, local);
      const double u = local.uniform01();
      const std::size_t flat = static_cast<std::size_t>(
          std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      p_joint.unflatten(std::min(flat, cdf.size() - 1), point);
      for (int v = 0; v < l.num_parts; ++v) syms[static_cast<std::size_t>(v)] = point[static_cast<std::size_t>(v)];
      for (std::size_t i = 0; i < side.size(); ++i)
        side[i] = point[static_cast<std::size_t>(l.num_parts) + i];
      for (int v = 0; v < l.num_parts; ++v)
        bins[static_cast<std::size_t>(v)] =
            a.maps[static_cast<std::size_t>(v)][static_cast<std::size_t>(syms[static_cast<std::size_t>(v)])];
      SlcDecoder dec{&t_joint, &spec, &a};
      const auto decoded = slc_decode(dec, side, bins, local);
      if (!decoded || !std::equal(decoded->begin(), decoded->end(), syms.begin())) ++errors;
    }
    return errors;
  };

  std::int64_t errors = 0;
  if (workers <= 1) {
    for (std::int64_t b = 0; b < blocks; ++b) errors += run_block(b);
  } else {
    std::vector<std::future<std::int64_t>> futs;
    futs.reserve(static_cast<std::size_t>(blocks));
    for (std::int64_t b = 0; b < blocks; ++b)
      futs.push_back(std::async(std::launch::async, run_block, b));
    for (auto& f : futs) errors += f.get();
  }

  McEstimate out;
  out.trials = trials;
  out.estimate = static_cast<double>(errors) / static_cast<double>(trials);
  constexpr double z99 = 2.5758293035489004;
  out.half_width =
      z99 * std::sqrt(std::max(0.0, out.estimate * (1.0 - out.estimate)) /
                      static_cast<double>(trials));
  return out;
}

double two_user_error_bound(const JointPmf& p_u1u2y1y2, const JointPmf& t1_u1y1,
                            const JointPmf& t2_u2y2, double log2_f1, double log2_f2,
                            double gamma_bits, PairBoundConstant c) {
  if (p_u1u2y1y2.rank() != 4)
    throw std::invalid_argument("two_user_error_bound: expected rank-4 joint (U1,U2,Y1,Y2)");
  if (t1_u1y1.rank() != 2 || t2_u2y2.rank() != 2)
    throw std::invalid_argument("two_user_error_bound: per-user metrics must be rank 2");
  if (!(gamma_bits > 0.0))
    throw std::invalid_argument("two_user_error_bound: gamma must be positive");

  const JointPmf ty1 = t1_u1y1.marginal(std::vector<int>{1});
  const JointPmf ty2 = t2_u2y2.marginal(std::vector<int>{1});

  auto margin_ok = [&](const JointPmf& t, const JointPmf& ty, int u, int y, double log2_f) {
    const double tyv = ty[static_cast<std::size_t>(y)];
    if (tyv == 0.0) return false;
    const double tuy = t[static_cast<std::size_t>(u * ty.size() + y)];
    if (tuy == 0.0) return false;
    const double h = std::log2(tyv) - std::log2(tuy);
    return log2_f - h > gamma_bits;
  };

  std::vector<int> point(4);
  double outside = 0.0;
  for (std::size_t flat = 0; flat < p_u1u2y1y2.size(); ++flat) {
    const double p = p_u1u2y1y2[flat];
    if (p == 0.0) continue;
    p_u1u2y1y2.unflatten(flat, point);
    if (!margin_ok(t1_u1y1, ty1, point[0], point[2], log2_f1) ||
        !margin_ok(t2_u2y2, ty2, point[1], point[3], log2_f2))
      outside += p;
  }
  const double constant = c == PairBoundConstant::four ? 4.0 : 3.0;
  return outside + constant * std::exp2(-gamma_bits);
}

}  // namespace randbin
