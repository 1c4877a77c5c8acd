#include "randbin/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "randbin/errors.hpp"
#include "randbin/kernels.hpp"

namespace randbin {

namespace {

std::vector<int> axis_indices(const JointPmf& joint, std::span<const std::string> names) {
  std::vector<int> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(joint.axis_index(n));
  return idx;
}

std::vector<int> value_axis_indices(const JointPmf& joint, std::span<const AxisValue> vals) {
  std::vector<int> idx;
  idx.reserve(vals.size());
  for (const auto& v : vals) idx.push_back(joint.axis_index(v.axis));
  return idx;
}

// Probability of a partial assignment, summing out all other axes.
double partial_mass(const JointPmf& joint, std::span<const AxisValue> vals) {
  std::vector<int> idx = value_axis_indices(joint, vals);
  std::vector<int> point(static_cast<std::size_t>(joint.rank()));
  double mass = 0.0;
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    joint.unflatten(flat, point);
    bool match = true;
    for (std::size_t j = 0; j < idx.size(); ++j)
      if (point[static_cast<std::size_t>(idx[j])] != vals[j].value) {
        match = false;
        break;
      }
    if (match) mass += joint[flat];
  }
  return mass;
}

}  // namespace

JointPmf marginalize(const JointPmf& joint, std::span<const std::string> keep) {
  return joint.marginal(axis_indices(joint, keep));
}

JointPmf condition(const JointPmf& joint, std::span<const std::string> target,
                   std::span<const AxisValue> given) {
  std::vector<int> t_idx = axis_indices(joint, target);
  std::vector<int> g_idx = value_axis_indices(joint, given);
  std::sort(t_idx.begin(), t_idx.end());
  for (int t : t_idx)
    for (int g : g_idx)
      if (t == g) throw std::invalid_argument("condition: target and given axes overlap");

  std::vector<Alphabet> out_axes;
  std::vector<std::size_t> out_strides(t_idx.size(), 1);
  for (int t : t_idx) out_axes.push_back(joint.axis(t));
  for (int i = static_cast<int>(t_idx.size()) - 2; i >= 0; --i)
    out_strides[static_cast<std::size_t>(i)] =
        out_strides[static_cast<std::size_t>(i) + 1] *
        static_cast<std::size_t>(out_axes[static_cast<std::size_t>(i) + 1].size);
  std::size_t out_cells = 1;
  for (const auto& a : out_axes) out_cells *= static_cast<std::size_t>(a.size);

  std::vector<double> table(out_cells, 0.0);
  std::vector<int> point(static_cast<std::size_t>(joint.rank()));
  double mass = 0.0;
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    joint.unflatten(flat, point);
    bool match = true;
    for (std::size_t j = 0; j < g_idx.size(); ++j)
      if (point[static_cast<std::size_t>(g_idx[j])] != given[j].value) {
        match = false;
        break;
      }
    if (!match) continue;
    std::size_t oflat = 0;
    for (std::size_t j = 0; j < t_idx.size(); ++j)
      oflat += static_cast<std::size_t>(point[static_cast<std::size_t>(t_idx[j])]) * out_strides[j];
    table[oflat] += joint[flat];
    mass += joint[flat];
  }
  if (mass <= 0.0)
    throw std::domain_error("condition: conditioning point has zero probability");
  for (double& v : table) v /= mass;
  return JointPmf(std::move(out_axes), std::move(table));
}

JointPmf iid_extend(const JointPmf& joint, int n) {
  if (n < 1) throw std::invalid_argument("iid_extend: n must be >= 1");
  const double log_cells = static_cast<double>(n) * std::log2(static_cast<double>(joint.size()));
  if (log_cells > 24.0)
    throw GuardError("iid_extend: materialization guard of 2^24 cells exceeded; use IidProductView");
  std::size_t cells = 1;
  for (int i = 0; i < n; ++i) cells *= joint.size();

  std::vector<Alphabet> axes;
  for (int copy = 1; copy <= n; ++copy)
    for (const auto& a : joint.axes())
      axes.push_back({a.name + std::to_string(copy), a.size});

  std::vector<double> table(cells);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    double v = 1.0;
    std::size_t rest = flat;
    for (int copy = n - 1; copy >= 0; --copy) {
      v *= joint[rest % joint.size()];
      rest /= joint.size();
    }
    table[flat] = v;
  }
  return JointPmf(std::move(axes), std::move(table));
}

IidProductView::IidProductView(const JointPmf& base, int n) : base_(&base), n_(n) {
  if (n < 1) throw std::invalid_argument("IidProductView: n must be >= 1");
}

double IidProductView::prob(std::span<const int> points) const {
  const std::size_t r = static_cast<std::size_t>(base_->rank());
  if (points.size() != r * static_cast<std::size_t>(n_))
    throw std::invalid_argument("IidProductView: point length mismatch");
  double v = 1.0;
  for (int i = 0; i < n_; ++i)
    v *= base_->prob(points.subspan(static_cast<std::size_t>(i) * r, r));
  return v;
}

double IidProductView::log2_prob(std::span<const int> points) const {
  const std::size_t r = static_cast<std::size_t>(base_->rank());
  if (points.size() != r * static_cast<std::size_t>(n_))
    throw std::invalid_argument("IidProductView: point length mismatch");
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double p = base_->prob(points.subspan(static_cast<std::size_t>(i) * r, r));
    if (p == 0.0) return -kInfBits;
    s += std::log2(p);
  }
  return s;
}

double conditional_information(const JointPmf& joint, std::span<const AxisValue> target,
                               std::span<const AxisValue> given) {
  const double pg = given.empty() ? 1.0 : partial_mass(joint, given);
  if (pg <= 0.0)
    throw std::domain_error("conditional_information: conditioning point has zero probability");
  std::vector<AxisValue> both(target.begin(), target.end());
  both.insert(both.end(), given.begin(), given.end());
  const double ptg = partial_mass(joint, both);
  if (ptg == 0.0) return kInfBits;
  return std::log2(pg) - std::log2(ptg);
}

double information_density(const JointPmf& joint, std::span<const AxisValue> a,
                           std::span<const AxisValue> b) {
  const double pa = partial_mass(joint, a);
  const double pb = partial_mass(joint, b);
  if (pa <= 0.0 || pb <= 0.0)
    throw std::domain_error("information_density: zero marginal probability");
  std::vector<AxisValue> both(a.begin(), a.end());
  both.insert(both.end(), b.begin(), b.end());
  const double pab = partial_mass(joint, both);
  if (pab == 0.0) return -kInfBits;
  return std::log2(pab) - std::log2(pa) - std::log2(pb);
}

double entropy(const JointPmf& joint, std::span<const std::string> target,
               std::span<const std::string> given) {
  std::vector<int> t_idx = axis_indices(joint, target);
  std::vector<int> g_idx = axis_indices(joint, given);
  for (int t : t_idx)
    for (int g : g_idx)
      if (t == g) throw std::invalid_argument("entropy: target and given overlap");

  std::vector<int> tg_idx = t_idx;
  tg_idx.insert(tg_idx.end(), g_idx.begin(), g_idx.end());
  const JointPmf m_tg = joint.marginal(tg_idx);

  if (g_idx.empty()) {
    double h = 0.0;
    for (std::size_t i = 0; i < m_tg.size(); ++i)
      if (m_tg[i] > 0.0) h -= m_tg[i] * std::log2(m_tg[i]);
    return h;
  }

  const JointPmf m_g = joint.marginal(g_idx);
  // Map joint-axis index -> position inside m_tg / m_g (m_* keeps original order).
  std::vector<int> tg_sorted = tg_idx;
  std::sort(tg_sorted.begin(), tg_sorted.end());
  std::vector<int> g_sorted = g_idx;
  std::sort(g_sorted.begin(), g_sorted.end());

  std::vector<int> point(static_cast<std::size_t>(m_tg.rank()));
  std::vector<int> gpoint(static_cast<std::size_t>(m_g.rank()));
  double h = 0.0;
  for (std::size_t flat = 0; flat < m_tg.size(); ++flat) {
    const double p = m_tg[flat];
    if (p <= 0.0) continue;
    m_tg.unflatten(flat, point);
    for (std::size_t j = 0; j < g_sorted.size(); ++j) {
      const auto it = std::find(tg_sorted.begin(), tg_sorted.end(), g_sorted[j]);
      gpoint[j] = point[static_cast<std::size_t>(it - tg_sorted.begin())];
    }
    const double pg = m_g.prob(gpoint);
    h += p * (std::log2(pg) - std::log2(p));
  }
  return h;
}

double total_variation(const JointPmf& p, const JointPmf& q) {
  if (!p.same_axes(q)) throw std::invalid_argument("total_variation: axis mismatch");
  return kernels::half_l1_distance(p.probs(), q.probs());
}

double channel_dispersion(const Pmf& input, const Channel& channel) {
  if (input.size() != channel.input().size)
    throw std::invalid_argument("channel_dispersion: input size mismatch");
  const std::size_t ny = channel.output_size();
  std::vector<double> qy(ny, 0.0);
  for (int x = 0; x < input.size(); ++x) {
    const auto row = channel.row(x);
    for (std::size_t y = 0; y < ny; ++y) qy[y] += input[x] * row[y];
  }
  double v = 0.0;
  for (int x = 0; x < input.size(); ++x) {
    if (input[x] <= 0.0) continue;
    const auto row = channel.row(x);
    double mean = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      if (row[y] <= 0.0) continue;
      mean += row[y] * std::log2(row[y] / qy[y]);
    }
    double var = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      if (row[y] <= 0.0) continue;
      const double d = std::log2(row[y] / qy[y]) - mean;
      var += row[y] * d * d;
    }
    v += input[x] * var;
  }
  return v;
}

namespace {

// log2 information density table i(u;y) from a rank-2 marginal.
std::vector<double> density_table(const JointPmf& m_uy) {
  const int nu = m_uy.axis(0).size;
  const int ny = m_uy.axis(1).size;
  std::vector<double> pu(static_cast<std::size_t>(nu), 0.0), py(static_cast<std::size_t>(ny), 0.0);
  for (int u = 0; u < nu; ++u)
    for (int y = 0; y < ny; ++y) {
      const double p = m_uy[static_cast<std::size_t>(u * ny + y)];
      pu[static_cast<std::size_t>(u)] += p;
      py[static_cast<std::size_t>(y)] += p;
    }
  std::vector<double> iota(static_cast<std::size_t>(nu * ny), -kInfBits);
  for (int u = 0; u < nu; ++u)
    for (int y = 0; y < ny; ++y) {
      const double p = m_uy[static_cast<std::size_t>(u * ny + y)];
      if (p > 0.0)
        iota[static_cast<std::size_t>(u * ny + y)] =
            std::log2(p) - std::log2(pu[static_cast<std::size_t>(u)]) -
            std::log2(py[static_cast<std::size_t>(y)]);
    }
  return iota;
}

}  // namespace

CovMatrix2 bc_covariance(const JointPmf& q_u1u2x, const Channel& channel) {
  if (q_u1u2x.rank() != 3)
    throw std::invalid_argument("bc_covariance: expected a rank-3 joint (U1, U2, input)");
  if (channel.outputs().size() != 2)
    throw std::invalid_argument("bc_covariance: channel must have two output axes");
  const JointPmf full = channel.extend(q_u1u2x);
  const int y1 = 3, y2 = 4;

  const JointPmf m_u1y1 = full.marginal(std::vector<int>{0, y1});
  const JointPmf m_u2y2 = full.marginal(std::vector<int>{1, y2});
  const std::vector<double> iota1 = density_table(m_u1y1);
  const std::vector<double> iota2 = density_table(m_u2y2);

  const JointPmf m_uuyy = full.marginal(std::vector<int>{0, 1, y1, y2});
  const JointPmf m_uu = full.marginal(std::vector<int>{0, 1});

  const int n1 = q_u1u2x.axis(0).size, n2 = q_u1u2x.axis(1).size;
  const int ny1 = channel.outputs()[0].size, ny2 = channel.outputs()[1].size;

  CovMatrix2 cov;
  for (int u1 = 0; u1 < n1; ++u1)
    for (int u2 = 0; u2 < n2; ++u2) {
      const double puu = m_uu[static_cast<std::size_t>(u1 * n2 + u2)];
      if (puu <= 0.0) continue;
      double mean1 = 0.0, mean2 = 0.0;
      for (int a = 0; a < ny1; ++a)
        for (int b = 0; b < ny2; ++b) {
          const std::size_t f = static_cast<std::size_t>(((u1 * n2 + u2) * ny1 + a) * ny2 + b);
          const double w = m_uuyy[f] / puu;
          if (w <= 0.0) continue;
          mean1 += w * iota1[static_cast<std::size_t>(u1 * ny1 + a)];
          mean2 += w * iota2[static_cast<std::size_t>(u2 * ny2 + b)];
        }
      double c11 = 0.0, c12 = 0.0, c22 = 0.0;
      for (int a = 0; a < ny1; ++a)
        for (int b = 0; b < ny2; ++b) {
          const std::size_t f = static_cast<std::size_t>(((u1 * n2 + u2) * ny1 + a) * ny2 + b);
          const double w = m_uuyy[f] / puu;
          if (w <= 0.0) continue;
          const double d1 = iota1[static_cast<std::size_t>(u1 * ny1 + a)] - mean1;
          const double d2 = iota2[static_cast<std::size_t>(u2 * ny2 + b)] - mean2;
          c11 += w * d1 * d1;
          c12 += w * d1 * d2;
          c22 += w * d2 * d2;
        }
      cov.v11 += puu * c11;
      cov.v12 += puu * c12;
      cov.v22 += puu * c22;
    }
  return cov;
}

WiretapVariances wiretap_variances(const JointPmf& q_ux, const Channel& channel,
                                   VarianceConditioning conditioning) {
  if (q_ux.rank() != 2)
    throw std::invalid_argument("wiretap_variances: expected a rank-2 joint (U, input)");
  if (channel.outputs().size() != 2)
    throw std::invalid_argument("wiretap_variances: channel must have two output axes");
  const JointPmf full = channel.extend(q_ux);  // (U, X, Y, Z)
  const int nu = q_ux.axis(0).size, nx = q_ux.axis(1).size;
  const int ny = channel.outputs()[0].size, nz = channel.outputs()[1].size;

  WiretapVariances out;
  for (int which = 0; which < 2; ++which) {
    const int axis = which == 0 ? 2 : 3;  // full axes: U=0, X=1, Y=2, Z=3
    const int nout = which == 0 ? ny : nz;
    const JointPmf m_uo = full.marginal(std::vector<int>{0, axis});
    const std::vector<double> iota = density_table(m_uo);
    double v = 0.0;
    if (conditioning == VarianceConditioning::given_ux) {
      const JointPmf m_uxo = full.marginal(std::vector<int>{0, 1, axis});
      const JointPmf m_ux = full.marginal(std::vector<int>{0, 1});
      for (int u = 0; u < nu; ++u)
        for (int x = 0; x < nx; ++x) {
          const double w0 = m_ux[static_cast<std::size_t>(u * nx + x)];
          if (w0 <= 0.0) continue;
          double mean = 0.0;
          for (int o = 0; o < nout; ++o) {
            const double w = m_uxo[static_cast<std::size_t>((u * nx + x) * nout + o)] / w0;
            if (w > 0.0) mean += w * iota[static_cast<std::size_t>(u * nout + o)];
          }
          double var = 0.0;
          for (int o = 0; o < nout; ++o) {
            const double w = m_uxo[static_cast<std::size_t>((u * nx + x) * nout + o)] / w0;
            if (w <= 0.0) continue;
            const double d = iota[static_cast<std::size_t>(u * nout + o)] - mean;
            var += w * d * d;
          }
          v += w0 * var;
        }
    } else {
      const JointPmf m_u = full.marginal(std::vector<int>{0});
      for (int u = 0; u < nu; ++u) {
        const double w0 = m_u[static_cast<std::size_t>(u)];
        if (w0 <= 0.0) continue;
        double mean = 0.0;
        for (int o = 0; o < nout; ++o) {
          const double w = m_uo[static_cast<std::size_t>(u * nout + o)] / w0;
          if (w > 0.0) mean += w * iota[static_cast<std::size_t>(u * nout + o)];
        }
        double var = 0.0;
        for (int o = 0; o < nout; ++o) {
          const double w = m_uo[static_cast<std::size_t>(u * nout + o)] / w0;
          if (w <= 0.0) continue;
          const double d = iota[static_cast<std::size_t>(u * nout + o)] - mean;
          var += w * d * d;
        }
        v += w0 * var;
      }
    }
    if (which == 0)
      out.v_y = v;
    else
      out.v_z = v;
  }
  return out;
}

}  // namespace randbin
