#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "randbin/errors.hpp"
#include "randbin/secondorder.hpp"

// Secrecy protocol evaluation. The exact path materializes the bin maps over
// the whole sequence space for one sampled assignment, scans several values
// of the shared randomness f, and computes the secrecy total variation and
// the decoding error by full summation (zero-width results). The opt-in
// plug-in path histograms sampled (message, eavesdropper-sequence) pairs
// against consistently memoized bins and reports a bias bound; its decoding
// error is estimated over fresh assignments via the point-to-point
// simulator, which shares the decode semantics.

namespace randbin {

namespace {

struct PerLetter {
  int ku = 0, ny = 0, nz = 0;
  std::vector<double> z_given_u;   // q(z|u)
  std::vector<double> z_cdf;       // per u
  std::vector<double> y_given_u;   // q(y|u)
  std::vector<double> ln_post_uy;  // ln q(u|y), decode metric
};

PerLetter per_letter_tables(const WiretapSetup& setup) {
  if (setup.q_ux.rank() != 2)
    throw std::invalid_argument("wiretap_simulate_secrecy: q must have axes (U, input)");
  if (setup.channel.outputs().size() != 2)
    throw std::invalid_argument("wiretap_simulate_secrecy: channel must output (Y, Z)");
  const JointPmf full = setup.channel.extend(setup.q_ux);  // (U, X, Y, Z)
  PerLetter t;
  t.ku = full.axis(0).size;
  t.ny = full.axis(2).size;
  t.nz = full.axis(3).size;
  const JointPmf m_u = full.marginal(std::vector<int>{0});
  const JointPmf m_uy = full.marginal(std::vector<int>{0, 2});
  const JointPmf m_uz = full.marginal(std::vector<int>{0, 3});
  t.z_given_u.assign(static_cast<std::size_t>(t.ku * t.nz), 0.0);
  t.z_cdf.resize(static_cast<std::size_t>(t.ku * t.nz));
  t.y_given_u.assign(static_cast<std::size_t>(t.ku * t.ny), 0.0);
  t.ln_post_uy.assign(static_cast<std::size_t>(t.ku * t.ny), -1e300);
  std::vector<double> qy(static_cast<std::size_t>(t.ny), 0.0);
  for (int u = 0; u < t.ku; ++u)
    for (int y = 0; y < t.ny; ++y)
      qy[static_cast<std::size_t>(y)] += m_uy[static_cast<std::size_t>(u * t.ny + y)];
  for (int u = 0; u < t.ku; ++u) {
    const double pu = m_u[static_cast<std::size_t>(u)];
    double acc = 0.0;
    for (int z = 0; z < t.nz; ++z) {
      const double v = pu > 0.0 ? m_uz[static_cast<std::size_t>(u * t.nz + z)] / pu : 0.0;
      t.z_given_u[static_cast<std::size_t>(u * t.nz + z)] = v;
      acc += v;
      t.z_cdf[static_cast<std::size_t>(u * t.nz + z)] = acc;
    }
    for (int y = 0; y < t.ny; ++y) {
      const double j = m_uy[static_cast<std::size_t>(u * t.ny + y)];
      t.y_given_u[static_cast<std::size_t>(u * t.ny + y)] = pu > 0.0 ? j / pu : 0.0;
      if (j > 0.0)
        t.ln_post_uy[static_cast<std::size_t>(u * t.ny + y)] =
            std::log(j) - std::log(qy[static_cast<std::size_t>(y)]);
    }
  }
  return t;
}

std::pair<std::int64_t, std::int64_t> bin_budgets(const WiretapSetup& setup, double rate,
                                                  const LogTermPolicy& policy,
                                                  const WiretapSimOptions& options) {
  std::int64_t m_bins, f_bins;
  if (options.force_m) {
    m_bins = *options.force_m;
  } else {
    const double log2_m = static_cast<double>(setup.n) * std::max(0.0, rate);
    if (log2_m > 40.0) throw GuardError("wiretap_simulate_secrecy: message budget too large");
    m_bins = std::max<std::int64_t>(1, std::llround(std::exp2(log2_m)));
  }
  if (options.force_f) {
    f_bins = *options.force_f;
  } else {
    const double log2_f = wiretap_rate(setup, policy).rtilde_bits;
    if (log2_f > 40.0) throw GuardError("wiretap_simulate_secrecy: decoder bin budget too large");
    f_bins = std::max<std::int64_t>(1, std::llround(std::exp2(log2_f)));
  }
  if (m_bins < 1 || f_bins < 1)
    throw std::invalid_argument("wiretap_simulate_secrecy: bin counts must be positive");
  return {m_bins, f_bins};
}

// ---------------------------------------------------------------------------
// Exact path.

struct ExactEval {
  double tv = 0.0;
  double perr = 0.0;
  std::int64_t empty_cells = 0;
};

struct ExactSim {
  const WiretapSetup* setup;
  PerLetter t;
  std::size_t space, zspace, yspace;
  std::vector<int> symbol;  // space * n
  std::vector<std::size_t> type_members;
  std::vector<double> pz_given_x;  // type member index -> |Z|^n row
  std::vector<double> py_given_x;
  std::int64_t m_bins, f_bins;

  ExactSim(const WiretapSetup& s, std::int64_t m, std::int64_t f, std::size_t limit)
      : setup(&s), t(per_letter_tables(s)), m_bins(m), f_bins(f) {
    const double dn = static_cast<double>(s.n);
    const double log_u = dn * std::log2(static_cast<double>(t.ku));
    const double log_z = dn * std::log2(static_cast<double>(t.nz));
    const double log_y = dn * std::log2(static_cast<double>(t.ny));
    const double log_limit = std::log2(static_cast<double>(limit));
    if (log_u > log_limit || log_z > log_limit || log_y > log_limit)
      throw GuardError(
          "wiretap_simulate_secrecy: histogram space exceeds the exact-path guard; "
          "set allow_estimator to use the plug-in estimator");
    space = static_cast<std::size_t>(std::llround(std::exp2(log_u)));
    zspace = static_cast<std::size_t>(std::llround(std::exp2(log_z)));
    yspace = static_cast<std::size_t>(std::llround(std::exp2(log_y)));

    const JointPmf m_u = setup->channel.extend(s.q_ux).marginal(std::vector<int>{0});
    const NType type = nearest_ntype(m_u.to_pmf(), s.n);
    symbol.resize(space * static_cast<std::size_t>(s.n));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(t.ku));
    for (std::size_t i = 0; i < space; ++i) {
      std::size_t rest = i;
      std::fill(counts.begin(), counts.end(), 0);
      for (int j = static_cast<int>(s.n) - 1; j >= 0; --j) {
        const int sym = static_cast<int>(rest % static_cast<std::size_t>(t.ku));
        rest /= static_cast<std::size_t>(t.ku);
        symbol[i * static_cast<std::size_t>(s.n) + static_cast<std::size_t>(j)] = sym;
        ++counts[static_cast<std::size_t>(sym)];
      }
      if (counts == type.counts) type_members.push_back(i);
    }

    // Cached per-member output-sequence laws.
    pz_given_x.assign(type_members.size() * zspace, 0.0);
    py_given_x.assign(type_members.size() * yspace, 0.0);
    std::vector<int> out_sym(static_cast<std::size_t>(s.n));
    for (std::size_t mi = 0; mi < type_members.size(); ++mi) {
      const std::size_t i = type_members[mi];
      for (std::size_t zf = 0; zf < zspace; ++zf) {
        std::size_t rest = zf;
        for (int j = static_cast<int>(s.n) - 1; j >= 0; --j) {
          out_sym[static_cast<std::size_t>(j)] = static_cast<int>(rest % static_cast<std::size_t>(t.nz));
          rest /= static_cast<std::size_t>(t.nz);
        }
        double p = 1.0;
        for (int j = 0; j < s.n; ++j)
          p *= t.z_given_u[static_cast<std::size_t>(
              symbol[i * static_cast<std::size_t>(s.n) + static_cast<std::size_t>(j)] * t.nz +
              out_sym[static_cast<std::size_t>(j)])];
        pz_given_x[mi * zspace + zf] = p;
      }
      for (std::size_t yf = 0; yf < yspace; ++yf) {
        std::size_t rest = yf;
        for (int j = static_cast<int>(s.n) - 1; j >= 0; --j) {
          out_sym[static_cast<std::size_t>(j)] = static_cast<int>(rest % static_cast<std::size_t>(t.ny));
          rest /= static_cast<std::size_t>(t.ny);
        }
        double p = 1.0;
        for (int j = 0; j < s.n; ++j)
          p *= t.y_given_u[static_cast<std::size_t>(
              symbol[i * static_cast<std::size_t>(s.n) + static_cast<std::size_t>(j)] * t.ny +
              out_sym[static_cast<std::size_t>(j)])];
        py_given_x[mi * yspace + yf] = p;
      }
    }
  }

  ExactEval evaluate(const std::vector<std::int64_t>& bm, const std::vector<std::int64_t>& bf,
                     std::int64_t f_star) const {
    const std::int64_t n = setup->n;
    // Encoder cells over type members; empty cells fall back to the uniform
    // type distribution and are reported.
    std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(m_bins));
    for (std::size_t mi = 0; mi < type_members.size(); ++mi) {
      const std::size_t i = type_members[mi];
      if (bf[i] == f_star) cells[static_cast<std::size_t>(bm[i])].push_back(mi);
    }
    ExactEval out;
    std::vector<std::size_t> fallback(type_members.size());
    for (std::size_t mi = 0; mi < fallback.size(); ++mi) fallback[mi] = mi;

    // p(m, z^n) and the secrecy total variation.
    std::vector<double> p_mz(static_cast<std::size_t>(m_bins) * zspace, 0.0);
    for (std::int64_t m = 0; m < m_bins; ++m) {
      const auto& cell = cells[static_cast<std::size_t>(m)].empty()
                             ? (++out.empty_cells, fallback)
                             : cells[static_cast<std::size_t>(m)];
      const double w = 1.0 / (static_cast<double>(m_bins) * static_cast<double>(cell.size()));
      for (const std::size_t mi : cell)
        for (std::size_t zf = 0; zf < zspace; ++zf)
          p_mz[static_cast<std::size_t>(m) * zspace + zf] += w * pz_given_x[mi * zspace + zf];
    }
    std::vector<double> p_z(zspace, 0.0);
    for (std::int64_t m = 0; m < m_bins; ++m)
      for (std::size_t zf = 0; zf < zspace; ++zf)
        p_z[zf] += p_mz[static_cast<std::size_t>(m) * zspace + zf];
    double tv = 0.0;
    for (std::int64_t m = 0; m < m_bins; ++m)
      for (std::size_t zf = 0; zf < zspace; ++zf)
        tv += std::fabs(p_mz[static_cast<std::size_t>(m) * zspace + zf] -
                        p_z[zf] / static_cast<double>(m_bins));
    out.tv = 0.5 * tv;

    // Decoding error at the receiver for the same (assignment, f).
    std::vector<std::size_t> binf;
    for (std::size_t i = 0; i < space; ++i)
      if (bf[i] == f_star) binf.push_back(i);
    // Posterior message mass per y-sequence.
    std::vector<double> ratio(static_cast<std::size_t>(m_bins) * yspace, 0.0);
    std::vector<int> out_sym(static_cast<std::size_t>(n));
    for (std::size_t yf = 0; yf < yspace; ++yf) {
      std::size_t rest = yf;
      for (int j = static_cast<int>(n) - 1; j >= 0; --j) {
        out_sym[static_cast<std::size_t>(j)] = static_cast<int>(rest % static_cast<std::size_t>(t.ny));
        rest /= static_cast<std::size_t>(t.ny);
      }
      double total = 0.0;
      std::vector<double> per_m(static_cast<std::size_t>(m_bins), 0.0);
      for (const std::size_t i : binf) {
        double lw = 0.0;
        for (std::int64_t j = 0; j < n; ++j)
          lw += t.ln_post_uy[static_cast<std::size_t>(
              symbol[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] * t.ny +
              out_sym[static_cast<std::size_t>(j)])];
        const double w = std::exp(lw);
        if (w <= 0.0) continue;
        total += w;
        per_m[static_cast<std::size_t>(bm[i])] += w;
      }
      if (total > 0.0)
        for (std::int64_t m = 0; m < m_bins; ++m)
          ratio[static_cast<std::size_t>(m) * yspace + yf] =
              per_m[static_cast<std::size_t>(m)] / total;
    }
    double perr = 0.0;
    for (std::int64_t m = 0; m < m_bins; ++m) {
      const auto& cell = cells[static_cast<std::size_t>(m)].empty()
                             ? fallback
                             : cells[static_cast<std::size_t>(m)];
      const double w = 1.0 / (static_cast<double>(m_bins) * static_cast<double>(cell.size()));
      for (const std::size_t mi : cell)
        for (std::size_t yf = 0; yf < yspace; ++yf)
          perr += w * py_given_x[mi * yspace + yf] *
                  (1.0 - ratio[static_cast<std::size_t>(m) * yspace + yf]);
    }
    out.perr = perr;
    return out;
  }
};

}  // namespace

WiretapSimResult wiretap_simulate_secrecy(const WiretapSetup& setup, double rate,
                                          const LogTermPolicy& policy, std::int64_t trials,
                                          Rng& rng, const WiretapSimOptions& options) {
  const auto [m_bins, f_bins] = bin_budgets(setup, rate, policy, options);
  WiretapSimResult out;
  out.m_bins = m_bins;
  out.f_bins = f_bins;

  const PerLetter tables = per_letter_tables(setup);
  const double dn = static_cast<double>(setup.n);
  const double log_limit = std::log2(static_cast<double>(options.exact_space_limit));
  const bool exact_feasible =
      dn * std::log2(static_cast<double>(tables.ku)) <= log_limit &&
      dn * std::log2(static_cast<double>(tables.nz)) <= log_limit &&
      dn * std::log2(static_cast<double>(tables.ny)) <= log_limit &&
      static_cast<double>(m_bins) * std::exp2(dn * std::log2(static_cast<double>(tables.nz))) <=
          std::exp2(24.0);

  if (exact_feasible) {
    const ExactSim sim(setup, m_bins, f_bins, options.exact_space_limit);
    std::vector<std::int64_t> bm(sim.space), bf(sim.space);
    for (std::size_t i = 0; i < sim.space; ++i) {
      bm[i] = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(m_bins)));
      bf[i] = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(f_bins)));
    }
    const std::int64_t scan =
        std::min<std::int64_t>(f_bins, std::max<std::int64_t>(1, options.f_scan));
    ExactEval best;
    bool have = false;
    for (std::int64_t s = 0; s < scan; ++s) {
      const std::int64_t f_star =
          f_bins <= scan
              ? s
              : static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(f_bins)));
      const ExactEval eval = sim.evaluate(bm, bf, f_star);
      if (!have || eval.tv + eval.perr < best.tv + best.perr) {
        best = eval;
        have = true;
      }
    }
    out.tv_estimate = best.tv;
    out.tv_half_width = 0.0;
    out.tv_bias_bound = 0.0;
    out.error_estimate = best.perr;
    out.empty_cells = best.empty_cells;
    out.f_scanned = scan;
    out.method = "exact";
    return out;
  }

  if (!options.allow_estimator)
    throw GuardError(
        "wiretap_simulate_secrecy: histogram space exceeds the exact-path guard; "
        "set allow_estimator to use the plug-in estimator");
  if (trials < 2)
    throw std::invalid_argument("wiretap_simulate_secrecy: estimator needs trials >= 2");
  if (static_cast<double>(m_bins) * static_cast<double>(f_bins) > 1e5)
    throw GuardError("wiretap_simulate_secrecy: estimator rejection budget too large");
  if (dn * std::log2(static_cast<double>(tables.ku)) > 62.0 ||
      dn * std::log2(static_cast<double>(tables.nz)) > 62.0)
    throw GuardError("wiretap_simulate_secrecy: sequence keys exceed 64 bits");

  // Plug-in estimator with consistently memoized bins for one assignment.
  const JointPmf m_u_joint = setup.channel.extend(setup.q_ux).marginal(std::vector<int>{0});
  const NType type = nearest_ntype(m_u_joint.to_pmf(), setup.n);
  std::unordered_map<std::uint64_t, std::pair<std::int64_t, std::int64_t>> bins;
  const auto bins_of = [&](const std::vector<int>& seq) {
    std::uint64_t key = 0;
    for (int s : seq) key = key * static_cast<std::uint64_t>(tables.ku) + static_cast<std::uint64_t>(s);
    const auto it = bins.find(key);
    if (it != bins.end()) return it->second;
    const std::pair<std::int64_t, std::int64_t> b{
        static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(m_bins))),
        static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(f_bins)))};
    bins.emplace(key, b);
    return b;
  };

  const std::int64_t f_star = 0;
  const std::int64_t max_tries = 64 * m_bins * f_bins;
  std::unordered_map<std::uint64_t, double> hist_mz;
  std::unordered_map<std::uint64_t, double> hist_z;
  std::int64_t failures = 0;
  const double weight = 1.0 / static_cast<double>(trials);
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    const std::int64_t m_star =
        static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(m_bins)));
    std::vector<int> x;
    bool ok = false;
    for (std::int64_t attempt = 0; attempt < max_tries; ++attempt) {
      x = sample_from_type(type, rng);
      const auto b = bins_of(x);
      if (b.first == m_star && b.second == f_star) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      ++failures;
      x = sample_from_type(type, rng);  // fallback keeps the histogram a pmf
    }
    std::uint64_t zkey = 0;
    for (std::int64_t j = 0; j < setup.n; ++j) {
      const int u = x[static_cast<std::size_t>(j)];
      const double r = rng.uniform01();
      int zs = tables.nz - 1;
      for (int cand = 0; cand < tables.nz; ++cand)
        if (r < tables.z_cdf[static_cast<std::size_t>(u * tables.nz + cand)]) {
          zs = cand;
          break;
        }
      zkey = zkey * static_cast<std::uint64_t>(tables.nz) + static_cast<std::uint64_t>(zs);
    }
    const std::uint64_t mz_key =
        zkey * static_cast<std::uint64_t>(m_bins) + static_cast<std::uint64_t>(m_star);
    hist_mz[mz_key] += weight;
    hist_z[zkey] += weight;
  }

  double tv = 0.0;
  for (const auto& [key, pmz] : hist_mz) {
    const std::uint64_t zkey = key / static_cast<std::uint64_t>(m_bins);
    tv += std::fabs(pmz - hist_z[zkey] / static_cast<double>(m_bins));
  }
  // Cells where p(m,z) is unobserved but p(z) is not still contribute.
  for (const auto& [zkey, pz] : hist_z) {
    for (std::int64_t m = 0; m < m_bins; ++m) {
      const std::uint64_t key = zkey * static_cast<std::uint64_t>(m_bins) + static_cast<std::uint64_t>(m);
      if (!hist_mz.count(key)) tv += pz / static_cast<double>(m_bins);
    }
  }
  out.tv_estimate = 0.5 * tv;
  out.tv_half_width = 0.0;
  out.tv_bias_bound =
      0.5 * (std::sqrt(static_cast<double>(hist_mz.size()) / static_cast<double>(trials)) +
             std::sqrt(static_cast<double>(hist_z.size()) / static_cast<double>(trials)));
  out.empty_cells = failures;
  out.f_scanned = 1;
  out.method = "plugin";

  // Decode error over fresh assignments via the equivalent point-to-point
  // protocol (same decoder, U-marginal input, per-letter q(y|u) channel).
  {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(tables.ku));
    for (int u = 0; u < tables.ku; ++u) {
      rows[static_cast<std::size_t>(u)].assign(
          tables.y_given_u.begin() + static_cast<std::ptrdiff_t>(u * tables.ny),
          tables.y_given_u.begin() + static_cast<std::ptrdiff_t>((u + 1) * tables.ny));
      double s = 0.0;
      for (double v : rows[static_cast<std::size_t>(u)]) s += v;
      rows[static_cast<std::size_t>(u)].back() += 1.0 - s;
    }
    const P2PSetup p2p{m_u_joint.to_pmf(),
                       Channel(m_u_joint.axis(0), {{"Yw", tables.ny}}, rows), setup.n,
                       setup.eps_r};
    P2PSimOptions opts;
    opts.force_log2_m = std::log2(static_cast<double>(m_bins));
    opts.force_log2_f = std::log2(static_cast<double>(f_bins));
    opts.workers = options.workers;
    const P2PSimResult res = p2p_simulate(p2p, 0.0, policy, trials, rng, opts);
    out.error_estimate = res.message_error.estimate;
  }
  return out;
}

}  // namespace randbin
