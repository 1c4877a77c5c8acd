#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "randbin/errors.hpp"
#include "randbin/secondorder.hpp"

// Protocol simulation. Two interchangeable realizations:
//
//  * brute: materializes both bin maps over the whole sequence space and
//    runs the protocol verbatim. Exact, but needs |X|^n small.
//
//  * lazy: distributionally equivalent realization for large n. Per trial,
//    the encoder cell size K is drawn from its Binomial(|T|, 1/(MF)) law
//    (empty cell = encoder failure), the codeword is a uniform type member,
//    and the decoder's stochastic-likelihood draw is resolved as an
//    exponential race between the true sequence and the Bernoulli(1/F)
//    thinned field of everything else. The field never gets enumerated: the
//    race survival probability only needs Lambda_k(v) = sum_x c_x
//    (1 - e^{-w(x)/v})^k, which collapses onto the spectrum of per-letter
//    likelihood products, a polynomially small object. Type-class members
//    are split out of the field (their bin law is conditioned by the
//    encoder cell) and handled with their own spectrum slice.
//
//    Quantified approximations, all far below the Monte Carlo resolution:
//    Binomial -> Poisson/normal swaps for astronomically large populations,
//    cell mates treated as i.i.d. uniform type members (error O(K^2/|T|)),
//    and simultaneous multi-sector race wins attributed proportionally.
//    The survival products themselves are evaluated entry-exactly.

namespace randbin {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double safe_exp2_round(double log2_value, const char* what) {
  if (log2_value > 62.0) throw GuardError(std::string(what) + ": bin budget too large");
  return std::max(1.0, std::round(std::exp2(log2_value)));
}

// ---------------------------------------------------------------------------
// Brute-force realization.

struct BruteSim {
  const P2PSetup* setup;
  int kx, ky;
  std::size_t space;
  std::vector<int> symbol;       // space * n symbols, row-major
  std::vector<std::size_t> type_members;
  std::vector<double> ln_post;   // kx * ky: ln q(x | y)
  std::vector<double> chan_cdf;  // kx * ky
  std::int64_t m_bins, f_bins;

  BruteSim(const P2PSetup& s, double log2_m, double log2_f, std::size_t space_limit)
      : setup(&s) {
    kx = s.input.size();
    ky = static_cast<int>(s.channel.output_size());
    const double log_space = static_cast<double>(s.n) * std::log2(static_cast<double>(kx));
    if (log_space > std::log2(static_cast<double>(space_limit)))
      throw GuardError("p2p_simulate: sequence space exceeds the brute-force guard");
    space = static_cast<std::size_t>(std::llround(std::exp2(log_space)));
    m_bins = static_cast<std::int64_t>(safe_exp2_round(log2_m, "p2p_simulate"));
    f_bins = static_cast<std::int64_t>(safe_exp2_round(log2_f, "p2p_simulate"));

    const NType type = nearest_ntype(s.input, s.n);
    symbol.resize(space * static_cast<std::size_t>(s.n));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(kx));
    for (std::size_t i = 0; i < space; ++i) {
      std::size_t rest = i;
      std::fill(counts.begin(), counts.end(), 0);
      for (int j = static_cast<int>(s.n) - 1; j >= 0; --j) {
        const int sym = static_cast<int>(rest % static_cast<std::size_t>(kx));
        rest /= static_cast<std::size_t>(kx);
        symbol[i * static_cast<std::size_t>(s.n) + static_cast<std::size_t>(j)] = sym;
        ++counts[static_cast<std::size_t>(sym)];
      }
      if (counts == type.counts) type_members.push_back(i);
    }

    const JointPmf joint = s.channel.joint(s.input);
    std::vector<double> qy(static_cast<std::size_t>(ky), 0.0);
    for (int x = 0; x < kx; ++x)
      for (int y = 0; y < ky; ++y)
        qy[static_cast<std::size_t>(y)] += joint[static_cast<std::size_t>(x * ky + y)];
    ln_post.assign(static_cast<std::size_t>(kx * ky), -1e300);
    chan_cdf.resize(static_cast<std::size_t>(kx * ky));
    for (int x = 0; x < kx; ++x) {
      double acc = 0.0;
      for (int y = 0; y < ky; ++y) {
        const double j = joint[static_cast<std::size_t>(x * ky + y)];
        if (j > 0.0)
          ln_post[static_cast<std::size_t>(x * ky + y)] =
              std::log(j) - std::log(qy[static_cast<std::size_t>(y)]);
        acc += setup->channel.row(x)[static_cast<std::size_t>(y)];
        chan_cdf[static_cast<std::size_t>(x * ky + y)] = acc;
      }
    }
  }

  // Returns (message_error, sequence_error, encoder_failure).
  void trial(Rng& rng, std::vector<std::int64_t>& bm, std::vector<std::int64_t>& bf,
             std::vector<int>& y, bool& msg_err, bool& seq_err, bool& enc_fail) const {
    const std::int64_t n = setup->n;
    bm.resize(space);
    bf.resize(space);
    for (std::size_t i = 0; i < space; ++i) {
      bm[i] = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(m_bins)));
      bf[i] = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(f_bins)));
    }
    const std::int64_t m_star =
        static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(m_bins)));
    const std::int64_t f_star =
        static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(f_bins)));

    std::vector<std::size_t> cell;
    for (std::size_t i : type_members)
      if (bm[i] == m_star && bf[i] == f_star) cell.push_back(i);
    if (cell.empty()) {
      msg_err = seq_err = enc_fail = true;
      return;
    }
    enc_fail = false;
    const std::size_t x = cell[rng.uniform_int(cell.size())];

    y.resize(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
      const int xs = symbol[x * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
      const double u = rng.uniform01();
      int ys = ky - 1;
      for (int cand = 0; cand < ky; ++cand)
        if (u < chan_cdf[static_cast<std::size_t>(xs * ky + cand)]) {
          ys = cand;
          break;
        }
      y[static_cast<std::size_t>(j)] = ys;
    }

    // Stochastic likelihood decode over the f-compatible sequences.
    std::vector<std::size_t> cands;
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i = 0; i < space; ++i) {
      if (bf[i] != f_star) continue;
      double lw = 0.0;
      for (std::int64_t j = 0; j < n; ++j)
        lw += ln_post[static_cast<std::size_t>(
            symbol[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] * ky +
            y[static_cast<std::size_t>(j)])];
      const double wv = std::exp(lw);
      if (wv <= 0.0) continue;
      cands.push_back(i);
      w.push_back(wv);
      total += wv;
    }
    std::size_t xhat = x;
    if (!cands.empty()) {
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      xhat = cands.back();
      for (std::size_t c = 0; c < cands.size(); ++c) {
        acc += w[c];
        if (u < acc) {
          xhat = cands[c];
          break;
        }
      }
    }
    msg_err = bm[xhat] != m_star;
    seq_err = xhat != x;
  }
};

// ---------------------------------------------------------------------------
// Lazy realization: weight spectra.

struct LogAccumulator {
  double max_log = -1e300;
  double sum = 0.0;
  void add(double l) {
    if (l <= -1e299) return;
    if (l <= max_log) {
      sum += std::exp(l - max_log);
    } else {
      sum = sum * std::exp(max_log - l) + 1.0;
      max_log = l;
    }
  }
  double log_value() const {
    return sum <= 0.0 ? -1e300 : max_log + std::log(sum);
  }
};

struct Spectrum {
  std::vector<double> logw;  // natural log, sorted descending
  std::vector<double> logc;
  std::vector<double> suffix_mass_log;   // log sum_{j >= i} c_j w_j
  std::vector<double> prefix_count_log;  // log sum_{j <= i} c_j

  void finalize() {
    std::vector<std::size_t> order(logw.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return logw[a] > logw[b]; });
    std::vector<double> lw(logw.size()), lc(logc.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      lw[i] = logw[order[i]];
      lc[i] = logc[order[i]];
    }
    logw = std::move(lw);
    logc = std::move(lc);
    suffix_mass_log.resize(logw.size());
    LogAccumulator mass;
    for (std::size_t i = logw.size(); i-- > 0;) {
      mass.add(logc[i] + logw[i]);
      suffix_mass_log[i] = mass.log_value();
    }
    prefix_count_log.resize(logw.size());
    LogAccumulator count;
    for (std::size_t i = 0; i < logw.size(); ++i) {
      count.add(logc[i]);
      prefix_count_log[i] = count.log_value();
    }
  }

  std::size_t first_below(double threshold) const {
    std::size_t l = 0, r = logw.size();
    while (l < r) {
      const std::size_t mid = (l + r) / 2;
      if (logw[mid] >= threshold)
        l = mid + 1;
      else
        r = mid;
    }
    return l;
  }

  // log Lambda(e^{ln_v}) with Lambda(v) = sum_j c_j (1 - e^{-w_j/v}).
  // Saturated head entries count as 1, the far tail is linearized.
  double log_lambda(double ln_v) const {
    if (logw.empty()) return -1e300;
    const std::size_t head_end = first_below(ln_v + 45.0);
    const std::size_t band_end = first_below(ln_v - 38.0);
    LogAccumulator acc;
    if (head_end > 0) acc.add(prefix_count_log[head_end - 1]);
    for (std::size_t j = head_end; j < band_end; ++j) {
      const double r = std::exp(logw[j] - ln_v);
      const double p = -std::expm1(-r);
      if (p <= 0.0) continue;
      acc.add(logc[j] + std::log(p));
    }
    if (band_end < logw.size()) acc.add(suffix_mass_log[band_end] - ln_v);
    return acc.log_value();
  }

  // log survival of a race threshold v against this field thinned at the
  // given rate: sum_j c_j log(1 - rate (1 - e^{-w_j/v})), computed entry by
  // entry over the band so no series truncation is involved. Returns a
  // nonpositive value (possibly -inf).
  double log_survival(double ln_v, double ln_rate) const {
    if (logw.empty() || ln_rate <= -1e299) return 0.0;
    // Deep in the linear regime every factor is 1 - rate*w/v to 1e-16.
    if (ln_rate < -600.0) {
      const double l = log_lambda(ln_v);
      return l <= -1e299 ? 0.0 : -std::exp(ln_rate + l);
    }
    const double rate = std::exp(ln_rate);
    const std::size_t head_end = first_below(ln_v + 45.0);
    const std::size_t band_end = first_below(ln_v - 38.0);
    // Accumulate ln of the total negative log-survival.
    LogAccumulator neg;
    if (head_end > 0) {
      const double per = -std::log1p(-std::min(rate, 1.0 - 1e-16));
      neg.add(prefix_count_log[head_end - 1] + std::log(per));
    }
    for (std::size_t j = head_end; j < band_end; ++j) {
      const double r = std::exp(logw[j] - ln_v);
      const double p = -std::expm1(-r);
      if (p <= 0.0) continue;
      const double per = -std::log1p(-std::min(rate * p, 1.0 - 1e-16));
      neg.add(logc[j] + std::log(per));
    }
    if (band_end < logw.size()) neg.add(ln_rate + suffix_mass_log[band_end] - ln_v);
    const double l = neg.log_value();
    if (l <= -1e299) return 0.0;
    return l > 709.0 ? -1e300 : -std::exp(l);
  }
};

struct SpectrumPair {
  Spectrum full;
  Spectrum type_slice;
};

struct LazySim {
  const P2PSetup* setup;
  int kx, ky;
  NType type;
  double ln_type_size;  // ln |T|
  double ln_m, ln_f;    // natural log bin counts (real-valued)
  double inv_m;         // 1/M
  std::vector<double> ln_post;   // ln q(x | y)
  std::vector<double> chan_cdf;
  std::size_t spectrum_guard = std::size_t{1} << 22;

  mutable std::mutex cache_mutex;
  mutable std::map<std::vector<int>, std::shared_ptr<const SpectrumPair>> cache;

  LazySim(const P2PSetup& s, double log2_m, double log2_f)
      : setup(&s), type(nearest_ntype(s.input, s.n)) {
    kx = s.input.size();
    ky = static_cast<int>(s.channel.output_size());
    ln_type_size = type_class_log_size(type) * kLn2;
    if (ln_type_size > 620.0)
      throw GuardError("p2p_simulate: type class too large for the lazy realization");
    if (log2_f < 0.0) throw std::invalid_argument("p2p_simulate: negative bin budget");
    ln_m = std::max(0.0, log2_m) * kLn2;
    ln_f = log2_f * kLn2;
    inv_m = std::exp(-ln_m);

    const JointPmf joint = s.channel.joint(s.input);
    std::vector<double> qy(static_cast<std::size_t>(ky), 0.0);
    for (int x = 0; x < kx; ++x)
      for (int y = 0; y < ky; ++y)
        qy[static_cast<std::size_t>(y)] += joint[static_cast<std::size_t>(x * ky + y)];
    ln_post.assign(static_cast<std::size_t>(kx * ky), -1e300);
    chan_cdf.resize(static_cast<std::size_t>(kx * ky));
    for (int x = 0; x < kx; ++x) {
      double acc = 0.0;
      for (int y = 0; y < ky; ++y) {
        const double j = joint[static_cast<std::size_t>(x * ky + y)];
        if (j > 0.0)
          ln_post[static_cast<std::size_t>(x * ky + y)] =
              std::log(j) - std::log(qy[static_cast<std::size_t>(y)]);
        acc += setup->channel.row(x)[static_cast<std::size_t>(y)];
        chan_cdf[static_cast<std::size_t>(x * ky + y)] = acc;
      }
    }
  }

  // Compositions of every y-group over the x-alphabet, convolved into the
  // full spectrum; the type slice additionally pins per-symbol totals.
  std::shared_ptr<const SpectrumPair> spectra_for(const std::vector<int>& y_counts) const {
    {
      std::scoped_lock lock(cache_mutex);
      const auto it = cache.find(y_counts);
      if (it != cache.end()) return it->second;
    }
    auto pair = std::make_shared<SpectrumPair>();

    std::vector<int> groups;  // y symbols present
    for (int y = 0; y < ky; ++y)
      if (y_counts[static_cast<std::size_t>(y)] > 0) groups.push_back(y);

    // Full spectrum: independent compositions per group.
    std::vector<std::vector<std::pair<double, double>>> per_group;
    for (int y : groups) {
      const int nb = y_counts[static_cast<std::size_t>(y)];
      std::vector<std::pair<double, double>> entries;
      std::vector<int> comp(static_cast<std::size_t>(kx), 0);
      const double lg_nb = std::lgamma(static_cast<double>(nb) + 1.0);
      const auto rec = [&](auto&& self, int sym, int left) -> void {
        if (sym == kx - 1) {
          comp[static_cast<std::size_t>(sym)] = left;
          double lw = 0.0, lc = lg_nb;
          bool dead = false;
          for (int a = 0; a < kx; ++a) {
            const int c = comp[static_cast<std::size_t>(a)];
            if (c == 0) continue;
            const double lq = ln_post[static_cast<std::size_t>(a * ky + y)];
            if (lq <= -1e299) {
              dead = true;
              break;
            }
            lw += c * lq;
            lc -= std::lgamma(static_cast<double>(c) + 1.0);
          }
          if (!dead) entries.emplace_back(lw, lc);
          return;
        }
        for (int c = 0; c <= left; ++c) {
          comp[static_cast<std::size_t>(sym)] = c;
          self(self, sym + 1, left - c);
        }
      };
      rec(rec, 0, nb);
      per_group.push_back(std::move(entries));
    }
    std::vector<std::pair<double, double>> acc{{0.0, 0.0}};
    for (const auto& g : per_group) {
      if (acc.size() * g.size() > spectrum_guard)
        throw GuardError("p2p_simulate: spectrum guard exceeded (alphabets too large)");
      std::vector<std::pair<double, double>> next;
      next.reserve(acc.size() * g.size());
      for (const auto& [lw1, lc1] : acc)
        for (const auto& [lw2, lc2] : g) next.emplace_back(lw1 + lw2, lc1 + lc2);
      acc = std::move(next);
    }
    for (const auto& [lw, lc] : acc) {
      pair->full.logw.push_back(lw);
      pair->full.logc.push_back(lc);
    }
    pair->full.finalize();
    // The full field carries unit posterior mass: sum_x c_x w_x = 1.
    if (!pair->full.suffix_mass_log.empty() &&
        std::fabs(pair->full.suffix_mass_log.front()) > 1e-6)
      throw std::logic_error("p2p_simulate: full spectrum mass check failed");

    // Type slice: joint enumeration with per-symbol budgets pinned.
    {
      std::vector<std::vector<int>> comps(groups.size(),
                                          std::vector<int>(static_cast<std::size_t>(kx)));
      std::vector<int> budget(type.counts.begin(), type.counts.end());
      const auto rec_group = [&](auto&& self, std::size_t gi, int positions_left) -> void {
        if (gi == groups.size()) {
          double lw = 0.0, lc = 0.0;
          for (std::size_t g = 0; g < groups.size(); ++g) {
            const int y = groups[g];
            const int nb = y_counts[static_cast<std::size_t>(y)];
            lc += std::lgamma(static_cast<double>(nb) + 1.0);
            for (int a = 0; a < kx; ++a) {
              const int c = comps[g][static_cast<std::size_t>(a)];
              if (c == 0) continue;
              lw += c * ln_post[static_cast<std::size_t>(a * ky + y)];
              lc -= std::lgamma(static_cast<double>(c) + 1.0);
            }
          }
          if (lw > -1e299) {
            pair->type_slice.logw.push_back(lw);
            pair->type_slice.logc.push_back(lc);
          }
          return;
        }
        const int y = groups[gi];
        const int nb = y_counts[static_cast<std::size_t>(y)];
        const auto rec_sym = [&](auto&& self2, int sym, int left) -> void {
          if (sym == kx - 1) {
            if (budget[static_cast<std::size_t>(sym)] < left) return;
            if (ln_post[static_cast<std::size_t>(sym * ky + y)] <= -1e299 && left > 0) return;
            comps[gi][static_cast<std::size_t>(sym)] = left;
            budget[static_cast<std::size_t>(sym)] -= left;
            self(self, gi + 1, positions_left - nb);
            budget[static_cast<std::size_t>(sym)] += left;
            return;
          }
          const int cap = std::min(left, budget[static_cast<std::size_t>(sym)]);
          for (int c = 0; c <= cap; ++c) {
            if (c > 0 && ln_post[static_cast<std::size_t>(sym * ky + y)] <= -1e299) break;
            comps[gi][static_cast<std::size_t>(sym)] = c;
            budget[static_cast<std::size_t>(sym)] -= c;
            self2(self2, sym + 1, left - c);
            budget[static_cast<std::size_t>(sym)] += c;
          }
        };
        rec_sym(rec_sym, 0, nb);
        if (pair->type_slice.logw.size() > spectrum_guard)
          throw GuardError("p2p_simulate: type-slice spectrum guard exceeded");
      };
      rec_group(rec_group, 0, static_cast<int>(setup->n));
      pair->type_slice.finalize();
      // The slice enumerates the whole type class (minus zero-likelihood
      // arrangements, which only exist when the channel has zero posterior
      // cells; the count check is skipped then).
      bool has_dead_cell = false;
      for (int a = 0; a < kx && !has_dead_cell; ++a)
        for (int y : groups)
          if (type.counts[static_cast<std::size_t>(a)] > 0 &&
              ln_post[static_cast<std::size_t>(a * ky + y)] <= -1e299) {
            has_dead_cell = true;
            break;
          }
      if (!has_dead_cell && !pair->type_slice.prefix_count_log.empty() &&
          std::fabs(pair->type_slice.prefix_count_log.back() - ln_type_size) > 1e-6)
        throw std::logic_error("p2p_simulate: type-slice count check failed");
    }

    std::scoped_lock lock(cache_mutex);
    if (cache.size() > 8192) cache.clear();
    cache[y_counts] = pair;
    return pair;
  }

  void trial(Rng& rng, bool& msg_err, bool& seq_err, bool& enc_fail) const {
    const std::int64_t n = setup->n;
    msg_err = seq_err = enc_fail = false;

    // Encoder cell size. K <= 0 means the uniformly chosen (m, f) cell is
    // empty and the trial counts as an error.
    const double ln_lambda = ln_type_size - ln_m - ln_f;
    double k_cell;
    if (ln_type_size <= std::log(1e6)) {
      const double population = std::round(std::exp(ln_type_size));
      k_cell = static_cast<double>(rng.binomial(static_cast<std::int64_t>(population),
                                                std::exp(-ln_m - ln_f)));
    } else if (ln_lambda <= std::log(1e15)) {
      k_cell = static_cast<double>(rng.poisson(std::exp(ln_lambda)));
    } else {
      k_cell = std::exp(ln_lambda);
    }
    if (k_cell < 1.0) {
      msg_err = seq_err = enc_fail = true;
      return;
    }

    // Codeword, channel output, per-letter likelihood of the truth.
    const std::vector<int> x = sample_from_type(type, rng);
    std::vector<int> y_counts(static_cast<std::size_t>(ky), 0);
    double ln_w_x = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const int xs = x[static_cast<std::size_t>(j)];
      const double u = rng.uniform01();
      int ys = ky - 1;
      for (int cand = 0; cand < ky; ++cand)
        if (u < chan_cdf[static_cast<std::size_t>(xs * ky + cand)]) {
          ys = cand;
          break;
        }
      ++y_counts[static_cast<std::size_t>(ys)];
      ln_w_x += ln_post[static_cast<std::size_t>(xs * ky + ys)];
    }

    const auto spectra = spectra_for(y_counts);

    // Exponential race: the truth's value is w_x / E, so every opponent is
    // measured against ln_v = ln w_x - ln E.
    const double e_x = rng.exponential();
    const double ln_v = ln_w_x - std::log(e_x);
    const double truth_term = -std::expm1(-e_x);  // 1 - e^{-w_x/v}

    // Non-type field at rate 1/F: full survival divided by the type slice's.
    const double ln_rate_f = -ln_f;
    const double ls_nontype = std::min(0.0, spectra->full.log_survival(ln_v, ln_rate_f) -
                                                spectra->type_slice.log_survival(ln_v, ln_rate_f));
    // Type non-mates: conditioned away from the encoder cell, and the
    // truth's own factor is divided back out.
    const double rate_tn = std::exp(-ln_f) * (1.0 - inv_m) /
                           std::max(1e-300, 1.0 - std::exp(-ln_f) * inv_m);
    double ls_typenon = 0.0;
    if (rate_tn > 0.0) {
      const double ln_rate_tn = std::log(rate_tn);
      ls_typenon = spectra->type_slice.log_survival(ln_v, ln_rate_tn) -
                   std::log1p(-std::min(rate_tn * truth_term, 1.0 - 1e-16));
      ls_typenon = std::min(0.0, ls_typenon);
    }
    // Mates: K-1 certain bin members drawn uniformly from the type class.
    double ls_mate = 0.0;
    if (k_cell > 1.5) {
      const double lam_type = spectra->type_slice.log_lambda(ln_v);
      double lam_type_star = -1e300;
      if (lam_type > 30.0) {
        lam_type_star = lam_type;  // the truth's unit term is lost in the noise
      } else if (lam_type > -1e299) {
        const double d = std::exp(lam_type) - truth_term;
        lam_type_star = d <= 0.0 ? -1e300 : std::log(d);
      }
      if (lam_type_star > -1e299) {
        const double ratio = std::exp(lam_type_star - ln_type_size);
        ls_mate = (k_cell - 1.0) * std::log1p(-std::min(ratio, 1.0 - 1e-300));
      }
    }

    const double survive = std::exp(ls_nontype + ls_typenon + ls_mate);
    if (rng.uniform01() < survive) return;  // truth wins: both correct

    seq_err = true;
    const double q_nt = -std::expm1(ls_nontype);
    const double q_tn = -std::expm1(ls_typenon);
    const double q_mate = -std::expm1(ls_mate);
    const double total = q_nt + q_tn + q_mate;
    const double pick = rng.uniform01() * (total > 0.0 ? total : 1.0);
    if (pick < q_nt) {
      // Fresh field member: its message bin is uniform.
      msg_err = rng.uniform01() >= inv_m;
    } else if (pick < q_nt + q_tn) {
      msg_err = true;  // type non-mate: message bin certainly differs
    } else {
      msg_err = false;  // mate shares the message bin
    }
  }
};

}  // namespace

P2PSimResult p2p_simulate(const P2PSetup& setup, double rate, const LogTermPolicy& policy,
                          std::int64_t trials, Rng& rng, const P2PSimOptions& options) {
  if (trials < 2) throw std::invalid_argument("p2p_simulate: trials must be >= 2");
  const double dn = static_cast<double>(setup.n);
  const double log2_m = options.force_log2_m ? *options.force_log2_m : dn * std::max(0.0, rate);
  const double log2_f =
      options.force_log2_f ? *options.force_log2_f : p2p_rtilde(setup, policy).total_bits;

  const double log_space = dn * std::log2(static_cast<double>(setup.input.size()));
  P2PSimOptions::Method method = options.method;
  if (method == P2PSimOptions::Method::auto_select)
    method = log_space <= std::log2(static_cast<double>(options.brute_space_limit))
                 ? P2PSimOptions::Method::brute
                 : P2PSimOptions::Method::lazy;

  std::shared_ptr<BruteSim> brute;
  std::shared_ptr<LazySim> lazy;
  if (method == P2PSimOptions::Method::brute)
    brute = std::make_shared<BruteSim>(setup, log2_m, log2_f, options.brute_space_limit);
  else
    lazy = std::make_shared<LazySim>(setup, log2_m, log2_f);

  constexpr std::int64_t kBlock = 512;
  const std::int64_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> block_seed(static_cast<std::size_t>(blocks));
  for (auto& s : block_seed) s = rng.next_u64();

  struct Tally {
    std::int64_t msg = 0, seq = 0, enc = 0;
  };
  auto run_block = [&](std::int64_t b) {
    Rng local(block_seed[static_cast<std::size_t>(b)]);
    const std::int64_t lo = b * kBlock, hi = std::min(trials, lo + kBlock);
    Tally t;
    std::vector<std::int64_t> bm, bf;
    std::vector<int> y;
    for (std::int64_t i = lo; i < hi; ++i) {
      bool msg_err = false, seq_err = false, enc_fail = false;
      if (brute)
        brute->trial(local, bm, bf, y, msg_err, seq_err, enc_fail);
      else
        lazy->trial(local, msg_err, seq_err, enc_fail);
      t.msg += msg_err ? 1 : 0;
      t.seq += seq_err ? 1 : 0;
      t.enc += enc_fail ? 1 : 0;
    }
    return t;
  };

  Tally total;
  if (options.workers <= 1) {
    for (std::int64_t b = 0; b < blocks; ++b) {
      const Tally t = run_block(b);
      total.msg += t.msg;
      total.seq += t.seq;
      total.enc += t.enc;
    }
  } else {
    std::vector<std::future<Tally>> futs;
    for (std::int64_t b = 0; b < blocks; ++b)
      futs.push_back(std::async(std::launch::async, run_block, b));
    for (auto& f : futs) {
      const Tally t = f.get();
      total.msg += t.msg;
      total.seq += t.seq;
      total.enc += t.enc;
    }
  }

  constexpr double z99 = 2.5758293035489004;
  auto estimate = [&](std::int64_t count) {
    McEstimate e;
    e.trials = trials;
    e.estimate = static_cast<double>(count) / static_cast<double>(trials);
    e.half_width = z99 * std::sqrt(std::max(0.0, e.estimate * (1.0 - e.estimate)) /
                                   static_cast<double>(trials));
    return e;
  };
  P2PSimResult out;
  out.message_error = estimate(total.msg);
  out.sequence_error = estimate(total.seq);
  out.encoder_failures = total.enc;
  out.method = method == P2PSimOptions::Method::brute ? "brute" : "lazy";
  return out;
}

}  // namespace randbin
