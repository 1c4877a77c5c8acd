// Batch front end: validates experiment configs, runs sweeps with seeded
// reproducibility, and emits CSV/JSON tables. Exit codes: 0 success,
// 2 schema violation, 3 guard violation, 4 I/O failure.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "randbin/errors.hpp"
#include "randbin/serialization.hpp"

using namespace randbin;
using nlohmann::json;

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class RowWriter {
 public:
  RowWriter(const std::string& path, std::vector<std::string> columns)
      : columns_(std::move(columns)) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::ios_base::failure("cannot open output file: " + path);
    }
    std::string header;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) header += ',';
      header += columns_[i];
    }
    line(header);
  }

  void row(const std::vector<std::string>& values) {
    if (values.size() != columns_.size())
      throw std::logic_error("row width does not match the header");
    std::string text;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) text += ',';
      text += values[i];
    }
    line(text);
  }

 private:
  void line(const std::string& text) {
    std::ostream& out = file_ ? *file_ : std::cout;
    out << text << '\n';
    out.flush();  // partial progress survives interruption
    if (file_ && !*file_) throw std::ios_base::failure("write failure");
  }

  std::vector<std::string> columns_;
  std::unique_ptr<std::ofstream> file_;
};

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%016" PRIx64, h);
  return buf;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("JSON parse error: ") + e.what(), path);
  }
  return j;
}

int env_workers(int fallback) {
  if (const char* env = std::getenv("RANDBIN_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return fallback;
}

// --------------------------------------------------------------------------
// Payload assembly shared by `run` and `validate`.

struct BinningExperiment {
  JointPmf source;
  BinningSpec spec;
  JointPmf t_z;                       // side-axis reference for the tv bound
  std::optional<JointPmf> t_joint;    // decode metric (thm2 only)
  std::string t_z_label;
  std::string t_joint_label;
  std::vector<double> gamma_grid;
  std::int64_t mc_trials = 20000;
};

JointPmf product_of_marginals(const JointPmf& p) {
  std::vector<std::vector<double>> singles;
  for (int i = 0; i < p.rank(); ++i) {
    const JointPmf m = p.marginal(std::vector<int>{i});
    singles.emplace_back(m.probs().begin(), m.probs().end());
  }
  std::vector<double> table(p.size());
  std::vector<int> point(static_cast<std::size_t>(p.rank()));
  for (std::size_t flat = 0; flat < p.size(); ++flat) {
    p.unflatten(flat, point);
    double v = 1.0;
    for (int i = 0; i < p.rank(); ++i)
      v *= singles[static_cast<std::size_t>(i)]
                  [static_cast<std::size_t>(point[static_cast<std::size_t>(i)])];
    table[flat] = v;
  }
  double s = 0.0;
  for (double x : table) s += x;
  table.back() += 1.0 - s;
  return JointPmf(p.axes(), std::move(table));
}

BinningExperiment binning_experiment_from_payload(const json& payload, bool with_t_joint) {
  BinningExperiment ex{joint_from_json(payload.contains("source") ? payload["source"] : json(),
                                       "payload.source"),
                       {},
                       JointPmf({}, {1.0}),
                       std::nullopt,
                       "",
                       "",
                       {},
                       20000};

  const json& jspec = payload.contains("spec") ? payload["spec"] : json();
  if (!jspec.is_array() || jspec.empty())
    throw SchemaError("spec must be a nonempty array of [size, bins] pairs", "payload.spec");
  for (std::size_t v = 0; v < jspec.size(); ++v) {
    const std::string where = "payload.spec[" + std::to_string(v) + "]";
    if (!jspec[v].is_array() || jspec[v].size() != 2)
      throw SchemaError("expected [size, bins]", where);
    const int size = jspec[v][0].get<int>();
    const int bins = jspec[v][1].get<int>();
    if (size < 1 || bins < 1) throw SchemaError("size and bins must be >= 1", where);
    if (static_cast<int>(v) >= ex.source.rank() || ex.source.axis(static_cast<int>(v)).size != size)
      throw SchemaError("part size does not match the source axis", where);
    ex.spec.parts.push_back({ex.source.axis(static_cast<int>(v)), bins});
  }

  std::vector<int> side_axes;
  for (int i = ex.spec.num_parts(); i < ex.source.rank(); ++i) side_axes.push_back(i);

  const json& jtz = payload.contains("t_z") ? payload["t_z"] : json("marginal");
  if (jtz.is_string()) {
    ex.t_z_label = jtz.get<std::string>();
    if (ex.t_z_label == "marginal")
      ex.t_z = ex.source.marginal(side_axes);
    else if (ex.t_z_label == "uniform") {
      std::vector<Alphabet> axes;
      for (int i : side_axes) axes.push_back(ex.source.axis(i));
      ex.t_z = axes.empty() ? JointPmf({}, {1.0}) : JointPmf::uniform(std::move(axes));
    } else {
      throw SchemaError("t_z must be 'marginal', 'uniform' or a pmf object", "payload.t_z");
    }
  } else {
    ex.t_z_label = "explicit";
    const Pmf flat = pmf_from_json(jtz, "payload.t_z", "Zflat");
    std::size_t cells = 1;
    std::vector<Alphabet> axes;
    for (int i : side_axes) {
      axes.push_back(ex.source.axis(i));
      cells *= static_cast<std::size_t>(ex.source.axis(i).size);
    }
    if (flat.probs().size() != cells)
      throw SchemaError("t_z length must match the side alphabet product", "payload.t_z");
    ex.t_z = JointPmf(std::move(axes),
                      std::vector<double>(flat.probs().begin(), flat.probs().end()));
  }

  if (with_t_joint) {
    const json& jt = payload.contains("t_joint") ? payload["t_joint"] : json("match");
    if (jt.is_string()) {
      ex.t_joint_label = jt.get<std::string>();
      if (ex.t_joint_label == "match")
        ex.t_joint = ex.source;
      else if (ex.t_joint_label == "iid_marginals")
        ex.t_joint = product_of_marginals(ex.source);
      else if (ex.t_joint_label == "uniform")
        ex.t_joint = JointPmf::uniform(ex.source.axes());
      else
        throw SchemaError("t_joint must be 'match', 'iid_marginals', 'uniform' or a joint pmf",
                          "payload.t_joint");
    } else {
      ex.t_joint_label = "explicit";
      JointPmf t = joint_from_json(jt, "payload.t_joint");
      if (t.size() != ex.source.size())
        throw SchemaError("t_joint shape must match the source", "payload.t_joint");
      ex.t_joint = JointPmf(ex.source.axes(),
                            std::vector<double>(t.probs().begin(), t.probs().end()));
    }
  }

  const json& jgrid = payload.contains("gamma_grid") ? payload["gamma_grid"] : json();
  if (!jgrid.is_array() || jgrid.empty())
    throw SchemaError("gamma_grid must be a nonempty array", "payload.gamma_grid");
  for (std::size_t i = 0; i < jgrid.size(); ++i) {
    const double g = jgrid[i].get<double>();
    if (!(g > 0.0))
      throw SchemaError("gamma must be positive", "payload.gamma_grid[" + std::to_string(i) + "]");
    ex.gamma_grid.push_back(g);
  }
  if (payload.contains("mc_trials")) ex.mc_trials = payload["mc_trials"].get<std::int64_t>();
  return ex;
}

Channel channel_from_payload(const json& payload, const char* key) {
  if (!payload.contains(key)) throw SchemaError(std::string("missing ") + key, "payload");
  return channel_from_json(payload[key], std::string("payload.") + key);
}

std::vector<std::int64_t> n_grid_from_payload(const json& payload) {
  std::vector<std::int64_t> grid;
  if (payload.contains("n_grid")) {
    for (const auto& v : payload["n_grid"]) grid.push_back(v.get<std::int64_t>());
  } else if (payload.contains("n")) {
    grid.push_back(payload["n"].get<std::int64_t>());
  }
  if (grid.empty()) throw SchemaError("payload needs n or n_grid", "payload");
  for (std::int64_t n : grid)
    if (n < 2) throw SchemaError("blocklengths must be >= 2", "payload.n_grid");
  return grid;
}

// --------------------------------------------------------------------------
// Run routines (one per kind).

void run_thm1(const ExperimentConfig& cfg) {
  const BinningExperiment ex = binning_experiment_from_payload(cfg.payload, false);
  const int workers = env_workers(cfg.workers);
  const double exact = exact_expected_tv(ex.source, ex.spec);
  McEstimate mc{};
  if (ex.mc_trials >= 2) {
    Rng rng = Rng::substream(cfg.seed, 0);
    mc = mc_expected_tv(ex.source, ex.spec, ex.mc_trials, rng, workers);
  }
  RowWriter out(cfg.output_path,
                {"config_hash", "seed", "gamma", "t_z", "bound", "exact_tv", "mc_tv",
                 "mc_halfwidth"});
  for (const double gamma : ex.gamma_grid) {
    const TvBoundParams params{&ex.source, &ex.spec, &ex.t_z, gamma};
    out.row({hash_hex(cfg.config_hash), std::to_string(cfg.seed), format_value(gamma),
             ex.t_z_label, format_value(expected_tv_bound(params)), format_value(exact),
             format_value(mc.estimate), format_value(mc.half_width)});
  }
}

void run_thm2(const ExperimentConfig& cfg) {
  const BinningExperiment ex = binning_experiment_from_payload(cfg.payload, true);
  const int workers = env_workers(cfg.workers);
  const JointPmf& t = *ex.t_joint;
  const double lower = correct_decode_lower_bound(ex.source, t, ex.spec);
  const double exact = exact_expected_correct(ex.source, t, ex.spec);
  McEstimate mc{};
  if (ex.mc_trials >= 2) {
    Rng rng = Rng::substream(cfg.seed, 0);
    mc = mc_error_prob(ex.source, t, ex.spec, ex.mc_trials, rng, workers);
  }
  RowWriter out(cfg.output_path,
                {"config_hash", "seed", "gamma", "t_joint", "lower_bound", "exact_correct",
                 "upper_bound", "mc_error", "mc_halfwidth"});
  for (const double gamma : ex.gamma_grid) {
    const DecodeBoundParams params{&t, &ex.spec, gamma};
    out.row({hash_hex(cfg.config_hash), std::to_string(cfg.seed), format_value(gamma),
             ex.t_joint_label, format_value(lower), format_value(exact),
             format_value(decode_error_bound(ex.source, params)), format_value(mc.estimate),
             format_value(mc.half_width)});
  }
}

Pmf input_from_payload(const json& payload, int size) {
  if (!payload.contains("input") || payload["input"].is_string()) {
    if (payload.contains("input") && payload["input"].get<std::string>() != "uniform")
      throw SchemaError("input must be 'uniform' or a pmf object", "payload.input");
    return Pmf::uniform({"X", size});
  }
  Pmf p = pmf_from_json(payload["input"], "payload.input", "X");
  if (p.size() != size) throw SchemaError("input size must match the channel", "payload.input");
  return p;
}

bool json_format(const json& payload) {
  return payload.contains("format") && payload["format"] == "json";
}

void emit_json_records(const std::string& path, const json& records) {
  if (path.empty()) {
    std::cout << records.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open output file: " + path);
  out << records.dump(2) << '\n';
}

// Decomposed rate record: every number traces back to a module operation.
json p2p_record(const RateResult& r, std::int64_t n, double eps) {
  const double dn = static_cast<double>(n);
  return json{{"n", n},
              {"eps", eps},
              {"rate", r.rate},
              {"dispersion_term", -r.rtilde.dispersion_bits / dn},
              {"log_term", -(r.cap_log_bits + r.rtilde.log_bits) / dn},
              {"components",
               {{"type_entropy_bits", r.type_entropy_bits},
                {"mean_bits", r.rtilde.mean_bits},
                {"dispersion_bits", r.rtilde.dispersion_bits},
                {"log_bits", r.rtilde.log_bits},
                {"cap_log_bits", r.cap_log_bits},
                {"eps_gauss", r.rtilde.eps_gauss},
                {"per_letter_variance", r.rtilde.per_letter_variance},
                {"clamped", r.clamped}}}};
}

void run_p2p(const ExperimentConfig& cfg) {
  const Channel channel = channel_from_payload(cfg.payload, "channel");
  const Pmf input = input_from_payload(cfg.payload, channel.input().size);
  const double eps = cfg.payload.contains("eps") ? cfg.payload["eps"].get<double>() : 0.0;
  const LogTermPolicy policy = policy_from_json(
      cfg.payload.contains("policy") ? cfg.payload["policy"] : json(), "payload.policy");
  const std::vector<std::int64_t> grid = n_grid_from_payload(cfg.payload);
  if (json_format(cfg.payload)) {
    json records = json::array();
    for (const std::int64_t n : grid)
      records.push_back(p2p_record(p2p_rate(P2PSetup{input, channel, n, eps}, policy), n, eps));
    emit_json_records(cfg.output_path, records);
    return;
  }
  const std::int64_t sim_trials =
      cfg.payload.contains("sim_trials") ? cfg.payload["sim_trials"].get<std::int64_t>() : 0;
  const double sim_gap =
      cfg.payload.contains("sim_rate_gap") ? cfg.payload["sim_rate_gap"].get<double>() : 0.2;
  std::vector<std::string> columns{"config_hash", "seed", "n", "eps", "rate", "clamped",
                                   "mean_bits", "dispersion_bits", "log_bits",
                                   "cap_log_bits", "type_entropy_bits"};
  if (sim_trials >= 2)
    for (const char* extra : {"sim_rate", "msg_error", "msg_halfwidth", "seq_error",
                              "encoder_failures"})
      columns.emplace_back(extra);
  RowWriter out(cfg.output_path, columns);
  const int workers = env_workers(cfg.workers);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::int64_t n = grid[i];
    const P2PSetup setup{input, channel, n, eps};
    const RateResult r = p2p_rate(setup, policy);
    std::vector<std::string> row{
        hash_hex(cfg.config_hash), std::to_string(cfg.seed), std::to_string(n),
        format_value(eps), format_value(r.rate), r.clamped ? "1" : "0",
        format_value(r.rtilde.mean_bits), format_value(r.rtilde.dispersion_bits),
        format_value(r.rtilde.log_bits), format_value(r.cap_log_bits),
        format_value(r.type_entropy_bits)};
    if (sim_trials >= 2) {
      const double sim_rate = std::max(0.0, r.rate - sim_gap);
      Rng rng = Rng::substream(cfg.seed, i);
      P2PSimOptions options;
      options.workers = workers;
      const P2PSimResult sim = p2p_simulate(setup, sim_rate, policy, sim_trials, rng, options);
      row.push_back(format_value(sim_rate));
      row.push_back(format_value(sim.message_error.estimate));
      row.push_back(format_value(sim.message_error.half_width));
      row.push_back(format_value(sim.sequence_error.estimate));
      row.push_back(std::to_string(sim.encoder_failures));
    }
    out.row(row);
  }
}

void run_bc(const ExperimentConfig& cfg) {
  if (!cfg.payload.contains("q_u1u2x")) throw SchemaError("missing q_u1u2x", "payload");
  JointPmf q = joint_from_json(cfg.payload["q_u1u2x"], "payload.q_u1u2x");
  if (q.rank() != 3) throw SchemaError("q_u1u2x must have three axes", "payload.q_u1u2x");
  const Channel channel = channel_from_payload(cfg.payload, "channel");
  q = JointPmf({{"U1", q.axis(0).size}, {"U2", q.axis(1).size}, channel.input()},
               std::vector<double>(q.probs().begin(), q.probs().end()));
  const std::int64_t n = cfg.payload.contains("n") ? cfg.payload["n"].get<std::int64_t>() : 0;
  const double eps = cfg.payload.contains("eps") ? cfg.payload["eps"].get<double>() : 0.0;
  const int directions =
      cfg.payload.contains("directions") ? cfg.payload["directions"].get<int>() : 64;
  const LogTermPolicy policy = policy_from_json(
      cfg.payload.contains("policy") ? cfg.payload["policy"] : json(), "payload.policy");
  const BCRegionCalculator calc(BCSetup{q, channel, n, eps}, policy);
  const auto dirs = quadrant_directions(directions);
  const auto pts = calc.boundary(dirs);
  RowWriter out(cfg.output_path,
                {"config_hash", "seed", "index", "d1", "d2", "r1", "r2"});
  for (std::size_t i = 0; i < pts.size(); ++i)
    out.row({hash_hex(cfg.config_hash), std::to_string(cfg.seed), std::to_string(i),
             format_value(dirs[i].first), format_value(dirs[i].second),
             format_value(pts[i].first), format_value(pts[i].second)});
}

void run_wiretap(const ExperimentConfig& cfg) {
  if (!cfg.payload.contains("q_ux")) throw SchemaError("missing q_ux", "payload");
  JointPmf q = joint_from_json(cfg.payload["q_ux"], "payload.q_ux");
  if (q.rank() != 2) throw SchemaError("q_ux must have two axes", "payload.q_ux");
  const Channel channel = channel_from_payload(cfg.payload, "channel");
  if (channel.outputs().size() != 2)
    throw SchemaError("wiretap channel needs outputs (Y, Z)", "payload.channel");
  q = JointPmf({{"U", q.axis(0).size}, channel.input()},
               std::vector<double>(q.probs().begin(), q.probs().end()));
  const double eps_r = cfg.payload.contains("eps_r") ? cfg.payload["eps_r"].get<double>() : 0.0;
  const double eps_sec =
      cfg.payload.contains("eps_sec") ? cfg.payload["eps_sec"].get<double>() : 0.0;
  const double theta = cfg.payload.contains("theta") ? cfg.payload["theta"].get<double>() : 0.5;
  const LogTermPolicy policy = policy_from_json(
      cfg.payload.contains("policy") ? cfg.payload["policy"] : json(), "payload.policy");
  const std::vector<std::int64_t> grid = n_grid_from_payload(cfg.payload);
  if (json_format(cfg.payload)) {
    json records = json::array();
    for (const std::int64_t n : grid) {
      const WiretapRateResult r =
          wiretap_rate(WiretapSetup{q, channel, n, eps_r, eps_sec, theta}, policy);
      const double dn = static_cast<double>(n);
      const double disp_rel =
          r.v_y > 0.0 ? std::sqrt(r.v_y / dn) * std_q_inv(r.eps_gauss_rel) : 0.0;
      const double disp_sec =
          r.v_z > 0.0 ? std::sqrt(r.v_z / dn) * std_q_inv(r.eps_gauss_sec) : 0.0;
      const double binding_log = r.type_budget_bits <= r.secrecy_budget_bits
                                     ? r.type_cap_log_bits
                                     : r.secrecy_cap_log_bits;
      records.push_back(json{{"n", n},
                             {"theta", theta},
                             {"rate", r.rate},
                             {"dispersion_term", -(disp_rel + disp_sec)},
                             {"log_term", -(binding_log + r.dec_log_bits) / dn},
                             {"components",
                              {{"type_budget_bits", r.type_budget_bits},
                               {"secrecy_budget_bits", r.secrecy_budget_bits},
                               {"rtilde_bits", r.rtilde_bits},
                               {"v_y", r.v_y},
                               {"v_z", r.v_z},
                               {"eps_gauss_rel", r.eps_gauss_rel},
                               {"eps_gauss_sec", r.eps_gauss_sec},
                               {"clamped", r.clamped}}}});
    }
    emit_json_records(cfg.output_path, records);
    return;
  }
  const std::int64_t sim_trials =
      cfg.payload.contains("sim_trials") ? cfg.payload["sim_trials"].get<std::int64_t>() : 0;
  const bool allow_estimator =
      cfg.payload.contains("allow_estimator") && cfg.payload["allow_estimator"].get<bool>();
  std::vector<std::string> columns{"config_hash", "seed", "n", "theta", "rate", "clamped",
                                   "type_budget_bits", "secrecy_budget_bits", "rtilde_bits",
                                   "v_y", "v_z"};
  if (sim_trials >= 2)
    for (const char* extra : {"tv", "tv_halfwidth", "tv_bias", "sim_error", "sim_method"})
      columns.emplace_back(extra);
  RowWriter out(cfg.output_path, columns);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::int64_t n = grid[i];
    const WiretapSetup setup{q, channel, n, eps_r, eps_sec, theta};
    const WiretapRateResult r = wiretap_rate(setup, policy);
    std::vector<std::string> row{
        hash_hex(cfg.config_hash), std::to_string(cfg.seed), std::to_string(n),
        format_value(theta), format_value(r.rate), r.clamped ? "1" : "0",
        format_value(r.type_budget_bits), format_value(r.secrecy_budget_bits),
        format_value(r.rtilde_bits), format_value(r.v_y), format_value(r.v_z)};
    if (sim_trials >= 2) {
      Rng rng = Rng::substream(cfg.seed, i);
      WiretapSimOptions options;
      options.allow_estimator = allow_estimator;
      options.workers = env_workers(cfg.workers);
      const WiretapSimResult sim =
          wiretap_simulate_secrecy(setup, r.rate, policy, sim_trials, rng, options);
      row.push_back(format_value(sim.tv_estimate));
      row.push_back(format_value(sim.tv_half_width));
      row.push_back(format_value(sim.tv_bias_bound));
      row.push_back(format_value(sim.error_estimate));
      row.emplace_back(sim.method);
    }
    out.row(row);
  }
}

void run_config(const ExperimentConfig& cfg) {
  if (cfg.kind == "thm1")
    run_thm1(cfg);
  else if (cfg.kind == "thm2")
    run_thm2(cfg);
  else if (cfg.kind == "p2p")
    run_p2p(cfg);
  else if (cfg.kind == "bc")
    run_bc(cfg);
  else
    run_wiretap(cfg);
}

// Schema plus guard prechecks without executing anything.
std::vector<std::string> validate_config(const json& raw) {
  std::vector<std::string> report;
  ExperimentConfig cfg;
  try {
    cfg = config_from_json(raw);
  } catch (const SchemaError& e) {
    report.push_back(e.what());
    return report;
  }
  try {
    if (cfg.kind == "thm1" || cfg.kind == "thm2") {
      const BinningExperiment ex =
          binning_experiment_from_payload(cfg.payload, cfg.kind == "thm2");
      const double log2_assignments = ex.spec.log2_assignment_count();
      if (log2_assignments > std::log2(1e6))
        report.push_back("enumeration guard: " + std::to_string(log2_assignments) +
                         " log2 assignments exceeds the exact-oracle limit of log2(1e6)");
    } else if (cfg.kind == "p2p") {
      const Channel channel = channel_from_payload(cfg.payload, "channel");
      input_from_payload(cfg.payload, channel.input().size);
      for (std::int64_t n : n_grid_from_payload(cfg.payload))
        if (n < 2) report.push_back("blocklength below 2");
      const double eps = cfg.payload.contains("eps") ? cfg.payload["eps"].get<double>() : 0.0;
      if (!(eps > 0.0 && eps < 1.0)) report.push_back("eps must lie in (0,1)");
    } else if (cfg.kind == "bc") {
      if (!cfg.payload.contains("q_u1u2x"))
        report.push_back("missing q_u1u2x");
      else
        joint_from_json(cfg.payload["q_u1u2x"], "payload.q_u1u2x");
      channel_from_payload(cfg.payload, "channel");
    } else if (cfg.kind == "wiretap") {
      if (!cfg.payload.contains("q_ux"))
        report.push_back("missing q_ux");
      else
        joint_from_json(cfg.payload["q_ux"], "payload.q_ux");
      channel_from_payload(cfg.payload, "channel");
    }
  } catch (const SchemaError& e) {
    report.push_back(e.what());
  } catch (const std::exception& e) {
    report.push_back(e.what());
  }
  return report;
}

json inline_config(const std::string& kind, const json& payload, std::uint64_t seed,
                   int workers, const std::string& out) {
  json cfg{{"kind", kind}, {"payload", payload}, {"seed", seed}, {"workers", workers}};
  if (!out.empty()) cfg["output_path"] = out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-blocklength random binning toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a config file without running");
  validate_cmd->add_option("file", config_path, "experiment config JSON")->required();

  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("file", config_path, "experiment config JSON")->required();

  // Inline variants mirror the config fields.
  struct InlineArgs {
    std::uint64_t seed = 1;
    std::int64_t trials = 20000;
    std::int64_t sim_trials = 0;
    bool allow_estimator = false;
    std::string out;
    std::vector<std::int64_t> n_grid;
    double eps = 0.1;
    double eps_r = 0.01, eps_sec = 0.01, theta = 0.5;
    double bsc_p = -1.0;
    std::string channel_file, source_file, q_file;
    std::vector<int> bins;
    std::vector<double> gammas{0.25, 0.5, 1.0, 2.0, 4.0};
    std::string t_z = "marginal", t_joint = "match", eps_adjust = "subtract_slack";
    int directions = 64;
    int workers = 1;
  } a;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", a.seed, "root seed (explicit, required for reproducibility)");
    cmd->add_option("--out", a.out, "output CSV path (default stdout)");
    cmd->add_option("--workers", a.workers, "worker threads");
  };

  auto* thm1_cmd = app.add_subcommand("thm1", "binning uniformity bound vs exact oracle");
  thm1_cmd->add_option("--source", a.source_file, "joint pmf JSON (parts first)")->required();
  thm1_cmd->add_option("--bins", a.bins, "bins per part")->required();
  thm1_cmd->add_option("--gamma", a.gammas, "gamma grid (bits)");
  thm1_cmd->add_option("--t-z", a.t_z, "marginal|uniform");
  thm1_cmd->add_option("--trials", a.trials, "Monte Carlo trials");
  add_common(thm1_cmd);

  auto* thm2_cmd = app.add_subcommand("thm2", "decoding bounds vs exact oracle");
  thm2_cmd->add_option("--source", a.source_file, "joint pmf JSON (parts first)")->required();
  thm2_cmd->add_option("--bins", a.bins, "bins per part")->required();
  thm2_cmd->add_option("--gamma", a.gammas, "gamma grid (bits)");
  thm2_cmd->add_option("--t-joint", a.t_joint, "match|iid_marginals|uniform");
  thm2_cmd->add_option("--trials", a.trials, "Monte Carlo trials");
  add_common(thm2_cmd);

  auto* p2p_cmd = app.add_subcommand("p2p", "point-to-point second-order rate");
  p2p_cmd->add_option("--n", a.n_grid, "blocklength grid")->required();
  p2p_cmd->add_option("--eps", a.eps, "target error")->required();
  p2p_cmd->add_option("--bsc", a.bsc_p, "binary symmetric channel crossover");
  p2p_cmd->add_option("--channel", a.channel_file, "channel JSON file");
  p2p_cmd->add_option("--eps-adjust", a.eps_adjust, "subtract_slack|none");
  p2p_cmd->add_option("--trials", a.sim_trials,
                      "protocol simulation trials (0 disables the simulation columns)");
  add_common(p2p_cmd);

  auto* bc_cmd = app.add_subcommand("bc-region", "broadcast rate-region boundary");
  bc_cmd->add_option("--q", a.q_file, "q(u1,u2,x) joint pmf JSON")->required();
  bc_cmd->add_option("--channel", a.channel_file, "two-output channel JSON")->required();
  bc_cmd->add_option("--n", a.n_grid, "blocklength")->required();
  bc_cmd->add_option("--eps", a.eps, "target error")->required();
  bc_cmd->add_option("--directions", a.directions, "boundary scan directions");
  bc_cmd->add_option("--eps-adjust", a.eps_adjust, "subtract_slack|none");
  add_common(bc_cmd);

  auto* wt_cmd = app.add_subcommand("wiretap", "wiretap secrecy rate");
  wt_cmd->add_option("--q", a.q_file, "q(u,x) joint pmf JSON")->required();
  wt_cmd->add_option("--channel", a.channel_file, "channel JSON with outputs (Y, Z)")->required();
  wt_cmd->add_option("--n", a.n_grid, "blocklength grid")->required();
  wt_cmd->add_option("--eps-r", a.eps_r, "reliability target");
  wt_cmd->add_option("--eps-sec", a.eps_sec, "secrecy target");
  wt_cmd->add_option("--theta", a.theta, "budget split in (0,1)");
  wt_cmd->add_option("--eps-adjust", a.eps_adjust, "subtract_slack|none");
  wt_cmd->add_option("--trials", a.sim_trials,
                     "secrecy simulation trials (0 disables the simulation columns)");
  wt_cmd->add_flag("--allow-estimator", a.allow_estimator,
                   "permit the plug-in estimator beyond the exact-path guard");
  add_common(wt_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) {
      const auto report = validate_config(load_json_file(config_path));
      for (const auto& line : report) std::cout << line << '\n';
      return report.empty() ? 0 : 2;
    }

    json cfg_json;
    if (run_cmd->parsed()) {
      cfg_json = load_json_file(config_path);
    } else if (thm1_cmd->parsed() || thm2_cmd->parsed()) {
      const json source = load_json_file(a.source_file);
      const JointPmf joint = joint_from_json(source, "source");
      json spec = json::array();
      for (std::size_t v = 0; v < a.bins.size(); ++v) {
        if (static_cast<int>(v) >= joint.rank())
          throw SchemaError("more bins than source axes", "--bins");
        spec.push_back({joint.axis(static_cast<int>(v)).size, a.bins[v]});
      }
      json payload{{"source", source},
                   {"spec", spec},
                   {"gamma_grid", a.gammas},
                   {"mc_trials", a.trials}};
      if (thm1_cmd->parsed()) {
        payload["t_z"] = a.t_z;
        cfg_json = inline_config("thm1", payload, a.seed, a.workers, a.out);
      } else {
        payload["t_z"] = a.t_z;
        payload["t_joint"] = a.t_joint;
        cfg_json = inline_config("thm2", payload, a.seed, a.workers, a.out);
      }
    } else if (p2p_cmd->parsed()) {
      json channel;
      if (a.bsc_p >= 0.0)
        channel = to_json(Channel::bsc(a.bsc_p));
      else if (!a.channel_file.empty())
        channel = load_json_file(a.channel_file);
      else
        throw SchemaError("p2p needs --bsc or --channel", "p2p");
      json payload{{"channel", channel},
                   {"eps", a.eps},
                   {"n_grid", a.n_grid},
                   {"policy", {{"eps_adjust", a.eps_adjust}}}};
      if (a.sim_trials > 0) payload["sim_trials"] = a.sim_trials;
      cfg_json = inline_config("p2p", payload, a.seed, a.workers, a.out);
    } else if (bc_cmd->parsed()) {
      json payload{{"q_u1u2x", load_json_file(a.q_file)},
                   {"channel", load_json_file(a.channel_file)},
                   {"n", a.n_grid.front()},
                   {"eps", a.eps},
                   {"directions", a.directions},
                   {"policy", {{"eps_adjust", a.eps_adjust}}}};
      cfg_json = inline_config("bc", payload, a.seed, a.workers, a.out);
    } else {
      json payload{{"q_ux", load_json_file(a.q_file)},
                   {"channel", load_json_file(a.channel_file)},
                   {"n_grid", a.n_grid},
                   {"eps_r", a.eps_r},
                   {"eps_sec", a.eps_sec},
                   {"theta", a.theta},
                   {"policy", {{"eps_adjust", a.eps_adjust}}}};
      if (a.sim_trials > 0) payload["sim_trials"] = a.sim_trials;
      if (a.allow_estimator) payload["allow_estimator"] = true;
      cfg_json = inline_config("wiretap", payload, a.seed, a.workers, a.out);
    }

    run_config(config_from_json(cfg_json));
    return 0;
  } catch (const GuardError& e) {
    std::cerr << "guard violation: " << e.what() << '\n';
    return 3;
  } catch (const SchemaError& e) {
    std::cerr << "schema violation: " << e.what() << '\n';
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
