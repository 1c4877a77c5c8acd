#include "randbin/serialization.hpp"

#include <cmath>

#include "randbin/errors.hpp"

namespace randbin {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + key + "'", where);
  return *it;
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError("expected a number", where);
  return j.get<double>();
}

std::int64_t integer_at(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SchemaError("expected an integer", where);
  return j.get<std::int64_t>();
}

std::vector<double> prob_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError("expected an array of probabilities", where);
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double v = number_at(j[i], where + "[" + std::to_string(i) + "]");
    if (!(v >= 0.0) || !std::isfinite(v))
      throw SchemaError("probability must be finite and nonnegative",
                        where + "[" + std::to_string(i) + "]");
    out.push_back(v);
  }
  const double mass = [&] {
    double s = 0.0;
    for (double v : out) s += v;
    return s;
  }();
  if (std::fabs(mass - 1.0) > kPmfMassTolerance)
    throw SchemaError("probabilities sum to " + std::to_string(mass) +
                          ", outside the 1e-12 tolerance",
                      where);
  return out;
}

}  // namespace

nlohmann::json to_json(const Channel& channel) {
  json rows = json::array();
  for (int x = 0; x < channel.input().size; ++x)
    rows.push_back(std::vector<double>(channel.row(x).begin(), channel.row(x).end()));
  json sizes = json::array();
  for (const auto& a : channel.outputs()) sizes.push_back(a.size);
  return json{{"input_size", channel.input().size}, {"output_sizes", sizes}, {"rows", rows}};
}

nlohmann::json to_json(const JointPmf& joint) {
  json sizes = json::array();
  for (const auto& a : joint.axes()) sizes.push_back(a.size);
  return json{{"axis_sizes", sizes},
              {"probs", std::vector<double>(joint.probs().begin(), joint.probs().end())}};
}

nlohmann::json to_json(const Pmf& pmf) {
  return json{{"probs", std::vector<double>(pmf.probs().begin(), pmf.probs().end())}};
}

nlohmann::json to_json(const NType& type) {
  return json{{"n", type.n}, {"counts", type.counts}};
}

Channel channel_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError("expected an object", where);
  const std::int64_t input_size = integer_at(require(j, "input_size", where), where + ".input_size");
  if (input_size < 1) throw SchemaError("input_size must be >= 1", where + ".input_size");
  const json& jsizes = require(j, "output_sizes", where);
  if (!jsizes.is_array() || jsizes.empty())
    throw SchemaError("output_sizes must be a nonempty array", where + ".output_sizes");
  std::vector<Alphabet> outputs;
  std::size_t cells = 1;
  for (std::size_t i = 0; i < jsizes.size(); ++i) {
    const std::int64_t s =
        integer_at(jsizes[i], where + ".output_sizes[" + std::to_string(i) + "]");
    if (s < 1)
      throw SchemaError("output size must be >= 1",
                        where + ".output_sizes[" + std::to_string(i) + "]");
    outputs.push_back({"Y" + std::to_string(i + 1), static_cast<int>(s)});
    cells *= static_cast<std::size_t>(s);
  }
  const json& jrows = require(j, "rows", where);
  if (!jrows.is_array() || jrows.size() != static_cast<std::size_t>(input_size))
    throw SchemaError("rows must hold one row per input symbol", where + ".rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t x = 0; x < jrows.size(); ++x) {
    const std::string rw = where + ".rows[" + std::to_string(x) + "]";
    std::vector<double> row = prob_vector(jrows[x], rw);
    if (row.size() != cells) throw SchemaError("row length must match the output product", rw);
    rows.push_back(std::move(row));
  }
  if (outputs.size() == 1) outputs[0].name = "Y";
  return Channel({"X", static_cast<int>(input_size)}, std::move(outputs), std::move(rows));
}

JointPmf joint_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError("expected an object", where);
  const json& jsizes = require(j, "axis_sizes", where);
  if (!jsizes.is_array() || jsizes.empty())
    throw SchemaError("axis_sizes must be a nonempty array", where + ".axis_sizes");
  std::vector<Alphabet> axes;
  std::size_t cells = 1;
  for (std::size_t i = 0; i < jsizes.size(); ++i) {
    const std::int64_t s = integer_at(jsizes[i], where + ".axis_sizes[" + std::to_string(i) + "]");
    if (s < 1)
      throw SchemaError("axis size must be >= 1", where + ".axis_sizes[" + std::to_string(i) + "]");
    axes.push_back({"a" + std::to_string(i), static_cast<int>(s)});
    cells *= static_cast<std::size_t>(s);
  }
  std::vector<double> probs = prob_vector(require(j, "probs", where), where + ".probs");
  if (probs.size() != cells)
    throw SchemaError("probs length must match the product of axis_sizes", where + ".probs");
  return JointPmf(std::move(axes), std::move(probs));
}

Pmf pmf_from_json(const nlohmann::json& j, const std::string& where, std::string axis_name) {
  if (!j.is_object()) throw SchemaError("expected an object", where);
  std::vector<double> probs = prob_vector(require(j, "probs", where), where + ".probs");
  return Pmf({std::move(axis_name), static_cast<int>(probs.size())}, std::move(probs));
}

NType ntype_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError("expected an object", where);
  const std::int64_t n = integer_at(require(j, "n", where), where + ".n");
  const json& jcounts = require(j, "counts", where);
  if (!jcounts.is_array()) throw SchemaError("counts must be an array", where + ".counts");
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < jcounts.size(); ++i) {
    const std::int64_t c = integer_at(jcounts[i], where + ".counts[" + std::to_string(i) + "]");
    if (c < 0) throw SchemaError("counts must be nonnegative", where + ".counts[" + std::to_string(i) + "]");
    counts.push_back(c);
    total += c;
  }
  if (total != n) throw SchemaError("counts must sum to n", where + ".counts");
  return NType{{"A", static_cast<int>(counts.size())}, n, std::move(counts)};
}

LogTermPolicy policy_from_json(const nlohmann::json& j, const std::string& where) {
  LogTermPolicy policy;
  if (j.is_null()) return policy;
  if (!j.is_object()) throw SchemaError("expected an object", where);
  if (j.contains("c_multiplier")) {
    policy.c_multiplier = number_at(j["c_multiplier"], where + ".c_multiplier");
    if (policy.c_multiplier < 0.0)
      throw SchemaError("c_multiplier must be >= 0", where + ".c_multiplier");
  }
  if (j.contains("type_constant"))
    policy.type_constant_override = number_at(j["type_constant"], where + ".type_constant");
  const auto gamma = [&](const char* key, GammaRule& rule) {
    if (!j.contains(key)) return;
    const json& g = j[key];
    if (!g.is_array() || g.size() != 2)
      throw SchemaError("gamma rule must be [log2_coeff, constant]", where + "." + key);
    rule.log2_coeff = number_at(g[0], where + "." + key + "[0]");
    rule.constant = number_at(g[1], where + "." + key + "[1]");
  };
  gamma("gamma_apx", policy.gamma_apx);
  gamma("gamma_dec", policy.gamma_dec);
  if (j.contains("eps_adjust")) {
    const std::string v = j["eps_adjust"].get<std::string>();
    if (v == "subtract_slack")
      policy.eps_adjust = EpsAdjust::subtract_slack;
    else if (v == "none")
      policy.eps_adjust = EpsAdjust::none;
    else
      throw SchemaError("eps_adjust must be 'subtract_slack' or 'none'", where + ".eps_adjust");
  }
  if (j.contains("wiretap_conditioning")) {
    const std::string v = j["wiretap_conditioning"].get<std::string>();
    if (v == "given_ux")
      policy.wiretap_conditioning = VarianceConditioning::given_ux;
    else if (v == "given_u")
      policy.wiretap_conditioning = VarianceConditioning::given_u;
    else
      throw SchemaError("wiretap_conditioning must be 'given_ux' or 'given_u'",
                        where + ".wiretap_conditioning");
  }
  if (j.contains("bc_union_constant")) {
    const std::int64_t v = integer_at(j["bc_union_constant"], where + ".bc_union_constant");
    if (v == 4)
      policy.bc_union_constant = PairBoundConstant::four;
    else if (v == 3)
      policy.bc_union_constant = PairBoundConstant::three;
    else
      throw SchemaError("bc_union_constant must be 4 or 3", where + ".bc_union_constant");
  }
  return policy;
}

nlohmann::json to_json(const LogTermPolicy& policy) {
  json j{{"c_multiplier", policy.c_multiplier},
         {"gamma_apx", {policy.gamma_apx.log2_coeff, policy.gamma_apx.constant}},
         {"gamma_dec", {policy.gamma_dec.log2_coeff, policy.gamma_dec.constant}},
         {"eps_adjust",
          policy.eps_adjust == EpsAdjust::subtract_slack ? "subtract_slack" : "none"},
         {"wiretap_conditioning",
          policy.wiretap_conditioning == VarianceConditioning::given_ux ? "given_ux" : "given_u"},
         {"bc_union_constant", policy.bc_union_constant == PairBoundConstant::four ? 4 : 3}};
  if (policy.type_constant_override) j["type_constant"] = *policy.type_constant_override;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("expected an object", "config");
  ExperimentConfig cfg;
  cfg.kind = require(j, "kind", "config").get<std::string>();
  if (cfg.kind != "thm1" && cfg.kind != "thm2" && cfg.kind != "p2p" && cfg.kind != "bc" &&
      cfg.kind != "wiretap")
    throw SchemaError("kind must be one of thm1, thm2, p2p, bc, wiretap", "config.kind");
  cfg.payload = require(j, "payload", "config");
  const json& seed = require(j, "seed", "config");  // explicit, never wall-clock
  if (!seed.is_number_integer() && !seed.is_number_unsigned())
    throw SchemaError("seed must be an integer", "config.seed");
  cfg.seed = seed.get<std::uint64_t>();
  if (j.contains("workers")) {
    const std::int64_t w = integer_at(j["workers"], "config.workers");
    if (w < 1) throw SchemaError("workers must be >= 1", "config.workers");
    cfg.workers = static_cast<int>(w);
  }
  if (j.contains("output_path")) cfg.output_path = j["output_path"].get<std::string>();
  // The hash identifies the experiment: worker count and output location do
  // not affect the emitted bytes and stay out of it.
  cfg.config_hash =
      canonical_hash(json{{"kind", cfg.kind}, {"payload", cfg.payload}, {"seed", cfg.seed}});
  return cfg;
}

std::uint64_t canonical_hash(const nlohmann::json& j) {
  const std::string dump = j.dump();  // nlohmann keeps object keys sorted
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace randbin
