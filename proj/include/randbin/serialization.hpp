#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "randbin/binning.hpp"
#include "randbin/pmf.hpp"
#include "randbin/secondorder.hpp"
#include "randbin/typeclass.hpp"

// JSON wire formats. Validation failures throw SchemaError carrying the
// offending location, e.g. "rows[3][7]".
//
//   channel:   {"input_size": k, "output_sizes": [m1, ...], "rows": [[...]]}
//   joint pmf: {"axis_sizes": [...], "probs": [flat row-major array]}
//   pmf:       {"probs": [...]}
//   n-type:    {"n": n, "counts": [...]}

namespace randbin {

nlohmann::json to_json(const Channel& channel);
nlohmann::json to_json(const JointPmf& joint);
nlohmann::json to_json(const Pmf& pmf);
nlohmann::json to_json(const NType& type);

Channel channel_from_json(const nlohmann::json& j, const std::string& where = "channel");
JointPmf joint_from_json(const nlohmann::json& j, const std::string& where = "joint");
Pmf pmf_from_json(const nlohmann::json& j, const std::string& where = "pmf",
                  std::string axis_name = "A");
NType ntype_from_json(const nlohmann::json& j, const std::string& where = "ntype");

LogTermPolicy policy_from_json(const nlohmann::json& j, const std::string& where = "policy");
nlohmann::json to_json(const LogTermPolicy& policy);

// Top-level experiment configuration:
// {"kind": "thm1"|"thm2"|"p2p"|"bc"|"wiretap", "payload": {...},
//  "seed": integer (required, no wall-clock default), "workers": int >= 1,
//  "output_path": string}
struct ExperimentConfig {
  std::string kind;
  nlohmann::json payload;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_path;
  // Stable hash of the canonical config text; embedded in every output row.
  std::uint64_t config_hash = 0;
};

ExperimentConfig config_from_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key) dump.
std::uint64_t canonical_hash(const nlohmann::json& j);

}  // namespace randbin
