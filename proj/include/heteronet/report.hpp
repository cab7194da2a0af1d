#pragma once

// JSON and CSV documents exchanged between pipeline stages, and the run
// manifests that make every output reproducible.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "heteronet/analysis.hpp"
#include "heteronet/realize.hpp"

namespace heteronet {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Writes `content` to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Canonical description of one command invocation. The hash covers the
/// command, parameters, seed, tool version and input file hashes; output
/// paths are recorded but not hashed.
struct RunManifest {
  std::string command;
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::string version{kToolVersion};
  std::map<std::string, std::string> inputs;  ///< path -> content hash
  std::vector<std::string> outputs;

  std::string hash() const;
  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

// ---------------------------------------------------------------------------
// System manifest

Json gate_json(const Digraph& g, const GateReport& gate);
Json equilibrium_json(const RealizedSystem& sys, const EquilibriumInfo& e);

/// Graph, parameters, gate report, annulus and the full equilibrium table.
Json system_manifest_json(const RealizedSystem& sys, const std::string& graph_source);
/// Rebuilds the system recorded in a manifest (forced when it is tagged
/// unverified).
RealizedSystem system_from_manifest(const Json& manifest);

// ---------------------------------------------------------------------------
// Classification report

Json thresholds_json(const Thresholds& t);
Json sampling_json(const SamplingConfig& c);
Json estimate_json(const RealizedSystem& sys, const TransitionEstimate& e);
Json classification_json(const RealizedSystem& sys, const NodeClassification& c);
Json chain_json(const RealizedSystem& sys, const SwitchingChain& chain);

/// Header `from,<labels...>,escape`, one row per state, %.17g entries.
std::string chain_csv(const RealizedSystem& sys, const SwitchingChain& chain);

}  // namespace heteronet
