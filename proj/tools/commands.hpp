// Subcommand implementations behind the qrepeater command line.
#pragma once

#include "qrepeater/protosim.hpp"
#include "qrepeater/ratemodel.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace qrep::cli {

enum class Format { csv, json };

// Settings shared by every subcommand. A config file may name a node preset
// ("current", "enhanced") or give an object {"preset": ..., <NodeParams fields>}.
struct RunConfig {
  std::optional<NodeParams> node;  // unset: the subcommand picks its preset
  std::string node_name;
  LinkParams link;
  std::optional<nlohmann::json> sim;  // ProtocolConfig overrides
  std::string output;                 // empty: stdout
  std::uint64_t seed = 0;
  Format format = Format::json;
  bool format_given = false;
  bool strict = false;
};

// Raised for bad flags or config content; maps to exit code 1.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

NodeParams preset(const std::string& name);
RunConfig load_config(const std::string& path);
ProtocolConfig protocol_from_json(const nlohmann::json& j, ProtocolConfig base);

struct RatesArgs {
  double lmin = 0, lmax = 200, step = 1;
};
struct SkrArgs {
  double length = 50;
};
struct ChainArgs {
  int levels = 4;
  std::optional<double> l0, p0, t0, f0, f_swap, v;
};
struct BoundsArgs {
  std::optional<double> p0, gamma;
};
struct SimulateArgs {
  std::uint64_t trials = 1'000'000;
  std::string mode = "measured";  // measured | repeater | direct
  std::optional<double> length;
};
struct TomoArgs {
  std::string in;
  std::string synthesize;  // Bell label name; writes a dataset instead of reading one
  double counts = 1e5;
  int resamples = 500;
};
struct SpinEchoArgs {
  std::string temps = "mid";  // start | mid | end | path to a JSON MotionalState
  int echoes = 40;
  int grid = 40;
  double miscalibration = 0;
  std::string phases = "0,pi,0";
};
struct CouplingArgs {
  bool offset_scan = false;
  double step = 1;
};
struct BudgetArgs {
  std::string factors;  // JSON [[value, sigma], ...]; empty: both measured nodes
};
struct ReproduceArgs {
  int grid = 40;
};

int cmd_rates(const RunConfig& cfg, const RatesArgs& a, std::ostream& out);
int cmd_skr(const RunConfig& cfg, const SkrArgs& a, std::ostream& out);
int cmd_chain(const RunConfig& cfg, const ChainArgs& a, std::ostream& out);
int cmd_bounds(const RunConfig& cfg, const BoundsArgs& a, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, const SimulateArgs& a, std::ostream& out);
int cmd_tomo(const RunConfig& cfg, const TomoArgs& a, std::ostream& out);
int cmd_spinecho(const RunConfig& cfg, const SpinEchoArgs& a, std::ostream& out);
int cmd_coupling(const RunConfig& cfg, const CouplingArgs& a, std::ostream& out);
int cmd_budget(const RunConfig& cfg, const BudgetArgs& a, std::ostream& out);
int cmd_reproduce(const RunConfig& cfg, const ReproduceArgs& a, std::ostream& out);

}  // namespace qrep::cli
