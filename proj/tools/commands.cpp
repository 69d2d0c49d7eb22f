#include "commands.hpp"

#include "qrepeater/nodephysics.hpp"
#include "qrepeater/reproduce.hpp"
#include "qrepeater/tomo.hpp"
#include "qrepeater/tomo_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace qrep::cli {

using nlohmann::json;

namespace {

// Doubles in CSV keep 15 significant digits so plots are reproducible.
std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  std::ostringstream s;
  s << std::setprecision(15) << x;
  return s.str();
}

void write_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

double number_field(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string("config: \"") + key + "\" must be a number");
  return j[key].get<double>();
}

int int_field(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(std::string("config: \"") + key + "\" must be an integer");
  return j[key].get<int>();
}

NodeParams node_from_json(const json& j) {
  NodeParams n = preset(j.value("preset", std::string("current")));
  n.P0_link = number_field(j, "P0_link", n.P0_link);
  n.tau = number_field(j, "tau", n.tau);
  n.F0 = number_field(j, "F0", n.F0);
  n.F_swap_ions = number_field(j, "F_swap_ions", n.F_swap_ions);
  n.V = number_field(j, "V", n.V);
  n.T0 = number_field(j, "T0", n.T0);
  n.T0_two_photon = number_field(j, "T0_two_photon", n.T0_two_photon);
  n.T0_direct = number_field(j, "T0_direct", n.T0_direct);
  n.T_swap = number_field(j, "T_swap", n.T_swap);
  if (j.contains("K")) {
    if (j["K"].is_null()) n.K.reset();
    else n.K = int_field(j, "K", 0);
  }
  for (double p : {n.P0_link, n.F0, n.F_swap_ions, n.V})
    if (!(p >= 0 && p <= 1)) throw ConfigError("config: node probability outside [0,1]");
  if (!(n.tau > 0)) throw ConfigError("config: tau must be positive");
  for (double t : {n.T0, n.T0_two_photon, n.T0_direct, n.T_swap})
    if (!(t >= 0)) throw ConfigError("config: negative node time");
  if (n.K && *n.K < 0) throw ConfigError("config: negative K");
  return n;
}

std::ostream& stream_for(const RunConfig& cfg, std::ofstream& file, std::ostream& fallback) {
  if (cfg.output.empty()) return fallback;
  file.open(cfg.output);
  if (!file) throw ConfigError("cannot write '" + cfg.output + "'");
  return file;
}

}  // namespace

NodeParams preset(const std::string& name) {
  if (name == "current") return current_node();
  if (name == "enhanced") return enhanced_node();
  throw ConfigError("unknown node preset '" + name + "' (expected current or enhanced)");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig cfg;
  try {
    if (j.contains("node")) {
      const json& n = j["node"];
      if (n.is_string()) {
        cfg.node = preset(n.get<std::string>());
        cfg.node_name = n.get<std::string>();
      } else if (n.is_object()) {
        cfg.node = node_from_json(n);
        cfg.node_name = n.value("name", std::string("custom"));
      } else {
        throw ConfigError("config: \"node\" must be a preset name or an object");
      }
    }
    if (j.contains("link")) {
      const json& l = j["link"];
      if (!l.is_object()) throw ConfigError("config: \"link\" must be an object");
      cfg.link.L = number_field(l, "L", cfg.link.L);
      cfg.link.gamma = number_field(l, "gamma", cfg.link.gamma);
      cfg.link.c = number_field(l, "c", cfg.link.c);
      cfg.link.L0 = number_field(l, "L0", cfg.link.L0);
      if (!(cfg.link.L >= 0 && cfg.link.gamma >= 0 && cfg.link.c > 0 && cfg.link.L0 >= 0))
        throw ConfigError("config: invalid link parameters");
    }
    if (j.contains("sim")) {
      if (!j["sim"].is_object()) throw ConfigError("config: \"sim\" must be an object");
      cfg.sim = j["sim"];
      protocol_from_json(*cfg.sim, ProtocolConfig{}).validate();
    }
    if (j.contains("output")) cfg.output = j["output"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("format")) {
      const std::string f = j["format"].get<std::string>();
      if (f != "csv" && f != "json") throw ConfigError("config: format must be csv or json");
      cfg.format = f == "csv" ? Format::csv : Format::json;
      cfg.format_given = true;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ProtocolConfig protocol_from_json(const json& j, ProtocolConfig c) {
  c.p_A1 = number_field(j, "p_A1", c.p_A1);
  c.p_B1 = number_field(j, "p_B1", c.p_B1);
  c.p_A2 = number_field(j, "p_A2", c.p_A2);
  c.p_B2 = number_field(j, "p_B2", c.p_B2);
  c.loop1_max = int_field(j, "loop1_max", c.loop1_max);
  c.loop2_max = int_field(j, "loop2_max", c.loop2_max);
  c.t_attempt_loop1 = number_field(j, "t_attempt_loop1", c.t_attempt_loop1);
  c.t_attempt_loop2 = number_field(j, "t_attempt_loop2", c.t_attempt_loop2);
  c.t_wait = number_field(j, "t_wait", c.t_wait);
  c.t_swap = number_field(j, "t_swap", c.t_swap);
  c.t_init = number_field(j, "t_init", c.t_init);
  c.loop1_overhead_every = int_field(j, "loop1_overhead_every", c.loop1_overhead_every);
  c.loop1_overhead_time = number_field(j, "loop1_overhead_time", c.loop1_overhead_time);
  c.loop2_overhead_every = int_field(j, "loop2_overhead_every", c.loop2_overhead_every);
  c.loop2_overhead_time = number_field(j, "loop2_overhead_time", c.loop2_overhead_time);
  if (j.contains("mode")) {
    const std::string m = j["mode"].get<std::string>();
    if (m == "repeater") c.mode = ProtocolMode::repeater;
    else if (m == "direct") c.mode = ProtocolMode::direct;
    else throw ConfigError("config: sim.mode must be repeater or direct");
  }
  c.L = number_field(j, "L", c.L);
  c.c = number_field(j, "c", c.c);
  return c;
}

// --- rates ---------------------------------------------------------------------

int cmd_rates(const RunConfig& cfg, const RatesArgs& a, std::ostream& fallback) {
  if (!(a.lmin >= 0 && a.lmax >= a.lmin && a.step > 0)) throw ConfigError("rates: need 0 <= lmin <= lmax, step > 0");
  std::vector<std::pair<std::string, NodeParams>> nodes;
  if (cfg.node) nodes.emplace_back(cfg.node_name, *cfg.node);
  else nodes = {{"current", current_node()}, {"enhanced", enhanced_node()}};

  struct Row {
    std::string preset;
    double L, eta, direct, repeater, skr, bound;
    int K;
  };
  std::vector<Row> rows;
  const long n = static_cast<long>(std::floor((a.lmax - a.lmin) / a.step + 1e-9));
  for (const auto& [name, node] : nodes)
    for (long i = 0; i <= n; ++i) {
      LinkParams link = cfg.link;
      link.L = a.lmin + i * a.step;
      const SkrResult s = skr_pipeline(node, link);
      rows.push_back({name, link.L, channel_eta(link.gamma, link.L), rkr_direct(node, link),
                      rkr_repeater(node, link), s.skr,
                      link.L > 0 ? skr_bound(link) : std::numeric_limits<double>::infinity(), s.K_cutoff});
    }

  std::ofstream file;
  std::ostream& out = stream_for(cfg, file, fallback);
  if (cfg.format_given && cfg.format == Format::json) {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"preset", r.preset}, {"L_km", r.L}, {"eta", r.eta}, {"rkr_direct_hz", r.direct},
                     {"rkr_repeater_hz", r.repeater}, {"skr_hz", r.skr},
                     {"skr_bound_hz", std::isinf(r.bound) ? json(nullptr) : json(r.bound)}, {"k_cutoff", r.K}});
    write_json(out, arr);
    return 0;
  }
  out << "preset,L_km,eta,rkr_direct_hz,rkr_repeater_hz,skr_hz,skr_bound_hz,k_cutoff\n";
  for (const auto& r : rows)
    out << r.preset << ',' << num(r.L) << ',' << num(r.eta) << ',' << num(r.direct) << ',' << num(r.repeater)
        << ',' << num(r.skr) << ',' << num(r.bound) << ',' << r.K << '\n';
  return 0;
}

int cmd_skr(const RunConfig& cfg, const SkrArgs& a, std::ostream& fallback) {
  const NodeParams node = cfg.node.value_or(enhanced_node());
  LinkParams link = cfg.link;
  link.L = a.length;
  const SkrResult s = skr_pipeline(node, link);
  std::ofstream file;
  write_json(stream_for(cfg, file, fallback),
             {{"L_km", link.L}, {"skr_hz", s.skr}, {"k_cutoff", s.K_cutoff}, {"rkr_hz", s.rkr}, {"skf", s.skf},
              {"skr_bound_hz", link.L > 0 ? json(skr_bound(link)) : json(nullptr)}});
  return 0;
}

int cmd_chain(const RunConfig& cfg, const ChainArgs& a, std::ostream& fallback) {
  NodeParams node = cfg.node.value_or(enhanced_node());
  LinkParams link = cfg.link;
  if (a.l0) link.L0 = *a.l0;
  if (a.p0) node.P0_link = *a.p0;
  if (a.t0) node.T0_two_photon = *a.t0;
  if (a.f0) node.F0 = *a.f0;
  if (a.f_swap) node.F_swap_ions = *a.f_swap;
  if (a.v) node.V = *a.v;
  const double t = chain_time(a.levels, node, link);
  const double f = chain_fidelity(a.levels, node.F0, node.F_swap_ions, node.V);
  std::ofstream file;
  write_json(stream_for(cfg, file, fallback), {{"levels", a.levels}, {"t_tot_s", t}, {"fidelity", f}});
  return 0;
}

int cmd_bounds(const RunConfig& cfg, const BoundsArgs& a, std::ostream& fallback) {
  NodeParams node = cfg.node.value_or(current_node());
  LinkParams link = cfg.link;
  if (a.p0) node.P0_link = *a.p0;
  if (a.gamma) link.gamma = *a.gamma;
  json j = {{"P0_link", node.P0_link},
            {"gamma_per_km", link.gamma},
            {"L_min_km", bound_min_length(link.gamma)},
            {"t_storage_s", bound_storage_time(node, link)},
            {"k_hat", bound_khat(node)}};
  try {
    const PerfectBound p = bound_perfect(node, link);
    j["eta_star"] = p.eta_star;
    j["t_perfect_s"] = p.t_perfect;
  } catch (const std::domain_error&) {
    j["eta_star"] = nullptr;  // every length already shows an advantage
    j["t_perfect_s"] = nullptr;
  }
  std::ofstream file;
  write_json(stream_for(cfg, file, fallback), j);
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const SimulateArgs& a, std::ostream& fallback) {
  if (a.trials == 0) throw ConfigError("simulate: trials must be positive");
  const NodeParams node = cfg.node.value_or(current_node());
  LinkParams link = cfg.link;
  if (a.length) link.L = *a.length;
  ProtocolConfig pc;
  if (a.mode == "repeater") pc = ProtocolConfig::repeater_for(node, link);
  else if (a.mode == "direct") pc = ProtocolConfig::direct_for(node, link);
  else if (a.mode != "measured") throw ConfigError("simulate: mode must be measured, repeater or direct");
  if (cfg.sim) pc = protocol_from_json(*cfg.sim, pc);
  pc.validate();

  const SimStats s = simulate(pc, a.trials, cfg.seed);
  json j = {{"mode", a.mode},
            {"trials", s.trials},
            {"seed", cfg.seed},
            {"successes", s.successes},
            {"attempts", s.attempts},
            {"P_s", s.P_s},
            {"P2", s.P2},
            {"active_time_s", s.active_time},
            {"total_time_s", s.total_time},
            {"active_rate_hz", s.active_rate},
            {"absolute_rate_hz", s.absolute_rate},
            {"mean_storage_time_s", s.mean_storage_time}};
  if (pc.mode == ProtocolMode::repeater) {
    j["alpha"] = s.alpha;
    j["alpha_max"] = s.alpha_max;
    j["P2_analytic"] = analytic_P2(pc);
  }
  if (a.mode == "repeater") j["rkr_repeater_hz"] = rkr_repeater(node, link);
  if (a.mode == "direct") j["rkr_direct_hz"] = rkr_direct(node, link);

  std::ofstream file;
  std::ostream& out = stream_for(cfg, file, fallback);
  if (cfg.format_given && cfg.format == Format::csv) {
    out << "k,successes\n";
    for (std::size_t k = 0; k < s.k_histogram.size(); ++k) out << k + 1 << ',' << s.k_histogram[k] << '\n';
    return 0;
  }
  j["k_histogram"] = s.k_histogram;
  write_json(out, j);
  return 0;
}

// --- tomography ----------------------------------------------------------------

namespace {

BellLabel parse_bell(const std::string& s) {
  for (BellLabel b : kBellLabels)
    if (s == to_string(b)) return b;
  throw ConfigError("unknown Bell state '" + s + "' (expected PhiPlus, PhiMinus, PsiPlus or PsiMinus)");
}

}  // namespace

int cmd_tomo(const RunConfig& cfg, const TomoArgs& a, std::ostream& fallback) {
  std::ofstream file;
  if (!a.synthesize.empty()) {
    // Source that emits the named Bell state after every ion outcome.
    const DensityMatrix rho = bell_state(parse_bell(a.synthesize));
    const TomoDataset d = synthesize_dataset({rho, rho, rho, rho}, a.counts, cfg.seed);
    write_json(stream_for(cfg, file, fallback), dataset_to_json(d));
    return 0;
  }
  if (a.in.empty()) throw ConfigError("tomo: --in or --synthesize is required");
  if (a.resamples < 0) throw ConfigError("tomo: negative resample count");
  TomoDataset data;
  try {
    data = load_dataset(a.in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }

  json outcomes = json::array();
  for (BellLabel outcome : kBellLabels) {
    const MleResult m = mle_reconstruct(bayes_probabilities(data, outcome));
    const DensityMatrix& rho = m.rho;
    json entry = {{"ion_outcome", to_string(outcome)},
                  {"rho", matrix_to_json(rho.matrix())},
                  {"mle_iterations", m.iterations},
                  {"mle_converged", m.converged},
                  {"purity_bound", purity_bound(rho)},
                  {"concurrence", concurrence(rho)},
                  {"nearest_max_entangled_fidelity", nearest_max_entangled_fidelity(rho)}};
    json fids = json::object();
    for (BellLabel b : kBellLabels) fids[to_string(b)] = fidelity(rho, bell_state(b));
    entry["fidelity"] = fids;
    if (a.resamples > 0) {
      MCConfig mc;
      mc.resamples = a.resamples;
      mc.seed = cfg.seed;
      const std::pair<const char*, StateStatistic> stats[] = {
          {"nearest_max_entangled_fidelity", [](const DensityMatrix& r) { return nearest_max_entangled_fidelity(r); }},
          {"concurrence", [](const DensityMatrix& r) { return concurrence(r); }}};
      json errors = json::object();
      for (const auto& [name, stat] : stats) {
        const ErrorBars e = mc_error_bars(data, outcome, stat, mc);
        errors[name] = {{"median", e.median},
                        {"delta_minus", e.delta_minus},
                        {"delta_plus", e.delta_plus},
                        {"dropped", e.dropped}};
      }
      entry["error_bars"] = errors;
    }
    outcomes.push_back(entry);
  }
  write_json(stream_for(cfg, file, fallback), {{"outcomes", outcomes}});
  return 0;
}

// --- node physics ----------------------------------------------------------------

namespace {

std::array<double, 3> parse_phases(const std::string& s) {
  std::array<double, 3> out{};
  std::stringstream ss(s);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= 3) throw ConfigError("spinecho: --phases needs three values");
    double sign = 1;
    if (!tok.empty() && tok[0] == '-') {
      sign = -1;
      tok.erase(0, 1);
    }
    if (tok == "pi") out[i] = sign * std::numbers::pi;
    else {
      try {
        std::size_t used = 0;
        out[i] = sign * std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("spinecho: bad phase '" + tok + "'");
      }
    }
    ++i;
  }
  if (i != 3) throw ConfigError("spinecho: --phases needs three values");
  return out;
}

MotionalState temps_from(const std::string& which) {
  if (which == "start") return loop2_start_state();
  if (which == "end") return loop2_end_state();
  if (which == "mid") return heating_trajectory(kHeatingSpan / 2, heating_rates(), loop2_start_state());
  std::ifstream in(which);
  if (!in) throw ConfigError("spinecho: --temps must be start, mid, end or a readable JSON file");
  try {
    json j;
    in >> j;
    MotionalState m;
    const auto nbar = j.at("nbar").get<std::vector<double>>();
    if (nbar.size() != kModes) throw ConfigError("spinecho: nbar needs four entries");
    std::copy(nbar.begin(), nbar.end(), m.nbar.begin());
    if (j.contains("frequencies_MHz")) {
      const auto f = j["frequencies_MHz"].get<std::vector<double>>();
      if (f.size() != kModes) throw ConfigError("spinecho: frequencies_MHz needs four entries");
      std::copy(f.begin(), f.end(), m.frequencies_MHz.begin());
    }
    if (j.contains("eta")) {
      const auto e = j["eta"].get<std::vector<double>>();
      if (e.size() != kModes) throw ConfigError("spinecho: eta needs four entries");
      m.eta = ModeArray{};
      std::copy(e.begin(), e.end(), m.eta->begin());
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spinecho: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

int cmd_spinecho(const RunConfig& cfg, const SpinEchoArgs& a, std::ostream& fallback) {
  if (a.echoes < 0 || a.grid < 1) throw ConfigError("spinecho: need echoes >= 0 and grid >= 1");
  SpinEchoConfig sc;
  sc.n_echoes = a.echoes;
  sc.grid_max = a.grid;
  sc.pulse_phases = parse_phases(a.phases);
  MotionalState temps = temps_from(a.temps);

  json j = {{"temps", a.temps}, {"echoes", a.echoes}, {"grid_max", a.grid}, {"miscalibration", a.miscalibration}};
  if (!temps.eta) {
    // Lamb-Dicke parameters calibrated so the start of Loop 2 gives 0.92.
    const double scale = calibrate_lamb_dicke_scale(sc, 0.92);
    const ModeArray tmpl = lamb_dicke_template(temps);
    ModeArray eta{};
    for (int i = 0; i < kModes; ++i) eta[i] = scale * tmpl[i];
    temps.eta = eta;
    j["lamb_dicke_scale"] = scale;
  }
  sc.miscalibration = a.miscalibration;
  const SpinEchoResult r = spin_echo_visibility(temps, sc);
  j["nbar"] = temps.nbar;
  j["eta"] = *temps.eta;
  j["C"] = r.C;
  j["weight_coverage"] = r.weight_coverage;
  std::ofstream file;
  write_json(stream_for(cfg, file, fallback), j);
  return 0;
}

int cmd_coupling(const RunConfig& cfg, const CouplingArgs& a, std::ostream& fallback) {
  const CavityGeometry geom;
  std::ofstream file;
  std::ostream& out = stream_for(cfg, file, fallback);
  if (a.offset_scan) {
    if (!(a.step > 0)) throw ConfigError("coupling: step must be positive");
    out << "offset_nm,g_ion1,g_ion2\n";
    for (const auto& s : coupling_scan(geom, a.step))
      out << num(s.offset_nm) << ',' << num(s.g_ion1) << ',' << num(s.g_ion2) << '\n';
    return 0;
  }
  const EqualizedCoupling eq = equalize_coupling(geom);
  write_json(out, {{"projected_separation_nm", geom.projected_separation_nm()},
                   {"transverse_offset_um", geom.transverse_offset_um()},
                   {"g_ion_at_antinode", cavity_coupling(0, geom.transverse_offset_um(), geom)},
                   {"g_other_ion", cavity_coupling(geom.projected_separation_nm(), geom.transverse_offset_um(), geom)},
                   {"equalized_offset_nm", eq.offset_nm},
                   {"equalized_coupling", eq.coupling}});
  return 0;
}

int cmd_budget(const RunConfig& cfg, const BudgetArgs& a, std::ostream& fallback) {
  auto encode = [](const std::vector<Factor>& f) {
    const Budget b = efficiency_budget(f);
    return json{{"product", b.product}, {"sigma", b.sigma}};
  };
  json j;
  if (a.factors.empty()) {
    j = {{"node_A", encode(node_a_factors())}, {"node_B", encode(node_b_factors())}};
  } else {
    std::ifstream in(a.factors);
    if (!in) throw ConfigError("budget: cannot open '" + a.factors + "'");
    std::vector<Factor> f;
    try {
      json list;
      in >> list;
      for (const auto& e : list) f.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    } catch (const json::exception& e) {
      throw ConfigError(std::string("budget: ") + e.what());
    }
    j = encode(f);
  }
  std::ofstream file;
  write_json(stream_for(cfg, file, fallback), j);
  return 0;
}

int cmd_reproduce(const RunConfig& cfg, const ReproduceArgs& a, std::ostream& fallback) {
  ReproduceInputs in;
  if (cfg.node) {
    // A custom node replaces the preset it is based on.
    (cfg.node_name == "enhanced" ? in.enhanced : in.current) = *cfg.node;
  }
  in.link = cfg.link;
  in.echo_grid = a.grid;
  const auto rows = headline_checks(in);
  int failed = 0;
  for (const auto& r : rows) failed += !r.pass();

  std::ofstream file;
  std::ostream& out = stream_for(cfg, file, fallback);
  if (cfg.format_given && cfg.format == Format::json) {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"quantity", r.quantity}, {"value", r.value}, {"reference", r.reference},
                     {"lo", r.lo}, {"hi", r.hi}, {"unit", r.unit}, {"pass", r.pass()}});
    write_json(out, {{"checks", arr}, {"failed", failed}});
  } else {
    out << std::left << std::setw(42) << "quantity" << std::setw(16) << "computed" << std::setw(12) << "reference"
        << std::setw(26) << "accepted" << "result\n";
    for (const auto& r : rows) {
      std::ostringstream band;
      band << '[' << std::setprecision(4) << r.lo << ", " << r.hi << ']';
      std::ostringstream v;
      v << std::setprecision(6) << r.value;
      out << std::setw(42) << r.quantity << std::setw(16) << v.str() << std::setw(12) << r.reference
          << std::setw(26) << band.str() << (r.pass() ? "pass" : "FAIL") << ' ' << r.unit << '\n';
    }
    out << failed << " of " << rows.size() << " checks outside their band\n";
  }
  return cfg.strict && failed > 0 ? 3 : 0;
}

}  // namespace qrep::cli
