#include "qrepeater/reproduce.hpp"

#include "qrepeater/nodephysics.hpp"
#include "qrepeater/protosim.hpp"

namespace qrep {

std::vector<Factor> node_a_factors() {
  return {{0.52, 0.005}, {0.78, 0.02}, {0.96, 0.01},  {0.81, 0.03}, {0.23, 0.01},
          {0.55, 0.005}, {0.36, 0.005}, {0.5, 0.0},   {0.71, 0.005}, {0.75, 0.02}};
}

std::vector<Factor> node_b_factors() {
  auto f = node_a_factors();
  f[5] = {0.46, 0.005};
  f[6] = {0.42, 0.005};
  f[8] = {0.56, 0.005};
  return f;
}

EchoPrediction predict_echo_visibility(int grid_max) {
  SpinEchoConfig cfg;
  cfg.grid_max = grid_max;
  EchoPrediction out;
  out.scale = calibrate_lamb_dicke_scale(cfg, 0.92);
  const ModeArray tmpl = lamb_dicke_template(cfg.pulse_calibration);
  ModeArray eta{};
  for (int i = 0; i < kModes; ++i) eta[i] = out.scale * tmpl[i];

  MotionalState start = cfg.pulse_calibration;
  start.eta = eta;
  MotionalState mid = heating_trajectory(kHeatingSpan / 2, heating_rates(), start);
  out.start = spin_echo_visibility(start, cfg).C;
  out.mid = spin_echo_visibility(mid, cfg).C;
  SpinEchoConfig off = cfg;
  off.miscalibration = -0.01;
  out.mid_miscalibrated = spin_echo_visibility(mid, off).C;
  return out;
}

std::vector<HeadlineCheck> headline_checks(const ReproduceInputs& in) {
  std::vector<HeadlineCheck> rows;
  auto add = [&](std::string q, double v, double ref, double lo, double hi, std::string unit = "") {
    rows.push_back({std::move(q), v, ref, lo, hi, std::move(unit)});
  };
  const NodeParams& cur = in.current;
  const NodeParams& enh = in.enhanced;
  LinkParams link = in.link;

  add("chain fidelity, 4 levels", chain_fidelity(4, enh.F0, enh.F_swap_ions, enh.V), 0.61, 0.605, 0.615);
  add("chain time, 4 levels", chain_time(4, enh, link), 0.71, 0.710, 0.720, "s");
  add("chain time, 0 levels", chain_time(0, enh, link), 0.07, 0.0701, 0.0711, "s");

  add("minimum length for an advantage", bound_min_length(link.gamma), 20, 20.35, 20.37, "km");
  add("storage time bound", bound_storage_time(cur, link), 10e-3, 8.4e-3, 8.6e-3, "s");
  add("perfect-memory time, current P0", bound_perfect(cur, link).t_perfect, 5, 5.0, 5.2, "s");
  add("perfect-memory time, enhanced P0", bound_perfect(enh, link).t_perfect, 10e-3, 16.6e-3, 17.0e-3, "s");

  LinkParams at50 = link;
  at50.L = 50;
  add("repeater rate at 50 km", rkr_repeater(cur, at50), 9.2, 8, 11, "Hz");
  add("direct rate at 50 km", rkr_direct(cur, at50), 6.7, 5.6, 8.0, "Hz");

  const ProtocolConfig measured;
  const double P2 = analytic_P2(measured);
  const Enhancement e = enhancement_factors(measured.p_A1, measured.p_B1, P2);
  add("Loop-2 success probability", P2, 0.346, 0.321, 0.351);
  add("alpha_max", e.alpha_max, 375, 373, 377);
  add("alpha", e.alpha, 128, 120, 135);

  add("final photon-photon fidelity", predicted_final_fidelity(measured, cur.F0, cur.tau, 64e-3 / 195), 0.813,
      0.793, 0.833);
  add("Ramsey amplitude (66 ms, tau 59 ms)", ramsey_amplitude(66e-3, 59e-3, 0.99), 0.27, 0.23, 0.31);
  add("Ramsey amplitude (66 ms, tau 108 ms)", ramsey_amplitude(66e-3, 108e-3, 0.99), 0.67, 0.64, 0.70);

  const EchoPrediction echo = predict_echo_visibility(in.echo_grid);
  add("echo visibility, start of Loop 2", echo.start, 0.92, 0.919, 0.921);
  add("echo visibility, middle of Loop 2", echo.mid, 0.67, 0.57, 0.77);
  add("echo visibility drop, 1% miscalibration", echo.mid - echo.mid_miscalibrated, 0.11, 0.08, 0.14);

  const CavityGeometry geom;
  add("coupling, ion at antinode", cavity_coupling(0, geom.transverse_offset_um(), geom), 0.95, 0.942, 0.950);
  add("coupling, second ion", cavity_coupling(geom.projected_separation_nm(), geom.transverse_offset_um(), geom),
      0.92, 0.922, 0.930);
  add("coupling, equalized", equalize_coupling(geom).coupling, 0.935, 0.935, 0.947);

  const auto a = node_a_factors(), b = node_b_factors();
  add("detection efficiency, node A", efficiency_budget(a).product, 3.8e-3, 3.8e-3 * 0.95, 3.8e-3 * 1.05);
  add("detection efficiency, node B", efficiency_budget(b).product, 2.9e-3, 2.9e-3 * 0.95, 2.9e-3 * 1.05);
  return rows;
}

}  // namespace qrep
