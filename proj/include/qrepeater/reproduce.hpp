// Headline numbers of the node model recomputed from the parameter presets,
// each with its reference value and accepted band.
#pragma once

#include "qrepeater/ratemodel.hpp"

#include <string>
#include <vector>

namespace qrep {

struct HeadlineCheck {
  std::string quantity;
  double value = 0;
  double reference = 0;  // value the band is centred on
  double lo = 0, hi = 0;
  std::string unit;

  bool pass() const { return value >= lo && value <= hi; }
};

struct ReproduceInputs {
  NodeParams current = current_node();
  NodeParams enhanced = enhanced_node();
  LinkParams link;
  int echo_grid = 40;  // phonon cutoff per mode in the spin-echo sum
};

// Loop-1 detection efficiency factors measured at each end node.
std::vector<Factor> node_a_factors();
std::vector<Factor> node_b_factors();

// Calibrated Lamb-Dicke parameters make the echo visibility at the start of
// Loop 2 equal to 0.92; the rest follows from the heating rates.
struct EchoPrediction {
  double scale = 0;
  double start = 0, mid = 0;
  double mid_miscalibrated = 0;  // 1% pulse-length error
};
EchoPrediction predict_echo_visibility(int grid_max);

std::vector<HeadlineCheck> headline_checks(const ReproduceInputs& in = {});

}  // namespace qrep
