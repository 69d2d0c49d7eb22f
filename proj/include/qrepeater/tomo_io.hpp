// JSON encoding of tomography datasets and reconstructed matrices.
#pragma once

#include "qrepeater/tomo.hpp"

#include <json.hpp>

#include <string>

namespace qrep {

// {"settings":[{"basisA":"HV","basisB":"DA","projA":"plus","projB":"minus",
//               "C":[c1,c2,c3,c4],"N_A":n,"M_A":m,"M_B_given_A":m2}, ...]}
TomoDataset dataset_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const TomoDataset& d);

TomoDataset load_dataset(const std::string& path);
void save_dataset(const TomoDataset& d, const std::string& path);

// Row-major list of rows, each entry a [re, im] pair.
nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace qrep
