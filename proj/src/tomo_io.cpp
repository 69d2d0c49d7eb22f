#include "qrepeater/tomo_io.hpp"

#include <fstream>
#include <stdexcept>

namespace qrep {

using nlohmann::json;

TomoDataset dataset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("settings") || !j["settings"].is_array())
    throw std::invalid_argument("dataset: expected an object with a \"settings\" array");
  TomoDataset d;
  for (const json& s : j["settings"]) {
    SettingCounts sc;
    sc.setting.basisA = parse_basis(s.at("basisA").get<std::string>());
    sc.setting.basisB = parse_basis(s.at("basisB").get<std::string>());
    sc.setting.projA = parse_projector(s.at("projA").get<std::string>());
    sc.setting.projB = parse_projector(s.at("projB").get<std::string>());
    const json& c = s.at("C");
    if (!c.is_array() || c.size() != 4) throw std::invalid_argument("dataset: C needs four counts");
    for (int i = 0; i < 4; ++i) {
      if (!c[i].is_number_unsigned() && !(c[i].is_number_integer() && c[i].get<long long>() >= 0))
        throw std::invalid_argument("dataset: counts must be non-negative integers");
      sc.C[i] = c[i].get<std::uint64_t>();
    }
    for (auto [key, field] : {std::pair{"N_A", &sc.N_A}, {"M_A", &sc.M_A}, {"M_B_given_A", &sc.M_B_given_A}}) {
      const json& v = s.at(key);
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw std::invalid_argument(std::string("dataset: ") + key + " must be a non-negative integer");
      *field = v.get<std::uint64_t>();
    }
    d.settings.push_back(sc);
  }
  d.validate();
  return d;
}

json dataset_to_json(const TomoDataset& d) {
  json arr = json::array();
  for (const auto& s : d.settings)
    arr.push_back({{"basisA", to_string(s.setting.basisA)},
                   {"basisB", to_string(s.setting.basisB)},
                   {"projA", to_string(s.setting.projA)},
                   {"projB", to_string(s.setting.projB)},
                   {"C", s.C},
                   {"N_A", s.N_A},
                   {"M_A", s.M_A},
                   {"M_B_given_A", s.M_B_given_A}});
  return {{"settings", arr}};
}

TomoDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("dataset '" + path + "': " + e.what());
  }
  return dataset_from_json(j);
}

void save_dataset(const TomoDataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << dataset_to_json(d).dump(1) << '\n';
}

json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw std::invalid_argument("matrix: expected rows");
  ComplexMatrix m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size()) throw std::invalid_argument("matrix: ragged rows");
    for (std::size_t c = 0; c < j[r].size(); ++c)
      m(r, c) = {j[r][c].at(0).get<double>(), j[r][c].at(1).get<double>()};
  }
  return m;
}

}  // namespace qrep
