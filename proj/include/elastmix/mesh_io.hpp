#pragma once

#include <fstream>

#include <nlohmann/json.hpp>

#include "mesh.hpp"

namespace elastmix {

// JSON mesh format: {dim, vertices, cells, macros:[{cells, labels}], family}.
// Labels record the named nodes that are fine vertices; derived points
// (edge midpoints d_i, trisection points g_i) are recomputed on read.
inline nlohmann::ordered_json mesh_to_json(const Mesh& m) {
  nlohmann::ordered_json j;
  j["dim"] = m.dim;
  auto& jv = j["vertices"] = nlohmann::ordered_json::array();
  for (const auto& v : m.vertices) {
    nlohmann::ordered_json p = nlohmann::ordered_json::array();
    for (int i = 0; i < v.size(); ++i) p.push_back(v[i]);
    jv.push_back(std::move(p));
  }
  j["cells"] = m.cells;
  return j;
}

inline nlohmann::ordered_json macro_mesh_to_json(const MacroMesh& mm) {
  nlohmann::ordered_json j = mesh_to_json(mm.fine);
  j["family"] = family_name(mm.family);
  auto& jm = j["macros"] = nlohmann::ordered_json::array();
  for (const auto& mac : mm.macros) {
    nlohmann::ordered_json e;
    e["cells"] = mac.cells;
    nlohmann::ordered_json lab;
    for (const auto& [k, v] : mac.labels) lab[k] = v;
    e["labels"] = std::move(lab);
    jm.push_back(std::move(e));
  }
  return j;
}

inline Mesh mesh_from_json(const nlohmann::json& j) {
  Mesh m;
  m.dim = j.at("dim").get<int>();
  for (const auto& p : j.at("vertices")) {
    Vec v(m.dim);
    for (int i = 0; i < m.dim; ++i) v[i] = p.at(i).get<double>();
    m.vertices.push_back(std::move(v));
  }
  for (const auto& c : j.at("cells"))
    m.cells.push_back(c.get<std::vector<int>>());
  m.build();
  return m;
}

inline MacroMesh macro_mesh_from_json(const nlohmann::json& j) {
  MacroMesh mm;
  mm.fine = mesh_from_json(j);
  mm.family = family_from_name(j.at("family").get<std::string>());
  for (const auto& e : j.at("macros")) {
    Macro mac;
    mac.cells = e.at("cells").get<std::vector<int>>();
    for (const auto& [k, v] : e.at("labels").items())
      mac.labels[k] = v.get<int>();
    const int n = mm.fine.dim;
    mac.corners.resize(n + 1);
    for (int i = 0; i <= n; ++i)
      mac.corners[i] = mac.labels.at("x" + std::to_string(i));
    for (const auto& [k, v] : mac.labels)
      mac.named_points[k] = mm.fine.vertices[v];
    // recompute derived named points from the labels
    auto V = [&](const std::string& s) { return mac.labels.at(s); };
    if (mm.family == Family::D2P2) {
      mac.named_points["d1"] = midpoint_of(mm.fine, V("m1"), V("m2"));
      mac.named_points["d2"] = midpoint_of(mm.fine, V("m1"), V("x0"));
      mac.named_points["d3"] = midpoint_of(mm.fine, V("m1"), V("m3"));
    } else if (mm.family == Family::D3P3) {
      mac.named_points["d1"] = centroid_of(mm.fine, {V("x1"), V("m1"), V("m2")});
      mac.named_points["d2"] = centroid_of(mm.fine, {V("x1"), V("x3"), V("m2")});
      mac.named_points["d3"] = centroid_of(mm.fine, {V("x3"), V("m2"), V("m3")});
      auto tri = [&](int a, int b, int w) {
        const Vec& pa = mm.fine.vertices[a];
        const Vec& pb = mm.fine.vertices[b];
        return w == 1 ? Vec((2.0 * pa + pb) / 3.0) : Vec((pa + 2.0 * pb) / 3.0);
      };
      mac.named_points["g1"] = tri(V("m1"), V("m2"), 1);
      mac.named_points["g2"] = tri(V("m1"), V("m2"), 2);
      mac.named_points["g3"] = tri(V("x1"), V("m2"), 1);
      mac.named_points["g4"] = tri(V("x1"), V("m2"), 2);
      mac.named_points["g5"] = tri(V("x3"), V("m2"), 1);
      mac.named_points["g6"] = tri(V("x3"), V("m2"), 2);
      mac.named_points["g7"] = tri(V("m3"), V("m2"), 1);
      mac.named_points["g8"] = tri(V("m3"), V("m2"), 2);
    } else {
      for (int i = 0; i < 4; ++i)
        mac.named_points["g" + std::to_string(i + 1)] =
            midpoint_of(mm.fine, V("x" + std::to_string(i)), V("m5"));
      for (int i = 0; i < 4; ++i)
        mac.named_points["g" + std::to_string(i + 5)] =
            midpoint_of(mm.fine, V("m" + std::to_string(i + 1)), V("m5"));
    }
    mm.macros.push_back(std::move(mac));
  }
  mm.finalize();
  return mm;
}

inline void write_json_file(const nlohmann::ordered_json& j,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(1) << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace elastmix
