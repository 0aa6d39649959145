#include "obsent/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace obsent::io {

namespace {

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  return *it;
}

std::vector<double> real_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json re = json::array(), im = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json re_row = json::array(), im_row = json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      re_row.push_back(m(r, c).real());
      im_row.push_back(m(r, c).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  return json{{"dim", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("matrix must be a JSON object");
  Index dim = require(j, "dim").get<Index>();
  if (dim <= 0) throw ParseError("matrix dimension must be positive");
  const json& re = require(j, "re");
  const json& im = require(j, "im");
  if (Index(re.size()) != dim || Index(im.size()) != dim)
    throw ParseError("matrix rows do not match 'dim'");
  Matrix m(dim, dim);
  for (Index r = 0; r < dim; ++r) {
    const json& re_row = re[size_t(r)];
    const json& im_row = im[size_t(r)];
    if (Index(re_row.size()) != dim || Index(im_row.size()) != dim)
      throw ParseError("matrix columns do not match 'dim'");
    for (Index c = 0; c < dim; ++c) {
      if (!re_row[size_t(c)].is_number() || !im_row[size_t(c)].is_number())
        throw ParseError("matrix entries must be numbers");
      m(r, c) = Complex(re_row[size_t(c)].get<double>(), im_row[size_t(c)].get<double>());
    }
  }
  return m;
}

json label_to_json(const Label& label) {
  if (label.is_integer()) return label.integer();
  if (label.is_real()) return label.number();
  if (label.is_text()) return label.text();
  json arr = json::array();
  for (const Label& l : label.tuple()) arr.push_back(label_to_json(l));
  return arr;
}

Label label_from_json(const json& j) {
  if (j.is_number_integer()) return Label(j.get<std::int64_t>());
  if (j.is_number()) return Label(j.get<double>());
  if (j.is_string()) return Label(j.get<std::string>());
  if (j.is_array()) {
    Label::Tuple t;
    for (const auto& v : j) t.push_back(label_from_json(v));
    return Label(std::move(t));
  }
  throw ParseError("labels must be numbers, strings, or arrays");
}

MeasurementSequence::Step step_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("coarse-graining must be a JSON object");
  const json& elements = require(j, "elements");
  if (!elements.is_array() || elements.empty())
    throw ParseError("'elements' must be a nonempty array of matrices");
  std::vector<Matrix> mats;
  mats.reserve(elements.size());
  for (const auto& e : elements) mats.push_back(matrix_from_json(e));
  if (j.contains("dim")) {
    Index dim = j["dim"].get<Index>();
    for (const Matrix& m : mats)
      if (m.rows() != dim) throw ParseError("element dimension disagrees with 'dim'");
  }
  std::vector<Label> labels;
  if (j.contains("labels"))
    for (const auto& l : j["labels"]) labels.push_back(label_from_json(l));

  std::string kind = j.value("kind", std::string("projective"));
  if (kind == "projective") return CoarseGraining::from_projectors(mats, std::move(labels));
  if (kind == "kraus") return KrausCoarseGraining(std::move(mats), std::move(labels));
  throw ParseError("'kind' must be 'projective' or 'kraus'");
}

json coarse_graining_to_json(const CoarseGraining& cg) {
  json elements = json::array(), labels = json::array();
  for (int k = 0; k < cg.size(); ++k) {
    elements.push_back(matrix_to_json(cg.element(k).matrix()));
    labels.push_back(label_to_json(cg.label(k)));
  }
  return json{{"dim", cg.dim()},
              {"elements", std::move(elements)},
              {"labels", std::move(labels)}};
}

ClassicalSpace classical_space_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("classical space must be a JSON object");
  const json& points = require(j, "points");
  if (!points.is_array() || points.empty())
    throw ParseError("'points' must be a nonempty array");
  std::vector<Label> pts;
  for (const auto& p : points) pts.push_back(label_from_json(p));

  std::vector<double> weights;
  if (j.contains("weights")) weights = real_vector(j["weights"], "'weights'");
  std::vector<double> density = real_vector(require(j, "density"), "'density'");
  return ClassicalSpace(std::move(pts), std::move(weights), std::move(density));
}

ClassicalCoarseGraining classical_cg_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("classical coarse-graining must be a JSON object");
  const json& cells = require(j, "cells");
  if (!cells.is_array()) throw ParseError("'cells' must be an array of index arrays");
  ClassicalCoarseGraining cg;
  for (const auto& cell : cells) {
    if (!cell.is_array()) throw ParseError("'cells' must be an array of index arrays");
    std::vector<int> indices;
    for (const auto& i : cell) {
      if (!i.is_number_integer()) throw ParseError("cell entries must be point indices");
      indices.push_back(i.get<int>());
    }
    cg.cells.push_back(std::move(indices));
  }
  if (j.contains("labels"))
    for (const auto& l : j["labels"]) cg.labels.push_back(label_from_json(l));
  return cg;
}

QuenchScenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("scenario must be a JSON object");
  QuenchScenario sc;
  const json& model = require(j, "model");
  sc.model.sites = require(model, "sites").get<int>();
  if (model.contains("particle_sector"))
    sc.model.particle_sector = model["particle_sector"].get<int>();
  sc.model.hop_nn = model.value("hop_nn", 1.0);
  sc.model.hop_nnn = model.value("hop_nnn", 0.0);
  sc.model.interaction_nn = model.value("interaction_nn", 0.0);
  if (model.contains("onsite_potential"))
    sc.model.onsite_potential = real_vector(model["onsite_potential"], "'onsite_potential'");
  if (model.contains("cell_sizes")) {
    for (const auto& s : model["cell_sizes"]) sc.model.cell_sizes.push_back(s.get<int>());
  } else {
    sc.model.cells = model.value("cells", 1);
  }
  if (model.contains("site_cap")) sc.model.site_cap = model["site_cap"].get<int>();
  if (model.contains("dim_cap")) sc.model.dim_cap = model["dim_cap"].get<Index>();

  sc.initial_occupation = require(j, "initial_occupation").get<std::string>();

  const json& times = require(j, "times");
  if (times.is_array()) {
    sc.times = real_vector(times, "'times'");
  } else if (times.is_object()) {
    double start = require(times, "start").get<double>();
    double stop = require(times, "stop").get<double>();
    int count = require(times, "count").get<int>();
    if (count < 1) throw ParseError("'times.count' must be at least 1");
    for (int i = 0; i < count; ++i)
      sc.times.push_back(count == 1 ? start
                                    : start + (stop - start) * double(i) / double(count - 1));
  } else {
    throw ParseError("'times' must be an array or a {start, stop, count} object");
  }

  sc.shell_width = j.value("shell_width", -1.0);
  if (j.contains("entropies"))
    for (const auto& id : j["entropies"])
      sc.selection.push_back(thermo_entropy_from_id(id.get<std::string>()));
  sc.seed = j.value("seed", std::uint64_t{0});

  if (j.contains("subsystem_coarse_graining")) {
    const json& sub = j["subsystem_coarse_graining"];
    if (sub.is_object()) {
      auto step = step_from_json(sub);
      if (!std::holds_alternative<CoarseGraining>(step))
        throw ParseError("subsystem coarse-graining must be projective");
      sc.subsystem_cg = std::get<CoarseGraining>(step);
    } else {
      throw ParseError("'subsystem_coarse_graining' must be a coarse-graining object");
    }
  }
  return sc;
}

json scenario_to_json(const QuenchScenario& sc) {
  json model{{"sites", sc.model.sites},
             {"hop_nn", sc.model.hop_nn},
             {"hop_nnn", sc.model.hop_nnn},
             {"interaction_nn", sc.model.interaction_nn}};
  if (sc.model.particle_sector) model["particle_sector"] = *sc.model.particle_sector;
  if (!sc.model.onsite_potential.empty()) model["onsite_potential"] = sc.model.onsite_potential;
  if (!sc.model.cell_sizes.empty())
    model["cell_sizes"] = sc.model.cell_sizes;
  else
    model["cells"] = sc.model.cells;

  json entropies = json::array();
  for (ThermoEntropy e : sc.selection) entropies.push_back(thermo_entropy_id(e));
  json out{{"model", std::move(model)},
           {"initial_occupation", sc.initial_occupation},
           {"times", sc.times},
           {"entropies", std::move(entropies)},
           {"seed", sc.seed}};
  if (sc.shell_width >= 0) out["shell_width"] = sc.shell_width;
  return out;
}

json distribution_to_json(const MacrostateDistribution& dist) {
  json records = json::array();
  for (const auto& r : dist.records())
    records.push_back(json{{"labels", label_to_json(r.multi_index)},
                           {"p", r.probability},
                           {"V", r.volume}});
  return records;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what());
  }
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

QuantumState load_state(const std::string& path) {
  return QuantumState(matrix_from_json(load_json(path)));
}

Observable load_observable(const std::string& path) {
  return Observable(matrix_from_json(load_json(path)));
}

MeasurementSequence::Step load_step(const std::string& path) {
  return step_from_json(load_json(path));
}

ClassicalSpace load_classical_space(const std::string& path) {
  return classical_space_from_json(load_json(path));
}

ClassicalCoarseGraining load_classical_cg(const std::string& path) {
  return classical_cg_from_json(load_json(path));
}

QuenchScenario load_scenario(const std::string& path) {
  return scenario_from_json(load_json(path));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_quench_csv(std::ostream& os, const QuenchResult& result) {
  os << "t,entropy_id,value\n";
  for (const auto& row : result.rows)
    os << format_double(row.t) << ',' << thermo_entropy_id(row.id) << ','
       << format_double(row.value) << '\n';
}

json quench_metadata(const QuenchScenario& scenario, const LatticeModel& model,
                     const QuenchResult& result) {
  json meta{{"model", scenario_to_json(scenario)["model"]},
            {"initial_occupation", scenario.initial_occupation},
            {"dim", model.dim()},
            {"ln_dim", result.ln_dim},
            {"s_vn_initial", result.s_vn_initial},
            {"boundary_remainder_norm", result.boundary_remainder_norm},
            {"shell_width", result.shell_width},
            {"time_points", scenario.times.size()},
            {"nonintegrable_intent",
             scenario.model.hop_nnn != 0.0 || scenario.model.interaction_nn != 0.0},
            {"seed", scenario.seed}};
  json entropies = json::array();
  std::vector<std::string> ids;
  for (const auto& row : result.rows) {
    std::string id = thermo_entropy_id(row.id);
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  for (const auto& id : ids) entropies.push_back(id);
  meta["entropies"] = std::move(entropies);
  return meta;
}

}  // namespace obsent::io
