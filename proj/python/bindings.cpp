#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "obsent/classical.hpp"
#include "obsent/correlation.hpp"
#include "obsent/thermo.hpp"

namespace py = pybind11;
using namespace obsent;

namespace {

py::object label_to_py(const Label& l) {
  if (l.is_integer()) return py::int_(l.integer());
  if (l.is_real()) return py::float_(l.number());
  if (l.is_text()) return py::str(l.text());
  const auto& parts = l.tuple();
  py::tuple t(parts.size());
  for (size_t i = 0; i < parts.size(); ++i) t[i] = label_to_py(parts[i]);
  return t;
}

Label label_from_py(py::handle h) {
  if (py::isinstance<py::int_>(h)) return Label(h.cast<std::int64_t>());
  if (py::isinstance<py::float_>(h)) return Label(h.cast<double>());
  if (py::isinstance<py::str>(h)) return Label(h.cast<std::string>());
  if (py::isinstance<py::sequence>(h)) {
    Label::Tuple t;
    for (py::handle item : h.cast<py::sequence>()) t.push_back(label_from_py(item));
    return Label(std::move(t));
  }
  throw py::type_error("labels must be int, float, str, or sequences of those");
}

std::vector<Label> labels_from_py(const py::object& labels) {
  std::vector<Label> out;
  if (!labels.is_none())
    for (py::handle item : labels.cast<py::sequence>()) out.push_back(label_from_py(item));
  return out;
}

ClassicalCoarseGraining classical_cg_from_py(const std::vector<std::vector<int>>& cells) {
  ClassicalCoarseGraining cg;
  cg.cells = cells;
  return cg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "observational entropy toolkit";

  py::register_exception<Error>(m, "ObsentError");

  // --- hilbert ---------------------------------------------------------
  py::class_<QuantumState>(m, "QuantumState")
      .def(py::init<Matrix>(), py::arg("matrix"))
      .def_static("pure", &QuantumState::pure, py::arg("psi"))
      .def_static("maximally_mixed", &QuantumState::maximally_mixed, py::arg("dim"))
      .def_property_readonly("dim", &QuantumState::dim)
      .def_property_readonly("matrix", &QuantumState::matrix);

  py::class_<Observable>(m, "Observable")
      .def(py::init<Matrix>(), py::arg("matrix"))
      .def_property_readonly("dim", &Observable::dim)
      .def_property_readonly("matrix", &Observable::matrix);

  py::class_<CoarseGraining>(m, "CoarseGraining")
      .def_static(
          "from_projectors",
          [](const std::vector<Matrix>& ps, const py::object& labels) {
            return CoarseGraining::from_projectors(ps, labels_from_py(labels));
          },
          py::arg("projectors"), py::arg("labels") = py::none())
      .def_static(
          "from_basis",
          [](Matrix basis, std::vector<Index> sizes, const py::object& labels) {
            return CoarseGraining::from_basis(std::move(basis), std::move(sizes),
                                              labels_from_py(labels));
          },
          py::arg("basis"), py::arg("block_sizes"), py::arg("labels") = py::none())
      .def_static("trivial", &CoarseGraining::trivial, py::arg("dim"))
      .def_property_readonly("dim", &CoarseGraining::dim)
      .def("__len__", &CoarseGraining::size)
      .def("volume", &CoarseGraining::volume, py::arg("k"))
      .def("label", [](const CoarseGraining& cg, int k) { return label_to_py(cg.label(k)); },
           py::arg("k"))
      .def("projector", [](const CoarseGraining& cg, int k) { return cg.element(k).matrix(); },
           py::arg("k"))
      .def_property_readonly("basis", &CoarseGraining::basis);

  py::class_<KrausCoarseGraining>(m, "KrausCoarseGraining")
      .def(py::init([](std::vector<Matrix> elements, const py::object& labels) {
             return KrausCoarseGraining(std::move(elements), labels_from_py(labels));
           }),
           py::arg("elements"), py::arg("labels") = py::none())
      .def_property_readonly("dim", &KrausCoarseGraining::dim)
      .def("__len__", &KrausCoarseGraining::size)
      .def("element", &KrausCoarseGraining::element, py::arg("k"));

  py::class_<TensorSpace>(m, "TensorSpace")
      .def(py::init<std::vector<Index>>(), py::arg("subsystem_dims"))
      .def_property_readonly("total_dim", &TensorSpace::total_dim)
      .def_property_readonly("subsystem_dims", &TensorSpace::subsystem_dims);

  m.def("partial_trace",
        py::overload_cast<const QuantumState&, const TensorSpace&, int>(&partial_trace),
        py::arg("state"), py::arg("space"), py::arg("keep"));
  m.def("coarse_graining_from_observable", &coarse_graining_from_observable, py::arg("obs"),
        py::arg("degeneracy_tol") = tol::degeneracy);
  m.def(
      "energy_shell_coarse_graining",
      [](const Observable& obs, double width, const py::object& origin) {
        return energy_shell_coarse_graining(
            obs, width,
            origin.is_none() ? std::nullopt : std::optional<double>(origin.cast<double>()));
      },
      py::arg("obs"), py::arg("shell_width"), py::arg("origin") = py::none());
  m.def("tensor_product_coarse_graining", &tensor_product_coarse_graining, py::arg("parts"),
        py::arg("space"));
  m.def("joint_coarse_graining", &joint_coarse_graining, py::arg("a"), py::arg("b"),
        py::arg("commute_tol") = 1e-10);

  // --- entropy ---------------------------------------------------------
  py::class_<MeasurementSequence>(m, "MeasurementSequence")
      .def(py::init<std::vector<MeasurementSequence::Step>>(), py::arg("steps"))
      .def_property_readonly("dim", &MeasurementSequence::dim)
      .def("__len__", &MeasurementSequence::length)
      .def_property_readonly("all_projective", &MeasurementSequence::all_projective);

  py::class_<MacrostateDistribution>(m, "MacrostateDistribution")
      .def_property_readonly("dim", &MacrostateDistribution::dim)
      .def("__len__", &MacrostateDistribution::size)
      .def("records", [](const MacrostateDistribution& dist) {
        py::list out;
        for (const auto& r : dist.records())
          out.append(py::make_tuple(label_to_py(r.multi_index), r.probability, r.volume));
        return out;
      });

  m.def("macrostate_distribution",
        py::overload_cast<const QuantumState&, const MeasurementSequence&>(
            &macrostate_distribution),
        py::arg("state"), py::arg("sequence"));
  m.def("observational_entropy",
        py::overload_cast<const QuantumState&, const MeasurementSequence&>(
            &observational_entropy),
        py::arg("state"), py::arg("sequence"));
  m.def("observational_entropy",
        py::overload_cast<const Vector&, const MeasurementSequence&>(&observational_entropy),
        py::arg("psi"), py::arg("sequence"));
  m.def("entropy_decomposition", [](const QuantumState& state, const CoarseGraining& cg) {
    EntropyDecomposition d = entropy_decomposition(state, cg);
    return py::make_tuple(d.shannon_part, d.mean_boltzmann_part);
  });
  m.def("coarse_grained_state", &coarse_grained_state, py::arg("state"), py::arg("cg"));
  m.def("von_neumann_entropy", &von_neumann_entropy, py::arg("state"));
  m.def("kl_identity_check", [](const QuantumState& state, const MeasurementSequence& seq) {
    KlIdentity kl = kl_identity_check(state, seq);
    return py::make_tuple(kl.entropy, kl.kl, kl.residual);
  });

  // --- classical -------------------------------------------------------
  py::class_<ClassicalSpace>(m, "ClassicalSpace")
      .def(py::init([](std::vector<double> density, std::vector<double> weights) {
             if (weights.empty()) return ClassicalSpace::uniform_weights(std::move(density));
             std::vector<Label> pts;
             for (size_t g = 0; g < density.size(); ++g)
               pts.emplace_back(static_cast<std::int64_t>(g));
             return ClassicalSpace(std::move(pts), std::move(weights), std::move(density));
           }),
           py::arg("density"), py::arg("weights") = std::vector<double>{})
      .def("__len__", &ClassicalSpace::size)
      .def_property_readonly("weights", &ClassicalSpace::weights)
      .def_property_readonly("density", &ClassicalSpace::density)
      .def_property_readonly("total_measure", &ClassicalSpace::total_measure);

  m.def(
      "classical_observational_entropy",
      [](const ClassicalSpace& space, const std::vector<std::vector<std::vector<int>>>& cgs) {
        std::vector<ClassicalCoarseGraining> converted;
        for (const auto& cells : cgs) converted.push_back(classical_cg_from_py(cells));
        return classical_observational_entropy(space, converted);
      },
      py::arg("space"), py::arg("coarse_grainings"));
  m.def("gibbs_entropy", &gibbs_entropy, py::arg("space"));

  py::class_<GridAxis>(m, "GridAxis")
      .def(py::init<double, double, int>(), py::arg("lo"), py::arg("hi"), py::arg("bins"))
      .def_readwrite("lo", &GridAxis::lo)
      .def_readwrite("hi", &GridAxis::hi)
      .def_readwrite("bins", &GridAxis::bins);

  py::class_<PhaseSpaceGrid>(m, "PhaseSpaceGrid")
      .def(py::init<>())
      .def_readwrite("particle_count", &PhaseSpaceGrid::particle_count)
      .def_readwrite("axes", &PhaseSpaceGrid::axes)
      .def_readwrite("planck_constant", &PhaseSpaceGrid::planck_constant);

  m.def("build_phase_space", &build_phase_space, py::arg("grid"), py::arg("density_sampler"));

  // --- correlation -----------------------------------------------------
  py::class_<ProductMeasurement>(m, "ProductMeasurement")
      .def(py::init<TensorSpace, std::vector<CoarseGraining>>(), py::arg("space"),
           py::arg("local_cgs"))
      .def_property_readonly("locals", &ProductMeasurement::locals)
      .def("combined", &ProductMeasurement::combined);

  m.def("product_observational_entropy", &product_observational_entropy, py::arg("state"),
        py::arg("measurement"));
  m.def("total_correlation", &total_correlation, py::arg("state"), py::arg("measurement"));
  m.def("decomposition_residual", &decomposition_residual, py::arg("state"),
        py::arg("measurement"));

  py::class_<QceTraceEntry>(m, "QceTraceEntry")
      .def_readonly("restart", &QceTraceEntry::restart)
      .def_readonly("sweeps", &QceTraceEntry::sweeps)
      .def_readonly("achieved_entropy", &QceTraceEntry::achieved_entropy);

  py::class_<QceResult>(m, "QceResult")
      .def_readonly("value", &QceResult::value)
      .def_readonly("certificate_gap", &QceResult::certificate_gap)
      .def_readonly("best_measurement", &QceResult::best_measurement)
      .def_readonly("optimizer_trace", &QceResult::optimizer_trace);

  m.def(
      "quantum_correlation_entropy",
      [](const QuantumState& state, const TensorSpace& space, int restarts, std::uint64_t seed,
         double tol_obj, int max_sweeps) {
        QceOptions opts{restarts, seed, tol_obj, max_sweeps};
        return quantum_correlation_entropy(state, space, opts);
      },
      py::arg("state"), py::arg("space"), py::arg("restarts") = 16, py::arg("seed") = 0,
      py::arg("tol_obj") = 1e-8, py::arg("max_sweeps") = 200);
  m.def("correlation_bound_holds", &correlation_bound_holds, py::arg("state"),
        py::arg("measurement"), py::arg("qce"));

  // --- thermo ----------------------------------------------------------
  py::class_<LatticeConfig>(m, "LatticeConfig")
      .def(py::init<>())
      .def_readwrite("sites", &LatticeConfig::sites)
      .def_readwrite("particle_sector", &LatticeConfig::particle_sector)
      .def_readwrite("hop_nn", &LatticeConfig::hop_nn)
      .def_readwrite("hop_nnn", &LatticeConfig::hop_nnn)
      .def_readwrite("interaction_nn", &LatticeConfig::interaction_nn)
      .def_readwrite("onsite_potential", &LatticeConfig::onsite_potential)
      .def_readwrite("cells", &LatticeConfig::cells)
      .def_readwrite("cell_sizes", &LatticeConfig::cell_sizes)
      .def_readwrite("site_cap", &LatticeConfig::site_cap)
      .def_readwrite("dim_cap", &LatticeConfig::dim_cap);

  py::class_<LatticeModel>(m, "LatticeModel")
      .def_property_readonly("dim", &LatticeModel::dim)
      .def_property_readonly("sites", &LatticeModel::sites)
      .def_property_readonly("cell_count", &LatticeModel::cell_count)
      .def_property_readonly("hamiltonian", &LatticeModel::hamiltonian)
      .def_property_readonly("eigenvalues", &LatticeModel::eigenvalues)
      .def_property_readonly("boundary_remainder", &LatticeModel::boundary_remainder)
      .def_property_readonly("default_shell_width", &LatticeModel::default_shell_width)
      .def("occupation_state", &LatticeModel::occupation_state, py::arg("pattern"))
      .def("global_number_cg", &LatticeModel::global_number_cg)
      .def("local_number_cg", &LatticeModel::local_number_cg)
      .def("global_energy_cg", &LatticeModel::global_energy_cg, py::arg("shell_width"))
      .def("local_energy_cg", &LatticeModel::local_energy_cg, py::arg("shell_width"));

  m.def("build_model", &build_model, py::arg("config"));
  m.def("evolve",
        py::overload_cast<const LatticeModel&, const QuantumState&, double>(&evolve),
        py::arg("model"), py::arg("state"), py::arg("t"));
  m.def("evolve", py::overload_cast<const LatticeModel&, const Vector&, double>(&evolve),
        py::arg("model"), py::arg("psi"), py::arg("t"));

  py::class_<EnsembleSpec>(m, "EnsembleSpec")
      .def_static("microcanonical", &EnsembleSpec::microcanonical, py::arg("energy"),
                  py::arg("shell_width"))
      .def_static("volume_microcanonical", &EnsembleSpec::volume_microcanonical,
                  py::arg("energy"))
      .def_static("canonical", &EnsembleSpec::canonical, py::arg("beta"))
      .def_static("grandcanonical", &EnsembleSpec::grandcanonical, py::arg("beta"),
                  py::arg("mu"));
  m.def("ensemble_state", &ensemble_state, py::arg("model"), py::arg("spec"));

  py::enum_<ThermoEntropy>(m, "ThermoEntropy")
      .value("GLOBAL_NUMBER", ThermoEntropy::GlobalNumber)
      .value("GLOBAL_ENERGY", ThermoEntropy::GlobalEnergy)
      .value("GLOBAL_NUMBER_ENERGY", ThermoEntropy::GlobalNumberEnergy)
      .value("LOCAL_NUMBER", ThermoEntropy::LocalNumber)
      .value("LOCAL_ENERGY", ThermoEntropy::LocalEnergy)
      .value("LOCAL_NUMBER_ENERGY", ThermoEntropy::LocalNumberEnergy)
      .value("LOCAL_NUMBER_GLOBAL_ENERGY", ThermoEntropy::LocalNumberGlobalEnergy)
      .value("GLOBAL_ENERGY_LOCAL_NUMBER", ThermoEntropy::GlobalEnergyLocalNumber)
      .value("SUBSYSTEM_BATH_ENERGY", ThermoEntropy::SubsystemBathEnergy);
  m.def("thermo_entropy_id", &thermo_entropy_id, py::arg("which"));
  m.def("thermo_entropy_from_id", &thermo_entropy_from_id, py::arg("id"));

  m.def(
      "thermo_entropy",
      [](const LatticeModel& model, const QuantumState& state, ThermoEntropy which,
         double shell_width, const py::object& subsystem_cg) {
        const CoarseGraining* sub = nullptr;
        CoarseGraining held;
        if (!subsystem_cg.is_none()) {
          held = subsystem_cg.cast<CoarseGraining>();
          sub = &held;
        }
        return thermo_entropy(model, state, which, shell_width, sub);
      },
      py::arg("model"), py::arg("state"), py::arg("which"), py::arg("shell_width") = -1.0,
      py::arg("subsystem_cg") = py::none());

  m.def(
      "general_conserved_entropy",
      [](const LatticeModel& model, const QuantumState& state,
         const std::vector<Observable>& observables, const std::vector<double>& widths,
         const std::vector<std::vector<Observable>>& locals) {
        ConservedEntropyResult r =
            general_conserved_entropy(model, state, observables, widths, locals);
        py::dict out;
        out["equilibrium"] = r.equilibrium;
        out["nonequilibrium"] =
            r.nonequilibrium ? py::cast(*r.nonequilibrium) : py::none().cast<py::object>();
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("model"), py::arg("state"), py::arg("observables"), py::arg("shell_widths"),
      py::arg("local_variants") = std::vector<std::vector<Observable>>{});

  py::class_<QuenchScenario>(m, "QuenchScenario")
      .def(py::init<>())
      .def_readwrite("model", &QuenchScenario::model)
      .def_readwrite("initial_occupation", &QuenchScenario::initial_occupation)
      .def_readwrite("times", &QuenchScenario::times)
      .def_readwrite("shell_width", &QuenchScenario::shell_width)
      .def_readwrite("selection", &QuenchScenario::selection)
      .def_readwrite("subsystem_cg", &QuenchScenario::subsystem_cg)
      .def_readwrite("seed", &QuenchScenario::seed);

  py::class_<QuenchRow>(m, "QuenchRow")
      .def_readonly("t", &QuenchRow::t)
      .def_readonly("id", &QuenchRow::id)
      .def_readonly("value", &QuenchRow::value);

  py::class_<QuenchResult>(m, "QuenchResult")
      .def_readonly("rows", &QuenchResult::rows)
      .def_readonly("ln_dim", &QuenchResult::ln_dim)
      .def_readonly("s_vn_initial", &QuenchResult::s_vn_initial)
      .def_readonly("boundary_remainder_norm", &QuenchResult::boundary_remainder_norm)
      .def_readonly("shell_width", &QuenchResult::shell_width);

  m.def("run_quench", &run_quench, py::arg("scenario"));
}
