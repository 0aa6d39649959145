#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "obsent/correlation.hpp"
#include "obsent/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace obsent;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitParse = 2;
constexpr int kExitDimension = 3;
constexpr int kExitCap = 4;

void emit(const json& out, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    io::save_json(out_path, out);
  }
}

// ---------------------------------------------------------------------------

struct EntropyArgs {
  std::string state_path;
  std::vector<std::string> cg_paths;
  std::string out_path;
  std::string cg_state_path;
  bool bits = false;
};

int cmd_entropy(const EntropyArgs& args) {
  QuantumState state = io::load_state(args.state_path);
  std::vector<MeasurementSequence::Step> steps;
  for (const auto& path : args.cg_paths) steps.push_back(io::load_step(path));
  MeasurementSequence seq(std::move(steps));

  MacrostateDistribution dist = macrostate_distribution(state, seq);
  double s = entropy_of(dist);
  double s_vn = von_neumann_entropy(state);

  json out{{"entropy", s},
           {"S_vN", s_vn},
           {"ln_dim", std::log(double(state.dim()))},
           {"records", io::distribution_to_json(dist)}};
  if (seq.all_projective()) {
    KlIdentity kl = kl_identity_check(state, seq);
    out["kl"] = kl.kl;
    out["kl_residual"] = kl.residual;
  }
  if (seq.length() == 1 && seq.all_projective()) {
    const auto& cg = std::get<CoarseGraining>(seq.step(0));
    EntropyDecomposition dec = entropy_decomposition(state, cg);
    out["shannon_part"] = dec.shannon_part;
    out["mean_boltzmann_part"] = dec.mean_boltzmann_part;
    if (!args.cg_state_path.empty()) {
      QuantumState cgs = coarse_grained_state(state, cg);
      io::save_json(args.cg_state_path, io::matrix_to_json(cgs.matrix()));
    }
  } else if (!args.cg_state_path.empty()) {
    throw ConfigError("--write-cg-state needs a single projective coarse-graining");
  }
  if (args.bits) {
    const double ln2 = std::log(2.0);
    out["bits"] = json{{"entropy", s / ln2}, {"S_vN", s_vn / ln2}};
  }
  emit(out, args.out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ClassicalArgs {
  std::string space_path;
  std::vector<std::string> cg_paths;
  std::string out_path;
};

int cmd_classical(const ClassicalArgs& args) {
  ClassicalSpace space = io::load_classical_space(args.space_path);
  std::vector<ClassicalCoarseGraining> cgs;
  for (const auto& path : args.cg_paths) cgs.push_back(io::load_classical_cg(path));

  json out{{"gibbs_entropy", gibbs_entropy(space)},
           {"ln_total_measure", std::log(space.total_measure())}};
  if (!cgs.empty()) out["entropy"] = classical_observational_entropy(space, cgs);
  emit(out, args.out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct QceArgs {
  std::string state_path;
  std::vector<Index> dims;
  QceOptions opts;
  std::string out_path;
};

int cmd_qce(const QceArgs& args) {
  QuantumState state = io::load_state(args.state_path);
  TensorSpace space(args.dims);
  QceResult res = quantum_correlation_entropy(state, space, args.opts);
  double s_vn = von_neumann_entropy(state);

  json trace = json::array();
  for (const auto& t : res.optimizer_trace)
    trace.push_back(json{{"restart", t.restart},
                         {"sweeps", t.sweeps},
                         {"achieved_entropy", t.achieved_entropy}});
  json bases = json::array();
  for (const auto& cg : res.best_measurement.locals())
    bases.push_back(io::matrix_to_json(cg.basis()));
  json out{{"value", res.value},
           {"certificate_gap", res.certificate_gap},
           {"S_vN", s_vn},
           {"achieved_entropy", res.value + s_vn},
           {"restarts", args.opts.restarts},
           {"seed", args.opts.seed},
           {"optimizer_trace", std::move(trace)},
           {"best_measurement_bases", std::move(bases)}};
  emit(out, args.out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario_path;
  std::string csv_path;
  std::string meta_path;
};

int cmd_simulate(const SimulateArgs& args) {
  QuenchScenario scenario = io::load_scenario(args.scenario_path);
  LatticeModel model = build_model(scenario.model);

  QuenchResult result = run_quench(scenario);

  fs::path out_dir = ".";
  if (const char* env = std::getenv("OBSENT_OUT_DIR")) out_dir = env;
  fs::path stem = fs::path(args.scenario_path).stem();
  fs::path csv_path =
      args.csv_path.empty() ? out_dir / (stem.string() + ".csv") : fs::path(args.csv_path);
  fs::path meta_path = args.meta_path.empty() ? out_dir / (stem.string() + "_meta.json")
                                              : fs::path(args.meta_path);

  {
    std::ofstream csv(csv_path);
    if (!csv) throw ParseError("cannot write '" + csv_path.string() + "'");
    io::write_quench_csv(csv, result);
  }
  io::save_json(meta_path.string(), io::quench_metadata(scenario, model, result));

  // Final-window (last 25% of the time grid) averages per entropy.
  std::vector<double> times;
  for (const auto& row : result.rows)
    if (times.empty() || row.t != times.back()) times.push_back(row.t);
  size_t window = std::max<size_t>(1, times.size() / 4);
  double window_start = times[times.size() - window];

  std::map<ThermoEntropy, std::pair<double, int>> windowed;
  for (const auto& row : result.rows)
    if (row.t >= window_start) {
      auto& [sum, count] = windowed[row.id];
      sum += row.value;
      ++count;
    }

  std::cout << "wrote " << csv_path.string() << " (" << result.rows.size() << " rows) and "
            << meta_path.string() << '\n';
  std::cout << "ln dim = " << result.ln_dim
            << ", boundary remainder norm = " << result.boundary_remainder_norm << '\n';
  double equilibrium = std::nan("");
  for (const auto& [id, acc] : windowed) {
    double avg = acc.first / acc.second;
    std::cout << "entropy " << thermo_entropy_id(id) << ": final-window average = " << avg
              << '\n';
    if (id == ThermoEntropy::GlobalNumberEnergy) equilibrium = avg;
  }
  if (std::isnan(equilibrium)) {
    QuantumState rho0 = QuantumState::pure(model.occupation_state(scenario.initial_occupation));
    equilibrium = thermo_entropy(model, rho0, ThermoEntropy::GlobalNumberEnergy,
                                 scenario.shell_width);
  }
  std::cout << "equilibrium value (1c) = " << equilibrium << '\n';
  auto it = windowed.find(ThermoEntropy::LocalNumberEnergy);
  if (it != windowed.end()) {
    double avg = it->second.first / it->second.second;
    std::cout << "gap (1c - 2c final-window) = " << equilibrium - avg << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string path;
  std::string kind = "auto";
};

class CheckReporter {
 public:
  void check(const std::string& name, bool ok, double residual) {
    std::cout << (ok ? "ok   " : "FAIL ") << name << " (residual=" << residual << ")\n";
    all_ok_ &= ok;
  }
  void check(const std::string& name, bool ok) {
    std::cout << (ok ? "ok   " : "FAIL ") << name << '\n';
    all_ok_ &= ok;
  }
  bool all_ok() const { return all_ok_; }

 private:
  bool all_ok_ = true;
};

void validate_state(const json& j, CheckReporter& rep) {
  Matrix m = io::matrix_from_json(j);
  double herm = detail::max_abs(m - m.adjoint());
  rep.check("hermitian", herm <= tol::hermitian, herm);
  double tr = std::abs(m.trace() - Complex(1.0, 0.0));
  rep.check("unit_trace", tr <= tol::trace_one, tr);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix((m + m.adjoint()) / 2.0),
                                           Eigen::EigenvaluesOnly);
  double min_ev = es.eigenvalues().minCoeff();
  rep.check("positive_semidefinite", min_ev >= tol::psd_floor, min_ev);
}

void validate_observable(const json& j, CheckReporter& rep) {
  Matrix m = io::matrix_from_json(j);
  double herm = detail::max_abs(m - m.adjoint());
  rep.check("hermitian", herm <= tol::hermitian, herm);
}

void validate_coarse_graining(const json& j, CheckReporter& rep) {
  std::vector<Matrix> mats;
  for (const auto& e : j.at("elements")) mats.push_back(io::matrix_from_json(e));
  std::string kind = j.value("kind", std::string("projective"));
  if (mats.empty()) throw ParseError("'elements' is empty");
  Index dim = mats[0].rows();

  if (kind == "kraus") {
    Matrix sum = Matrix::Zero(dim, dim);
    for (const Matrix& k : mats) sum += k.adjoint() * k;
    sum.diagonal().array() -= 1.0;
    double dev = detail::max_abs(sum);
    rep.check("kraus_completeness", dev <= tol::kraus_completeness, dev);
    return;
  }

  double herm = 0, idem = 0, vol = 0, ortho = 0;
  for (const Matrix& p : mats) {
    herm = std::max(herm, detail::max_abs(p - p.adjoint()));
    idem = std::max(idem, detail::max_abs(p * p - p));
    double tr = p.trace().real();
    vol = std::max(vol, std::abs(tr - std::round(tr)));
  }
  for (size_t a = 0; a < mats.size(); ++a)
    for (size_t b = a + 1; b < mats.size(); ++b)
      ortho = std::max(ortho, detail::max_abs(mats[a] * mats[b]));
  Matrix sum = Matrix::Zero(dim, dim);
  for (const Matrix& p : mats) sum += p;
  sum.diagonal().array() -= 1.0;
  double comp = detail::max_abs(sum);

  rep.check("hermitian", herm <= tol::projector, herm);
  rep.check("idempotent", idem <= tol::projector, idem);
  rep.check("volume_integer", vol <= tol::volume_integer, vol);
  rep.check("orthogonality", ortho <= tol::orthogonality, ortho);
  rep.check("completeness", comp <= tol::completeness, comp);
}

void validate_classical_space(const json& j, CheckReporter& rep) {
  auto weights = j.contains("weights") ? j["weights"].get<std::vector<double>>()
                                       : std::vector<double>(j.at("points").size(), 1.0);
  auto density = j.at("density").get<std::vector<double>>();
  bool weights_ok = true, density_ok = true;
  double norm = 0.0;
  for (size_t g = 0; g < density.size(); ++g) {
    if (g < weights.size() && weights[g] <= 0) weights_ok = false;
    if (density[g] < 0) density_ok = false;
    norm += density[g] * (g < weights.size() ? weights[g] : 1.0);
  }
  rep.check("lengths_match",
            weights.size() == density.size() && density.size() == j.at("points").size());
  rep.check("weights_positive", weights_ok);
  rep.check("density_nonnegative", density_ok);
  rep.check("normalization", std::abs(norm - 1.0) <= tol::classical_norm,
            std::abs(norm - 1.0));
}

void validate_classical_cg(const json& j, CheckReporter& rep) {
  ClassicalCoarseGraining cg = io::classical_cg_from_json(j);
  std::map<int, int> seen;
  bool disjoint = true, nonnegative = true;
  for (const auto& cell : cg.cells)
    for (int g : cell) {
      if (g < 0) nonnegative = false;
      if (seen.count(g)) disjoint = false;
      seen[g] = 1;
    }
  rep.check("indices_nonnegative", nonnegative);
  rep.check("cells_disjoint", disjoint);
}

void validate_scenario(const json& j, CheckReporter& rep) {
  QuenchScenario sc = io::scenario_from_json(j);
  bool sorted = std::is_sorted(sc.times.begin(), sc.times.end());
  rep.check("times_sorted", sorted);
  rep.check("times_nonnegative", sc.times.empty() || sc.times.front() >= 0.0);
  try {
    LatticeModel model = build_model(sc.model);
    rep.check("model_buildable", true);
    model.occupation_state(sc.initial_occupation);
    rep.check("initial_state_valid", true);
  } catch (const Error& e) {
    std::cout << "     (" << e.what() << ")\n";
    rep.check("model_buildable", false);
  }
}

int cmd_validate(const ValidateArgs& args) {
  json j = io::load_json(args.path);

  std::string kind = args.kind;
  if (kind == "auto") {
    if (j.contains("elements")) kind = "coarse-graining";
    else if (j.contains("points")) kind = "classical-space";
    else if (j.contains("cells")) kind = "classical-cg";
    else if (j.contains("model")) kind = "scenario";
    else if (j.contains("re")) kind = "state";
    else throw ParseError("cannot infer the file kind; pass --kind");
  }

  CheckReporter rep;
  if (kind == "state") validate_state(j, rep);
  else if (kind == "observable") validate_observable(j, rep);
  else if (kind == "coarse-graining") validate_coarse_graining(j, rep);
  else if (kind == "classical-space") validate_classical_space(j, rep);
  else if (kind == "classical-cg") validate_classical_cg(j, rep);
  else if (kind == "scenario") validate_scenario(j, rep);
  else throw ParseError("unknown kind '" + kind + "'");

  return rep.all_ok() ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"observational entropy toolkit"};
  app.require_subcommand(1);

  EntropyArgs entropy_args;
  auto* entropy = app.add_subcommand(
      "entropy", "observational entropy of a state under an ordered coarse-graining sequence");
  entropy->add_option("state", entropy_args.state_path, "density matrix file")->required();
  entropy->add_option("coarse-grainings", entropy_args.cg_paths,
                      "coarse-graining files, applied in order")
      ->required();
  entropy->add_option("-o,--out", entropy_args.out_path, "write the JSON report here");
  entropy->add_flag("--bits", entropy_args.bits, "also report entropies in bits");
  entropy->add_option("--write-cg-state", entropy_args.cg_state_path,
                      "write the coarse-grained state (single coarse-graining only)");

  ClassicalArgs classical_args;
  auto* classical =
      app.add_subcommand("classical", "classical observational entropy on a sample space");
  classical->add_option("space", classical_args.space_path, "classical space file")->required();
  classical->add_option("coarse-grainings", classical_args.cg_paths,
                        "classical coarse-graining files");
  classical->add_option("-o,--out", classical_args.out_path, "write the JSON report here");

  QceArgs qce_args;
  std::string dims_text;
  auto* qce = app.add_subcommand(
      "qce", "quantum correlation entropy via product-measurement minimization");
  qce->add_option("state", qce_args.state_path, "density matrix file")->required();
  qce->add_option("-d,--dims", dims_text, "subsystem dimensions, e.g. 2,2")->required();
  qce->add_option("-r,--restarts", qce_args.opts.restarts, "optimizer restarts");
  qce->add_option("-s,--seed", qce_args.opts.seed, "random seed");
  qce->add_option("--tol", qce_args.opts.tol_obj, "objective improvement tolerance");
  qce->add_option("--max-sweeps", qce_args.opts.max_sweeps, "rotation sweeps per restart");
  qce->add_option("-o,--out", qce_args.out_path, "write the JSON report here");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "run a lattice quench scenario");
  simulate->add_option("scenario", sim_args.scenario_path, "scenario file")->required();
  simulate->add_option("--out-csv", sim_args.csv_path, "time series CSV path");
  simulate->add_option("--out-meta", sim_args.meta_path, "metadata JSON path");

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate", "run the invariant checks on an input file");
  validate->add_option("file", validate_args.path, "input file")->required();
  validate->add_option("--kind", validate_args.kind,
                       "state|observable|coarse-graining|classical-space|classical-cg|scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (entropy->parsed()) return cmd_entropy(entropy_args);
    if (classical->parsed()) return cmd_classical(classical_args);
    if (qce->parsed()) {
      std::stringstream ss(dims_text);
      std::string part;
      while (std::getline(ss, part, ','))
        qce_args.dims.push_back(static_cast<Index>(std::stoll(part)));
      return cmd_qce(qce_args);
    }
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (validate->parsed()) return cmd_validate(validate_args);
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDimension;
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCap;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  }
  return kExitOk;
}
