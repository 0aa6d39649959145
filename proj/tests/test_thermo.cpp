#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "obsent/thermo.hpp"
#include "testutil.hpp"

using namespace obsent;
using namespace obsent::testing;

namespace {

LatticeConfig reference_config(int sites, int cells = 2) {
  LatticeConfig c;
  c.sites = sites;
  c.particle_sector = sites / 2;
  c.hop_nn = 1.0;
  c.hop_nnn = 0.32;
  c.interaction_nn = 1.0;
  c.cells = cells;
  return c;
}

std::string domain_wall(int sites) {
  std::string s(sites, '0');
  for (int i = 0; i < sites / 2; ++i) s[i] = '1';
  return s;
}

// Particle-number coarse-graining of a 2^len dimensional cell space.
CoarseGraining cell_number_cg(int len) {
  Index d = Index(1) << len;
  std::vector<Matrix> projectors(len + 1, Matrix::Zero(d, d));
  for (Index x = 0; x < d; ++x) projectors[std::popcount(std::uint32_t(x))](x, x) = 1.0;
  std::vector<Matrix> nonzero;
  std::vector<Label> labels;
  for (int n = 0; n <= len; ++n)
    if (projectors[n].trace().real() > 0.5) {
      nonzero.push_back(projectors[n]);
      labels.emplace_back(std::int64_t(n));
    }
  return CoarseGraining::from_projectors(nonzero, labels);
}

}  // namespace

TEST_CASE("two-site hopping matrix") {
  LatticeConfig c;
  c.sites = 2;
  c.particle_sector = 1;
  c.hop_nn = 1.0;
  LatticeModel model = build_model(c);
  REQUIRE(model.dim() == 2);
  CHECK(model.hamiltonian()(0, 1) == doctest::Approx(-1.0));
  CHECK(model.hamiltonian()(1, 0) == doctest::Approx(-1.0));
  CHECK(model.hamiltonian()(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("model invariants") {
  LatticeModel model = build_model(reference_config(8));
  REQUIRE(model.dim() == 70);

  // [H, N] = 0.
  RealMatrix n = model.number_diagonal().asDiagonal();
  CHECK((model.hamiltonian() * n - n * model.hamiltonian()).cwiseAbs().maxCoeff() <= 1e-10);

  // Term partition: H = sum_c H_c + boundary, exactly.
  RealMatrix sum = model.boundary_remainder();
  for (int c = 0; c < model.cell_count(); ++c) sum += model.local_hamiltonian(c);
  CHECK((sum - model.hamiltonian()).cwiseAbs().maxCoeff() == 0.0);

  // sum_c N_c = N, exactly.
  RealVector nsum = RealVector::Zero(model.dim());
  for (int c = 0; c < model.cell_count(); ++c) nsum += model.local_number_diagonal(c);
  CHECK((nsum - model.number_diagonal()).cwiseAbs().maxCoeff() == 0.0);

  CHECK(model.boundary_remainder().norm() > 0.0);
}

TEST_CASE("configuration errors") {
  LatticeConfig too_big = reference_config(20);
  CHECK_THROWS_AS(build_model(too_big), CapExceeded);

  LatticeConfig tiny_cap = reference_config(8);
  tiny_cap.dim_cap = 10;
  CHECK_THROWS_AS(build_model(tiny_cap), CapExceeded);

  LatticeConfig empty_cell = reference_config(4);
  empty_cell.cell_sizes = {4, 0};
  CHECK_THROWS_AS(build_model(empty_cell), ConfigError);

  LatticeConfig bad_sector = reference_config(4);
  bad_sector.particle_sector = 9;
  CHECK_THROWS_AS(build_model(bad_sector), ConfigError);
}

TEST_CASE("occupation states") {
  LatticeModel model = build_model(reference_config(6));
  Vector psi = model.occupation_state("111000");
  CHECK(psi.norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(model.occupation_state("11000"), ConfigError);
  CHECK_THROWS_AS(model.occupation_state("110000"), ConfigError);
  CHECK_THROWS_AS(model.occupation_state("11x000"), ConfigError);
}

TEST_CASE("evolution") {
  LatticeModel model = build_model(reference_config(6));
  QuantumState rho0 = QuantumState::pure(model.occupation_state(domain_wall(6)));

  QuantumState same = evolve(model, rho0, 0.0);
  CHECK(detail::max_abs(same.matrix() - rho0.matrix()) < 1e-12);

  Matrix h = model.hamiltonian().cast<Complex>();
  double e0 = (h * rho0.matrix()).trace().real();
  double s_th0 = thermo_entropy(model, rho0, ThermoEntropy::GlobalNumberEnergy);
  for (double t : {0.7, 3.1, 12.4}) {
    QuantumState rho = evolve(model, rho0, t);
    CHECK(std::abs((h * rho.matrix()).trace().real() - e0) < 1e-9);
    CHECK(std::abs(rho.matrix().trace().real() - 1.0) < 1e-9);
    CHECK(detail::max_abs(rho.matrix() - rho.matrix().adjoint()) < 1e-9);
    CHECK(std::abs(thermo_entropy(model, rho, ThermoEntropy::GlobalNumberEnergy) - s_th0) <
          1e-8);
  }
}

TEST_CASE("canonical state concentrates on the ground space at large beta") {
  LatticeModel model = build_model(reference_config(6));
  const RealVector& evals = model.eigenvalues();
  double gap = evals(1) - evals(0);
  REQUIRE(gap > 1e-8);
  double beta = 25.0 / gap;
  QuantumState gibbs = ensemble_state(model, EnsembleSpec::canonical(beta));
  Vector ground = model.eigenvectors().col(0).cast<Complex>();
  double ground_pop = (ground.adjoint() * gibbs.matrix() * ground)(0, 0).real();
  CHECK(1.0 - ground_pop <= 1e-6);
}

TEST_CASE("microcanonical shells") {
  LatticeModel model = build_model(reference_config(6));
  const RealVector& evals = model.eigenvalues();
  double w = model.spectral_range() / 5.0;
  // A populated shell aligned with the 1b/1c binning anchored at the bottom.
  double lo = 0.0;
  Index count = 0;
  for (long long bin = 1; bin < 5 && count < 2; ++bin) {
    lo = evals(0) + double(bin) * w;
    count = 0;
    for (Index i = 0; i < evals.size(); ++i)
      if (evals(i) >= lo && evals(i) < lo + w) ++count;
  }
  REQUIRE(count >= 2);

  QuantumState micro = ensemble_state(model, EnsembleSpec::microcanonical(lo, w));
  CHECK(von_neumann_entropy(micro) == doctest::Approx(std::log(double(count))));
  CHECK(thermo_entropy(model, micro, ThermoEntropy::GlobalNumberEnergy, w) ==
        doctest::Approx(std::log(double(count))).epsilon(1e-9));

  CHECK_THROWS_AS(
      ensemble_state(model, EnsembleSpec::microcanonical(evals(evals.size() - 1) + 10.0, w)),
      EmptyShell);
}

TEST_CASE("volume-microcanonical window") {
  LatticeModel model = build_model(reference_config(6));
  const RealVector& evals = model.eigenvalues();
  Index count = 0;
  double cut = evals(evals.size() - 1) + 1.0;
  for (Index i = 0; i < evals.size(); ++i)
    if (evals(i) >= 0.0 && evals(i) < cut) ++count;
  REQUIRE(count > 0);
  QuantumState vol = ensemble_state(model, EnsembleSpec::volume_microcanonical(cut));
  CHECK(von_neumann_entropy(vol) == doctest::Approx(std::log(double(count))));

  CHECK_THROWS_AS(ensemble_state(model, EnsembleSpec::volume_microcanonical(evals(0) - 1.0)),
                  EmptyShell);
}

TEST_CASE("grand canonical state commutes with H") {
  LatticeConfig c = reference_config(4);
  c.particle_sector.reset();
  LatticeModel model = build_model(c);
  QuantumState rho = ensemble_state(model, EnsembleSpec::grandcanonical(0.7, 0.3));
  Matrix h = model.hamiltonian().cast<Complex>();
  CHECK(detail::max_abs(rho.matrix() * h - h * rho.matrix()) < 1e-9);
}

TEST_CASE("maximally mixed state saturates every entropy") {
  LatticeModel model = build_model(reference_config(6));
  QuantumState mixed = QuantumState::maximally_mixed(model.dim());
  double ln_dim = std::log(double(model.dim()));
  for (ThermoEntropy e :
       {ThermoEntropy::GlobalNumber, ThermoEntropy::GlobalEnergy,
        ThermoEntropy::GlobalNumberEnergy, ThermoEntropy::LocalNumber,
        ThermoEntropy::LocalEnergy, ThermoEntropy::LocalNumberEnergy,
        ThermoEntropy::LocalNumberGlobalEnergy, ThermoEntropy::GlobalEnergyLocalNumber})
    CHECK(thermo_entropy(model, mixed, e) == doctest::Approx(ln_dim).epsilon(1e-9));

  CoarseGraining sub = cell_number_cg(3);
  CHECK(thermo_entropy(model, mixed, ThermoEntropy::SubsystemBathEnergy, -1.0, &sub) ==
        doctest::Approx(ln_dim).epsilon(1e-9));
}

TEST_CASE("energy eigenstates give the microcanonical entropy") {
  LatticeModel model = build_model(reference_config(6));
  const RealVector& evals = model.eigenvalues();
  double w = model.default_shell_width();
  for (Index k = 0; k < model.dim(); k += 3) {
    QuantumState eigenstate = QuantumState::pure(model.eigenvectors().col(k).cast<Complex>());
    long long bin = (long long)std::floor((evals(k) - evals(0)) / w);
    Index count = 0;
    for (Index i = 0; i < evals.size(); ++i)
      if ((long long)std::floor((evals(i) - evals(0)) / w) == bin) ++count;
    double s = thermo_entropy(model, eigenstate, ThermoEntropy::GlobalNumberEnergy, w);
    CHECK(std::abs(s - std::log(double(count))) < 1e-9);
  }
}

TEST_CASE("local eigenstate products give summed local microcanonical entropies") {
  LatticeConfig c = reference_config(6);
  LatticeModel model = build_model(c);

  // Cell Hamiltonians as standalone 3-site models.
  LatticeConfig cell_cfg;
  cell_cfg.sites = 3;
  cell_cfg.hop_nn = c.hop_nn;
  cell_cfg.hop_nnn = c.hop_nnn;
  cell_cfg.interaction_nn = c.interaction_nn;
  cell_cfg.cells = 1;
  LatticeModel cell = build_model(cell_cfg);  // unsectored, dim 8

  // Product of a 2-particle eigenstate (cell 0) and a 1-particle eigenstate
  // (cell 1); total occupancy matches the sector.
  LatticeConfig s2 = cell_cfg;
  s2.particle_sector = 2;
  LatticeConfig s1 = cell_cfg;
  s1.particle_sector = 1;
  LatticeModel cell2 = build_model(s2), cell1 = build_model(s1);
  RealVector v0 = cell2.eigenvectors().col(1);
  RealVector v1 = cell1.eigenvectors().col(2);
  double e0 = cell2.eigenvalues()(1), e1 = cell1.eigenvalues()(2);

  Vector psi = Vector::Zero(model.dim());
  for (Index a = 0; a < cell2.dim(); ++a)
    for (Index b = 0; b < cell1.dim(); ++b) {
      std::uint32_t bits = cell2.basis_states()[a] | (cell1.basis_states()[b] << 3);
      psi(model.state_index(bits)) += v0(a) * v1(b);
    }

  double w = model.default_shell_width();
  // Shell populations per cell, binned against the full cell spectrum.
  auto cell_count = [&](double energy) {
    const RealVector& all = cell.eigenvalues();
    long long bin = (long long)std::floor((energy - all(0)) / w);
    Index count = 0;
    for (Index i = 0; i < all.size(); ++i)
      if ((long long)std::floor((all(i) - all(0)) / w) == bin) ++count;
    return count;
  };
  double expected = std::log(double(cell_count(e0))) + std::log(double(cell_count(e1)));
  double s = thermo_entropy(model, QuantumState::pure(psi), ThermoEntropy::LocalNumberEnergy, w);
  CHECK(std::abs(s - expected) < 1e-9);
}

TEST_CASE("sequence refinement bounds between entropy families") {
  LatticeModel model = build_model(reference_config(6));
  QuantumState rho =
      evolve(model, QuantumState::pure(model.occupation_state(domain_wall(6))), 2.3);
  double w = model.default_shell_width();

  double s2a = thermo_entropy(model, rho, ThermoEntropy::LocalNumber, w);
  double s3a = thermo_entropy(model, rho, ThermoEntropy::LocalNumberGlobalEnergy, w);
  CHECK(s3a <= s2a + 1e-9);

  double s1b = thermo_entropy(model, rho, ThermoEntropy::GlobalEnergy, w);
  double s3b = thermo_entropy(model, rho, ThermoEntropy::GlobalEnergyLocalNumber, w);
  CHECK(s3b <= s1b + 1e-9);
}

TEST_CASE("zero shell width collapses 2b onto 2c") {
  LatticeModel model = build_model(reference_config(6));
  QuantumState rho =
      evolve(model, QuantumState::pure(model.occupation_state(domain_wall(6))), 1.7);
  double s2b = thermo_entropy(model, rho, ThermoEntropy::LocalEnergy, 0.0);
  double s2c = thermo_entropy(model, rho, ThermoEntropy::LocalNumberEnergy, 0.0);
  CHECK(std::abs(s2b - s2c) < 1e-9);

  // At zero width, 3b coincides with 1b and 1c on a particle-conserving model.
  double s1b = thermo_entropy(model, rho, ThermoEntropy::GlobalEnergy, 0.0);
  double s1c = thermo_entropy(model, rho, ThermoEntropy::GlobalNumberEnergy, 0.0);
  double s3b = thermo_entropy(model, rho, ThermoEntropy::GlobalEnergyLocalNumber, 0.0);
  CHECK(std::abs(s3b - s1b) < 1e-9);
  CHECK(std::abs(s1c - s1b) < 1e-9);
}

TEST_CASE("canonical state at zero width reproduces its von Neumann entropy") {
  LatticeModel model = build_model(reference_config(6));
  QuantumState gibbs = ensemble_state(model, EnsembleSpec::canonical(0.8));
  double s1b = thermo_entropy(model, gibbs, ThermoEntropy::GlobalEnergy, 0.0);
  CHECK(std::abs(s1b - von_neumann_entropy(gibbs)) < 1e-9);
}

TEST_CASE("2c is additive over independent cells") {
  LatticeConfig c = reference_config(6);
  c.particle_sector.reset();
  LatticeModel model = build_model(c);  // dim 64, cells of 3 sites

  LatticeConfig cell_cfg;
  cell_cfg.sites = 3;
  cell_cfg.hop_nn = c.hop_nn;
  cell_cfg.hop_nnn = c.hop_nnn;
  cell_cfg.interaction_nn = c.interaction_nn;
  cell_cfg.cells = 1;
  LatticeModel cell = build_model(cell_cfg);

  std::mt19937_64 rng(7);
  Matrix ra = random_density_matrix(8, 3, rng);
  Matrix rb = random_density_matrix(8, 2, rng);
  Matrix rho = Matrix::Zero(64, 64);
  // Site bits: cell 0 is the low 3 bits, cell 1 the high 3 bits.
  for (Index a1 = 0; a1 < 8; ++a1)
    for (Index a2 = 0; a2 < 8; ++a2)
      for (Index b1 = 0; b1 < 8; ++b1)
        for (Index b2 = 0; b2 < 8; ++b2)
          rho(a1 + (b1 << 3), a2 + (b2 << 3)) += ra(a1, a2) * rb(b1, b2);

  double w = model.default_shell_width();
  double joint = thermo_entropy(model, QuantumState::trusted(rho),
                                ThermoEntropy::LocalNumberEnergy, w);
  // For a single-cell model, (1c) is the same coarse-graining as one factor
  // of (2c); anchors agree because the cell spectra are identical.
  double sum =
      thermo_entropy(cell, QuantumState::trusted(ra), ThermoEntropy::GlobalNumberEnergy, w) +
      thermo_entropy(cell, QuantumState::trusted(rb), ThermoEntropy::GlobalNumberEnergy, w);
  CHECK(std::abs(joint - sum) < 1e-9);
}

TEST_CASE("subsystem/bath coarse-graining matches an explicit product") {
  LatticeConfig c = reference_config(4);
  c.particle_sector.reset();
  LatticeModel model = build_model(c);  // dim 16, two 2-site cells
  double w = 0.9;

  CoarseGraining sub = cell_number_cg(2);
  std::mt19937_64 rng(5);
  QuantumState rho = random_state(16, rng);
  double s4 = thermo_entropy(model, rho, ThermoEntropy::SubsystemBathEnergy, w, &sub);

  // Cell 1 occupies the high bits, so it is the leading tensor factor.
  LatticeConfig cell_cfg;
  cell_cfg.sites = 2;
  cell_cfg.hop_nn = c.hop_nn;
  cell_cfg.hop_nnn = c.hop_nnn;
  cell_cfg.interaction_nn = c.interaction_nn;
  LatticeModel cell = build_model(cell_cfg);
  CoarseGraining bath_energy =
      energy_shell_coarse_graining(cell.hamiltonian_observable(), w);
  CoarseGraining product =
      tensor_product_coarse_graining({bath_energy, sub}, TensorSpace({4, 4}));
  double expected = observational_entropy(rho, MeasurementSequence{product});
  CHECK(std::abs(s4 - expected) < 1e-9);
}

TEST_CASE("subsystem/bath entropy in a sector matches the commuting-sequence route") {
  // With two cells in a fixed sector, measuring the cell-0 particle number
  // fixes the whole occupancy vector, so entropy 4 with a number
  // coarse-graining equals the sequence (local numbers, cell-1 shells).
  LatticeModel model = build_model(reference_config(6));
  double w = model.spectral_range() / 7.0;

  CoarseGraining sub = cell_number_cg(3);
  std::mt19937_64 rng(13);
  QuantumState rho = random_state(model.dim(), rng);
  double s4 = thermo_entropy(model, rho, ThermoEntropy::SubsystemBathEnergy, w, &sub);

  // Independent route: model-space shells of H_1 after resolving the local
  // particle numbers. The cell ground level is multiply realized in the
  // sector, so the anchor is nudged below it; otherwise rounding from the
  // separate eigensolve can split its copies across the first shell edge.
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(model.local_hamiltonian(1));
  CoarseGraining bath_shells = energy_shell_coarse_graining(
      model.local_hamiltonian_observable(1), w, es.eigenvalues()(0) - 1e-9);
  double expected =
      observational_entropy(rho, MeasurementSequence{model.local_number_cg(), bath_shells});
  CHECK(std::abs(s4 - expected) < 1e-9);
}

TEST_CASE("sector models reject non-conserving subsystem coarse-grainings") {
  LatticeModel model = build_model(reference_config(6));
  // The X-basis on the first site mixes particle numbers.
  Matrix x = Matrix::Zero(8, 8);
  for (Index i = 0; i < 8; ++i) x(i, i ^ 1) = 1.0;
  CoarseGraining xcg = coarse_graining_from_observable(Observable(x));
  CHECK_THROWS_AS(
      thermo_entropy(model, QuantumState::maximally_mixed(model.dim()),
                     ThermoEntropy::SubsystemBathEnergy, -1.0, &xcg),
      ConfigError);

  // A particle-conserving choice works.
  CoarseGraining sub = cell_number_cg(3);
  CHECK_NOTHROW(thermo_entropy(model, QuantumState::maximally_mixed(model.dim()),
                               ThermoEntropy::SubsystemBathEnergy, -1.0, &sub));
}

TEST_CASE("general conserved entropy reproduces the built-in definitions") {
  LatticeModel model = build_model(reference_config(6));
  QuantumState rho =
      evolve(model, QuantumState::pure(model.occupation_state(domain_wall(6))), 1.1);
  double w = model.default_shell_width();

  std::vector<Observable> global{model.number_observable(), model.hamiltonian_observable()};
  std::vector<std::vector<Observable>> locals{
      {model.local_number_observable(0), model.local_number_observable(1)},
      {model.local_hamiltonian_observable(0), model.local_hamiltonian_observable(1)}};
  for (double width : {w, w / 3.0, 2.0 * w}) {
    ConservedEntropyResult at_width =
        general_conserved_entropy(model, rho, global, {0.0, width}, locals);
    CHECK(std::abs(at_width.equilibrium -
                   thermo_entropy(model, rho, ThermoEntropy::GlobalNumberEnergy, width)) <
          1e-10);
    REQUIRE(at_width.nonequilibrium.has_value());
    CHECK(std::abs(*at_width.nonequilibrium -
                   thermo_entropy(model, rho, ThermoEntropy::LocalNumberEnergy, width)) <
          1e-10);
  }
  ConservedEntropyResult res = general_conserved_entropy(model, rho, global, {0.0, w}, locals);
  CHECK(res.warnings.empty());

  ConservedEntropyResult only_h =
      general_conserved_entropy(model, rho, {model.hamiltonian_observable()}, {w});
  CHECK(std::abs(only_h.equilibrium -
                 thermo_entropy(model, rho, ThermoEntropy::GlobalEnergy, w)) < 1e-10);
  CHECK_FALSE(only_h.nonequilibrium.has_value());

  // Equilibrium value stays constant along the evolution.
  for (double t : {0.4, 2.9, 7.3}) {
    QuantumState moved = evolve(model, rho, t);
    ConservedEntropyResult again =
        general_conserved_entropy(model, moved, global, {0.0, w}, locals);
    CHECK(std::abs(again.equilibrium - res.equilibrium) < 1e-8);
  }

  // A non-conserved observable triggers a warning, not an error.
  std::mt19937_64 rng(3);
  Matrix r = random_density_matrix(model.dim(), 4, rng);
  ConservedEntropyResult warned =
      general_conserved_entropy(model, rho, {Observable(r + r.adjoint())}, {0.0});
  CHECK_FALSE(warned.warnings.empty());
}

TEST_CASE("run_quench emits ordered deterministic rows") {
  QuenchScenario sc;
  sc.model = reference_config(6);
  sc.initial_occupation = domain_wall(6);
  for (int i = 0; i < 6; ++i) sc.times.push_back(double(i) * 2.0);
  sc.selection = {ThermoEntropy::LocalNumberEnergy, ThermoEntropy::GlobalNumberEnergy,
                  ThermoEntropy::GlobalNumber, ThermoEntropy::LocalNumber,
                  ThermoEntropy::LocalNumberGlobalEnergy};

  QuenchResult res = run_quench(sc);
  REQUIRE(res.rows.size() == 6 * 5);
  CHECK(res.s_vn_initial == 0.0);
  CHECK(res.ln_dim == doctest::Approx(std::log(20.0)));

  // Ordered by (t, id); within one t, ids ascend.
  for (size_t i = 1; i < res.rows.size(); ++i) {
    const auto& prev = res.rows[i - 1];
    const auto& cur = res.rows[i];
    CHECK((cur.t > prev.t || (cur.t == prev.t && cur.id > prev.id)));
  }

  // 1c stays flat; every value obeys the global bounds.
  double s1c = -1.0;
  for (const auto& row : res.rows) {
    CHECK(row.value >= -1e-9);
    CHECK(row.value <= res.ln_dim + 1e-9);
    if (row.id == ThermoEntropy::GlobalNumberEnergy) {
      if (s1c < 0) s1c = row.value;
      CHECK(std::abs(row.value - s1c) < 1e-8);
    }
  }

  QuenchResult again = run_quench(sc);
  REQUIRE(again.rows.size() == res.rows.size());
  for (size_t i = 0; i < res.rows.size(); ++i)
    CHECK(again.rows[i].value == res.rows[i].value);
}

TEST_CASE("run_quench validation") {
  QuenchScenario sc;
  sc.model = reference_config(6);
  sc.initial_occupation = domain_wall(6);
  CHECK_THROWS_AS(run_quench(sc), ConfigError);  // no times

  sc.times = {3.0, 1.0};
  CHECK_THROWS_AS(run_quench(sc), ConfigError);  // unsorted

  sc.times = {0.0, 1.0};
  sc.selection = {ThermoEntropy::SubsystemBathEnergy};
  CHECK_THROWS_AS(run_quench(sc), ConfigError);  // no subsystem coarse-graining
}

TEST_CASE("entropy id round-trip") {
  for (ThermoEntropy e :
       {ThermoEntropy::GlobalNumber, ThermoEntropy::GlobalEnergy,
        ThermoEntropy::GlobalNumberEnergy, ThermoEntropy::LocalNumber,
        ThermoEntropy::LocalEnergy, ThermoEntropy::LocalNumberEnergy,
        ThermoEntropy::LocalNumberGlobalEnergy, ThermoEntropy::GlobalEnergyLocalNumber,
        ThermoEntropy::SubsystemBathEnergy})
    CHECK(thermo_entropy_from_id(thermo_entropy_id(e)) == e);
  CHECK_THROWS_AS(thermo_entropy_from_id("9z"), ParseError);
}
