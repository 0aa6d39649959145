#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "obsent/classical.hpp"
#include "obsent/entropy.hpp"
#include "testutil.hpp"

using namespace obsent;
using namespace obsent::testing;

namespace {

ClassicalCoarseGraining cells_of(std::vector<std::vector<int>> cells) {
  ClassicalCoarseGraining cg;
  cg.cells = std::move(cells);
  return cg;
}

// Random partition of {0..n-1} into nonempty cells.
ClassicalCoarseGraining random_classical_cg(int n, std::mt19937_64& rng) {
  int parts = 1 + int(rng() % n);
  std::vector<std::vector<int>> cells(parts);
  for (int g = 0; g < n; ++g) cells[rng() % parts].push_back(g);
  std::vector<std::vector<int>> nonempty;
  for (auto& c : cells)
    if (!c.empty()) nonempty.push_back(std::move(c));
  return cells_of(std::move(nonempty));
}

ClassicalSpace random_classical_space(int n, std::mt19937_64& rng, bool unit_weights = false) {
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  std::vector<double> weights(n), density(n);
  for (int g = 0; g < n; ++g) weights[g] = unit_weights ? 1.0 : uni(rng);
  double mass = 0.0;
  for (int g = 0; g < n; ++g) {
    density[g] = uni(rng);
    mass += density[g] * weights[g];
  }
  for (int g = 0; g < n; ++g) density[g] /= mass;
  std::vector<Label> pts;
  for (int g = 0; g < n; ++g) pts.emplace_back(std::int64_t(g));
  return ClassicalSpace(std::move(pts), std::move(weights), std::move(density));
}

}  // namespace

TEST_CASE("uniform density saturates ln of the total measure") {
  ClassicalSpace space = ClassicalSpace::uniform_weights(std::vector<double>(8, 1.0 / 8.0));
  double s = classical_observational_entropy(space, {cells_of({{0, 1}, {2, 3, 4, 5, 6, 7}})});
  CHECK(s == doctest::Approx(std::log(8.0)));
  CHECK(gibbs_entropy(space) == doctest::Approx(std::log(8.0)));
}

TEST_CASE("point mass in a cell of volume V gives ln V") {
  std::vector<double> density(6, 0.0);
  density[2] = 1.0;
  ClassicalSpace space = ClassicalSpace::uniform_weights(density);
  double s = classical_observational_entropy(space, {cells_of({{0, 1, 2}, {3, 4, 5}})});
  CHECK(s == doctest::Approx(std::log(3.0)));
  CHECK(gibbs_entropy(space) == doctest::Approx(0.0));
}

TEST_CASE("order invariance of multiple coarse-grainings") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 4 + int(rng() % 10);
    ClassicalSpace space = random_classical_space(n, rng);
    ClassicalCoarseGraining a = random_classical_cg(n, rng);
    ClassicalCoarseGraining b = random_classical_cg(n, rng);
    ClassicalCoarseGraining c = random_classical_cg(n, rng);
    double abc = classical_observational_entropy(space, {a, b, c});
    double cab = classical_observational_entropy(space, {c, a, b});
    double bca = classical_observational_entropy(space, {b, c, a});
    CHECK(std::abs(abc - cab) <= 1e-12);
    CHECK(std::abs(abc - bca) <= 1e-12);
  }
}

TEST_CASE("classical bounds") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 3 + int(rng() % 10);
    ClassicalSpace space = random_classical_space(n, rng);
    std::vector<ClassicalCoarseGraining> cgs{random_classical_cg(n, rng)};
    if (rng() % 2) cgs.push_back(random_classical_cg(n, rng));
    double s = classical_observational_entropy(space, cgs);
    CHECK(s >= gibbs_entropy(space) - 1e-9);
    CHECK(s <= std::log(space.total_measure()) + 1e-9);
  }
}

TEST_CASE("refinement never increases the entropy") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 3 + int(rng() % 10);
    ClassicalSpace space = random_classical_space(n, rng);
    std::vector<ClassicalCoarseGraining> cgs{random_classical_cg(n, rng)};
    double s = classical_observational_entropy(space, cgs);
    cgs.push_back(random_classical_cg(n, rng));
    double refined = classical_observational_entropy(space, cgs);
    CHECK(refined <= s + 1e-12);
  }
}

TEST_CASE("diagonal quantum problems reduce to the classical module") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    Index d = 3 + Index(rng() % 8);
    std::uniform_real_distribution<double> uni(0.01, 1.0);
    Vector diag(d);
    double mass = 0.0;
    for (Index i = 0; i < d; ++i) {
      diag(i) = uni(rng);
      mass += diag(i).real();
    }
    diag /= mass;
    QuantumState rho = QuantumState::trusted(Matrix(diag.asDiagonal()));

    ClassicalCoarseGraining part_a = random_classical_cg(int(d), rng);
    ClassicalCoarseGraining part_b = random_classical_cg(int(d), rng);

    // The same partitions as diagonal projector coarse-grainings.
    auto as_quantum = [&](const ClassicalCoarseGraining& ccg) {
      std::vector<Matrix> mats;
      for (const auto& cell : ccg.cells) {
        Matrix p = Matrix::Zero(d, d);
        for (int g : cell) p(g, g) = 1.0;
        mats.push_back(std::move(p));
      }
      return CoarseGraining::from_projectors(mats);
    };
    double quantum = observational_entropy(
        rho, MeasurementSequence{as_quantum(part_a), as_quantum(part_b)});

    std::vector<double> density(d);
    for (Index i = 0; i < d; ++i) density[i] = diag(i).real();
    ClassicalSpace space = ClassicalSpace::uniform_weights(density);
    double classical = classical_observational_entropy(space, {part_a, part_b});
    CHECK(std::abs(quantum - classical) <= 1e-12);
  }
}

TEST_CASE("partition validation") {
  ClassicalSpace space = ClassicalSpace::uniform_weights(std::vector<double>(4, 0.25));
  CHECK_THROWS_AS(classical_observational_entropy(space, {cells_of({{0, 1}, {1, 2, 3}})}),
                  PartitionMismatch);
  CHECK_THROWS_AS(classical_observational_entropy(space, {cells_of({{0, 1}, {2}})}),
                  PartitionMismatch);
  CHECK_THROWS_AS(classical_observational_entropy(space, {cells_of({{0, 1, 2, 3, 4}})}),
                  PartitionMismatch);
}

TEST_CASE("space validation") {
  CHECK_THROWS_AS(ClassicalSpace({Label(0)}, {1.0}, {0.5}), NotADensity);
  CHECK_THROWS_AS(ClassicalSpace({Label(0), Label(1)}, {1.0, -1.0}, {0.5, 0.5}), NotADensity);
  CHECK_THROWS_AS(ClassicalSpace({Label(0), Label(1)}, {1.0, 1.0}, {1.5, -0.5}), NotADensity);
}

TEST_CASE("phase-space grid construction") {
  // A single cell of measure h^{3N} becomes one point of weight 1.
  PhaseSpaceGrid grid;
  grid.particle_count = 1;
  grid.planck_constant = 2.0;
  grid.axes = {{0.0, 8.0, 1}};  // measure 8 = 2^3
  ClassicalSpace space = build_phase_space(grid, [](const std::vector<double>&) { return 1.0; });
  REQUIRE(space.size() == 1);
  CHECK(space.weights()[0] == doctest::Approx(1.0));

  // 1D grid with four equal cells and a uniform sampler.
  PhaseSpaceGrid grid4;
  grid4.particle_count = 1;
  grid4.axes = {{0.0, 1.0, 4}};
  ClassicalSpace uniform =
      build_phase_space(grid4, [](const std::vector<double>&) { return 3.0; });
  REQUIRE(uniform.size() == 4);
  for (size_t g = 0; g < 4; ++g) {
    CHECK(uniform.weights()[g] == doctest::Approx(0.25));
    CHECK(uniform.density()[g] == doctest::Approx(1.0));
  }

  // Doubling h with N = 1 divides every weight by 8.
  PhaseSpaceGrid doubled = grid4;
  doubled.planck_constant = 2.0;
  ClassicalSpace scaled =
      build_phase_space(doubled, [](const std::vector<double>&) { return 3.0; });
  for (size_t g = 0; g < 4; ++g)
    CHECK(scaled.weights()[g] == doctest::Approx(uniform.weights()[g] / 8.0));

  CHECK_THROWS_AS(build_phase_space(grid4, [](const std::vector<double>&) { return 0.0; }),
                  ZeroDensity);
}

TEST_CASE("sampler sees cell centers") {
  PhaseSpaceGrid grid;
  grid.particle_count = 1;
  grid.axes = {{0.0, 1.0, 2}, {0.0, 2.0, 2}};
  std::vector<std::vector<double>> seen;
  build_phase_space(grid, [&](const std::vector<double>& x) {
    seen.push_back(x);
    return 1.0;
  });
  REQUIRE(seen.size() == 4);
  CHECK(seen[0][0] == doctest::Approx(0.25));
  CHECK(seen[0][1] == doctest::Approx(0.5));
  CHECK(seen[3][0] == doctest::Approx(0.75));
  CHECK(seen[3][1] == doctest::Approx(1.5));
}
