#include "obsent/thermo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace obsent {

namespace {

std::vector<std::uint32_t> sector_states(int sites, std::optional<int> sector) {
  std::vector<std::uint32_t> out;
  const std::uint32_t top = std::uint32_t(1) << sites;
  for (std::uint32_t s = 0; s < top; ++s)
    if (!sector || std::popcount(s) == *sector) out.push_back(s);
  return out;
}

struct Bond {
  int a, b;
  double amplitude;
};

}  // namespace

struct LatticeModel::Impl {
  LatticeConfig config;
  int sites = 0;
  int m = 0;
  std::optional<int> sector;
  std::vector<std::uint32_t> basis;
  std::vector<Index> index_of;  // by bit pattern; -1 when outside the sector
  RealMatrix h;
  RealVector n_diag;
  std::vector<std::pair<int, int>> cells;  // site ranges [first, last)
  std::vector<RealMatrix> local_h;
  std::vector<RealVector> local_n;
  RealMatrix boundary;

  mutable std::once_flag eig_once;
  mutable RealVector evals;
  mutable RealMatrix evecs;
  mutable Matrix evecs_c;

  // Simultaneous eigenstructure of the commuting family {N_1..N_m, H_1..H_m}:
  // product states of per-cell, per-occupancy eigenvectors.
  struct CellSectorEig {
    int occupancy;
    std::vector<std::uint32_t> states;  // cell-local bit patterns
    RealVector evals;
    RealMatrix evecs;
  };
  struct LocalStructure {
    RealMatrix basis;  // model dim x model dim
    std::vector<std::vector<int>> occ;
    std::vector<std::vector<double>> energy;
    std::vector<double> cell_min;
    std::vector<double> cell_range;
    std::vector<std::vector<double>> cell_levels;  // sorted, per cell
    std::vector<std::vector<CellSectorEig>> cell_eigs;
  };
  mutable std::once_flag loc_once;
  mutable LocalStructure loc;

  Index dim() const { return Index(basis.size()); }

  void ensure_eig() const {
    std::call_once(eig_once, [&] {
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
      evals = es.eigenvalues();
      evecs = es.eigenvectors();
      evecs_c = evecs.cast<Complex>();
    });
  }

  void ensure_local() const {
    std::call_once(loc_once, [&] { build_local(); });
  }
  void build_local() const;

  int cell_of(int site) const {
    for (int c = 0; c < m; ++c)
      if (site >= cells[c].first && site < cells[c].second) return c;
    return -1;
  }
};

namespace {

// Nearest and next-nearest hopping bonds of an open chain restricted to the
// site range [lo, hi).
std::vector<Bond> chain_bonds(int lo, int hi, double j_nn, double j_nnn) {
  std::vector<Bond> bonds;
  for (int i = lo; i + 1 < hi; ++i) bonds.push_back({i, i + 1, j_nn});
  for (int i = lo; i + 2 < hi; ++i) bonds.push_back({i, i + 2, j_nnn});
  return bonds;
}

// Dense hard-core-boson Hamiltonian over an explicit basis. Site indices in
// bonds/diagonal terms are global bit positions.
void apply_terms(const std::vector<std::uint32_t>& basis,
                 const std::vector<Index>& index_of, const std::vector<Bond>& bonds,
                 const std::vector<Bond>& density_bonds, const std::vector<Bond>& onsite,
                 RealMatrix& target) {
  for (Index a = 0; a < Index(basis.size()); ++a) {
    std::uint32_t s = basis[a];
    double diag = 0.0;
    for (const Bond& b : density_bonds)
      if ((s >> b.a & 1u) && (s >> b.b & 1u)) diag += b.amplitude;
    for (const Bond& b : onsite)
      if (s >> b.a & 1u) diag += b.amplitude;
    target(a, a) += diag;
    for (const Bond& b : bonds) {
      if (b.amplitude == 0.0) continue;
      bool oa = s >> b.a & 1u, ob = s >> b.b & 1u;
      if (oa == ob) continue;
      std::uint32_t t = s ^ (std::uint32_t(1) << b.a) ^ (std::uint32_t(1) << b.b);
      Index bi = index_of[t];
      target(bi, a) += -b.amplitude;
    }
  }
}

}  // namespace

LatticeModel build_model(const LatticeConfig& config) {
  if (config.sites < 1) throw ConfigError("lattice needs at least one site");
  if (config.sites > config.site_cap) {
    std::ostringstream os;
    os << config.sites << " sites exceed the cap of " << config.site_cap;
    throw CapExceeded(os.str());
  }
  if (config.particle_sector &&
      (*config.particle_sector < 0 || *config.particle_sector > config.sites))
    throw ConfigError("particle sector outside [0, sites]");
  if (!config.onsite_potential.empty() &&
      config.onsite_potential.size() != size_t(config.sites))
    throw ConfigError("onsite potential needs one entry per site");

  auto impl = std::make_shared<LatticeModel::Impl>();
  impl->config = config;
  impl->sites = config.sites;
  impl->sector = config.particle_sector;

  std::vector<int> sizes = config.cell_sizes;
  if (sizes.empty()) {
    int m = config.cells;
    if (m < 1 || m > config.sites) throw ConfigError("cell count outside [1, sites]");
    int base = config.sites / m, rem = config.sites % m;
    for (int c = 0; c < m; ++c) sizes.push_back(base + (c < rem ? 1 : 0));
  }
  int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  if (total != config.sites) throw ConfigError("cell sizes do not cover the chain");
  for (int s : sizes)
    if (s <= 0) throw ConfigError("cells must be nonempty");
  impl->m = int(sizes.size());
  int site = 0;
  for (int s : sizes) {
    impl->cells.emplace_back(site, site + s);
    site += s;
  }

  impl->basis = sector_states(config.sites, config.particle_sector);
  Index dim = Index(impl->basis.size());
  if (dim > config.dim_cap) {
    std::ostringstream os;
    os << "Hilbert space dimension " << dim << " exceeds the cap of " << config.dim_cap;
    throw CapExceeded(os.str());
  }
  impl->index_of.assign(size_t(1) << config.sites, -1);
  for (Index a = 0; a < dim; ++a) impl->index_of[impl->basis[a]] = a;

  auto onsite_terms = [&](int lo, int hi) {
    std::vector<Bond> terms;
    for (int i = lo; i < hi; ++i) {
      double mu = config.onsite_potential.empty() ? 0.0 : config.onsite_potential[i];
      if (mu != 0.0) terms.push_back({i, i, mu});
    }
    return terms;
  };
  auto density_terms = [&](int lo, int hi) {
    std::vector<Bond> terms;
    for (int i = lo; i + 1 < hi; ++i) terms.push_back({i, i + 1, config.interaction_nn});
    return terms;
  };

  impl->h = RealMatrix::Zero(dim, dim);
  impl->boundary = RealMatrix::Zero(dim, dim);
  for (int c = 0; c < impl->m; ++c)
    impl->local_h.push_back(RealMatrix::Zero(dim, dim));

  // Every term lands in exactly one bucket (its cell, or the boundary), so
  // H = sum_c H_c + boundary holds identically.
  std::vector<Bond> all_bonds = chain_bonds(0, config.sites, config.hop_nn, config.hop_nnn);
  std::vector<Bond> all_density = density_terms(0, config.sites);
  std::vector<Bond> all_onsite = onsite_terms(0, config.sites);
  apply_terms(impl->basis, impl->index_of, all_bonds, all_density, all_onsite, impl->h);

  for (int c = 0; c < impl->m; ++c) {
    auto [lo, hi] = impl->cells[c];
    apply_terms(impl->basis, impl->index_of, chain_bonds(lo, hi, config.hop_nn, config.hop_nnn),
                density_terms(lo, hi), onsite_terms(lo, hi), impl->local_h[c]);
  }
  RealMatrix interior = RealMatrix::Zero(dim, dim);
  for (int c = 0; c < impl->m; ++c) interior += impl->local_h[c];
  impl->boundary = impl->h - interior;

  impl->n_diag = RealVector::Zero(dim);
  for (int c = 0; c < impl->m; ++c) impl->local_n.push_back(RealVector::Zero(dim));
  for (Index a = 0; a < dim; ++a) {
    std::uint32_t s = impl->basis[a];
    impl->n_diag(a) = double(std::popcount(s));
    for (int c = 0; c < impl->m; ++c) {
      auto [lo, hi] = impl->cells[c];
      std::uint32_t mask = ((std::uint32_t(1) << (hi - lo)) - 1u) << lo;
      impl->local_n[c](a) = double(std::popcount(s & mask));
    }
  }

  LatticeModel model;
  model.impl_ = std::move(impl);
  return model;
}

void LatticeModel::Impl::build_local() const {
  const Index d = dim();
  loc.cell_eigs.resize(m);
  loc.cell_min.assign(m, 0.0);
  loc.cell_range.assign(m, 0.0);
  loc.cell_levels.assign(m, {});

  int remaining_sites = sites;
  for (int c = 0; c < m; ++c) {
    auto [lo, hi] = cells[c];
    int len = hi - lo;
    remaining_sites -= len;

    int n_lo = 0, n_hi = len;
    if (sector) {
      n_lo = std::max(0, *sector - (sites - len));
      n_hi = std::min(len, *sector);
    }
    for (int n = n_lo; n <= n_hi; ++n) {
      CellSectorEig cs;
      cs.occupancy = n;
      for (std::uint32_t x = 0; x < (std::uint32_t(1) << len); ++x)
        if (std::popcount(x) == n) cs.states.push_back(x);
      Index cd = Index(cs.states.size());
      std::vector<Index> idx(size_t(1) << len, -1);
      for (Index a = 0; a < cd; ++a) idx[cs.states[a]] = a;

      // Cell-local Hamiltonian: same couplings, shifted to local bit
      // positions (identical to the model-space H_c restricted to the cell).
      RealMatrix hc = RealMatrix::Zero(cd, cd);
      std::vector<Bond> bonds = chain_bonds(0, len, config.hop_nn, config.hop_nnn);
      std::vector<Bond> density;
      for (int i = 0; i + 1 < len; ++i) density.push_back({i, i + 1, config.interaction_nn});
      std::vector<Bond> onsite;
      for (int i = 0; i < len; ++i) {
        double mu = config.onsite_potential.empty() ? 0.0 : config.onsite_potential[lo + i];
        if (mu != 0.0) onsite.push_back({i, i, mu});
      }
      apply_terms(cs.states, idx, bonds, density, onsite, hc);

      Eigen::SelfAdjointEigenSolver<RealMatrix> es(hc);
      cs.evals = es.eigenvalues();
      cs.evecs = es.eigenvectors();
      for (Index k = 0; k < cd; ++k) loc.cell_levels[c].push_back(cs.evals(k));
      loc.cell_eigs[c].push_back(std::move(cs));
    }
    std::sort(loc.cell_levels[c].begin(), loc.cell_levels[c].end());
    loc.cell_min[c] = loc.cell_levels[c].front();
    loc.cell_range[c] = loc.cell_levels[c].back() - loc.cell_levels[c].front();
  }

  // Occupancy combinations reaching the sector (or all of them, unsectored).
  std::vector<std::vector<int>> combos;
  std::vector<int> pick(m, 0);
  auto rec = [&](auto&& self, int c, int used) -> void {
    if (c == m) {
      if (!sector || used == *sector) combos.push_back(pick);
      return;
    }
    for (const auto& cs : loc.cell_eigs[c]) {
      if (sector && used + cs.occupancy > *sector) continue;
      pick[c] = cs.occupancy;
      self(self, c + 1, used + cs.occupancy);
    }
  };
  rec(rec, 0, 0);

  loc.basis = RealMatrix::Zero(d, d);
  loc.occ.reserve(d);
  loc.energy.reserve(d);
  Index col = 0;

  std::vector<const CellSectorEig*> chosen(m);
  std::vector<int> k(m, 0);
  for (const auto& combo : combos) {
    for (int c = 0; c < m; ++c) {
      chosen[c] = nullptr;
      for (const auto& cs : loc.cell_eigs[c])
        if (cs.occupancy == combo[c]) chosen[c] = &cs;
    }
    std::fill(k.begin(), k.end(), 0);
    while (true) {
      std::vector<double> energies(m);
      for (int c = 0; c < m; ++c) energies[c] = chosen[c]->evals(k[c]);

      auto fill = [&](auto&& self, int c, std::uint32_t bits, double coeff) -> void {
        if (c == m) {
          loc.basis(index_of[bits], col) = coeff;
          return;
        }
        const auto& cs = *chosen[c];
        int shift = cells[c].first;
        for (Index a = 0; a < Index(cs.states.size()); ++a) {
          double v = cs.evecs(a, k[c]);
          if (v != 0.0) self(self, c + 1, bits | (cs.states[a] << shift), coeff * v);
        }
      };
      fill(fill, 0, 0u, 1.0);
      loc.occ.push_back(combo);
      loc.energy.push_back(energies);
      ++col;

      int c = m - 1;
      while (c >= 0 && ++k[c] == chosen[c]->evals.size()) k[c--] = 0;
      if (c < 0) break;
    }
  }
  if (col != d) throw ConfigError("internal error: local product basis is incomplete");
}

// ---------------------------------------------------------------------------
// LatticeModel accessors

const LatticeConfig& LatticeModel::config() const { return impl_->config; }
Index LatticeModel::dim() const { return impl_->dim(); }
int LatticeModel::sites() const { return impl_->sites; }
int LatticeModel::cell_count() const { return impl_->m; }
std::pair<int, int> LatticeModel::cell_range(int c) const { return impl_->cells[c]; }
int LatticeModel::cell_volume(int c) const {
  return impl_->cells[c].second - impl_->cells[c].first;
}
const std::vector<std::uint32_t>& LatticeModel::basis_states() const { return impl_->basis; }
Index LatticeModel::state_index(std::uint32_t bits) const {
  Index i = bits < impl_->index_of.size() ? impl_->index_of[bits] : -1;
  if (i < 0) throw ConfigError("bit pattern outside the model basis");
  return i;
}
const RealMatrix& LatticeModel::hamiltonian() const { return impl_->h; }
const RealVector& LatticeModel::number_diagonal() const { return impl_->n_diag; }
const RealMatrix& LatticeModel::local_hamiltonian(int c) const { return impl_->local_h[c]; }
const RealVector& LatticeModel::local_number_diagonal(int c) const {
  return impl_->local_n[c];
}
const RealMatrix& LatticeModel::boundary_remainder() const { return impl_->boundary; }

Observable LatticeModel::hamiltonian_observable() const {
  return Observable(impl_->h.cast<Complex>());
}
Observable LatticeModel::number_observable() const {
  return Observable(Matrix(impl_->n_diag.cast<Complex>().asDiagonal()));
}
Observable LatticeModel::local_hamiltonian_observable(int c) const {
  return Observable(impl_->local_h[c].cast<Complex>());
}
Observable LatticeModel::local_number_observable(int c) const {
  return Observable(Matrix(impl_->local_n[c].cast<Complex>().asDiagonal()));
}

const RealVector& LatticeModel::eigenvalues() const {
  impl_->ensure_eig();
  return impl_->evals;
}
const RealMatrix& LatticeModel::eigenvectors() const {
  impl_->ensure_eig();
  return impl_->evecs;
}
double LatticeModel::spectral_range() const {
  const RealVector& e = eigenvalues();
  return e(e.size() - 1) - e(0);
}
double LatticeModel::default_shell_width() const { return spectral_range() / 50.0; }

Vector LatticeModel::occupation_state(const std::string& pattern) const {
  if (pattern.size() != size_t(impl_->sites))
    throw ConfigError("occupation pattern length differs from the site count");
  std::uint32_t bits = 0;
  int count = 0;
  for (int i = 0; i < impl_->sites; ++i) {
    if (pattern[i] == '1') {
      bits |= std::uint32_t(1) << i;
      ++count;
    } else if (pattern[i] != '0') {
      throw ConfigError("occupation pattern must contain only 0 and 1");
    }
  }
  if (impl_->sector && count != *impl_->sector)
    throw ConfigError("occupation pattern does not match the particle sector");
  Vector psi = Vector::Zero(impl_->dim());
  psi(state_index(bits)) = 1.0;
  return psi;
}

// ---------------------------------------------------------------------------
// Coarse-graining builders

namespace {

// Permutation-basis coarse-graining: model basis indices grouped by key.
template <typename Key>
CoarseGraining grouped_basis_cg(Index dim, const std::vector<Key>& keys,
                                const std::function<Label(const Key&)>& label_of) {
  std::vector<Index> order(dim);
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return keys[a] < keys[b]; });

  Matrix basis = Matrix::Zero(dim, dim);
  std::vector<Index> sizes;
  std::vector<Label> labels;
  Index start = 0;
  for (Index j = 0; j < dim; ++j) {
    basis(order[j], j) = 1.0;
    if (j + 1 == dim || keys[order[j + 1]] != keys[order[j]]) {
      sizes.push_back(j + 1 - start);
      labels.push_back(label_of(keys[order[j]]));
      start = j + 1;
    }
  }
  return CoarseGraining::from_basis(std::move(basis), std::move(sizes), std::move(labels));
}

// Reordered-column coarse-graining over an arbitrary real basis.
CoarseGraining reordered_basis_cg(const RealMatrix& basis,
                                  const std::vector<std::vector<long long>>& keys,
                                  const std::vector<Label>& key_labels) {
  Index dim = basis.rows();
  std::vector<Index> order(dim);
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return keys[a] < keys[b]; });

  Matrix reordered(dim, dim);
  std::vector<Index> sizes;
  std::vector<Label> labels;
  Index start = 0;
  for (Index j = 0; j < dim; ++j) {
    reordered.col(j) = basis.col(order[j]).cast<Complex>();
    if (j + 1 == dim || keys[order[j + 1]] != keys[order[j]]) {
      sizes.push_back(j + 1 - start);
      labels.push_back(key_labels[order[j]]);
      start = j + 1;
    }
  }
  return CoarseGraining::from_basis(std::move(reordered), std::move(sizes), std::move(labels));
}

// Per-cell shell assignment: bin id and label for a local energy.
struct CellBinning {
  std::function<std::pair<long long, Label>(int cell, double energy)> assign;
};

CellBinning make_cell_binning(const LatticeModel::Impl& im, double width) {
  CellBinning out;
  if (width > 0.0) {
    out.assign = [&im, width](int c, double e) {
      double anchor = im.loc.cell_min[c];
      long long bin = (long long)std::floor((e - anchor) / width);
      return std::make_pair(bin, Label(anchor + double(bin) * width));
    };
    return out;
  }
  // width == 0: group near-degenerate levels per cell, against the cell's
  // own spectral range.
  auto groups = std::make_shared<std::vector<std::vector<std::pair<double, double>>>>();
  groups->resize(im.m);
  for (int c = 0; c < im.m; ++c) {
    const auto& levels = im.loc.cell_levels[c];
    double gap = tol::degeneracy * im.loc.cell_range[c];
    size_t start = 0;
    for (size_t i = 1; i <= levels.size(); ++i) {
      if (i == levels.size() || levels[i] - levels[i - 1] > gap) {
        double lo = levels[start], hi = levels[i - 1];
        double mean = 0.0;
        for (size_t j = start; j < i; ++j) mean += levels[j];
        mean /= double(i - start);
        (*groups)[c].push_back({lo - 0.5 * gap, mean});
        (void)hi;
        start = i;
      }
    }
  }
  out.assign = [groups](int c, double e) {
    const auto& g = (*groups)[c];
    // Last group whose lower edge is below e.
    long long idx = 0;
    for (size_t i = 0; i < g.size(); ++i)
      if (g[i].first <= e) idx = (long long)i;
    return std::make_pair(idx, Label(g[size_t(idx)].second));
  };
  return out;
}

}  // namespace

CoarseGraining LatticeModel::global_number_cg() const {
  Index d = impl_->dim();
  std::vector<int> keys(d);
  for (Index a = 0; a < d; ++a) keys[a] = std::popcount(impl_->basis[a]);
  return grouped_basis_cg<int>(d, keys, [](const int& n) {
    return Label(std::int64_t(n));
  });
}

CoarseGraining LatticeModel::local_number_cg() const {
  Index d = impl_->dim();
  std::vector<std::vector<int>> keys(d);
  for (Index a = 0; a < d; ++a) {
    std::uint32_t s = impl_->basis[a];
    std::vector<int> key(impl_->m);
    for (int c = 0; c < impl_->m; ++c) {
      auto [lo, hi] = impl_->cells[c];
      std::uint32_t mask = ((std::uint32_t(1) << (hi - lo)) - 1u) << lo;
      key[c] = std::popcount(s & mask);
    }
    keys[a] = std::move(key);
  }
  return grouped_basis_cg<std::vector<int>>(d, keys, [](const std::vector<int>& key) {
    Label::Tuple t;
    for (int n : key) t.emplace_back(std::int64_t(n));
    return Label(std::move(t));
  });
}

CoarseGraining LatticeModel::global_energy_cg(double shell_width) const {
  if (shell_width < 0) throw ConfigError("shell width must be nonnegative");
  impl_->ensure_eig();
  auto groups = detail::group_sorted_values(impl_->evals, shell_width, std::nullopt,
                                            tol::degeneracy);
  Matrix basis = impl_->evecs_c;
  return CoarseGraining::from_basis(std::move(basis), std::move(groups.sizes),
                                    std::move(groups.labels));
}

CoarseGraining LatticeModel::local_energy_cg(double shell_width) const {
  if (shell_width < 0) throw ConfigError("shell width must be nonnegative");
  impl_->ensure_local();
  const auto& loc = impl_->loc;
  Index d = impl_->dim();
  CellBinning binning = make_cell_binning(*impl_, shell_width);

  std::vector<std::vector<long long>> keys(d);
  std::vector<Label> labels(d);
  for (Index col = 0; col < d; ++col) {
    std::vector<long long> key(impl_->m);
    Label::Tuple tag(impl_->m);
    for (int c = 0; c < impl_->m; ++c) {
      auto [bin, label] = binning.assign(c, loc.energy[col][c]);
      key[c] = bin;
      tag[c] = label;
    }
    keys[col] = std::move(key);
    labels[col] = Label(std::move(tag));
  }
  return reordered_basis_cg(loc.basis, keys, labels);
}

CoarseGraining LatticeModel::subsystem_bath_cg(const CoarseGraining& subsystem_cg,
                                               double shell_width) const {
  if (impl_->m < 2)
    throw ConfigError("subsystem/bath coarse-graining needs at least two cells");
  if (shell_width < 0) throw ConfigError("shell width must be nonnegative");
  impl_->ensure_local();
  const int m = impl_->m;
  const Index d = impl_->dim();
  auto [lo0, hi0] = impl_->cells[0];
  const int len0 = hi0 - lo0;
  const Index d0 = Index(1) << len0;
  if (subsystem_cg.dim() != d0)
    throw DimensionMismatch("subsystem coarse-graining must act on cell 0's local space");

  CellBinning binning = make_cell_binning(*impl_, shell_width);

  // Cell-0 element bases split by local occupancy (required to stay inside a
  // fixed particle sector; a no-op when the model is unsectored).
  struct Cell0Piece {
    int element;
    int occupancy;       // -1 when unsectored
    Matrix columns;      // d0 x rank, orthonormal
  };
  std::vector<Cell0Piece> pieces;
  for (int e = 0; e < subsystem_cg.size(); ++e) {
    Matrix cols = subsystem_cg.basis_block(e);
    if (!impl_->sector) {
      pieces.push_back({e, -1, std::move(cols)});
      continue;
    }
    Index rank_total = 0;
    for (int n = 0; n <= len0; ++n) {
      Matrix comp = Matrix::Zero(d0, cols.cols());
      for (Index r = 0; r < d0; ++r)
        if (std::popcount(std::uint32_t(r)) == n) comp.row(r) = cols.row(r);
      // Orthonormal basis of the occupancy-n component of this element.
      Eigen::ColPivHouseholderQR<Matrix> qr(comp);
      qr.setThreshold(1e-8);
      Index rank = qr.rank();
      if (rank == 0) continue;
      Matrix q = qr.householderQ() * Matrix::Identity(d0, rank);
      // The span is supported on occupancy-n rows; scrub roundoff elsewhere
      // so sector indexing stays in range.
      for (Index r = 0; r < d0; ++r)
        if (std::popcount(std::uint32_t(r)) != n) q.row(r).setZero();
      pieces.push_back({e, n, std::move(q)});
      rank_total += rank;
    }
    if (rank_total != cols.cols())
      throw ConfigError(
          "subsystem coarse-graining does not conserve the cell particle number; "
          "it cannot be restricted to a fixed particle sector");
  }

  // Bath product states: per-cell occupancies and eigenvectors of cells 1..m-1.
  struct Column {
    std::vector<long long> key;  // (element, bath bins...)
    Label label;
    Vector data;
  };
  std::vector<Column> columns;

  for (const auto& piece : pieces) {
    int bath_target = impl_->sector ? *impl_->sector - piece.occupancy : -1;
    std::vector<const LatticeModel::Impl::CellSectorEig*> chosen(m, nullptr);
    std::vector<int> k(m, 0);

    auto emit = [&](int c0_col) {
      Vector v = Vector::Zero(d);
      std::vector<long long> key{piece.element};
      Label::Tuple tag{subsystem_cg.label(piece.element)};
      for (int c = 1; c < m; ++c) {
        auto [bin, label] = binning.assign(c, chosen[c]->evals(k[c]));
        key.push_back(bin);
        tag.push_back(label);
      }
      auto fill = [&](auto&& self, int c, std::uint32_t bits, Complex coeff) -> void {
        if (c == m) {
          v(impl_->index_of[bits]) += coeff;
          return;
        }
        const auto& cs = *chosen[c];
        int shift = impl_->cells[c].first;
        for (Index a = 0; a < Index(cs.states.size()); ++a) {
          double w = cs.evecs(a, k[c]);
          if (w != 0.0) self(self, c + 1, bits | (cs.states[a] << shift), coeff * w);
        }
      };
      for (Index r = 0; r < d0; ++r) {
        Complex amp = piece.columns(r, c0_col);
        if (amp != Complex(0, 0)) fill(fill, 1, std::uint32_t(r) << lo0, amp);
      }
      columns.push_back({std::move(key), Label(std::move(tag)), std::move(v)});
    };

    auto rec = [&](auto&& self, int c, int used) -> void {
      if (c == m) {
        if (bath_target >= 0 && used != bath_target) return;
        std::fill(k.begin() + 1, k.end(), 0);
        while (true) {
          for (Index col = 0; col < piece.columns.cols(); ++col) emit(int(col));
          int cc = m - 1;
          while (cc >= 1 && ++k[cc] == chosen[cc]->evals.size()) k[cc--] = 0;
          if (cc < 1) break;
        }
        return;
      }
      for (const auto& cs : impl_->loc.cell_eigs[c]) {
        if (bath_target >= 0 && used + cs.occupancy > bath_target) continue;
        chosen[c] = &cs;
        self(self, c + 1, used + cs.occupancy);
      }
    };
    rec(rec, 1, 0);
  }

  if (Index(columns.size()) != d)
    throw ConfigError("subsystem/bath coarse-graining does not span the sector");

  std::vector<Index> order(columns.size());
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return columns[a].key < columns[b].key;
  });

  Matrix basis(d, d);
  std::vector<Index> sizes;
  std::vector<Label> labels;
  Index start = 0;
  for (Index j = 0; j < d; ++j) {
    basis.col(j) = columns[order[j]].data;
    if (j + 1 == d || columns[order[j + 1]].key != columns[order[j]].key) {
      sizes.push_back(j + 1 - start);
      labels.push_back(columns[order[j]].label);
      start = j + 1;
    }
  }
  return CoarseGraining::from_basis(std::move(basis), std::move(sizes), std::move(labels));
}

// ---------------------------------------------------------------------------
// Evolution and ensembles

QuantumState evolve(const LatticeModel& model, const QuantumState& state, double t) {
  if (state.dim() != model.dim())
    throw DimensionMismatch("state dimension does not match the model");
  model.eigenvalues();  // force the cached decomposition
  const auto& im = *model.impl_;
  Vector phases(im.evals.size());
  for (Index i = 0; i < im.evals.size(); ++i) phases(i) = std::polar(1.0, -im.evals(i) * t);
  Matrix a = im.evecs_c.adjoint() * state.matrix() * im.evecs_c;
  a = phases.asDiagonal() * a * phases.conjugate().asDiagonal();
  return QuantumState::trusted(im.evecs_c * a * im.evecs_c.adjoint());
}

Vector evolve(const LatticeModel& model, const Vector& psi, double t) {
  if (psi.size() != model.dim())
    throw DimensionMismatch("state dimension does not match the model");
  model.eigenvalues();
  const auto& im = *model.impl_;
  Vector w = im.evecs_c.adjoint() * psi;
  for (Index i = 0; i < w.size(); ++i) w(i) *= std::polar(1.0, -im.evals(i) * t);
  return im.evecs_c * w;
}

EnsembleSpec EnsembleSpec::microcanonical(double energy, double shell_width) {
  EnsembleSpec s;
  s.kind = Kind::Microcanonical;
  s.energy = energy;
  s.shell_width = shell_width;
  return s;
}
EnsembleSpec EnsembleSpec::volume_microcanonical(double energy) {
  EnsembleSpec s;
  s.kind = Kind::VolumeMicrocanonical;
  s.energy = energy;
  return s;
}
EnsembleSpec EnsembleSpec::canonical(double beta) {
  EnsembleSpec s;
  s.kind = Kind::Canonical;
  s.beta = beta;
  return s;
}
EnsembleSpec EnsembleSpec::grandcanonical(double beta, double mu) {
  EnsembleSpec s;
  s.kind = Kind::GrandCanonical;
  s.beta = beta;
  s.mu = mu;
  return s;
}

QuantumState ensemble_state(const LatticeModel& model, const EnsembleSpec& spec) {
  const auto& im = *model.impl_;
  const Index d = model.dim();
  using Kind = EnsembleSpec::Kind;

  if (spec.kind == Kind::Microcanonical || spec.kind == Kind::VolumeMicrocanonical) {
    model.eigenvalues();
    double lo = spec.kind == Kind::Microcanonical ? spec.energy : 0.0;
    double hi = spec.kind == Kind::Microcanonical ? spec.energy + spec.shell_width
                                                  : spec.energy;
    if (spec.kind == Kind::Microcanonical && spec.shell_width <= 0.0)
      throw ConfigError("microcanonical shell width must be positive");
    Index first = -1, count = 0;
    for (Index i = 0; i < d; ++i)
      if (im.evals(i) >= lo && im.evals(i) < hi) {
        if (first < 0) first = i;
        ++count;
      }
    if (count == 0) {
      std::ostringstream os;
      os << "no eigenstate in the energy window [" << lo << ", " << hi << ")";
      throw EmptyShell(os.str());
    }
    RealMatrix v = im.evecs.middleCols(first, count);
    RealMatrix rho = (v * v.transpose()) / double(count);
    return QuantumState::trusted(rho.cast<Complex>());
  }

  if (spec.beta <= 0.0) throw ConfigError("inverse temperature must be positive");
  if (spec.kind == Kind::Canonical) {
    model.eigenvalues();
    RealVector w = (-(spec.beta) * (im.evals.array() - im.evals(0))).exp();
    w /= w.sum();
    RealMatrix rho = im.evecs * w.asDiagonal() * im.evecs.transpose();
    return QuantumState::trusted(rho.cast<Complex>());
  }

  // Grand canonical: Gibbs state of H - mu N (they commute, but a direct
  // decomposition is simplest and robust to degeneracies).
  RealMatrix k = im.h;
  k -= spec.mu * RealMatrix(im.n_diag.asDiagonal());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(k);
  RealVector w = (-(spec.beta) * (es.eigenvalues().array() - es.eigenvalues()(0))).exp();
  w /= w.sum();
  RealMatrix rho = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
  return QuantumState::trusted(rho.cast<Complex>());
}

// ---------------------------------------------------------------------------
// The nine coarse-graining entropies

std::string thermo_entropy_id(ThermoEntropy e) {
  switch (e) {
    case ThermoEntropy::GlobalNumber: return "1a";
    case ThermoEntropy::GlobalEnergy: return "1b";
    case ThermoEntropy::GlobalNumberEnergy: return "1c";
    case ThermoEntropy::LocalNumber: return "2a";
    case ThermoEntropy::LocalEnergy: return "2b";
    case ThermoEntropy::LocalNumberEnergy: return "2c";
    case ThermoEntropy::LocalNumberGlobalEnergy: return "3a";
    case ThermoEntropy::GlobalEnergyLocalNumber: return "3b";
    case ThermoEntropy::SubsystemBathEnergy: return "4";
  }
  throw ConfigError("unknown entropy id");
}

ThermoEntropy thermo_entropy_from_id(const std::string& id) {
  static const std::map<std::string, ThermoEntropy> table{
      {"1a", ThermoEntropy::GlobalNumber},
      {"1b", ThermoEntropy::GlobalEnergy},
      {"1c", ThermoEntropy::GlobalNumberEnergy},
      {"2a", ThermoEntropy::LocalNumber},
      {"2b", ThermoEntropy::LocalEnergy},
      {"2c", ThermoEntropy::LocalNumberEnergy},
      {"3a", ThermoEntropy::LocalNumberGlobalEnergy},
      {"3b", ThermoEntropy::GlobalEnergyLocalNumber},
      {"4", ThermoEntropy::SubsystemBathEnergy},
  };
  auto it = table.find(id);
  if (it == table.end()) throw ParseError("unknown entropy id '" + id + "'");
  return it->second;
}

MeasurementSequence thermo_sequence(const LatticeModel& model, ThermoEntropy which,
                                    double shell_width, const CoarseGraining* subsystem_cg) {
  double w = shell_width < 0 ? model.default_shell_width() : shell_width;
  using E = ThermoEntropy;
  switch (which) {
    case E::GlobalNumber:
      return MeasurementSequence{model.global_number_cg()};
    case E::GlobalEnergy:
      return MeasurementSequence{model.global_energy_cg(w)};
    case E::GlobalNumberEnergy:
      return MeasurementSequence{model.global_number_cg(), model.global_energy_cg(w)};
    case E::LocalNumber:
      return MeasurementSequence{model.local_number_cg()};
    case E::LocalEnergy:
      return MeasurementSequence{model.local_energy_cg(w)};
    case E::LocalNumberEnergy:
      return MeasurementSequence{model.local_number_cg(), model.local_energy_cg(w)};
    case E::LocalNumberGlobalEnergy:
      return MeasurementSequence{model.local_number_cg(), model.global_energy_cg(w)};
    case E::GlobalEnergyLocalNumber:
      return MeasurementSequence{model.global_energy_cg(w), model.local_number_cg()};
    case E::SubsystemBathEnergy:
      if (!subsystem_cg)
        throw ConfigError("entropy 4 needs a subsystem coarse-graining");
      return MeasurementSequence{model.subsystem_bath_cg(*subsystem_cg, w)};
  }
  throw ConfigError("unknown entropy id");
}

double thermo_entropy(const LatticeModel& model, const QuantumState& state,
                      ThermoEntropy which, double shell_width,
                      const CoarseGraining* subsystem_cg) {
  return observational_entropy(state, thermo_sequence(model, which, shell_width, subsystem_cg));
}

// ---------------------------------------------------------------------------
// General conserved observables

namespace {

// Joint coarse-graining of a commuting family, built by refining blocks with
// one operator at a time; per-operator shells are anchored at the operator's
// own smallest eigenvalue.
CoarseGraining refined_product_cg(Index dim, const std::vector<Matrix>& ops, double width) {
  for (size_t a = 0; a < ops.size(); ++a)
    for (size_t b = a + 1; b < ops.size(); ++b) {
      double dev = detail::max_abs(ops[a] * ops[b] - ops[b] * ops[a]);
      if (dev > 1e-8) {
        std::ostringstream os;
        os << "local observables " << a << " and " << b << " fail to commute (norm " << dev
           << ")";
        throw NonCommuting(os.str());
      }
    }

  Matrix basis = Matrix::Identity(dim, dim);
  struct Block {
    Index offset, size;
    Label::Tuple label;
  };
  std::vector<Block> blocks{{0, dim, {}}};

  for (const Matrix& op : ops) {
    Eigen::SelfAdjointEigenSolver<Matrix> full(op, Eigen::EigenvaluesOnly);
    double anchor = full.eigenvalues()(0);
    double range = full.eigenvalues()(dim - 1) - anchor;
    // Block-restricted eigenvalues are recomputed below and carry their own
    // rounding; nudge the anchor so copies of the smallest eigenvalue cannot
    // straddle the first shell edge.
    if (width > 0.0) anchor -= 1e-9 * width;

    std::vector<Block> next;
    for (const Block& blk : blocks) {
      auto cols = basis.middleCols(blk.offset, blk.size);
      Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(cols.adjoint() * op * cols));
      basis.middleCols(blk.offset, blk.size) = cols * es.eigenvectors();
      auto groups = detail::group_sorted_values(es.eigenvalues(), width, anchor,
                                                tol::degeneracy, range);
      Index off = blk.offset;
      for (size_t g = 0; g < groups.sizes.size(); ++g) {
        Label::Tuple label = blk.label;
        label.push_back(groups.labels[g]);
        next.push_back({off, groups.sizes[g], std::move(label)});
        off += groups.sizes[g];
      }
    }
    blocks = std::move(next);
  }

  std::vector<Index> sizes;
  std::vector<Label> labels;
  for (auto& blk : blocks) {
    sizes.push_back(blk.size);
    labels.emplace_back(std::move(blk.label));
  }
  return CoarseGraining::from_basis(std::move(basis), std::move(sizes), std::move(labels));
}

}  // namespace

ConservedEntropyResult general_conserved_entropy(
    const LatticeModel& model, const QuantumState& state,
    const std::vector<Observable>& observables, const std::vector<double>& shell_widths,
    const std::vector<std::vector<Observable>>& local_variants) {
  if (observables.empty()) throw ConfigError("at least one observable required");
  if (shell_widths.size() != observables.size())
    throw ConfigError("one shell width per observable required");
  const Index d = model.dim();
  if (state.dim() != d) throw DimensionMismatch("state dimension does not match the model");

  ConservedEntropyResult out;
  Matrix hc = model.hamiltonian().cast<Complex>();
  for (size_t k = 0; k < observables.size(); ++k) {
    if (observables[k].dim() != d)
      throw DimensionMismatch("observable dimension does not match the model");
    double dev = detail::max_abs(observables[k].matrix() * hc - hc * observables[k].matrix());
    if (dev > 1e-8) {
      std::ostringstream os;
      os << "observable " << k << " does not commute with H (norm " << dev << ")";
      out.warnings.push_back(os.str());
    }
  }

  std::vector<MeasurementSequence::Step> global_steps;
  for (size_t k = 0; k < observables.size(); ++k) {
    if (shell_widths[k] < 0) throw ConfigError("shell widths must be nonnegative");
    global_steps.emplace_back(
        shell_widths[k] == 0.0
            ? coarse_graining_from_observable(observables[k])
            : energy_shell_coarse_graining(observables[k], shell_widths[k]));
  }
  out.equilibrium = observational_entropy(state, MeasurementSequence(std::move(global_steps)));

  if (!local_variants.empty()) {
    if (local_variants.size() != observables.size())
      throw ConfigError("one local-variant list per observable required");
    std::vector<MeasurementSequence::Step> local_steps;
    for (size_t k = 0; k < observables.size(); ++k) {
      if (local_variants[k].empty())
        throw ConfigError("local-variant lists must be nonempty");
      std::vector<Matrix> ops;
      for (const Observable& o : local_variants[k]) {
        if (o.dim() != d)
          throw DimensionMismatch("local observable dimension does not match the model");
        ops.push_back(o.matrix());
      }
      local_steps.emplace_back(refined_product_cg(d, ops, shell_widths[k]));
    }
    out.nonequilibrium = observational_entropy(state, MeasurementSequence(std::move(local_steps)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quench experiment

QuenchResult run_quench(const QuenchScenario& scenario) {
  LatticeModel model = build_model(scenario.model);

  if (scenario.times.empty()) throw ConfigError("scenario needs at least one time");
  if (!std::is_sorted(scenario.times.begin(), scenario.times.end()))
    throw ConfigError("times must be sorted ascending");
  if (scenario.times.front() < 0.0) throw ConfigError("times must be nonnegative");

  std::vector<ThermoEntropy> selection = scenario.selection;
  if (selection.empty())
    selection = {ThermoEntropy::GlobalNumber,       ThermoEntropy::GlobalEnergy,
                 ThermoEntropy::GlobalNumberEnergy, ThermoEntropy::LocalNumber,
                 ThermoEntropy::LocalEnergy,        ThermoEntropy::LocalNumberEnergy,
                 ThermoEntropy::LocalNumberGlobalEnergy,
                 ThermoEntropy::GlobalEnergyLocalNumber};
  std::sort(selection.begin(), selection.end());
  selection.erase(std::unique(selection.begin(), selection.end()), selection.end());

  const CoarseGraining* sub = nullptr;
  if (std::find(selection.begin(), selection.end(), ThermoEntropy::SubsystemBathEnergy) !=
      selection.end()) {
    if (!scenario.subsystem_cg)
      throw ConfigError("entropy 4 selected but no subsystem coarse-graining given");
    sub = &*scenario.subsystem_cg;
  }

  double width = scenario.shell_width < 0 ? model.default_shell_width() : scenario.shell_width;
  Vector psi0 = model.occupation_state(scenario.initial_occupation);

  std::vector<std::pair<ThermoEntropy, MeasurementSequence>> sequences;
  for (ThermoEntropy id : selection)
    sequences.emplace_back(id, thermo_sequence(model, id, width, sub));

  QuenchResult result;
  result.ln_dim = std::log(double(model.dim()));
  result.s_vn_initial = 0.0;  // the initial state is a pure basis state
  result.boundary_remainder_norm = model.boundary_remainder().norm();
  result.shell_width = width;

  for (double t : scenario.times) {
    Vector psi = evolve(model, psi0, t);
    for (const auto& [id, seq] : sequences)
      result.rows.push_back({t, id, observational_entropy(psi, seq)});
  }
  return result;
}

}  // namespace obsent
