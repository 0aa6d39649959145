#include "obsent/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace obsent {

namespace {

double clamp_probability(double p) {
  if (p < -tol::probability_noise) {
    std::ostringstream os;
    os << "branch probability " << p << " is negative beyond tolerance";
    throw InconsistentBranch(os.str());
  }
  if (p > 1.0 + tol::probability_noise) {
    std::ostringstream os;
    os << "branch probability " << p << " exceeds 1 beyond tolerance";
    throw InconsistentBranch(os.str());
  }
  return std::clamp(p, 0.0, 1.0);
}

const Label& step_label(const MeasurementSequence::Step& s, int elem) {
  if (const auto* cg = std::get_if<CoarseGraining>(&s)) return cg->label(elem);
  return std::get<KrausCoarseGraining>(s).label(elem);
}

Index step_dim(const MeasurementSequence::Step& s) {
  if (const auto* cg = std::get_if<CoarseGraining>(&s)) return cg->dim();
  return std::get<KrausCoarseGraining>(s).dim();
}

}  // namespace

// ---------------------------------------------------------------------------
// MacrostateDistribution

MacrostateDistribution::MacrostateDistribution(Index dim, bool projective,
                                               std::vector<MacrostateRecord> records)
    : dim_(dim), projective_(projective), records_(std::move(records)) {
  double p_sum = 0.0, v_sum = 0.0;
  for (const auto& r : records_) {
    if (r.volume < tol::branch_volume_floor)
      throw InconsistentBranch("empty macrostate stored in a distribution");
    p_sum += r.probability;
    v_sum += r.volume;
  }
  if (std::abs(p_sum - 1.0) > tol::probability_sum) {
    std::ostringstream os;
    os << "outcome probabilities sum to " << p_sum;
    throw InconsistentBranch(os.str());
  }
  if (std::abs(v_sum - double(dim_)) > tol::volume_sum) {
    std::ostringstream os;
    os << "macrostate volumes sum to " << v_sum << ", expected " << dim_;
    throw InconsistentBranch(os.str());
  }
}

// ---------------------------------------------------------------------------
// MeasurementSequence

struct MeasurementSequence::Impl {
  std::vector<Step> steps;
  Index dim = 0;
  bool projective = true;

  // Branch bookkeeping for all-projective sequences, built once on first use.
  // grams[k] = U_{k+1}^dag U_k so that consecutive-step cross overlaps are
  // block slices; kept lists the multi-indices whose volume survives the
  // branch floor, in lexicographic order.
  std::once_flag plan_once;
  std::vector<Matrix> grams;
  std::vector<std::vector<int>> kept;
  std::vector<double> kept_volumes;
  std::vector<Label> kept_labels;

  const CoarseGraining& cg(int k) const { return std::get<CoarseGraining>(steps[k]); }

  void ensure_plan() {
    std::call_once(plan_once, [this] { build_plan(); });
  }

  void build_plan() {
    const int n = static_cast<int>(steps.size());
    grams.reserve(n - 1);
    for (int k = 0; k + 1 < n; ++k)
      grams.push_back(cg(k + 1).basis().adjoint() * cg(k).basis());

    std::vector<int> prefix(n, 0);
    std::vector<Label> label_stack;
    auto record = [&](double volume) {
      kept.emplace_back(prefix.begin(), prefix.begin() + n);
      kept_volumes.push_back(volume);
      kept_labels.emplace_back(Label::Tuple(label_stack));
    };

    // Depth-first over multi-indices; M is the branch volume operator
    // compressed into the basis of the current element.
    auto descend = [&](auto&& self, int level, const Matrix& m) -> void {
      double v = m.trace().real();
      if (v < tol::branch_volume_floor) return;
      if (level == n - 1) {
        record(v);
        return;
      }
      const CoarseGraining& next = cg(level + 1);
      for (int j = 0; j < next.size(); ++j) {
        prefix[level + 1] = j;
        label_stack.push_back(next.label(j));
        Matrix c = grams[level].block(next.block_offset(j), cg(level).block_offset(prefix[level]),
                                      next.block_size(j), m.rows());
        self(self, level + 1, Matrix(c * m * c.adjoint()));
        label_stack.pop_back();
      }
    };

    const CoarseGraining& first = cg(0);
    for (int i = 0; i < first.size(); ++i) {
      prefix[0] = i;
      label_stack.push_back(first.label(i));
      descend(descend, 0, Matrix::Identity(first.block_size(i), first.block_size(i)));
      label_stack.pop_back();
    }
  }
};

MeasurementSequence::MeasurementSequence(std::vector<Step> steps)
    : impl_(std::make_shared<Impl>()) {
  if (steps.empty()) throw ConfigError("measurement sequence must be nonempty");
  impl_->dim = step_dim(steps[0]);
  for (const auto& s : steps) {
    if (step_dim(s) != impl_->dim)
      throw DimensionMismatch("all sequence steps share one dimension");
    if (std::holds_alternative<KrausCoarseGraining>(s)) impl_->projective = false;
  }
  impl_->steps = std::move(steps);
}

MeasurementSequence::MeasurementSequence(std::initializer_list<CoarseGraining> cgs)
    : MeasurementSequence([&] {
        std::vector<Step> steps;
        for (const auto& cg : cgs) steps.emplace_back(cg);
        return steps;
      }()) {}

Index MeasurementSequence::dim() const { return impl_->dim; }
int MeasurementSequence::length() const { return static_cast<int>(impl_->steps.size()); }
const MeasurementSequence::Step& MeasurementSequence::step(int k) const {
  return impl_->steps[k];
}
bool MeasurementSequence::all_projective() const { return impl_->projective; }

// ---------------------------------------------------------------------------
// Branch enumeration

namespace {

using Impl = MeasurementSequence::Impl;

// Walks the kept multi-index tree (lexicographically sorted), carrying a
// branch payload per prefix. Payload is a compressed density block (mixed
// input) or a projected vector (pure input).
template <typename Payload, typename Transition, typename Leaf>
void walk_kept(const Impl& im, size_t lo, size_t hi, int level, const Payload& payload,
               const Transition& transition, const Leaf& leaf) {
  const int n = static_cast<int>(im.steps.size());
  if (level == n - 1) {
    leaf(lo, payload);
    return;
  }
  size_t r = lo;
  while (r < hi) {
    int j = im.kept[r][level + 1];
    size_t r2 = r;
    while (r2 < hi && im.kept[r2][level + 1] == j) ++r2;
    walk_kept(im, r, r2, level + 1, transition(level, im.kept[r][level], j, payload),
              transition, leaf);
    r = r2;
  }
}

template <typename Payload, typename FirstPayload, typename Transition, typename Leaf>
void walk_all(const Impl& im, const FirstPayload& first_payload,
              const Transition& transition, const Leaf& leaf) {
  size_t r = 0;
  const size_t total = im.kept.size();
  while (r < total) {
    int i = im.kept[r][0];
    size_t r2 = r;
    while (r2 < total && im.kept[r2][0] == i) ++r2;
    Payload p = first_payload(i);
    walk_kept(im, r, r2, 0, p, transition, leaf);
    r = r2;
  }
}

std::vector<MacrostateRecord> assemble(const Impl& im, const std::vector<double>& probs) {
  std::vector<MacrostateRecord> records;
  records.reserve(im.kept.size());
  double mass = 0.0;
  for (size_t r = 0; r < im.kept.size(); ++r) {
    double p = clamp_probability(probs[r]);
    mass += p;
    records.push_back({im.kept_labels[r], p, im.kept_volumes[r]});
  }
  if (mass < 1.0 - tol::probability_sum)
    throw InconsistentBranch(
        "probability mass found in empty macrostates; input state is not valid");
  return records;
}

MacrostateDistribution projective_distribution(const Matrix* rho, const Vector* psi,
                                               const MeasurementSequence& seq, Impl& im) {
  im.ensure_plan();
  std::vector<double> probs(im.kept.size(), 0.0);

  if (psi) {
    Vector w = im.cg(0).basis().adjoint() * (*psi);
    walk_all<Vector>(
        im,
        [&](int i) -> Vector {
          return w.segment(im.cg(0).block_offset(i), im.cg(0).block_size(i));
        },
        [&](int level, int i, int j, const Vector& x) -> Vector {
          return im.grams[level].block(im.cg(level + 1).block_offset(j),
                                       im.cg(level).block_offset(i),
                                       im.cg(level + 1).block_size(j), x.size()) *
                 x;
        },
        [&](size_t r, const Vector& x) { probs[r] = x.squaredNorm(); });
  } else {
    Matrix w = im.cg(0).basis().adjoint() * (*rho) * im.cg(0).basis();
    walk_all<Matrix>(
        im,
        [&](int i) -> Matrix {
          Index off = im.cg(0).block_offset(i), sz = im.cg(0).block_size(i);
          return w.block(off, off, sz, sz);
        },
        [&](int level, int i, int j, const Matrix& m) -> Matrix {
          Matrix c = im.grams[level].block(im.cg(level + 1).block_offset(j),
                                           im.cg(level).block_offset(i),
                                           im.cg(level + 1).block_size(j), m.rows());
          return c * m * c.adjoint();
        },
        [&](size_t r, const Matrix& m) { probs[r] = m.trace().real(); });
  }
  return MacrostateDistribution(seq.dim(), true, assemble(im, probs));
}

// Dense fallback for sequences containing Kraus steps: branches carry the
// full d x d operator pair (probability side, volume side).
MacrostateDistribution dense_distribution(const Matrix& rho, const MeasurementSequence& seq) {
  const int n = seq.length();
  const Index d = seq.dim();

  std::vector<std::vector<Matrix>> ops(n);
  for (int k = 0; k < n; ++k) {
    const auto& s = seq.step(k);
    if (const auto* cg = std::get_if<CoarseGraining>(&s)) {
      for (int e = 0; e < cg->size(); ++e) ops[k].push_back(cg->element(e).matrix());
    } else {
      const auto& kr = std::get<KrausCoarseGraining>(s);
      for (int e = 0; e < kr.size(); ++e) ops[k].push_back(kr.element(e));
    }
  }

  std::vector<MacrostateRecord> records;
  std::vector<Label> label_stack;
  auto descend = [&](auto&& self, int level, const Matrix& r, const Matrix& v) -> void {
    double volume = v.trace().real();
    double prob = r.trace().real();
    if (volume < tol::branch_volume_floor) {
      if (prob > tol::probability_noise) {
        std::ostringstream os;
        os << "branch probability " << prob << " on an empty macrostate (volume " << volume
           << ")";
        throw InconsistentBranch(os.str());
      }
      return;
    }
    if (level == n) {
      records.push_back({Label(Label::Tuple(label_stack)), clamp_probability(prob), volume});
      return;
    }
    for (size_t e = 0; e < ops[level].size(); ++e) {
      const Matrix& a = ops[level][e];
      label_stack.push_back(step_label(seq.step(level), static_cast<int>(e)));
      self(self, level + 1, Matrix(a * r * a.adjoint()), Matrix(a * v * a.adjoint()));
      label_stack.pop_back();
    }
  };
  descend(descend, 0, rho, Matrix::Identity(d, d));

  double mass = 0.0;
  for (const auto& rec : records) mass += rec.probability;
  if (mass < 1.0 - tol::probability_sum)
    throw InconsistentBranch(
        "probability mass found in empty macrostates; input state is not valid");
  return MacrostateDistribution(d, seq.all_projective(), std::move(records));
}

}  // namespace

MacrostateDistribution macrostate_distribution(const QuantumState& state,
                                               const MeasurementSequence& seq) {
  if (state.dim() != seq.dim())
    throw DimensionMismatch("state and sequence dimensions differ");
  if (seq.all_projective())
    return projective_distribution(&state.matrix(), nullptr, seq, *seq.impl_);
  return dense_distribution(state.matrix(), seq);
}

MacrostateDistribution macrostate_distribution(const Vector& psi,
                                               const MeasurementSequence& seq) {
  if (psi.size() != seq.dim())
    throw DimensionMismatch("state and sequence dimensions differ");
  if (std::abs(psi.squaredNorm() - 1.0) > tol::probability_sum)
    throw NotAState("pure state vector is not normalized");
  if (seq.all_projective())
    return projective_distribution(nullptr, &psi, seq, *seq.impl_);
  Matrix rho = psi * psi.adjoint();
  return dense_distribution(rho, seq);
}

double entropy_of(const MacrostateDistribution& dist) {
  double s = 0.0;
  for (const auto& r : dist.records())
    if (r.probability > 0.0) s -= r.probability * std::log(r.probability / r.volume);
  return s;
}

double observational_entropy(const QuantumState& state, const MeasurementSequence& seq) {
  return entropy_of(macrostate_distribution(state, seq));
}

double observational_entropy(const Vector& psi, const MeasurementSequence& seq) {
  return entropy_of(macrostate_distribution(psi, seq));
}

EntropyDecomposition entropy_decomposition(const QuantumState& state, const CoarseGraining& cg) {
  MacrostateDistribution dist = macrostate_distribution(state, MeasurementSequence{cg});
  EntropyDecomposition out{0.0, 0.0};
  for (const auto& r : dist.records()) {
    if (r.probability > 0.0) {
      out.shannon_part -= r.probability * std::log(r.probability);
      out.mean_boltzmann_part += r.probability * std::log(r.volume);
    }
  }
  return out;
}

QuantumState coarse_grained_state(const QuantumState& state, const CoarseGraining& cg) {
  if (state.dim() != cg.dim())
    throw DimensionMismatch("state and coarse-graining dimensions differ");
  const Matrix& u = cg.basis();
  Matrix w = u.adjoint() * state.matrix() * u;
  Vector diag = Vector::Zero(cg.dim());
  for (int k = 0; k < cg.size(); ++k) {
    Index off = cg.block_offset(k), sz = cg.block_size(k);
    double p = clamp_probability(w.block(off, off, sz, sz).trace().real());
    diag.segment(off, sz).setConstant(p / double(sz));
  }
  return QuantumState::trusted(u * diag.asDiagonal() * u.adjoint());
}

double von_neumann_entropy(const QuantumState& state) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(state.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Index i = 0; i < state.dim(); ++i) {
    double ev = es.eigenvalues()(i);
    if (ev < tol::psd_floor) {
      std::ostringstream os;
      os << "eigenvalue " << ev << " is negative";
      throw NotAState(os.str());
    }
    if (ev > 0.0) s -= ev * std::log(ev);
  }
  return std::max(s, 0.0);
}

KlIdentity kl_identity_check(const QuantumState& state, const MeasurementSequence& seq) {
  if (!seq.all_projective())
    throw ConfigError("the KL identity applies to projective sequences");
  MacrostateDistribution dist = macrostate_distribution(state, seq);
  double s = entropy_of(dist);
  double kl = 0.0;
  for (const auto& r : dist.records())
    if (r.probability > 0.0)
      kl += r.probability * std::log(r.probability * double(dist.dim()) / r.volume);
  double residual = std::abs(s - (std::log(double(dist.dim())) - kl));
  return {s, kl, residual};
}

}  // namespace obsent
