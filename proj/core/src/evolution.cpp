#include "qprobe/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Sparse>

#include "qprobe/error.hpp"
#include "qprobe/interactions.hpp"

namespace qprobe {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Unitary: return "unitary";
    case Provenance::Analytic: return "analytic";
    case Provenance::Lindblad: return "lindblad";
    case Provenance::Sampled: return "sampled";
  }
  return "?";
}

std::string_view to_string(DifferenceKind k) {
  switch (k) {
    case DifferenceKind::JC1Homodyne: return "JC1_homodyne";
    case DifferenceKind::JC2Homodyne: return "JC2_homodyne";
    case DifferenceKind::TwoAtom: return "TwoAtom";
    case DifferenceKind::ModeA: return "ModeA";
  }
  return "?";
}

void validate(const PopulationSeries& s) {
  if (s.tau.size() != s.values.size()) throw Error(ErrorCode::BadParameter, "series tau/value sizes differ");
  for (std::size_t i = 1; i < s.tau.size(); ++i) {
    if (!(s.tau[i] > s.tau[i - 1])) throw Error(ErrorCode::BadParameter, "tau grid must be strictly increasing");
  }
  if (!s.meta.difference) {
    for (double v : s.values) {
      if (v < -1e-10 || v > 1.0 + 1e-10) {
        throw Error(ErrorCode::InvalidState, "population " + std::to_string(v) + " outside [0,1]");
      }
    }
  }
}

PopulationSeries difference(const PopulationSeries& plus, const PopulationSeries& minus) {
  if (plus.tau != minus.tau) throw Error(ErrorCode::ShapeMismatch, "difference needs identical tau grids");
  PopulationSeries out = plus;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = plus.values[i] - minus.values[i];
  out.meta.difference = true;
  out.meta.leakage_alarm = plus.meta.leakage_alarm || minus.meta.leakage_alarm;
  out.meta.max_top_population = std::max(plus.meta.max_top_population, minus.meta.max_top_population);
  out.projector_label = plus.projector_label + " (+/-)";
  return out;
}

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw Error(ErrorCode::BadParameter, "linspace needs points >= 2 and hi > lo");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
  out.back() = hi;
  // Snap the sample nearest zero onto zero so symmetric grids stay symmetric.
  for (double& t : out) {
    if (std::abs(t) < 1e-12 * std::max(std::abs(lo), std::abs(hi))) t = 0.0;
  }
  return out;
}

// ---------------------------------------------------------- PopulationModel

PopulationModel::PopulationModel(std::shared_ptr<const Propagator> propagator, const DensityOperator& rho0,
                                 const Operator& projector)
    : prop_(std::move(propagator)) {
  if (!(rho0.space() == prop_->space()) || !(projector.space() == prop_->space())) {
    throw Error(ErrorCode::ShapeMismatch, "population model: state, Hamiltonian and projector spaces differ");
  }
  // W_jk = (V^dag rho V)_jk (V^dag P V)_kj, assembled block pair by block
  // pair; pairs where either the state or the projector has no elements are
  // skipped.
  const auto& blocks = prop_->spectrum().blocks;
  const Matrix& rho = rho0.matrix();
  const Matrix& proj = projector.matrix();
  auto gather = [](const Matrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    }
    return out;
  };
  for (const auto& b : blocks) {
    for (const auto& c : blocks) {
      const Matrix r = gather(rho, b.states, c.states);
      if (r.cwiseAbs().maxCoeff() == 0.0) continue;
      const Matrix p = gather(proj, c.states, b.states);
      if (p.cwiseAbs().maxCoeff() == 0.0) continue;
      const Matrix rho_eig = b.vectors.adjoint() * r * c.vectors;
      const Matrix proj_eig = c.vectors.adjoint() * p * b.vectors;
      WeightBlock w;
      for (auto l : b.levels) w.rows.push_back(l);
      for (auto l : c.levels) w.cols.push_back(l);
      w.weights = rho_eig.cwiseProduct(proj_eig.transpose());
      weights_.push_back(std::move(w));
    }
  }
}

double PopulationModel::operator()(double tau) const {
  const RealVector& lambda = prop_->spectrum().eigenvalues;
  const Eigen::Index n = lambda.size();
  Vector u(n);
  for (Eigen::Index k = 0; k < n; ++k) u(k) = std::exp(-kI * (lambda(k) * tau));
  double acc = 0.0;
  for (const auto& w : weights_) {
    const auto rows = static_cast<Eigen::Index>(w.rows.size());
    const auto cols = static_cast<Eigen::Index>(w.cols.size());
    Vector ur(rows);
    Vector uc(cols);
    for (Eigen::Index i = 0; i < rows; ++i) ur(i) = u(w.rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < cols; ++j) uc(j) = std::conj(u(w.cols[static_cast<std::size_t>(j)]));
    acc += (ur.transpose() * w.weights * uc).value().real();
  }
  return acc;
}

double PopulationModel::exact_derivative(int order) const {
  const RealVector& lambda = prop_->spectrum().eigenvalues;
  cplx acc{0.0, 0.0};
  for (const auto& w : weights_) {
    for (std::size_t i = 0; i < w.rows.size(); ++i) {
      for (std::size_t j = 0; j < w.cols.size(); ++j) {
        const double gap = lambda(w.rows[i]) - lambda(w.cols[j]);
        acc += w.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * std::pow(-kI * gap, order);
      }
    }
  }
  return acc.real();
}

void require_projector(const Operator& p) {
  if (!p.is_hermitian(1e-10)) throw Error(ErrorCode::NotProjector, "projector is not Hermitian");
  const Eigen::SparseMatrix<cplx> sp = p.matrix().sparseView();
  const Eigen::SparseMatrix<cplx> sq = sp * sp;
  const Eigen::SparseMatrix<cplx> diff = sq - sp;
  double idem = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(diff, k); it; ++it) idem = std::max(idem, std::abs(it.value()));
  }
  if (idem > 1e-10) throw Error(ErrorCode::NotProjector, "projector is not idempotent");
}

PopulationSeries population_series(const DensityOperator& rho0, const Operator& h, const Operator& projector,
                                   const std::vector<double>& grid, int probe_qubits,
                                   std::string projector_label) {
  return population_series(std::make_shared<const Propagator>(h), rho0, projector, grid, probe_qubits,
                           std::move(projector_label));
}

PopulationSeries population_series(std::shared_ptr<const Propagator> prop, const DensityOperator& rho0,
                                   const Operator& projector, const std::vector<double>& grid, int probe_qubits,
                                   std::string projector_label, int jobs) {
  require_projector(projector);
  for (double t : grid) {
    if (!std::isfinite(t)) throw Error(ErrorCode::BadParameter, "tau grid must be finite");
  }
  const PopulationModel model(prop, rho0, projector);
  const PopulationModel top(prop, rho0, top_level_projector(rho0.space(), probe_qubits));

  PopulationSeries s;
  s.tau = grid;
  s.values.assign(grid.size(), 0.0);
  s.projector_label = std::move(projector_label);
  s.provenance = Provenance::Unitary;
  s.meta.truncation = rho0.space().dims().back();
  std::vector<double> tops(grid.size(), 0.0);

  // Grid points are independent; each worker fills a contiguous block.
  const auto n = grid.size();
  const auto workers = static_cast<std::size_t>(std::clamp<std::size_t>(jobs > 0 ? jobs : 1, 1, std::max<std::size_t>(n, 1)));
  auto fill = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      s.values[i] = model(grid[i]);
      tops[i] = top(grid[i]);
    }
  };
  if (workers == 1) {
    fill(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t block = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * block;
      const std::size_t hi = std::min(n, lo + block);
      if (lo < hi) pool.emplace_back(fill, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  for (double t : tops) s.meta.max_top_population = std::max(s.meta.max_top_population, t);
  s.meta.leakage_alarm = s.meta.max_top_population > kLeakageAlarmLevel;
  validate(s);
  return s;
}

// ---------------------------------------------------------- closed forms

namespace {

void require_modes(const DensityOperator& rho_f, int modes, const char* what) {
  if (rho_f.space().subsystem_count() != modes) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " needs a " + std::to_string(modes) + "-mode field");
  }
}

double pe_plusphi_at(const DensityOperator& rho_f, double phi, double tau) {
  const auto n_max = static_cast<int>(rho_f.dim());
  const cplx e = std::polar(1.0, phi);
  double diag = 0.0;
  double coh = 0.0;
  for (int n = 0; n + 1 < n_max; ++n) {
    const double w = std::sqrt(n + 1.0) * tau;
    const double c = std::cos(w);
    const double s = std::sin(w);
    diag += c * c * rho_f(n, n).real() + s * s * rho_f(n + 1, n + 1).real();
    // (i/4) sin(2w) (e^{i phi} rho_{n,n+1} - c.c.) = -(1/2) sin(2w) Im(e^{i phi} rho_{n,n+1})
    coh += -0.5 * std::sin(2.0 * w) * std::imag(e * rho_f(n, n + 1));
  }
  diag += rho_f(n_max - 1, n_max - 1).real();  // |e, N-1> has no partner under the truncation
  return 0.5 * diag + coh;
}

}  // namespace

PopulationSeries analytic_pe_plusphi(const DensityOperator& rho_f, double phi, const std::vector<double>& grid) {
  require_modes(rho_f, 1, "analytic_pe_plusphi");
  PopulationSeries s;
  s.tau = grid;
  s.projector_label = "e";
  s.provenance = Provenance::Analytic;
  s.meta.truncation = static_cast<int>(rho_f.dim());
  s.meta.description = "JC1 |+phi> excited population, closed form";
  for (double t : grid) s.values.push_back(pe_plusphi_at(rho_f, phi, t));
  validate(s);
  return s;
}

double analytic_difference(DifferenceKind kind, const DensityOperator& rho_f, double phase, double tau) {
  const cplx e = std::polar(1.0, phase);
  switch (kind) {
    case DifferenceKind::JC1Homodyne: {
      require_modes(rho_f, 1, "JC1 homodyne series");
      const auto n_max = static_cast<int>(rho_f.dim());
      double acc = 0.0;
      for (int n = 0; n + 1 < n_max; ++n) {
        acc -= std::sin(2.0 * tau * std::sqrt(n + 1.0)) * std::imag(e * rho_f(n, n + 1));
      }
      return acc;
    }
    case DifferenceKind::JC2Homodyne: {
      require_modes(rho_f, 1, "JC2 homodyne series");
      const auto n_max = static_cast<int>(rho_f.dim());
      double acc = 0.0;
      for (int n = 0; n + 2 < n_max; ++n) {
        acc += std::sin(2.0 * tau * std::sqrt((n + 1.0) * (n + 2.0))) * std::imag(e * rho_f(n, n + 2));
      }
      return acc;
    }
    case DifferenceKind::TwoAtom: {
      require_modes(rho_f, 1, "two-atom series");
      const auto n_max = static_cast<int>(rho_f.dim());
      double acc = 0.0;
      for (int n = 0; n + 2 < n_max; ++n) {
        const double s = std::sin(std::sqrt(2.0) * tau * std::sqrt(2.0 * n + 3.0));
        acc += std::sqrt((n + 1.0) * (n + 2.0)) / (2.0 * n + 3.0) * s * s * 2.0 * std::real(e * rho_f(n, n + 2));
      }
      return acc;
    }
    case DifferenceKind::ModeA: {
      require_modes(rho_f, 2, "mode-exchange series");
      const int n1_max = rho_f.space().dim(0);
      const int n2_max = rho_f.space().dim(1);
      auto idx = [n2_max](int n1, int n2) { return static_cast<Eigen::Index>(n1) * n2_max + n2; };
      double acc = 0.0;
      for (int n1 = 0; n1 + 1 < n1_max; ++n1) {
        for (int n2 = 1; n2 < n2_max; ++n2) {
          const double w = std::sqrt((n1 + 1.0) * n2);
          acc -= std::sin(2.0 * tau * w) * std::imag(e * rho_f(idx(n1, n2), idx(n1 + 1, n2 - 1)));
        }
      }
      return acc;
    }
  }
  throw Error(ErrorCode::BadParameter, "unknown difference kind");
}

PopulationSeries analytic_difference_series(DifferenceKind kind, const DensityOperator& rho_f, double phase,
                                            const std::vector<double>& grid) {
  PopulationSeries s;
  s.tau = grid;
  s.provenance = Provenance::Analytic;
  s.meta.difference = true;
  s.meta.truncation = rho_f.space().dims().back();
  s.meta.description = std::string(to_string(kind)) + " difference, closed form";
  s.projector_label = kind == DifferenceKind::JC2Homodyne ? "g" : kind == DifferenceKind::TwoAtom ? "psi+" : "e";
  s.values.reserve(grid.size());
  for (double t : grid) s.values.push_back(analytic_difference(kind, rho_f, phase, t));
  validate(s);
  return s;
}

// ---------------------------------------------------------- Lindblad

namespace {

using Sparse = Eigen::SparseMatrix<cplx>;

struct LindbladGenerator {
  Sparse h_eff;  // H - (i/2) sum L^dag L
  std::vector<Sparse> jumps;

  // rho is Hermitian at every RK stage, so rho H_eff^dag = (H_eff rho)^dag and
  // L rho L^dag = L (L rho)^dag.
  Matrix operator()(const Matrix& rho) const {
    const Matrix m = h_eff * rho;
    Matrix out = -kI * m + kI * m.adjoint();
    for (const auto& l : jumps) {
      const Matrix lr = l * rho;
      out += l * lr.adjoint();
    }
    return out;
  }
};

LindbladGenerator make_generator(const Operator& h, const LindbladSpec& spec, int probe_qubits) {
  const HilbertSpace& space = h.space();
  std::vector<Operator> collapse;
  for (int k = probe_qubits; k < space.subsystem_count() && spec.field_decay > 0.0; ++k) {
    collapse.push_back(std::sqrt(spec.field_decay) * embed(ops::annihilation(space.dim(k)), space, k));
  }
  for (int q = 0; q < probe_qubits; ++q) {
    if (spec.probe_decay > 0.0) collapse.push_back(std::sqrt(spec.probe_decay) * embed(ops::sigma_minus(), space, q));
    if (spec.probe_dephasing > 0.0) {
      collapse.push_back(std::sqrt(spec.probe_dephasing / 2.0) * embed(ops::sigma_z(), space, q));
    }
  }
  Matrix heff = h.matrix();
  LindbladGenerator gen;
  for (const auto& c : collapse) {
    heff -= 0.5 * kI * (c.matrix().adjoint() * c.matrix());
    gen.jumps.push_back(c.matrix().sparseView());
  }
  gen.h_eff = heff.sparseView();
  return gen;
}

struct LindbladRun {
  std::vector<double> values;
  double max_trace_drift = 0.0;
  double max_top = 0.0;
};

LindbladRun integrate(const LindbladGenerator& gen, const Matrix& rho0, const Matrix& projector, const Matrix& top,
                      const std::vector<double>& grid, double dt) {
  LindbladRun run;
  Matrix rho = rho0;
  double t = 0.0;
  auto record = [&](const Matrix& r) {
    run.values.push_back((r.transpose().cwiseProduct(projector)).sum().real());
    run.max_top = std::max(run.max_top, (r.transpose().cwiseProduct(top)).sum().real());
    run.max_trace_drift = std::max(run.max_trace_drift, std::abs(r.trace().real() - 1.0));
  };
  for (double target : grid) {
    const double span = target - t;
    if (span > 0.0) {
      const int steps = static_cast<int>(std::ceil(span / dt - 1e-9));
      const double h = span / steps;
      for (int s = 0; s < steps; ++s) {
        const Matrix k1 = gen(rho);
        const Matrix k2 = gen(rho + 0.5 * h * k1);
        const Matrix k3 = gen(rho + 0.5 * h * k2);
        const Matrix k4 = gen(rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint());
      }
      t = target;
    }
    record(rho);
  }
  return run;
}

}  // namespace

PopulationSeries lindblad_series(const DensityOperator& rho0, const Operator& h, const LindbladSpec& spec,
                                 const Operator& projector, const std::vector<double>& grid, int probe_qubits,
                                 std::string projector_label, const LindbladOptions& options) {
  if (spec.field_decay < 0.0 || spec.probe_decay < 0.0 || spec.probe_dephasing < 0.0) {
    throw Error(ErrorCode::NegativeRate, "Lindblad rates must be >= 0");
  }
  if (!h.is_hermitian(1e-10)) throw Error(ErrorCode::NotHermitian, "Lindblad Hamiltonian must be Hermitian");
  if (!(rho0.space() == h.space())) throw Error(ErrorCode::ShapeMismatch, "state and Hamiltonian spaces differ");
  require_projector(projector);
  if (grid.empty()) throw Error(ErrorCode::BadParameter, "empty tau grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) {
      throw Error(ErrorCode::BadParameter, "dissipative evolution runs forward only; tau must be >= 0");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) throw Error(ErrorCode::BadParameter, "tau grid must be strictly increasing");
  }
  if (!(options.step > 0.0)) throw Error(ErrorCode::BadParameter, "RK4 step must be positive");

  const LindbladGenerator gen = make_generator(h, spec, probe_qubits);
  const Matrix top = top_level_projector(h.space(), probe_qubits).matrix();

  double dt = options.step;
  LindbladRun coarse = integrate(gen, rho0.matrix(), projector.matrix(), top, grid, dt);
  for (int halving = 0; halving <= options.max_halvings; ++halving) {
    LindbladRun fine = integrate(gen, rho0.matrix(), projector.matrix(), top, grid, dt / 2.0);
    double change = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) change = std::max(change, std::abs(fine.values[i] - coarse.values[i]));
    if (change < options.convergence_tol) {
      if (fine.max_trace_drift > options.trace_tol) {
        throw Error(ErrorCode::StepNotConverged, "trace drift " + std::to_string(fine.max_trace_drift));
      }
      PopulationSeries s;
      s.tau = grid;
      s.values = std::move(fine.values);
      s.projector_label = std::move(projector_label);
      s.provenance = Provenance::Lindblad;
      s.meta.truncation = h.space().dims().back();
      s.meta.max_top_population = fine.max_top;
      s.meta.leakage_alarm = fine.max_top > kLeakageAlarmLevel;
      validate(s);
      return s;
    }
    dt /= 2.0;
    coarse = std::move(fine);
  }
  throw Error(ErrorCode::StepNotConverged, "RK4 did not converge after " + std::to_string(options.max_halvings) +
                                               " step halvings");
}

}  // namespace qprobe
