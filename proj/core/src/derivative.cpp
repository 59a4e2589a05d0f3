#include "qprobe/derivative.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "qprobe/error.hpp"

namespace qprobe {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::CentralFd: return "central_fd";
    case Method::Richardson: return "richardson";
    case Method::Polyfit: return "polyfit";
    case Method::KernelIntegral: return "kernel_integral";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::CentralFd, Method::Richardson, Method::Polyfit, Method::KernelIntegral}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::BadParameter, "unknown derivative method '" + std::string(name) + "'");
}

EstimatorConfig EstimatorConfig::noiseless() { return EstimatorConfig{}; }

EstimatorConfig EstimatorConfig::sampled(int shots) {
  EstimatorConfig c;
  c.method = Method::Polyfit;
  c.poly_degree = 4;
  c.poly_window = 0.3;
  c.poly_weighted = true;
  c.shots = shots;
  return c;
}

Signal Signal::difference(const Signal& plus, const Signal& minus) {
  if (plus.is_evaluable() != minus.is_evaluable()) {
    throw Error(ErrorCode::ShapeMismatch, "cannot difference an evaluable signal and a gridded series");
  }
  if (plus.is_evaluable()) {
    Evaluable a = plus.evaluable();
    Evaluable b = minus.evaluable();
    return Signal(Evaluable([a, b](double t) { return a(t) - b(t); }));
  }
  return Signal(qprobe::difference(plus.series(), minus.series()));
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_order(int order) {
  if (order != 1 && order != 2) throw Error(ErrorCode::BadParameter, "derivative order must be 1 or 2");
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// ------------------------------------------------------------ central stencils

double stencil(const Evaluable& f, int order, int accuracy, double h) {
  if (order == 1) {
    if (accuracy == 2) return (f(h) - f(-h)) / (2.0 * h);
    return (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
  }
  const double f0 = f(0.0);
  if (accuracy == 2) return (f(h) - 2.0 * f0 + f(-h)) / (h * h);
  return (-f(2 * h) + 16.0 * f(h) - 30.0 * f0 + 16.0 * f(-h) - f(-2 * h)) / (12.0 * h * h);
}

DerivativeEstimate central_fd(const Evaluable& f, int order, const EstimatorConfig& cfg) {
  if (!(cfg.step > 0.0)) throw Error(ErrorCode::BadParameter, "central_fd step must be positive");
  if (cfg.stencil != 2 && cfg.stencil != 4) throw Error(ErrorCode::BadParameter, "stencil must be 2 or 4");
  const double h = cfg.step;
  const double value = stencil(f, order, cfg.stencil, h);
  double err = 0.0;
  if (cfg.stencil == 4) {
    err = std::abs(value - stencil(f, order, 2, h));
  } else {
    err = std::abs(value - stencil(f, order, 2, 2.0 * h)) / 3.0;
  }
  const double scale = std::max(1.0, std::abs(f(0.0)));
  err = std::max(err, 8.0 * kEps * scale / std::pow(h, order));
  return DerivativeEstimate{value, order, Method::CentralFd, h, err, 0.0, 2 * cfg.stencil / 2 + 1};
}

// Step-halving tableau; keeps the entry with the smallest internal error.
DerivativeEstimate richardson(const Evaluable& f, int order, const EstimatorConfig& cfg) {
  if (!(cfg.step > 0.0)) throw Error(ErrorCode::BadParameter, "richardson step must be positive");
  const int levels = std::max(2, cfg.richardson_levels);
  std::vector<std::vector<double>> t(static_cast<std::size_t>(levels));
  double best = 0.0;
  double best_err = std::numeric_limits<double>::infinity();
  double h = cfg.step;
  const double scale = std::max(1.0, std::abs(f(0.0)));
  for (int k = 0; k < levels; ++k, h /= 2.0) {
    auto& row = t[static_cast<std::size_t>(k)];
    row.push_back(stencil(f, order, 2, h));
    double factor = 1.0;
    for (int j = 1; j <= k; ++j) {
      factor *= 4.0;
      const double prev_same = row[static_cast<std::size_t>(j - 1)];
      const double prev_row = t[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)];
      const double val = prev_same + (prev_same - prev_row) / (factor - 1.0);
      row.push_back(val);
      const double err = std::max(std::abs(val - prev_same), std::abs(val - prev_row));
      if (err <= best_err) {
        best_err = err;
        best = val;
      }
    }
    if (k > 0) {
      const auto& prev = t[static_cast<std::size_t>(k - 1)];
      // Higher orders have started amplifying roundoff.
      if (std::abs(row.back() - prev.back()) >= 2.0 * best_err && best_err < 1e-6) break;
    }
  }
  const double floor = 8.0 * kEps * scale / std::pow(h, order);
  return DerivativeEstimate{best, order, Method::Richardson, cfg.step, std::max(best_err, floor), 0.0,
                            2 * levels + 1};
}

// ------------------------------------------------------------ polynomial fit

struct FitResult {
  Eigen::VectorXd coef;
  Eigen::MatrixXd covariance;
  double rms = 0.0;
};

FitResult weighted_fit(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd* inv_var) {
  const Eigen::Index n = a.rows();
  const Eigen::Index p = a.cols();
  Eigen::VectorXd sw = Eigen::VectorXd::Ones(n);
  if (inv_var) sw = inv_var->cwiseSqrt();
  const Eigen::MatrixXd aw = sw.asDiagonal() * a;
  const Eigen::VectorXd yw = sw.asDiagonal() * y;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(aw);
  const auto& sv = svd.singularValues();
  if (sv(p - 1) <= 0.0 || sv(0) / sv(p - 1) > 1e12) {
    throw Error(ErrorCode::IllConditionedFit, "polynomial design matrix is ill-conditioned");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aw);
  FitResult out;
  out.coef = qr.solve(yw);
  const Eigen::VectorXd resid = y - a * out.coef;
  out.rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  const Eigen::MatrixXd normal_inv = (aw.transpose() * aw).inverse();
  if (inv_var) {
    out.covariance = normal_inv;
  } else {
    const double dof = static_cast<double>(std::max<Eigen::Index>(1, n - p));
    out.covariance = normal_inv * (resid.squaredNorm() / dof);
  }
  return out;
}

DerivativeEstimate polyfit_points(const std::vector<double>& tau, const std::vector<double>& y, int order,
                                  const EstimatorConfig& cfg, bool weighted) {
  const double w = cfg.poly_window;
  const int deg = cfg.poly_degree;
  if (!(w > 0.0)) throw Error(ErrorCode::BadParameter, "polyfit window must be positive");
  if (deg < order) throw Error(ErrorCode::BadParameter, "polyfit degree must be >= derivative order");

  std::vector<double> ts;
  std::vector<double> ys;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (std::abs(tau[i]) <= w * (1.0 + 1e-9)) {
      ts.push_back(tau[i]);
      ys.push_back(y[i]);
    }
  }
  const auto n = static_cast<Eigen::Index>(ts.size());
  if (n < deg + 2) {
    throw Error(ErrorCode::WindowTooSmall, "polyfit window holds " + std::to_string(n) + " points, degree " +
                                               std::to_string(deg) + " needs at least " + std::to_string(deg + 2));
  }
  const auto [lo, hi] = std::minmax_element(ts.begin(), ts.end());
  if (*lo > 1e-12 * w || *hi < -1e-12 * w) throw Error(ErrorCode::WindowTooSmall, "polyfit window must contain tau = 0");

  auto design = [&](int degree) {
    Eigen::MatrixXd a(n, degree + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = ts[static_cast<std::size_t>(i)] / w;
      double pw = 1.0;
      for (int j = 0; j <= degree; ++j, pw *= s) a(i, j) = pw;
    }
    return a;
  };
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);

  auto fit_degree = [&](int degree) {
    const Eigen::MatrixXd a = design(degree);
    FitResult fit = weighted_fit(a, yv, nullptr);
    if (weighted) {
      // Reweight with the binomial variance of the fitted curve; observed
      // frequencies near 0 or 1 would otherwise get runaway weights.
      const double m = static_cast<double>(cfg.shots);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd p = (a * fit.coef).cwiseMax(0.0).cwiseMin(1.0);
        Eigen::VectorXd inv_var(n);
        for (Eigen::Index i = 0; i < n; ++i) inv_var(i) = m / std::max(p(i) * (1.0 - p(i)), 1.0 / m);
        fit = weighted_fit(a, yv, &inv_var);
      }
    }
    return fit;
  };

  const double scale = factorial(order) / std::pow(w, order);
  const FitResult fit = fit_degree(deg);
  const double value = scale * fit.coef(order);
  const double se = scale * std::sqrt(std::max(0.0, fit.covariance(order, order)));
  double bias = 0.0;
  if (n >= deg + 4) {
    try {
      bias = std::abs(scale * fit_degree(deg + 2).coef(order) - value);
    } catch (const Error&) {
      bias = 0.0;  // higher-degree comparison fit is optional
    }
  }
  return DerivativeEstimate{value, order, Method::Polyfit, w, std::hypot(se, bias), fit.rms, static_cast<int>(n)};
}

// ------------------------------------------------------------ kernel integral

double kernel(int order, double tau, double sigma) {
  const double g = std::exp(-0.5 * tau * tau / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  if (order == 1) return tau / (sigma * sigma) * g;                          // -G'
  return (tau * tau / (sigma * sigma) - 1.0) / (sigma * sigma) * g;          // +G''
}

double trapezoid_kernel(const std::vector<double>& tau, const std::vector<double>& y, int order, double sigma,
                        double support) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
    if (std::abs(tau[i]) > support || std::abs(tau[i + 1]) > support) continue;
    const double fa = kernel(order, tau[i], sigma) * y[i];
    const double fb = kernel(order, tau[i + 1], sigma) * y[i + 1];
    acc += 0.5 * (tau[i + 1] - tau[i]) * (fa + fb);
  }
  return acc;
}

DerivativeEstimate kernel_from(const std::function<double(double)>& at_width, int order, const EstimatorConfig& cfg) {
  const int halvings = std::max(0, cfg.kernel_halvings);
  std::vector<std::vector<double>> t;
  double sigma = cfg.kernel_width;
  for (int k = 0; k <= std::max(1, halvings); ++k, sigma /= 2.0) {
    std::vector<double> row{at_width(sigma)};
    double factor = 1.0;
    for (int j = 1; j <= k; ++j) {
      factor *= 4.0;
      const double same = row.back();
      const double prev = t.back()[static_cast<std::size_t>(j - 1)];
      row.push_back(same + (same - prev) / (factor - 1.0));
    }
    t.push_back(std::move(row));
  }
  double value = 0.0;
  double err = 0.0;
  if (halvings == 0) {
    value = t[0][0];
    err = std::abs(t[0][0] - t[1][0]) * 4.0 / 3.0;  // leading sigma^2 term
  } else {
    const auto& last = t[static_cast<std::size_t>(halvings)];
    const auto& prev = t[static_cast<std::size_t>(halvings - 1)];
    value = last.back();
    err = std::abs(last.back() - prev.back());
  }
  return DerivativeEstimate{value, order, Method::KernelIntegral, cfg.kernel_width, err, 0.0, 0};
}

DerivativeEstimate kernel_evaluable(const Evaluable& f, int order, const EstimatorConfig& cfg) {
  if (!(cfg.kernel_width > 0.0)) throw Error(ErrorCode::BadParameter, "kernel width must be positive");
  int evaluations = 0;
  auto at_width = [&](double sigma) {
    const double support = cfg.kernel_extent * sigma;
    const int half = static_cast<int>(std::ceil(cfg.kernel_extent * 16.0));
    std::vector<double> tau;
    std::vector<double> y;
    for (int i = -half; i <= half; ++i) {
      const double t = support * i / half;
      tau.push_back(t);
      y.push_back(f(t));
    }
    evaluations += static_cast<int>(tau.size());
    return trapezoid_kernel(tau, y, order, sigma, support * (1.0 + 1e-12));
  };
  DerivativeEstimate est = kernel_from(at_width, order, cfg);
  est.points_used = evaluations;
  return est;
}

DerivativeEstimate kernel_series(const PopulationSeries& s, int order, const EstimatorConfig& cfg) {
  if (!(cfg.kernel_width > 0.0)) throw Error(ErrorCode::BadParameter, "kernel width must be positive");
  const std::size_t n = s.tau.size();
  if (n < 3) throw Error(ErrorCode::WindowTooSmall, "kernel integral needs at least 3 grid points");
  const double reach = std::max(std::abs(s.tau.front()), std::abs(s.tau.back()));
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(s.tau[i] + s.tau[n - 1 - i]) > 1e-9 * reach) {
      throw Error(ErrorCode::AsymmetricGrid, "kernel integral needs a grid symmetric about tau = 0");
    }
  }
  const int halvings = std::max(1, cfg.kernel_halvings);
  const double sigma_min = cfg.kernel_width / std::pow(2.0, halvings);
  const double support = cfg.kernel_extent * cfg.kernel_width;
  if (support > reach * (1.0 + 1e-9)) {
    throw Error(ErrorCode::WindowTooSmall, "grid reaches |tau| = " + std::to_string(reach) + " but the kernel needs " +
                                               std::to_string(support));
  }
  double max_spacing = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(s.tau[i]) <= support) max_spacing = std::max(max_spacing, s.tau[i + 1] - s.tau[i]);
  }
  if (sigma_min < 1.5 * max_spacing) {
    throw Error(ErrorCode::WindowTooSmall, "grid spacing too coarse for kernel width " + std::to_string(sigma_min));
  }
  auto at_width = [&](double sigma) {
    return trapezoid_kernel(s.tau, s.values, order, sigma, cfg.kernel_extent * sigma * (1.0 + 1e-12));
  };
  DerivativeEstimate est = kernel_from(at_width, order, cfg);
  est.points_used = static_cast<int>(n);
  return est;
}

// ------------------------------------------------------------ gridded central

DerivativeEstimate central_fd_series(const PopulationSeries& s, int order, const EstimatorConfig& cfg) {
  const auto it = std::find_if(s.tau.begin(), s.tau.end(), [](double t) { return std::abs(t) < 1e-12; });
  if (it == s.tau.end()) throw Error(ErrorCode::WindowTooSmall, "central_fd on a grid needs a sample at tau = 0");
  const auto i0 = static_cast<std::size_t>(it - s.tau.begin());
  if (i0 == 0 || i0 + 1 >= s.tau.size()) throw Error(ErrorCode::WindowTooSmall, "central_fd needs points on both sides of 0");
  const double spacing = s.tau[i0 + 1] - s.tau[i0];
  const auto k = static_cast<std::size_t>(std::max(1L, std::lround(cfg.step / spacing)));
  const std::size_t reach = (cfg.stencil == 4 ? 2 : 1) * k;
  if (i0 < reach || i0 + reach >= s.tau.size()) throw Error(ErrorCode::WindowTooSmall, "central_fd stencil leaves the grid");
  for (std::size_t j = i0 - reach; j < i0 + reach; ++j) {
    if (std::abs((s.tau[j + 1] - s.tau[j]) - spacing) > 1e-9 * spacing) {
      throw Error(ErrorCode::AsymmetricGrid, "central_fd on a grid needs uniform spacing around 0");
    }
  }
  auto at = [&](double t) {
    const long off = std::lround(t / spacing);
    return s.values[static_cast<std::size_t>(static_cast<long>(i0) + off)];
  };
  EstimatorConfig local = cfg;
  local.step = static_cast<double>(k) * spacing;
  DerivativeEstimate est = central_fd(Evaluable(at), order, local);
  est.points_used = static_cast<int>(2 * reach + 1);
  return est;
}

}  // namespace

DerivativeEstimate derivative_at_zero(const Signal& source, int order, const EstimatorConfig& cfg) {
  check_order(order);
  if (source.is_evaluable()) {
    const Evaluable& f = source.evaluable();
    switch (cfg.method) {
      case Method::CentralFd: return central_fd(f, order, cfg);
      case Method::Richardson: return richardson(f, order, cfg);
      case Method::KernelIntegral: return kernel_evaluable(f, order, cfg);
      case Method::Polyfit: {
        const int pts = std::max(cfg.poly_points, cfg.poly_degree + 4);
        std::vector<double> tau = linspace(-cfg.poly_window, cfg.poly_window, pts % 2 ? pts : pts + 1);
        std::vector<double> y;
        y.reserve(tau.size());
        for (double t : tau) y.push_back(f(t));
        return polyfit_points(tau, y, order, cfg, false);
      }
    }
  }
  const PopulationSeries& s = source.series();
  validate(s);
  switch (cfg.method) {
    case Method::Richardson:
      throw Error(ErrorCode::RequiresEvaluable, "richardson needs a source evaluable at arbitrary tau");
    case Method::CentralFd: return central_fd_series(s, order, cfg);
    case Method::KernelIntegral: return kernel_series(s, order, cfg);
    case Method::Polyfit: {
      const bool weighted = cfg.poly_weighted && !s.meta.difference && cfg.shots > 0;
      return polyfit_points(s.tau, s.values, order, cfg, weighted);
    }
  }
  throw Error(ErrorCode::BadParameter, "unknown method");
}

}  // namespace qprobe
