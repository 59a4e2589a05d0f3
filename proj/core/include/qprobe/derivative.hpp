#pragma once

// Derivatives of a probe signal at tau = 0.
//
// The integral-transform kernels for the field moments are derivatives of a
// delta function, so every extraction reduces to d^n P / d tau^n at zero. Four
// estimators are provided:
//
//   central_fd       2nd or 4th order symmetric stencils
//   richardson       repeated step halving of the central difference with a
//                    Neville tableau in h^2
//   polyfit          least-squares polynomial on a window around 0; works on
//                    noisy gridded data and on one-sided (tau >= 0) windows
//   kernel_integral  trapezoid quadrature of  int (-1)^n G_sigma^(n)(tau) P(tau)
//                    with a Gaussian mollifier G_sigma; bias is O(sigma^2)

#include <functional>
#include <string>
#include <string_view>
#include <variant>

#include "qprobe/evolution.hpp"

namespace qprobe {

enum class Method { CentralFd, Richardson, Polyfit, KernelIntegral };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct EstimatorConfig {
  Method method = Method::Richardson;

  double step = 0.1;  // central_fd step; richardson initial step
  int stencil = 4;    // central_fd accuracy order, 2 or 4
  int richardson_levels = 6;

  int poly_degree = 4;
  double poly_window = 0.3;
  int poly_points = 201;       // samples drawn in the window from an evaluable source
  bool poly_weighted = false;  // reweight by binomial variance of the fitted curve
  int shots = 0;               // M for the variance weights

  double kernel_width = 0.05;
  int kernel_halvings = 0;     // Richardson extrapolation in sigma^2 over this many halvings
  double kernel_extent = 10.0; // quadrature support in units of sigma

  static EstimatorConfig noiseless();
  static EstimatorConfig sampled(int shots);
};

struct DerivativeEstimate {
  double value = 0.0;
  int order = 1;
  Method method = Method::Richardson;
  double step_or_width = 0.0;
  double error_estimate = 0.0;
  double fit_residual = 0.0;  // polyfit RMS residual; 0 for other methods
  int points_used = 0;
};

using Evaluable = std::function<double(double)>;

// Either an exactly evaluable population function or a gridded series.
class Signal {
 public:
  Signal(Evaluable f) : source_(std::move(f)) {}
  Signal(PopulationSeries s) : source_(std::move(s)) {}

  bool is_evaluable() const { return std::holds_alternative<Evaluable>(source_); }
  const Evaluable& evaluable() const { return std::get<Evaluable>(source_); }
  const PopulationSeries& series() const { return std::get<PopulationSeries>(source_); }

  // plus - minus; both must be of the same kind (and share a grid if gridded).
  static Signal difference(const Signal& plus, const Signal& minus);

 private:
  std::variant<Evaluable, PopulationSeries> source_;
};

DerivativeEstimate derivative_at_zero(const Signal& source, int order, const EstimatorConfig& config);

}  // namespace qprobe
