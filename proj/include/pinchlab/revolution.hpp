#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pinchlab/core.hpp"
#include "pinchlab/profile.hpp"

namespace pinchlab {

// Revolution tube {(t, u) in [0,l] x R^m : |u| = eps c(t)} of intrinsic
// dimension m.
struct RevolutionTube {
  int m = 2;
  double epsilon = 0.1;
  Profile profile = Profile::constant(0.1, 1.0);
};

inline RevolutionTube make_tube(int m, double epsilon, Profile profile) {
  if (m < 2) throw ValidationError("tube dimension m must be >= 2");
  if (!(epsilon > 0.0)) throw ValidationError("tube scale epsilon must be positive");
  return RevolutionTube{m, epsilon, std::move(profile)};
}

// Vol S^{m-1} = 2 pi^{m/2} / Gamma(m/2).
inline double unit_sphere_area(int m) {
  return 2.0 * std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m);
}

enum class CurvatureKind { MeanCurvature, SecondForm };

inline CurvatureKind curvature_kind_from_string(const std::string& s) {
  if (s == "H" || s == "h" || s == "mean") return CurvatureKind::MeanCurvature;
  if (s == "B" || s == "b" || s == "second") return CurvatureKind::SecondForm;
  throw UsageError("unknown curvature kind: " + s + " (expected H or B)");
}

// |B|^2 = (eps c'')^2 / (1 + (eps c')^2)^3 + (m-1) / (eps^2 c^2 (1 + (eps c')^2))
inline double tube_second_form_norm(const RevolutionTube& tube, double t) {
  const double c = tube.profile.value(t);
  const double d = tube.epsilon * tube.profile.deriv(t);
  const double dd = tube.epsilon * tube.profile.second_deriv(t);
  const double g = 1.0 + d * d;
  return std::sqrt(dd * dd / (g * g * g) +
                   (tube.m - 1) / (tube.epsilon * tube.epsilon * c * c * g));
}

// |H| from the principal curvatures of the revolution hypersurface:
// (m-1)/(eps c sqrt(1+(eps c')^2)) along parallels, -eps c''/(1+(eps c')^2)^{3/2}
// along the meridian. Constant c gives (m-1)/(m eps c).
inline double tube_mean_curvature(const RevolutionTube& tube, double t) {
  const double c = tube.profile.value(t);
  const double d = tube.epsilon * tube.profile.deriv(t);
  const double dd = tube.epsilon * tube.profile.second_deriv(t);
  const double g = 1.0 + d * d;
  return std::abs((tube.m - 1) / (tube.epsilon * c * std::sqrt(g)) - dd / std::pow(g, 1.5)) /
         tube.m;
}

// dA/dt = Vol S^{m-1} (eps c)^{m-1} sqrt(1 + (eps c')^2)
inline double tube_area_element(const RevolutionTube& tube, double t) {
  const double c = tube.profile.value(t);
  const double d = tube.epsilon * tube.profile.deriv(t);
  return unit_sphere_area(tube.m) * std::pow(tube.epsilon * c, tube.m - 1) *
         std::sqrt(1.0 + d * d);
}

namespace detail {

// 16-point Gauss-Legendre rule on [-1, 1].
inline const std::array<std::array<double, 2>, 8>& gauss_legendre_16() {
  static const std::array<std::array<double, 2>, 8> rule = {{
      {0.0950125098376374401853193, 0.1894506104550684962853967},
      {0.2816035507792589132304605, 0.1826034150449235888667637},
      {0.4580167776572273863424194, 0.1691565193950025381893121},
      {0.6178762444026437484466718, 0.1495959888165767320815017},
      {0.7554044083550030338951012, 0.1246289712555338720524763},
      {0.8656312023878317438804679, 0.0951585116824927848099251},
      {0.9445750230732325760779884, 0.0622535239386478928628438},
      {0.9894009349916499325961542, 0.0271524594117540948517806},
  }};
  return rule;
}

template <typename F>
double gl16(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (const auto& [x, w] : gauss_legendre_16())
    acc += w * (f(mid + half * x) + f(mid - half * x));
  return acc * half;
}

template <typename F>
double adaptive_panel(const F& f, double a, double b, double whole, double rel_tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gl16(f, a, mid), right = gl16(f, mid, b);
  if (depth > 40) return left + right;
  if (std::abs(left + right - whole) <= rel_tol * std::max(std::abs(whole), 1e-300))
    return left + right;
  return adaptive_panel(f, a, mid, left, rel_tol, depth + 1) +
         adaptive_panel(f, mid, b, right, rel_tol, depth + 1);
}

template <typename F>
double adaptive_quadrature(const F& f, const std::vector<double>& breakpoints, double rel_tol) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    double a = breakpoints[i], b = breakpoints[i + 1];
    if (!(b > a)) continue;
    total += adaptive_panel(f, a, b, gl16(f, a, b), rel_tol, 0);
  }
  return total;
}

}  // namespace detail

// Tube term of int |H|^alpha or int |B|^alpha over the tube, by adaptive
// Gauss-Legendre quadrature split at the profile blend breakpoints.
inline double tube_curvature_integral(const RevolutionTube& tube, double alpha,
                                      CurvatureKind which, double rel_tol = 1e-10) {
  if (!(alpha >= 1.0)) throw ValidationError("curvature integral requires alpha >= 1");
  auto integrand = [&](double t) {
    double v = which == CurvatureKind::MeanCurvature ? tube_mean_curvature(tube, t)
                                                     : tube_second_form_norm(tube, t);
    return std::pow(v, alpha) * tube_area_element(tube, t);
  };
  return detail::adaptive_quadrature(integrand, tube.profile.breakpoints(), rel_tol);
}

// Limiting tube contribution as eps -> 0 in the critical-exponent trichotomy.
struct LimitPrediction {
  bool diverges = false;
  double value = 0.0;          // finite limit when it exists
  double rate_exponent = 0.0;  // value scales like eps^{rate_exponent} when divergent
};

inline LimitPrediction limit_prediction(int m, double l, double alpha, CurvatureKind which) {
  if (m < 2) throw ValidationError("limit_prediction requires m >= 2");
  if (!(alpha >= 1.0)) throw ValidationError("limit_prediction requires alpha >= 1");
  LimitPrediction out;
  const double critical = m - 1.0;
  if (alpha < critical - 1e-12) {
    out.value = 0.0;
  } else if (alpha <= critical + 1e-12) {
    out.value = which == CurvatureKind::MeanCurvature
                    ? std::pow((m - 1.0) / m, m - 1.0) * unit_sphere_area(m) * l
                    : std::pow(m - 1.0, 0.5 * (m - 1.0)) * unit_sphere_area(m) * l;
  } else {
    out.diverges = true;
    out.rate_exponent = critical - alpha;
  }
  return out;
}

}  // namespace pinchlab
