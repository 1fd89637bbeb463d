#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pinchlab/core.hpp"

namespace pinchlab {

// Positive C^1 tube profile c on [0, l] with derivatives. Closed forms
// (constant, smoothstep-blended plateau) or cubic-spline sample tables.
class Profile {
 public:
  double length() const { return l_; }
  bool constant_near_ends() const { return constant_near_ends_; }
  double end_margin() const { return end_margin_; }

  double value(double t) const { return eval(clamp(t), 0); }
  double deriv(double t) const { return eval(clamp(t), 1); }
  double second_deriv(double t) const { return eval(clamp(t), 2); }

  double min_value() const { return min_value_; }
  double max_value() const { return max_value_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  static Profile constant(double value, double length) {
    Profile p;
    p.kind_ = Kind::Constant;
    p.l_ = length;
    p.a_ = value;
    p.constant_near_ends_ = true;
    p.end_margin_ = length / 2.0;
    p.breakpoints_ = {0.0, length};
    p.finalize();
    return p;
  }

  // Plateau c_end near both ends, smoothstep blend over [margin, margin+width]
  // to c_mid, mirrored at the far end.
  static Profile plateau_bump(double c_end, double c_mid, double length, double margin,
                              double width) {
    if (!(margin > 0.0) || !(width > 0.0) || !(2.0 * (margin + width) < length))
      throw ValidationError("plateau_bump blend intervals do not fit in [0, l]");
    Profile p;
    p.kind_ = Kind::PlateauBump;
    p.l_ = length;
    p.a_ = c_end;
    p.b_ = c_mid;
    p.margin_ = margin;
    p.width_ = width;
    p.constant_near_ends_ = true;
    p.end_margin_ = margin;
    p.breakpoints_ = {0.0, margin, margin + width, length - margin - width, length - margin,
                      length};
    p.finalize();
    return p;
  }

  // Natural cubic spline through uniformly resampled values (2048 samples).
  static Profile from_samples(const std::vector<double>& t, const std::vector<double>& c,
                              bool constant_near_ends = false) {
    if (t.size() != c.size() || t.size() < 4)
      throw ValidationError("profile table needs at least 4 (t, c) samples");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1])) throw ValidationError("profile table t must be increasing");
    if (std::abs(t.front()) > 1e-12 * t.back())
      throw ValidationError("profile table must start at t = 0");
    Profile p;
    p.kind_ = Kind::Spline;
    p.l_ = t.back();
    p.build_spline(t, c);
    p.constant_near_ends_ = constant_near_ends;
    p.end_margin_ = p.l_ / 20.0;
    p.breakpoints_ = {0.0, p.l_};
    p.finalize();
    return p;
  }

  static Profile load_csv(const std::string& path, bool constant_near_ends = false) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open profile file: " + path);
    std::vector<double> t, c;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double ti, ci;
      if (row >> ti >> ci) {
        t.push_back(ti);
        c.push_back(ci);
      }
    }
    return from_samples(t, c, constant_near_ends);
  }

 private:
  enum class Kind { Constant, PlateauBump, Spline };

  double clamp(double t) const {
    if (t < -1e-12 * l_ || t > l_ * (1.0 + 1e-12))
      throw ValidationError("profile evaluated outside [0, l]");
    return std::clamp(t, 0.0, l_);
  }

  double eval(double t, int order) const {
    switch (kind_) {
      case Kind::Constant:
        return order == 0 ? a_ : 0.0;
      case Kind::PlateauBump: {
        double u, sign = 1.0;
        if (t < margin_) return order == 0 ? a_ : 0.0;
        if (t < margin_ + width_) {
          u = (t - margin_) / width_;
        } else if (t <= l_ - margin_ - width_) {
          return order == 0 ? b_ : 0.0;
        } else if (t < l_ - margin_) {
          u = (l_ - margin_ - t) / width_;
          sign = -1.0;
        } else {
          return order == 0 ? a_ : 0.0;
        }
        double d = b_ - a_;
        if (order == 0) return a_ + d * (u * u * u * (10.0 + u * (-15.0 + 6.0 * u)));
        if (order == 1) return sign * d * (u * u * (30.0 + u * (-60.0 + 30.0 * u))) / width_;
        return d * (u * (60.0 + u * (-180.0 + 120.0 * u))) / (width_ * width_);
      }
      case Kind::Spline: {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        std::size_t i = std::min<std::size_t>(
            knots_.size() - 2, static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                                   0, std::distance(knots_.begin(), it) - 1)));
        double x = t - knots_[i];
        const auto& s = segs_[i];
        if (order == 0) return s[0] + x * (s[1] + x * (s[2] + x * s[3]));
        if (order == 1) return s[1] + x * (2.0 * s[2] + 3.0 * x * s[3]);
        return 2.0 * s[2] + 6.0 * x * s[3];
      }
    }
    return 0.0;
  }

  void build_spline(const std::vector<double>& t_in, const std::vector<double>& c_in) {
    // resample to a uniform 2048-point table first
    const int n = 2048;
    std::vector<double> t(n), y(n);
    for (int i = 0; i < n; ++i) {
      double ti = t_in.back() * i / (n - 1);
      auto it = std::upper_bound(t_in.begin(), t_in.end(), ti);
      std::size_t j = std::min<std::size_t>(
          t_in.size() - 2, static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                               0, std::distance(t_in.begin(), it) - 1)));
      double u = (ti - t_in[j]) / (t_in[j + 1] - t_in[j]);
      t[i] = ti;
      y[i] = (1.0 - u) * c_in[j] + u * c_in[j + 1];
    }
    // natural cubic spline, Thomas solve for second derivatives
    std::vector<double> h(n - 1), alpha(n, 0.0), mu(n, 0.0), z(n, 0.0), m2(n, 0.0);
    for (int i = 0; i < n - 1; ++i) h[i] = t[i + 1] - t[i];
    for (int i = 1; i < n - 1; ++i)
      alpha[i] = 3.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    double ell = 1.0;
    for (int i = 1; i < n - 1; ++i) {
      ell = 2.0 * (t[i + 1] - t[i - 1]) - h[i - 1] * mu[i - 1];
      mu[i] = h[i] / ell;
      z[i] = (alpha[i] - h[i - 1] * z[i - 1]) / ell;
    }
    for (int i = n - 2; i >= 1; --i) m2[i] = z[i] - mu[i] * m2[i + 1];
    knots_ = t;
    segs_.resize(n - 1);
    for (int i = 0; i < n - 1; ++i) {
      double b = (y[i + 1] - y[i]) / h[i] - h[i] * (m2[i + 1] + 2.0 * m2[i]) / 3.0;
      segs_[i] = {y[i], b, m2[i], (m2[i + 1] - m2[i]) / (3.0 * h[i])};
    }
  }

  void finalize() {
    if (!(l_ > 0.0)) throw ValidationError("profile length must be positive");
    const int n = 4096;
    min_value_ = std::numeric_limits<double>::infinity();
    max_value_ = 0.0;
    double deriv_scale = 0.0;
    for (int i = 0; i <= n; ++i) {
      double t = l_ * i / n;
      double v = value(t);
      if (!(v > 0.0)) throw ValidationError("profile must stay positive on [0, l]");
      min_value_ = std::min(min_value_, v);
      max_value_ = std::max(max_value_, v);
      deriv_scale = std::max(deriv_scale, std::abs(deriv(t)));
    }
    // centered differences of c must agree with the reported derivative
    const double h = l_ / n;
    const double tol = 2e-3 * std::max(deriv_scale, max_value_ / l_) + 1e-12;
    for (int i = 1; i < n; ++i) {
      double t = l_ * i / n;
      double fd = (value(t + h) - value(t - h)) / (2.0 * h);
      if (std::abs(fd - deriv(t)) > tol)
        throw ValidationError("profile derivative is not continuous at t = " + std::to_string(t));
    }
    if (constant_near_ends_) {
      for (double t : {0.0, end_margin_ * 0.5, l_ - end_margin_ * 0.5, l_}) {
        if (std::abs(value(t) - 0.1) > 1e-9)
          throw ValidationError("profile flagged constant_near_ends must equal 1/10 near 0 and l");
      }
    }
  }

  Kind kind_ = Kind::Constant;
  double l_ = 1.0;
  double a_ = 0.1, b_ = 0.1, margin_ = 0.0, width_ = 0.0;
  std::vector<double> knots_;
  std::vector<std::array<double, 4>> segs_;
  std::vector<double> breakpoints_;
  bool constant_near_ends_ = false;
  double end_margin_ = 0.0;
  double min_value_ = 0.0, max_value_ = 0.0;
};

}  // namespace pinchlab
