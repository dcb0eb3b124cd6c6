#include "nvrot/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "nvrot/error.hpp"

namespace nvrot {

namespace {

struct Problem {
  Eigen::Index params;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  // fills residuals (model - data) and Jacobian
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)> evaluate;
};

struct Solution {
  Eigen::VectorXd p;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  int iterations = 0;
  bool converged = false;
};

Eigen::VectorXd clamp(const Eigen::VectorXd& p, const Problem& prob) {
  return p.cwiseMax(prob.lower).cwiseMin(prob.upper);
}

Solution levenberg_marquardt(const Problem& prob, Eigen::VectorXd p, const FitOptions& opt) {
  Solution s;
  p = clamp(p, prob);
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  prob.evaluate(p, r, j);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (s.iterations = 0; s.iterations < opt.max_iterations; ++s.iterations) {
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < prob.params; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd trial = clamp(p + step, prob);
      Eigen::VectorXd rt;
      Eigen::MatrixXd jt;
      prob.evaluate(trial, rt, jt);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct <= cost) {
        const double drop = cost - ct;
        const double moved = (trial - p).norm();
        p = trial;
        r = std::move(rt);
        j = std::move(jt);
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (drop <= opt.tolerance * std::max(cost, 1e-300) ||
            moved <= opt.tolerance * (1.0 + p.norm())) {
          s.converged = true;
        }
        cost = ct;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step at any damping: a (bounded) stationary point.
      s.converged = true;
    }
    if (s.converged) {
      ++s.iterations;
      break;
    }
  }
  s.p = p;
  s.residual = r;
  s.jacobian = j;
  return s;
}

Eigen::MatrixXd covariance(const Solution& s) {
  const Eigen::Index m = s.residual.size();
  const Eigen::Index n = s.p.size();
  const double dof = std::max<double>(1.0, static_cast<double>(m - n));
  const double sigma2 = s.residual.squaredNorm() / dof;
  const Eigen::MatrixXd jtj = s.jacobian.transpose() * s.jacobian;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
  return sigma2 * cod.pseudoInverse();
}

void check_samples(std::span<const double> x, std::span<const double> y, std::size_t minimum) {
  if (x.size() != y.size()) {
    throw Error("analysis.invalid_argument", "sample arrays differ in length");
  }
  if (x.size() < minimum) {
    throw Error("analysis.invalid_argument",
                "need at least " + std::to_string(minimum) + " samples, got " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error("analysis.invalid_argument", "samples must be finite");
    }
  }
}

bool is_constant(std::span<const double> y) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  return *hi - *lo <= 1e-12 * std::max(scale, 1e-300);
}

}  // namespace

StretchedExpFit fit_stretched_exponential(std::span<const double> tau,
                                          std::span<const double> signal,
                                          const FitOptions& options) {
  check_samples(tau, signal, 4);
  std::vector<std::size_t> order(tau.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!(tau[i] > 0.0)) throw Error("analysis.invalid_argument", "tau values must be positive");
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return tau[a] < tau[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (tau[order[i]] == tau[order[i - 1]]) {
      throw Error("analysis.invalid_argument", "tau values must be distinct");
    }
  }
  if (is_constant(signal)) {
    throw Error("analysis.degenerate_fit", "signal is constant; no decay to fit");
  }

  const double scale = tau[order.back()];
  const Eigen::Index m = static_cast<Eigen::Index>(tau.size());
  Eigen::VectorXd t(m), y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t[i] = tau[order[static_cast<std::size_t>(i)]] / scale;
    y[i] = signal[order[static_cast<std::size_t>(i)]];
  }

  const bool fixed = std::isfinite(options.fixed_amplitude);
  const double amp0 = fixed ? options.fixed_amplitude : y[0];
  double t2 = std::numeric_limits<double>::quiet_NaN();
  if (amp0 != 0.0) {
    const double target = std::exp(-1.0);
    // a fixed amplitude is the value at tau = 0
    if (fixed && y[0] / amp0 < target) t2 = (1.0 - target) / (1.0 - y[0] / amp0) * t[0];
    for (Eigen::Index i = 1; i < m && !std::isfinite(t2); ++i) {
      const double a = y[i - 1] / amp0, b = y[i] / amp0;
      if (b < target && a >= target) t2 = t[i - 1] + (a - target) / (a - b) * (t[i] - t[i - 1]);
    }
    if (!std::isfinite(t2)) {
      // log-linear slope through the positive ratios
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int k = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double ratio = y[i] / amp0;
        if (ratio <= 0.0) continue;
        sx += t[i];
        sy += std::log(ratio);
        sxx += t[i] * t[i];
        sxy += t[i] * std::log(ratio);
        ++k;
      }
      const double det = k * sxx - sx * sx;
      const double slope = k >= 2 && det > 0.0 ? (k * sxy - sx * sy) / det : 0.0;
      t2 = slope < 0.0 ? -1.0 / slope : 10.0;
    }
  } else {
    t2 = 0.5;
  }

  Problem prob;
  prob.params = 3;
  prob.lower = Eigen::Vector3d(-std::numeric_limits<double>::infinity(), -30.0, 0.5);
  prob.upper = Eigen::Vector3d(std::numeric_limits<double>::infinity(), 30.0, 4.0);
  prob.evaluate = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    r.resize(m);
    j.resize(m, 3);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double lr = std::log(t[i]) - p[1];
      const double z = std::exp(p[2] * lr);
      const double e = std::exp(-z);
      r[i] = p[0] * e - y[i];
      j(i, 0) = fixed ? 0.0 : e;
      j(i, 1) = p[0] * e * z * p[2];
      j(i, 2) = -p[0] * e * z * lr;
    }
  };
  const Solution s =
      levenberg_marquardt(prob, Eigen::Vector3d(amp0, std::log(std::max(t2, 1e-12)), 1.0), options);
  const Eigen::MatrixXd cov = covariance(s);

  StretchedExpFit fit;
  fit.amplitude = fixed ? amp0 : s.p[0];
  fit.t2_eff = std::exp(s.p[1]) * scale;
  fit.stretch_n = s.p[2];
  fit.residual_rms = std::sqrt(s.residual.squaredNorm() / static_cast<double>(m));
  fit.t2_error = fit.t2_eff * std::sqrt(std::max(cov(1, 1), 0.0));
  fit.stretch_error = std::sqrt(std::max(cov(2, 2), 0.0));
  fit.iterations = s.iterations;
  fit.converged = s.converged;
  fit.status = s.converged ? "ok" : "max_iterations";
  return fit;
}

DampedSinusoidFit fit_damped_sinusoid(std::span<const double> x, std::span<const double> y,
                                      const FitOptions& options) {
  check_samples(x, y, 8);
  const Eigen::Index m = static_cast<Eigen::Index>(x.size());
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (!(scale > 0.0)) throw Error("analysis.invalid_argument", "abscissae are all zero");
  Eigen::VectorXd u(m), v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    u[i] = x[static_cast<std::size_t>(i)] / scale;
    v[i] = y[static_cast<std::size_t>(i)];
  }
  DampedSinusoidFit fit;
  if (is_constant(y)) {
    fit.offset = v.mean();
    fit.decay = std::numeric_limits<double>::infinity();
    fit.status = "no_signal";
    return fit;
  }

  // Periodogram on a grid 8x finer than 1/span, up to the mean-spacing Nyquist.
  const double mean = v.mean();
  const double span = u.maxCoeff() - u.minCoeff();
  const double k_max = std::numbers::pi * static_cast<double>(m - 1) / span;
  const double dk = 2.0 * std::numbers::pi / (8.0 * span);
  double best_k = dk, best_power = -1.0;
  std::complex<double> best_sum = 0.0;
  for (double k = dk; k <= k_max; k += dk) {
    std::complex<double> sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) sum += (v[i] - mean) * std::polar(1.0, -k * u[i]);
    if (std::norm(sum) > best_power) {
      best_power = std::norm(sum);
      best_k = k;
      best_sum = sum;
    }
  }

  Problem prob;
  prob.params = 5;
  const double inf = std::numeric_limits<double>::infinity();
  prob.lower = (Eigen::VectorXd(5) << -inf, 0.0, 0.0, 0.0, -inf).finished();
  prob.upper = (Eigen::VectorXd(5) << inf, inf, 1e3, inf, inf).finished();
  prob.evaluate = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    r.resize(m);
    j.resize(m, 5);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double e = std::exp(-p[2] * u[i]);
      const double arg = p[3] * u[i] + p[4];
      const double c = std::cos(arg), s = std::sin(arg);
      r[i] = p[0] + p[1] * e * c - v[i];
      j(i, 0) = 1.0;
      j(i, 1) = e * c;
      j(i, 2) = -u[i] * p[1] * e * c;
      j(i, 3) = -p[1] * e * s * u[i];
      j(i, 4) = -p[1] * e * s;
    }
  };
  Eigen::VectorXd p0(5);
  p0 << mean, 2.0 * std::abs(best_sum) / static_cast<double>(m), 0.0, best_k, std::arg(best_sum);
  const Solution s = levenberg_marquardt(prob, p0, options);
  const Eigen::MatrixXd cov = covariance(s);

  fit.offset = s.p[0];
  fit.amplitude = s.p[1];
  fit.decay = s.p[2] > 0.0 ? scale / s.p[2] : inf;
  fit.frequency = s.p[3] / scale;
  fit.phase = std::remainder(s.p[4], 2.0 * std::numbers::pi);
  fit.residual_rms = std::sqrt(s.residual.squaredNorm() / static_cast<double>(m));
  fit.amplitude_error = std::sqrt(std::max(cov(1, 1), 0.0));
  fit.decay_rate_error = std::sqrt(std::max(cov(2, 2), 0.0)) / scale;
  fit.iterations = s.iterations;
  fit.converged = s.converged;
  fit.status = s.converged ? "ok" : "max_iterations";
  return fit;
}

}  // namespace nvrot
