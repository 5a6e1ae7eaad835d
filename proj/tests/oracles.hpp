#pragma once

// Slow definitional references used to check the fast implementations.
// Nothing here calls into the library code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline std::uint64_t pair_count(const std::vector<double>& q, double t) {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i + 1; j < q.size(); ++j)
      if (std::abs(q[i] - q[j]) > t) ++c;
  return c;
}

inline long double mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const long double ma = mean(a), mb = mean(b);
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

// rank = (#smaller) + (#equal + 1) / 2, by counting.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) less += 1;
      if (x == v[i]) equal += 1;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

// Tau-b straight from pair counts.
inline double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
  long long conc = 0, disc = 0, tie_a = 0, tie_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0 && db == 0) continue;
      if (da == 0) {
        ++tie_a;
      } else if (db == 0) {
        ++tie_b;
      } else if ((da > 0) == (db > 0)) {
        ++conc;
      } else {
        ++disc;
      }
    }
  }
  const long double n_a = conc + disc + tie_b;  // pairs untied in a
  const long double n_b = conc + disc + tie_a;  // pairs untied in b
  return static_cast<double>((conc - disc) / std::sqrt(n_a * n_b));
}

// max 1'a - a'Qa/2  s.t.  0 <= a <= C, y'a = 0, by accelerated projected
// gradient. The projection solves for the multiplier of y'a = 0 by bisection.
inline std::vector<double> project(const std::vector<double>& v, const std::vector<int>& y, double C) {
  auto at = [&](double lam) {
    std::vector<double> a(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) a[k] = std::clamp(v[k] - lam * y[k], 0.0, C);
    return a;
  };
  auto g = [&](double lam) {
    double s = 0;
    const auto a = at(lam);
    for (std::size_t k = 0; k < a.size(); ++k) s += y[k] * a[k];
    return s;
  };
  double lo = -1e6, hi = 1e6;  // g is nonincreasing in lam
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

inline double dual_objective(const std::vector<double>& Q, const std::vector<double>& a) {
  const std::size_t n = a.size();
  long double lin = 0, quad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += a[i];
    for (std::size_t j = 0; j < n; ++j) quad += a[i] * Q[i * n + j] * a[j];
  }
  return static_cast<double>(lin - quad / 2);
}

/// Q = (yy' o K), row-major n x n. Returns the optimal objective.
inline double svm_dual_qp(const std::vector<double>& Q, const std::vector<int>& y, double C,
                          int iterations = 200000) {
  const std::size_t n = y.size();
  // Lipschitz constant by power iteration.
  std::vector<double> v(n, 1.0), w(n);
  double L = 1.0;
  for (int it = 0; it < 500; ++it) {
    double nrm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0;
      for (std::size_t j = 0; j < n; ++j) w[i] += Q[i * n + j] * v[j];
      nrm += w[i] * w[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0) break;
    L = nrm;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nrm;
  }
  L *= 1.01;

  std::vector<double> a(n, 0.0), z = a, prev = a, grad(n);
  double t = 1;
  double best = 0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double qz = 0;
      for (std::size_t j = 0; j < n; ++j) qz += Q[i * n + j] * z[j];
      grad[i] = 1 - qz;  // gradient of the concave objective
    }
    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = z[i] + grad[i] / L;
    prev = a;
    a = project(step, y, C);
    const double t_next = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + (t - 1) / t_next * (a[i] - prev[i]);
    t = t_next;
    if (it % 1000 == 999) {
      const double f = dual_objective(Q, a);
      if (std::abs(f - best) <= 1e-13 * (1 + std::abs(f))) break;
      best = f;
    }
  }
  return dual_objective(Q, a);
}

/// Generalized Gaussian draw: |x| = scale G^(1/shape), G ~ Gamma(1/shape, 1).
template <class Rng>
std::vector<double> ggd_samples(double shape, double scale, std::size_t n, Rng& rng) {
  std::gamma_distribution<double> gamma(1.0 / shape, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> out(n);
  for (auto& x : out) x = (sign(rng) ? 1 : -1) * scale * std::pow(gamma(rng), 1.0 / shape);
  return out;
}

}  // namespace oracle
