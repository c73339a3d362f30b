#pragma once

// Independent reference computations used only by the tests. None of these
// share code with the library beyond the plain Eigen containers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Eigenvalues of a Hermitian matrix by cyclic Jacobi on its real symmetric
// embedding [[Re, -Im], [Im, Re]]; every eigenvalue appears twice there.
inline std::vector<double> jacobi_eigenvalues(const CMat& a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd s(2 * n, 2 * n);
  s << a.real(), -a.imag(), a.imag(), a.real();
  const Eigen::Index m = 2 * n;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index q = p + 1; q < m; ++q) off += s(p, q) * s(p, q);
    if (off < 1e-30 * std::max(1.0, s.squaredNorm())) break;
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index q = p + 1; q < m; ++q) {
        if (std::abs(s(p, q)) < 1e-300) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
      }
    }
  }
  std::vector<double> all(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = s(i, i);
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < all.size(); i += 2) out.push_back(0.5 * (all[i] + all[i + 1]));
  return out;
}

inline CMat random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  return (a + a.adjoint()) / 2.0;
}

inline CVec random_unit(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
  return v / v.norm();
}

inline CMat random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CMat a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = Complex(g(rng), g(rng));
  return a;
}

// min max_i c_i l_i over l_1 + l_2 + l_3 = 3 with every l_i in [lo, hi],
// scanning l_1 and l_2 on a grid of the given step.
inline double dlr_grid_k3(const std::vector<double>& c, double lo, double hi, double step) {
  double best = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double l1 = lo + i * step;
    for (int j = 0; j <= n; ++j) {
      const double l2 = lo + j * step;
      const double l3 = 3.0 - l1 - l2;
      if (l3 < lo - 1e-12 || l3 > hi + 1e-12) continue;
      best = std::min(best, std::max({c[0] * l1, c[1] * l2, c[2] * l3}));
    }
  }
  return best;
}

// K = 2 slice l_2 = 2 - l_1.
inline double dlr_grid_k2(const std::vector<double>& c, double lo, double hi, double step,
                          double* arg = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double l1 = lo + i * step;
    const double l2 = 2.0 - l1;
    if (l2 < lo - 1e-12 || l2 > hi + 1e-12) continue;
    const double v = std::max(c[0] * l1, c[1] * l2);
    if (v < best) {
      best = v;
      if (arg) *arg = l1;
    }
  }
  return best;
}

// Unit m = (cos t, e^{i p} sin t) on a grid of step 0.01 rad; returns the
// minimum of f over the grid.
inline double angular_grid_min(const std::function<double(const CVec&)>& f, double step = 0.01) {
  double best = std::numeric_limits<double>::infinity();
  const double half_pi = std::acos(0.0);
  for (double t = 0.0; t <= half_pi + 1e-12; t += step) {
    for (double p = 0.0; p < 4.0 * half_pi; p += step) {
      CVec m(2);
      m(0) = std::cos(t);
      m(1) = std::polar(std::sin(t), p);
      best = std::min(best, f(m));
    }
  }
  return best;
}

// tau(m) = max_k ||m||^2 / (K^2 P_k r_k^2 ||m^H H_k||^2) computed directly.
inline double tau_of(const std::vector<CMat>& h, const std::vector<double>& power,
                     const std::vector<double>& r, const CVec& m) {
  const double k2 = static_cast<double>(h.size() * h.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    double gain = 0.0;
    for (Eigen::Index c = 0; c < h[k].cols(); ++c) {
      Complex acc = 0.0;
      for (Eigen::Index row = 0; row < h[k].rows(); ++row) acc += std::conj(m(row)) * h[k](row, c);
      gain += std::norm(acc);
    }
    worst = std::max(worst, m.squaredNorm() / (k2 * power[k] * r[k] * r[k] * gain));
  }
  return worst;
}

// Central differences of a scalar function of a real vector.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
