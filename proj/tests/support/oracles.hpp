#pragma once

// Reference computations used only by tests. Everything here is written
// independently of the library code paths it checks: plain loops, no calls
// into softhgr numerics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = nd(gen);
  return m;
}

/// Eigenvalues (descending) of a symmetric 3x3 matrix from its
/// characteristic polynomial, by scanning for sign changes and bisecting.
inline std::vector<double> symmetric3_eigenvalues(const Matrix& a) {
  const double c2 = -(a(0, 0) + a(1, 1) + a(2, 2));
  const double c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2) - a(0, 1) * a(1, 0) -
                    a(0, 2) * a(2, 0) - a(1, 2) * a(2, 1);
  const double c0 = -(a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                      a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                      a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)));
  auto p = [&](double x) { return ((x + c2) * x + c1) * x + c0; };
  double bound = 1.0;
  for (Eigen::Index r = 0; r < 3; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) bound += std::abs(a(r, c));
  std::vector<double> roots;
  const int steps = 200000;
  double prev_x = -bound;
  double prev = p(prev_x);
  for (int i = 1; i <= steps; ++i) {
    const double x = -bound + 2.0 * bound * i / steps;
    const double v = p(x);
    if (prev == 0.0) roots.push_back(prev_x);
    else if (prev * v < 0.0) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (p(lo) * p(mid) <= 0.0) hi = mid;
        else lo = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev = v;
  }
  std::sort(roots.rbegin(), roots.rend());
  return roots;
}

/// Straight-line MLP forward: weights[l] is fan_in x fan_out, relu on all
/// but the last layer when `relu_hidden`.
inline Matrix mlp_forward(const std::vector<Matrix>& weights, const std::vector<Vector>& biases,
                          const std::vector<bool>& relu, const Matrix& input) {
  Matrix cur = input;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Matrix next(cur.rows(), weights[l].cols());
    for (Eigen::Index i = 0; i < cur.rows(); ++i) {
      for (Eigen::Index o = 0; o < weights[l].cols(); ++o) {
        double s = biases[l](o);
        for (Eigen::Index a = 0; a < cur.cols(); ++a) s += cur(i, a) * weights[l](a, o);
        next(i, o) = relu[l] ? std::max(s, 0.0) : s;
      }
    }
    cur = next;
  }
  return cur;
}

inline Matrix column_center(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= static_cast<double>(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, c) -= mean;
  }
  return out;
}

/// 1/(m-1) sum_i x_i x_i^T for centered rows, by explicit loops.
inline Matrix loop_covariance(const Matrix& centered) {
  const Eigen::Index m = centered.rows();
  const Eigen::Index k = centered.cols();
  Matrix c = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) c(a, b) += centered(i, a) * centered(i, b);
  return c / static_cast<double>(m - 1);
}

/// Mini-batch soft objective written out term by term.
inline double loop_soft_hgr(const Matrix& f_raw, const Matrix& g_raw) {
  const Matrix f = column_center(f_raw);
  const Matrix g = column_center(g_raw);
  const Eigen::Index m = f.rows();
  double inner = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index a = 0; a < f.cols(); ++a) inner += f(i, a) * g(i, a);
  inner /= static_cast<double>(m - 1);
  const Matrix cf = loop_covariance(f);
  const Matrix cg = loop_covariance(g);
  double trace = 0.0;
  for (Eigen::Index a = 0; a < cf.rows(); ++a)
    for (Eigen::Index b = 0; b < cf.cols(); ++b) trace += cf(a, b) * cg(b, a);
  return inner - 0.5 * trace;
}

/// Max-subtracted softmax of h . theta_j, one sample.
inline Vector loop_softmax(const Vector& h, const Matrix& theta) {
  Vector s(theta.cols());
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    double v = 0.0;
    for (Eigen::Index a = 0; a < h.size(); ++a) v += h(a) * theta(a, j);
    s(j) = v;
  }
  const double mx = s.maxCoeff();
  double z = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) z += std::exp(s(j) - mx);
  for (Eigen::Index j = 0; j < s.size(); ++j) s(j) = std::exp(s(j) - mx) / z;
  return s;
}

/// Central finite-difference gradient.
inline Vector central_gradient(const std::function<double(const Vector&)>& fn, const Vector& x,
                               double step = 1e-5) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = fn(probe);
    probe(i) = x(i) - step;
    const double down = fn(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

/// Largest per-entry relative error, with an absolute floor on the scale so
/// that entries whose true value is ~0 are judged by absolute error.
inline double max_relative_error(const Vector& analytic, const Vector& numeric, double floor = 1e-4) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic(i)), std::abs(numeric(i)), floor});
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / scale);
  }
  return worst;
}

/// Symmetric inverse square root by eigen-decomposition (test-side only).
inline Matrix sym_inv_sqrt(const Matrix& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

/// Direct maximization of E[f(X)^T g(Y)] over tabular f, g with the
/// zero-mean / identity-covariance constraints enforced by projection after
/// each ascent step. Works in the scaled coordinates phi(x) = sqrt(P(x)) f(x).
inline double projected_ascent_max_correlation(const Matrix& pmf, Eigen::Index k, double step,
                                               int iterations, unsigned seed) {
  const Eigen::Index cx = pmf.rows(), cy = pmf.cols();
  Vector px = Vector::Zero(cx), py = Vector::Zero(cy);
  for (Eigen::Index x = 0; x < cx; ++x)
    for (Eigen::Index y = 0; y < cy; ++y) {
      px(x) += pmf(x, y);
      py(y) += pmf(x, y);
    }
  Matrix b(cx, cy);
  for (Eigen::Index x = 0; x < cx; ++x)
    for (Eigen::Index y = 0; y < cy; ++y) b(x, y) = pmf(x, y) / std::sqrt(px(x) * py(y));
  const Vector u0 = px.cwiseSqrt(), v0 = py.cwiseSqrt();

  auto project = [](Matrix phi, const Vector& u) {
    phi -= u * (u.transpose() * phi);
    return Matrix(phi * sym_inv_sqrt(phi.transpose() * phi));
  };
  Matrix phi = project(random_matrix(cx, k, seed), u0);
  Matrix psi = project(random_matrix(cy, k, seed + 1), v0);
  for (int it = 0; it < iterations; ++it) {
    const Matrix grad_phi = b * psi;
    const Matrix grad_psi = b.transpose() * phi;
    phi = project(phi + step * grad_phi, u0);
    psi = project(psi + step * grad_psi, v0);
  }
  // Best rotation of psi against phi: the objective max over orthogonal R of
  // tr(phi^T b psi R) is the nuclear norm of phi^T b psi.
  const Matrix m = phi.transpose() * b * psi;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

/// Direct unconstrained ascent on E[f^T g] - 1/2 tr(Cov f Cov g) over
/// zero-mean tabular f, g, in scaled coordinates. Returns the final value.
inline double unconstrained_ascent_soft_optimum(const Matrix& pmf, Eigen::Index k, double step,
                                                int iterations, unsigned seed) {
  const Eigen::Index cx = pmf.rows(), cy = pmf.cols();
  Vector px = Vector::Zero(cx), py = Vector::Zero(cy);
  for (Eigen::Index x = 0; x < cx; ++x)
    for (Eigen::Index y = 0; y < cy; ++y) {
      px(x) += pmf(x, y);
      py(y) += pmf(x, y);
    }
  Matrix b(cx, cy);
  for (Eigen::Index x = 0; x < cx; ++x)
    for (Eigen::Index y = 0; y < cy; ++y) b(x, y) = pmf(x, y) / std::sqrt(px(x) * py(y));
  const Vector u0 = px.cwiseSqrt(), v0 = py.cwiseSqrt();
  auto center = [](Matrix phi, const Vector& u) { return Matrix(phi - u * (u.transpose() * phi)); };
  Matrix phi = center(random_matrix(cx, k, seed, 0.1), u0);
  Matrix psi = center(random_matrix(cy, k, seed + 1, 0.1), v0);
  auto value = [&] {
    return (phi.transpose() * b * psi).trace() -
           0.5 * ((phi.transpose() * phi) * (psi.transpose() * psi)).trace();
  };
  for (int it = 0; it < iterations; ++it) {
    const Matrix gphi = b * psi - phi * (psi.transpose() * psi);
    const Matrix gpsi = b.transpose() * phi - psi * (phi.transpose() * phi);
    phi = center(phi + step * gphi, u0);
    psi = center(psi + step * gpsi, v0);
  }
  return value();
}

}  // namespace oracle
