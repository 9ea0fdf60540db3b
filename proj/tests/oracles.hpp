/*
 * Copyright 2026 The carleman-rl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the reduced-basis machinery beyond enumerating
// monomials, so agreement is a genuine cross-check.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "carleman/monomial_basis.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using carleman::Exponent;

inline int ipow(int base, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

/// Exponent of the flat Kronecker index `flat` in [0, n^k).
inline Exponent flat_exponent(int n, int k, int flat) {
  Exponent e(n, 0);
  for (int p = 0; p < k; ++p) {
    e[flat % n] += 1;
    flat /= n;
  }
  return e;
}

/// x^{(k)} = x (x) x (x) ... (k factors).
inline VectorXd kron_power(const VectorXd& x, int k) {
  VectorXd out = VectorXd::Ones(1);
  for (int p = 0; p < k; ++p) out = Eigen::kroneckerProduct(out, x).eval();
  return out;
}

/// Duplication D (n^k x m) with x^{(k)} = D * reduced, and a selection S
/// (m x n^k) with reduced = S * x^{(k)}.
struct Reduction {
  MatrixXd D;
  MatrixXd S;
};

inline Reduction reduction(int n, int k) {
  const std::vector<Exponent> mons = carleman::degree_monomials(n, k);
  std::map<Exponent, int> idx;
  for (std::size_t i = 0; i < mons.size(); ++i) idx[mons[i]] = static_cast<int>(i);
  const int full = ipow(n, k);
  Reduction r{MatrixXd::Zero(full, static_cast<Eigen::Index>(mons.size())),
              MatrixXd::Zero(static_cast<Eigen::Index>(mons.size()), full)};
  std::vector<bool> chosen(mons.size(), false);
  for (int f = 0; f < full; ++f) {
    const int m = idx.at(flat_exponent(n, k, f));
    r.D(f, m) = 1.0;
    if (!chosen[m]) {
      r.S(m, f) = 1.0;
      chosen[m] = true;
    }
  }
  return r;
}

/// Reduced-basis Carleman drift matrix built from full Kronecker powers:
/// block (i, i+j-1) = S_i * sum_p I^(p) (x) A1j_full (x) I^(i-1-p) * D_{i+j-1}.
inline MatrixXd kronecker_transition(const std::vector<MatrixXd>& taylor, int n, int N) {
  std::vector<int> offsets(N + 1, 0);
  for (int d = 1; d <= N; ++d) {
    offsets[d] = offsets[d - 1] + static_cast<int>(carleman::degree_monomials(n, d).size());
  }
  MatrixXd A = MatrixXd::Zero(offsets[N], offsets[N]);
  for (int i = 1; i <= N; ++i) {
    const Reduction ri = reduction(n, i);
    for (std::size_t jj = 0; jj < taylor.size(); ++jj) {
      const int j = static_cast<int>(jj) + 1;
      const int target = i + j - 1;
      if (target > N) continue;
      const Reduction rj = reduction(n, j);
      const Reduction rt = reduction(n, target);
      const MatrixXd a_full = taylor[jj] * rj.S;  // n x n^j
      MatrixXd block = MatrixXd::Zero(ipow(n, i), ipow(n, target));
      for (int p = 0; p < i; ++p) {
        const MatrixXd left = MatrixXd::Identity(ipow(n, p), ipow(n, p));
        const MatrixXd right = MatrixXd::Identity(ipow(n, i - 1 - p), ipow(n, i - 1 - p));
        block += Eigen::kroneckerProduct(Eigen::kroneckerProduct(left, a_full).eval(), right).eval();
      }
      A.block(offsets[i - 1], offsets[target - 1], offsets[i] - offsets[i - 1], offsets[target] - offsets[target - 1]) =
          ri.S * block * rt.D;
    }
  }
  return A;
}

/// vec-form Lyapunov oracle: solves A'P + PA + C = 0 through the n^2 x n^2
/// Kronecker system.
inline MatrixXd kronecker_lyapunov(const MatrixXd& A, const MatrixXd& C) {
  const Eigen::Index n = A.rows();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd L = Eigen::kroneckerProduct(I, A.transpose()).eval() + Eigen::kroneckerProduct(A.transpose(), I).eval();
  const VectorXd c = Eigen::Map<const VectorXd>(C.data(), n * n);
  const VectorXd p = L.fullPivLu().solve(-c);
  return Eigen::Map<const MatrixXd>(p.data(), n, n);
}

/// Model-based Kleinman iteration with a plain Kronecker Lyapunov solve.
inline MatrixXd kleinman_oracle(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                                MatrixXd K, int sweeps = 60) {
  MatrixXd P;
  for (int s = 0; s < sweeps; ++s) {
    const MatrixXd Acl = A - B * K;
    P = kronecker_lyapunov(Acl, Q + K.transpose() * R * K);
    P = 0.5 * (P + P.transpose());
    K = R.ldlt().solve(B.transpose() * P);
  }
  return P;
}

/// Sparse polynomial in x, keyed by exponent.
using Poly = std::map<Exponent, double>;

inline double eval(const Poly& p, const VectorXd& x) {
  double total = 0.0;
  for (const auto& [e, c] : p) {
    double v = c;
    for (std::size_t s = 0; s < e.size(); ++s) v *= std::pow(x(static_cast<Eigen::Index>(s)), e[s]);
    total += v;
  }
  return total;
}

inline Exponent add(const Exponent& a, const Exponent& b) {
  Exponent c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

inline int degree(const Exponent& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

struct Rng {
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
  MatrixXd matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * uniform();
    return m;
  }
  VectorXd vector(Eigen::Index n, double scale = 1.0) { return matrix(n, 1, scale); }
  std::mt19937_64 engine;
};

}  // namespace oracle
