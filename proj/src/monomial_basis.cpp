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

#include "carleman/monomial_basis.hpp"

#include <algorithm>
#include <numeric>

namespace carleman {

int exponent_degree(const Exponent& e) { return std::accumulate(e.begin(), e.end(), 0); }

bool graded_less(const Exponent& a, const Exponent& b) {
  const int da = exponent_degree(a);
  const int db = exponent_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

namespace {

void enumerate(int n, int remaining, int position, Exponent& current, std::vector<Exponent>& out) {
  if (position == n - 1) {
    current[position] = remaining;
    out.push_back(current);
    return;
  }
  for (int p = remaining; p >= 0; --p) {
    current[position] = p;
    enumerate(n, remaining - p, position + 1, current, out);
  }
}

long long binomial(int n, int k) {
  long long result = 1;
  for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

}  // namespace

std::vector<Exponent> degree_monomials(int n, int degree) {
  detail::require(n >= 1, "degree_monomials: n must be positive");
  detail::require(degree >= 0, "degree_monomials: negative degree");
  std::vector<Exponent> out;
  Exponent current(n, 0);
  enumerate(n, degree, 0, current, out);
  return out;
}

MonomialBasis::MonomialBasis(int n, int order, std::vector<Exponent> exponents)
    : n_(n), order_(order), exponents_(std::move(exponents)) {
  detail::require(n >= 1, "monomial basis: state dimension must be positive");
  detail::require(order >= 1, "monomial basis: truncation order must be positive");
  for (const Exponent& e : exponents_) {
    detail::require(static_cast<int>(e.size()) == n, "monomial basis: exponent has wrong length");
    detail::require(std::all_of(e.begin(), e.end(), [](int p) { return p >= 0; }),
                    "monomial basis: negative exponent");
    const int d = exponent_degree(e);
    detail::require(d >= 1 && d <= order, "monomial basis: exponent degree outside 1..order");
  }
  std::sort(exponents_.begin(), exponents_.end(), graded_less);
  for (int i = 0; i < size(); ++i) {
    const bool inserted = index_.emplace(exponents_[i], i).second;
    detail::require(inserted, "monomial basis: duplicate exponent");
    degrees_.push_back(exponent_degree(exponents_[i]));
  }
  detail::require(has_linear_block(), "monomial basis: missing degree-one monomials");

  degree_offsets_.assign(order + 1, size());
  for (int d = order; d >= 1; --d) {
    auto it = std::lower_bound(degrees_.begin(), degrees_.end(), d);
    degree_offsets_[d - 1] = static_cast<int>(it - degrees_.begin());
  }

  long long complete_size = 0;
  for (int d = 1; d <= order; ++d) complete_size += binomial(n + d - 1, d);
  complete_ = complete_size == size();

  products_.resize(size(), size());
  Exponent sum(n);
  for (int a = 0; a < size(); ++a) {
    for (int b = a; b < size(); ++b) {
      for (int r = 0; r < n; ++r) sum[r] = exponents_[a][r] + exponents_[b][r];
      const int idx = degrees_[a] + degrees_[b] > order ? -1 : index_of(sum);
      products_(a, b) = idx;
      products_(b, a) = idx;
    }
  }
}

bool MonomialBasis::has_linear_block() const {
  for (int r = 0; r < n_; ++r) {
    Exponent e(n_, 0);
    e[r] = 1;
    if (index_.find(e) == index_.end()) return false;
  }
  return true;
}

int MonomialBasis::index_of(const Exponent& e) const {
  auto it = index_.find(e);
  return it == index_.end() ? -1 : it->second;
}

MonomialBasis monomial_basis(int n, int order) {
  detail::require(n >= 1, "monomial_basis: n must be positive");
  detail::require(order >= 1, "monomial_basis: N must be positive");
  std::vector<Exponent> all;
  for (int d = 1; d <= order; ++d) {
    auto block = degree_monomials(n, d);
    all.insert(all.end(), block.begin(), block.end());
  }
  return MonomialBasis(n, order, std::move(all));
}

MonomialBasis restricted_basis(int n, int order, const std::vector<Exponent>& higher) {
  std::vector<Exponent> all = degree_monomials(n, 1);
  for (const Exponent& e : higher) {
    detail::require(static_cast<int>(e.size()) == n, "restricted_basis: exponent has wrong length");
    detail::require(exponent_degree(e) >= 2, "restricted_basis: listed monomials must have degree >= 2");
    all.push_back(e);
  }
  return MonomialBasis(n, order, std::move(all));
}

}  // namespace carleman
