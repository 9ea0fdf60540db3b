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

#include "carleman/quad_basis.hpp"

#include <algorithm>
#include <map>

namespace carleman {

QuadBasis::QuadBasis(MonomialBasis base) : base_(std::move(base)) {
  const int dim = base_.size();
  const int n = base_.state_dim();
  std::map<Exponent, std::pair<int, int>> products;
  Exponent sum(n);
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      for (int r = 0; r < n; ++r) sum[r] = base_.exponent(a)[r] + base_.exponent(b)[r];
      products.emplace(sum, std::make_pair(a, b));
    }
  }
  for (const auto& [exponent, pair] : products) extended_.push_back(exponent);
  std::sort(extended_.begin(), extended_.end(), graded_less);

  std::map<Exponent, int> index;
  for (int e = 0; e < size(); ++e) {
    index.emplace(extended_[e], e);
    representatives_.push_back(products.at(extended_[e]));
  }
  pairs_.resize(dim, dim);
  counts_.assign(size(), 0);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      for (int r = 0; r < n; ++r) sum[r] = base_.exponent(a)[r] + base_.exponent(b)[r];
      const int e = index.at(sum);
      pairs_(a, b) = e;
      ++counts_[e];
    }
  }
}

}  // namespace carleman
