#include "koopman/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace koopman {

namespace {

int degree(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

bool is_coordinate(const MultiIndex& a, int j) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != (static_cast<int>(i) == j ? 1 : 0)) return false;
  return true;
}

void enumerate_multi_indices(int dim, int max_degree, std::vector<MultiIndex>& out) {
  MultiIndex current(static_cast<std::size_t>(dim), 0);
  // Recursive enumeration of all alpha with |alpha| <= max_degree.
  auto recurse = [&](auto&& self, int axis, int remaining) -> void {
    if (axis == dim) {
      out.push_back(current);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      current[static_cast<std::size_t>(axis)] = e;
      self(self, axis + 1, remaining - e);
    }
    current[static_cast<std::size_t>(axis)] = 0;
  };
  recurse(recurse, 0, max_degree);
}

double int_pow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

Dictionary::Dictionary(int dim, int max_degree, std::vector<MultiIndex> excluded) {
  if (dim < 1) throw std::invalid_argument("Dictionary: dim must be >= 1");
  if (max_degree < 1) throw std::invalid_argument("Dictionary: max_degree must be >= 1");
  dim_ = dim;
  max_degree_ = max_degree;
  excluded_ = std::move(excluded);
  for (const auto& e : excluded_) {
    if (static_cast<int>(e.size()) != dim || degree(e) > max_degree || degree(e) < 0)
      throw std::invalid_argument("Dictionary: excluded multi-index outside the full basis");
  }
  std::set<MultiIndex> excl(excluded_.begin(), excluded_.end());

  std::vector<MultiIndex> all;
  enumerate_multi_indices(dim, max_degree, all);

  std::vector<MultiIndex> coords, rest;
  for (auto& a : all) {
    if (excl.count(a)) continue;
    bool coord = false;
    for (int j = 0; j < dim; ++j)
      if (is_coordinate(a, j)) coord = true;
    (coord ? coords : rest).push_back(std::move(a));
  }
  // Coordinates in axis order e_1..e_d.
  std::sort(coords.begin(), coords.end(), [](const MultiIndex& a, const MultiIndex& b) {
    return a > b;  // e_1 = (1,0,..) sorts before e_2 = (0,1,..)
  });
  // Graded lex: by total degree, then descending exponent tuple within a degree.
  std::sort(rest.begin(), rest.end(), [](const MultiIndex& a, const MultiIndex& b) {
    int da = degree(a), db = degree(b);
    if (da != db) return da < db;
    return a > b;
  });
  basis_ = std::move(coords);
  basis_.insert(basis_.end(), rest.begin(), rest.end());
  find_witnesses();
}

Dictionary Dictionary::from_basis(int dim, int max_degree, std::vector<MultiIndex> excluded,
                                  std::vector<MultiIndex> basis) {
  Dictionary fresh(dim, max_degree, excluded);
  if (fresh.basis_ != basis) {
    // Accept any stored order, as long as it is the same set of monomials.
    std::set<MultiIndex> a(fresh.basis_.begin(), fresh.basis_.end());
    std::set<MultiIndex> b(basis.begin(), basis.end());
    if (a != b) throw std::invalid_argument("Dictionary::from_basis: basis set mismatch");
    fresh.basis_ = std::move(basis);
    fresh.find_witnesses();
  }
  return fresh;
}

void Dictionary::find_witnesses() {
  witness_index_.assign(static_cast<std::size_t>(dim_), -1);
  witness_power_.assign(static_cast<std::size_t>(dim_), 0);
  for (int j = 0; j < dim_; ++j) {
    int best_power = 0, best_index = -1;
    for (int k = 0; k < size(); ++k) {
      const MultiIndex& a = basis_[static_cast<std::size_t>(k)];
      // Pure power of x_j with odd exponent.
      int p = a[static_cast<std::size_t>(j)];
      if (p < 1 || p % 2 == 0 || degree(a) != p) continue;
      if (best_index < 0 || p < best_power) {
        best_power = p;
        best_index = k;
      }
    }
    witness_index_[static_cast<std::size_t>(j)] = best_index;
    witness_power_[static_cast<std::size_t>(j)] = best_power;
  }
  has_witnesses_ = std::all_of(witness_index_.begin(), witness_index_.end(),
                               [](int i) { return i >= 0; });
}

int Dictionary::witness_index(int j) const {
  int idx = witness_index_.at(static_cast<std::size_t>(j));
  if (idx < 0)
    throw UnsupportedDictionaryError("no injectivity witness for coordinate " + std::to_string(j));
  return idx;
}

int Dictionary::witness_power(int j) const {
  witness_index(j);
  return witness_power_.at(static_cast<std::size_t>(j));
}

Eigen::VectorXd Dictionary::lift(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("Dictionary::lift: dimension mismatch");
  Eigen::VectorXd z(size());
  for (int k = 0; k < size(); ++k) {
    const MultiIndex& a = basis_[static_cast<std::size_t>(k)];
    double v = 1.0;
    for (int j = 0; j < dim_; ++j) v *= int_pow(x[j], a[static_cast<std::size_t>(j)]);
    z[k] = v;
  }
  return z;
}

Eigen::MatrixXd Dictionary::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("Dictionary::jacobian: dimension mismatch");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(size(), dim_);
  for (int k = 0; k < size(); ++k) {
    const MultiIndex& a = basis_[static_cast<std::size_t>(k)];
    for (int j = 0; j < dim_; ++j) {
      int e = a[static_cast<std::size_t>(j)];
      if (e == 0) continue;
      double v = static_cast<double>(e) * int_pow(x[j], e - 1);
      for (int l = 0; l < dim_; ++l) {
        if (l == j) continue;
        v *= int_pow(x[l], a[static_cast<std::size_t>(l)]);
      }
      J(k, j) = v;
    }
  }
  return J;
}

Eigen::VectorXd Dictionary::invert_on_manifold(const Eigen::VectorXd& z) const {
  if (z.size() != size())
    throw std::invalid_argument("Dictionary::invert_on_manifold: dimension mismatch");
  Eigen::VectorXd x(dim_);
  for (int j = 0; j < dim_; ++j) {
    int idx = witness_index(j);
    int p = witness_power_[static_cast<std::size_t>(j)];
    double v = z[idx];
    x[j] = (p == 1) ? v : std::copysign(std::pow(std::abs(v), 1.0 / static_cast<double>(p)), v);
  }
  return x;
}

}  // namespace koopman
