#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace koopman {

using MultiIndex = std::vector<int>;

struct UnsupportedDictionaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ordered monomial observable basis Psi: R^d -> R^M.
///
/// Ordering contract: the coordinate multi-indices e_1..e_d come first (when
/// not excluded); the remaining entries follow graded lexicographic order, so
/// with no exclusions the constant term sits at position d (0-based).
///
/// For state recovery each coordinate j has an injectivity witness: the
/// coordinate entry itself, or else the lowest odd pure power x_j^(2k+1)
/// present in the basis (odd powers are globally invertible over R).
class Dictionary {
 public:
  Dictionary() = default;  // empty; fill via assignment before use
  Dictionary(int dim, int max_degree, std::vector<MultiIndex> excluded = {});

  /// Rebuild from an explicit basis (deserialization path); the basis order is
  /// preserved bit-exactly.
  static Dictionary from_basis(int dim, int max_degree, std::vector<MultiIndex> excluded,
                               std::vector<MultiIndex> basis);

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }
  int size() const { return static_cast<int>(basis_.size()); }  // M
  const std::vector<MultiIndex>& basis() const { return basis_; }
  const std::vector<MultiIndex>& excluded() const { return excluded_; }

  /// z_k = prod_j x_j^alpha_kj.
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;

  /// M x d matrix with entry (k, j) = d Psi_k / d x_j, analytic.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

  /// Recovers x from z = Psi(x) through the witness entries. Exact coordinate
  /// readout when the coordinate functions are present; otherwise the real odd
  /// root of the designated pure-power witness.
  Eigen::VectorXd invert_on_manifold(const Eigen::VectorXd& z) const;

  bool has_witnesses() const { return has_witnesses_; }
  /// Basis position of the witness for coordinate j.
  int witness_index(int j) const;
  /// Exponent of the witness monomial (1 for a plain coordinate).
  int witness_power(int j) const;

  bool operator==(const Dictionary& other) const {
    return dim_ == other.dim_ && max_degree_ == other.max_degree_ && basis_ == other.basis_;
  }

 private:
  void find_witnesses();

  int dim_ = 0;
  int max_degree_ = 0;
  std::vector<MultiIndex> excluded_;
  std::vector<MultiIndex> basis_;
  bool has_witnesses_ = false;
  std::vector<int> witness_index_;
  std::vector<int> witness_power_;
};

}  // namespace koopman
