#pragma once

// Dense real linear algebra used throughout the library. Matrices are small
// (order up to a few hundred), stored row-major, and passed by value.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace oqnet {

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of row-major `entries`; throws DimensionError on a size
  /// mismatch and DomainError on NaN/Inf.
  Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }
  static Mat column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Mat& b);
  void add_block(std::size_t r0, std::size_t c0, const Mat& b, double scale = 1.0);

  Mat& operator+=(const Mat& b);
  Mat& operator-=(const Mat& b);
  Mat& operator*=(double s) noexcept;

  bool all_finite() const noexcept;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator-(Mat a);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);

Mat transpose(const Mat& a);
double trace(const Mat& a);
/// Frobenius inner product sum_ij a_ij b_ij.
double inner(const Mat& a, const Mat& b);
double frobenius_norm(const Mat& a);
double max_abs(const Mat& a);
/// Maximum absolute column sum.
double norm1(const Mat& a);

Mat sym(const Mat& m);
Mat antisym(const Mat& m);
Mat kron(const Mat& a, const Mat& b);
/// Column stacking.
Mat vec(const Mat& m);
/// Inverse of vec for a target shape.
Mat unvec(const Mat& v, std::size_t rows, std::size_t cols);
/// Permutation T with T vec(N) = vec(N^T) for every p x q matrix N.
Mat commutation_matrix(std::size_t p, std::size_t q);

/// The 2x2 generator [[0, 1], [-1, 0]].
Mat symplectic_unit();
/// I_{k} (x) [[0, 1], [-1, 0]] scaled by `scale`; `order` must be even.
Mat symplectic_block_diag(std::size_t order, double scale = 1.0);
/// [[re, -im], [im, re]]: real symmetric form of the Hermitian matrix re + i im.
Mat hermitian_embedding(const Mat& re, const Mat& im);

/// Scaling and squaring with a degree 3..13 Pade core.
Mat expm(const Mat& a);

enum class GramianMethod { vanloan, ode };

/// int_0^t e^{sA} Q e^{sA^T} ds. `ode_steps` = 0 picks the RK4 step count from
/// ||A||_F and t.
Mat gramian(const Mat& a, const Mat& q, double t, GramianMethod method = GramianMethod::vanloan,
            std::size_t ode_steps = 0);

struct Svd {
  Mat u;                      // rows x cols, columns normalized where sigma > 0
  std::vector<double> sigma;  // length cols, descending
  Mat v;                      // cols x cols, orthogonal
};

/// One-sided Jacobi SVD. Produces a full orthogonal V even when cols > rows.
Svd svd(const Mat& a);

inline constexpr double kDefaultRankTol = 1e-10;

std::size_t numerical_rank(const Mat& a, double tol = kDefaultRankTol);

/// Rows form an orthonormal basis of { v : v B = 0 }.
Mat left_nullspace(const Mat& b, double tol = kDefaultRankTol);

class LuFactorization {
 public:
  explicit LuFactorization(const Mat& a);

  std::size_t order() const noexcept { return lu_.rows(); }
  /// Solves A X = B for a block of right-hand sides.
  Mat solve(const Mat& b) const;
  Mat solve_transpose(const Mat& b) const;
  /// Reciprocal 1-norm condition estimate (Hager).
  double rcond() const;

 private:
  Mat lu_;
  std::vector<std::size_t> perm_;
  double anorm1_ = 0.0;
  bool exactly_singular_ = false;
};

struct LinearSolution {
  Mat x;
  double rcond = 0.0;
};

inline constexpr double kSingularRcond = 1e-14;

/// Pivoted LU solve; throws SingularMatrixError when rcond < 1e-14.
LinearSolution solve_linear(const Mat& a, const Mat& b);

struct LeastSquaresSolution {
  Mat x;
  std::size_t rank = 0;
};

/// Minimum-norm least squares via the SVD.
LeastSquaresSolution lstsq_min_norm(const Mat& a, const Mat& b, double tol = kDefaultRankTol);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Mat vectors;                 // column i pairs with values[i]
};

/// Cyclic Jacobi. Throws DomainError if `s` is not symmetric to 1e-12 ||s||.
SymmetricEigen symmetric_eigen(const Mat& s);
double min_symmetric_eigenvalue(const Mat& s);

}  // namespace oqnet
