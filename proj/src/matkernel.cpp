#include "oqnet/matkernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "oqnet/errors.hpp"

namespace oqnet {

namespace {

std::string shape(const Mat& a) {
  std::ostringstream os;
  os << a.rows() << "x" << a.cols();
  return os.str();
}

void require_square(const Mat& a, const char* op) {
  if (!a.is_square()) {
    throw DimensionError(std::string(op) + ": expected a square matrix, got " + shape(a));
  }
}

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Mat: " + std::to_string(data_.size()) + " entries for shape " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!all_finite()) throw DomainError("Mat: non-finite entry");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Mat: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw DomainError("Mat: non-finite entry");
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::column(std::span<const double> values) {
  return Mat(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw DimensionError("Mat::block: window exceeds " + shape(*this));
  }
  Mat out(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    std::copy_n(&data_[(r0 + i) * cols_ + c0], nc, &out.data_[i * nc]);
  }
  return out;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat& b) {
  if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) {
    throw DimensionError("Mat::set_block: " + shape(b) + " does not fit in " + shape(*this));
  }
  for (std::size_t i = 0; i < b.rows_; ++i) {
    std::copy_n(&b.data_[i * b.cols_], b.cols_, &data_[(r0 + i) * cols_ + c0]);
  }
}

void Mat::add_block(std::size_t r0, std::size_t c0, const Mat& b, double scale) {
  if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) {
    throw DimensionError("Mat::add_block: " + shape(b) + " does not fit in " + shape(*this));
  }
  for (std::size_t i = 0; i < b.rows_; ++i) {
    for (std::size_t j = 0; j < b.cols_; ++j) {
      data_[(r0 + i) * cols_ + c0 + j] += scale * b.data_[i * b.cols_ + j];
    }
  }
}

Mat& Mat::operator+=(const Mat& b) {
  require_same_shape(*this, b, "operator+");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += b.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& b) {
  require_same_shape(*this, b, "operator-");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= b.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

bool Mat::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator-(Mat a) { return a *= -1.0; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("operator*: inner dimensions differ, " + shape(a) + " * " + shape(b));
  }
  Mat c(a.rows(), b.cols());
  const std::size_t n = a.cols();
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = &c(i, 0);
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = &b.data()[k * m];
      for (std::size_t j = 0; j < m; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double trace(const Mat& a) {
  require_square(a, "trace");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

double inner(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "inner");
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

double frobenius_norm(const Mat& a) {
  // Scaled accumulation keeps tiny and huge entries from under/overflowing.
  double scale = 0.0;
  double ssq = 1.0;
  for (double x : a.data()) {
    if (x == 0.0) continue;
    const double ax = std::abs(x);
    if (scale < ax) {
      ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
      scale = ax;
    } else {
      ssq += (ax / scale) * (ax / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

double max_abs(const Mat& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

double norm1(const Mat& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

Mat sym(const Mat& m) {
  require_square(m, "sym");
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
  return out;
}

Mat antisym(const Mat& m) {
  require_square(m, "antisym");
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) - m(j, i));
  return out;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          out(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return out;
}

Mat vec(const Mat& m) {
  Mat v(m.size(), 1);
  std::size_t idx = 0;
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) v(idx++, 0) = m(i, j);
  return v;
}

Mat unvec(const Mat& v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) {
    throw DimensionError("unvec: " + std::to_string(v.size()) + " entries cannot fill " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Mat m(rows, cols);
  std::size_t idx = 0;
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = v.data()[idx++];
  return m;
}

Mat commutation_matrix(std::size_t p, std::size_t q) {
  // vec(N) index of N(i,j) is i + j p; vec(N^T) index of the same entry is j + i q.
  Mat t(p * q, p * q);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) t(j + i * q, i + j * p) = 1.0;
  return t;
}

Mat symplectic_unit() { return Mat{{0.0, 1.0}, {-1.0, 0.0}}; }

Mat symplectic_block_diag(std::size_t order, double scale) {
  if (order % 2 != 0) throw DimensionError("symplectic_block_diag: odd order");
  Mat out(order, order);
  for (std::size_t b = 0; b < order; b += 2) {
    out(b, b + 1) = scale;
    out(b + 1, b) = -scale;
  }
  return out;
}

Mat hermitian_embedding(const Mat& re, const Mat& im) {
  require_square(re, "hermitian_embedding");
  require_same_shape(re, im, "hermitian_embedding");
  const std::size_t n = re.rows();
  Mat h(2 * n, 2 * n);
  h.set_block(0, 0, re);
  h.set_block(0, n, -im);
  h.set_block(n, 0, im);
  h.set_block(n, n, re);
  return h;
}

// ---------------------------------------------------------------------------
// Matrix exponential

namespace {

constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// 1-norm thresholds below which the degree-m approximant is accurate to unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
void pade_low(const Mat& a, const std::array<double, N>& b, Mat& u, Mat& v) {
  const std::size_t n = a.rows();
  const Mat a2 = a * a;
  Mat odd = b[1] * Mat::identity(n);
  v = b[0] * Mat::identity(n);
  Mat power = Mat::identity(n);
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    v += b[k] * power;
    odd += b[k + 1] * power;
  }
  u = a * odd;
}

void pade13(const Mat& a, Mat& u, Mat& v) {
  const auto& b = kPade13;
  const std::size_t n = a.rows();
  const Mat id = Mat::identity(n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat inner_u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                      b[3] * a2 + b[1] * id;
  u = a * inner_u;
  v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace

Mat expm(const Mat& a) {
  require_square(a, "expm");
  const std::size_t n = a.rows();
  if (n == 0) return Mat();
  const double anorm = norm1(a);
  Mat u, v;
  int squarings = 0;
  if (anorm <= kTheta3) {
    pade_low(a, kPade3, u, v);
  } else if (anorm <= kTheta5) {
    pade_low(a, kPade5, u, v);
  } else if (anorm <= kTheta7) {
    pade_low(a, kPade7, u, v);
  } else if (anorm <= kTheta9) {
    pade_low(a, kPade9, u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(anorm / kTheta13))));
    pade13(std::ldexp(1.0, -squarings) * a, u, v);
  }
  const LuFactorization lu(v - u);
  Mat r = lu.solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

// ---------------------------------------------------------------------------
// Gramian

Mat gramian(const Mat& a, const Mat& q, double t, GramianMethod method, std::size_t ode_steps) {
  require_square(a, "gramian");
  require_square(q, "gramian");
  if (q.rows() != a.rows()) {
    throw DimensionError("gramian: A is " + shape(a) + " but Q is " + shape(q));
  }
  if (!(t >= 0.0)) throw DomainError("gramian: negative horizon");
  const std::size_t n = a.rows();
  if (t == 0.0 || n == 0) return Mat(n, n);

  if (method == GramianMethod::vanloan) {
    Mat c(2 * n, 2 * n);
    c.set_block(0, 0, t * a);
    c.set_block(0, n, t * q);
    c.set_block(n, n, -t * transpose(a));
    const Mat e = expm(c);
    return e.block(0, n, n, n) * transpose(e.block(0, 0, n, n));
  }

  std::size_t steps = ode_steps;
  if (steps == 0) {
    const double lam = 2.0 * frobenius_norm(a);
    steps = std::max<std::size_t>(100, static_cast<std::size_t>(std::ceil(t * lam / 0.01)));
  }
  const double h = t / static_cast<double>(steps);
  const Mat at = transpose(a);
  auto rhs = [&](const Mat& x) { return a * x + x * at + q; };
  Mat x(n, n);
  for (std::size_t s = 0; s < steps; ++s) {
    const Mat k1 = rhs(x);
    const Mat k2 = rhs(x + (0.5 * h) * k1);
    const Mat k3 = rhs(x + (0.5 * h) * k2);
    const Mat k4 = rhs(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// ---------------------------------------------------------------------------
// SVD and nullspaces

Svd svd(const Mat& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Mat w = a;
  Mat v = Mat::identity(n);
  constexpr double kEps = 1e-15;
  constexpr int kMaxSweeps = 80;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += w(i, p) * w(i, p);
          beta += w(i, q) * w(i, q);
          gamma += w(i, p) * w(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double tn = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, tn);
        const double s = c * tn;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  Svd out{Mat(m, n), std::vector<double>(n), Mat(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
    if (norms[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(i, j) / norms[j];
    }
  }
  return out;
}

std::size_t numerical_rank(const Mat& a, double tol) {
  if (a.empty()) return 0;
  const Svd d = svd(a.cols() <= a.rows() ? a : transpose(a));
  const double cutoff = tol * d.sigma.front();
  if (d.sigma.front() == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(d.sigma.begin(), d.sigma.end(), [&](double s) { return s > cutoff; }));
}

Mat left_nullspace(const Mat& b, double tol) {
  const std::size_t n = b.rows();
  if (n == 0) return Mat(0, 0);
  if (b.cols() == 0) return Mat::identity(n);
  // Right singular vectors of B^T with vanishing singular values span the left nullspace of B.
  const Svd d = svd(transpose(b));
  const double smax = d.sigma.front();
  const double cutoff = tol * smax;
  std::vector<std::size_t> null_cols;
  for (std::size_t k = 0; k < n; ++k) {
    if (smax == 0.0 || d.sigma[k] <= cutoff) null_cols.push_back(k);
  }
  Mat f(null_cols.size(), n);
  for (std::size_t r = 0; r < null_cols.size(); ++r)
    for (std::size_t i = 0; i < n; ++i) f(r, i) = d.v(i, null_cols[r]);
  return f;
}

// ---------------------------------------------------------------------------
// LU

LuFactorization::LuFactorization(const Mat& a) : lu_(a), perm_(a.rows()) {
  require_square(a, "LuFactorization");
  anorm1_ = norm1(a);
  const std::size_t n = a.rows();
  std::iota(perm_.begin(), perm_.end(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        piv = i;
      }
    }
    if (best == 0.0) {
      exactly_singular_ = true;
      continue;
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
      std::swap(perm_[k], perm_[piv]);
    }
    const double pivot = lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu_(i, k) / pivot;
      lu_(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
}

Mat LuFactorization::solve(const Mat& b) const {
  const std::size_t n = order();
  if (b.rows() != n) throw DimensionError("LuFactorization::solve: rhs row count mismatch");
  if (exactly_singular_) throw SingularMatrixError("LuFactorization::solve: singular matrix", 0.0);
  Mat x(n, b.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < b.cols(); ++c) x(i, c) = b(perm_[i], c);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= lu_(i, k) * x(k, c);
      x(i, c) = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= lu_(i, k) * x(k, c);
      x(i, c) = s / lu_(i, i);
    }
  }
  return x;
}

Mat LuFactorization::solve_transpose(const Mat& b) const {
  // A^T x = b with P A = L U  =>  U^T L^T (P x) = b.
  const std::size_t n = order();
  if (b.rows() != n) throw DimensionError("LuFactorization::solve_transpose: rhs mismatch");
  if (exactly_singular_) {
    throw SingularMatrixError("LuFactorization::solve_transpose: singular matrix", 0.0);
  }
  Mat y = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = y(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= lu_(k, i) * y(k, c);
      y(i, c) = s / lu_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = y(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= lu_(k, i) * y(k, c);
      y(i, c) = s;
    }
  }
  Mat x(n, b.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < b.cols(); ++c) x(perm_[i], c) = y(i, c);
  return x;
}

double LuFactorization::rcond() const {
  const std::size_t n = order();
  if (n == 0) return 1.0;
  if (exactly_singular_ || anorm1_ == 0.0) return 0.0;
  Mat x(n, 1, 1.0 / static_cast<double>(n));
  double estimate = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    const Mat y = solve(x);
    estimate = 0.0;
    for (double yi : y.data()) estimate += std::abs(yi);
    Mat xi(n, 1);
    for (std::size_t i = 0; i < n; ++i) xi(i, 0) = y(i, 0) >= 0.0 ? 1.0 : -1.0;
    const Mat z = solve_transpose(xi);
    std::size_t jmax = 0;
    double zmax = 0.0;
    double ztx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ztx += z(i, 0) * x(i, 0);
      if (std::abs(z(i, 0)) > zmax) {
        zmax = std::abs(z(i, 0));
        jmax = i;
      }
    }
    if (zmax <= ztx) break;
    x = Mat(n, 1);
    x(jmax, 0) = 1.0;
  }
  if (!std::isfinite(estimate) || estimate == 0.0) return 0.0;
  return 1.0 / (anorm1_ * estimate);
}

LinearSolution solve_linear(const Mat& a, const Mat& b) {
  require_square(a, "solve_linear");
  if (b.rows() != a.rows()) {
    throw DimensionError("solve_linear: A is " + shape(a) + " but b is " + shape(b));
  }
  const LuFactorization lu(a);
  const double rc = lu.rcond();
  if (rc < kSingularRcond) {
    std::ostringstream os;
    os << "solve_linear: numerically singular matrix (rcond " << rc << ")";
    throw SingularMatrixError(os.str(), rc);
  }
  return {lu.solve(b), rc};
}

LeastSquaresSolution lstsq_min_norm(const Mat& a, const Mat& b, double tol) {
  if (b.rows() != a.rows()) {
    throw DimensionError("lstsq_min_norm: A is " + shape(a) + " but b is " + shape(b));
  }
  const Svd d = svd(a);
  const std::size_t n = a.cols();
  LeastSquaresSolution out{Mat(n, b.cols()), 0};
  if (n == 0 || d.sigma.front() == 0.0) return out;
  const double cutoff = tol * d.sigma.front();
  const Mat utb = transpose(d.u) * b;
  for (std::size_t k = 0; k < n; ++k) {
    if (d.sigma[k] <= cutoff) break;
    ++out.rank;
    for (std::size_t c = 0; c < b.cols(); ++c) {
      const double coef = utb(k, c) / d.sigma[k];
      for (std::size_t i = 0; i < n; ++i) out.x(i, c) += coef * d.v(i, k);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem

SymmetricEigen symmetric_eigen(const Mat& s) {
  require_square(s, "symmetric_eigen");
  const double scale = frobenius_norm(s);
  if (frobenius_norm(s - transpose(s)) > 1e-12 * scale) {
    throw DomainError("symmetric_eigen: input is not symmetric");
  }
  const std::size_t n = s.rows();
  Mat a = sym(s);
  Mat v = Mat::identity(n);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * scale * scale || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{std::vector<double>(n), Mat(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double min_symmetric_eigenvalue(const Mat& s) {
  const SymmetricEigen e = symmetric_eigen(s);
  if (e.values.empty()) throw DimensionError("min_symmetric_eigenvalue: empty matrix");
  return e.values.front();
}

}  // namespace oqnet
