#pragma once

// Finite sub-manuals of the spin-one manual. Outcomes are projections on C^3,
// states are density operators acting through the trace rule.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "opstat/error.hpp"
#include "opstat/manual.hpp"

namespace opstat::spin {

using cplx = std::complex<double>;

inline constexpr double kStructureTolerance = 1e-10;  // hermiticity, idempotence, orthogonality
inline constexpr double kIdentityTolerance = 1e-9;    // projection equality, basis checks
inline constexpr double kPositivityTolerance = 1e-8;  // minimum eigenvalue of a state

struct CVec3 {
  std::array<cplx, 3> c{};

  cplx& operator[](std::size_t i) { return c[i]; }
  const cplx& operator[](std::size_t i) const { return c[i]; }

  double norm() const { return std::sqrt(std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2])); }
  CVec3 normalized() const {
    const double n = norm();
    return {{c[0] / n, c[1] / n, c[2] / n}};
  }
};

/// <a, b>, conjugate-linear in the first argument.
inline cplx inner(const CVec3& a, const CVec3& b) {
  return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1] + std::conj(a[2]) * b[2];
}

/// Row-major complex 3x3 matrix.
struct Mat3 {
  std::array<cplx, 9> a{};

  cplx& operator()(std::size_t r, std::size_t c) { return a[3 * r + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return a[3 * r + c]; }

  static Mat3 identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
  }
  static Mat3 diagonal(double x, double y, double z) {
    Mat3 m;
    m(0, 0) = x;
    m(1, 1) = y;
    m(2, 2) = z;
    return m;
  }
  /// v w^dagger
  static Mat3 outer(const CVec3& v, const CVec3& w) {
    Mat3 m;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) m(r, c) = v[r] * std::conj(w[c]);
    return m;
  }
  /// Matrix whose columns are the given vectors.
  static Mat3 from_columns(const std::array<CVec3, 3>& cols) {
    Mat3 m;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) m(r, c) = cols[c][r];
    return m;
  }

  Mat3 adjoint() const {
    Mat3 m;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) m(r, c) = std::conj((*this)(c, r));
    return m;
  }
  cplx trace() const { return a[0] + a[4] + a[8]; }
  cplx determinant() const {
    const Mat3& m = *this;
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  }
  double max_abs() const {
    double out = 0.0;
    for (const auto& z : a) out = std::max(out, std::abs(z));
    return out;
  }

  Mat3& operator+=(const Mat3& o) {
    for (std::size_t i = 0; i < 9; ++i) a[i] += o.a[i];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (std::size_t i = 0; i < 9; ++i) a[i] -= o.a[i];
    return *this;
  }
  Mat3& operator*=(cplx s) {
    for (auto& z : a) z *= s;
    return *this;
  }
  friend Mat3 operator+(Mat3 x, const Mat3& y) { return x += y; }
  friend Mat3 operator-(Mat3 x, const Mat3& y) { return x -= y; }
  friend Mat3 operator*(Mat3 x, cplx s) { return x *= s; }
  friend Mat3 operator*(cplx s, Mat3 x) { return x *= s; }
  friend Mat3 operator*(const Mat3& x, const Mat3& y) {
    Mat3 m;
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c)
        m(r, c) = x(r, 0) * y(0, c) + x(r, 1) * y(1, c) + x(r, 2) * y(2, c);
    return m;
  }
  friend CVec3 operator*(const Mat3& x, const CVec3& v) {
    CVec3 out;
    for (std::size_t r = 0; r < 3; ++r) out[r] = x(r, 0) * v[0] + x(r, 1) * v[1] + x(r, 2) * v[2];
    return out;
  }
};

inline double max_abs_diff(const Mat3& x, const Mat3& y) { return (x - y).max_abs(); }

inline bool is_hermitian(const Mat3& m, double tol = kStructureTolerance) {
  return max_abs_diff(m, m.adjoint()) <= tol;
}

namespace detail {

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix (row-major).
/// On return `a` holds the eigenvalues on its diagonal and `v` the eigenvectors
/// as columns.
template <std::size_t N>
void jacobi_eigen(std::array<double, N * N>& a, std::array<double, N * N>& v) {
  v.fill(0.0);
  for (std::size_t i = 0; i < N; ++i) v[i * N + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      diag += a[p * N + p] * a[p * N + p];
      for (std::size_t q = p + 1; q < N; ++q) off += a[p * N + q] * a[p * N + q];
    }
    if (off <= 1e-36 * diag || off < 1e-300) return;
    for (std::size_t p = 0; p < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        const double apq = a[p * N + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * N + q] - a[p * N + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = a[k * N + p], akq = a[k * N + q];
          a[k * N + p] = c * akp - s * akq;
          a[k * N + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = a[p * N + k], aqk = a[q * N + k];
          a[p * N + k] = c * apk - s * aqk;
          a[q * N + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double vkp = v[k * N + p], vkq = v[k * N + q];
          v[k * N + p] = c * vkp - s * vkq;
          v[k * N + q] = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace detail

/// Eigenvalues of a Hermitian matrix in ascending order. Jacobi rotations on
/// the real symmetric embedding [[Re M, -Im M], [Im M, Re M]], whose spectrum
/// is that of M with every value doubled; accurate to a few ulps of the
/// largest entry, repeated eigenvalues included.
inline std::array<double, 3> hermitian_eigenvalues(const Mat3& m) {
  std::array<double, 36> a{}, v{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const cplx z = 0.5 * (m(i, j) + std::conj(m(j, i)));
      a[i * 6 + j] = a[(i + 3) * 6 + j + 3] = z.real();
      a[(i + 3) * 6 + j] = z.imag();
      a[i * 6 + j + 3] = -z.imag();
    }
  detail::jacobi_eigen<6>(a, v);
  std::array<double, 6> diag{};
  for (std::size_t k = 0; k < 6; ++k) diag[k] = a[k * 6 + k];
  std::sort(diag.begin(), diag.end());
  return {0.5 * (diag[0] + diag[1]), 0.5 * (diag[2] + diag[3]), 0.5 * (diag[4] + diag[5])};
}

/// Hermitian idempotent on C^3.
class Projection {
 public:
  /// Rank-1 projection onto span{v}. Throws ZeroVector.
  static Projection onto(const CVec3& v) {
    if (v.norm() <= kIdentityTolerance) throw Error(Errc::ZeroVector, "cannot project onto a zero vector");
    const CVec3 u = v.normalized();
    return Projection(Mat3::outer(u, u), 1);
  }

  /// Throws NotHermitian when `m` is not a Hermitian idempotent within 1e-10.
  static Projection from_matrix(const Mat3& m) {
    if (!is_hermitian(m)) throw Error(Errc::NotHermitian, "projection matrix is not Hermitian");
    if (max_abs_diff(m * m, m) > kStructureTolerance)
      throw Error(Errc::NotHermitian, "projection matrix is not idempotent");
    const double tr = m.trace().real();
    const int rank = static_cast<int>(std::lround(tr));
    if (rank < 1 || rank > 3) throw Error(Errc::NotHermitian, "projection rank must be 1, 2 or 3");
    return Projection(m, rank);
  }

  const Mat3& matrix() const noexcept { return matrix_; }
  int rank() const noexcept { return rank_; }

  /// Entrywise comparison; generating-vector phases never enter.
  bool same_as(const Projection& o, double tol = kIdentityTolerance) const {
    return rank_ == o.rank_ && max_abs_diff(matrix_, o.matrix_) <= tol;
  }

 private:
  Projection(Mat3 m, int rank) : matrix_(m), rank_(rank) {}
  Mat3 matrix_;
  int rank_;
};

/// Mutually orthogonal projections summing to the identity.
class Frame {
 public:
  /// Throws NotOrthogonal when the projections are not a resolution of identity.
  explicit Frame(std::vector<Projection> projections) : projections_(std::move(projections)) {
    int rank = 0;
    Mat3 sum;
    for (std::size_t i = 0; i < projections_.size(); ++i) {
      rank += projections_[i].rank();
      sum += projections_[i].matrix();
      for (std::size_t j = i + 1; j < projections_.size(); ++j)
        if ((projections_[i].matrix() * projections_[j].matrix()).max_abs() > kStructureTolerance)
          throw Error(Errc::NotOrthogonal, "projections " + std::to_string(i) + " and " + std::to_string(j));
    }
    if (rank != 3 || max_abs_diff(sum, Mat3::identity()) > kStructureTolerance)
      throw Error(Errc::NotOrthogonal, "projections do not sum to the identity");
  }

  const std::vector<Projection>& projections() const noexcept { return projections_; }
  std::size_t size() const noexcept { return projections_.size(); }
  const Projection& operator[](std::size_t i) const { return projections_.at(i); }

  std::optional<std::size_t> find(const Projection& p) const {
    for (std::size_t i = 0; i < projections_.size(); ++i)
      if (projections_[i].same_as(p)) return i;
    return std::nullopt;
  }

 private:
  std::vector<Projection> projections_;
};

/// Trace-one positive semidefinite Hermitian operator.
class DensityOperator {
 public:
  /// Throws NotHermitian, BadTrace or NotPositive.
  explicit DensityOperator(const Mat3& m) : matrix_(m) {
    if (!is_hermitian(m)) throw Error(Errc::NotHermitian, "density matrix is not Hermitian");
    if (std::abs(m.trace().real() - 1.0) > kStructureTolerance)
      throw Error(Errc::BadTrace, "trace " + std::to_string(m.trace().real()));
    if (hermitian_eigenvalues(m)[0] < -kPositivityTolerance)
      throw Error(Errc::NotPositive, "negative eigenvalue " + std::to_string(hermitian_eigenvalues(m)[0]));
  }

  static DensityOperator pure(const CVec3& v) {
    const CVec3 u = v.normalized();
    return DensityOperator(Mat3::outer(u, u));
  }
  static DensityOperator maximally_mixed() { return DensityOperator(Mat3::identity() * (1.0 / 3.0)); }

  const Mat3& matrix() const noexcept { return matrix_; }

 private:
  Mat3 matrix_;
};

/// Normalizes the vectors and returns the frame of their rank-1 projections.
/// Throws ZeroVector or NotOrthogonal.
inline Frame frame_from_basis(const std::array<CVec3, 3>& vectors) {
  std::array<CVec3, 3> unit;
  for (std::size_t i = 0; i < 3; ++i) {
    if (vectors[i].norm() <= kIdentityTolerance) throw Error(Errc::ZeroVector, "basis vector " + std::to_string(i));
    unit[i] = vectors[i].normalized();
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      if (std::abs(inner(unit[i], unit[j])) > kIdentityTolerance)
        throw Error(Errc::NotOrthogonal, "basis vectors " + std::to_string(i) + " and " + std::to_string(j));
  return Frame({Projection::onto(unit[0]), Projection::onto(unit[1]), Projection::onto(unit[2])});
}

/// Replaces projections `i` and `j` by their sum, placed at min(i, j).
inline Frame coarsen_frame(const Frame& frame, std::size_t i, std::size_t j) {
  if (i >= frame.size() || j >= frame.size() || i == j)
    throw Error(Errc::NotInFrame, "merge needs two distinct projections of the frame");
  if (i > j) std::swap(i, j);
  std::vector<Projection> out;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    if (k == i) {
      out.push_back(Projection::from_matrix(frame[i].matrix() + frame[j].matrix()));
    } else if (k != j) {
      out.push_back(frame[k]);
    }
  }
  return Frame(std::move(out));
}

/// Throws NotInFrame unless both projections belong to `frame`.
inline Frame coarsen_frame(const Frame& frame, const Projection& p, const Projection& q) {
  auto i = frame.find(p);
  auto j = frame.find(q);
  if (!i || !j) throw Error(Errc::NotInFrame, "projection is not a member of the frame");
  return coarsen_frame(frame, *i, *j);
}

/// Re Tr(rho P_i) for each projection of the frame.
inline std::vector<double> frame_weights(const DensityOperator& rho, const Frame& frame) {
  std::vector<double> w;
  w.reserve(frame.size());
  for (const auto& p : frame.projections()) {
    double v = (rho.matrix() * p.matrix()).trace().real();
    if (v < 0.0 && v >= -kStructureTolerance) v = 0.0;
    if (v > 1.0 && v <= 1.0 + kStructureTolerance) v = 1.0;
    w.push_back(v);
  }
  return w;
}

struct SpinManual {
  Manual manual;
  std::vector<Projection> projections;                // projections[k] is outcome "P<k>"
  std::vector<std::vector<OutcomeId>> frame_outcomes;  // per input frame, in frame order
};

inline OutcomeId projection_id(std::size_t k) { return OutcomeId("P" + std::to_string(k)); }

/// Manual whose outcomes are projections; projections equal within tolerance
/// across frames share one outcome.
inline SpinManual manual_from_frames(const std::vector<Frame>& frames) {
  if (frames.empty()) throw Error(Errc::EmptyOperation, "no frames given");
  std::vector<Projection> table;
  std::vector<std::vector<OutcomeId>> frame_outcomes;
  std::vector<Operation> ops;
  for (const auto& f : frames) {
    std::vector<OutcomeId> ids;
    for (const auto& p : f.projections()) {
      std::size_t k = 0;
      while (k < table.size() && !table[k].same_as(p)) ++k;
      if (k == table.size()) table.push_back(p);
      ids.push_back(projection_id(k));
    }
    frame_outcomes.push_back(ids);
    ops.emplace_back(std::move(ids));
  }
  return {validate_manual(std::move(ops)), std::move(table), std::move(frame_outcomes)};
}

namespace detail {

/// Re Tr(rho P) = constant + coefficients . x for the 8 free real parameters
/// x = (rho00, rho11, Re rho01, Im rho01, Re rho02, Im rho02, Re rho12, Im rho12),
/// with rho22 = 1 - rho00 - rho11.
inline std::pair<double, std::array<double, 8>> trace_row(const Mat3& p) {
  std::array<double, 8> row{};
  row[0] = p(0, 0).real() - p(2, 2).real();
  row[1] = p(1, 1).real() - p(2, 2).real();
  const std::array<std::pair<std::size_t, std::size_t>, 3> upper{{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t k = 0; k < 3; ++k) {
    const cplx pij = p(upper[k].first, upper[k].second);
    row[2 + 2 * k] = 2.0 * pij.real();
    row[3 + 2 * k] = 2.0 * pij.imag();
  }
  return {p(2, 2).real(), row};
}

inline Mat3 density_from_parameters(const std::array<double, 8>& x) {
  Mat3 m = Mat3::diagonal(x[0], x[1], 1.0 - x[0] - x[1]);
  const std::array<std::pair<std::size_t, std::size_t>, 3> upper{{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t k = 0; k < 3; ++k) {
    const cplx z(x[2 + 2 * k], x[3 + 2 * k]);
    m(upper[k].first, upper[k].second) = z;
    m(upper[k].second, upper[k].first) = std::conj(z);
  }
  return m;
}

}  // namespace detail

class UnderdeterminedError : public Error {
 public:
  explicit UnderdeterminedError(std::size_t nullity)
      : Error(Errc::Underdetermined, "frame data leave a " + std::to_string(nullity) + "-dimensional null space"),
        nullity_(nullity) {}
  std::size_t null_space_dimension() const noexcept { return nullity_; }

 private:
  std::size_t nullity_;
};

struct DensityFit {
  Mat3 rho;            // Hermitian with unit trace; positivity not enforced
  double residual;     // sum of squared trace-rule residuals
  double min_eigenvalue;
  bool not_positive;   // min_eigenvalue < -1e-8
};

/// Least-squares density recovery from per-frame weights over the 8 real
/// parameters of unit-trace Hermitian matrices. Throws ShapeMismatch or
/// UnderdeterminedError.
inline DensityFit fit_density(const std::vector<Frame>& frames, const std::vector<std::vector<double>>& observed) {
  if (frames.size() != observed.size())
    throw Error(Errc::ShapeMismatch, std::to_string(frames.size()) + " frames but " +
                                         std::to_string(observed.size()) + " weight lists");
  constexpr std::size_t N = 8;
  std::array<double, N * N> normal{};
  std::array<double, N> rhs{};
  std::vector<std::pair<std::pair<double, std::array<double, 8>>, double>> rows;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].size() != observed[f].size())
      throw Error(Errc::ShapeMismatch, "frame " + std::to_string(f) + " has " + std::to_string(frames[f].size()) +
                                           " projections but " + std::to_string(observed[f].size()) + " weights");
    for (std::size_t i = 0; i < frames[f].size(); ++i) {
      auto row = detail::trace_row(frames[f][i].matrix());
      const double target = observed[f][i] - row.first;
      for (std::size_t r = 0; r < N; ++r) {
        rhs[r] += row.second[r] * target;
        for (std::size_t c = 0; c < N; ++c) normal[r * N + c] += row.second[r] * row.second[c];
      }
      rows.emplace_back(row, observed[f][i]);
    }
  }

  std::array<double, N * N> vecs{};
  detail::jacobi_eigen<N>(normal, vecs);
  double largest = 0.0;
  for (std::size_t k = 0; k < N; ++k) largest = std::max(largest, std::abs(normal[k * N + k]));
  std::size_t nullity = 0;
  for (std::size_t k = 0; k < N; ++k)
    if (std::abs(normal[k * N + k]) <= 1e-10 * std::max(largest, 1e-300)) ++nullity;
  if (nullity > 0) throw UnderdeterminedError(nullity);

  std::array<double, N> x{};
  for (std::size_t k = 0; k < N; ++k) {
    double proj = 0.0;
    for (std::size_t r = 0; r < N; ++r) proj += vecs[r * N + k] * rhs[r];
    proj /= normal[k * N + k];
    for (std::size_t r = 0; r < N; ++r) x[r] += vecs[r * N + k] * proj;
  }

  DensityFit fit{detail::density_from_parameters(x), 0.0, 0.0, false};
  for (const auto& [row, w] : rows) {
    double pred = row.first;
    for (std::size_t r = 0; r < N; ++r) pred += row.second[r] * x[r];
    fit.residual += (pred - w) * (pred - w);
  }
  fit.min_eigenvalue = hermitian_eigenvalues(fit.rho)[0];
  fit.not_positive = fit.min_eigenvalue < -kPositivityTolerance;
  return fit;
}

// Random generation. All draws come from the caller's engine.

inline Mat3 random_gaussian_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat3 m;
  for (auto& z : m.a) {
    const double re = normal(rng);
    const double im = normal(rng);
    z = cplx(re, im);
  }
  return m;
}

/// Haar-like unitary: Gram-Schmidt on the columns of a complex Gaussian matrix.
inline Mat3 random_unitary(std::mt19937_64& rng) {
  const Mat3 g = random_gaussian_matrix(rng);
  std::array<CVec3, 3> cols;
  for (std::size_t c = 0; c < 3; ++c) {
    CVec3 v{{g(0, c), g(1, c), g(2, c)}};
    for (std::size_t k = 0; k < c; ++k) {
      const cplx proj = inner(cols[k], v);
      for (std::size_t r = 0; r < 3; ++r) v[r] -= proj * cols[k][r];
    }
    cols[c] = v.normalized();
  }
  return Mat3::from_columns(cols);
}

inline std::array<CVec3, 3> columns(const Mat3& m) {
  std::array<CVec3, 3> out;
  for (std::size_t c = 0; c < 3; ++c) out[c] = CVec3{{m(0, c), m(1, c), m(2, c)}};
  return out;
}

inline std::array<CVec3, 3> random_basis(std::mt19937_64& rng) { return columns(random_unitary(rng)); }

inline Frame random_frame(std::mt19937_64& rng) { return frame_from_basis(random_basis(rng)); }

/// G G^dagger / Tr for complex Gaussian G: full rank almost surely.
inline DensityOperator random_density(std::mt19937_64& rng) {
  const Mat3 g = random_gaussian_matrix(rng);
  Mat3 m = g * g.adjoint();
  m *= 1.0 / m.trace().real();
  // Exact hermiticity for the validator.
  for (std::size_t r = 0; r < 3; ++r) {
    m(r, r) = m(r, r).real();
    for (std::size_t c = r + 1; c < 3; ++c) m(c, r) = std::conj(m(r, c));
  }
  return DensityOperator(m);
}

/// U P U^dagger for every projection.
inline Frame conjugate(const Frame& frame, const Mat3& u) {
  std::vector<Projection> out;
  for (const auto& p : frame.projections()) out.push_back(Projection::from_matrix(u * p.matrix() * u.adjoint()));
  return Frame(std::move(out));
}

inline DensityOperator conjugate(const DensityOperator& rho, const Mat3& u) {
  Mat3 m = u * rho.matrix() * u.adjoint();
  for (std::size_t r = 0; r < 3; ++r) {
    m(r, r) = m(r, r).real();
    for (std::size_t c = r + 1; c < 3; ++c) m(c, r) = std::conj(m(r, c));
  }
  m *= 1.0 / m.trace().real();
  return DensityOperator(m);
}

}  // namespace opstat::spin
