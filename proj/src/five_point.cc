#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "anchorloc/error.h"
#include "anchorloc/two_view.h"

namespace anchorloc {
namespace {

// Polynomials in (x, y, z) of total degree <= 3. The first ten monomials are
// the cubics; the trailing ten {x^2, xy, y^2, xz, yz, z^2, x, y, z, 1} form
// the basis of the quotient ring used by the action matrix.
constexpr int kNumMonomials = 20;
constexpr std::array<std::array<int, 3>, kNumMonomials> kMonomials = {{
    {3, 0, 0}, {2, 1, 0}, {1, 2, 0}, {0, 3, 0}, {2, 0, 1},
    {1, 1, 1}, {0, 2, 1}, {1, 0, 2}, {0, 1, 2}, {0, 0, 3},
    {2, 0, 0}, {1, 1, 0}, {0, 2, 0}, {1, 0, 1}, {0, 1, 1},
    {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
}};

constexpr int MonomialIndex(int a, int b, int c) {
  for (int i = 0; i < kNumMonomials; ++i) {
    if (kMonomials[i][0] == a && kMonomials[i][1] == b &&
        kMonomials[i][2] == c) {
      return i;
    }
  }
  return -1;
}

// Index of the product of two monomials, -1 above degree 3.
constexpr std::array<std::array<int, kNumMonomials>, kNumMonomials> kProduct = [] {
  std::array<std::array<int, kNumMonomials>, kNumMonomials> t{};
  for (int i = 0; i < kNumMonomials; ++i) {
    for (int j = 0; j < kNumMonomials; ++j) {
      t[i][j] = MonomialIndex(kMonomials[i][0] + kMonomials[j][0],
                              kMonomials[i][1] + kMonomials[j][1],
                              kMonomials[i][2] + kMonomials[j][2]);
    }
  }
  return t;
}();

struct Poly {
  std::array<double, kNumMonomials> c{};

  Poly operator+(const Poly& o) const {
    Poly r;
    for (int i = 0; i < kNumMonomials; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  Poly operator-(const Poly& o) const {
    Poly r;
    for (int i = 0; i < kNumMonomials; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  Poly operator*(double s) const {
    Poly r;
    for (int i = 0; i < kNumMonomials; ++i) r.c[i] = c[i] * s;
    return r;
  }
  // Degree of the product must stay <= 3.
  Poly operator*(const Poly& o) const {
    Poly r;
    for (int i = 0; i < kNumMonomials; ++i) {
      if (c[i] == 0.0) continue;
      for (int j = 0; j < kNumMonomials; ++j) {
        if (o.c[j] == 0.0) continue;
        r.c[kProduct[i][j]] += c[i] * o.c[j];
      }
    }
    return r;
  }
};

using PolyMatrix = std::array<std::array<Poly, 3>, 3>;

PolyMatrix Multiply(const PolyMatrix& a, const PolyMatrix& b) {
  PolyMatrix r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return r;
}

PolyMatrix Transpose(const PolyMatrix& a) {
  PolyMatrix r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
  }
  return r;
}

Eigen::Matrix<double, 1, 9> EpipolarRow(const Correspondence& c) {
  const Eigen::Vector3d x1(c.p.x(), c.p.y(), 1.0);
  const Eigen::Vector3d x2(c.p_prime.x(), c.p_prime.y(), 1.0);
  Eigen::Matrix<double, 1, 9> row;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) row(3 * i + j) = x2(i) * x1(j);
  }
  return row;
}

Eigen::Matrix3d Unstack(const Eigen::Matrix<double, 9, 1>& e) {
  Eigen::Matrix3d m;
  m << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  return m;
}

Eigen::Matrix3d ProjectToEssential(const Eigen::Matrix3d& m) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s(1.0, 1.0, 0.0);
  Eigen::Matrix3d e = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  return e / e.norm();
}

}  // namespace

std::vector<Eigen::Matrix3d> SolveEssentialMinimal(
    std::span<const Correspondence> sample) {
  if (sample.size() != 5) {
    throw Error(ErrorCode::kInvalidArgument,
                "five-point solver needs exactly 5 correspondences");
  }
  Eigen::Matrix<double, 5, 9> a;
  for (int i = 0; i < 5; ++i) a.row(i) = EpipolarRow(sample[i]);

  const Eigen::JacobiSVD<Eigen::Matrix<double, 5, 9>> svd(a,
                                                          Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(4) < 1e-10 * sv(0)) {
    throw Error(ErrorCode::kDegenerateSample,
                "epipolar constraints of the sample are rank deficient");
  }
  const Eigen::Matrix<double, 9, 9>& v = svd.matrixV();
  const std::array<Eigen::Matrix3d, 4> basis = {
      Unstack(v.col(5)), Unstack(v.col(6)), Unstack(v.col(7)),
      Unstack(v.col(8))};

  // E = x X + y Y + z Z + W as a matrix of linear polynomials.
  constexpr std::array<int, 4> kLinear = {MonomialIndex(1, 0, 0),
                                          MonomialIndex(0, 1, 0),
                                          MonomialIndex(0, 0, 1),
                                          MonomialIndex(0, 0, 0)};
  PolyMatrix e;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 4; ++k) e[i][j].c[kLinear[k]] = basis[k](i, j);
    }
  }

  Eigen::Matrix<double, 10, kNumMonomials> constraints;
  const Poly det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) -
                   e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
                   e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
  for (int k = 0; k < kNumMonomials; ++k) constraints(0, k) = det.c[k];

  // 2 E E^T E - trace(E E^T) E = 0.
  const PolyMatrix eet = Multiply(e, Transpose(e));
  const Poly trace = eet[0][0] + eet[1][1] + eet[2][2];
  const PolyMatrix eete = Multiply(eet, e);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Poly p = eete[i][j] * 2.0 - trace * e[i][j];
      for (int k = 0; k < kNumMonomials; ++k) {
        constraints(1 + 3 * i + j, k) = p.c[k];
      }
    }
  }

  // Express each cubic monomial in the quotient basis.
  const Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(
      constraints.leftCols<10>());
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kDegenerateSample,
                "five-point elimination template is singular");
  }
  const Eigen::Matrix<double, 10, 10> reduced =
      lu.solve(constraints.rightCols<10>());

  // Multiplication-by-x action on {x^2, xy, y^2, xz, yz, z^2, x, y, z, 1}.
  Eigen::Matrix<double, 10, 10> action = Eigen::Matrix<double, 10, 10>::Zero();
  constexpr std::array<int, 6> kCubicRows = {
      MonomialIndex(3, 0, 0), MonomialIndex(2, 1, 0), MonomialIndex(1, 2, 0),
      MonomialIndex(2, 0, 1), MonomialIndex(1, 1, 1), MonomialIndex(1, 0, 2)};
  for (int i = 0; i < 6; ++i) action.row(i) = -reduced.row(kCubicRows[i]);
  action(6, 0) = 1.0;  // x * x = x^2
  action(7, 1) = 1.0;  // x * y = xy
  action(8, 3) = 1.0;  // x * z = xz
  action(9, 6) = 1.0;  // x * 1 = x

  const Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> eig(action);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateSample, "eigen decomposition failed");
  }

  std::vector<Eigen::Matrix3d> solutions;
  for (int k = 0; k < 10; ++k) {
    const std::complex<double> lambda = eig.eigenvalues()(k);
    if (std::abs(lambda.imag()) > 1e-8 * std::max(1.0, std::abs(lambda))) {
      continue;
    }
    const Eigen::Matrix<std::complex<double>, 10, 1> vec =
        eig.eigenvectors().col(k);
    if (std::abs(vec(9)) < 1e-14) continue;
    const double x = (vec(6) / vec(9)).real();
    const double y = (vec(7) / vec(9)).real();
    const double z = (vec(8) / vec(9)).real();
    Eigen::Matrix3d candidate =
        x * basis[0] + y * basis[1] + z * basis[2] + basis[3];
    const double norm = candidate.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) continue;
    solutions.push_back(candidate / norm);
  }
  return solutions;
}

Eigen::Matrix3d SolveEssentialLinear(std::span<const Correspondence> points) {
  const int n = static_cast<int>(points.size());
  if (n < 8) {
    throw Error(ErrorCode::kInsufficientMatches,
                "eight-point solve needs at least 8 correspondences");
  }
  // Hartley normalization per image.
  auto normalizer = [&](bool second) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& c : points) mean += second ? c.p_prime : c.p;
    mean /= n;
    double dist = 0.0;
    for (const auto& c : points) dist += ((second ? c.p_prime : c.p) - mean).norm();
    dist /= n;
    const double s = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = s;
    t(1, 1) = s;
    t.block<2, 1>(0, 2) = -s * mean;
    return t;
  };
  const Eigen::Matrix3d t1 = normalizer(false);
  const Eigen::Matrix3d t2 = normalizer(true);

  Eigen::MatrixXd a(n, 9);
  for (int i = 0; i < n; ++i) {
    Correspondence c;
    c.p = (t1 * points[i].p.homogeneous()).hnormalized();
    c.p_prime = (t2 * points[i].p_prime.homogeneous()).hnormalized();
    a.row(i) = EpipolarRow(c);
  }
  // A and its R factor share the right singular vectors.
  Eigen::Matrix<double, 9, 9> r = Eigen::Matrix<double, 9, 9>::Zero();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  r.topRows(std::min(n, 9)) =
      qr.matrixQR().topRows(std::min(n, 9)).triangularView<Eigen::Upper>();
  const Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(r, Eigen::ComputeFullV);
  const Eigen::Matrix3d e_norm = Unstack(svd.matrixV().col(8));
  return ProjectToEssential(t2.transpose() * e_norm * t1);
}

Eigen::Matrix3d EssentialFromPose(const Rotation3d& rotation,
                                  const Eigen::Vector3d& translation) {
  return CrossMatrix<double>(translation) * rotation.matrix();
}

}  // namespace anchorloc
