#include "demix/rngkit.hpp"

#include <cmath>
#include <limits>

#include "demix/errors.hpp"

namespace demix::rngkit {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer: full-avalanche bijection on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Keyed absorption of one word. Asymmetric in (key, word) so that
// permuted paths land on different keys.
constexpr std::uint64_t absorb(std::uint64_t key, std::uint64_t word) {
  return mix64(key ^ (mix64(word) + 0x632be59bd9b4e019ULL));
}

}  // namespace

SeedStream::SeedStream(std::uint64_t root_seed)
    : root_seed_(root_seed), key_(mix64(root_seed)) {}

SeedStream::SeedStream(std::uint64_t root_seed, std::vector<std::uint64_t> path,
                       std::uint64_t key)
    : root_seed_(root_seed), path_(std::move(path)), key_(key) {}

SeedStream SeedStream::child(std::uint64_t index) const {
  std::vector<std::uint64_t> path = path_;
  path.push_back(index);
  return SeedStream(root_seed_, std::move(path), absorb(key_, index));
}

std::uint64_t Prng::next_u64() { return mix64(key_ ^ mix64(counter_++ + kGolden)); }

double Prng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 shifted away from zero so the log is finite.
  double u1 = next_double();
  double u2 = next_double();
  u1 = u1 + 0x1.0p-54;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::VectorXd gaussian_vector(int d, const SeedStream& stream) {
  if (d < 0) throw DimensionError("gaussian_vector: negative dimension");
  Prng prng(stream);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = prng.next_gaussian();
  return v;
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, const SeedStream& stream) {
  if (rows < 0 || cols < 0) throw DimensionError("gaussian_matrix: negative dimension");
  Prng prng(stream);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = prng.next_gaussian();
  return m;
}

Eigen::MatrixXd haar_orthogonal(int d, const SeedStream& stream) {
  if (d <= 0) throw DimensionError("haar_orthogonal: dimension must be positive");
  const Eigen::MatrixXd g = gaussian_matrix(d, d, stream);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

RotationSet sample_rotations(int d, int n, const SeedStream& stream) {
  if (n < 0) throw DimensionError("sample_rotations: negative count");
  RotationSet set;
  set.d = d;
  set.rotations.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    set.rotations.push_back(haar_orthogonal(d, stream.child(static_cast<std::uint64_t>(i))));
  return set;
}

void validate_rotations(const RotationSet& set, double tol) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(set.d, set.d);
  for (const auto& q : set.rotations) {
    if (q.rows() != set.d || q.cols() != set.d)
      throw DimensionError("validate_rotations: rotation has wrong shape");
    const double err = (q.transpose() * q - eye).cwiseAbs().maxCoeff();
    if (!(err <= tol))
      throw NumericalError("validate_rotations: orthogonality defect " + std::to_string(err));
  }
}

PinvOperator::PinvOperator(const Eigen::MatrixXd& A) : A_(A) {
  if (A.rows() == 0 || A.cols() == 0)
    throw DimensionError("PinvOperator: empty matrix");
  if (A.rows() > A.cols())
    throw DimensionError("PinvOperator: more rows than columns, row rank cannot be full");
  if (A.rows() == A.cols() && A.isIdentity(0.0)) {
    identity_ = true;
    return;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
  const int rank = static_cast<int>(qr.rank());
  if (rank < A.rows())
    throw RankError("PinvOperator: row-rank deficient matrix", rank);
  gram_llt_.compute(A * A.transpose());
  if (gram_llt_.info() != Eigen::Success)
    throw RankError("PinvOperator: Gram matrix not positive definite", rank);
}

Eigen::VectorXd PinvOperator::apply(const Eigen::VectorXd& v) const {
  if (v.size() != A_.rows())
    throw DimensionError("PinvOperator::apply: size mismatch");
  if (identity_) return v;
  return A_.transpose() * gram_llt_.solve(v);
}

Eigen::VectorXd PinvOperator::project_row_space(const Eigen::VectorXd& v) const {
  if (v.size() != A_.cols())
    throw DimensionError("PinvOperator::project_row_space: size mismatch");
  if (identity_) return v;
  return A_.transpose() * gram_llt_.solve(A_ * v);
}

Eigen::VectorXd pinv_apply(const Eigen::MatrixXd& A, const Eigen::VectorXd& v) {
  return PinvOperator(A).apply(v);
}

}  // namespace demix::rngkit
