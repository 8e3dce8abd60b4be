#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace demix::rngkit {

// Splittable, counter-based randomness source. A stream is identified by a
// root seed plus a derivation path of child indices; the generated sequence is
// a pure function of that identity, so any subtree of work can be re-run in
// isolation and reproduce its draws exactly. Mixing is SplitMix64-style.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t root_seed);

  // Stream for a labeled child. Distinct (path, index) pairs give
  // statistically independent streams.
  SeedStream child(std::uint64_t index) const;

  std::uint64_t root_seed() const { return root_seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }
  std::uint64_t key() const { return key_; }

 private:
  SeedStream(std::uint64_t root_seed, std::vector<std::uint64_t> path, std::uint64_t key);

  std::uint64_t root_seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;  // absorbed root+path, the only state the generator uses
};

// Stateless-keyed generator consuming a stream: output i is mix(key, i).
class Prng {
 public:
  explicit Prng(const SeedStream& stream) : key_(stream.key()) {}

  std::uint64_t next_u64();
  double next_double();    // uniform on [0,1), 53-bit resolution
  double next_gaussian();  // standard normal, Box-Muller

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// i.i.d. standard normal vector. Pure function of (d, stream).
Eigen::VectorXd gaussian_vector(int d, const SeedStream& stream);

// Matrix with i.i.d. standard normal entries, column-major fill order.
Eigen::MatrixXd gaussian_matrix(int rows, int cols, const SeedStream& stream);

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the Q
// columns sign-corrected by the diagonal of R, which makes the factorization
// unique and the distribution exactly rotation invariant.
Eigen::MatrixXd haar_orthogonal(int d, const SeedStream& stream);

struct RotationSet {
  int d = 0;
  std::vector<Eigen::MatrixXd> rotations;

  int count() const { return static_cast<int>(rotations.size()); }
};

// n independent Haar orthogonal d x d matrices.
RotationSet sample_rotations(int d, int n, const SeedStream& stream);

// Verifies Q^T Q = I entrywise within tol for every rotation.
void validate_rotations(const RotationSet& set, double tol = 1e-10);

// Minimum-norm least-squares application of the pseudoinverse of a matrix
// with full row rank, via a cached Cholesky factor of A A^T. Construction
// fails with a RankError when A is row-rank deficient.
class PinvOperator {
 public:
  explicit PinvOperator(const Eigen::MatrixXd& A);

  // A^+ v, v in R^rows.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  // A^+ A v, orthogonal projection of v onto the row space of A.
  Eigen::VectorXd project_row_space(const Eigen::VectorXd& v) const;

  int rows() const { return static_cast<int>(A_.rows()); }
  int cols() const { return static_cast<int>(A_.cols()); }

 private:
  Eigen::MatrixXd A_;
  Eigen::LLT<Eigen::MatrixXd> gram_llt_;
  bool identity_ = false;
};

// One-shot convenience wrapper around PinvOperator::apply.
Eigen::VectorXd pinv_apply(const Eigen::MatrixXd& A, const Eigen::VectorXd& v);

}  // namespace demix::rngkit
