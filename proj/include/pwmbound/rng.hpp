#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace pwmbound {

// All randomness flows through explicitly seeded engines; reruns with the
// same seeds are bit-reproducible on the same binary.
using Rng = std::mt19937_64;

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{mix64(seed)}; }

// Independent stream for sub-task `stream` (rollout index, audit, ...).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng{mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ull))};
}

// Symmetric PSD square root; small negative eigenvalues from roundoff are
// clamped to zero so that sqrt * sqrt' reproduces the input up to tolerance.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a);

// Draws from a Gaussian with the given mean and *covariance* square root.
Eigen::VectorXd gaussian_draw(Rng& rng, const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov_sqrt);

}  // namespace pwmbound
