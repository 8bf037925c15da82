#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace srtt {

using Index = Eigen::Index;

/// Per-mode rank (or truncation target, or fiber-sample count) vector.
using Ranks = std::vector<Index>;

inline Ranks uniform_ranks(Index order, Index value) {
  return Ranks(static_cast<std::size_t>(order), value);
}

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Thrown when an operation would materialize more memory than its hard cap
/// allows (explicit unfoldings and other oracle-only paths).
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by the task executor when a job fails; carries the job index.
class JobError : public std::runtime_error {
 public:
  JobError(std::size_t job, const std::string& what)
      : std::runtime_error("job " + std::to_string(job) + ": " + what), job_(job) {}
  std::size_t job() const { return job_; }

 private:
  std::size_t job_;
};

}  // namespace srtt
