#pragma once

#include "srtt/tensor.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace srtt {

// Shared-memory task execution for the mode- and tree-parallel stages.
// Jobs are pure functions of immutable inputs plus private RNG streams, so
// every parallel path yields bitwise the same numbers as its serial order;
// only the timings differ.

struct ExecPolicy {
  Index workers = 1;
  std::optional<Index> slice_mode;   // slicing mode for the core assembly; auto if unset
  Index index_partitions = 1;        // subintervals for parallel index generation
  bool emulate_serial_root = false;  // root transfer waits for every basis job
};

namespace stage {
inline constexpr const char* kSampling = "sampling";
inline constexpr const char* kExtract = "extract";
inline constexpr const char* kSketch = "sketch";
inline constexpr const char* kSvd = "svd";
inline constexpr const char* kTransfer = "transfer";
inline constexpr const char* kTtm = "ttm";
inline constexpr const char* kGather = "gather";
inline constexpr const char* kSerialTail = "serial_tail";
inline constexpr const char* kFactorWall = "factor_wall";  // wall clock of the whole factor stage
}  // namespace stage

struct TimingRecord {
  std::string stage;
  int worker = 0;  // -1 marks the coordinating thread
  double seconds = 0.0;
};

struct StageTimings {
  std::vector<TimingRecord> records;

  void add(std::string stage_name, int worker, double seconds) {
    records.push_back({std::move(stage_name), worker, seconds});
  }
  void merge(const StageTimings& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
  }
  double total(std::string_view stage_name) const {
    double sum = 0.0;
    for (const auto& r : records)
      if (r.stage == stage_name) sum += r.seconds;
    return sum;
  }
  double total() const {
    double sum = 0.0;
    for (const auto& r : records) sum += r.seconds;
    return sum;
  }
};

class StageClock {
 public:
  static double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
};

/// A job to execute; `worker` is the executing worker's id and `timings`
/// a private sink merged (in worker order) after the run.
using Job = std::function<void(int worker, StageTimings& timings)>;

/// Runs independent jobs over `workers` threads. Job i's work must not
/// depend on any other job; results are whatever the closures write to
/// their (disjoint) output slots. Exceptions are captured and rethrown as
/// JobError with the failing job's index.
inline StageTimings run_independent_jobs(const std::vector<Job>& jobs, Index workers) {
  if (workers < 1) throw std::invalid_argument("run_independent_jobs: workers must be >= 1");
  StageTimings merged;
  if (jobs.empty()) return merged;

  const Index nthreads = std::min<Index>(workers, static_cast<Index>(jobs.size()));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      try {
        jobs[i](0, merged);
      } catch (const std::exception& e) {
        throw JobError(i, e.what());
      }
    }
    return merged;
  }

  std::vector<StageTimings> locals(static_cast<std::size_t>(nthreads));
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::optional<JobError> first_error;

  auto body = [&](int worker) {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        jobs[i](worker, locals[static_cast<std::size_t>(worker)]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error.emplace(i, e.what());
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(nthreads));
  for (Index w = 0; w < nthreads; ++w) threads.emplace_back(body, static_cast<int>(w));
  for (auto& t : threads) t.join();
  if (first_error) throw *first_error;
  for (const auto& local : locals) merged.merge(local);
  return merged;
}

/// Independent factor-style jobs producing one result each; results come
/// back in job order regardless of scheduling.
template <class Result>
std::pair<std::vector<Result>, StageTimings> parallel_factors(
    const std::vector<std::function<Result(int worker, StageTimings&)>>& tasks,
    const ExecPolicy& policy) {
  std::vector<Result> results(tasks.size());
  std::vector<Job> jobs;
  jobs.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    jobs.push_back([&tasks, &results, i](int worker, StageTimings& timings) {
      results[i] = tasks[i](worker, timings);
    });
  }
  StageTimings timings = run_independent_jobs(jobs, policy.workers);
  return {std::move(results), std::move(timings)};
}

/// A node of a dependency-scheduled job graph. `stage` labels timing
/// records; jobs labeled "root_transfer" additionally wait for every "svd"
/// job when ExecPolicy::emulate_serial_root is set.
struct TreeJob {
  std::string stage;
  double sim_cost = 1.0;
  std::vector<std::size_t> deps;
  Job run;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> effective_deps(const std::vector<TreeJob>& jobs,
                                                            bool emulate_serial_root) {
  std::vector<std::vector<std::size_t>> deps(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    deps[i] = jobs[i].deps;
    for (std::size_t d : deps[i])
      if (d >= jobs.size()) throw std::invalid_argument("tree_schedule: dependency out of range");
    if (emulate_serial_root && jobs[i].stage == "root_transfer")
      for (std::size_t j = 0; j < jobs.size(); ++j)
        if (jobs[j].stage == stage::kSvd) deps[i].push_back(j);
  }
  return deps;
}

inline std::vector<std::size_t> topological_order(
    const std::vector<std::vector<std::size_t>>& deps) {
  const std::size_t n = deps.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> dependents(n);
  for (std::size_t i = 0; i < n; ++i) {
    indegree[i] = deps[i].size();
    for (std::size_t d : deps[i]) dependents[d].push_back(i);
  }
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t i = ready.front();
    ready.pop_front();
    order.push_back(i);
    for (std::size_t j : dependents[i])
      if (--indegree[j] == 0) ready.push_back(j);
  }
  if (order.size() != n) throw std::invalid_argument("tree_schedule: dependency cycle");
  return order;
}

}  // namespace detail

/// Executes a dependency graph of jobs (the dimension tree, in practice)
/// with up to `workers` running concurrently; a job becomes ready when all
/// of its dependencies finished. workers == 1 runs in topological order.
inline StageTimings tree_schedule(const std::vector<TreeJob>& jobs, const ExecPolicy& policy) {
  if (policy.workers < 1) throw std::invalid_argument("tree_schedule: workers must be >= 1");
  const auto deps = detail::effective_deps(jobs, policy.emulate_serial_root);
  const auto order = detail::topological_order(deps);  // also validates acyclicity

  StageTimings merged;
  if (policy.workers == 1) {
    for (std::size_t i : order) {
      try {
        jobs[i].run(0, merged);
      } catch (const std::exception& e) {
        throw JobError(i, e.what());
      }
    }
    return merged;
  }

  const std::size_t n = jobs.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> dependents(n);
  for (std::size_t i = 0; i < n; ++i) {
    indegree[i] = deps[i].size();
    for (std::size_t d : deps[i]) dependents[d].push_back(i);
  }

  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::size_t> ready;
  std::size_t completed = 0;
  std::optional<JobError> first_error;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);

  const Index nthreads = std::min<Index>(policy.workers, static_cast<Index>(n));
  std::vector<StageTimings> locals(static_cast<std::size_t>(nthreads));

  auto body = [&](int worker) {
    for (;;) {
      std::size_t job_index;
      {
        std::unique_lock<std::mutex> lock(mutex);
        cv.wait(lock, [&] { return !ready.empty() || completed == n || first_error; });
        if (completed == n || first_error) return;
        job_index = ready.front();
        ready.pop_front();
      }
      bool failed = false;
      try {
        jobs[job_index].run(worker, locals[static_cast<std::size_t>(worker)]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!first_error) first_error.emplace(job_index, e.what());
        failed = true;
      }
      {
        std::lock_guard<std::mutex> lock(mutex);
        ++completed;
        if (!failed)
          for (std::size_t j : dependents[job_index])
            if (--indegree[j] == 0) ready.push_back(j);
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(nthreads));
  for (Index w = 0; w < nthreads; ++w) threads.emplace_back(body, static_cast<int>(w));
  for (auto& t : threads) t.join();
  if (first_error) throw *first_error;
  for (const auto& local : locals) merged.merge(local);
  return merged;
}

/// Simulated makespan of the job graph under greedy list scheduling with
/// the given worker count, using each job's sim_cost and no numerics. Used
/// for load-balance studies of unequal per-node costs.
inline double simulated_makespan(const std::vector<TreeJob>& jobs, Index workers,
                                 bool emulate_serial_root = false) {
  if (workers < 1) throw std::invalid_argument("simulated_makespan: workers must be >= 1");
  const auto deps = detail::effective_deps(jobs, emulate_serial_root);
  (void)detail::topological_order(deps);

  const std::size_t n = jobs.size();
  std::vector<double> finish(n, -1.0);
  std::vector<double> worker_free(static_cast<std::size_t>(workers), 0.0);
  std::vector<bool> scheduled(n, false);
  std::size_t remaining = n;

  while (remaining > 0) {
    // Earliest-start-first among jobs whose dependencies are all scheduled.
    std::size_t best = n;
    double best_start = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (scheduled[i]) continue;
      double deps_done = 0.0;
      bool ok = true;
      for (std::size_t d : deps[i]) {
        if (!scheduled[d]) {
          ok = false;
          break;
        }
        deps_done = std::max(deps_done, finish[d]);
      }
      if (!ok) continue;
      const double wfree = *std::min_element(worker_free.begin(), worker_free.end());
      const double start = std::max(deps_done, wfree);
      if (best == n || start < best_start) {
        best = i;
        best_start = start;
      }
    }
    auto wit = std::min_element(worker_free.begin(), worker_free.end());
    const double start = std::max(best_start, *wit);
    finish[best] = start + jobs[best].sim_cost;
    *wit = finish[best];
    scheduled[best] = true;
    --remaining;
  }
  return *std::max_element(finish.begin(), finish.end());
}

/// Auto slice-mode rule: prefer a mode whose extent is an exact multiple of
/// the worker count, otherwise the one needing the least padding to the
/// next multiple; ties go to the smaller mode index. Modes smaller than the
/// worker count are not eligible.
inline Index pick_slice_mode(const Shape& shape, Index workers) {
  Index best = -1;
  Index best_score = std::numeric_limits<Index>::max();
  for (Index k = 0; k < shape.order(); ++k) {
    const Index nk = shape.dim(k);
    if (nk < workers) continue;
    const Index rem = nk % workers;
    const Index score = rem == 0 ? 0 : workers - rem;
    if (score < best_score) {
      best_score = score;
      best = k;
    }
  }
  if (best < 0)
    throw std::invalid_argument("pick_slice_mode: no mode can host " +
                                std::to_string(workers) + " slices");
  return best;
}

/// Core assembly X x_0 U_0^T x_1 ... x_{d-1} U_{d-1}^T computed by slicing X
/// along one mode: workers reduce disjoint slabs over all other modes, the
/// coordinator gathers the reduced slabs and applies the one remaining TTM.
/// Slab results are assembled slice-by-slice, so the output is bitwise
/// identical for every worker count.
template <class Scalar>
DenseTensor<Scalar> sliced_core(const DenseTensor<Scalar>& x,
                                const std::vector<Matrix<Scalar>>& factors,
                                const ExecPolicy& policy, StageTimings* timings = nullptr) {
  const Shape& shape = x.shape();
  const Index d = shape.order();
  if (static_cast<Index>(factors.size()) != d)
    throw std::invalid_argument("sliced_core: need one factor per mode");
  for (Index k = 0; k < d; ++k)
    if (factors[static_cast<std::size_t>(k)].rows() != shape.dim(k))
      throw std::invalid_argument("sliced_core: factor rows mismatch in mode " + std::to_string(k));

  const Index slice_mode =
      policy.slice_mode ? *policy.slice_mode : pick_slice_mode(shape, policy.workers);
  if (slice_mode < 0 || slice_mode >= d)
    throw std::invalid_argument("sliced_core: slice mode out of range");
  const Index n_slice = shape.dim(slice_mode);
  if (policy.workers > n_slice)
    throw std::invalid_argument("sliced_core: more workers than slices along the slicing mode");

  // Reduced shape: factor column counts everywhere except the slicing mode.
  std::vector<Index> reduced_dims(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k)
    reduced_dims[static_cast<std::size_t>(k)] =
        (k == slice_mode) ? n_slice : factors[static_cast<std::size_t>(k)].cols();
  DenseTensor<Scalar> reduced{Shape(reduced_dims)};

  const Index g_in = shape.stride(slice_mode);
  const Index post_in = shape.num_elements() / (g_in * n_slice);
  const Shape reduced_shape = reduced.shape();
  const Index g_out = reduced_shape.stride(slice_mode);
  const Index post_out = reduced_shape.num_elements() / (g_out * n_slice);

  std::vector<Index> slice_dims = shape.dims();
  slice_dims[static_cast<std::size_t>(slice_mode)] = 1;
  const Shape slice_shape{slice_dims};

  // One slice is reduced at a time, so slab contents do not depend on where
  // the slab boundaries fall and any worker count gives the same bits.
  auto reduce_slice = [&](Index i, DenseTensor<Scalar>& slab, Index local_i, Index slab_len) {
    DenseTensor<Scalar> slice{slice_shape};
    for (Index t = 0; t < post_in; ++t)
      std::copy_n(x.data() + i * g_in + t * g_in * n_slice, g_in, slice.data() + t * g_in);
    for (Index k = 0; k < d; ++k)
      if (k != slice_mode) slice = ttm(slice, factors[static_cast<std::size_t>(k)].transpose(), k);
    for (Index t = 0; t < post_out; ++t)
      std::copy_n(slice.data() + t * g_out, g_out,
                  slab.data() + local_i * g_out + t * g_out * slab_len);
  };

  // Contiguous slice ranges, sizes differing by at most one.
  const Index nworkers = std::min(policy.workers, n_slice);
  std::vector<DenseTensor<Scalar>> slabs(static_cast<std::size_t>(nworkers));
  std::vector<Index> range_lo(static_cast<std::size_t>(nworkers));
  std::vector<Job> jobs;
  for (Index w = 0; w < nworkers; ++w) {
    const Index lo = w * (n_slice / nworkers) + std::min(w, n_slice % nworkers);
    const Index hi = lo + n_slice / nworkers + (w < n_slice % nworkers ? 1 : 0);
    range_lo[static_cast<std::size_t>(w)] = lo;
    std::vector<Index> slab_dims = reduced_dims;
    slab_dims[static_cast<std::size_t>(slice_mode)] = hi - lo;
    slabs[static_cast<std::size_t>(w)] = DenseTensor<Scalar>{Shape(slab_dims)};
    jobs.push_back([&, w, lo, hi](int worker, StageTimings& local) {
      const double t0 = StageClock::now();
      auto& slab = slabs[static_cast<std::size_t>(w)];
      for (Index i = lo; i < hi; ++i) reduce_slice(i, slab, i - lo, hi - lo);
      local.add(stage::kTtm, worker, StageClock::now() - t0);
    });
  }
  StageTimings run_timings = run_independent_jobs(jobs, policy.workers);

  // The coordinator gathers the reduced slabs into one tensor.
  const double t_gather = StageClock::now();
  for (Index w = 0; w < nworkers; ++w) {
    const auto& slab = slabs[static_cast<std::size_t>(w)];
    const Index lo = range_lo[static_cast<std::size_t>(w)];
    const Index len = slab.dim(slice_mode);
    for (Index t = 0; t < post_out; ++t)
      std::copy_n(slab.data() + t * g_out * len, g_out * len,
                  reduced.data() + lo * g_out + t * g_out * n_slice);
  }
  run_timings.add(stage::kGather, -1, StageClock::now() - t_gather);

  const double t_tail = StageClock::now();
  DenseTensor<Scalar> core =
      ttm(reduced, factors[static_cast<std::size_t>(slice_mode)].transpose(), slice_mode);
  run_timings.add(stage::kSerialTail, -1, StageClock::now() - t_tail);

  if (timings) timings->merge(run_timings);
  return core;
}

}  // namespace srtt
