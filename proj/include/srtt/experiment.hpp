#pragma once

#include "srtt/diagnostics.hpp"
#include "srtt/generators.hpp"
#include "srtt/io.hpp"

#include <iosfwd>
#include <optional>

namespace srtt {

// Experiment orchestration behind the benchmark CLI: seeded repetitions of
// one decomposition configuration, with CSV rows per seed and a JSON
// summary of the error/time distributions.

enum class Method { kTHosvd, kStHosvd, kRHosvd, kSubRHosvd, kRtlHt, kSubRRtlHt };

Method parse_method(const std::string& name);
std::string method_name(Method method);
bool method_is_randomized(Method method);
bool method_is_hierarchical(Method method);
bool method_needs_samples(Method method);

enum class GeneratorKind { kTuckerPlanted, kHTuckerPlanted, kFile };

GeneratorKind parse_generator(const std::string& name);
std::string generator_name(GeneratorKind kind);

struct ExperimentSpec {
  GeneratorKind generator = GeneratorKind::kTuckerPlanted;
  std::vector<Index> shape;        // generator shape; ignored when reading a file
  std::string input_path;          // tensor file for GeneratorKind::kFile
  Index rank = 5;                  // uniform target rank (leaf/hierarchical)
  Method method = Method::kTHosvd;
  std::optional<Index> samples;    // explicit per-target fiber count
  std::optional<double> alpha;     // proportional sampling rule
  Index oversampling = 4;
  std::uint64_t base_seed = 1;     // run i uses base_seed + i; the generator uses base_seed
  Index runs = 1;
  ExecPolicy exec;
  bool use_exec = false;           // route through the parallel engine
  CoreKind core_kind = CoreKind::kUniform;
  bool strict = false;             // numerical-rank warnings become errors
  bool timings = true;             // timing columns zeroed when off, for byte-stable output
  bool mode_residuals = false;     // per-mode projection residual logging
  std::int64_t unfold_cap_bytes = kDefaultUnfoldCapBytes;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double rel_error = 0.0;
  double total_seconds = 0.0;
  StageTimings timings;
  std::vector<Index> achieved_ranks;
  std::vector<double> mode_residuals;
  std::vector<std::string> warnings;
};

struct SamplingFractionLine {
  std::string target;      // "mode 0" or "node 3 {1,2}"
  Index samples = 0;
  Index columns = 0;
  double fraction = 0.0;
  std::string percent_text;
};

struct RunReport {
  ExperimentSpec spec;
  Shape shape;
  Ranks ranks;             // resolved per-mode (or per-node) targets
  Ranks sample_counts;     // resolved per-mode (or per-node) fiber budgets
  std::vector<SeedResult> rows;
  std::vector<SamplingFractionLine> fractions;
  std::string environment;
};

/// Runs `spec.runs` seeded repetitions and collects per-seed results.
/// Throws on invalid specs; with spec.strict set, a numerical-rank warning
/// in any run raises a CheckFailure.
RunReport run_experiment(const ExperimentSpec& spec);

class CheckFailure : public std::runtime_error {
 public:
  explicit CheckFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Stable CSV schema:
/// seed,method,d,shape,rank,samples,p,workers,rel_error,total_s,stage_json
void write_csv(const RunReport& report, std::ostream& os);
inline constexpr const char* kCsvHeader =
    "seed,method,d,shape,rank,samples,p,workers,rel_error,total_s,stage_json";

/// Five-number summaries (min, q1, median, q3, max) of errors and times
/// plus the sampling-fraction lines and environment fingerprint.
void write_json_summary(const RunReport& report, std::ostream& os);

/// Scaling table across worker counts: per-count medians of total and
/// factor-stage seconds with speedups relative to the first entry.
void write_scaling_json(const std::vector<std::pair<Index, RunReport>>& runs, std::ostream& os);

/// Splits one CSV line into fields, honoring double-quoted fields with
/// doubled inner quotes.
std::vector<std::string> parse_csv_line(const std::string& line);

/// Percentage with the mantissa rounded up to one significant digit, e.g.
/// 4.39e-7 -> "0.00005%": the conservative "at most this share of the
/// data was touched" convention used in the sampling reports.
std::string format_percent_ceil(double fraction);

std::string environment_fingerprint();

/// Median of a sample (copies and sorts).
double median(std::vector<double> values);

struct CheckOutcome {
  std::string name;
  std::string inputs;  // human-readable preset parameters
  bool pass = false;
  double estimate = 0.0;
  double bound = 0.0;
  std::string detail;
};

/// Diagnostic preset suite: Gaussian fourth-moment checks, the sampling
/// event check on an incoherent planted matrix, and spot values of every
/// bound evaluator. With `adversarial` set, adds a coherent construction
/// whose sampling events are expected to fail, demonstrating why the
/// coherence condition is needed.
std::vector<CheckOutcome> run_check_suite(bool adversarial, std::uint64_t seed);

void write_check_json(const std::vector<CheckOutcome>& outcomes, std::ostream& os);

}  // namespace srtt
