// Command-line front end: synthetic tensor generation, one-shot Tucker and
// hierarchical decompositions of tensor files, seeded benchmark grids with
// CSV/JSON reports, and the diagnostic check suite.
//
// Exit codes: 0 ok, 2 argument error, 3 I/O error, 4 resource cap,
// 5 check failure (also used for strict-mode rank warnings).

#include <CLI11.hpp>

#include "srtt/experiment.hpp"

#include <fstream>
#include <iostream>

namespace {

using namespace srtt;

constexpr int kExitOk = 0;
constexpr int kExitArgument = 2;
constexpr int kExitIo = 3;
constexpr int kExitResource = 4;
constexpr int kExitCheck = 5;

std::vector<Index> parse_extents(const std::string& text, const char* what) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    try {
      out.push_back(static_cast<Index>(std::stoll(item)));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + text + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty extent list");
  return out;
}

std::vector<Index> parse_worker_list(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<Index>(std::stoll(item)));
  if (out.empty()) throw std::invalid_argument("--workers: empty list");
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << text;
  if (!os) throw IoError("write failed: " + path);
}

std::ostream& output_stream(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw IoError("cannot open for writing: " + path);
  return file;
}

struct CommonOptions {
  std::string method = "t-hosvd";
  Index rank = 5;
  Index samples = 0;
  double alpha = 0.0;
  Index oversample = 4;
  std::uint64_t seed = 1;
  Index workers = 0;  // 0: serial path, no exec policy
  Index slice_mode = -1;
  Index partitions = 1;
  bool emulate_serial_root = false;
  bool strict = false;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt, bool with_method) {
  if (with_method)
    cmd->add_option("--method", opt.method,
                    "t-hosvd | st-hosvd | r-hosvd | sub-r-hosvd | rtl-ht | sub-r-rtl-ht");
  cmd->add_option("--rank", opt.rank, "uniform target rank");
  cmd->add_option("--samples", opt.samples, "fibers per mode/node for subsampled methods");
  cmd->add_option("--alpha", opt.alpha, "proportional sampling coefficient (s = alpha * rows)");
  cmd->add_option("--oversample", opt.oversample, "sketch oversampling p");
  cmd->add_option("--seed", opt.seed, "base random seed");
  cmd->add_option("--workers", opt.workers, "worker threads (0 = plain serial path)");
  cmd->add_option("--slice-mode", opt.slice_mode, "mode sliced in the core assembly (-1 = auto)");
  cmd->add_option("--partitions", opt.partitions, "subintervals for parallel index generation");
  cmd->add_flag("--emulate-serial-root", opt.emulate_serial_root,
                "root transfer waits for every basis job");
  cmd->add_flag("--strict", opt.strict, "treat numerical-rank warnings as failures");
}

void apply_common(const CommonOptions& opt, ExperimentSpec& spec) {
  spec.method = parse_method(opt.method);
  spec.rank = opt.rank;
  if (opt.samples > 0) spec.samples = opt.samples;
  if (opt.alpha > 0.0) spec.alpha = opt.alpha;
  spec.oversampling = opt.oversample;
  spec.base_seed = opt.seed;
  spec.strict = opt.strict;
  if (opt.workers > 0) {
    spec.use_exec = true;
    spec.exec.workers = opt.workers;
    if (opt.slice_mode >= 0) spec.exec.slice_mode = opt.slice_mode;
    spec.exec.index_partitions = opt.partitions;
    spec.exec.emulate_serial_root = opt.emulate_serial_root;
  }
}

int cmd_gen(const std::string& generator, const std::string& shape_text, Index rank,
            const std::string& core, std::uint64_t seed, const std::string& out_path) {
  const Shape shape{parse_extents(shape_text, "--shape")};
  const CoreKind core_kind = core == "smooth" ? CoreKind::kSmoothGrid : CoreKind::kUniform;
  if (core != "smooth" && core != "uniform")
    throw std::invalid_argument("--core: expected 'uniform' or 'smooth'");

  DenseTensor<double> x;
  const GeneratorKind kind = parse_generator(generator);
  if (kind == GeneratorKind::kTuckerPlanted) {
    x = make_planted_tucker<double>(shape, uniform_ranks(shape.order(), rank), core_kind, seed)
            .tensor;
  } else if (kind == GeneratorKind::kHTuckerPlanted) {
    const DimensionTree tree = DimensionTree::balanced(shape.order());
    x = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, rank), seed).tensor;
  } else {
    throw std::invalid_argument("gen: generator must be tucker-planted or htucker-planted");
  }
  write_tensor(out_path, x);
  std::cout << "wrote " << out_path << " shape " << shape.to_string() << " (" << x.size()
            << " values)\n";
  return kExitOk;
}

int run_single(GeneratorKind fallback_generator, const std::string& input,
               const CommonOptions& opt, const std::string& out_path,
               const std::string& save_path) {
  ExperimentSpec spec;
  spec.generator = GeneratorKind::kFile;
  spec.input_path = input;
  spec.runs = 1;
  (void)fallback_generator;
  apply_common(opt, spec);

  RunReport report = run_experiment(spec);
  std::ofstream file;
  std::ostream& os = output_stream(out_path, file);
  write_json_summary(report, os);

  if (!save_path.empty()) {
    if (!method_is_hierarchical(spec.method))
      throw std::invalid_argument("--save applies to hierarchical methods only");
    const DenseTensor<double> x = read_tensor(input);
    const DimensionTree tree = DimensionTree::balanced(x.order());
    const NodeRanks ranks = uniform_node_ranks(tree, spec.rank);
    HTuckerDecomposition<double> h{tree, {}, {}};
    if (spec.method == Method::kRtlHt) {
      h = rtl_ht(x, tree, ranks, spec.unfold_cap_bytes);
    } else {
      NodeRanks node_samples;
      if (spec.alpha) {
        node_samples = node_sample_counts(tree, x.shape(), *spec.alpha);
      } else if (spec.samples) {
        node_samples.assign(static_cast<std::size_t>(tree.num_nodes()), 1);
        for (Index i = 1; i < tree.num_nodes(); ++i)
          node_samples[static_cast<std::size_t>(i)] =
              std::min(*spec.samples, tree.node_cols(i, x.shape()));
      } else {
        throw std::invalid_argument("sub-r-rtl-ht requires --samples or --alpha");
      }
      const std::optional<ExecPolicy> exec =
          spec.use_exec ? std::optional<ExecPolicy>(spec.exec) : std::nullopt;
      h = sub_r_rtl_ht(x, tree, ranks, node_samples, spec.oversampling, spec.base_seed, exec);
    }
    write_htucker(save_path, h);
    std::cerr << "saved hierarchical container to " << save_path << " ("
              << ht_storage_count(h) << " stored values vs " << x.size() << " dense)\n";
  }
  return kExitOk;
}

int cmd_bench(const std::string& generator, const std::string& shape_text,
              const std::string& input, const CommonOptions& opt, Index runs,
              const std::string& workers_list, const std::string& core,
              const std::string& format, const std::string& out_prefix, bool no_timings,
              bool mode_residuals) {
  ExperimentSpec spec;
  spec.generator = parse_generator(generator);
  if (spec.generator == GeneratorKind::kFile) {
    if (input.empty()) throw std::invalid_argument("bench: --in required with --generator file");
    spec.input_path = input;
  } else {
    spec.shape = parse_extents(shape_text, "--shape");
  }
  spec.core_kind = core == "smooth" ? CoreKind::kSmoothGrid : CoreKind::kUniform;
  spec.runs = runs;
  spec.timings = !no_timings;
  spec.mode_residuals = mode_residuals;
  apply_common(opt, spec);

  const bool csv_wanted = format == "csv" || format == "both";
  const bool json_wanted = format == "json" || format == "both";
  if (!csv_wanted && !json_wanted)
    throw std::invalid_argument("--format: expected csv, json, or both");

  std::vector<Index> workers;
  if (!workers_list.empty()) workers = parse_worker_list(workers_list);

  if (workers.size() > 1) {
    // Scaling grid: one report per worker count, plus a speedup table.
    std::vector<std::pair<Index, RunReport>> grid;
    std::ostringstream csv;
    for (std::size_t i = 0; i < workers.size(); ++i) {
      ExperimentSpec ws = spec;
      ws.use_exec = true;
      ws.exec.workers = workers[i];
      RunReport report = run_experiment(ws);
      if (csv_wanted) {
        std::ostringstream one;
        write_csv(report, one);
        const std::string text = one.str();
        if (i == 0) {
          csv << text;
        } else {
          csv << text.substr(text.find('\n') + 1);  // drop the repeated header
        }
      }
      grid.emplace_back(workers[i], std::move(report));
    }
    if (csv_wanted) write_text_file(out_prefix + ".csv", csv.str());
    std::ostringstream scaling;
    write_scaling_json(grid, scaling);
    write_text_file(out_prefix + "_scaling.json", scaling.str());
    if (json_wanted) {
      std::ostringstream summary;
      write_json_summary(grid.back().second, summary);
      write_text_file(out_prefix + ".json", summary.str());
    }
    std::cout << "wrote " << out_prefix << "_scaling.json\n";
    return kExitOk;
  }

  if (workers.size() == 1 && workers[0] > 0) {
    spec.use_exec = true;
    spec.exec.workers = workers[0];
  }
  RunReport report = run_experiment(spec);
  if (csv_wanted) {
    std::ostringstream os;
    write_csv(report, os);
    write_text_file(out_prefix + ".csv", os.str());
    std::cout << "wrote " << out_prefix << ".csv\n";
  }
  if (json_wanted) {
    std::ostringstream os;
    write_json_summary(report, os);
    write_text_file(out_prefix + ".json", os.str());
    std::cout << "wrote " << out_prefix << ".json\n";
  }
  return kExitOk;
}

int cmd_check(bool adversarial, std::uint64_t seed, const std::string& out_path) {
  const std::vector<CheckOutcome> outcomes = run_check_suite(adversarial, seed);
  std::ofstream file;
  std::ostream& os = output_stream(out_path, file);
  write_check_json(outcomes, os);
  bool all = true;
  for (const CheckOutcome& c : outcomes) {
    std::cerr << (c.pass ? "pass" : "FAIL") << "  " << c.name << ": " << c.detail << '\n';
    all = all && c.pass;
  }
  return all ? kExitOk : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subsampled randomized Tucker / hierarchical Tucker toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a planted low-rank tensor file");
  std::string gen_generator = "tucker-planted", gen_shape, gen_core = "uniform", gen_out;
  Index gen_rank = 5;
  std::uint64_t gen_seed = 1;
  gen->add_option("--generator", gen_generator, "tucker-planted | htucker-planted");
  gen->add_option("--shape", gen_shape, "extents, e.g. 15x15x15x15")->required();
  gen->add_option("--rank", gen_rank, "planted rank (uniform)");
  gen->add_option("--core", gen_core, "core entries: uniform | smooth");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output tensor file")->required();

  // tucker / htucker (single decomposition of a tensor file)
  auto* tucker_cmd = app.add_subcommand("tucker", "decompose a tensor file (Tucker family)");
  std::string tucker_in, tucker_out;
  CommonOptions tucker_opt;
  tucker_cmd->add_option("--in", tucker_in, "input tensor file")->required();
  tucker_cmd->add_option("--out", tucker_out, "summary JSON path (default stdout)");
  add_common_flags(tucker_cmd, tucker_opt, true);

  auto* ht_cmd = app.add_subcommand("htucker", "decompose a tensor file (hierarchical family)");
  std::string ht_in, ht_out, ht_save;
  CommonOptions ht_opt;
  ht_opt.method = "rtl-ht";
  ht_cmd->add_option("--in", ht_in, "input tensor file")->required();
  ht_cmd->add_option("--out", ht_out, "summary JSON path (default stdout)");
  ht_cmd->add_option("--save", ht_save, "write the decomposition container here");
  add_common_flags(ht_cmd, ht_opt, true);

  // bench
  auto* bench = app.add_subcommand("bench", "seeded experiment grid with CSV/JSON reports");
  std::string bench_generator = "tucker-planted", bench_shape, bench_in, bench_core = "uniform";
  std::string bench_workers, bench_format = "both", bench_out = "bench";
  Index bench_runs = 25;
  bool bench_no_timings = false, bench_mode_residuals = false;
  CommonOptions bench_opt;
  bench->add_option("--generator", bench_generator, "tucker-planted | htucker-planted | file");
  bench->add_option("--shape", bench_shape, "generator extents, e.g. 15x15x15x15");
  bench->add_option("--in", bench_in, "input tensor file for --generator file");
  bench->add_option("--core", bench_core, "planted core entries: uniform | smooth");
  bench->add_option("--runs", bench_runs, "number of seeded repetitions");
  bench->add_option("--workers-grid", bench_workers, "comma list for a scaling run, e.g. 1,2,4,8");
  bench->add_option("--format", bench_format, "csv | json | both");
  bench->add_option("--out", bench_out, "output path prefix");
  bench->add_flag("--no-timings", bench_no_timings, "zero timing columns for byte-stable output");
  bench->add_flag("--mode-residuals", bench_mode_residuals, "log per-mode projection residuals");
  add_common_flags(bench, bench_opt, true);

  // check
  auto* check = app.add_subcommand("check", "diagnostic preset suite");
  bool check_adversarial = false;
  std::uint64_t check_seed = 12345;
  std::string check_out;
  check->add_flag("--adversarial", check_adversarial,
                  "include the coherent counterexample (expected failure)");
  check->add_option("--seed", check_seed, "suite seed");
  check->add_option("--out", check_out, "report JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    std::cerr << "{\"error\":\"argument\",\"reason\":\"" << e.what() << "\"}\n";
    return kExitArgument;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_generator, gen_shape, gen_rank, gen_core, gen_seed, gen_out);
    if (tucker_cmd->parsed()) {
      if (method_is_hierarchical(parse_method(tucker_opt.method)))
        throw std::invalid_argument("tucker: use the htucker subcommand for rtl-ht methods");
      return run_single(GeneratorKind::kTuckerPlanted, tucker_in, tucker_opt, tucker_out, "");
    }
    if (ht_cmd->parsed()) {
      if (!method_is_hierarchical(parse_method(ht_opt.method)))
        throw std::invalid_argument("htucker: method must be rtl-ht or sub-r-rtl-ht");
      return run_single(GeneratorKind::kHTuckerPlanted, ht_in, ht_opt, ht_out, ht_save);
    }
    if (bench->parsed())
      return cmd_bench(bench_generator, bench_shape, bench_in, bench_opt, bench_runs,
                       bench_workers, bench_core, bench_format, bench_out, bench_no_timings,
                       bench_mode_residuals);
    if (check->parsed()) return cmd_check(check_adversarial, check_seed, check_out);
  } catch (const ResourceError& e) {
    std::cerr << "{\"error\":\"resource\",\"reason\":\"" << e.what() << "\"}\n";
    return kExitResource;
  } catch (const IoError& e) {
    std::cerr << "{\"error\":\"io\",\"reason\":\"" << e.what() << "\"}\n";
    return kExitIo;
  } catch (const CheckFailure& e) {
    std::cerr << "{\"error\":\"check\",\"reason\":\"" << e.what() << "\"}\n";
    return kExitCheck;
  } catch (const std::invalid_argument& e) {
    std::cerr << "{\"error\":\"argument\",\"reason\":\"" << e.what() << "\"}\n";
    return kExitArgument;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"internal\",\"reason\":\"" << e.what() << "\"}\n";
    return 1;
  }
  return kExitOk;
}
