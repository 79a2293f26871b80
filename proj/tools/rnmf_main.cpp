// rnmf command line: generate synthetic low-rank data, fit NMF models with the
// deterministic or randomized HALS solver, and benchmark the two against each
// other. Every output file gets a <file>.manifest with the full option set so
// the run can be reproduced from the manifest alone.

#include "rnmf/data_io.hpp"
#include "rnmf/hals.hpp"
#include "rnmf/rhals.hpp"
#include "rnmf/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace {

using rnmf::Index;
using rnmf::Matrix;

using ManifestEntries = std::vector<std::pair<std::string, std::string>>;

std::string iso8601_utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw rnmf::IoError("cannot open '" + path + "' for digest");
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (true) {
    f.read(buf, sizeof(buf));
    const std::streamsize got = f.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_manifest(const std::string& path, const ManifestEntries& entries) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw rnmf::IoError("cannot open '" + path + "' for writing");
  for (const auto& [key, value] : entries) f << key << '=' << value << '\n';
  if (!f) throw rnmf::IoError("short write to '" + path + "'");
}

void write_trace_csv(const std::string& path, const rnmf::ConvergenceTrace& trace) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw rnmf::IoError("cannot open '" + path + "' for writing");
  f << "iter,elapsed_s,objective,rel_err,pgrad\n";
  char buf[192];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.iter), r.elapsed_s, r.objective, r.rel_err, r.pgrad);
    f << buf;
  }
  if (!f) throw rnmf::IoError("short write to '" + path + "'");
}

rnmf::InitScheme parse_init(const std::string& s) {
  return s == "svd" ? rnmf::InitScheme::Svd : rnmf::InitScheme::Random;
}

rnmf::UpdateOrder parse_order(const std::string& s) {
  if (s == "interleaved") return rnmf::UpdateOrder::Interleaved;
  if (s == "shuffled") return rnmf::UpdateOrder::Shuffled;
  return rnmf::UpdateOrder::Grouped;
}

struct SynthArgs {
  Index rows = 0;
  Index cols = 0;
  Index rank = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const std::string started = iso8601_utc_now();
  const Matrix x = rnmf::synth_lowrank(a.rows, a.cols, a.rank, a.noise, a.seed);
  rnmf::write_matrix(a.out, x, rnmf::MatrixFormat::Bin);
  write_manifest(a.out + ".manifest",
                 {{"command", "synth"},
                  {"rows", std::to_string(a.rows)},
                  {"cols", std::to_string(a.cols)},
                  {"rank", std::to_string(a.rank)},
                  {"noise", format_double(a.noise)},
                  {"seed", std::to_string(a.seed)},
                  {"out", a.out},
                  {"input_digest", "-"},
                  {"started_at", started},
                  {"version", std::string(rnmf::kVersion)}});
  return 0;
}

struct FitArgs {
  std::string input;
  Index rank = 0;
  std::string method = "hals";
  Index oversample = 20;
  Index power = 2;
  Index max_iter = 200;
  double tol = 1e-4;
  std::string init = "random";
  std::string order = "grouped";
  double alpha_w = 0.0;
  double alpha_h = 0.0;
  double beta_w = 0.0;
  double beta_h = 0.0;
  std::uint64_t seed = 0;
  std::string out_w;
  std::string out_h;
  std::string trace;
};

rnmf::SolverOptions solver_options(const FitArgs& a) {
  rnmf::SolverOptions opts;
  opts.rank = a.rank;
  opts.max_iter = a.max_iter;
  opts.tol = a.tol;
  opts.init = parse_init(a.init);
  opts.order = parse_order(a.order);
  opts.reg = {a.alpha_w, a.alpha_h, a.beta_w, a.beta_h};
  opts.seed = a.seed;
  opts.oversampling = a.oversample;
  opts.power_iterations = a.power;
  return opts;
}

ManifestEntries fit_manifest(const FitArgs& a, const std::string& started) {
  return {{"command", "fit"},
          {"input", a.input},
          {"rank", std::to_string(a.rank)},
          {"method", a.method},
          {"oversample", std::to_string(a.oversample)},
          {"power", std::to_string(a.power)},
          {"max_iter", std::to_string(a.max_iter)},
          {"tol", format_double(a.tol)},
          {"init", a.init},
          {"order", a.order},
          {"alpha_w", format_double(a.alpha_w)},
          {"alpha_h", format_double(a.alpha_h)},
          {"beta_w", format_double(a.beta_w)},
          {"beta_h", format_double(a.beta_h)},
          {"seed", std::to_string(a.seed)},
          {"out_w", a.out_w},
          {"out_h", a.out_h},
          {"trace", a.trace},
          {"input_digest", hex64(fnv1a64_file(a.input))},
          {"started_at", started},
          {"version", std::string(rnmf::kVersion)}};
}

int run_fit(const FitArgs& a) {
  const std::string started = iso8601_utc_now();
  const Matrix x = rnmf::read_matrix(a.input, rnmf::format_from_extension(a.input));
  const rnmf::SolverOptions opts = solver_options(a);

  const rnmf::FitResult res =
      a.method == "rhals" ? rnmf::rhals_fit(x, opts) : rnmf::hals_fit(x, opts);

  const ManifestEntries manifest = fit_manifest(a, started);
  rnmf::write_matrix(a.out_w, res.factors.w, rnmf::format_from_extension(a.out_w));
  write_manifest(a.out_w + ".manifest", manifest);
  rnmf::write_matrix(a.out_h, res.factors.h, rnmf::format_from_extension(a.out_h));
  write_manifest(a.out_h + ".manifest", manifest);
  if (!a.trace.empty()) {
    write_trace_csv(a.trace, res.trace);
    write_manifest(a.trace + ".manifest", manifest);
  }

  const auto& last = res.trace.back();
  std::cout << "fit: method=" << a.method << " iters=" << last.iter
            << " rel_err=" << format_double(last.rel_err)
            << " elapsed_s=" << format_double(last.elapsed_s) << "\n";
  return 0;
}

struct BenchArgs {
  std::string input;
  Index rank = 0;
  std::string methods = "hals,rhals";
  Index repeat = 3;
  std::string out;
  Index max_iter = 200;
  double tol = 1e-4;
  std::string init = "random";
  std::string order = "grouped";
  Index oversample = 20;
  Index power = 2;
  std::uint64_t seed = 0;
};

std::vector<std::string> split_methods(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string item =
        csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (item != "hals" && item != "rhals") {
      throw rnmf::ParameterError("unknown method '" + item + "' (expected hals or rhals)");
    }
    out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int run_bench(const BenchArgs& a) {
  const std::string started = iso8601_utc_now();
  if (a.repeat < 1) throw rnmf::ParameterError("--repeat must be at least 1");
  const std::vector<std::string> methods = split_methods(a.methods);
  const Matrix x = rnmf::read_matrix(a.input, rnmf::format_from_extension(a.input));

  FitArgs base;
  base.rank = a.rank;
  base.max_iter = a.max_iter;
  base.tol = a.tol;
  base.init = a.init;
  base.order = a.order;
  base.oversample = a.oversample;
  base.power = a.power;
  base.seed = a.seed;
  const rnmf::SolverOptions opts = solver_options(base);

  struct Row {
    std::string method;
    double mean_time_s = 0.0;
    Index iterations = 0;
    double rel_err = 0.0;
  };
  std::vector<Row> rows;
  double hals_mean = 0.0;
  bool have_hals = false;

  for (const std::string& method : methods) {
    double total = 0.0;
    rnmf::FitResult res;
    for (Index rep = 0; rep < a.repeat; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      res = method == "rhals" ? rnmf::rhals_fit(x, opts) : rnmf::hals_fit(x, opts);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    Row row;
    row.method = method;
    row.mean_time_s = total / static_cast<double>(a.repeat);
    row.iterations = res.trace.back().iter;
    row.rel_err = res.trace.back().rel_err;
    rows.push_back(row);
    if (method == "hals") {
      hals_mean = row.mean_time_s;
      have_hals = true;
    }
  }

  std::ofstream f(a.out, std::ios::trunc);
  if (!f) throw rnmf::IoError("cannot open '" + a.out + "' for writing");
  f << "method,mean_time_s,speedup_vs_hals,iterations,rel_err\n";
  for (const Row& row : rows) {
    f << row.method << ',' << format_double(row.mean_time_s) << ',';
    if (have_hals) f << format_double(hals_mean / row.mean_time_s);
    f << ',' << row.iterations << ',' << format_double(row.rel_err) << '\n';
  }
  f.close();

  write_manifest(a.out + ".manifest",
                 {{"command", "bench"},
                  {"input", a.input},
                  {"rank", std::to_string(a.rank)},
                  {"methods", a.methods},
                  {"repeat", std::to_string(a.repeat)},
                  {"max_iter", std::to_string(a.max_iter)},
                  {"tol", format_double(a.tol)},
                  {"init", a.init},
                  {"order", a.order},
                  {"oversample", std::to_string(a.oversample)},
                  {"power", std::to_string(a.power)},
                  {"seed", std::to_string(a.seed)},
                  {"out", a.out},
                  {"input_digest", hex64(fnv1a64_file(a.input))},
                  {"started_at", started},
                  {"version", std::string(rnmf::kVersion)}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized and deterministic HALS nonnegative matrix factorization"};
  app.set_version_flag("--version", std::string(rnmf::kVersion));
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a nonnegative low-rank matrix");
  synth_cmd->add_option("--rows", synth.rows)->required();
  synth_cmd->add_option("--cols", synth.cols)->required();
  synth_cmd->add_option("--rank", synth.rank)->required();
  synth_cmd->add_option("--noise", synth.noise);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--out", synth.out, "output .bin path")->required();

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "factorize a nonnegative matrix");
  fit_cmd->add_option("--input", fit.input)->required();
  fit_cmd->add_option("--rank", fit.rank)->required();
  fit_cmd->add_option("--method", fit.method)->check(CLI::IsMember({"hals", "rhals"}));
  fit_cmd->add_option("--oversample", fit.oversample);
  fit_cmd->add_option("--power", fit.power);
  fit_cmd->add_option("--max-iter", fit.max_iter);
  fit_cmd->add_option("--tol", fit.tol);
  fit_cmd->add_option("--init", fit.init)->check(CLI::IsMember({"random", "svd"}));
  fit_cmd->add_option("--order", fit.order)
      ->check(CLI::IsMember({"interleaved", "grouped", "shuffled"}));
  fit_cmd->add_option("--alpha-w", fit.alpha_w);
  fit_cmd->add_option("--alpha-h", fit.alpha_h);
  fit_cmd->add_option("--beta-w", fit.beta_w);
  fit_cmd->add_option("--beta-h", fit.beta_h);
  fit_cmd->add_option("--seed", fit.seed);
  fit_cmd->add_option("--out-w", fit.out_w, "W output, .csv or .bin")->required();
  fit_cmd->add_option("--out-h", fit.out_h, "H output, .csv or .bin")->required();
  fit_cmd->add_option("--trace", fit.trace, "convergence trace CSV");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time solvers against each other");
  bench_cmd->add_option("--input", bench.input)->required();
  bench_cmd->add_option("--rank", bench.rank)->required();
  bench_cmd->add_option("--methods", bench.methods, "comma-separated, e.g. hals,rhals");
  bench_cmd->add_option("--repeat", bench.repeat);
  bench_cmd->add_option("--max-iter", bench.max_iter);
  bench_cmd->add_option("--tol", bench.tol);
  bench_cmd->add_option("--init", bench.init)->check(CLI::IsMember({"random", "svd"}));
  bench_cmd->add_option("--order", bench.order)
      ->check(CLI::IsMember({"interleaved", "grouped", "shuffled"}));
  bench_cmd->add_option("--oversample", bench.oversample);
  bench_cmd->add_option("--power", bench.power);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--out", bench.out, "summary CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (fit_cmd->parsed()) return run_fit(fit);
    return run_bench(bench);
  } catch (const rnmf::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rnmf::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
