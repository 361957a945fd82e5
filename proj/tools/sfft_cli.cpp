// sfft: generate sparse-spectrum instances, run recovery algorithms, verify
// against the dense FFT and benchmark sample counts.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sfft/bench.hpp"

using namespace sfft;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text << '\n';
}

std::vector<std::uint64_t> parse_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
  if (out.empty()) throw std::domain_error("empty list");
  return out;
}

RipMode parse_rip(const std::string& s) {
  if (s == "theory") return RipMode::Theory;
  if (s == "practical") return RipMode::Practical;
  throw std::domain_error("unknown RIP mode: " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse FFT over [n]^d: generate, run, verify, bench"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a k-sparse spectrum instance");
  std::string cls = "comb", out_path = "-";
  std::int64_t n = 64, d = 2;
  std::uint64_t k = 16, seed = 0, noise_seed = 0;
  double mu = 0;
  gen->add_option("--class", cls, "signal class")->check(CLI::IsMember(signal_classes()));
  gen->add_option("--n", n, "side length (power of two)");
  gen->add_option("--d", d, "dimension");
  gen->add_option("--k", k, "sparsity");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--mu", mu, "tail norm of the high-SNR noise (0: exactly sparse)");
  gen->add_option("--noise-seed", noise_seed, "noise seed");
  gen->add_option("-o,--out", out_path, "output JSON path");

  // run
  auto* run = app.add_subcommand("run", "run a recovery algorithm on an instance");
  std::string algo = "exact", in_path, rip = "practical";
  std::optional<double> run_mu;
  double eps = 0.1, alpha = 0;
  std::uint64_t run_seed = 0;
  std::string report_out = "-";
  run->add_option("--algo", algo, "exact|slow|robust|recursive")
      ->check(CLI::IsMember({"exact", "slow", "robust", "recursive"}));
  run->add_option("--in", in_path, "instance JSON")->required();
  run->add_option("--mu", run_mu, "tail bound (default: instance mu)");
  run->add_option("--eps", eps, "target accuracy for robust algorithms");
  run->add_option("--rip", rip, "theory|practical")->check(CLI::IsMember({"theory", "practical"}));
  run->add_option("--seed", run_seed, "algorithm seed");
  run->add_option("--alpha", alpha, "budget shrink factor (0: default)");
  run->add_option("-o,--out", report_out, "report JSON path");

  // verify
  auto* ver = app.add_subcommand("verify", "score a report against the dense FFT");
  std::string ver_in, ver_report, ver_out = "-";
  ver->add_option("--in", ver_in, "instance JSON")->required();
  ver->add_option("--report", ver_report, "report JSON")->required();
  ver->add_option("-o,--out", ver_out, "verified report path");

  // bench
  auto* bench = app.add_subcommand("bench", "run trials over a list of sparsities");
  std::string b_algo = "exact", b_cls = "random", k_list = "8,16,32", csv_path = "-", agg_path;
  std::int64_t b_n = 256, b_d = 1;
  std::uint64_t trials = 10, seed_base = 0;
  double b_mu = 0, b_eps = 0.1, b_alpha = 0;
  std::string b_rip = "practical";
  bench->add_option("--algo", b_algo, "exact|slow|robust|recursive")
      ->check(CLI::IsMember({"exact", "slow", "robust", "recursive"}));
  bench->add_option("--class", b_cls, "signal class")->check(CLI::IsMember(signal_classes()));
  bench->add_option("--k-list", k_list, "comma separated sparsities");
  bench->add_option("--n", b_n, "side length");
  bench->add_option("--d", b_d, "dimension");
  bench->add_option("--trials", trials, "trials per k");
  bench->add_option("--seed-base", seed_base, "first seed");
  bench->add_option("--mu", b_mu, "tail norm (0: exactly sparse)");
  bench->add_option("--eps", b_eps, "target accuracy");
  bench->add_option("--alpha", b_alpha, "budget shrink factor (0: default)");
  bench->add_option("--rip", b_rip, "theory|practical")->check(CLI::IsMember({"theory", "practical"}));
  bench->add_option("--csv", csv_path, "CSV output path");
  bench->add_option("--aggregate", agg_path, "aggregate JSON path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Instance inst = make_instance(cls, n, d, k, seed, mu, noise_seed);
      write_text(out_path, instance_to_json(inst).dump(2));
      return 0;
    }
    if (*run) {
      const Instance inst = instance_from_json(read_json(in_path));
      RunOptions opt;
      opt.algo = parse_algo(algo);
      opt.mu = run_mu;
      opt.eps = eps;
      opt.rip = parse_rip(rip);
      opt.seed = run_seed;
      opt.alpha = alpha;
      write_text(report_out, report_to_json(run_instance(inst, opt)).dump(2));
      return 0;
    }
    if (*ver) {
      const Instance inst = instance_from_json(read_json(ver_in));
      RunReport rep = report_from_json(read_json(ver_report), inst);
      verify_report(rep);
      write_text(ver_out, report_to_json(rep).dump(2));
      return 0;
    }
    if (*bench) {
      std::ostringstream csv;
      csv << kCsvHeader << '\n';
      std::vector<BenchPoint> pts;
      bool all_done = true;
      for (std::uint64_t kk : parse_list(k_list)) {
        BenchPoint p{kk, {}};
        for (std::uint64_t t = 0; t < trials; ++t) {
          const std::uint64_t s = seed_base + t;
          RunOptions opt;
          opt.algo = parse_algo(b_algo);
          opt.eps = b_eps;
          opt.rip = parse_rip(b_rip);
          opt.seed = s;
          opt.alpha = b_alpha;
          RunReport rep;
          rep.opt = opt;
          rep.instance.dims = Dims::make(b_n, b_d);
          rep.instance.cls = b_cls;
          rep.instance.k = kk;
          rep.instance.seed = s;
          try {
            const Instance inst = make_instance(b_cls, b_n, b_d, kk, s, b_mu, mix_seed(s, 1));
            rep = run_instance(inst, opt);
            if (inst.dims.N <= kVerifyMaxN) verify_report(rep);
          } catch (const std::exception& e) {
            std::cerr << "trial k=" << kk << " seed=" << s << " failed: " << e.what() << '\n';
            rep.completed = false;
            all_done = false;
          }
          csv << csv_row(rep, t) << '\n';
          p.runs.push_back(std::move(rep));
        }
        pts.push_back(std::move(p));
      }
      std::string text = csv.str();
      text.pop_back();
      write_text(csv_path, text);
      json agg = aggregate_json(pts);
      agg["algo"] = b_algo;
      agg["class"] = b_cls;
      agg["n"] = b_n;
      agg["d"] = b_d;
      write_text(agg_path.empty() ? "-" : agg_path, agg.dump(2));
      return all_done ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
