// whdet: verify Toeplitz / Fredholm determinant identities over a symbol
// corpus, factor symbols, and print section determinants.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "whdet/whdet.hpp"

namespace {

whdet::json read_json_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return whdet::json::parse(buf.str());
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  whdet::json j;
  in >> j;
  return j;
}

std::optional<std::uint64_t> seed_override_from_env() {
  const char* env = std::getenv("WHDET_SEED");
  if (!env || !*env) return std::nullopt;
  return std::strtoull(env, nullptr, 10);
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  out << text << '\n';
}

int cmd_verify(const std::string& corpus_path, bool use_default, double tol_override,
               bool has_tol, const std::string& csv_path, int jobs,
               const std::string& report_path) {
  whdet::json cj = use_default ? whdet::default_corpus() : read_json_input(corpus_path);
  whdet::CorpusSpec spec = whdet::parse_corpus(cj);
  if (has_tol) spec.tol = tol_override;
  if (auto seed = seed_override_from_env()) spec.seed = *seed;

  const whdet::RunReport rep = whdet::run(spec, jobs);
  write_output(whdet::run_report_to_json(rep).dump(2), report_path);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << whdet::run_report_to_csv(rep);
  }
  std::cerr << "pass=" << rep.summary.pass << " fail=" << rep.summary.fail
            << " error=" << rep.summary.error << " (" << rep.total_ms << " ms)\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_factor(const std::string& symbol_path, const std::string& method) {
  const whdet::json sj = read_json_input(symbol_path);
  const whdet::Symbol a = whdet::symbol_from_json(sj, 0);
  whdet::FactorizationOptions opt;
  opt.force_block_method = method == "block";
  try {
    const whdet::Factorization f = whdet::factorize_with_bc(a, opt);
    whdet::json out;
    out["u_minus"] = whdet::symbol_to_json(f.u_minus);
    out["u_plus"] = whdet::symbol_to_json(f.u_plus);
    out["v_plus"] = whdet::symbol_to_json(f.v_plus);
    out["v_minus"] = whdet::symbol_to_json(f.v_minus);
    out["b"] = whdet::symbol_to_json(f.b);
    out["c"] = whdet::symbol_to_json(f.c);
    out["residuals"] = whdet::json{{"right", f.residual_right},
                                   {"left", f.residual_left},
                                   {"bc", f.residual_bc},
                                   {"analyticity", f.analyticity_defect}};
    std::cout << out.dump(2) << '\n';
    return 0;
  } catch (const whdet::NonzeroWinding& e) {
    long w = 0;
    try {
      w = a.block_size() == 1 ? whdet::winding_number(a) : 0;
    } catch (const whdet::Error&) {
    }
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n"
              << "hint: the symbol has winding number " << w
              << "; split off the monomial factor t^" << w
              << " (split_winding) before factoring.\n";
    return 1;
  } catch (const whdet::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return 1;
  }
}

int cmd_det(const std::string& symbol_path, long n, double tol) {
  const whdet::json sj = read_json_input(symbol_path);
  whdet::Symbol a = whdet::symbol_from_json(sj, 0);
  try {
    whdet::SymbolContext ctx("symbol", a);
    const whdet::Complex direct = whdet::det_finite(whdet::toeplitz_finite(a, n));
    const auto rep = whdet::check_bo(ctx, n, tol);
    whdet::json out;
    out["n"] = n;
    out["direct"] = whdet::complex_to_json(direct);
    out["identity_rhs"] = whdet::complex_to_json(rep.rhs);
    out["abs_err"] = rep.abs_err;
    out["rel_err"] = rep.rel_err;
    out["pass"] = rep.pass;
    if (!rep.error.empty()) out["error"] = rep.error;
    std::cout << out.dump(2) << '\n';
    return rep.pass ? 0 : 1;
  } catch (const whdet::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for Toeplitz and Fredholm determinant identities"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "run identity checks over a corpus");
  std::string corpus_path;
  bool use_default = false;
  double tol = 1e-7;
  std::string csv_path, report_path;
  int jobs = 1;
  verify->add_option("--corpus", corpus_path, "corpus JSON file ('-' for stdin)");
  verify->add_flag("--default-corpus", use_default, "use the built-in corpus");
  auto* tol_opt = verify->add_option("--tol", tol, "override the corpus tolerance");
  verify->add_option("--csv", csv_path, "also write a flattened CSV report");
  verify->add_option("--jobs", jobs, "worker threads over independent cells")
      ->check(CLI::PositiveNumber);
  verify->add_option("--out", report_path, "write the JSON report here instead of stdout");

  auto* factor = app.add_subcommand("factor", "factor one symbol and print the factors");
  std::string factor_symbol;
  std::string method = "auto";
  factor->add_option("--symbol", factor_symbol, "symbol JSON file ('-' for stdin)")
      ->required();
  factor->add_option("--method", method, "auto | scalar | block")
      ->check(CLI::IsMember({"auto", "scalar", "block"}));

  auto* det = app.add_subcommand("det", "print det T_n(a) directly and via the identity");
  std::string det_symbol;
  long det_n = 1;
  double det_tol = 1e-9;
  det->add_option("--symbol", det_symbol, "symbol JSON file ('-' for stdin)")->required();
  det->add_option("--n", det_n, "section size")->required();
  det->add_option("--tol", det_tol, "comparison tolerance");

  auto* corpus = app.add_subcommand("corpus", "emit a corpus JSON for editing");
  bool corpus_default = false;
  std::string corpus_out;
  corpus->add_flag("--default", corpus_default, "emit the built-in default corpus");
  corpus->add_option("--out", corpus_out, "write to file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      if (!use_default && corpus_path.empty()) {
        std::cerr << "error: give --corpus FILE or --default-corpus\n";
        return 2;
      }
      return cmd_verify(corpus_path, use_default, tol, !tol_opt->empty(), csv_path,
                        jobs, report_path);
    }
    if (factor->parsed()) return cmd_factor(factor_symbol, method);
    if (det->parsed()) return cmd_det(det_symbol, det_n, det_tol);
    if (corpus->parsed()) {
      if (!corpus_default) {
        std::cerr << "error: only --default is available\n";
        return 2;
      }
      write_output(whdet::default_corpus().dump(2), corpus_out);
      return 0;
    }
  } catch (const whdet::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
