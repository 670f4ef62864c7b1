#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "whdet/identities.hpp"
#include "whdet/rng.hpp"
#include "whdet/symbol.hpp"

namespace whdet {

using json = nlohmann::json;

// --- JSON atoms -------------------------------------------------------------

inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return Complex{j.get<double>(), 0.0};
  return Complex{j.value("re", 0.0), j.value("im", 0.0)};
}

inline json complex_to_json(const Complex& z) {
  return json{{"re", z.real()}, {"im", z.imag()}};
}

inline json symbol_to_json(const Symbol& a) {
  json coeffs = json::array();
  for (long k = a.k_min(); !a.is_zero() && k <= a.k_max(); ++k) {
    const CMatrix& m = a.stored(k);
    json re = json::array(), im = json::array();
    for (int r = 0; r < a.block_size(); ++r) {
      json re_row = json::array(), im_row = json::array();
      for (int c = 0; c < a.block_size(); ++c) {
        re_row.push_back(m(r, c).real());
        im_row.push_back(m(r, c).imag());
      }
      re.push_back(re_row);
      im.push_back(im_row);
    }
    coeffs.push_back(json{{"k", k}, {"re", re}, {"im", im}});
  }
  return json{{"block_size", a.block_size()}, {"coeffs", coeffs}};
}

// --- Symbol builders ---------------------------------------------------------
//
//   {"block_size": N, "coeffs": [{"k": int, "re": [[...]], "im": [[...]]}]}
//   {"builder": "rational_pair", "alpha": c, "beta": c}      (1-at)(1-b/t)
//   {"builder": "monomial", "w": int}                        t^w
//   {"builder": "random_decay", "seed": u64, "block_size": N,
//    "radius": r, "halfwidth": D}         coefficients scaled by r^{|k|}
//   {"builder": "conjugated_diagonal", "seed": u64,
//    "entries": [scalar builders...]}     V diag(entries) V^{-1}
//   {"builder": "product", "factors": [builders...]}

inline Symbol rational_pair_symbol(Complex alpha, Complex beta,
                                   double drop = kDefaultDropThreshold) {
  std::vector<CMatrix> c{CMatrix::Constant(1, 1, -beta),
                         CMatrix::Constant(1, 1, Complex{1.0, 0.0} + alpha * beta),
                         CMatrix::Constant(1, 1, -alpha)};
  return Symbol(1, -1, std::move(c), drop);
}

/// Seeded random symbol: coefficients on |k| <= halfwidth scaled by
/// radius^{|k|}, normalized so the whole perturbation of the identity has
/// Wiener norm 0.45. This keeps every draw invertible with winding zero and
/// factorizable on both sides.
inline Symbol random_decay_symbol(std::uint64_t seed, int block, double radius,
                                  long halfwidth, double drop = kDefaultDropThreshold) {
  DeterministicRng rng(seed);
  std::vector<CMatrix> raw;
  for (long k = -halfwidth; k <= halfwidth; ++k) {
    CMatrix m(block, block);
    for (int r = 0; r < block; ++r)
      for (int c = 0; c < block; ++c) m(r, c) = rng.complex_in_square();
    raw.push_back(std::pow(radius, static_cast<double>(std::labs(k))) * m);
  }
  double mass = 0.0;
  for (const auto& m : raw) mass += spectral_norm(m);
  const double scale = mass > 0.0 ? 0.45 / mass : 0.0;
  for (auto& m : raw) m *= scale;
  raw[static_cast<std::size_t>(halfwidth)] += CMatrix::Identity(block, block);
  return Symbol(block, -halfwidth, std::move(raw), drop);
}

/// Fixed invertible conjugation matrix derived from the seed.
inline CMatrix conjugation_matrix(std::uint64_t seed, int block) {
  DeterministicRng rng(seed);
  CMatrix v = CMatrix::Identity(block, block);
  for (int r = 0; r < block; ++r)
    for (int c = 0; c < block; ++c) v(r, c) += 0.35 * rng.complex_in_square();
  return v;
}

inline Symbol conjugated_diagonal_symbol(std::uint64_t seed,
                                         const std::vector<Symbol>& entries,
                                         double drop = kDefaultDropThreshold) {
  const int block = static_cast<int>(entries.size());
  if (block < 1) throw ConstraintViolated("conjugated_diagonal needs at least one entry");
  for (const auto& e : entries)
    if (e.block_size() != 1)
      throw BlockSizeMismatch("conjugated_diagonal entries must be scalar symbols");
  const CMatrix v = conjugation_matrix(seed, block);
  const CMatrix vinv = v.inverse();
  long lo = 0, hi = 0;
  for (const auto& e : entries) {
    if (e.is_zero()) continue;
    lo = std::min(lo, e.k_min());
    hi = std::max(hi, e.k_max());
  }
  std::vector<CMatrix> coeffs;
  for (long k = lo; k <= hi; ++k) {
    CMatrix d = CMatrix::Zero(block, block);
    for (int i = 0; i < block; ++i) d(i, i) = entries[static_cast<std::size_t>(i)].coeff(k)(0, 0);
    coeffs.push_back(v * d * vinv);
  }
  return Symbol(block, lo, std::move(coeffs), drop);
}

inline Symbol symbol_from_json(const json& j, std::uint64_t default_seed,
                               double drop = kDefaultDropThreshold) {
  if (j.contains("builder")) {
    const std::string b = j.at("builder").get<std::string>();
    if (b == "rational_pair")
      return rational_pair_symbol(complex_from_json(j.at("alpha")),
                                  complex_from_json(j.at("beta")), drop);
    if (b == "monomial") return Symbol::monomial(j.at("w").get<long>(), 1, drop);
    if (b == "random_decay")
      return random_decay_symbol(j.value("seed", default_seed),
                                 j.value("block_size", 1), j.at("radius").get<double>(),
                                 j.at("halfwidth").get<long>(), drop);
    if (b == "conjugated_diagonal") {
      std::vector<Symbol> entries;
      for (const auto& e : j.at("entries"))
        entries.push_back(symbol_from_json(e, default_seed, drop));
      return conjugated_diagonal_symbol(j.value("seed", default_seed), entries, drop);
    }
    if (b == "product") {
      std::vector<Symbol> factors;
      for (const auto& e : j.at("factors"))
        factors.push_back(symbol_from_json(e, default_seed, drop));
      if (factors.empty()) throw ConstraintViolated("product builder needs factors");
      Symbol r = factors[0];
      for (std::size_t i = 1; i < factors.size(); ++i) r = multiply(r, factors[i]);
      return r;
    }
    throw ConstraintViolated("unknown symbol builder '" + b + "'");
  }
  const int block = j.at("block_size").get<int>();
  long lo = 0, hi = -1;
  std::map<long, CMatrix> entries;
  for (const auto& cj : j.at("coeffs")) {
    const long k = cj.at("k").get<long>();
    CMatrix m = CMatrix::Zero(block, block);
    const auto& re = cj.at("re");
    for (int r = 0; r < block; ++r)
      for (int c = 0; c < block; ++c) {
        double im = 0.0;
        if (cj.contains("im")) im = cj.at("im").at(r).at(c).get<double>();
        m(r, c) = Complex{re.at(r).at(c).get<double>(), im};
      }
    entries[k] = std::move(m);
    lo = entries.begin()->first;
    hi = entries.rbegin()->first;
  }
  if (entries.empty()) return Symbol::zero(block, drop);
  std::vector<CMatrix> coeffs;
  for (long k = lo; k <= hi; ++k) {
    auto it = entries.find(k);
    coeffs.push_back(it == entries.end() ? CMatrix::Zero(block, block) : it->second);
  }
  return Symbol(block, lo, std::move(coeffs), drop);
}

// --- Corpus spec -------------------------------------------------------------

struct CorpusSpec {
  std::uint64_t seed = 0;
  double tol = 1e-7;
  NumericPolicy policy{};
  std::vector<std::pair<std::string, json>> symbols;  // in file order
  std::vector<json> identities;                       // in file order
};

inline CorpusSpec parse_corpus(const json& j) {
  CorpusSpec spec;
  spec.seed = j.value("seed", 0ULL);
  spec.tol = j.value("tol", 1e-7);
  spec.policy.drop_threshold = j.value("drop_threshold", kDefaultDropThreshold);
  if (j.contains("dim_cap")) spec.policy.dim_cap = j.at("dim_cap").get<long>();
  if (j.contains("grid_cap")) spec.policy.grid_cap = j.at("grid_cap").get<long>();
  for (const auto& s : j.value("symbols", json::array())) {
    const std::string name = s.at("name").get<std::string>();
    json def = s;
    def.erase("name");
    spec.symbols.emplace_back(name, def);
  }
  for (const auto& id : j.value("identities", json::array())) spec.identities.push_back(id);
  return spec;
}

// --- Run reports -------------------------------------------------------------

struct RunSummary {
  int pass = 0;
  int fail = 0;
  int error = 0;
};

struct RunReport {
  double tol = 1e-7;
  std::uint64_t seed = 0;
  NumericPolicy policy{};
  std::vector<IdentityReport> checks;
  std::vector<double> wall_ms;  // parallel to checks
  double total_ms = 0.0;
  RunSummary summary;
  bool all_pass() const { return summary.fail == 0 && summary.error == 0; }
};

inline json report_to_json(const IdentityReport& r) {
  json j;
  j["id"] = std::string(to_string(r.id));
  j["symbol"] = r.symbol_name;
  j["n"] = r.params.n;
  j["s"] = complex_to_json(r.params.s);
  if (!r.params.n_list.empty()) j["n_list"] = r.params.n_list;
  if (!r.params.s_list.empty()) {
    json sl = json::array();
    for (const auto& s : r.params.s_list) sl.push_back(complex_to_json(s));
    j["s_list"] = sl;
  }
  j["tol"] = r.params.tol;
  j["lhs"] = complex_to_json(r.lhs);
  j["rhs"] = complex_to_json(r.rhs);
  j["abs_err"] = r.abs_err;
  j["rel_err"] = r.rel_err;
  j["pass"] = r.pass;
  if (!r.error.empty()) j["error"] = r.error;
  j["window"] = json{{"lo", r.window.lo}, {"hi", r.window.hi}};
  j["residuals"] = json{{"right", r.residual_right},
                        {"left", r.residual_left},
                        {"bc", r.residual_bc}};
  return j;
}

inline json run_report_to_json(const RunReport& r, bool include_timing = true) {
  json j;
  j["environment"] = json{{"tol", r.tol},
                          {"seed", r.seed},
                          {"drop_threshold", r.policy.drop_threshold},
                          {"dim_cap", r.policy.dim_cap},
                          {"grid_cap", r.policy.grid_cap},
                          {"cond_cap", r.policy.cond_cap}};
  j["summary"] = json{{"pass", r.summary.pass},
                      {"fail", r.summary.fail},
                      {"error", r.summary.error}};
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(report_to_json(c));
  j["checks"] = checks;
  if (include_timing)
    j["timing"] = json{{"total_ms", r.total_ms}, {"per_check_ms", r.wall_ms}};
  return j;
}

inline std::string run_report_to_csv(const RunReport& r) {
  std::ostringstream out;
  out << "id,symbol,n,s_re,s_im,n_list,s_list,lhs_re,lhs_im,rhs_re,rhs_im,"
         "abs_err,rel_err,pass,error\n";
  out.precision(17);
  for (const auto& c : r.checks) {
    out << to_string(c.id) << ',' << c.symbol_name << ',' << c.params.n << ','
        << c.params.s.real() << ',' << c.params.s.imag() << ',';
    for (std::size_t i = 0; i < c.params.n_list.size(); ++i)
      out << (i ? ";" : "") << c.params.n_list[i];
    out << ',';
    for (std::size_t i = 0; i < c.params.s_list.size(); ++i)
      out << (i ? ";" : "") << c.params.s_list[i].real() << '+' << c.params.s_list[i].imag() << 'i';
    out << ',' << c.lhs.real() << ',' << c.lhs.imag() << ',' << c.rhs.real() << ','
        << c.rhs.imag() << ',' << c.abs_err << ',' << c.rel_err << ','
        << (c.pass ? "true" : "false") << ',' << c.error << '\n';
  }
  return out.str();
}

// --- Planning and execution ---------------------------------------------------

namespace detail {

inline IdentityId identity_id_from_string(const std::string& s) {
  static const std::map<std::string, IdentityId> table = {
      {"BO", IdentityId::BO},
      {"BDR", IdentityId::BDR},
      {"BDR_FACTOR", IdentityId::BDR_FACTOR},
      {"S_PLUS", IdentityId::S_PLUS},
      {"S_MINUS", IdentityId::S_MINUS},
      {"S_PRODUCT", IdentityId::S_PRODUCT},
      {"WIND_PLUS", IdentityId::WIND_PLUS},
      {"WIND_MINUS", IdentityId::WIND_MINUS},
      {"WIND_PLUS_BLOCK", IdentityId::WIND_PLUS_BLOCK},
      {"WIND_MINUS_BLOCK", IdentityId::WIND_MINUS_BLOCK},
      {"MULTI_INTERVAL", IdentityId::MULTI_INTERVAL},
      {"MULTI_INTERVAL_WINDING", IdentityId::MULTI_INTERVAL_WINDING},
      {"COMPLEMENT", IdentityId::COMPLEMENT},
      {"MINOR_RATIO", IdentityId::MINOR_RATIO},
      {"INVERSE_CHAIN", IdentityId::INVERSE_CHAIN},
  };
  auto it = table.find(s);
  if (it == table.end()) throw ConstraintViolated("unknown identity id '" + s + "'");
  return it->second;
}

struct Task {
  std::function<void(std::vector<IdentityReport>&, std::vector<double>&)> run;
};

inline std::string cell_coords(std::size_t entry, const std::string& id,
                               const std::string& symbol) {
  return "identities[" + std::to_string(entry) + "] id=" + id + " symbol=" + symbol;
}

}  // namespace detail

/// Execute every (symbol x identity x parameter) cell of the corpus.
/// Cells are planned in canonical order (entry, id, symbol, n, s); workers
/// fill disjoint slots, so the report is independent of scheduling and byte
/// identical across runs up to the timing section.
inline RunReport run(const CorpusSpec& spec, int jobs = 1) {
  const auto t_start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.tol = spec.tol;
  rep.seed = spec.seed;
  rep.policy = spec.policy;

  // build symbols up front; a bad builder is a spec error, not a cell error
  std::map<std::string, Symbol> symbols;
  for (const auto& [name, def] : spec.symbols) {
    if (symbols.count(name))
      throw ConstraintViolated("duplicate symbol name '" + name + "'");
    symbols.emplace(name, symbol_from_json(def, spec.seed, spec.policy.drop_threshold));
  }

  struct PlannedCell {
    IdentityId id;
    std::string symbol;
    IdentityParams params;
  };
  std::vector<PlannedCell> cells;
  std::vector<detail::Task> tasks;

  const auto symbol_list = [&](const json& entry, std::size_t entry_idx,
                               const std::string& id_str) {
    std::vector<std::string> names;
    for (const auto& s : entry.value("symbols", json::array())) {
      const std::string name = s.get<std::string>();
      if (!symbols.count(name))
        throw ConstraintViolated("unknown symbol in " +
                                 detail::cell_coords(entry_idx, id_str, name));
      names.push_back(name);
    }
    if (names.empty())
      throw ConstraintViolated("no symbols listed in " +
                               detail::cell_coords(entry_idx, id_str, "-"));
    return names;
  };
  const auto n_values = [](const json& entry) {
    std::vector<long> ns;
    for (const auto& n : entry.value("n", json::array())) ns.push_back(n.get<long>());
    return ns;
  };
  const auto s_values = [](const json& entry) {
    std::vector<Complex> ss;
    for (const auto& s : entry.value("s", json::array())) ss.push_back(complex_from_json(s));
    return ss;
  };

  for (std::size_t ei = 0; ei < spec.identities.size(); ++ei) {
    const json& entry = spec.identities[ei];
    std::vector<std::string> id_strs;
    if (entry.contains("ids"))
      for (const auto& s : entry.at("ids")) id_strs.push_back(s.get<std::string>());
    else
      id_strs.push_back(entry.at("id").get<std::string>());
    std::vector<IdentityId> ids;
    for (const auto& s : id_strs) ids.push_back(detail::identity_id_from_string(s));

    const IdentityId head = ids[0];
    const NumericPolicy pol = spec.policy;
    const double tol = entry.value("tol", spec.tol);

    switch (head) {
      case IdentityId::BO:
      case IdentityId::BDR:
      case IdentityId::BDR_FACTOR:
      case IdentityId::INVERSE_CHAIN: {
        const auto names = symbol_list(entry, ei, id_strs[0]);
        const auto ns = n_values(entry);
        if (ns.empty())
          throw ConstraintViolated("missing n grid in " +
                                   detail::cell_coords(ei, id_strs[0], names[0]));
        for (long n : ns)
          if (n < 1)
            throw ConstraintViolated("n must be >= 1 in " +
                                     detail::cell_coords(ei, id_strs[0], names[0]));
        for (const auto& name : names) {
          // cells for every id in this entry, same (symbol, n) grid
          std::size_t base = cells.size();
          for (const auto& id : ids)
            for (long n : ns) {
              IdentityParams p;
              p.n = n;
              p.tol = tol;
              cells.push_back({id, name, p});
            }
          const Symbol sym = symbols.at(name);
          tasks.push_back({[=, &spec](std::vector<IdentityReport>& out,
                                      std::vector<double>& wall) {
            (void)spec;
            const auto t0 = std::chrono::steady_clock::now();
            SymbolContext ctx(name, sym, pol);
            std::size_t slot = base;
            for (const auto& id : ids) {
              if (id == IdentityId::BO) {
                auto rs = check_bo_sweep(ctx, ns, tol);
                for (auto& r : rs) out[slot++] = std::move(r);
              } else if (id == IdentityId::BDR || id == IdentityId::BDR_FACTOR) {
                for (long n : ns) {
                  auto pr = check_bdr(ctx, n, tol);
                  out[slot++] = id == IdentityId::BDR ? std::move(pr.first)
                                                      : std::move(pr.second);
                }
              } else {
                for (long n : ns) out[slot++] = check_inverse_chain(ctx, n, tol);
              }
            }
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            for (std::size_t i = base; i < slot; ++i) wall[i] = ms / static_cast<double>(slot - base);
          }});
        }
        break;
      }
      case IdentityId::S_PLUS:
      case IdentityId::S_MINUS:
      case IdentityId::S_PRODUCT:
      case IdentityId::WIND_PLUS:
      case IdentityId::WIND_MINUS:
      case IdentityId::WIND_PLUS_BLOCK:
      case IdentityId::WIND_MINUS_BLOCK: {
        const auto names = symbol_list(entry, ei, id_strs[0]);
        const auto ns = n_values(entry);
        const auto ss = s_values(entry);
        if (ns.empty() || ss.empty())
          throw ConstraintViolated("missing n or s grid in " +
                                   detail::cell_coords(ei, id_strs[0], names[0]));
        for (const auto& s : ss)
          if (s == Complex{-1.0, 0.0} || s == Complex{1.0, 0.0})
            throw ConstraintViolated("s = +-1 not allowed in " +
                                     detail::cell_coords(ei, id_strs[0], names[0]));
        const bool winding_family = head == IdentityId::WIND_PLUS ||
                                    head == IdentityId::WIND_MINUS ||
                                    head == IdentityId::WIND_PLUS_BLOCK ||
                                    head == IdentityId::WIND_MINUS_BLOCK;
        for (const auto& name : names) {
          std::size_t base = cells.size();
          for (const auto& id : ids)
            for (long n : ns)
              for (const auto& s : ss) {
                IdentityParams p;
                p.n = n;
                p.s = s;
                p.tol = tol;
                cells.push_back({id, name, p});
              }
          const Symbol sym = symbols.at(name);
          const std::vector<std::string> want = id_strs;
          tasks.push_back({[=](std::vector<IdentityReport>& out, std::vector<double>& wall) {
            const auto t0 = std::chrono::steady_clock::now();
            SymbolContext ctx(name, sym, pol);
            // one shared-parts family per n; reports distributed per id
            std::map<long, std::vector<std::array<IdentityReport, 3>>> s_rows;
            std::map<long, std::vector<std::array<IdentityReport, 2>>> w_rows;
            for (long n : ns) {
              if (winding_family)
                w_rows[n] = check_winding_grid(ctx, n, ss, tol);
              else
                s_rows[n] = check_s_identities_grid(ctx, n, ss, tol);
            }
            std::size_t slot = base;
            for (const auto& id : ids) {
              for (long n : ns)
                for (std::size_t si = 0; si < ss.size(); ++si) {
                  if (winding_family) {
                    const auto& pair = w_rows[n][si];
                    out[slot++] = (id == IdentityId::WIND_PLUS ||
                                   id == IdentityId::WIND_PLUS_BLOCK)
                                      ? pair[0]
                                      : pair[1];
                  } else {
                    const auto& tri = s_rows[n][si];
                    out[slot++] = id == IdentityId::S_PLUS    ? tri[0]
                                  : id == IdentityId::S_MINUS ? tri[1]
                                                              : tri[2];
                  }
                }
            }
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            for (std::size_t i = base; i < slot; ++i) wall[i] = ms / static_cast<double>(slot - base);
          }});
        }
        break;
      }
      case IdentityId::MULTI_INTERVAL:
      case IdentityId::MULTI_INTERVAL_WINDING: {
        const auto names = symbol_list(entry, ei, id_strs[0]);
        const bool winding_variant = head == IdentityId::MULTI_INTERVAL_WINDING;
        const auto& cell_defs = entry.at("cells");
        for (const auto& name : names) {
          for (const auto& cj : cell_defs) {
            std::vector<long> n_list;
            std::vector<Complex> s_list;
            for (const auto& n : cj.at("n_list")) n_list.push_back(n.get<long>());
            for (const auto& s : cj.at("s_list")) s_list.push_back(complex_from_json(s));
            if (n_list.size() != s_list.size() || n_list.empty())
              throw ConstraintViolated("bad multi-interval cell in " +
                                       detail::cell_coords(ei, id_strs[0], name));
            const Complex sk = s_list.back();
            for (const auto& s : s_list)
              if (sk - s == Complex{-1.0, 0.0})
                throw ConstraintViolated("weights hit s_k - s_j = -1 in " +
                                         detail::cell_coords(ei, id_strs[0], name));
            IdentityParams p;
            p.n_list = n_list;
            p.s_list = s_list;
            p.tol = tol;
            const std::size_t slot = cells.size();
            cells.push_back({head, name, p});
            const Symbol sym = symbols.at(name);
            tasks.push_back({[=](std::vector<IdentityReport>& out, std::vector<double>& wall) {
              const auto t0 = std::chrono::steady_clock::now();
              SymbolContext ctx(name, sym, pol);
              out[slot] = check_multi_interval(ctx, n_list, s_list, tol, winding_variant);
              wall[slot] = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
            }});
          }
        }
        break;
      }
      case IdentityId::COMPLEMENT: {
        const auto names = symbol_list(entry, ei, id_strs[0]);
        const long m = entry.value("m", 64L);
        for (const auto& name : names) {
          IdentityParams p;
          p.n = m;
          p.tol = tol;
          const std::size_t slot = cells.size();
          cells.push_back({head, name, p});
          const Symbol sym = symbols.at(name);
          tasks.push_back({[=](std::vector<IdentityReport>& out, std::vector<double>& wall) {
            const auto t0 = std::chrono::steady_clock::now();
            SymbolContext ctx(name, sym, pol);
            out[slot] = check_complement(ctx, m, tol);
            wall[slot] = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
          }});
        }
        break;
      }
      case IdentityId::MINOR_RATIO: {
        const long dim = entry.value("dim", 10L);
        const int count = entry.value("count", 10);
        const std::uint64_t seed = entry.value("seed", spec.seed);
        IdentityParams p;
        p.n = dim;
        p.tol = tol;
        const std::size_t slot = cells.size();
        cells.push_back({head, "seeded", p});
        tasks.push_back({[=](std::vector<IdentityReport>& out, std::vector<double>& wall) {
          const auto t0 = std::chrono::steady_clock::now();
          out[slot] = check_minor_ratio(seed, dim, count, tol);
          wall[slot] = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
        }});
        break;
      }
    }
  }

  rep.checks.resize(cells.size());
  rep.wall_ms.assign(cells.size(), 0.0);

  const int workers = std::max(1, jobs);
  if (workers == 1) {
    for (auto& t : tasks) t.run(rep.checks, rep.wall_ms);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          tasks[i].run(rep.checks, rep.wall_ms);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& c : rep.checks) {
    if (!c.error.empty())
      ++rep.summary.error;
    else if (c.pass)
      ++rep.summary.pass;
    else
      ++rep.summary.fail;
  }
  rep.total_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t_start)
                     .count();
  return rep;
}

/// The corpus shipped with the tool: rational pairs, seeded random symbols,
/// conjugated-diagonal blocks, winding products, and every identity family.
inline json default_corpus() {
  json j;
  j["seed"] = 20260809;
  j["tol"] = 1e-7;
  j["drop_threshold"] = 1e-14;
  j["symbols"] = json::array({
      json{{"name", "rp_a"}, {"builder", "rational_pair"}, {"alpha", 0.5}, {"beta", 0.3}},
      json{{"name", "rp_b"}, {"builder", "rational_pair"}, {"alpha", -0.4}, {"beta", 0.25}},
      json{{"name", "rp_cx"},
           {"builder", "rational_pair"},
           {"alpha", json{{"re", 0.3}, {"im", 0.2}}},
           {"beta", -0.35}},
      json{{"name", "rd_s"},
           {"builder", "random_decay"},
           {"seed", 101},
           {"block_size", 1},
           {"radius", 0.45},
           {"halfwidth", 6}},
      json{{"name", "cd_a"},
           {"builder", "conjugated_diagonal"},
           {"seed", 202},
           {"entries",
            json::array({json{{"builder", "rational_pair"}, {"alpha", 0.35}, {"beta", 0.2}},
                         json{{"builder", "rational_pair"}, {"alpha", -0.3}, {"beta", 0.15}}})}},
      json{{"name", "cd_b"},
           {"builder", "conjugated_diagonal"},
           {"seed", 203},
           {"entries",
            json::array({json{{"builder", "rational_pair"}, {"alpha", 0.25}, {"beta", -0.3}},
                         json{{"builder", "rational_pair"}, {"alpha", 0.2}, {"beta", 0.3}}})}},
      json{{"name", "rd_blk"},
           {"builder", "random_decay"},
           {"seed", 104},
           {"block_size", 2},
           {"radius", 0.4},
           {"halfwidth", 4}},
      json{{"name", "w_p1"},
           {"builder", "product"},
           {"factors",
            json::array({json{{"builder", "monomial"}, {"w", 1}},
                         json{{"builder", "rational_pair"}, {"alpha", 0.4}, {"beta", 0.2}}})}},
      json{{"name", "w_m2"},
           {"builder", "product"},
           {"factors",
            json::array({json{{"builder", "monomial"}, {"w", -2}},
                         json{{"builder", "rational_pair"}, {"alpha", -0.35}, {"beta", 0.25}}})}},
      json{{"name", "w_blk"},
           {"builder", "conjugated_diagonal"},
           {"seed", 205},
           {"entries",
            json::array({json{{"builder", "monomial"}, {"w", 1}},
                         json{{"builder", "rational_pair"}, {"alpha", 0.3}, {"beta", 0.2}}})}},
  });
  j["identities"] = json::array({
      json{{"id", "BO"},
           {"symbols", json::array({"rp_a", "rp_cx", "cd_a"})},
           {"n", json::array({1, 2, 3, 5, 8})}},
      json{{"ids", json::array({"BDR", "BDR_FACTOR"})},
           {"symbols", json::array({"rp_a", "cd_a"})},
           {"n", json::array({1, 2, 3})}},
      json{{"ids", json::array({"S_PLUS", "S_MINUS", "S_PRODUCT"})},
           {"symbols", json::array({"rp_a", "rd_s", "cd_b"})},
           {"n", json::array({-3, -1, 0, 2, 4})},
           {"s", json::array({0.5, -0.3, json{{"re", 0.0}, {"im", 0.5}}})}},
      json{{"ids", json::array({"WIND_PLUS", "WIND_MINUS"})},
           {"symbols", json::array({"w_p1", "w_m2"})},
           {"n", json::array({-2, 1, 3})},
           {"s", json::array({0.4, json{{"re", 0.2}, {"im", 0.4}}})}},
      json{{"ids", json::array({"WIND_PLUS_BLOCK", "WIND_MINUS_BLOCK"})},
           {"symbols", json::array({"w_blk"})},
           {"n", json::array({1, 2})},
           {"s", json::array({0.3})}},
      json{{"id", "MULTI_INTERVAL"},
           {"symbols", json::array({"rp_a", "rd_s"})},
           {"cells",
            json::array({json{{"n_list", json::array({2, 5})},
                              {"s_list", json::array({0.3, 0.6})}},
                         json{{"n_list", json::array({1, 3, 6})},
                              {"s_list", json::array({0.2, -0.25, 0.4})}}})}},
      json{{"id", "MULTI_INTERVAL_WINDING"},
           {"symbols", json::array({"w_p1"})},
           {"cells",
            json::array({json{{"n_list", json::array({2, 4})},
                              {"s_list", json::array({0.3, 0.5})}}})}},
      json{{"id", "COMPLEMENT"}, {"symbols", json::array({"rp_a", "cd_a"})}, {"m", 64}},
      json{{"id", "MINOR_RATIO"}, {"dim", 10}, {"count", 10}},
      json{{"id", "INVERSE_CHAIN"},
           {"symbols", json::array({"rp_a", "cd_a"})},
           {"n", json::array({4})}},
  });
  return j;
}

}  // namespace whdet
