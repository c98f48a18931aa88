#pragma once

// Batch experiment runner: config ingestion, grid execution, report and
// curve-table persistence. Cells are pure computations over immutable
// inputs; they may run concurrently and are keyed and sorted by id before
// the report is assembled, so the output is order-independent.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "shiftlab/invariants.hpp"
#include "shiftlab/serialize.hpp"
#include "shiftlab/version.hpp"

namespace shiftlab::runner {

using json = nlohmann::json;
using states::Verdict;

// ---------------------------------------------------------------------------
// Config and report
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 1;
  double tolerance_scale = 1.0;
  LevelBudget budget;
  std::string out_dir;
  json params;
  json raw;
};

struct CurveRow {
  std::string cell;
  double index;
  cplx value;
};

struct CellResult {
  std::string id;
  bool pass = true;
  json values;
  std::vector<CurveRow> curve;
  double wall_ms = 0.0;
};

struct Report {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  bool pass = true;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{
      "relations", "state-eval", "classify", "clustering", "eigen",
      "wold",      "fourier",    "distance", "cesaro",     "extension"};
  return kinds;
}

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.is_object()) throw schema_error("config must be an object");
  if (!j.contains("experiment") || !j.at("experiment").is_string())
    throw schema_error("config needs an 'experiment' string");
  cfg.kind = j.at("experiment").get<std::string>();
  bool known = false;
  for (const auto& k : experiment_kinds()) known = known || k == cfg.kind;
  if (!known) throw schema_error("unknown experiment kind: " + cfg.kind);
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tolerance_scale")) {
    cfg.tolerance_scale = j.at("tolerance_scale").get<double>();
    if (!(cfg.tolerance_scale > 0)) throw schema_error("tolerance_scale must be > 0");
  }
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    if (b.contains("max_dense_dim"))
      cfg.budget.max_dense_dim = b.at("max_dense_dim").get<std::int64_t>();
    if (b.contains("max_vector_dim"))
      cfg.budget.max_vector_dim = b.at("max_vector_dim").get<std::int64_t>();
    if (cfg.budget.max_dense_dim <= 0 || cfg.budget.max_vector_dim <= 0)
      throw schema_error("budgets must be positive");
  }
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (!j.contains("params") || !j.at("params").is_object())
    throw schema_error("config needs a 'params' object");
  cfg.params = j.at("params");
  return cfg;
}

// ---------------------------------------------------------------------------
// Deterministic per-cell randomness
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t cell_seed(std::uint64_t base, const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL ^ base;
  for (const char c : id) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  return h;
}

inline MatrixXcd random_matrix(std::mt19937_64& gen, std::int64_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXcd m(d, d);
  for (std::int64_t i = 0; i < d; ++i)
    for (std::int64_t j = 0; j < d; ++j) m(i, j) = cplx(g(gen), g(gen));
  return m;
}

inline std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cell builders per experiment kind
// ---------------------------------------------------------------------------

namespace detail {

using CellFn = std::function<CellResult()>;

struct CellSpec {
  std::string id;
  CellFn fn;
};

inline json verdict_json(const states::SeriesVerdict& v) {
  return json{{"verdict", states::verdict_name(v.verdict)},
              {"rule", v.rule},
              {"partial_sums", v.partial_sums},
              {"block_sums", v.block_sums},
              {"horizons", v.horizons}};
}

inline Verdict verdict_from(const std::string& s) {
  if (s == "converges") return Verdict::converges;
  if (s == "diverges") return Verdict::diverges;
  if (s == "undetermined") return Verdict::undetermined;
  throw schema_error("unknown verdict: " + s);
}

// ---- relations ------------------------------------------------------------

inline void build_relations(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("families") || !cfg.params.at("families").is_array())
    throw schema_error("relations: params.families required");
  const int m_max = cfg.params.value("m_max", 3);
  const bool commutant = cfg.params.value("check_commutant", false);
  const int commutant_m_max = cfg.params.value("commutant_m_max", 3);
  const double tol = 1e-12 * cfg.tolerance_scale;
  int idx = 0;
  for (const auto& famj : cfg.params.at("families")) {
    const auto fam = serialize::isometry_family_from(famj, cfg.seed);
    const std::string base_id =
        "relations/" + fam.variant_name() + "-n" + std::to_string(fam.base()) + "-" +
        std::to_string(idx++);
    for (int m = fam.multiplier_depth(); m <= m_max; ++m) {
      const std::string id = base_id + "/m" + std::to_string(m);
      const LevelBudget budget = cfg.budget;
      const bool do_commutant = commutant && m <= commutant_m_max &&
                                m >= std::max(1, fam.multiplier_depth() + 1);
      cells.push_back({id, [fam, m, tol, do_commutant, budget, id]() {
        CellResult r;
        r.id = id;
        const auto d = cuntz::cuntz_defect(fam, m, budget);
        r.values["orthogonality_defect"] = d.orthogonality;
        r.values["completeness_defect"] = d.completeness;
        r.pass = d.orthogonality <= tol && d.completeness <= tol;
        if (do_commutant) {
          const int dim = endo::relative_commutant_dim(fam, m, budget);
          r.values["relative_commutant_dim"] = dim;
          r.pass = r.pass && dim == fam.base() * fam.base();
        }
        return r;
      }});
    }
  }
}

// ---- state-eval -------------------------------------------------------------

inline void build_state_eval(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("family"))
    throw schema_error("state-eval: params.family required");
  const auto fam = serialize::isometry_family_from(cfg.params.at("family"), cfg.seed);
  states::StateSpec spec =
      cfg.params.contains("state")
          ? serialize::state_spec_from(cfg.params.at("state"))
          : (fam.variant() == cuntz::IsometryFamily::Variant::nearest_neighbor
                 ? states::StateSpec::nearest_neighbor(fam.base())
                 : states::product_form(fam));
  const int k_max = cfg.params.value("k_max", 3);
  const double tol = 1e-12 * cfg.tolerance_scale;
  for (int k = 1; k <= k_max; ++k) {
    const std::string id = "state-eval/" + fam.variant_name() + "-n" +
                           std::to_string(fam.base()) + "/k" + std::to_string(k);
    cells.push_back({id, [fam, spec, k, tol, id]() {
      CellResult r;
      r.id = id;
      const std::int64_t d = ipow(fam.base(), k);
      double defect = 0.0;
      for (std::int64_t a = 0; a < d; ++a)
        for (std::int64_t b = 0; b < d; ++b) {
          const Word i = Word::from_index(a, k, fam.base());
          const Word j = Word::from_index(b, k, fam.base());
          defect = std::max(defect, std::abs(states::eval_state(spec, i, j) -
                                             states::eval_state_operator(fam, i, j)));
        }
      r.values["max_defect"] = defect;
      r.pass = defect <= tol;
      return r;
    }});
  }
}

// ---- classify ---------------------------------------------------------------

inline void build_classify(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("tests") || !cfg.params.at("tests").is_array())
    throw schema_error("classify: params.tests required");
  int idx = 0;
  for (const auto& t : cfg.params.at("tests")) {
    const std::string op = t.value("op", "");
    const std::string id = "classify/" + op + "-" + std::to_string(idx++);
    const std::int64_t horizon = t.value("horizon", std::int64_t{100000});
    if (op == "in_p") {
      const auto spec = serialize::state_spec_from(t.at("state"));
      const auto expect = verdict_from(t.value("expect", "converges"));
      cells.push_back({id, [spec, expect, horizon, id]() {
        CellResult r;
        r.id = id;
        const auto rep = states::in_p_test(spec, horizon);
        r.values["verdict"] = states::verdict_name(rep.verdict);
        r.values["sigma_distance"] = rep.sigma_distance;
        if (spec.product_form()) r.values["series"] = verdict_json(rep.series);
        r.pass = rep.verdict == expect;
        int k = 0;
        for (const double s : rep.sigma_distance)
          r.curve.push_back({r.id, static_cast<double>(k++), cplx(s, 0)});
        return r;
      }});
    } else if (op == "equivalence") {
      const auto a = serialize::state_spec_from(t.at("a"));
      const auto b = serialize::state_spec_from(t.at("b"));
      const auto expect = verdict_from(t.value("expect", "converges"));
      cells.push_back({id, [a, b, expect, horizon, id]() {
        CellResult r;
        r.id = id;
        const auto rep = states::equivalence_test(a, b, horizon);
        r.values["verdict"] = states::verdict_name(rep.verdict);
        r.values["forms_agree"] = rep.agree;
        r.values["norm_sq"] = verdict_json(rep.norm_sq);
        r.values["one_minus_mod"] = verdict_json(rep.one_minus_mod);
        r.values["log_product"] = verdict_json(rep.log_product);
        r.values["aligned_norm"] = verdict_json(rep.aligned_norm);
        r.pass = rep.agree && rep.verdict == expect;
        for (std::size_t d = 0; d < rep.one_minus_mod.partial_sums.size(); ++d)
          r.curve.push_back({r.id,
                             static_cast<double>(rep.one_minus_mod.horizons[d]),
                             cplx(rep.one_minus_mod.partial_sums[d], 0)});
        return r;
      }});
    } else if (op == "conjugacy") {
      const auto a = serialize::state_spec_from(t.at("a"));
      const auto b = serialize::state_spec_from(t.at("b"));
      const auto expect = verdict_from(t.value("expect", "converges"));
      const bool expect_heuristic = t.value("expect_heuristic", true);
      cells.push_back({id, [a, b, expect, expect_heuristic, horizon, id]() {
        CellResult r;
        r.id = id;
        const auto rep = states::conjugacy_test(a, b, horizon);
        r.values["verdict"] = states::verdict_name(rep.verdict);
        r.values["heuristic"] = rep.heuristic;
        r.values["aligned"] = verdict_json(rep.aligned);
        r.pass = rep.verdict == expect && rep.heuristic == expect_heuristic;
        return r;
      }});
    } else if (op == "finite_mix") {
      const auto a = serialize::state_spec_from(t.at("a"));
      const auto b = serialize::state_spec_from(t.at("b"));
      const bool expect = t.value("expect_conjugate", true);
      cells.push_back({id, [a, b, expect, id]() {
        CellResult r;
        r.id = id;
        const auto rep = states::finite_mix_conjugacy(a, b);
        r.values["conjugate"] = rep.conjugate;
        if (rep.conjugate) r.values["permutation"] = rep.permutation;
        r.pass = rep.conjugate == expect;
        return r;
      }});
    } else if (op == "hellinger") {
      const VectorXd p = serialize::real_vector_from(t.at("p"));
      const VectorXd q = serialize::real_vector_from(t.at("q"));
      const bool expect = t.value("expect_singular", true);
      cells.push_back({id, [p, q, expect, id]() {
        CellResult r;
        r.id = id;
        const auto rep = states::hellinger_singularity(p, q);
        r.values["affinity"] = rep.affinity;
        r.values["products"] = rep.products;
        r.pass = rep.diverges_to_zero == expect;
        for (std::size_t d = 0; d < rep.products.size(); ++d)
          r.curve.push_back({r.id, static_cast<double>(rep.horizons[d]),
                             cplx(rep.products[d], 0)});
        return r;
      }});
    } else {
      throw schema_error("classify: unknown op '" + op + "'");
    }
  }
}

// ---- clustering -------------------------------------------------------------

inline endo::MatrixObservable observable_from(const json& j, int n,
                                              const cuntz::IsometryFamily& fam) {
  const std::string kind = j.value("kind", "one_projector");
  if (kind == "matrix_unit") {
    std::vector<int> p = j.at("p").get<std::vector<int>>();
    std::vector<int> q = j.at("q").get<std::vector<int>>();
    return endo::MatrixObservable::matrix_unit(Word(p, n), Word(q, n));
  }
  if (kind == "one_projector") {
    const int level = j.value("level", 1);
    const VectorXcd one =
        lattice::CylinderVector::one(fam.measure(), level).amplitudes();
    return endo::MatrixObservable(level, n, MatrixXcd(one * one.adjoint()));
  }
  if (kind == "limit_projector") {
    // projection onto the transported limit vector of the gauge sequence
    const int level = j.value("level", 1);
    if (fam.variant() != cuntz::IsometryFamily::Variant::gauge_perturbed)
      throw schema_error("limit_projector needs a gauge-perturbed family");
    const json seq = j.at("sequence");
    const auto family = serialize::sequence_family_from(seq);
    const auto lim = family.limit();
    if (!lim) throw schema_error("limit_projector: family has no declared limit");
    const MatrixXcd f = lattice::char_to_point(n);
    VectorXcd site = VectorXcd::Zero(n);
    site = f * (cuntz::map_e0_to(family.h(1)).adjoint() * (*lim));
    VectorXcd full = VectorXcd::Ones(1);
    for (int p = 0; p < level; ++p) {
      VectorXcd sp = f * (cuntz::map_e0_to(family.h(p + 1)).adjoint() * (*lim));
      VectorXcd next(full.size() * n);
      for (Eigen::Index i = 0; i < full.size(); ++i) next.segment(i * n, n) = full[i] * sp;
      full = next;
    }
    return endo::MatrixObservable(level, n, MatrixXcd(full * full.adjoint()));
  }
  throw schema_error("unknown observable kind: " + kind);
}

inline void build_clustering(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("runs") || !cfg.params.at("runs").is_array())
    throw schema_error("clustering: params.runs required");
  int idx = 0;
  for (const auto& runj : cfg.params.at("runs")) {
    const auto fam = serialize::isometry_family_from(runj.at("family"), cfg.seed);
    const int n = fam.base();
    const auto a = observable_from(runj.value("observable", json{{"kind", "one_projector"}}),
                                   n, fam);
    const int xi_level = runj.value("xi_level", 0);
    const int horizon = runj.value("horizon", 12);
    const std::string check = runj.value("check", "none");
    const json runj_copy = runj;
    const double scale = cfg.tolerance_scale;
    const LevelBudget budget = cfg.budget;
    const std::string id =
        "clustering/" + fam.variant_name() + "-" + check + "-" + std::to_string(idx++);
    cells.push_back({id, [fam, a, xi_level, horizon, check, runj_copy, scale, budget, id]() {
      CellResult r;
      r.id = id;
      const auto xi = lattice::CylinderVector::one(fam.measure(), xi_level);
      const auto curve = endo::clustering_curve(fam, a, xi, horizon, budget);
      for (std::size_t k = 0; k < curve.size(); ++k)
        r.curve.push_back({r.id, static_cast<double>(k), curve[k]});
      r.values["c_first"] = serialize::to_json(curve.front());
      r.values["c_last"] = serialize::to_json(curve.back());
      if (check == "haar_constant") {
        const cplx target = endo::omega0(a, fam.measure()) * xi.amplitudes().squaredNorm();
        double defect = 0.0;
        for (std::size_t k = static_cast<std::size_t>(xi.level()); k < curve.size(); ++k)
          defect = std::max(defect, std::abs(curve[k] - target));
        r.values["constancy_defect"] = defect;
        r.pass = defect <= 1e-12 * scale;
      } else if (check == "decay_bound") {
        // independent product oracle from the sequence family
        const auto family = serialize::sequence_family_from(runj_copy.at("family").at("sequence"));
        const int ell = a.level;
        double product = 1.0;
        const std::int64_t tail_terms = runj_copy.value("oracle_terms", std::int64_t{200000});
        for (std::int64_t j = 1; j <= tail_terms; ++j) {
          const double ov =
              std::abs(family.h(ell + j).dot(family.h(ell + j + horizon)));
          product *= ov * ov;
        }
        r.values["oracle_product"] = product;
        const double c0 = std::abs(curve.front());
        const double cK = std::abs(curve.back());
        r.values["c0"] = c0;
        r.values["cK"] = cK;
        r.pass = cK < c0 && cK <= product + 1e-9;
      } else if (check == "absorption") {
        const auto family = serialize::sequence_family_from(runj_copy.at("family").at("sequence"));
        const auto lim = family.limit();
        const MatrixXcd f = lattice::char_to_point(fam.base());
        VectorXcd full = VectorXcd::Ones(1);
        for (int p = 0; p < a.level; ++p) {
          const VectorXcd sp = f * (cuntz::map_e0_to(family.h(p + 1)).adjoint() * (*lim));
          VectorXcd next(full.size() * fam.base());
          for (Eigen::Index i = 0; i < full.size(); ++i)
            next.segment(i * fam.base(), fam.base()) = full[i] * sp;
          full = next;
        }
        const cplx oracle =
            full.dot(a.mat * full) * xi.amplitudes().squaredNorm();
        r.values["oracle"] = serialize::to_json(oracle);
        const double defect = std::abs(curve.back() - oracle);
        r.values["defect"] = defect;
        const double tol = runj_copy.value("tolerance", 1e-6) * scale;
        r.pass = defect < tol;
      }
      return r;
    }});
  }
}

// ---- eigen ------------------------------------------------------------------

inline void build_eigen(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("runs")) throw schema_error("eigen: params.runs required");
  int idx = 0;
  for (const auto& runj : cfg.params.at("runs")) {
    const auto fam = serialize::isometry_family_from(runj.at("family"), cfg.seed);
    const int n = fam.base();
    std::vector<int> ms = runj.value("m_list", std::vector<int>{1, 2, 3});
    const std::string lambda_kind = runj.value("lambda", "uniform");
    const std::string expect = runj.value("expect", "report");
    const json runj_copy = runj;
    const LevelBudget budget = cfg.budget;
    for (int m : ms) {
      const std::string id = "eigen/" + fam.variant_name() + "-" + lambda_kind + "-m" +
                             std::to_string(m) + "-" + std::to_string(idx);
      cells.push_back({id, [fam, n, m, lambda_kind, expect, runj_copy, budget, id]() {
        CellResult r;
        r.id = id;
        VectorXcd lam;
        if (lambda_kind == "uniform")
          lam = VectorXcd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
        else if (lambda_kind == "conjugate_eta")
          lam = fam.eta().conjugate();
        else if (lambda_kind == "explicit")
          lam = serialize::complex_vector_from(runj_copy.at("lambda_value"));
        else
          throw schema_error("eigen: unknown lambda kind");
        const auto entry = invariants::eigen_residual(fam, lam, m, budget);
        r.values["residual"] = entry.residual;
        const auto search = invariants::invariant_vector_search(fam, m, 100, budget);
        r.values["search_found"] = search.found;
        r.values["search_residual"] = search.residual;
        r.curve.push_back({r.id, static_cast<double>(m), cplx(entry.residual, 0)});
        if (expect == "found")
          r.pass = search.found;
        else if (expect == "none")
          r.pass = !search.found && entry.residual > 1e-8;
        else if (expect == "zero_residual")
          r.pass = entry.residual <= 1e-12;
        return r;
      }});
    }
    ++idx;
  }
}

// ---- wold ---------------------------------------------------------------------

inline void build_wold(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("runs")) throw schema_error("wold: params.runs required");
  int idx = 0;
  for (const auto& runj : cfg.params.at("runs")) {
    const std::string map_name = runj.value("map", "us");
    const int n = runj.value("n", 2);
    const int m = runj.value("m", 2);
    const int depth = runj.value("depth", 5);
    const std::string expect = runj.value("expect", "report");
    const LevelBudget budget = cfg.budget;
    const std::string id =
        "wold/" + map_name + "-n" + std::to_string(n) + "-" + std::to_string(idx++);
    cells.push_back({id, [map_name, n, m, depth, expect, budget, id]() {
      CellResult r;
      r.id = id;
      const auto map = map_name == "us" ? invariants::us_map(n)
                                        : invariants::shift_compose_map(n);
      const auto rep = invariants::wold_decompose(map, depth, m, budget);
      r.values["unitary_rank"] = rep.unitary_rank;
      r.values["kernel_codim"] = rep.kernel_codim;
      r.values["isometry_defect"] = rep.isometry_defect;
      for (std::size_t k = 0; k < rep.unitary_rank.size(); ++k)
        r.curve.push_back({r.id, static_cast<double>(k + 1),
                           cplx(static_cast<double>(rep.unitary_rank[k]), 0)});
      bool monotone = true;
      for (std::size_t k = 1; k < rep.unitary_rank.size(); ++k)
        monotone = monotone && rep.unitary_rank[k] <= rep.unitary_rank[k - 1];
      bool codim_ok = true;
      for (std::size_t j = 0; j < rep.kernel_codim.size(); ++j) {
        const std::int64_t v = m + static_cast<std::int64_t>(j);
        codim_ok = codim_ok && rep.kernel_codim[j] == ipow(n, v + 1) - ipow(n, v);
      }
      if (expect == "pure_shift")
        r.pass = monotone && rep.unitary_rank.back() == 0 && codim_ok;
      else if (expect == "keeps_constant")
        r.pass = monotone && rep.unitary_rank.back() >= 1;
      return r;
    }});
  }
}

// ---- fourier -------------------------------------------------------------------

inline void build_fourier(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  const std::vector<int> ns = cfg.params.value("n_list", std::vector<int>{2, 3});
  const int m_max = cfg.params.value("m_max", 3);
  const int decay_depth = cfg.params.value("decay_depth", 3);
  const double tol = 1e-12 * cfg.tolerance_scale;
  const LevelBudget budget = cfg.budget;
  for (int n : ns) {
    for (int m = 1; m <= m_max; ++m) {
      const std::string id = "fourier/recursion-n" + std::to_string(n) + "-m" +
                             std::to_string(m);
      cells.push_back({id, [n, m, tol, budget, id]() {
        CellResult r;
        r.id = id;
        const double defect = invariants::fourier_recursion_check(n, m, budget);
        r.values["defect"] = defect;
        r.pass = defect <= tol;
        return r;
      }});
    }
    const std::string id = "fourier/decay-n" + std::to_string(n);
    cells.push_back({id, [n, decay_depth, budget, id]() {
      CellResult r;
      r.id = id;
      const auto mu = lattice::MeasureSpec::haar(n);
      const auto table = invariants::matrix_element_decay(
          lattice::CylinderVector::one(mu, 0), {Word({}, n)}, decay_depth, budget);
      bool ok = true;
      for (int m = 0; m <= decay_depth; ++m) {
        const double bound = std::pow(1.0 / n, m) + 1e-10;
        ok = ok && table.max_coefficient[static_cast<std::size_t>(m)] <= bound;
        r.curve.push_back({r.id, static_cast<double>(m),
                           cplx(table.max_coefficient[static_cast<std::size_t>(m)], 0)});
      }
      r.values["max_coefficient"] = table.max_coefficient;
      r.pass = ok;
      return r;
    }});
  }
}

// ---- distance ------------------------------------------------------------------

inline void build_distance(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("pairs")) throw schema_error("distance: params.pairs required");
  int idx = 0;
  for (const auto& pj : cfg.params.at("pairs")) {
    const auto a = serialize::state_spec_from(pj.at("a"));
    const auto b = serialize::state_spec_from(pj.at("b"));
    const std::vector<int> ks = pj.value("k_list", std::vector<int>{1, 2, 3});
    const int offset = pj.value("offset", 0);
    const bool expect_monotone = pj.value("expect_monotone", false);
    const LevelBudget budget = cfg.budget;
    const std::string id = "distance/pair-" + std::to_string(idx++);
    cells.push_back({id, [a, b, ks, offset, expect_monotone, budget, id]() {
      CellResult r;
      r.id = id;
      double prev = -1.0;
      bool ok = true;
      for (int k : ks) {
        const double d = states::state_distance(a, b, k, offset, budget);
        r.curve.push_back({r.id, static_cast<double>(k), cplx(d, 0)});
        ok = ok && d <= 2.0 + 1e-12;
        if (expect_monotone) ok = ok && d >= prev - 1e-12;
        prev = d;
      }
      r.values["final_distance"] = prev;
      r.pass = ok;
      return r;
    }});
  }
}

// ---- cesaro --------------------------------------------------------------------

inline void build_cesaro(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  if (!cfg.params.contains("families")) throw schema_error("cesaro: params.families required");
  const std::vector<int> counts = cfg.params.value("counts", std::vector<int>{2, 4, 8});
  const int level = cfg.params.value("level", 1);
  int idx = 0;
  for (const auto& famj : cfg.params.at("families")) {
    const auto fam = serialize::isometry_family_from(famj, cfg.seed);
    const std::string id = "cesaro/" + fam.variant_name() + "-" + std::to_string(idx++);
    const LevelBudget budget = cfg.budget;
    const std::uint64_t seed = cell_seed(cfg.seed, id);
    cells.push_back({id, [fam, counts, level, budget, seed, id]() {
      CellResult r;
      r.id = id;
      std::mt19937_64 gen(seed);
      MatrixXcd a0 = random_matrix(gen, ipow(fam.base(), level));
      const endo::MatrixObservable a(level, fam.base(), MatrixXcd(0.5 * (a0 + a0.adjoint())));
      const double anorm = cuntz::operator_norm(a.mat);
      bool ok = true;
      for (const int count : counts) {
        const double defect = endo::cesaro_defect(fam, a, count, budget);
        r.curve.push_back({r.id, static_cast<double>(count), cplx(defect, 0)});
        ok = ok && defect <= 2.0 * anorm / count + 1e-9;
      }
      r.values["observable_norm"] = anorm;
      r.pass = ok;
      return r;
    }});
  }
}

// ---- extension -----------------------------------------------------------------

inline void build_extension(const ExperimentConfig& cfg, std::vector<CellSpec>& cells) {
  const int n = cfg.params.value("n", 2);
  const int window = cfg.params.value("window", 4);
  const std::vector<int> ms = cfg.params.value("m_list", std::vector<int>{1, 2});
  const LevelBudget budget = cfg.budget;
  for (int m : ms) {
    const std::string id = "extension/w" + std::to_string(window) + "-m" + std::to_string(m);
    const std::uint64_t seed = cell_seed(cfg.seed, id);
    cells.push_back({id, [n, window, m, budget, seed, id]() {
      CellResult r;
      r.id = id;
      double worst = 0.0;
      // spanning matrix units
      const std::int64_t d = ipow(n, m);
      for (std::int64_t p = 0; p < d; ++p)
        for (std::int64_t q = 0; q < d; ++q) {
          const auto rep = endo::two_sided_extension_check(
              window,
              endo::MatrixObservable::matrix_unit(Word::from_index(p, m, n),
                                                  Word::from_index(q, m, n)),
              budget);
          worst = std::max(worst, rep.max_defect);
        }
      // one random observable
      std::mt19937_64 gen(seed);
      const auto rep = endo::two_sided_extension_check(
          window, endo::MatrixObservable(m, n, random_matrix(gen, d)), budget);
      worst = std::max(worst, rep.max_defect);
      r.values["max_defect"] = worst;
      r.pass = worst <= 1e-12;
      return r;
    }});
  }
}

inline std::vector<CellSpec> build_cells(const ExperimentConfig& cfg) {
  std::vector<CellSpec> cells;
  if (cfg.kind == "relations") build_relations(cfg, cells);
  else if (cfg.kind == "state-eval") build_state_eval(cfg, cells);
  else if (cfg.kind == "classify") build_classify(cfg, cells);
  else if (cfg.kind == "clustering") build_clustering(cfg, cells);
  else if (cfg.kind == "eigen") build_eigen(cfg, cells);
  else if (cfg.kind == "wold") build_wold(cfg, cells);
  else if (cfg.kind == "fourier") build_fourier(cfg, cells);
  else if (cfg.kind == "distance") build_distance(cfg, cells);
  else if (cfg.kind == "cesaro") build_cesaro(cfg, cells);
  else if (cfg.kind == "extension") build_extension(cfg, cells);
  else throw schema_error("unknown experiment kind: " + cfg.kind);
  return cells;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Execution and persistence
// ---------------------------------------------------------------------------

inline Report run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
  auto cells = detail::build_cells(cfg);
  Report rep;
  rep.config = cfg;
  rep.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        CellResult r = cells[i].fn();
        r.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        rep.cells[i] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
        break;
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(rep.cells.begin(), rep.cells.end(),
            [](const CellResult& a, const CellResult& b) { return a.id < b.id; });
  rep.pass = true;
  for (const auto& c : rep.cells) rep.pass = rep.pass && c.pass;
  return rep;
}

inline json report_json(const Report& rep) {
  json cells = json::array();
  for (const auto& c : rep.cells)
    cells.push_back(json{{"id", c.id},
                         {"pass", c.pass},
                         {"wall_ms", c.wall_ms},
                         {"values", c.values}});
  return json{{"tool", "shiftlab"},
              {"version", kVersion},
              {"experiment", rep.config.kind},
              {"seed", rep.config.seed},
              {"config", rep.config.raw},
              {"pass", rep.pass},
              {"cells", cells}};
}

// The report with the timing metadata stripped: everything here reproduces
// bit-exactly for a fixed config and seed.
inline json report_json_canonical(const Report& rep) {
  json out = report_json(rep);
  for (auto& c : out.at("cells")) c.erase("wall_ms");
  return out;
}

inline std::string curves_csv(const Report& rep) {
  std::string out = "experiment,cell,k,re,im\n";
  for (const auto& c : rep.cells)
    for (const auto& row : c.curve) {
      out += rep.config.kind;
      out += ',';
      out += row.cell;
      out += ',';
      out += detail::format17(row.index);
      out += ',';
      out += detail::format17(row.value.real());
      out += ',';
      out += detail::format17(row.value.imag());
      out += '\n';
    }
  return out;
}

inline void write_report(const Report& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/report.json");
    f << report_json(rep).dump(2) << "\n";
  }
  {
    std::ofstream f(dir + "/curves.csv");
    f << curves_csv(rep);
  }
}

// Name of the first failing cell, empty when everything passed.
inline std::string first_failing_cell(const Report& rep) {
  for (const auto& c : rep.cells)
    if (!c.pass) return c.id;
  return "";
}

// ---------------------------------------------------------------------------
// Generator catalog
// ---------------------------------------------------------------------------

inline json list_generators() {
  json out = json::array();
  out.push_back(json{
      {"name", "theta_harmonic"},
      {"parameters", json::object()},
      {"note",
       "angle ladder 1, 1/2, 1/2, 1/3, 1/3, 1/3, ...; the telescoping norm "
       "series sum ||h_k - h_{k+1}|| converges (bounded by sqrt(2)) while the "
       "squared-angle series equals the harmonic series and diverges, so the "
       "limit-alignment product vanishes: a shift without invariant vector "
       "states"}});
  out.push_back(json{
      {"name", "inverse_sqrt"},
      {"parameters", json::object()},
      {"note",
       "theta_k = k^{-1/2}; telescoping norm series converges, squared-angle "
       "series is harmonic and diverges: same nonexistence regime as "
       "theta_harmonic"}});
  out.push_back(json{
      {"name", "geometric"},
      {"parameters", json{{"ratio", "decay ratio in (0,1)"}}},
      {"note",
       "theta_k = ratio^k; the squared-angle series converges and the "
       "tail-alignment product tends to 1: absorption regime, the clustering "
       "limit is the rank-one state of the limit vector"}});
  out.push_back(json{
      {"name", "constant"},
      {"parameters", json{{"h", "unit vector as [re,im] pairs"}}},
      {"note", "constant site vector; zero tail, the reference point of every "
               "alignment test"}});
  out.push_back(json{
      {"name", "explicit_list"},
      {"parameters", json{{"vectors", "unit vectors"}, {"tail", "declared class"}}},
      {"note", "finite list repeated past the end; tail class must be declared "
               "for exact conjugacy reductions"}});
  out.push_back(json{
      {"name", "gauge_sequence"},
      {"parameters", json{{"family", "any sequence family"}}},
      {"note",
       "unitaries U_p = V_p V_{p+1}^* mapping h_{p+2} to h_{p+1} with V_p e_0 "
       "= h_{p+1}; the summable-rotation gauge group member realizing the "
       "family as a perturbation of the uniform shift"}});
  return out;
}

}  // namespace shiftlab::runner
