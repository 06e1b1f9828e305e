// Command-line driver: surface JSON in, result JSON out.
//
//   schottky_cli --surface FILE --command CMD [options]
//
// Exit status: 0 ok, 1 precondition violation, 2 convergence failure,
// 3 verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "schottky/schottky.hpp"

namespace {

using namespace schottky;

struct JobConfig {
  std::string surface_path;
  std::string command;
  std::string K = "auto";
  double tol = 1e-12;
  std::string out;
  std::uint64_t seed = 1;
  std::string route = "det";
  int cutoff_words = 6;
  int cutoff_power = 40;
  int cutoff_weight = 6;
  int cutoff_theta = 6;
  std::string request;
  std::string kind = "rank2";
  std::string dump;
  std::string sweep;
  std::string x, y, p, q;
  int b = 1;
};

constexpr int kAutoStartK = 8;

class VerifyFailure : public Error {
 public:
  using Error::Error;
};

cplx parse_point(const std::string& s, const char* flag) {
  if (s.empty()) throw DomainError(std::string("missing required point ") + flag);
  std::istringstream is(s);
  double re = 0.0, im = 0.0;
  char comma = 0;
  is >> re;
  if (is >> comma) {
    if (comma != ',' || !(is >> im)) throw DomainError(std::string("malformed point for ") + flag + ": " + s);
  }
  return {re, im};
}

struct Truncation {
  MomentSystem system;
  int K_used;
  double tol_achieved;
  std::vector<cplx> history;
};

// "auto": escalate from 8; an integer fixes K and reports the change from K/2.
Truncation truncate(const SchottkySurface& s, const JobConfig& cfg) {
  if (cfg.K == "auto") {
    ConvergedSystem c = escalate(s, kAutoStartK, cfg.tol);
    return {std::move(c.system), c.K_used, c.rel_change, std::move(c.det_history)};
  }
  int K = 0;
  try {
    std::size_t pos = 0;
    K = std::stoi(cfg.K, &pos);
    if (pos != cfg.K.size()) throw std::invalid_argument(cfg.K);
  } catch (const std::exception&) {
    throw DomainError("--K must be an integer or \"auto\"");
  }
  MomentSystem sys = MomentSystem::build(s, K);
  double change = 0.0;
  std::vector<cplx> history{sys.det()};
  if (K >= 2) {
    const cplx half = MomentSystem::build(s, K / 2).det();
    change = std::abs(sys.det() - half) / std::abs(sys.det());
    history.insert(history.begin(), half);
  }
  return {std::move(sys), K, change, std::move(history)};
}

json provenance(const Truncation& t, const std::string& route) {
  return {{"K_used", t.K_used}, {"tol_achieved", t.tol_achieved}, {"route", route}};
}

json with_value(cplx v, const Truncation& t, const std::string& route) {
  json j = {{"value", to_json(v)}};
  j.update(provenance(t, route));
  return j;
}

json matrix_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

std::vector<cplx> points_from_json(const json& j, const char* key) {
  std::vector<cplx> out;
  if (j.contains(key))
    for (const auto& v : j[key]) out.push_back(complex_from_json(v));
  return out;
}

Charge2 charge_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DomainError("a rank-2 charge is [alpha_1, alpha_2]");
  return {complex_from_json(j[0]), complex_from_json(j[1])};
}

ChargeData charges_from_json(const json& j, int g) {
  ChargeData c = ChargeData::zero(g);
  if (!j.contains("alpha")) return c;
  if (static_cast<int>(j["alpha"].size()) != g) throw DomainError("\"alpha\" needs one charge per handle");
  for (int a = 0; a < g; ++a) c.alpha[static_cast<std::size_t>(a)] = charge_from_json(j["alpha"][static_cast<std::size_t>(a)]);
  return c;
}

json cmd_period_matrix(const SchottkySurface& s, const JobConfig& cfg) {
  const Truncation t = truncate(s, cfg);
  const PeriodMatrix pm = period_matrix(t.system);
  json j = {{"omega", matrix_json(pm.values)},
            {"symmetry_residual", pm.symmetry_residual},
            {"branch_ambiguous", pm.branch_ambiguous},
            {"im_positive_definite", pm.im_positive_definite}};
  j.update(provenance(t, "det"));
  return j;
}

void write_sweep(const SchottkySurface& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot open " + path);
  os << "K,det_re,det_im,rel_change\n";
  const std::vector<int> ks{1, 2, 4, 8, 16, 32, 64, 128, kMaxTruncation};
  std::vector<std::future<cplx>> jobs;
  for (int K : ks) jobs.push_back(std::async(std::launch::async, [&s, K] { return MomentSystem::build(s, K).det(); }));
  cplx prev = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const int K = ks[i];
    const cplx d = jobs[i].get();
    const double rel = K == 1 ? 0.0 : std::abs(d - prev) / std::abs(d);
    char line[160];
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", K, d.real(), d.imag(), rel);
    os << line;
    prev = d;
  }
}

json cmd_det(const SchottkySurface& s, const JobConfig& cfg) {
  const Truncation t = truncate(s, cfg);
  json j = with_value(t.system.det(), t, "det");
  if (cfg.route == "mz") {
    const cplx mz = montonen_zograf(s, cfg.cutoff_power, cfg.cutoff_words);
    j["cross_route"] = "mz";
    j["cross_value"] = to_json(mz);
    j["cross_rel_diff"] = std::abs(mz - t.system.det()) / std::abs(t.system.det());
    j["cutoff_words"] = cfg.cutoff_words;
    j["cutoff_power"] = cfg.cutoff_power;
  } else if (cfg.route == "fock") {
    // The oracle sums 1/det; report its reciprocal.
    const cplx inv = fock_oracle(s, cfg.cutoff_weight);
    j["cross_route"] = "fock";
    j["cross_value"] = to_json(1.0 / inv);
    j["cross_rel_diff"] = std::abs(1.0 / inv - t.system.det()) / std::abs(t.system.det());
    j["cutoff_weight"] = cfg.cutoff_weight;
  } else if (cfg.route != "det") {
    throw DomainError("--route must be det, mz or fock");
  }
  if (!cfg.dump.empty()) {
    write_moment_dump(t.system, cfg.dump);
    j["dump"] = cfg.dump;
  }
  if (!cfg.sweep.empty()) {
    write_sweep(s, cfg.sweep);
    j["sweep"] = cfg.sweep;
  }
  return j;
}

json cmd_partition(const SchottkySurface& s, const JobConfig& cfg) {
  const json req = cfg.request.empty() ? json::object() : read_json_file(cfg.request);
  if (cfg.kind == "lattice") {
    if (!req.contains("gram")) throw DomainError("lattice partition needs a request with \"gram\"");
    const auto& gj = req["gram"];
    const int d = static_cast<int>(gj.size());
    Eigen::MatrixXd gram(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) gram(i, k) = gj[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    const double cutoff = req.value("norm_cutoff", 20.0);
    const LatticeResult r = lattice_partition(s, gram, cutoff, kAutoStartK, cfg.tol);
    return {{"value", to_json(r.value)}, {"theta", to_json(r.theta)}, {"tail_estimate", r.tail_estimate},
            {"norm_cutoff", cutoff}, {"K_used", r.K_used}, {"route", "det"}};
  }
  const Truncation t = truncate(s, cfg);
  if (cfg.kind == "rank2") return with_value(1.0 / t.system.det(), t, "det");
  if (cfg.kind == "rank1") {
    ConvergedSystem c{t.system, t.K_used, t.tol_achieved, t.history};
    const PartitionResult r = rank1_from(c);
    json j = with_value(r.value, t, "det");
    j["branch_flag"] = r.branch_flag;
    return j;
  }
  if (cfg.kind == "charged") return with_value(charged_from(t.system, charges_from_json(req, s.genus())), t, "det");
  throw DomainError("--kind must be rank1, rank2, charged or lattice");
}

json form_json(const FormValue& f, const Truncation& t) {
  json j = with_value(f.value, t, "det");
  j["outside_fundamental_domain"] = f.outside_fundamental_domain;
  return j;
}

json cmd_correlate(const SchottkySurface& s, const JobConfig& cfg) {
  if (cfg.request.empty()) throw DomainError("correlate needs --request FILE");
  const json req = read_json_file(cfg.request);
  const std::string kind = req.value("kind", std::string("rank2"));
  const Truncation t = truncate(s, cfg);
  const int g = s.genus();
  const cplx z0 = req.contains("z0") ? complex_from_json(req["z0"]) : cplx(0.0);
  CorrelatorResult r;
  if (kind == "rank2") {
    InsertionSet ins{points_from_json(req, "y_plus"), points_from_json(req, "y_minus"), points_from_json(req, "z"), {}, z0};
    if (req.contains("beta"))
      for (const auto& b : req["beta"]) ins.beta.push_back(charge_from_json(b));
    r = generating_rank2(t.system, ins, charges_from_json(req, g));
  } else if (kind == "rank1") {
    Rank1InsertionSet ins{points_from_json(req, "y"), points_from_json(req, "z"), points_from_json(req, "beta"), z0};
    std::vector<cplx> alpha = points_from_json(req, "alpha");
    if (alpha.empty()) alpha.assign(static_cast<std::size_t>(g), 0.0);
    r = generating_rank1(t.system, ins, alpha);
  } else if (kind == "fermion") {
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(g);
    if (req.contains("alpha_shift"))
      for (int a = 0; a < g; ++a) shift(a) = req["alpha_shift"][static_cast<std::size_t>(a)].get<double>();
    r = fermion_generating(t.system, points_from_json(req, "x"), points_from_json(req, "y"), shift, cfg.cutoff_theta);
  } else if (kind == "virasoro") {
    if (!req.contains("z")) throw DomainError("virasoro request needs \"z\"");
    r.value = virasoro_1pt(t.system, charges_from_json(req, g), complex_from_json(req["z"]));
    r.K_used = t.K_used;
  } else {
    throw DomainError("request kind must be rank2, rank1, fermion or virasoro");
  }
  json j = with_value(r.value, t, "det");
  j["kind"] = kind;
  j["branch_flag"] = r.branch_flag;
  j["z0"] = to_json(z0);
  return j;
}

json cmd_words(const SchottkySurface& s, const JobConfig& cfg) {
  json lengths = json::array();
  for (int n = 1; n <= cfg.cutoff_words; ++n) {
    std::size_t reduced = 0, cyclic = 0;
    for_each_reduced_word(s.genus(), static_cast<std::size_t>(n), [&](const GroupWord& w) {
      ++reduced;
      if (w.is_cyclically_reduced()) ++cyclic;
    });
    std::size_t primitive = 0;
    double qmax = 0.0;
    for (const GroupWord& w : primitive_class_reps(s, static_cast<std::size_t>(n))) {
      if (static_cast<int>(w.length()) != n) continue;
      ++primitive;
      qmax = std::max(qmax, std::abs(moebius_multiplier(word_map(s, w))));
    }
    lengths.push_back({{"length", n},
                       {"reduced_words", reduced},
                       {"cyclically_reduced", cyclic},
                       {"primitive_classes", primitive},
                       {"max_abs_multiplier", qmax}});
  }
  json gens = json::array();
  for (int a = 1; a <= s.genus(); ++a) {
    const MultiplierData m = multiplier_and_fixed_points(s, a);
    gens.push_back({{"handle", a}, {"q", to_json(m.q)}, {"W_plus", to_json(m.W_plus)}, {"W_minus", to_json(m.W_minus)}});
  }
  return {{"generators", gens}, {"words", lengths}, {"cutoff_words", cfg.cutoff_words}};
}

// Random points in the fundamental domain, clear of every circle by a margin.
std::vector<cplx> sample_points(const SchottkySurface& s, std::mt19937_64& rng, std::size_t count) {
  double lo_re = 1e300, hi_re = -1e300, lo_im = 1e300, hi_im = -1e300;
  for (int a : s.indices()) {
    lo_re = std::min(lo_re, s.w(a).real());
    hi_re = std::max(hi_re, s.w(a).real());
    lo_im = std::min(lo_im, s.w(a).imag());
    hi_im = std::max(hi_im, s.w(a).imag());
  }
  std::uniform_real_distribution<double> ure(lo_re - 1.5, hi_re + 1.5), uim(lo_im - 1.5, hi_im + 1.5);
  std::vector<cplx> out;
  while (out.size() < count) {
    const cplx z(ure(rng), uim(rng));
    bool ok = true;
    for (int a : s.indices()) ok = ok && std::abs(z - s.w(a)) > 2.0 * s.radius(a);
    if (ok) out.push_back(z);
  }
  return out;
}

struct CheckTable {
  json rows = json::array();
  bool all_pass = true;

  void add(const std::string& name, double measured, double tolerance) {
    const bool pass = measured <= tolerance;
    all_pass = all_pass && pass;
    rows.push_back({{"check", name}, {"measured", measured}, {"tolerance", tolerance}, {"pass", pass}});
  }
};

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

json cmd_verify(const SchottkySurface& s, const JobConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const Truncation t = truncate(s, cfg);
  const MomentSystem& sys = t.system;
  const int g = s.genus();
  CheckTable table;
  const auto pts = sample_points(s, rng, 10);

  double sym = 0.0, poinc = 0.0, nu_routes = 0.0, anti = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
    const cplx x = pts[i], y = pts[i + 1];
    const cplx wxy = omega(sys, x, y).value;
    sym = std::max(sym, rel(omega(sys, y, x).value, wxy));
    poinc = std::max(poinc, rel(omega_poincare(s, x, y, cfg.cutoff_words).value, wxy));
    anti = std::max(anti, rel(-prime_form_K(sys, y, x).value, prime_form_K(sys, x, y).value));
    for (int b = 1; b <= g; ++b) nu_routes = std::max(nu_routes, rel(nu_left(sys, b, x).value, nu(sys, b, x).value));
  }
  table.add("omega_symmetry", sym, 1e-10);
  table.add("omega_sewing_vs_poincare", poinc, 1e-6);
  table.add("nu_two_routes", nu_routes, 1e-10);
  table.add("prime_form_antisymmetry", anti, 1e-10);

  double alpha_norm = 0.0, alpha_omega = 0.0;
  for (int a = 1; a <= g; ++a) {
    for (int b = 1; b <= g; ++b) {
      const cplx v = contour_integral([&](cplx z) { return nu(sys, b, z).value; }, s.w(-a), 1.1 * s.radius(a), 256, true);
      alpha_norm = std::max(alpha_norm, std::abs(v - (a == b ? kTwoPiI : cplx(0.0))));
    }
    const cplx v = contour_integral([&](cplx z) { return omega(sys, pts[0], z).value; }, s.w(-a), 1.1 * s.radius(a), 256, true);
    alpha_omega = std::max(alpha_omega, std::abs(v));
  }
  table.add("nu_alpha_periods", alpha_norm, 1e-8);
  table.add("omega_alpha_periods", alpha_omega, 1e-8);

  double res = 0.0;
  {
    const cplx p = pts[2], q = pts[3], x = pts[4];
    const double r = 0.25 * std::min(std::abs(p - q), std::abs(p - x));
    const cplx rp = contour_integral([&](cplx z) { return omega_third_kind(sys, p, q, z).value; }, p, r, 128) / kTwoPiI;
    const cplx rq = contour_integral([&](cplx z) { return omega_third_kind(sys, p, q, z).value; }, q, r, 128) / kTwoPiI;
    res = std::max(std::abs(rp - 1.0), std::abs(rq + 1.0));
  }
  table.add("third_kind_residues", res, 1e-8);

  const PeriodMatrix pm = period_matrix(sys);
  table.add("period_matrix_symmetry", pm.symmetry_residual, 1e-9);
  table.add("period_matrix_im_positive_definite", pm.im_positive_definite ? 0.0 : 1.0, 0.0);

  // beta_a from gamma_a z0 back to z0 on C_a, modulo 2 pi i
  double beta = 0.0, invariance = 0.0;
  for (int a = 1; a <= g; ++a) {
    const cplx z0 = s.w(a) + s.radius(a) * std::polar(1.0, 0.7);
    const MoebiusMap ga = generator(s, a);
    const cplx z1 = ga(z0);
    const cplx zo = s.w(a) + 1.5 * s.radius(a) * std::polar(1.0, 2.3);
    for (int b = 1; b <= g; ++b) {
      const cplx d = abelian_integral(sys, b, z0, z1).value - kTwoPiI * pm.values(a - 1, b - 1);
      beta = std::max(beta, std::abs(cplx(d.real(), std::remainder(d.imag(), 2.0 * std::numbers::pi))));
      invariance = std::max(invariance, rel(nu(sys, b, ga(zo)).value * ga.derivative(zo), nu(sys, b, zo).value));
    }
  }
  table.add("beta_periods", beta, 1e-6);
  table.add("nu_generator_invariance", invariance, 1e-6);

  double dmat = 0.0;
  const int Kd = std::min(sys.K(), 20);
  const MomentSystem small = MomentSystem::build(s, Kd);
  for (int a : s.indices())
    for (int b : s.indices()) {
      if (a == -b) continue;
      const LambdaMu la = lambda_mu(s, a), lb = lambda_mu(s, b);
      const DMatrix d = d_matrix(la.mu * lb.lambda.inverse(), Kd);
      const ComplexMatrix block = small.A().block(small.index(a, 1), small.index(b, 1), Kd, Kd);
      dmat = std::max(dmat, (block - d.values).cwiseAbs().maxCoeff());
    }
  table.add("moment_matrix_vs_D", dmat, 1e-10);

  table.add("det_escalation", t.tol_achieved, std::max(cfg.tol, 1e-6));
  table.add("det_vs_montonen_zograf", rel(montonen_zograf(s, cfg.cutoff_power, cfg.cutoff_words), sys.det()), 1e-6);
  const cplx r1 = 1.0 / std::sqrt(sys.det());
  table.add("rank1_squared_is_rank2", rel(r1 * r1, 1.0 / sys.det()), 1e-14);

  json j = {{"checks", table.rows}, {"all_pass", table.all_pass}, {"seed", cfg.seed}};
  j.update(provenance(t, "det"));
  if (!table.all_pass) {
    std::cout << j.dump(2) << "\n";
    throw VerifyFailure("verification suite reported failures");
  }
  return j;
}

json run(const JobConfig& cfg) {
  const SchottkySurface s = load_surface(cfg.surface_path);
  const std::string& c = cfg.command;
  if (c == "period-matrix") return cmd_period_matrix(s, cfg);
  if (c == "det") return cmd_det(s, cfg);
  if (c == "partition") return cmd_partition(s, cfg);
  if (c == "words") return cmd_words(s, cfg);
  if (c == "verify") return cmd_verify(s, cfg);
  if (c == "correlate") return cmd_correlate(s, cfg);
  const Truncation t = truncate(s, cfg);
  if (c == "omega") return form_json(omega(t.system, parse_point(cfg.x, "--x"), parse_point(cfg.y, "--y")), t);
  if (c == "nu") return form_json(nu(t.system, cfg.b, parse_point(cfg.x, "--x")), t);
  if (c == "prime-form") return form_json(prime_form_K(t.system, parse_point(cfg.x, "--x"), parse_point(cfg.y, "--y")), t);
  if (c == "third-kind")
    return form_json(omega_third_kind(t.system, parse_point(cfg.p, "--p"), parse_point(cfg.q, "--q"), parse_point(cfg.x, "--x")), t);
  throw DomainError("unknown command " + c);
}

void emit(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open " + path);
  os << text;
}

void report_error(const std::exception& e) {
  json j = {{"error", e.what()}};
  if (const auto* sv = dynamic_cast<const SurfaceValidationError*>(&e)) {
    json pairs = json::array();
    for (const auto& [a, b] : sv->offending_pairs()) pairs.push_back({a, b});
    j["offending_pairs"] = pairs;
  }
  if (const auto* ce = dynamic_cast<const ConvergenceError*>(&e)) {
    j["previous"] = to_json(ce->previous());
    j["last"] = to_json(ce->last());
  }
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  JobConfig cfg;
  CLI::App app{"Schottky-uniformized surfaces: forms, determinants and Heisenberg generating functions"};
  app.add_option("--surface", cfg.surface_path, "surface JSON file")->required();
  app.add_option("--command", cfg.command, "command")
      ->required()
      ->check(CLI::IsMember({"period-matrix", "det", "partition", "omega", "nu", "prime-form", "third-kind",
                             "correlate", "verify", "words"}));
  app.add_option("--K", cfg.K, "truncation order or \"auto\"");
  app.add_option("--tol", cfg.tol, "relative tolerance for K escalation")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out, "write JSON here instead of stdout");
  app.add_option("--seed", cfg.seed, "seed for randomized checks");
  app.add_option("--route", cfg.route, "det cross-check route: det, mz or fock");
  app.add_option("--cutoff-words", cfg.cutoff_words, "maximum word length")->check(CLI::PositiveNumber);
  app.add_option("--cutoff-power", cfg.cutoff_power, "maximum multiplier power")->check(CLI::PositiveNumber);
  app.add_option("--cutoff-weight", cfg.cutoff_weight, "Fock-sum weight cutoff")->check(CLI::Range(1, 8));
  app.add_option("--cutoff-theta", cfg.cutoff_theta, "theta sum cutoff ||m||_inf")->check(CLI::NonNegativeNumber);
  app.add_option("--request", cfg.request, "request JSON for partition/correlate");
  app.add_option("--kind", cfg.kind, "partition kind: rank1, rank2, charged, lattice");
  app.add_option("--dump", cfg.dump, "binary dump of A and det (det command)");
  app.add_option("--sweep", cfg.sweep, "CSV of det against K (det command)");
  app.add_option("--x", cfg.x, "point re,im");
  app.add_option("--y", cfg.y, "point re,im");
  app.add_option("--p", cfg.p, "point re,im");
  app.add_option("--q", cfg.q, "point re,im");
  app.add_option("--b", cfg.b, "handle index 1..g");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    emit(run(cfg), cfg.out);
    return 0;
  } catch (const VerifyFailure& e) {
    report_error(e);
    return 3;
  } catch (const ConvergenceError& e) {
    report_error(e);
    return 2;
  } catch (const std::exception& e) {
    report_error(e);
    return 1;
  }
}
