// Command line front end. Exit codes: 0 success, 2 precondition failure,
// 3 invariant violation.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "boxcorner/corners.hpp"
#include "boxcorner/error.hpp"
#include "boxcorner/increment.hpp"
#include "boxcorner/io.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/oracle.hpp"
#include "boxcorner/parallel.hpp"
#include "boxcorner/pipeline.hpp"
#include "boxcorner/systems.hpp"
#include "boxcorner/uniformize.hpp"

using namespace bc;
using io::Json;

namespace {

struct Globals {
  std::string space = "5^1";
  std::string set_file, config_file, system_file, out_file;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string format = "json";
  double density = -1;
  int arity = 3;
};

// flat key,value rows; arrays joined with ';'
std::string flat_csv(const Json& j) {
  std::ostringstream os;
  os << "key,value\n";
  for (auto& [k, v] : j.items()) {
    if (v.is_object()) continue;
    os << k << ",";
    if (v.is_array()) {
      bool first = true;
      for (auto& e : v) {
        if (e.is_structured()) continue;
        os << (first ? "" : ";") << (e.is_string() ? e.get<std::string>() : e.dump());
        first = false;
      }
    } else {
      os << (v.is_string() ? v.get<std::string>() : v.dump());
    }
    os << "\n";
  }
  return os.str();
}

void emit(const Globals& g, const Json& j, const std::string& csv = "") {
  std::string text = g.format == "csv" ? (csv.empty() ? flat_csv(j) : csv) : j.dump(2) + "\n";
  if (g.out_file.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(g.out_file);
    require(static_cast<bool>(out), "cannot write " + g.out_file);
    out << text;
  }
}

PipelineConfig load_config(const Globals& g) {
  PipelineConfig c = g.config_file.empty() ? PipelineConfig{} : io::read_config(g.config_file);
  if (g.config_file.empty() || !io::read_json(g.config_file).contains("space"))
    std::tie(c.p, c.n) = parse_space(g.space);
  c.seed = g.seed;
  c.validate();
  return c;
}

// --set FILE, or a random set of the given density on the --space
io::SetData load_set(const Globals& g, int arity) {
  if (!g.set_file.empty()) return io::read_set(g.set_file);
  require(g.density >= 0, "need --set FILE or --density D");
  io::SetData s;
  std::tie(s.p, s.n) = parse_space(g.space);
  s.arity = arity;
  std::size_t size = 1;
  for (int r = 0; r < arity; ++r) size *= s.N();
  s.A = random_set(size, g.density, g.seed);
  return s;
}

// --system FILE, or the trivial system carrying the set as A
CornerSystem load_system(const Globals& g) {
  if (!g.system_file.empty()) return io::read_system(g.system_file);
  auto s = load_set(g, 3);
  require(s.arity == 3, "a corner system needs a set of arity 3");
  CornerSystem cs{TSystem::trivial(io::make_cube(s.p, s.n)), s.A};
  cs.validate();
  return cs;
}

std::vector<int> axes(const io::SetData& s) { return std::vector<int>(s.arity, s.N()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corner-free sets, box norms and density increments on F_p^n"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--space", g.space, "group F_p^n as p^n")->capture_default_str();
  app.add_option("--set", g.set_file, "point set file (text or JSON)");
  app.add_option("--system", g.system_file, "corner system JSON");
  app.add_option("--config", g.config_file, "pipeline config JSON");
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads (default: BOXCORNER_WORKERS or 1)");
  app.add_option("--format", g.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--density", g.density, "random set density when no --set is given");
  app.add_option("--arity", g.arity, "arity of a random set")->capture_default_str();
  app.add_option("--out", g.out_file, "write output here instead of stdout");

  auto* norm = app.add_subcommand("norm", "balanced box or U(3) norm of a set");
  std::string kind = "box";
  bool with_oracle = false;
  norm->add_option("--kind", kind)->check(CLI::IsMember({"box", "u3"}))->capture_default_str();
  norm->add_flag("--oracle", with_oracle, "also evaluate the definitional oracle");

  auto* corners = app.add_subcommand("corners", "count corners and find one");
  bool count_only = false;
  corners->add_flag("--count-only", count_only);

  auto* admissible = app.add_subcommand("admissible", "admissibility clauses of a system");
  double eps = -1, aC = 64, aK = 0.01;
  admissible->add_option("--eps", eps, "defaults to P(A:T)");
  admissible->add_option("--C", aC)->capture_default_str();
  admissible->add_option("--kappa-admiss", aK)->capture_default_str();

  auto* increment = app.add_subcommand("increment", "box Paley-Zygmund or T-box increments");
  std::string mode = "dinc";
  int ell = 4;
  double tau = -1, kappa = -1;
  increment->add_option("--mode", mode)
      ->check(CLI::IsMember({"bpz2", "tbox", "dinc"}))
      ->capture_default_str();
  increment->add_option("--ell", ell, "frame for tbox")->capture_default_str();
  increment->add_option("--tau", tau, "required box ratio for tbox (default: measured)");
  increment->add_option("--kappa", kappa, "kappa for dinc (default: config)");

  auto* uniformize = app.add_subcommand("uniformize", "T-uniformizer or the uniformizing lemma");
  double uT = 0.5, tauT = 0.1, udelta = -1, uv = -1;
  bool lemma = false;
  uniformize->add_option("--uT", uT)->capture_default_str();
  uniformize->add_option("--tauT", tauT)->capture_default_str();
  uniformize->add_flag("--lemma", lemma, "run the uniformizing lemma (needs --delta, --v)");
  uniformize->add_option("--delta", udelta);
  uniformize->add_option("--v", uv);

  auto* pipeline = app.add_subcommand("pipeline", "the corner-or-increment recursion");

  auto* oracle_cmd = app.add_subcommand("oracle", "definitional reference computations");
  std::string op = "boxnorm";
  int oN = 3, od = 2, trials = 200;
  std::vector<int> dims{32, 32};
  oracle_cmd->add_option("--op", op)
      ->check(CLI::IsMember({"boxnorm", "corners", "maxfree", "randstats"}))
      ->capture_default_str();
  oracle_cmd->add_option("--N", oN, "cyclic group order for maxfree")->capture_default_str();
  oracle_cmd->add_option("--d", od, "corner dimension for maxfree")->capture_default_str();
  oracle_cmd->add_option("--dims", dims, "axis sizes for randstats")->delimiter(',');
  oracle_cmd->add_option("--trials", trials)->capture_default_str();

  auto* report = app.add_subcommand("report", "re-emit a saved trace as JSON or CSV");
  std::string input;
  report->add_option("--input", input, "trace JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (g.workers > 0) set_workers(g.workers);

    if (norm->parsed()) {
      if (kind == "u3") {
        auto s = load_set(g, 1);
        require(s.arity == 1, "the U(3) norm needs a set of arity 1");
        auto H = Group::field(s.p, s.n);
        double d = static_cast<double>(s.A.count()) / H->size();
        auto f = balanced(s.A, d);
        Json j = {{"kind", "u3"}, {"density", d}, {"norm", u3_norm(f, *H)}, {"power", u3_pow(f, *H)}};
        if (with_oracle) j["oracle"] = io::to_json(oracle::u3_pow_def(f, *H));
        emit(g, j);
      } else {
        auto s = load_set(g, g.arity);
        double d = static_cast<double>(s.A.count()) / s.A.size();
        auto f = balanced(s.A, d);
        Json j = {{"kind", "box"},
                  {"arity", s.arity},
                  {"density", d},
                  {"norm", box_norm(f, axes(s))},
                  {"power", box_pow(f, axes(s))}};
        if (with_oracle) j["oracle"] = io::to_json(oracle::box_pow_def(f, axes(s)));
        emit(g, j);
      }
    } else if (corners->parsed()) {
      auto s = load_set(g, g.arity);
      auto G = Group::field(s.p, s.n);
      Json j = {{"arity", s.arity},
                {"size", s.A.count()},
                {"nontrivial", count_corners(s.A, *G, s.arity)},
                {"with_trivial", count_corners(s.A, *G, s.arity, true)}};
      if (s.arity == 3) {
        auto cube = io::make_cube(s.p, s.n);
        auto f = s.A.as_function();
        j["Q_times_N4"] = q_form(*cube, {nullptr, &f, &f, &f, &f}) * std::pow(cube->N(), 4);
      }
      if (!count_only) {
        auto w = find_corner(s.A, *G, s.arity);
        j["corner"] = w ? io::to_json(*w) : Json(nullptr);
      }
      emit(g, j);
    } else if (admissible->parsed()) {
      auto cs = load_system(g);
      double e = eps > 0 ? eps : std::min(cond_prob(cs.A, cs.sys.T), 1 - 1e-12);
      require(e > 0, "eps must be positive (A empty?)");
      Json j = io::to_json(is_admissible(cs.sys, e, aC, aK));
      j["eps"] = e;
      j["densities"] = io::to_json(densities(cs));
      emit(g, j);
    } else if (increment->parsed()) {
      auto cfg = load_config(g);
      if (mode == "bpz2") {
        auto s = load_set(g, 2);
        require(s.arity == 2, "bpz2 needs a set of arity 2");
        emit(g, io::to_json(box_pz_2d(s.A, s.N(), s.N(), cfg.uni.bpz, cfg.inc.anchor_limit, g.seed)));
      } else if (mode == "tbox") {
        auto cs = load_system(g);
        Bits V = cs.sys.t_ell(ell);
        require(cs.A.subset_of(V), "A must lie inside T_ell");
        double t = tau;
        if (t <= 0) {
          auto f = balanced(cs.A, V);
          double den = frame_box_norm(*cs.sys.cube, V.as_function(), ell);
          t = den > 0 ? frame_box_norm(*cs.sys.cube, f, ell) / den : 0;
        }
        emit(g, io::to_json(weighted_tbox_increment(cs.sys, cs.A, V, t, cfg.inc, ell)));
      } else {
        auto cs = load_system(g);
        emit(g, io::to_json(density_increment(cs, kappa > 0 ? kappa : cfg.kappa, cfg.inc)));
      }
    } else if (uniformize->parsed()) {
      auto cfg = load_config(g);
      auto cs = load_system(g);
      if (lemma) {
        require(udelta > 0 && uv > 0, "--lemma needs --delta and --v");
        emit(g, io::to_json(uniformizing_lemma(cs, udelta, uv, cfg.uni)));
      } else {
        emit(g, io::to_json(t_uniformize(cs.sys, uT, tauT, cfg.uni)));
      }
    } else if (pipeline->parsed()) {
      auto cfg = load_config(g);
      io::SetData s;
      if (!g.set_file.empty()) {
        s = io::read_set(g.set_file);
        require(s.arity == 3, "the pipeline needs a set of arity 3");
        cfg.p = s.p;
        cfg.n = s.n;
      } else {
        require(g.density >= 0, "need --set FILE or --density D");
        s.p = cfg.p;
        s.n = cfg.n;
        s.arity = 3;
        s.A = random_set(static_cast<std::size_t>(std::pow(s.N(), 3)), g.density, g.seed);
      }
      auto tr = run_pipeline(io::make_cube(s.p, s.n), s.A, cfg);
      emit(g, io::to_json(tr), g.format == "csv" ? io::trace_csv(tr) : "");
    } else if (oracle_cmd->parsed()) {
      if (op == "maxfree") {
        emit(g, io::to_json(oracle::max_cornerfree(oN, od)));
      } else if (op == "randstats") {
        require(g.density >= 0, "randstats needs --density");
        emit(g, io::to_json(oracle::random_set_stats(dims, g.density, trials, g.seed)));
      } else if (op == "boxnorm") {
        auto s = load_set(g, g.arity);
        double d = static_cast<double>(s.A.count()) / s.A.size();
        Json j = {{"density", d},
                  {"indicator", io::to_json(oracle::box_pow_def(s.A.as_function(), axes(s)))},
                  {"balanced", io::to_json(oracle::box_pow_def(balanced(s.A, d), axes(s)))},
                  {"norm", oracle::box_norm_def(balanced(s.A, d), axes(s))}};
        emit(g, j);
      } else {
        auto s = load_set(g, 3);
        require(s.arity == 3, "oracle corners needs a set of arity 3");
        auto cube = io::make_cube(s.p, s.n);
        auto f = s.A.as_function();
        auto q = oracle::q_def(*cube, {nullptr, &f, &f, &f, &f});
        Json j = {{"Q", io::to_json(q)},
                  {"Q_times_N4", q.num64()},
                  {"size", s.A.count()},
                  {"nontrivial", q.num64() - static_cast<std::int64_t>(s.A.count())}};
        emit(g, j);
      }
    } else if (report->parsed()) {
      auto tr = io::trace_from_json(io::read_json(input));
      emit(g, io::to_json(tr), g.format == "csv" ? io::trace_csv(tr) : "");
    }
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
