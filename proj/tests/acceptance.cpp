// Acceptance run: one PASS/FAIL line per criterion.
//
//   boxcorner_acceptance [--only 1,5] [--known-failure 8]
//
// Exit status is 0 when every criterion passes. A criterion named with
// --known-failure must fail, and only in its documented way; it then does
// not count against the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "boxcorner/corners.hpp"
#include "boxcorner/error.hpp"
#include "boxcorner/increment.hpp"
#include "boxcorner/io.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/oracle.hpp"
#include "boxcorner/partition.hpp"
#include "boxcorner/pipeline.hpp"
#include "boxcorner/uniformize.hpp"
#include "gen.hpp"

using namespace bc;
using bc::testgen::Gen;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  // set when the failure matches the documented deviation
  bool documented = false;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// plain relative error; the floor only matters when the reference is exactly 0
constexpr double kRelFloor = 1e-300;
double rel_err(double fast, double ref) {
  return std::abs(fast - ref) / std::max(std::abs(ref), kRelFloor);
}

OmegaSet random_omega(Gen& g, int arity, int lambda) {
  auto all = OmegaSet::cube(arity, lambda);
  OmegaSet om{arity, lambda, {}};
  while (om.maps.empty())
    for (auto& m : all.maps)
      if (g.coin(0.4)) om.maps.push_back(m);
  return om;
}

std::vector<double> indicator_or_values(Gen& g, std::size_t n, bool indicator) {
  if (!indicator) return g.values(n);
  return g.subset(n, g.uniform(0.2, 0.9)).as_function();
}

// ---- 1 ------------------------------------------------------------------------

void oracle_equivalence(Verdict& o) {
  auto t0 = Clock::now();
  constexpr int kInstances = 500;
  constexpr double kTol = 1e-10;
  Gen g(101);
  double worst[5] = {0, 0, 0, 0, 0};
  int exact_checked = 0;
  auto note = [&](int which, double fast, const oracle::Exact& ref) {
    worst[which] = std::max(worst[which], rel_err(fast, ref.value));
    if (ref.exact) {
      ++exact_checked;
      double q = static_cast<double>(ref.num64()) / static_cast<double>(ref.den64());
      worst[which] = std::max(worst[which], rel_err(fast, q));
    }
  };

  for (int t = 0; t < kInstances; ++t) {
    int k = g.range(1, 4);
    auto dims = g.dims(k, 1, k == 4 ? 4 : 6);
    auto f = indicator_or_values(g, testgen::volume(dims), t % 4 == 0);
    note(0, box_pow(f, dims), oracle::box_pow_def(f, dims));
  }
  std::vector<GroupPtr> groups{Group::cyclic(2), Group::cyclic(3), Group::field(2, 2),
                               Group::cyclic(4), Group::field(5, 1), Group::cyclic(6)};
  for (int t = 0; t < kInstances; ++t) {
    auto& H = groups[g.below(groups.size())];
    auto f = indicator_or_values(g, H->size(), t % 4 == 0);
    note(1, u3_pow(f, *H), oracle::u3_pow_def(f, *H));
  }
  for (int t = 0; t < kInstances; ++t) {
    auto cube = testgen::cube(t % 2 ? 5 : 3, 1);
    auto sys = testgen::random_system(cube, g, 0.8, 0.8);
    int lambda = g.range(1, 2);
    auto ctx = form_context(sys, 3, lambda);
    auto om = random_omega(g, 3, lambda);
    std::vector<std::vector<double>> tabs(om.size());
    std::vector<const std::vector<double>*> fs;
    for (auto& tb : tabs) {
      tb = indicator_or_values(g, cube->size(), t % 4 == 0);
      fs.push_back(&tb);
    }
    note(2, linear_form_L(ctx, om, fs), oracle::L_def(ctx, om, fs));
  }
  for (int t = 0; t < kInstances; ++t) {
    auto cube = testgen::cube(t % 5 == 0 ? 2 : 3, 1);
    auto sys = testgen::random_system(cube, g, 0.8, 0.8);
    int lambda = g.range(1, 2);
    auto ctx = form_context(sys, 4, lambda);
    auto om = random_omega(g, 4, lambda);
    std::vector<std::vector<double>> tabs(om.size());
    std::vector<const std::vector<double>*> fs;
    std::vector<int> ell;
    for (auto& tb : tabs) {
      tb = indicator_or_values(g, cube->size(), t % 4 == 0);
      fs.push_back(&tb);
      ell.push_back(g.range(1, 4));
    }
    note(3, linear_form_Lambda(ctx, om, ell, fs), oracle::Lambda_def(ctx, om, ell, fs));
  }
  for (int t = 0; t < kInstances; ++t) {
    auto& H = groups[g.below(groups.size())];
    Cube cube(H);
    std::array<std::vector<double>, 5> tabs;
    std::array<const std::vector<double>*, 5> fs{};
    bool ind = t % 2 == 0;
    for (int j = 1; j <= 4; ++j) {
      tabs[j] = indicator_or_values(g, cube.size(), ind);
      fs[j] = &tabs[j];
    }
    auto fwd = oracle::q_def(cube, fs);
    auto rev = oracle::q_def(cube, fs, oracle::Order::Reverse);
    if (fwd.exact) o.require(fwd.num64() == rev.num64() && fwd.den64() == rev.den64(), "Q loop orders");
    note(4, q_form(cube, fs), fwd);
  }
  double secs = seconds_since(t0);
  const char* names[5] = {"box", "U(3)", "L", "Lambda", "Q"};
  for (int i = 0; i < 5; ++i) {
    o.require(worst[i] <= kTol, std::string(names[i]) + " relative error");
    o.detail << names[i] << " " << kInstances << " worst " << worst[i] << "; ";
  }
  o.require(secs < 120, "runtime");
  o.detail << "exact refs " << exact_checked << "; " << secs << " s";
}

// ---- 2 ------------------------------------------------------------------------

std::vector<double> product_of_lifts(const std::vector<std::pair<unsigned, std::vector<double>>>& fam,
                                     const std::vector<int>& dims) {
  std::vector<double> out(testgen::volume(dims), 1.0);
  for (auto& [mask, tab] : fam) {
    auto L = lift_face(tab, mask, dims);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= L[i];
  }
  return out;
}

// distinct nonempty faces, none inside another
std::vector<unsigned> random_antichain(Gen& g, int k, int max_size) {
  std::vector<unsigned> out;
  for (unsigned m = 1; m < (1u << k); ++m) {
    if (std::popcount(m) > max_size || !g.coin(0.5)) continue;
    bool ok = true;
    for (unsigned w : out) ok = ok && (w & m) != w && (w & m) != m;
    if (ok) out.push_back(m);
  }
  if (out.empty()) out.push_back(1u << g.below(k));
  return out;
}

void gcs_suite(Verdict& o) {
  constexpr int kInstances = 500;
  constexpr double kSlack = -1e-9;
  Gen g(202);
  // name, least rhs - lhs seen
  std::vector<std::pair<std::string, double>> margin;
  auto run = [&](const std::string& name, const std::function<std::pair<double, double>()>& one) {
    double least = 1e300;
    for (int t = 0; t < kInstances; ++t) {
      auto [lhs, rhs] = one();
      least = std::min(least, rhs - lhs);
    }
    margin.push_back({name, least});
  };

  run("gcs", [&] {
    auto d = g.dims(g.range(1, 3), 1, 4);
    std::vector<std::vector<double>> fam(std::size_t{1} << d.size());
    double rhs = 1;
    for (auto& f : fam) {
      f = g.values(testgen::volume(d));
      rhs *= box_norm(f, d);
    }
    return std::pair{std::abs(gcs_form(fam, d)), rhs};
  });
  run("triangle", [&] {
    auto d = g.dims(g.range(1, 3), 1, 5);
    auto f = g.values(testgen::volume(d)), h = g.values(testgen::volume(d));
    std::vector<double> s(f.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = f[i] + h[i];
    return std::pair{box_norm(s, d), box_norm(f, d) + box_norm(h, d)};
  });
  run("top face", [&] {
    int k = g.range(1, 3);
    auto d = g.dims(k, 1, 5);
    std::vector<std::pair<unsigned, std::vector<double>>> fam;
    for (unsigned m = 0; m < (1u << k); ++m)
      fam.push_back({m, g.values(testgen::volume(face_dims(d, m)))});
    double lhs = std::abs(mean(product_of_lifts(fam, d)));
    return std::pair{lhs, box_norm(fam.back().second, d)};
  });
  run("lower faces", [&] {
    int k = g.range(2, 3);
    auto d = g.dims(k, 1, 5);
    unsigned full = (1u << k) - 1;
    unsigned V0 = 0;
    while (V0 == 0 || V0 == full) V0 = static_cast<unsigned>(g.below(full + 1));
    std::vector<std::pair<unsigned, std::vector<double>>> fam;
    std::vector<double> f0;
    for (unsigned m = 0; m <= full; ++m) {
      if (std::popcount(m) > std::popcount(V0)) continue;
      auto tab = g.values(testgen::volume(face_dims(d, m)));
      if (m == V0) f0 = tab;
      fam.push_back({m, tab});
    }
    double lhs = std::abs(mean(product_of_lifts(fam, d)));
    return std::pair{lhs, box_norm(f0, face_dims(d, V0))};
  });
  run("set family", [&] {
    int k = g.range(1, 3);
    auto d = g.dims(k, 2, 5);
    FaceFamily S;
    for (unsigned m = 1; m < (1u << k); ++m)
      if (g.coin(0.6) || (S.empty() && m + 1 == (1u << k)))
        S.push_back({m, g.subset(testgen::volume(face_dims(d, m)), g.uniform(0.2, 0.9)).as_function()});
    auto r = set_family_bound(S, d);
    return std::pair{r.lhs, r.rhs};
  });
  run("mixed family", [&] {
    int k = g.range(2, 3);
    auto d = g.dims(k, 2, 5);
    FaceFamily S, F;
    for (unsigned m = 1; m < (1u << k); ++m)
      if (g.coin(0.5) || (S.empty() && m + 1 == (1u << k)))
        S.push_back({m, g.subset(testgen::volume(face_dims(d, m)), g.uniform(0.2, 0.9)).as_function()});
    // f_W may not contain a set face
    for (unsigned w = 1; w < (1u << k); ++w) {
      bool contains = false;
      for (auto& [v, tab] : S) contains = contains || (w & v) == v;
      if (!contains && g.coin(0.7)) F.push_back({w, g.values(testgen::volume(face_dims(d, w)))});
    }
    auto r = mixed_family_bound(S, F, d);
    return std::pair{r.lhs, r.rhs};
  });
  run("conditional family", [&] {
    auto d = g.dims(3, 2, 4);
    auto SU = g.subset(testgen::volume(d), g.uniform(0.3, 0.95)).as_function();
    auto fam = random_antichain(g, 3, 2);
    auto r = conditional_family_bound(SU, d, fam);
    return std::pair{r.lhs, r.rhs};
  });

  for (auto& [name, m] : margin) {
    o.require(m >= kSlack, name);
    o.detail << name << " " << m << "; ";
  }
  o.detail << kInstances << " each";
}

// ---- 3 ------------------------------------------------------------------------

void corner_identity(Verdict& o) {
  Gen g(303);
  int checked = 0;
  for (auto [n, count] : {std::pair{1, 100}, std::pair{2, 20}}) {
    auto H = Group::field(5, n);
    Cube c(H);
    for (int t = 0; t < count; ++t) {
      Bits A = g.subset(c.size(), g.uniform(0.1, 0.9));
      auto f = A.as_function();
      auto q = oracle::q_def(c, {nullptr, &f, &f, &f, &f});
      std::size_t all = count_corners(A, *H, 3, true);
      std::size_t nontrivial = count_corners(A, *H, 3);
      o.require(q.exact, "exact Q");
      __int128 n4 = static_cast<__int128>(H->size()) * H->size() * H->size() * H->size();
      // Q = num/den with den = N^4
      o.require(q.den == n4 && q.num == static_cast<__int128>(all), "Q N^4 = corners with trivial");
      o.require(all - A.count() == nontrivial, "nontrivial = Q N^4 - |A|");
      ++checked;
    }
  }
  o.detail << checked << " sets on F_5 and F_5^2";
}

// ---- 4 ------------------------------------------------------------------------

void von_neumann(Verdict& o) {
  Gen g(404);
  Cube c(Group::field(5, 1));
  double least = 1e300;
  for (int t = 0; t < 500; ++t) {
    auto r = overbox_check(c, g.subset(c.size(), g.uniform()));
    least = std::min(least, r.rhs - r.lhs);
    o.require(r.holds(), "over-box bound");
  }
  auto sys = TSystem::trivial(Group::field(5, 1));
  DecideOptions opt;
  opt.kappa = 1.0;
  int both = 0, corners = 0;
  for (int t = 0; t < 50; ++t) {
    Bits A = g.subset(c.size(), g.uniform(0.85, 0.95));
    auto d = von_neumann_decide({sys, A}, opt);
    bool passes = d.outcome != Outcome::FailsSize && d.outcome != Outcome::NotUniform;
    if (!passes) continue;
    ++both;
    bool ok = d.outcome == Outcome::Corner && d.corner && is_corner(A, c.H(), *d.corner);
    corners += ok;
    o.require(ok, "verified corner when size and uniformity pass");
  }
  o.require(both > 0, "no dense instance passed both conditions");
  o.detail << "over-box least margin " << least << "; both conditions " << both
           << "/50, verified corners " << corners << " (kappa 1)";
}

// ---- 5 ------------------------------------------------------------------------

void increments(Verdict& o) {
  int bpz_ok = 0;
  for (int s = 0; s < 100; ++s) {
    Gen g(s + 1);
    int nx = g.range(12, 20), ny = g.range(12, 20);
    auto pp = testgen::planted_product(nx, ny, g.uniform(0, 0.15), g);
    auto r = box_pz_2d(pp.A, nx, ny);
    bool ok = r.size_ok && r.gain_ok && r.density > r.delta;
    bpz_ok += ok;
  }
  o.require(bpz_ok == 100, "box Paley-Zygmund on planted products");
  o.detail << "bpz " << bpz_ok << "/100 at c = " << BpzConstants{}.c << ", t = " << BpzConstants{}.t
           << "; ";
  auto sys = TSystem::trivial(Group::field(2, 4));
  for (int kind = 1; kind <= 3; ++kind) {
    int ok = 0;
    for (int s = 0; s < 30; ++s) {
      Bits U = testgen::planted_obstruction(*sys.cube, kind, 1000 * kind + s);
      try {
        auto r = weighted_tbox_increment(sys, U, sys.T, 0.01);
        ok += r.branch == kind && r.density_after > r.density_before;
      } catch (const std::exception& e) {
        o.detail << "kind " << kind << " seed " << s << ": " << e.what() << "; ";
      }
    }
    o.require(ok == 30, "branch " + std::to_string(kind));
    o.detail << "branch " << kind << " " << ok << "/30; ";
  }
}

// ---- 6 ------------------------------------------------------------------------

Partition random_partition(Gen& g, std::size_t n, int atoms) {
  std::vector<int> l(n);
  for (auto& x : l) x = g.below(atoms);
  return Partition::from_labels(l);
}

void energy_exactness(Verdict& o) {
  Gen g(606);
  int exact = 0;
  for (int t = 0; t < 200; ++t) {
    int n = g.range(2, 40);
    int b = g.range(1, n - 1);
    int ab = g.range(0, b), abc = g.range(0, n - b);
    int a = ab + abc;
    // two-atom partition {B, complement}: E[E(A:P)^2] directly as a fraction
    __int128 num = static_cast<__int128>(ab) * ab * (n - b) + static_cast<__int128>(abc) * abc * b;
    __int128 den = static_cast<__int128>(b) * (n - b) * n;
    std::int64_t nu_num = static_cast<std::int64_t>(ab) * n - static_cast<std::int64_t>(a) * b;
    RationalValue nu{std::abs(nu_num), static_cast<std::int64_t>(b) * n};
    auto got = energy_increment_exact({a, n}, {b, n}, nu);
    o.require(static_cast<__int128>(got.num) * den == num * got.den, "closed form");
    ++exact;
  }
  o.require(energy_increment_exact({1, 2}, {1, 2}, {1, 4}) == RationalValue{5, 16}, "5/16");
  std::vector<double> A{1, 1, 1, 0, 1, 0, 0, 0};
  o.require(energy(A, Partition::from_labels({0, 0, 0, 0, 1, 1, 1, 1})) == 5.0 / 16, "5/16 direct");

  double cross = 0, tele = 0;
  int monotone = 0;
  for (int t = 0; t < 200; ++t) {
    std::size_t n = g.range(8, 60);
    auto Z = g.values(n);
    std::vector<Partition> chain{Partition::trivial(Bits(n, true))};
    bool mono = true;
    for (int s = 0; s < 4; ++s) {
      chain.push_back(meet(chain.back(), random_partition(g, n, g.range(1, 4))));
      mono = mono && energy(Z, chain.back()) >= energy(Z, chain[chain.size() - 2]) - 1e-12;
    }
    auto r = mds_check(Z, chain);
    o.require(r.refining, "chain refines");
    cross = std::max(cross, r.max_cross);
    tele = std::max(tele, r.telescope_err);
    monotone += mono;
  }
  o.require(cross <= 1e-12, "martingale differences orthogonal");
  o.require(monotone == 200, "energy monotone");
  o.detail << exact << " exact two-atom cases and 5/16; max cross " << cross << ", telescope "
           << tele << "; monotone " << monotone << "/200";
}

// ---- 7 ------------------------------------------------------------------------

void stopping_caps(Verdict& o) {
  // uniformizer workloads; the monitors report to the process ledger
  UniformizeConfig cfg;
  auto cube = testgen::cube(5, 2);
  int N = 25;
  std::array<Bits, 5> S;
  std::array<Bits, 6> R;
  for (int i = 1; i <= 4; ++i) S[i] = Bits(N, true);
  for (auto& r : R) r = Bits(static_cast<std::size_t>(N) * N, true);
  Gen g(7);
  auto R12 = R;
  R12[0] = testgen::planted_product(N, N, 0.0, g).A;
  two_box_uniformize(PartitionSystem::trivial(TSystem::build(cube, S, R12)), cfg);
  auto pp = testgen::planted_product(N, N, 0.0, g);
  Bits T(cube->size());
  for (std::size_t x = 0; x < T.size(); ++x) {
    auto c = cube->coords(x);
    if (pp.A[static_cast<std::size_t>(c[1]) * N + c[2]]) T.set(x);
  }
  auto sys = TSystem::build(cube, S, R, &T);
  t_uniformize(sys, 0.5, 0.1, cfg);
  CornerSystem cs{sys, Bits(cube->size())};
  sys.T.for_each([&](std::size_t x) {
    if (g.coin(0.7)) cs.A.set(x);
  });
  uniformizing_lemma(cs, 0.5, 0.1, cfg);
  auto W = AffineSubspace::from_equations(5, 3, {{1, 1, 0}}, {2});
  Bits coset(125);
  for (int c : W.points()) coset.set(c);
  affine_uniformize({coset}, *Group::field(5, 3), 0.2, 0.1, 1, 3);

  auto led = StoppingMonitor::ledger();
  o.require(led.violations == 0, "a monitor passed its cap");
  o.require(led.max_fill <= 1.0, "fill above one");
  o.detail << led.monitors << " monitors this run (all criteria), violations " << led.violations
           << ", max count/cap " << led.max_fill;
}

// ---- 8 ------------------------------------------------------------------------

// the triples where psi(l,u,v) outgrows 2^^(l + log*(2uv)); see README
const std::vector<std::array<int, 3>> kTowerCounterexamples{
    {1, 3, 2}, {1, 4, 2}, {2, 2, 4}, {2, 3, 2}, {2, 4, 2}, {3, 2, 4}, {3, 3, 2}, {3, 4, 2}};

void towers(Verdict& o) {
  o.require(log_star(4.0) == 2 && log_star(16.0) == 3 && log_star(65536.0) == 4, "log* values");
  std::vector<std::array<int, 3>> fails;
  int strong = 0;
  for (int l = 0; l <= 3; ++l)
    for (int u = 2; u <= 4; ++u)
      for (int v = 2; v <= 4; ++v) {
        if (!tower_bound_holds(l, u, v)) fails.push_back({l, u, v});
        strong += tower_bound_holds(l, u, v, 2);
      }
  o.require(fails.empty(), "psi(l,u,v) <= 2^^(l + log*(2uv))");
  o.detail << "log*(4,16,65536) = 2,3,4; stated bound fails on " << fails.size() << "/36:";
  for (auto& f : fails) o.detail << " (" << f[0] << "," << f[1] << "," << f[2] << ")";
  o.detail << "; with log*(2u^2v) holds " << strong << "/36";
  o.documented = fails == kTowerCounterexamples && strong == 36 && log_star(4.0) == 2 &&
                 log_star(16.0) == 3 && log_star(65536.0) == 4;
}

// ---- 9 ------------------------------------------------------------------------

void extremal(Verdict& o) {
  struct Pinned {
    int N, size;
  };
  for (auto k : {Pinned{2, 2}, Pinned{3, 6}}) {
    auto r = oracle::max_cornerfree(k.N, 2);
    auto G = Group::cyclic(k.N);
    bool free = count_corners(r.witness, *G, 2) == 0;
    o.require(r.exact && r.size == k.size, "R(Z_" + std::to_string(k.N) + ",2)");
    o.require(r.witness_verified && free && static_cast<int>(r.witness.count()) == r.size,
              "witness corner-free");
    o.detail << "R(Z_" << k.N << ",2) = " << r.size << " (" << r.nodes << " nodes); ";
  }
}

// ---- 10 -------------------------------------------------------------------------

void end_to_end(Verdict& o) {
  auto t0 = Clock::now();
  auto cube = io::make_cube(5, 1);
  PipelineConfig cfg;
  int verified = 0, deterministic = 0, iterations = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Bits A = random_set(cube->size(), 0.9, s);
    o.require(find_corner(A, cube->H(), 3).has_value(), "exhaustive search finds a corner");
    cfg.seed = s;
    auto tr = run_pipeline(cube, A, cfg);
    auto again = run_pipeline(cube, A, cfg);
    bool ok = tr.terminal == "corner" && tr.corner && is_corner(A, cube->H(), *tr.corner);
    verified += ok;
    deterministic += io::to_json(tr) == io::to_json(again);
    iterations += static_cast<int>(tr.iterations.size());
  }
  double secs = seconds_since(t0);
  o.require(verified == 200, "verified corners");
  o.require(deterministic == 200, "deterministic traces");
  o.require(secs < 600, "runtime");
  o.detail << "verified corners " << verified << "/200, deterministic " << deterministic
           << "/200, iterations " << iterations << ", " << secs << " s";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only, known;
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--known-failure", known, "criteria expected to fail in their documented way")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  struct Entry {
    int id;
    const char* name;
    void (*run)(Verdict&);
  };
  const Entry entries[] = {{1, "oracle equivalence", oracle_equivalence},
                           {2, "Cauchy-Schwarz suite", gcs_suite},
                           {3, "corner identity", corner_identity},
                           {4, "von Neumann bound", von_neumann},
                           {5, "constructive increments", increments},
                           {6, "energy exactness", energy_exactness},
                           {7, "stopping caps", stopping_caps},
                           {8, "tower arithmetic", towers},
                           {9, "extremal regression", extremal},
                           {10, "end to end", end_to_end}};
  std::set<int> want(only.begin(), only.end()), expect_fail(known.begin(), known.end());
  bool all_ok = true;
  for (auto& e : entries) {
    if (!want.empty() && !want.count(e.id)) continue;
    Verdict o;
    auto t0 = Clock::now();
    try {
      e.run(o);
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail << "threw: " << ex.what();
    }
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", e.id, e.name,
                o.detail.str().c_str(), seconds_since(t0));
    if (expect_fail.count(e.id)) {
      bool as_documented = !o.pass && o.documented;
      std::printf("     known failure %d %s\n", e.id,
                  as_documented ? "matches the documented deviation" : "does NOT match");
      all_ok = all_ok && as_documented;
    } else {
      all_ok = all_ok && o.pass;
    }
    std::fflush(stdout);
  }
  // monitors from every criterion above
  auto led = StoppingMonitor::ledger();
  if (led.violations) {
    std::printf("monitor ledger: %d violations\n", led.violations);
    all_ok = false;
  }
  return all_ok ? 0 : 1;
}
