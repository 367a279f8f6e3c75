#include "boxcorner/corners.hpp"

#include <atomic>
#include <cmath>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/parallel.hpp"

namespace bc {

double q_form_direct(const Cube& cube, const std::array<const std::vector<double>*, 5>& f) {
  for (int j = 1; j <= 4; ++j)
    require(f[j] && f[j]->size() == cube.size(), "Q needs four functions on H^3");
  const Group& H = cube.H();
  int N = cube.N();
  const auto &f1 = *f[1], &f2 = *f[2], &f3 = *f[3], &f4 = *f[4];
  double s = ordered_sum(cube.size(), [&](std::size_t x) {
    double v4 = f4[x];
    if (v4 == 0) return 0.0;
    auto c = cube.coords(x);
    double acc = 0;
    for (int y = 0; y < N; ++y) {
      double v = f3[cube.index(c[0], c[1], H.add(c[2], y))];
      if (v == 0) continue;
      v *= f2[cube.index(c[0], H.add(c[1], y), c[2])];
      if (v == 0) continue;
      acc += v * f1[cube.index(H.add(c[0], y), c[1], c[2])];
    }
    return v4 * acc;
  });
  return s / std::pow(static_cast<double>(N), 4);
}

namespace {
struct Grid {
  const Group& G;
  int d;
  std::size_t size;
  std::vector<std::size_t> stride;
  Grid(const Group& g, int dd) : G(g), d(dd), size(1), stride(dd) {
    for (int r = d - 1; r >= 0; --r) {
      stride[r] = size;
      size *= static_cast<std::size_t>(G.size());
    }
  }
  int coord(std::size_t i, int r) const { return static_cast<int>((i / stride[r]) % G.size()); }
  // g + h e_r
  std::size_t shift(std::size_t i, int r, int h) const {
    int c = coord(i, r);
    return i + (static_cast<std::size_t>(G.add(c, h)) - c) * stride[r];
  }
  bool corner_at(const Bits& A, std::size_t g, int h) const {
    if (!A.test(g)) return false;
    for (int r = 0; r < d; ++r)
      if (!A.test(shift(g, r, h))) return false;
    return true;
  }
};
}  // namespace

std::vector<std::vector<int>> CornerWitness::points(const Group& G) const {
  std::vector<std::vector<int>> pts{g};
  for (std::size_t r = 0; r < g.size(); ++r) {
    auto q = g;
    q[r] = G.add(q[r], h);
    pts.push_back(q);
  }
  return pts;
}

std::size_t count_corners(const Bits& A, const Group& G, int d, bool include_trivial) {
  require(d >= 1 && d <= 3, "corner dimension must be 1, 2 or 3");
  Grid grid(G, d);
  require(A.size() == grid.size, "set has the wrong size for G^d");
  std::vector<std::size_t> part(grid.size, 0);
  parallel_for(grid.size, [&](std::size_t g) {
    if (!A.test(g)) return;
    std::size_t c = include_trivial ? 1 : 0;
    for (int h = 1; h < G.size(); ++h) c += grid.corner_at(A, g, h);
    part[g] = c;
  });
  std::size_t total = 0;
  for (auto c : part) total += c;
  return total;
}

std::optional<CornerWitness> find_corner(const Bits& A, const Group& G, int d) {
  require(d >= 1 && d <= 3, "corner dimension must be 1, 2 or 3");
  Grid grid(G, d);
  require(A.size() == grid.size, "set has the wrong size for G^d");
  // first hit per base point; the lowest base wins so the answer is worker independent
  std::vector<int> hit(grid.size, 0);
  parallel_for(grid.size, [&](std::size_t g) {
    if (!A.test(g)) return;
    for (int h = 1; h < G.size(); ++h)
      if (grid.corner_at(A, g, h)) {
        hit[g] = h;
        return;
      }
  });
  for (std::size_t g = 0; g < grid.size; ++g)
    if (hit[g]) {
      CornerWitness w;
      for (int r = 0; r < d; ++r) w.g.push_back(grid.coord(g, r));
      w.h = hit[g];
      return w;
    }
  return std::nullopt;
}

bool is_corner(const Bits& A, const Group& G, const CornerWitness& w) {
  int d = static_cast<int>(w.g.size());
  if (d < 1 || d > 3 || w.h == 0) return false;
  Grid grid(G, d);
  if (A.size() != grid.size) return false;
  for (auto& p : w.points(G)) {
    std::size_t i = 0;
    for (int r = 0; r < d; ++r) i += static_cast<std::size_t>(p[r]) * grid.stride[r];
    if (!A.test(i)) return false;
  }
  return true;
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Corner: return "corner";
    case Outcome::FailsSize: return "fails_size";
    case Outcome::NotUniform: return "not_uniform";
    case Outcome::NoCornerFound: return "no_corner_found";
  }
  return "?";
}

Decision von_neumann_decide(const CornerSystem& cs, const DecideOptions& opt) {
  cs.validate();
  require(opt.kappa > 0, "kappa must be positive");
  const TSystem& sys = cs.sys;
  const Cube& cube = *sys.cube;
  Densities d = densities(cs);
  require(cs.A.any(), "A is empty");
  Decision dec;
  dec.theorem_regime = opt.kappa <= 0x1p-32;

  double eps = std::min(d.dA, 1.0 - 1e-12);
  AdmissReport adm = is_admissible(sys, eps, opt.admiss_C, opt.admiss_kappa);
  dec.admissible = adm.admissible;
  dec.admiss_failure = adm.first_failure;
  if (!adm.admissible && !opt.soft_admissibility)
    throw PreconditionError("system is not admissible: clause " + adm.first_failure +
                            " fails");

  double lhs = d.dA * std::pow(static_cast<double>(cube.N()), 4);
  for (int j = 1; j <= 4; ++j) lhs *= d.d[j] * d.dT[j];
  for (int s = 0; s < 6; ++s) lhs *= d.djk[s];
  dec.size_lhs = lhs;
  dec.size_rhs = 4.0 * static_cast<double>(cs.A.count());

  auto Tf = sys.T.as_function();
  auto g = balanced(cs.A, sys.T);
  dec.uniform_bound = opt.kappa * std::pow(d.dA, 4);
  double worst = -1;
  for (int l = 1; l <= 4; ++l) {
    double den = frame_box_norm(cube, Tf, l);
    dec.ratio[l] = den > 0 ? frame_box_norm(cube, g, l) / den : 0.0;
    if (dec.ratio[l] > worst) {
      worst = dec.ratio[l];
      dec.ell = l;
    }
  }

  if (!(dec.size_lhs > dec.size_rhs)) {
    dec.outcome = Outcome::FailsSize;
    return dec;
  }
  if (worst > dec.uniform_bound) {
    dec.outcome = Outcome::NotUniform;
    return dec;
  }
  dec.ell = 0;
  auto w = find_corner(cs.A, cube.H(), 3);
  if (!w) {
    ensure(!dec.theorem_regime,
           "both corner conditions hold in the proven range yet A has no corner");
    dec.outcome = Outcome::NoCornerFound;
    return dec;
  }
  ensure(w->h != 0 && is_corner(cs.A, cube.H(), *w), "corner witness failed verification");
  dec.outcome = Outcome::Corner;
  dec.corner = w;
  return dec;
}

OverBoxCheck overbox_check(const Cube& cube, const Bits& A) {
  require(A.size() == cube.size(), "A must be a subset of H^3");
  auto a = A.as_function();
  auto f = balanced(A, mean(a));
  OverBoxCheck r;
  r.lhs = std::fabs(q_form(cube, {nullptr, &a, &a, &a, &f}));
  int N = cube.N();
  r.rhs = box_norm_3d(f, N, N, N);
  return r;
}

}  // namespace bc
