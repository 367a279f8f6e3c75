#include "boxcorner/increment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/parallel.hpp"

namespace bc {

// ---- Paley-Zygmund -------------------------------------------------------------

PzWitness pz_witness(const std::vector<double>& Z, double c) {
  require(!Z.empty(), "Z needs a nonempty sample space");
  require(c > 0 && c < 1, "the constant must lie in (0,1)");
  double m = mean(Z);
  require(std::fabs(m) <= 1e-9, "E Z must vanish");
  double m2 = 0;
  for (double z : Z) {
    require(std::fabs(z) < 1, "|Z| must stay below 1");
    m2 += z * z;
  }
  m2 /= static_cast<double>(Z.size());
  PzWitness w;
  w.c = c;
  w.second_moment = m2;
  w.event = Bits(Z.size());
  for (std::size_t i = 0; i < Z.size(); ++i)
    if (Z[i] > c * m2) w.event.set(i);
  w.probability = static_cast<double>(w.event.count()) / static_cast<double>(Z.size());
  w.holds = w.probability >= c * m2;
  return w;
}

// ---- box Paley-Zygmund --------------------------------------------------------------

namespace {
std::vector<std::size_t> anchor_list(std::size_t total, std::size_t limit, std::size_t samples,
                                     std::uint64_t seed) {
  std::vector<std::size_t> v;
  if (total <= limit) {
    v.resize(total);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (std::size_t i = 0; i < samples; ++i) v.push_back(pick(rng));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}
}  // namespace

BpzResult box_pz_2d(const Bits& A, int nx, int ny, BpzConstants k, std::size_t anchor_limit,
                    std::uint64_t seed) {
  require(nx > 0 && ny > 0, "box Paley-Zygmund needs nonempty axes");
  require(A.size() == static_cast<std::size_t>(nx) * ny, "set does not match the grid");
  require(k.c > 0 && k.t > 1, "box Paley-Zygmund needs c > 0 and t > 1");
  BpzResult r;
  r.constants = k;
  r.delta = static_cast<double>(A.count()) / static_cast<double>(A.size());
  auto f = balanced(A, r.delta);
  r.sigma = std::pow(std::max(0.0, box_pow_2d(f.data(), nx, ny)), 0.25);
  require(r.sigma > 1e-9, "already uniform: the box norm of A - P(A) vanishes");
  r.floor = k.c * std::pow(r.sigma * r.delta, k.t);

  // level sets of g1 = f(., y') and g2 = f(x', .), with their complements
  auto row = [&](int y, bool in) {
    Bits b(nx);
    for (int x = 0; x < nx; ++x)
      if (A.test(static_cast<std::size_t>(x) * ny + y) == in) b.set(x);
    return b;
  };
  auto col = [&](int x, bool in) {
    Bits b(ny);
    for (int y = 0; y < ny; ++y)
      if (A.test(static_cast<std::size_t>(x) * ny + y) == in) b.set(y);
    return b;
  };
  auto density = [&](const Bits& X1, const Bits& X2) {
    std::size_t hit = 0, tot = X1.count() * X2.count();
    if (!tot) return -1.0;
    X1.for_each([&](std::size_t x) {
      X2.for_each([&](std::size_t y) { hit += A.test(x * ny + y); });
    });
    return static_cast<double>(hit) / static_cast<double>(tot);
  };

  auto anchors = anchor_list(static_cast<std::size_t>(nx) * ny, anchor_limit, 256, seed);
  struct Best {
    double d = -1;
    int choice = 0;
  };
  std::vector<Best> best(anchors.size());
  parallel_for(anchors.size(), [&](std::size_t q) {
    int xa = static_cast<int>(anchors[q] / ny), ya = static_cast<int>(anchors[q] % ny);
    for (int ch = 0; ch < 4; ++ch) {
      Bits X1 = row(ya, !(ch & 1)), X2 = col(xa, !(ch & 2));
      double p1 = static_cast<double>(X1.count()) / nx, p2 = static_cast<double>(X2.count()) / ny;
      if (p1 < r.floor || p2 < r.floor) continue;
      double d = density(X1, X2);
      if (d > best[q].d) best[q] = {d, ch};
    }
  });
  std::size_t arg = anchors.size();
  for (std::size_t q = 0; q < anchors.size(); ++q)
    if (best[q].d >= 0 && (arg == anchors.size() || best[q].d > best[arg].d)) arg = q;
  ensure(arg < anchors.size(), "box Paley-Zygmund: no anchor yields sets above the size floor");
  int xa = static_cast<int>(anchors[arg] / ny), ya = static_cast<int>(anchors[arg] % ny);
  r.anchor = {xa, ya};
  r.X1 = row(ya, !(best[arg].choice & 1));
  r.X2 = col(xa, !(best[arg].choice & 2));
  // recomputed from the sets, not taken from the search
  r.p1 = static_cast<double>(r.X1.count()) / nx;
  r.p2 = static_cast<double>(r.X2.count()) / ny;
  r.density = density(r.X1, r.X2);
  r.size_ok = r.p1 >= r.floor && r.p2 >= r.floor;
  r.gain_ok = r.density >= r.delta + r.floor;
  return r;
}

// ---- weighted T-box increment --------------------------------------------------------

void IncrementConfig::validate() const {
  require(c1 > 0 && c2 > 0 && c > 0 && K > 0, "increment constants must be positive");
  require(t2 >= 31, "the two-dimensional exponent t2 must be at least 31");
  require(t1 > 2 * t2 + 3, "the one-dimensional exponent needs t1 > 2 t2 + 3");
  require(p > 1 && C > 0, "increment exponents must satisfy p > 1 and C > 0");
  require(theta1 > 0 && theta2 > 0, "branch thresholds must be positive");
  require(min_fraction >= 0 && min_fraction < 1, "min_fraction must lie in [0,1)");
  require(kappa_prime > 0 && kappa_prime <= 1, "kappa' must lie in (0,1]");
  require(anchor_limit >= 1 && anchor_samples >= 1, "anchor budget must be positive");
}

namespace {

// U and V on the grid prod_{k != ell} S_k, axes in increasing label order.
struct FrameGrid {
  int ell = 4;
  std::array<int, 3> L{};
  std::array<std::vector<int>, 3> I;
  std::array<int, 3> n{};
  std::array<std::size_t, 3> st{};
  std::size_t size = 0;
  std::vector<std::uint8_t> U, V;
  std::vector<std::size_t> pt;

  std::size_t at(int a, int xa, int b, int yb, int c, int yc) const {
    return xa * st[a] + yb * st[b] + yc * st[c];
  }
};

FrameGrid make_grid(const TSystem& sys, const Bits& U, const Bits& V, int ell) {
  FrameGrid g;
  g.ell = ell;
  g.L = Cube::frame_labels(ell);
  for (int a = 0; a < 3; ++a) {
    sys.S[g.L[a]].for_each([&](std::size_t h) { g.I[a].push_back(static_cast<int>(h)); });
    g.n[a] = static_cast<int>(g.I[a].size());
  }
  g.st = {static_cast<std::size_t>(g.n[1]) * g.n[2], static_cast<std::size_t>(g.n[2]), 1};
  g.size = static_cast<std::size_t>(g.n[0]) * g.n[1] * g.n[2];
  g.U.assign(g.size, 0);
  g.V.assign(g.size, 0);
  g.pt.resize(g.size);
  for (int a = 0; a < g.n[0]; ++a)
    for (int b = 0; b < g.n[1]; ++b)
      for (int c = 0; c < g.n[2]; ++c) {
        std::size_t q = g.at(0, a, 1, b, 2, c);
        std::size_t x = sys.cube->from_frame(ell, g.I[0][a], g.I[1][b], g.I[2][c]);
        g.pt[q] = x;
        g.U[q] = U.test(x);
        g.V[q] = V.test(x);
      }
  return g;
}

std::array<int, 2> others(int a) {
  if (a == 0) return {1, 2};
  if (a == 1) return {0, 2};
  return {0, 1};
}

// R_{j,k} with both labels in any order, given as a set of (h_j, h_k)
void set_pair(std::array<Bits, 6>& R, int N, int j, int k, int hj, int hk) {
  if (j > k) {
    std::swap(j, k);
    std::swap(hj, hk);
  }
  R[pair_slot(j, k)].set(static_cast<std::size_t>(hj) * N + hk);
}

Bits restrict_pair(const Bits& R, int N, int j, int k, const Bits& Sj, const Bits& Sk) {
  // keeps (a, b) in R_{min,max} with the label-j coordinate in Sj, label k in Sk
  Bits out = R;
  R.for_each([&](std::size_t i) {
    int a = static_cast<int>(i / N), b = static_cast<int>(i % N);
    int hj = j < k ? a : b, hk = j < k ? b : a;
    if (!Sj.test(hj) || !Sk.test(hk)) out.reset(i);
  });
  return out;
}

struct Candidate {
  bool ok = false;
  TSystem sys;
  Bits V;
  double density = 0;
  std::size_t anchor = 0;
};

double frac(std::size_t a, std::size_t b) {
  return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
}

// B4 over the grid with axis a fixed and the other two boxed
double b4(const FrameGrid& g, int a, const std::array<const std::vector<double>*, 4>& f) {
  auto [b, c] = others(a);
  int nb = g.n[b], nc = g.n[c];
  double tot = ordered_sum(static_cast<std::size_t>(g.n[a]), [&](std::size_t xu) {
    int x = static_cast<int>(xu);
    double s = 0;
    for (int b0 = 0; b0 < nb; ++b0)
      for (int b1 = 0; b1 < nb; ++b1) {
        double p0 = 0, p1 = 0;
        for (int c0 = 0; c0 < nc; ++c0)
          p0 += (*f[0])[g.at(a, x, b, b0, c, c0)] * (*f[2])[g.at(a, x, b, b1, c, c0)];
        if (p0 == 0) continue;
        for (int c1 = 0; c1 < nc; ++c1)
          p1 += (*f[1])[g.at(a, x, b, b0, c, c1)] * (*f[3])[g.at(a, x, b, b1, c, c1)];
        s += p0 * p1;
      }
    return s;
  });
  return tot / (static_cast<double>(g.n[a]) * nb * nb * nc * nc);
}

}  // namespace

IncrementResult weighted_tbox_increment(const TSystem& sys, const Bits& U, const Bits& V,
                                        double tau, const IncrementConfig& cfg, int ell) {
  cfg.validate();
  require(ell >= 1 && ell <= 4, "frame must be in 1..4");
  require(tau > 0 && tau <= 1, "tau must lie in (0,1]");
  Bits Tl = sys.t_ell(ell);
  require(U.subset_of(V) && V.subset_of(Tl), "need U inside V inside T_ell");
  require(V == Tl || V == sys.T, "V must be T_ell or T");
  require(V.any(), "V is empty");
  const Cube& cube = *sys.cube;
  int N = sys.N();

  IncrementResult res;
  res.ell = ell;
  res.tau_required = tau;
  FrameGrid g = make_grid(sys, U, V, ell);
  for (int a = 0; a < 3; ++a) require(g.n[a] > 0, "a frame axis set is empty");
  std::size_t nU = 0, nV = 0;
  for (std::size_t q = 0; q < g.size; ++q) {
    nU += g.U[q];
    nV += g.V[q];
  }
  double delta = frac(nU, nV);
  res.density_before = delta;
  std::vector<double> f0(g.size), Vf(g.size), Uf(g.size);
  for (std::size_t q = 0; q < g.size; ++q) {
    Vf[q] = g.V[q];
    Uf[q] = g.U[q];
    f0[q] = Uf[q] - delta * Vf[q];
  }
  double bV = box_norm_3d(Vf, g.n[0], g.n[1], g.n[2]);
  res.tau = bV > 0 ? box_norm_3d(f0, g.n[0], g.n[1], g.n[2]) / bV : 0.0;
  {
    std::ostringstream m;
    m << "no increment available: box ratio " << res.tau << " is below tau = " << tau;
    require(res.tau >= tau && res.tau > 1e-12, m.str());
  }
  double dt = delta * res.tau;
  res.paper_theta1 = std::pow(cfg.c1 * std::pow(dt, cfg.t1), 2);
  res.paper_theta2 = cfg.c2 * std::pow(dt, cfg.t2);
  res.theta1 = cfg.theta1;
  res.theta2 = cfg.theta2;
  res.gain_bound = cfg.c * std::pow(dt, cfg.p);

  if (ell == 4 && (cfg.enforce_uniform_V || cfg.uniform_theta < 0.5)) {
    auto ur = is_uniform(V, 4, cfg.uniform_theta, sys, 64, cfg.seed);
    res.uniform_V_ratio = ur.worst_ratio;
    if (cfg.enforce_uniform_V)
      require(ur.failures == 0, "V is not (4,theta,4)-uniform at the configured theta");
  }

  // 1D statistics: E_y |E_{x_a} f0|^2 over E_y |E_{x_a} V|^2
  std::array<std::vector<double>, 3> mf, mV, cU, cV;
  for (int a = 0; a < 3; ++a) {
    auto [b, c] = others(a);
    std::size_t m = static_cast<std::size_t>(g.n[b]) * g.n[c];
    mf[a].assign(m, 0);
    mV[a].assign(m, 0);
    cU[a].assign(m, 0);
    cV[a].assign(m, 0);
    for (int yb = 0; yb < g.n[b]; ++yb)
      for (int yc = 0; yc < g.n[c]; ++yc) {
        std::size_t y = static_cast<std::size_t>(yb) * g.n[c] + yc;
        for (int x = 0; x < g.n[a]; ++x) {
          std::size_t q = g.at(a, x, b, yb, c, yc);
          cU[a][y] += Uf[q];
          cV[a][y] += Vf[q];
        }
        mf[a][y] = (cU[a][y] - delta * cV[a][y]) / g.n[a];
        mV[a][y] = cV[a][y] / g.n[a];
      }
    double num = 0, den = 0;
    for (std::size_t y = 0; y < m; ++y) {
      num += mf[a][y] * mf[a][y];
      den += mV[a][y] * mV[a][y];
    }
    res.s1[g.L[a]] = den > 0 ? num / den : 0.0;
  }
  // 2D statistics, normalised by tau^4
  double B4V[3], t4 = std::pow(res.tau, 4);
  for (int a = 0; a < 3; ++a) {
    B4V[a] = b4(g, a, {&Vf, &Vf, &Vf, &Vf});
    double B4f = b4(g, a, {&f0, &f0, &f0, &f0});
    res.s2[g.L[a]] = B4V[a] > 0 ? B4f / (B4V[a] * t4) : 0.0;
  }

  auto finish_system = [&](std::array<Bits, 5> S, std::array<Bits, 6> R, const Bits& C,
                           Candidate& cand) {
    Bits Tn = sys.T & C;
    cand.sys = TSystem::build(sys.cube, std::move(S), std::move(R), &Tn);
    cand.V = C;
    cand.ok = true;
  };

  // ---- branch 1
  auto branch1 = [&](int a) {
    Candidate cand;
    auto [b, c] = others(a);
    int Lb = g.L[b], Lc = g.L[c];
    std::size_t m = mf[a].size();
    std::size_t inR = 0;
    double sumV = 0, sumV2 = 0;
    std::vector<bool> rmask(m, false);
    for (int yb = 0; yb < g.n[b]; ++yb)
      for (int yc = 0; yc < g.n[c]; ++yc) {
        std::size_t y = static_cast<std::size_t>(yb) * g.n[c] + yc;
        if (!sys.in_R(Lb, Lc, g.I[b][yb], g.I[c][yc])) continue;
        rmask[y] = true;
        ++inR;
        sumV += mV[a][y];
        sumV2 += mV[a][y] * mV[a][y];
      }
    if (!inR) return cand;
    double meanV = sumV / inR;
    res.fiber_variance = sumV2 / inR - meanV * meanV;
    res.fiber_variance_bound = cfg.K * std::pow(res.tau, cfg.C) * meanV * meanV;
    double thr = std::max(cfg.c1 / 20 * cfg.c1 * std::pow(dt, cfg.t1) * meanV, 1e-12);
    std::array<Bits, 6> R = sys.R;
    R[pair_slot(std::min(Lb, Lc), std::max(Lb, Lc))] = Bits(static_cast<std::size_t>(N) * N);
    std::size_t kept = 0;
    double hitU = 0, hitV = 0;
    for (int yb = 0; yb < g.n[b]; ++yb)
      for (int yc = 0; yc < g.n[c]; ++yc) {
        std::size_t y = static_cast<std::size_t>(yb) * g.n[c] + yc;
        if (!rmask[y] || mf[a][y] <= thr) continue;
        set_pair(R, N, Lb, Lc, g.I[b][yb], g.I[c][yc]);
        ++kept;
        hitU += cU[a][y];
        hitV += cV[a][y];
      }
    res.new_fraction = frac(kept, inR);
    res.new_fraction_bound = 0.1 * cfg.c1 * std::pow(dt, cfg.t1);
    if (!kept || hitV <= 0) return cand;
    Bits C = V & cube.lift_pair(R[pair_slot(std::min(Lb, Lc), std::max(Lb, Lc))],
                                std::min(Lb, Lc), std::max(Lb, Lc));
    finish_system(sys.S, std::move(R), C, cand);
    cand.density = hitU / hitV;
    return cand;
  };

  // ---- branch 2: x_a free, anchor (b0, c0)
  auto branch2 = [&](int a) {
    Candidate cand;
    auto [b, c] = others(a);
    int nb = g.n[b], nc = g.n[c], na = g.n[a];
    auto anchors = anchor_list(static_cast<std::size_t>(nb) * nc, cfg.anchor_limit,
                               cfg.anchor_samples, cfg.seed);
    std::vector<std::pair<std::size_t, std::size_t>> cnt(anchors.size());
    parallel_for(anchors.size(), [&](std::size_t q) {
      int b0 = static_cast<int>(anchors[q] / nc), c0 = static_cast<int>(anchors[q] % nc);
      std::size_t u = 0, v = 0;
      for (int x = 0; x < na; ++x) {
        if (!g.U[g.at(a, x, b, b0, c, c0)]) continue;
        for (int b1 = 0; b1 < nb; ++b1) {
          if (!g.U[g.at(a, x, b, b1, c, c0)]) continue;
          for (int c1 = 0; c1 < nc; ++c1) {
            if (!g.U[g.at(a, x, b, b0, c, c1)]) continue;
            std::size_t q1 = g.at(a, x, b, b1, c, c1);
            v += g.V[q1];
            u += g.U[q1];
          }
        }
      }
      cnt[q] = {u, v};
    });
    std::size_t arg = anchors.size();
    double best = -1;
    for (std::size_t q = 0; q < anchors.size(); ++q) {
      auto [u, v] = cnt[q];
      if (!v || frac(v, nV) < cfg.min_fraction) continue;
      double d = frac(u, v);
      if (d > best) {
        best = d;
        arg = q;
      }
    }
    // the B4 diagnostic panel
    {
      double BV = B4V[a];
      double BU = b4(g, a, {&Uf, &Uf, &Uf, &Uf}), BUV = b4(g, a, {&Uf, &Uf, &Uf, &Vf});
      double e1 = cfg.c1 * std::pow(dt, cfg.t1);
      // Z_V and Z_U over anchors
      std::vector<double> zv(static_cast<std::size_t>(nb) * nc), zu(zv.size());
      parallel_for(zv.size(), [&](std::size_t q) {
        int b0 = static_cast<int>(q / nc), c0 = static_cast<int>(q % nc);
        double sv = 0, su = 0;
        for (int x = 0; x < na; ++x)
          for (int b1 = 0; b1 < nb; ++b1)
            for (int c1 = 0; c1 < nc; ++c1) {
              double v00 = Vf[g.at(a, x, b, b0, c, c0)], v01 = Vf[g.at(a, x, b, b0, c, c1)];
              double v10 = Vf[g.at(a, x, b, b1, c, c0)], v11 = Vf[g.at(a, x, b, b1, c, c1)];
              double u00 = Uf[g.at(a, x, b, b0, c, c0)], u01 = Uf[g.at(a, x, b, b0, c, c1)];
              double u10 = Uf[g.at(a, x, b, b1, c, c0)];
              sv += v00 * v01 * v10 * v11;
              su += u00 * u01 * u10 * v11;
            }
        double norm = static_cast<double>(na) * nb * nc;
        zv[q] = sv / norm;
        zu[q] = su / norm;
      });
      auto var = [](const std::vector<double>& z) {
        double m = mean(z), s = 0;
        for (double v : z) s += (v - m) * (v - m);
        return s / static_cast<double>(z.size());
      };
      double vartheta = std::pow(dt, cfg.C);
      if (BV > 0) {
        res.claims.push_back({"B4[U]/B4[V] lower", BU / BV,
                              std::pow(delta, 4) + 0.25 * res.paper_theta2, false});
        res.claims.back().holds = res.claims.back().value >= res.claims.back().bound;
        res.claims.push_back({"B4[U,U,U,V]/B4[V] deviation", std::fabs(std::pow(delta, 3) - BUV / BV),
                              8 * e1, false});
        res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
        res.claims.push_back({"E Z_V = B4[V]", std::fabs(mean(zv) - BV), 1e-9 * BV + 1e-15, false});
        res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
        res.claims.push_back({"Var Z_V", var(zv), std::sqrt(vartheta) * BV * BV, false});
        res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
        res.claims.push_back({"E Z_U = B4[U,U,U,V]", std::fabs(mean(zu) - BUV), 1e-9 * BV + 1e-15,
                              false});
        res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
        res.claims.push_back({"Var Z_U", var(zu), 32 * e1 * BV * BV, false});
        res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
      }
    }
    if (arg == anchors.size()) return cand;
    int b0 = static_cast<int>(anchors[arg] / nc), c0 = static_cast<int>(anchors[arg] % nc);
    cand.anchor = anchors[arg];
    int La = g.L[a], Lb = g.L[b], Lc = g.L[c];
    std::array<Bits, 5> S = sys.S;
    std::array<Bits, 6> R = sys.R;
    Bits Sa(N), C(cube.size());
    Bits Rab(static_cast<std::size_t>(N) * N), Rac(Rab.size());
    std::array<Bits, 6> tmp;
    for (auto& t : tmp) t = Bits(static_cast<std::size_t>(N) * N);
    for (int x = 0; x < na; ++x) {
      if (!g.U[g.at(a, x, b, b0, c, c0)]) continue;
      Sa.set(g.I[a][x]);
      for (int b1 = 0; b1 < nb; ++b1)
        if (g.U[g.at(a, x, b, b1, c, c0)]) set_pair(tmp, N, La, Lb, g.I[a][x], g.I[b][b1]);
      for (int c1 = 0; c1 < nc; ++c1)
        if (g.U[g.at(a, x, b, b0, c, c1)]) set_pair(tmp, N, La, Lc, g.I[a][x], g.I[c][c1]);
      for (int b1 = 0; b1 < nb; ++b1) {
        if (!g.U[g.at(a, x, b, b1, c, c0)]) continue;
        for (int c1 = 0; c1 < nc; ++c1) {
          std::size_t q1 = g.at(a, x, b, b1, c, c1);
          if (g.U[g.at(a, x, b, b0, c, c1)] && g.V[q1]) C.set(g.pt[q1]);
        }
      }
    }
    S[La] = Sa;
    int sab = pair_slot(std::min(La, Lb), std::max(La, Lb));
    int sac = pair_slot(std::min(La, Lc), std::max(La, Lc));
    R[sab] &= tmp[sab];
    R[sac] &= tmp[sac];
    int sal = pair_slot(std::min(La, ell), std::max(La, ell));
    R[sal] = restrict_pair(R[sal], N, La, ell, Sa, sys.S[ell]);
    finish_system(std::move(S), std::move(R), C, cand);
    cand.density = cond_prob(U, C);
    return cand;
  };

  // ---- branch 3: anchor x0 in U
  auto branch3 = [&]() {
    Candidate cand;
    int n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];
    std::vector<std::size_t> inU;
    for (std::size_t q = 0; q < g.size; ++q)
      if (g.U[q]) inU.push_back(q);
    if (inU.empty()) return cand;
    auto pick = anchor_list(inU.size(), cfg.anchor_limit, cfg.anchor_samples, cfg.seed);
    auto count = [&](std::size_t q0, bool withU) {
      int a0 = static_cast<int>(q0 / g.st[0]), b0 = static_cast<int>((q0 / g.st[1]) % n1),
          c0 = static_cast<int>(q0 % n2);
      std::size_t v = 0, u = 0;
      for (int x = 0; x < n0; ++x) {
        if (!g.U[g.at(0, x, 1, b0, 2, c0)]) continue;
        for (int y = 0; y < n1; ++y) {
          if (!g.U[g.at(0, a0, 1, y, 2, c0)] || !g.U[g.at(0, x, 1, y, 2, c0)]) continue;
          for (int z = 0; z < n2; ++z) {
            if (!g.U[g.at(0, a0, 1, b0, 2, z)] || !g.U[g.at(0, x, 1, b0, 2, z)] ||
                !g.U[g.at(0, a0, 1, y, 2, z)])
              continue;
            std::size_t q1 = g.at(0, x, 1, y, 2, z);
            v += g.V[q1];
            if (withU) u += g.U[q1];
          }
        }
      }
      return std::pair{u, v};
    };
    std::vector<std::pair<std::size_t, std::size_t>> cnt(pick.size());
    parallel_for(pick.size(), [&](std::size_t i) { cnt[i] = count(inU[pick[i]], true); });

    double B8V = box_pow_3d(Vf.data(), n0, n1, n2), B8U = box_pow_3d(Uf.data(), n0, n1, n2);
    std::vector<std::vector<double>> fam(8, Uf);
    fam[7] = Vf;
    double B8UV = gcs_form(fam, {n0, n1, n2});
    // Z(x0) = P(T'(x0)) over the grid
    std::vector<double> z(pick.size());
    for (std::size_t i = 0; i < pick.size(); ++i) z[i] = frac(cnt[i].second, g.size);
    double zm = mean(z), zvar = 0;
    for (double v : z) zvar += (v - zm) * (v - zm);
    zvar /= static_cast<double>(z.size());
    double pU = frac(nU, g.size);
    if (B8V > 0) {
      res.claims.push_back({"B8[U]/B8[V] lower", B8U / B8V,
                            std::pow(delta, 8) + 0.5 * std::pow(res.tau, 8), false});
      res.claims.back().holds = res.claims.back().value >= res.claims.back().bound;
      res.claims.push_back({"B8[U,V]/B8[V] deviation", std::fabs(std::pow(delta, 7) - B8UV / B8V),
                            std::pow(dt, 30) / 20, false});
      res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
      if (pick.size() == inU.size()) {
        res.claims.push_back({"E(Z:U) = B8[U,V]/P(U)", std::fabs(zm - B8UV / pU),
                              1e-9 * (B8UV / pU) + 1e-15, false});
        res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
      }
      res.claims.push_back({"Var(Z:U)", zvar, std::pow(dt, 30) / 20 * B8V * B8V, false});
      res.claims.back().holds = res.claims.back().value <= res.claims.back().bound;
    }
    // prefer anchors in U', the ones whose T'(x0) is not too small
    double floorU = 0.25 * std::pow(delta, 7) * B8V;
    bool anyU = false;
    for (std::size_t i = 0; i < pick.size(); ++i) anyU |= z[i] >= floorU && cnt[i].second > 0;
    std::size_t arg = pick.size();
    double best = -1;
    for (std::size_t i = 0; i < pick.size(); ++i) {
      auto [u, v] = cnt[i];
      if (!v || frac(v, nV) < cfg.min_fraction) continue;
      if (anyU && z[i] < floorU) continue;
      double d = frac(u, v);
      if (d > best) {
        best = d;
        arg = i;
      }
    }
    if (!anyU) res.notes.push_back("no 3D anchor reached the U' size floor");
    if (arg == pick.size()) return cand;
    std::size_t q0 = inU[pick[arg]];
    cand.anchor = q0;
    int a0 = static_cast<int>(q0 / g.st[0]), b0 = static_cast<int>((q0 / g.st[1]) % n1),
        c0 = static_cast<int>(q0 % n2);
    std::array<Bits, 5> S = sys.S;
    std::array<Bits, 6> R = sys.R;
    std::array<Bits, 3> Sp{Bits(N), Bits(N), Bits(N)};
    for (int x = 0; x < n0; ++x)
      if (g.U[g.at(0, x, 1, b0, 2, c0)]) Sp[0].set(g.I[0][x]);
    for (int y = 0; y < n1; ++y)
      if (g.U[g.at(0, a0, 1, y, 2, c0)]) Sp[1].set(g.I[1][y]);
    for (int w = 0; w < n2; ++w)
      if (g.U[g.at(0, a0, 1, b0, 2, w)]) Sp[2].set(g.I[2][w]);
    std::array<Bits, 6> P;
    for (auto& t : P) t = Bits(static_cast<std::size_t>(N) * N);
    for (int x = 0; x < n0; ++x)
      for (int y = 0; y < n1; ++y) {
        if (g.U[g.at(0, x, 1, y, 2, c0)] && g.U[g.at(0, x, 1, b0, 2, c0)] &&
            g.U[g.at(0, a0, 1, y, 2, c0)])
          set_pair(P, N, g.L[0], g.L[1], g.I[0][x], g.I[1][y]);
      }
    for (int x = 0; x < n0; ++x)
      for (int w = 0; w < n2; ++w) {
        if (g.U[g.at(0, x, 1, b0, 2, w)] && g.U[g.at(0, x, 1, b0, 2, c0)] &&
            g.U[g.at(0, a0, 1, b0, 2, w)])
          set_pair(P, N, g.L[0], g.L[2], g.I[0][x], g.I[2][w]);
      }
    for (int y = 0; y < n1; ++y)
      for (int w = 0; w < n2; ++w) {
        if (g.U[g.at(0, a0, 1, y, 2, w)] && g.U[g.at(0, a0, 1, y, 2, c0)] &&
            g.U[g.at(0, a0, 1, b0, 2, w)])
          set_pair(P, N, g.L[1], g.L[2], g.I[1][y], g.I[2][w]);
      }
    Bits C(cube.size());
    for (int x = 0; x < n0; ++x)
      for (int y = 0; y < n1; ++y)
        for (int w = 0; w < n2; ++w) {
          std::size_t q1 = g.at(0, x, 1, y, 2, w);
          if (!g.V[q1]) continue;
          if (!sys.in_R(g.L[0], g.L[1], g.I[0][x], g.I[1][y])) continue;
          bool ok = true;
          auto inP = [&](int j, int k, int hj, int hk) {
            if (j > k) {
              std::swap(j, k);
              std::swap(hj, hk);
            }
            return P[pair_slot(j, k)].test(static_cast<std::size_t>(hj) * N + hk);
          };
          ok = inP(g.L[0], g.L[1], g.I[0][x], g.I[1][y]) && inP(g.L[0], g.L[2], g.I[0][x], g.I[2][w]) &&
               inP(g.L[1], g.L[2], g.I[1][y], g.I[2][w]);
          if (ok) C.set(g.pt[q1]);
        }
    for (int a = 0; a < 3; ++a) S[g.L[a]] = Sp[a];
    for (int s = 0; s < 6; ++s) {
      auto [j, k] = slot_pair(s);
      if (j != ell && k != ell) R[s] &= P[s];
    }
    for (int a = 0; a < 3; ++a) {
      int La = g.L[a];
      int sl = pair_slot(std::min(La, ell), std::max(La, ell));
      R[sl] = restrict_pair(R[sl], N, La, ell, Sp[a], sys.S[ell]);
    }
    finish_system(std::move(S), std::move(R), C, cand);
    cand.density = cond_prob(U, C);
    return cand;
  };

  // branch order: 1D, then 2D, then 3D; a branch that fires but does not
  // increase the density hands over to the next one
  std::vector<std::pair<int, int>> order;  // (branch, grid axis)
  {
    std::array<int, 3> ax{0, 1, 2};
    std::stable_sort(ax.begin(), ax.end(),
                     [&](int x, int y) { return res.s1[g.L[x]] > res.s1[g.L[y]]; });
    for (int a : ax)
      if (res.s1[g.L[a]] >= cfg.theta1) order.push_back({1, a});
    std::stable_sort(ax.begin(), ax.end(),
                     [&](int x, int y) { return res.s2[g.L[x]] > res.s2[g.L[y]]; });
    for (int a : ax)
      if (res.s2[g.L[a]] >= cfg.theta2) order.push_back({2, a});
    order.push_back({3, -1});
  }
  double bestd = -1;
  for (auto [br, a] : order) {
    Candidate cand = br == 1 ? branch1(a) : br == 2 ? branch2(a) : branch3();
    if (!cand.ok) {
      res.notes.push_back("branch " + std::to_string(br) + " found no candidate");
      continue;
    }
    // re-verified from the raw sets
    Bits TV = cand.sys.T & V;
    double d = cond_prob(U, TV);
    bestd = std::max(bestd, d);
    if (d <= delta) {
      res.notes.push_back("branch " + std::to_string(br) + " gave no increase");
      continue;
    }
    res.branch = br;
    res.axis = a >= 0 ? g.L[a] : 0;
    res.sys = std::move(cand.sys);
    res.V = std::move(cand.V);
    res.density_after = d;
    break;
  }
  if (!res.branch) {
    std::ostringstream m;
    m << "no increment found with the configured constants: P(U:V) = " << delta
      << ", best after = " << bestd << ", tau = " << res.tau << ", s1 = (" << res.s1[1]
      << "," << res.s1[2] << "," << res.s1[3] << "), s2 = (" << res.s2[1] << "," << res.s2[2]
      << "," << res.s2[3] << ")";
    throw PreconditionError(m.str());
  }
  require(res.V.subset_of(res.sys.t_ell(ell)), "V' left the new T_ell");
  res.gain_ok = res.density_after >= delta + res.gain_bound;
  if (V == Tl) {
    Bits Tn = res.sys.t_ell(ell);
    res.p_system = cond_prob(Tn, Tl);
    res.p_bound = std::pow(res.tau * cond_prob(U, Tl), cfg.p);
  } else {
    res.p_system = cond_prob(res.sys.T, sys.T);
    res.p_bound = std::pow(res.tau * cond_prob(U, sys.T), cfg.p);
  }
  res.p_ok = res.p_system >= res.p_bound;
  return res;
}

DensityIncrement density_increment(const CornerSystem& cs, double kappa,
                                   const IncrementConfig& cfg) {
  cs.validate();
  require(kappa > 0, "kappa must be positive");
  const TSystem& sys = cs.sys;
  DensityIncrement out;
  out.kappa = kappa;
  out.delta = cond_prob(cs.A, sys.T);
  require(out.delta > 0, "A is empty");
  auto Tf = sys.T.as_function();
  auto g = balanced(cs.A, sys.T);
  double bound = kappa * std::pow(out.delta, 4), worst = -1;
  int ell = 0;
  for (int l = 1; l <= 4; ++l) {
    double den = frame_box_norm(*sys.cube, Tf, l);
    double r = den > 0 ? frame_box_norm(*sys.cube, g, l) / den : 0.0;
    if (r > worst) {
      worst = r;
      ell = l;
    }
  }
  require(worst > bound, "the uniform condition holds; there is no increment to take");
  out.inc = weighted_tbox_increment(sys, cs.A, sys.T, bound, cfg, ell);
  out.next.sys = out.inc.sys;
  out.next.A = cs.A & out.inc.sys.T;
  out.next.validate();
  out.delta_after = cond_prob(out.next.A, out.next.sys.T);
  out.floor = std::pow(out.delta, 1.0 / cfg.kappa_prime);
  out.p_ok = cond_prob(out.next.sys.T, sys.T) >= out.floor;
  out.gain_ok = out.delta_after >= out.delta + out.floor;
  ensure(out.delta_after > out.delta, "density increment did not increase P(A:T)");
  return out;
}

}  // namespace bc
