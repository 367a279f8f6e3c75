#include "boxcorner/systems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/parallel.hpp"
#include "boxcorner/partition.hpp"

namespace bc {

// ---- T-systems ----------------------------------------------------------------------

TSystem TSystem::trivial(GroupPtr H) { return trivial(std::make_shared<const Cube>(std::move(H))); }

TSystem TSystem::trivial(std::shared_ptr<const Cube> cube) {
  int N = cube->N();
  std::array<Bits, 5> S;
  std::array<Bits, 6> R;
  for (int i = 1; i <= 4; ++i) S[i] = Bits(N, true);
  S[0] = Bits(N);
  for (auto& r : R) r = Bits(cube->pair_size(), true);
  return build(std::move(cube), std::move(S), std::move(R));
}

TSystem TSystem::build(std::shared_ptr<const Cube> cube, std::array<Bits, 5> S,
                       std::array<Bits, 6> R, const Bits* T) {
  require(cube != nullptr, "a T-system needs a cube");
  TSystem s;
  s.cube = std::move(cube);
  s.S = std::move(S);
  if (s.S[0].size() != static_cast<std::size_t>(s.N())) s.S[0] = Bits(s.N());
  s.R = std::move(R);
  s.T = T ? *T : s.all_R();
  s.validate();
  return s;
}

void TSystem::validate() const {
  std::size_t N = static_cast<std::size_t>(cube->N());
  for (int i = 1; i <= 4; ++i)
    require(S[i].size() == N, "S_" + std::to_string(i) + " has the wrong size");
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    require(R[s].size() == N * N, "R has the wrong size");
    bool ok = true;
    R[s].for_each([&](std::size_t i) {
      if (!S[j].test(i / N) || !S[k].test(i % N)) ok = false;
    });
    require(ok, "R_" + std::to_string(j) + std::to_string(k) + " is not inside S_j x S_k");
  }
  require(T.size() == cube->size(), "T has the wrong size");
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    require(T.subset_of(lift_R(j, k)),
            "T is not inside the lift of R_" + std::to_string(j) + std::to_string(k));
  }
}

bool TSystem::in_R(int j, int k, int a, int b) const {
  require(j != k && j >= 1 && k <= 4 && k >= 1 && j <= 4, "bad pair");
  if (j > k) {
    std::swap(j, k);
    std::swap(a, b);
  }
  return R[pair_slot(j, k)].test(static_cast<std::size_t>(a) * N() + b);
}

Bits TSystem::lift_R(int j, int k) const {
  if (j > k) std::swap(j, k);
  return cube->lift_pair(R[pair_slot(j, k)], j, k);
}

Bits TSystem::t_tilde(int ell) const {
  require(ell >= 1 && ell <= 4, "ell must be in 1..4");
  Bits t = cube->full();
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    if (j != ell && k != ell) t &= lift_R(j, k);
  }
  return t;
}

Bits TSystem::t_ell(int ell) const { return t_tilde(ell) & lift_S(ell); }

Bits TSystem::all_R() const {
  Bits t = cube->full();
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    t &= lift_R(j, k);
  }
  return t;
}

void CornerSystem::validate() const {
  sys.validate();
  require(A.size() == sys.T.size() && A.subset_of(sys.T), "A is not inside T");
}

// ---- densities ----------------------------------------------------------------------

namespace {
double ratio_or_zero(std::size_t a, std::size_t b) {
  return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
}
}  // namespace

Densities densities(const TSystem& sys) {
  Densities d;
  std::size_t N = static_cast<std::size_t>(sys.N());
  for (int i = 1; i <= 4; ++i) d.d[i] = ratio_or_zero(sys.S[i].count(), N);
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    d.djk[s] = ratio_or_zero(sys.R[s].count(), sys.S[j].count() * sys.S[k].count());
  }
  std::size_t t = sys.T.count();
  for (int l = 1; l <= 4; ++l) d.dT[l] = ratio_or_zero(t, sys.t_ell(l).count());
  d.pT = ratio_or_zero(t, sys.cube->size());
  return d;
}

Densities densities(const CornerSystem& cs) {
  Densities d = densities(cs.sys);
  d.dA = ratio_or_zero(cs.A.count(), cs.sys.T.count());
  return d;
}

// ---- admissibility ------------------------------------------------------------------

double frame_box_norm(const Cube& cube, const std::vector<double>& g, int ell) {
  auto f = cube.to_frame_function(g, ell);
  return box_norm_3d(f, cube.N(), cube.N(), cube.N());
}

double relative_box_norm(const TSystem& sys, const std::vector<double>& g) {
  int N = sys.N();
  std::vector<std::vector<int>> idx(3);
  for (int i = 0; i < 3; ++i) idx[i] = [&] {
      std::vector<int> v;
      sys.S[i + 1].for_each([&](std::size_t a) { v.push_back(static_cast<int>(a)); });
      return v;
    }();
  for (auto& v : idx)
    if (v.empty()) return 0.0;
  auto r = restrict_grid(g, {N, N, N}, idx);
  return box_norm_3d(r, static_cast<int>(idx[0].size()), static_cast<int>(idx[1].size()),
                     static_cast<int>(idx[2].size()));
}

namespace {
// Balanced norms of exactly zero functions come out as rounding noise.
constexpr double kNumericalZero = 1e-12;

void finish(AdmissClause& c, double num, double den, double bound) {
  c.bound = bound;
  if (den <= 0) {
    c.degenerate = true;
    c.ratio = num > 0 ? INFINITY : 0.0;
    c.pass = false;
    return;
  }
  c.ratio = num / den;
  c.pass = c.ratio <= bound || c.ratio <= kNumericalZero;
}

std::vector<int> members(const Bits& b) {
  std::vector<int> v;
  b.for_each([&](std::size_t i) { v.push_back(static_cast<int>(i)); });
  return v;
}
}  // namespace

AdmissReport is_admissible(const TSystem& sys, double eps, double C, double kappa) {
  require(eps > 0 && eps < 1, "eps must lie in (0,1)");
  require(C > 0 && kappa > 0 && kappa < 1, "admissibility needs C > 0 and 0 < kappa < 1");
  const Cube& cube = *sys.cube;
  int N = sys.N();
  Densities d = densities(sys);
  double base = kappa * std::pow(eps, C);
  AdmissReport rep;
  rep.clauses.resize(14);

  parallel_for(14, [&](std::size_t c) {
    AdmissClause& cl = rep.clauses[c];
    if (c < 4) {
      int l = static_cast<int>(c) + 1;
      cl.name = "frame[" + std::to_string(l) + "]";
      Bits Tl = sys.t_ell(l);
      auto Tlf = Tl.as_function();
      auto g = sys.T.as_function();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= d.dT[l] * Tlf[i];
      finish(cl, frame_box_norm(cube, g, l), frame_box_norm(cube, Tlf, l),
             base * std::pow(d.dT[l], C));
    } else if (c < 10) {
      int s = static_cast<int>(c) - 4;
      auto [j, k] = slot_pair(s);
      cl.name = "pair[" + std::to_string(j) + "," + std::to_string(k) + "]";
      auto a = members(sys.S[j]), b = members(sys.S[k]);
      double bound = base * std::pow(d.pT, C);
      if (a.empty() || b.empty()) {
        finish(cl, 0, 0, bound);
        return;
      }
      std::vector<double> t(a.size() * b.size());
      for (std::size_t x = 0; x < a.size(); ++x)
        for (std::size_t y = 0; y < b.size(); ++y)
          t[x * b.size() + y] =
              (sys.R[s].test(static_cast<std::size_t>(a[x]) * N + b[y]) ? 1.0 : 0.0) - d.djk[s];
      double nrm = std::pow(std::max(0.0, box_pow_2d(t.data(), static_cast<int>(a.size()),
                                                     static_cast<int>(b.size()))),
                            0.25);
      finish(cl, nrm, 1.0, bound);
    } else {
      int i = static_cast<int>(c) - 9;
      cl.name = "single[" + std::to_string(i) + "]";
      auto f = balanced(sys.S[i], d.d[i]);
      finish(cl, u3_norm(f, cube.H()), 1.0, base * std::pow(d.pT, C));
    }
  });

  rep.admissible = true;
  for (auto& cl : rep.clauses) {
    if (!cl.pass && rep.admissible) {
      rep.admissible = false;
      rep.first_failure = cl.name;
    }
    double ex = cl.bound > 0 ? cl.ratio / cl.bound : (cl.ratio > 0 ? INFINITY : 0.0);
    rep.worst_excess = std::max(rep.worst_excess, ex);
  }
  return rep;
}

// ---- the Q form and its chain -------------------------------------------------------

namespace {
struct FrameTables {
  int N;
  std::array<std::vector<double>, 5> f, G;  // frame coordinates
  double at(const std::vector<double>& t, int a, int b, int c) const {
    return t[(static_cast<std::size_t>(a) * N + b) * N + c];
  }
};

double q_value(int N, const std::array<std::vector<double>, 5>& F) {
  // frames: 1 -> (x2,x3,x4), 2 -> (x1,x3,x4), 3 -> (x1,x2,x4), 4 -> (x1,x2,x3)
  auto at = [N](const std::vector<double>& t, int a, int b, int c) {
    return t[(static_cast<std::size_t>(a) * N + b) * N + c];
  };
  double s = ordered_sum(N, [&](std::size_t x1u) {
    int x1 = static_cast<int>(x1u);
    double acc = 0;
    for (int x2 = 0; x2 < N; ++x2)
      for (int x3 = 0; x3 < N; ++x3) {
        double f4 = at(F[4], x1, x2, x3);
        if (f4 == 0) continue;
        for (int x4 = 0; x4 < N; ++x4)
          acc += f4 * at(F[3], x1, x2, x4) * at(F[2], x1, x3, x4) * at(F[1], x2, x3, x4);
      }
    return acc;
  });
  return s / std::pow(static_cast<double>(N), 4);
}
}  // namespace

double q_form(const Cube& cube, const std::array<const std::vector<double>*, 5>& f) {
  std::array<std::vector<double>, 5> F;
  for (int j = 1; j <= 4; ++j) {
    require(f[j] && f[j]->size() == cube.size(), "Q needs four functions on H^3");
    F[j] = cube.to_frame_function(*f[j], j);
  }
  return q_value(cube.N(), F);
}

QChain q_chain(const Cube& cube, const std::array<const std::vector<double>*, 5>& f,
               const std::array<const Bits*, 5>& Tbar) {
  int N = cube.N();
  require(N <= 16, "the Q chain enumerates N^7 points; keep N <= 16");
  FrameTables t{N, {}, {}};
  for (int j = 1; j <= 4; ++j) {
    require(f[j] && f[j]->size() == cube.size(), "Q chain needs four functions on H^3");
    require(Tbar[j] && Tbar[j]->size() == cube.size(), "Q chain needs four sets on H^3");
    for (std::size_t i = 0; i < cube.size(); ++i)
      require(std::abs((*f[j])[i]) <= 1 + 1e-12 && ((*f[j])[i] == 0 || Tbar[j]->test(i)),
              "f_j must be bounded by 1 and supported on Tbar_j");
    t.f[j] = cube.to_frame_function(*f[j], j);
    t.G[j] = cube.to_frame_function(Tbar[j]->as_function(), j);
  }
  QChain q;
  q.Q = q_value(N, t.f);
  double n = N;
  q.U1 = mean(t.G[1]);
  // U2: E_{x3,x4} (E_{x1} G2(x1,x3,x4))^2
  {
    double s = 0;
    for (int x3 = 0; x3 < N; ++x3)
      for (int x4 = 0; x4 < N; ++x4) {
        double m = 0;
        for (int x1 = 0; x1 < N; ++x1) m += t.at(t.G[2], x1, x3, x4);
        s += (m / n) * (m / n);
      }
    q.U2 = s / (n * n);
  }
  // U3: E_{x4} of the 2D box power of G3(., ., x4)
  {
    double s = 0;
    std::vector<double> slice(static_cast<std::size_t>(N) * N);
    for (int x4 = 0; x4 < N; ++x4) {
      for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) slice[a * N + b] = t.at(t.G[3], a, b, x4);
      s += box_pow_2d(slice.data(), N, N);
    }
    q.U3 = s / n;
  }
  // U4 directly as E Z prod g4, and again with x3 passed back through the square
  std::size_t N2 = static_cast<std::size_t>(N) * N;
  double u4 = ordered_sum(N2, [&](std::size_t p) {
    int a0 = static_cast<int>(p / N), a1 = static_cast<int>(p % N);  // x1^0, x1^1
    int a[2] = {a0, a1};
    double acc = 0;
    for (int b0 = 0; b0 < N; ++b0)
      for (int b1 = 0; b1 < N; ++b1) {
        int b[2] = {b0, b1};
        for (int c0 = 0; c0 < N; ++c0)
          for (int c1 = 0; c1 < N; ++c1) {
            int c[2] = {c0, c1};
            double g = 1;
            for (int m = 0; m < 8 && g != 0; ++m) g *= t.at(t.f[4], a[m >> 2], b[(m >> 1) & 1], c[m & 1]);
            if (g == 0) continue;
            double Z = 0;
            for (int x4 = 0; x4 < N; ++x4) {
              double z = 1;
              for (int e = 0; e < 4 && z != 0; ++e) {
                int u = e >> 1, v = e & 1;
                z *= t.at(t.G[3], a[u], b[v], x4) * t.at(t.G[2], a[u], c[v], x4) *
                     t.at(t.G[1], b[u], c[v], x4);
              }
              Z += z;
            }
            acc += g * Z / n;
          }
      }
    return acc;
  });
  q.U4 = u4 / std::pow(n, 6);
  double alt = ordered_sum(N2, [&](std::size_t p) {
    int a[2] = {static_cast<int>(p / N), static_cast<int>(p % N)};
    double acc = 0;
    for (int b0 = 0; b0 < N; ++b0)
      for (int b1 = 0; b1 < N; ++b1) {
        int b[2] = {b0, b1};
        for (int x4 = 0; x4 < N; ++x4) {
          double w = 1;
          for (int e = 0; e < 4 && w != 0; ++e) w *= t.at(t.G[3], a[e >> 1], b[e & 1], x4);
          if (w == 0) continue;
          double inner = 0;
          for (int x3 = 0; x3 < N; ++x3) {
            double v = t.at(t.G[2], a[0], x3, x4) * t.at(t.G[2], a[1], x3, x4) *
                       t.at(t.G[1], b[0], x3, x4) * t.at(t.G[1], b[1], x3, x4);
            for (int e = 0; e < 4 && v != 0; ++e) v *= t.at(t.f[4], a[e >> 1], b[e & 1], x3);
            inner += v;
          }
          inner /= n;
          acc += w * inner * inner;
        }
      }
    return acc;
  });
  q.U4_alt = alt / std::pow(n, 5);
  q.bound = std::sqrt(q.U1) * std::pow(q.U2, 0.25) * std::pow(std::max(0.0, q.U3), 0.125) *
            std::pow(std::max(0.0, q.U4), 0.125);
  return q;
}

double CheckPair::ratio() const {
  if (rhs == 0) return lhs == 0 ? 1.0 : INFINITY;
  return lhs / rhs;
}

namespace {
std::array<std::vector<double>, 5> t_functions(const TSystem& sys) {
  std::array<std::vector<double>, 5> tj;
  for (int l = 1; l <= 4; ++l) tj[l] = sys.t_ell(l).as_function();
  return tj;
}
}  // namespace

std::vector<CheckPair> check_qtttt(const CornerSystem& cs) {
  const TSystem& sys = cs.sys;
  auto d = densities(sys);
  auto T = sys.T.as_function();
  auto tj = t_functions(sys);
  double lhs = q_form(*sys.cube, {nullptr, &T, &T, &T, &T});
  double qt = q_form(*sys.cube, {nullptr, &tj[1], &tj[2], &tj[3], &tj[4]});
  double prod = d.dT[1] * d.dT[2] * d.dT[3] * d.dT[4];
  return {{"Q(T,T,T,T)", lhs, prod * qt}};
}

std::vector<CheckPair> check_qt(const TSystem& sys) {
  auto d = densities(sys);
  auto T = sys.T.as_function();
  std::array<Bits, 5> tl;
  std::array<std::vector<double>, 5> tf;
  for (int l = 1; l <= 4; ++l) {
    tl[l] = sys.t_ell(l);
    tf[l] = tl[l].as_function();
  }
  auto chain_T = q_chain(*sys.cube, {nullptr, &T, &T, &T, &T},
                         {nullptr, &sys.T, &sys.T, &sys.T, &sys.T});
  auto chain_Tj = q_chain(*sys.cube, {nullptr, &tf[1], &tf[2], &tf[3], &tf[4]},
                          {nullptr, &tl[1], &tl[2], &tl[3], &tl[4]});
  double bT = box_pow(T, {sys.N(), sys.N(), sys.N()});
  double bT4 = box_pow(tf[4], {sys.N(), sys.N(), sys.N()});
  return {{"U1(T)", chain_T.U1, d.dT[1] * chain_Tj.U1},
          {"U2(T)", chain_T.U2, std::pow(d.dT[2], 2) * chain_Tj.U2},
          {"U3(T)", chain_T.U3, std::pow(d.dT[3], 4) * chain_Tj.U3},
          {"box8(T)", bT, std::pow(d.dT[4], 8) * bT4}};
}

std::vector<CheckPair> check_qtj(const TSystem& sys) {
  std::array<Bits, 5> tl;
  std::array<std::vector<double>, 5> tf;
  for (int l = 1; l <= 4; ++l) {
    tl[l] = sys.t_ell(l);
    tf[l] = tl[l].as_function();
  }
  auto c = q_chain(*sys.cube, {nullptr, &tf[1], &tf[2], &tf[3], &tf[4]},
                   {nullptr, &tl[1], &tl[2], &tl[3], &tl[4]});
  return {{"Q(T1..T4)", c.Q, c.bound}};
}

namespace {
struct ZMoments {
  double EZ = 0, EZ2 = 0, EU = 0;
};

// moments of Z(G1,G2,G3) over x^{01}_{123}, with the event U built from R_12, R_13, R_23
ZMoments z_moments(const TSystem& sys, const std::array<std::vector<double>, 5>& G) {
  int N = sys.N();
  double n = N;
  auto at = [N](const std::vector<double>& t, int a, int b, int c) {
    return t[(static_cast<std::size_t>(a) * N + b) * N + c];
  };
  std::size_t N2 = static_cast<std::size_t>(N) * N;
  std::vector<ZMoments> part(N2);
  parallel_for(N2, [&](std::size_t p) {
    int a[2] = {static_cast<int>(p / N), static_cast<int>(p % N)};
    ZMoments m;
    for (int b0 = 0; b0 < N; ++b0)
      for (int b1 = 0; b1 < N; ++b1) {
        int b[2] = {b0, b1};
        bool u12 = true;
        for (int e = 0; e < 4; ++e) u12 = u12 && sys.in_R(1, 2, a[e >> 1], b[e & 1]);
        if (!u12) continue;
        for (int c0 = 0; c0 < N; ++c0)
          for (int c1 = 0; c1 < N; ++c1) {
            int c[2] = {c0, c1};
            bool u = true;
            for (int e = 0; e < 4 && u; ++e)
              u = sys.in_R(1, 3, a[e >> 1], c[e & 1]) && sys.in_R(2, 3, b[e >> 1], c[e & 1]);
            if (!u) continue;
            m.EU += 1;
            double Z = 0;
            for (int x4 = 0; x4 < N; ++x4) {
              double z = 1;
              for (int e = 0; e < 4 && z != 0; ++e) {
                int s = e >> 1, v = e & 1;
                z *= at(G[3], a[s], b[v], x4) * at(G[2], a[s], c[v], x4) * at(G[1], b[s], c[v], x4);
              }
              Z += z;
            }
            Z /= n;
            m.EZ += Z;
            m.EZ2 += Z * Z;
          }
      }
    part[p] = m;
  });
  ZMoments out;
  for (auto& m : part) {
    out.EZ += m.EZ;
    out.EZ2 += m.EZ2;
    out.EU += m.EU;
  }
  double vol = std::pow(n, 6);
  out.EZ /= vol;
  out.EZ2 /= vol;
  out.EU /= vol;
  return out;
}
}  // namespace

std::vector<CheckPair> check_z(const TSystem& sys) {
  require(sys.N() <= 16, "Z statistics enumerate N^7 points; keep N <= 16");
  auto d = densities(sys);
  const Cube& cube = *sys.cube;
  std::array<std::vector<double>, 5> GT, GTj;
  auto T = sys.T.as_function();
  for (int j = 1; j <= 3; ++j) {
    GT[j] = cube.to_frame_function(T, j);
    GTj[j] = cube.to_frame_function(sys.t_ell(j).as_function(), j);
  }
  auto mT = z_moments(sys, GT), mTj = z_moments(sys, GTj);
  if (mT.EU == 0) return {{"Z mean", 0, 0}, {"Z var", 0, 0}};
  double meanT = mT.EZ / mT.EU, meanTj = mTj.EZ / mTj.EU;
  double pred = std::pow(d.dT[1] * d.dT[2] * d.dT[3], 4) * meanTj;
  double var = std::max(0.0, (mT.EZ2 - mT.EZ * mT.EZ / mT.EU) / mT.EU);
  return {{"Z mean", meanT, pred}, {"Z var", var, meanT * meanT}};
}

CheckPair check_t4_box(const TSystem& sys) {
  auto d = densities(sys);
  int N = sys.N();
  double lhs = box_pow(sys.t_ell(4).as_function(), {N, N, N});
  double rhs = d.d[1] * d.d[1] * d.d[2] * d.d[2] * d.d[3] * d.d[3] * std::pow(d.d[4], 8);
  for (int s : {pair_slot(1, 2), pair_slot(1, 3), pair_slot(2, 3)}) rhs *= std::pow(d.djk[s], 4);
  return {"box8(T4)", lhs, rhs};
}

// ---- partition systems -------------------------------------------------------------

PartitionSystem PartitionSystem::trivial(const TSystem& sys) {
  PartitionSystem ps;
  ps.sys = sys;
  int N = sys.N();
  for (int i = 1; i <= 4; ++i) ps.Q[i] = Partition::trivial(sys.S[i]).label;
  ps.Q[0].assign(N, -1);
  for (int s = 0; s < 6; ++s) ps.Qjk[s] = Partition::trivial(sys.R[s]).label;
  ps.derive();
  return ps;
}

void PartitionSystem::derive() {
  const Cube& cube = *sys.cube;
  const Group& H = cube.H();
  int N = cube.N();
  std::size_t n3 = cube.size();
  std::vector<int> code(N, 0);
  if (V) {
    require(V->p() == H.p() && V->n() == H.n() && H.is_field(), "V must live in H");
    for (int h = 0; h < N; ++h) code[h] = coset_code(H, *V, h);
  }
  std::vector<int> ph(n3);
  for (std::size_t x = 0; x < n3; ++x) {
    auto c = cube.coords(x);
    ph[x] = (code[c[0]] * N + code[c[1]]) * N + code[c[2]];
  }
  Partition PHp = Partition::from_labels(ph);
  PH = PHp.label;

  std::array<Partition, 5> P;
  for (int i = 1; i <= 4; ++i) {
    std::vector<int> l(n3, -1);
    for (std::size_t x = 0; x < n3; ++x) l[x] = Q[i][cube.dot(x, i)];
    P[i] = meet(PHp, Partition::from_labels(std::move(l)));
    Pi[i] = P[i].label;
  }
  Pi[0].assign(n3, -1);
  Partition t = Partition::trivial(sys.T);
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    std::vector<int> l(n3, -1);
    for (std::size_t x = 0; x < n3; ++x)
      l[x] = Qjk[s][static_cast<std::size_t>(cube.dot(x, j)) * N + cube.dot(x, k)];
    Partition pj = meet(meet(Partition::from_labels(std::move(l)), P[j]), P[k]);
    Pjk[s] = pj.label;
    t = meet(t, pj);
  }
  t.normalize();
  PT = t.label;
}

void PartitionSystem::validate() const {
  sys.validate();
  int N = sys.N();
  for (int i = 1; i <= 4; ++i)
    require(Partition{Q[i]}.ground() == sys.S[i],
            "Q_" + std::to_string(i) + " must cover S_" + std::to_string(i));
  for (int s = 0; s < 6; ++s)
    require(Qjk[s].size() == static_cast<std::size_t>(N) * N &&
                Partition{Qjk[s]}.ground() == sys.R[s],
            "pair partition must cover its R set");
  Partition H{PH};
  require(H.ground().all(), "P_H must cover H^3");
  for (int i = 1; i <= 4; ++i) {
    Partition P{Pi[i]};
    require(P.ground() == sys.lift_S(i), "P_" + std::to_string(i) + " must cover the lift of S_i");
    require(subordinate(P, H), "P_" + std::to_string(i) + " is not subordinate to P_H");
  }
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    Partition P{Pjk[s]};
    std::string nm = "P_" + std::to_string(j) + std::to_string(k);
    require(P.ground() == sys.lift_R(j, k), nm + " must cover the lift of R_jk");
    require(subordinate(P, meet(Partition{Pi[j]}, Partition{Pi[k]})),
            nm + " is not subordinate to P_j and P_k");
  }
  Partition m = Partition::trivial(sys.T);
  for (int s = 0; s < 6; ++s) m = meet(m, Partition{Pjk[s]});
  m.normalize();
  Partition pt{PT};
  pt.normalize();
  require(pt == m, "P_T is not the meet of the P_jk on T");
}

int PartitionSystem::counter_P1() const {
  int c = 0;
  for (int i = 1; i <= 4; ++i) c += multi(Partition{Pi[i]}, Partition{PH});
  return c;
}

int PartitionSystem::counter_P2() const {
  int c = 0;
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    c += multi(Partition{Pjk[s]}, meet(Partition{Pi[j]}, Partition{Pi[k]}));
  }
  return c;
}

int PartitionSystem::counter_PT() const { return multi(Partition{PT}, Partition{PH}); }

}  // namespace bc
