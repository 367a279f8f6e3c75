#include "boxcorner/uniformize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/parallel.hpp"

namespace bc {

namespace {

double safe_frac(double a, double b) { return b > 0 ? a / b : 0.0; }

// labels keyed by arbitrary integer vectors, numbered in order of first appearance
struct KeyLabeler {
  std::map<std::vector<int>, int> ids;
  int operator()(const std::vector<int>& key) {
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(ids.size());
    ids.emplace(key, id);
    return id;
  }
};

std::vector<std::vector<int>> atom_lists(const std::vector<int>& label) {
  int m = 0;
  for (int l : label) m = std::max(m, l + 1);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i] >= 0) out[label[i]].push_back(static_cast<int>(i));
  return out;
}

AffineSubspace span_of(int p, int n, std::vector<std::vector<int>> basis) {
  return AffineSubspace(p, n, std::move(basis), std::vector<int>(n, 0));
}

std::vector<int> coset_labels(const Group& H, const std::optional<AffineSubspace>& V) {
  std::vector<int> code(H.size(), 0);
  if (V)
    for (int h = 0; h < H.size(); ++h) code[h] = coset_code(H, *V, h);
  return Partition::from_labels(code).label;
}

}  // namespace

// ---- inverse U(3) substitute ---------------------------------------------------------

std::vector<std::vector<std::vector<int>>> linear_directions(int p, int d, int c) {
  std::vector<std::vector<std::vector<int>>> out;
  if (c < 0 || c > d) return out;
  if (c == 0) return {{}};  // the whole space
  std::vector<int> piv(c);
  std::iota(piv.begin(), piv.end(), 0);
  while (true) {
    // free slots: row r, column col > piv[r] and col not a pivot
    std::vector<std::pair<int, int>> slots;
    for (int r = 0; r < c; ++r)
      for (int col = piv[r] + 1; col < d; ++col)
        if (std::find(piv.begin(), piv.end(), col) == piv.end()) slots.push_back({r, col});
    std::vector<int> val(slots.size(), 0);
    while (true) {
      std::vector<std::vector<int>> E(c, std::vector<int>(d, 0));
      for (int r = 0; r < c; ++r) E[r][piv[r]] = 1;
      for (std::size_t s = 0; s < slots.size(); ++s) E[slots[s].first][slots[s].second] = val[s];
      out.push_back(std::move(E));
      std::size_t s = 0;
      while (s < val.size() && ++val[s] == p) val[s++] = 0;
      if (s == val.size()) break;
    }
    int r = c - 1;
    while (r >= 0 && piv[r] == d - c + r) --r;
    if (r < 0) break;
    ++piv[r];
    for (int q = r + 1; q < c; ++q) piv[q] = piv[q - 1] + 1;
  }
  return out;
}

std::optional<U3Search> inverse_u3_search(const Bits& S, int p, int d, double u,
                                          int codim_budget) {
  auto G = Group::field(p, d);
  require(S.size() == static_cast<std::size_t>(G->size()), "set does not live on F_p^d");
  double delta = static_cast<double>(S.count()) / G->size();
  require(codim_budget >= 1 && codim_budget <= d, "codim budget must lie in 1..dim(H)");
  require(u3_norm(balanced(S, delta), *G) > u, "inverse search needs U(3) norm above u");
  int budget = codim_budget;
  std::optional<U3Search> best;
  std::size_t searched = 0;
  for (int c = 1; c <= budget; ++c) {
    for (auto& E : linear_directions(p, d, c)) {
      ++searched;
      auto W = AffineSubspace::from_equations(p, d, E, std::vector<int>(c, 0));
      std::map<int, std::pair<int, int>> cells;  // code -> (size, hits)
      for (int h = 0; h < G->size(); ++h) {
        auto& cell = cells[coset_code(*G, W, h)];
        cell.first++;
        cell.second += S[h];
      }
      double gain = 0, dens = -1;
      int best_code = 0;
      for (auto& [code, sh] : cells) {
        double q = static_cast<double>(sh.second) / sh.first;
        gain += static_cast<double>(sh.first) / G->size() * (q - delta) * (q - delta);
        if (q > dens) {
          dens = q;
          best_code = code;
        }
      }
      if (gain <= 1e-15) continue;
      if (!best || gain > best->gain + 1e-15) {
        auto rep = G->digits(best_code);
        best = U3Search{E, W.translate(rep), delta, dens, gain, c, 0};
      }
    }
  }
  if (best) best->searched = searched;
  return best;
}

// ---- affine uniformization ------------------------------------------------------------

double coset_u3(const Bits& S, const Group& H, const AffineSubspace& V, int h) {
  int k = V.dim();
  if (k == 0) return 0.0;
  auto G = Group::field(H.p(), k);
  std::vector<double> f(G->size());
  double hits = 0;
  for (int e = 0; e < G->size(); ++e) {
    int x = H.add(h, H.encode(V.point_at(G->digits(e))));
    f[e] = S[x];
    hits += f[e];
  }
  double d = hits / G->size();
  for (auto& v : f) v -= d;
  return u3_norm(f, *G);
}

namespace {

struct CosetScan {
  double bad = 0;        // P(bad cosets : H)
  double worst = 0;
  int worst_set = -1, worst_rep = -1;
  double energy = 0;
};

CosetScan scan_cosets(const std::vector<Bits>& sets, const Group& H, const AffineSubspace& V,
                      double u) {
  std::map<int, int> reps;  // code -> first member
  for (int h = 0; h < H.size(); ++h) reps.emplace(coset_code(H, V, h), h);
  std::vector<std::pair<int, int>> cos(reps.begin(), reps.end());
  std::size_t m = cos.size() * sets.size();
  std::vector<double> norm(m, 0);
  parallel_for(m, [&](std::size_t i) {
    norm[i] = coset_u3(sets[i % sets.size()], H, V, cos[i / sets.size()].second);
  });
  CosetScan sc;
  double csize = std::pow(static_cast<double>(H.p()), V.dim());
  for (std::size_t c = 0; c < cos.size(); ++c) {
    bool bad = false;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      double v = norm[c * sets.size() + s];
      if (v > u) bad = true;
      if (v > sc.worst) {
        sc.worst = v;
        sc.worst_set = static_cast<int>(s);
        sc.worst_rep = cos[c].second;
      }
    }
    if (bad) sc.bad += csize / H.size();
  }
  std::vector<int> lab(H.size());
  for (int h = 0; h < H.size(); ++h) lab[h] = coset_code(H, V, h);
  Partition P = Partition::from_labels(lab);
  for (auto& S : sets) sc.energy += energy(S.as_function(), P);
  return sc;
}

}  // namespace

AffineUniformResult affine_uniformize(const std::vector<Bits>& sets, const Group& H, double u,
                                      double tau, int codim_budget, int max_codim,
                                      std::optional<AffineSubspace> start) {
  require(H.is_field(), "affine uniformization needs H = F_p^n");
  require(u > 0 && u < 1 && tau > 0 && tau < 1, "need 0 < u, tau < 1");
  for (auto& S : sets) require(S.size() == static_cast<std::size_t>(H.size()), "set not on H");
  int p = H.p(), n = H.n();
  AffineUniformResult res{start ? *start : AffineSubspace::whole(p, n), 0, 0, 0, 0, false, {}};
  require(res.V.n() == n && res.V.p() == p, "start subspace must live in H");
  res.V = span_of(p, n, res.V.basis());
  StoppingMonitor mon(MonitorKind::Weighted, u, tau, 2.0, "affine U(3)");
  while (true) {
    auto sc = scan_cosets(sets, H, res.V, u);
    res.energy.push_back(sc.energy);
    res.bad_probability = sc.bad;
    if (res.energy.size() > 1) mon.record(sc.energy - res.energy[res.energy.size() - 2]);
    if (sc.bad < tau) break;
    int room = std::min(codim_budget, max_codim - res.V.codim());
    if (room <= 0 || res.V.dim() == 0) {
      res.partial = true;
      break;
    }
    // worst set on the worst coset, in coset coordinates
    int k = res.V.dim();
    auto G = Group::field(p, k);
    Bits local(G->size());
    for (int e = 0; e < G->size(); ++e)
      local.set(e, sets[sc.worst_set][H.add(sc.worst_rep, H.encode(res.V.point_at(G->digits(e))))]);
    auto found = inverse_u3_search(local, p, k, u, std::min(room, k));
    if (!found) {
      res.partial = true;
      break;
    }
    std::vector<std::vector<int>> basis;
    for (auto& c : linalg::nullspace(found->equations, k, p)) {
      std::vector<int> v(n, 0);
      for (int b = 0; b < k; ++b)
        for (int t = 0; t < n; ++t) v[t] = (v[t] + c[b] * res.V.basis()[b][t]) % p;
      basis.push_back(std::move(v));
    }
    res.V = span_of(p, n, std::move(basis));
    ++res.rounds;
  }
  res.monitor_count = mon.count();
  res.monitor_cap = mon.cap();
  return res;
}

// ---- 2D box step --------------------------------------------------------------------------

namespace {

struct CellInfo {
  int a = -1, b = -1;
  std::vector<int> xs, ys;
  std::map<int, int> zcount;   // Z atom -> points inside the cell
  double worst = 0;            // worst relative box norm
  int worst_atom = -1;
};

std::vector<CellInfo> scan_cells(const std::vector<int>& Z, int N, const std::vector<int>& PX,
                                 const std::vector<int>& PY) {
  auto xa = atom_lists(PX), ya = atom_lists(PY);
  std::vector<CellInfo> cells;
  for (std::size_t a = 0; a < xa.size(); ++a)
    for (std::size_t b = 0; b < ya.size(); ++b) {
      if (xa[a].empty() || ya[b].empty()) continue;
      CellInfo c;
      c.a = static_cast<int>(a);
      c.b = static_cast<int>(b);
      c.xs = xa[a];
      c.ys = ya[b];
      for (int x : c.xs)
        for (int y : c.ys) {
          int z = Z[static_cast<std::size_t>(x) * N + y];
          if (z >= 0) c.zcount[z]++;
        }
      cells.push_back(std::move(c));
    }
  parallel_for(cells.size(), [&](std::size_t i) {
    auto& c = cells[i];
    int nx = static_cast<int>(c.xs.size()), ny = static_cast<int>(c.ys.size());
    double vol = static_cast<double>(nx) * ny;
    for (auto& [z, cnt] : c.zcount) {
      double d = cnt / vol;
      std::vector<double> f(static_cast<std::size_t>(nx) * ny);
      for (int i2 = 0; i2 < nx; ++i2)
        for (int j2 = 0; j2 < ny; ++j2)
          f[static_cast<std::size_t>(i2) * ny + j2] =
              (Z[static_cast<std::size_t>(c.xs[i2]) * N + c.ys[j2]] == z) - d;
      double nrm = std::pow(std::max(0.0, box_pow_2d(f.data(), nx, ny)), 0.25);
      if (nrm > c.worst) {
        c.worst = nrm;
        c.worst_atom = z;
      }
    }
  });
  return cells;
}

double cell_energy(const std::vector<int>& Z, int N, const std::vector<int>& PX,
                   const std::vector<int>& PY) {
  double e = 0;
  for (auto& c : scan_cells(Z, N, PX, PY)) {
    double vol = static_cast<double>(c.xs.size()) * c.ys.size();
    for (auto& [z, cnt] : c.zcount) e += static_cast<double>(cnt) * cnt / vol;
  }
  return e / (static_cast<double>(N) * N);
}

double ground_mass(const std::vector<int>& P) {
  return static_cast<double>(std::count_if(P.begin(), P.end(), [](int l) { return l >= 0; }));
}

}  // namespace

BoxStep box_pz_partition_step(const std::vector<int>& Z, int N, const std::vector<int>& PX,
                              const std::vector<int>& PY, double u, double tau,
                              const UniformizeConfig& cfg) {
  std::size_t NN = static_cast<std::size_t>(N) * N;
  require(Z.size() == NN && PX.size() == static_cast<std::size_t>(N) &&
              PY.size() == static_cast<std::size_t>(N),
          "box step: label sizes do not match N");
  for (std::size_t i = 0; i < NN; ++i)
    if (Z[i] >= 0)
      require(PX[i / N] >= 0 && PY[i % N] >= 0, "box step: Z must live inside X x Y");
  BoxStep st;
  auto cells = scan_cells(Z, N, PX, PY);
  double XY = ground_mass(PX) * ground_mass(PY);
  std::vector<const CellInfo*> bad;
  for (auto& c : cells)
    if (c.worst >= u) {
      bad.push_back(&c);
      st.bad_probability += c.xs.size() * c.ys.size() / XY;
    }
  st.bad_cells = static_cast<int>(bad.size());
  {
    std::ostringstream m;
    m << "box step needs the bad probability " << st.bad_probability << " to reach tau = " << tau;
    require(st.bad_probability >= tau && !bad.empty(), m.str());
  }
  st.energy_before = cell_energy(Z, N, PX, PY);

  std::vector<std::vector<int>> xkey(N), ykey(N);
  for (int x = 0; x < N; ++x) xkey[x] = {PX[x]};
  for (int y = 0; y < N; ++y) ykey[y] = {PY[y]};
  std::map<int, int> per_x, per_y;
  for (std::size_t k = 0; k < bad.size(); ++k) {
    const CellInfo& c = *bad[k];
    int nx = static_cast<int>(c.xs.size()), ny = static_cast<int>(c.ys.size());
    Bits A(static_cast<std::size_t>(nx) * ny);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j)
        A.set(static_cast<std::size_t>(i) * ny + j,
              Z[static_cast<std::size_t>(c.xs[i]) * N + c.ys[j]] == c.worst_atom);
    auto r = box_pz_2d(A, nx, ny, cfg.bpz, cfg.inc.anchor_limit, cfg.inc.seed + k);
    double beta = r.p1 * r.p2, nu = r.density - r.delta;
    if (beta < 1) st.jump_floor += nx * ny / static_cast<double>(NN) * beta * nu * nu / (1 - beta);
    for (int i = 0; i < nx; ++i) xkey[c.xs[i]].push_back(c.b * 2 + r.X1[i]);
    for (int j = 0; j < ny; ++j) ykey[c.ys[j]].push_back(c.a * 2 + r.X2[j]);
    per_x[c.a]++;
    per_y[c.b]++;
  }
  for (auto& [a, n] : per_x) st.max_bad_per_X = std::max(st.max_bad_per_X, n);
  for (auto& [b, n] : per_y) st.max_bad_per_Y = std::max(st.max_bad_per_Y, n);
  KeyLabeler lx, ly;
  st.PX.assign(N, -1);
  st.PY.assign(N, -1);
  for (int x = 0; x < N; ++x)
    if (PX[x] >= 0) st.PX[x] = lx(xkey[x]);
  for (int y = 0; y < N; ++y)
    if (PY[y] >= 0) st.PY[y] = ly(ykey[y]);
  st.multi_X = multi(Partition{st.PX}, Partition{PX});
  st.multi_Y = multi(Partition{st.PY}, Partition{PY});
  // each bad cell cuts its row and column atoms in two at most
  ensure(st.multi_X <= (1 << std::min(st.max_bad_per_X, 30)) &&
             st.multi_Y <= (1 << std::min(st.max_bad_per_Y, 30)),
         "box step split an atom more than twice per bad cell");
  ensure(TowerValue::of(st.multi_X) <= TowerValue::of(ground_mass(PY)).pow2() &&
             TowerValue::of(st.multi_Y) <= TowerValue::of(ground_mass(PX)).pow2(),
         "box step multiplicity exceeds its tower bound");
  st.energy_after = cell_energy(Z, N, st.PX, st.PY);
  double jump = st.energy_after - st.energy_before;
  {
    std::ostringstream m;
    m << "box step energy jump " << jump << " is below its floor " << st.jump_floor;
    ensure(jump >= st.jump_floor - 1e-12, m.str());
  }
  st.jump_reference = tau * std::pow(u, cfg.C2);
  st.jump_reference_ok = jump >= st.jump_reference;
  return st;
}

// ---- atom systems ------------------------------------------------------------------------

int AtomSystem::embed(int i, int e) const {
  const Group& G = *H;
  if (basis.empty()) return G.add(shift[i], e);
  auto d = cs.sys.cube->H().digits(e);
  std::vector<int> v(G.n(), 0);
  for (std::size_t b = 0; b < basis.size(); ++b)
    for (int t = 0; t < G.n(); ++t) v[t] = (v[t] + d[b] * basis[b][t]) % G.p();
  return G.add(shift[i], G.encode(v));
}

std::size_t AtomSystem::embed_point(const Cube& ambient, std::size_t x) const {
  auto c = cs.sys.cube->coords(x);
  return ambient.index(embed(1, c[0]), embed(2, c[1]), embed(3, c[2]));
}

AtomSystem atom_system(const PartitionSystem& ps, int atom, const Bits* A) {
  const Cube& cube = *ps.sys.cube;
  const Group& H = cube.H();
  int N = cube.N();
  std::size_t x0 = cube.size();
  for (std::size_t x = 0; x < cube.size(); ++x)
    if (ps.PT[x] == atom) {
      x0 = x;
      break;
    }
  require(x0 < cube.size(), "atom " + std::to_string(atom) + " is not an atom of P_T");
  AtomSystem at;
  at.H = cube.group();
  GroupPtr sub;
  if (ps.V) {
    require(H.is_field(), "affine cells need H = F_p^n");
    at.basis = ps.V->basis();
    sub = Group::field(H.p(), ps.V->dim());
    for (int i = 1; i <= 3; ++i) at.shift[i] = coset_code(H, *ps.V, cube.dot(x0, i));
  } else {
    // one cell: the identity embedding
    sub = cube.group();
  }
  at.shift[4] = H.add(H.add(at.shift[1], at.shift[2]), at.shift[3]);
  auto subcube = std::make_shared<const Cube>(sub);
  at.cs.sys.cube = subcube;  // embed reads the sub group from here
  int M = sub->size();
  std::array<int, 5> qlab{};
  for (int i = 1; i <= 4; ++i) qlab[i] = ps.Q[i][cube.dot(x0, i)];
  std::array<Bits, 5> S;
  for (int i = 1; i <= 4; ++i) {
    S[i] = Bits(M);
    for (int e = 0; e < M; ++e) {
      int h = at.embed(i, e);
      S[i].set(e, ps.Q[i][h] == qlab[i]);
    }
  }
  std::array<Bits, 6> R;
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    int rl = ps.Qjk[s][static_cast<std::size_t>(cube.dot(x0, j)) * N + cube.dot(x0, k)];
    R[s] = Bits(static_cast<std::size_t>(M) * M);
    for (int e = 0; e < M; ++e) {
      if (!S[j][e]) continue;
      int hj = at.embed(j, e);
      for (int f = 0; f < M; ++f)
        if (S[k][f] && ps.Qjk[s][static_cast<std::size_t>(hj) * N + at.embed(k, f)] == rl)
          R[s].set(static_cast<std::size_t>(e) * M + f);
    }
  }
  Bits T(subcube->size());
  Bits Ap(subcube->size());
  for (std::size_t y = 0; y < subcube->size(); ++y) {
    std::size_t x = at.embed_point(cube, y);
    if (ps.PT[x] == atom) {
      T.set(y);
      if (A && (*A)[x]) Ap.set(y);
    }
  }
  at.cs.sys = TSystem::build(subcube, S, R, &T);
  at.cs.A = Ap;
  return at;
}

// ---- two-box uniformizer ------------------------------------------------------------------

namespace {

std::vector<int> effective_axis(const PartitionSystem& ps, int i, const std::vector<int>& cosets) {
  std::vector<int> l(ps.Q[i].size(), -1);
  int N = static_cast<int>(l.size());
  for (int h = 0; h < N; ++h)
    if (ps.Q[i][h] >= 0) l[h] = ps.Q[i][h] * N + cosets[h];
  return Partition::from_labels(l).label;
}

// bad box mass per pair, relative to S_j x S_k
double pair_bad(const PartitionSystem& ps, int s, const std::array<std::vector<int>, 5>& X,
                double u) {
  auto [j, k] = slot_pair(s);
  auto cells = scan_cells(ps.Qjk[s], ps.sys.N(), X[j], X[k]);
  double bad = 0;
  for (auto& c : cells)
    if (c.worst >= u) bad += static_cast<double>(c.xs.size()) * c.ys.size();
  return safe_frac(bad, ground_mass(X[j]) * ground_mass(X[k]));
}

// points h of S_i whose (Q_i atom, coset) piece has relative U(3) norm above u
double axis_bad(const PartitionSystem& ps, int i, const std::vector<int>& cosets, double u) {
  const Group& H = ps.sys.cube->H();
  if (!ps.V && !H.is_field()) return 0.0;
  AffineSubspace V = ps.V ? *ps.V : AffineSubspace::whole(H.p(), H.n());
  auto atoms = atom_lists(ps.Q[i]);
  std::map<std::pair<int, int>, int> pieces;  // (atom, coset) -> count
  std::map<int, int> rep;
  for (int h = 0; h < H.size(); ++h) {
    rep.emplace(cosets[h], h);
    if (ps.Q[i][h] >= 0) pieces[{ps.Q[i][h], cosets[h]}]++;
  }
  std::vector<std::pair<std::pair<int, int>, int>> list(pieces.begin(), pieces.end());
  std::vector<double> norm(list.size());
  parallel_for(list.size(), [&](std::size_t t) {
    auto [a, c] = list[t].first;
    Bits S(H.size());
    for (int h : atoms[a]) S.set(h);
    norm[t] = coset_u3(S, H, V, rep[c]);
  });
  double bad = 0;
  for (std::size_t t = 0; t < list.size(); ++t)
    if (norm[t] > u) bad += list[t].second;
  return safe_frac(bad, static_cast<double>(ps.sys.S[i].count()));
}

// Q_jk := Q_jk ^ (Q_j x Q_k) for the pairs touching the axes in `axes`
void refine_pairs(PartitionSystem& ps, std::initializer_list<int> axes) {
  int N = ps.sys.N();
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    if (std::none_of(axes.begin(), axes.end(), [&](int a) { return a == j || a == k; })) continue;
    KeyLabeler lab;
    for (std::size_t q = 0; q < ps.Qjk[s].size(); ++q)
      if (ps.Qjk[s][q] >= 0) ps.Qjk[s][q] = lab({ps.Qjk[s][q], ps.Q[j][q / N], ps.Q[k][q % N]});
  }
}

void measure_events(UniformizeReport& rep, const PartitionSystem& ps, double u2, double u3) {
  const Group& H = ps.sys.cube->H();
  auto cosets = coset_labels(H, ps.V);
  std::array<std::vector<int>, 5> X;
  for (int i = 1; i <= 4; ++i) X[i] = effective_axis(ps, i, cosets);
  for (int s = 0; s < 6; ++s) rep.p_E2[s] = pair_bad(ps, s, X, u2);
  for (int i = 1; i <= 4; ++i) rep.p_E3[i] = axis_bad(ps, i, cosets, u3);
}

}  // namespace

UniformizeReport two_box_uniformize(const PartitionSystem& input, const UniformizeConfig& cfg) {
  require(cfg.tau > 0 && cfg.tau < 1 && cfg.u2 > 0 && cfg.u2 < 1 && cfg.u3 > 0 && cfg.u3 < 1,
          "uniformizer thresholds must lie in (0,1)");
  UniformizeReport rep;
  rep.ps = input;
  PartitionSystem& ps = rep.ps;
  const Group& H = ps.sys.cube->H();
  int N = ps.sys.N();
  rep.counters_before = {ps.counter_P1(), ps.counter_P2(), ps.counter_PT()};
  double Q = std::max(1, rep.counters_before[2]);
  double u2 = cfg.u2 * std::pow(Q, -cfg.C1), u3 = cfg.u3 * std::pow(Q, -cfg.C1);
  // every counted step gains Delta = u2^C2 tau in energy
  double Delta = std::min(0.999, std::pow(u2, cfg.C2) * cfg.tau);
  StoppingMonitor box_mon(MonitorKind::Simple, Delta, 1.0, 1.0, "2D box steps");
  bool affine_stuck = false;

  for (rep.rounds = 0; rep.rounds < cfg.max_rounds; ++rep.rounds) {
    measure_events(rep, ps, u2, u3);
    int worst_pair = static_cast<int>(std::max_element(rep.p_E2.begin(), rep.p_E2.end()) -
                                      rep.p_E2.begin());
    double worst3 = *std::max_element(rep.p_E3.begin() + 1, rep.p_E3.end());
    bool pair_bad_now = rep.p_E2[worst_pair] >= cfg.tau;
    bool axis_bad_now = worst3 >= cfg.tau && !affine_stuck;
    if (!pair_bad_now && !axis_bad_now) break;

    if (axis_bad_now) {
      std::vector<Bits> sets;
      for (int i = 1; i <= 4; ++i)
        for (auto& a : atom_lists(ps.Q[i])) {
          Bits S(N);
          for (int h : a) S.set(h);
          sets.push_back(std::move(S));
        }
      int before = ps.codim();
      auto ar = affine_uniformize(sets, H, u3, cfg.tau, cfg.codim_budget, cfg.max_codim, ps.V);
      if (ar.V.codim() == before) {
        affine_stuck = true;
        rep.notes.push_back("affine refinement exhausted its codimension budget");
      } else {
        ps.V = ar.V;
      }
      rep.monitors.push_back({"affine U(3)", ar.monitor_count, ar.monitor_cap});
      continue;
    }

    auto [j, k] = slot_pair(worst_pair);
    auto cosets = coset_labels(H, ps.V);
    auto st = box_pz_partition_step(ps.Qjk[worst_pair], N, effective_axis(ps, j, cosets),
                                    effective_axis(ps, k, cosets), u2, cfg.tau, cfg);
    box_mon.record(st.energy_after - st.energy_before);
    if (!st.jump_reference_ok)
      rep.notes.push_back("box step energy jump below tau u^C2 on pair " + std::to_string(j) +
                          std::to_string(k));
    ps.Q[j] = st.PX;
    ps.Q[k] = st.PY;
    refine_pairs(ps, {j, k});
  }
  if (rep.rounds == cfg.max_rounds) {
    rep.partial = true;
    rep.notes.push_back("round cap reached");
  }
  if (affine_stuck) rep.partial = true;
  ps.derive();
  measure_events(rep, ps, u2, u3);
  rep.monitors.push_back({"2D box steps", box_mon.count(), box_mon.cap()});
  rep.codim = ps.codim();
  rep.counters_after = {ps.counter_P1(), ps.counter_P2(), ps.counter_PT()};
  rep.pt_counter_kept = rep.counters_after[2] <= rep.counters_before[2];
  rep.pair_multi_ok = rep.counters_after[1] <= std::max(rep.counters_before[1], 6);
  rep.events_ok = true;
  for (double e : rep.p_E2) rep.events_ok = rep.events_ok && e < cfg.tau;
  for (int i = 1; i <= 4; ++i) rep.events_ok = rep.events_ok && rep.p_E3[i] < cfg.tau;
  return rep;
}

// ---- T-uniformizer ------------------------------------------------------------------------

namespace {

enum class AtomClass { Good, Bad, Frame };

struct AtomVerdict {
  AtomClass kind = AtomClass::Good;
  int frame = 0;
  double mass = 0;  // |t| / |H^3|
};

std::vector<AtomVerdict> classify_atoms(const PartitionSystem& ps, double eps,
                                        const UniformizeConfig& cfg) {
  auto lists = atom_lists(ps.PT);
  std::vector<AtomVerdict> out(lists.size());
  double n3 = static_cast<double>(ps.sys.cube->size());
  parallel_for(lists.size(), [&](std::size_t t) {
    AtomVerdict v;
    v.mass = lists[t].size() / n3;
    auto at = atom_system(ps, static_cast<int>(t));
    auto r = is_admissible(at.cs.sys, eps, cfg.admiss_C, cfg.admiss_kappa);
    if (!r.admissible) {
      bool pair_fail = false;
      int frame = 0;
      for (auto& c : r.clauses) {
        if (c.pass) continue;
        if (c.name.rfind("frame", 0) == 0) {
          if (!frame) frame = c.name[6] - '0';
        } else {
          pair_fail = true;
        }
      }
      v.kind = pair_fail ? AtomClass::Bad : AtomClass::Frame;
      v.frame = pair_fail ? 0 : frame;
    }
    out[t] = v;
  });
  return out;
}

// E[E(T : P_{T_l})^2] with P_{T_l} = P_l ^ P_jk (j, k != l) on T_l
double frame_energy(const PartitionSystem& ps, int ell) {
  Partition P{ps.Pi[ell]};
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    if (j != ell && k != ell) P = meet(P, Partition{ps.Pjk[s]});
  }
  return energy(ps.sys.T.as_function(), P);
}

}  // namespace

UniformizeReport t_uniformize(const TSystem& sys, double uT, double tauT,
                              const UniformizeConfig& cfg) {
  require(uT > 0 && uT < 1 && tauT > 0 && tauT < 1, "need 0 < uT, tauT < 1");
  sys.validate();
  UniformizeReport rep;
  rep.ps = PartitionSystem::trivial(sys);
  rep.counters_before = {rep.ps.counter_P1(), rep.ps.counter_P2(), rep.ps.counter_PT()};
  StoppingMonitor mon(MonitorKind::Weighted, uT * uT, tauT, 2.0, "T-box increments");
  int N = sys.N();
  int rounds = 0;
  bool settled = false;
  std::vector<std::string> notes;

  for (; rounds < cfg.max_rounds && !settled; ++rounds) {
    auto two = two_box_uniformize(rep.ps, cfg);
    for (auto& m : two.monitors) rep.monitors.push_back(m);
    for (auto& n : two.notes) notes.push_back(n);
    rep.partial = rep.partial || two.partial;
    rep.p_E2 = two.p_E2;
    rep.p_E3 = two.p_E3;
    rep.pt_counter_kept = rep.pt_counter_kept && two.pt_counter_kept;
    rep.pair_multi_ok = rep.pair_multi_ok && two.pair_multi_ok;
    PartitionSystem& ps = rep.ps;
    ps = std::move(two.ps);

    auto verdict = classify_atoms(ps, uT, cfg);
    rep.p_E = rep.p_B = 0;
    rep.p_F.fill(0);
    for (auto& v : verdict) {
      if (v.kind == AtomClass::Good) continue;
      rep.p_E += v.mass;
      if (v.kind == AtomClass::Bad)
        rep.p_B += v.mass;
      else
        rep.p_F[v.frame] += v.mass;
    }
    int ell = static_cast<int>(std::max_element(rep.p_F.begin() + 1, rep.p_F.end()) -
                               rep.p_F.begin());
    if (rep.p_F[ell] < tauT / 8) {
      settled = true;
      break;
    }

    double e0 = frame_energy(ps, ell);
    // per-axis and per-pair membership keys collected from every increment of this round
    std::array<std::vector<std::vector<int>>, 5> qkey;
    std::array<std::vector<std::vector<int>>, 6> rkey;
    for (int i = 1; i <= 4; ++i) {
      qkey[i].resize(N);
      for (int h = 0; h < N; ++h) qkey[i][h] = {ps.Q[i][h]};
    }
    for (int s = 0; s < 6; ++s) {
      rkey[s].resize(ps.Qjk[s].size());
      for (std::size_t q = 0; q < rkey[s].size(); ++q) rkey[s][q] = {ps.Qjk[s][q]};
    }
    int done = 0;
    for (std::size_t t = 0; t < verdict.size(); ++t) {
      if (verdict[t].kind != AtomClass::Frame || verdict[t].frame != ell) continue;
      auto at = atom_system(ps, static_cast<int>(t));
      const TSystem& as = at.cs.sys;
      IncrementResult inc;
      try {
        inc = weighted_tbox_increment(as, as.T, as.t_ell(ell), uT, cfg.inc, ell);
      } catch (const PreconditionError& e) {
        notes.push_back(std::string("atom skipped: ") + e.what());
        continue;
      }
      ++done;
      int M = as.N();
      std::array<std::vector<bool>, 5> memS;
      for (int i = 1; i <= 4; ++i) {
        memS[i].assign(N, false);
        for (int e = 0; e < M; ++e)
          if (inc.sys.S[i][e]) memS[i][at.embed(i, e)] = true;
        // split only the atom s_{t:i} on its coset
        for (int e = 0; e < M; ++e) {
          int h = at.embed(i, e);
          if (ps.Q[i][h] >= 0 && as.S[i][e]) qkey[i][h].push_back(memS[i][h]);
        }
      }
      for (int s = 0; s < 6; ++s) {
        auto [j, k] = slot_pair(s);
        for (int e = 0; e < M; ++e)
          for (int f = 0; f < M; ++f)
            if (as.R[s][static_cast<std::size_t>(e) * M + f]) {
              std::size_t q = static_cast<std::size_t>(at.embed(j, e)) * N + at.embed(k, f);
              rkey[s][q].push_back(inc.sys.R[s][static_cast<std::size_t>(e) * M + f]);
            }
      }
    }
    if (!done) {
      notes.push_back("no frame atom admitted an increment");
      rep.partial = true;
      break;
    }
    rep.increments += done;
    for (int i = 1; i <= 4; ++i) {
      KeyLabeler lab;
      for (int h = 0; h < N; ++h) ps.Q[i][h] = ps.Q[i][h] >= 0 ? lab(qkey[i][h]) : -1;
    }
    for (int s = 0; s < 6; ++s) {
      KeyLabeler lab;
      for (std::size_t q = 0; q < rkey[s].size(); ++q)
        ps.Qjk[s][q] = ps.Qjk[s][q] >= 0 ? lab(rkey[s][q]) : -1;
    }
    refine_pairs(ps, {1, 2, 3, 4});
    ps.derive();
    mon.record(frame_energy(ps, ell) - e0);
  }
  if (!settled) {
    rep.partial = true;
    if (rounds >= cfg.max_rounds) notes.push_back("round cap reached");
  }
  rep.rounds = rounds;
  rep.notes = std::move(notes);
  rep.monitors.push_back({"T-box increments", mon.count(), mon.cap()});
  rep.codim = rep.ps.codim();
  rep.counters_after = {rep.ps.counter_P1(), rep.ps.counter_P2(), rep.ps.counter_PT()};
  rep.events_ok = rep.p_E <= tauT;
  return rep;
}

// ---- the uniformizing lemma ----------------------------------------------------------------

UniLemmaResult uniformizing_lemma(const CornerSystem& cs, double delta, double v,
                                  const UniformizeConfig& cfg, bool strict) {
  cs.validate();
  require(v > 0 && v < 1 && delta > 0 && delta < 1, "need 0 < delta, v < 1");
  double dA = cond_prob(cs.A, cs.sys.T);
  {
    std::ostringstream m;
    m << "uniformizing needs P(A:T) = " << dA << " >= delta + v = " << delta + v;
    require(dA >= delta + v - 1e-12, m.str());
  }
  const Cube& cube = *cs.sys.cube;
  double n3 = static_cast<double>(cube.size());
  double pT = cs.sys.T.count() / n3;
  double tauT = std::min(0.5, cfg.cT * std::pow(v, cfg.CT) * pT);

  UniLemmaResult res;
  res.report = t_uniformize(cs.sys, delta, tauT, cfg);
  const PartitionSystem& ps = res.report.ps;
  double Q = std::max(1, ps.counter_PT());

  // P extends P_T by the P_H cells outside T
  auto tl = atom_lists(ps.PT);
  int m = static_cast<int>(tl.size());
  std::vector<int> lab(cube.size());
  for (std::size_t x = 0; x < cube.size(); ++x)
    lab[x] = ps.PT[x] >= 0 ? ps.PT[x] : m + ps.PH[x];
  Partition P = Partition::from_labels(lab);
  std::vector<int> remap(static_cast<std::size_t>(m), -1);
  for (std::size_t x = 0; x < cube.size(); ++x)
    if (ps.PT[x] >= 0) remap[ps.PT[x]] = P.label[x];

  std::vector<double> cell_size(static_cast<std::size_t>(cube.size()), 0);
  for (std::size_t x = 0; x < cube.size(); ++x) cell_size[ps.PH[x]]++;
  auto verdict = classify_atoms(ps, delta, cfg);
  // non-admissible atoms first, then the small ones
  std::vector<std::pair<int, int>> cand;  // (priority, atom)
  for (int t = 0; t < m; ++t) {
    double share = tl[t].size() / cell_size[ps.PH[tl[t][0]]];
    if (verdict[t].kind != AtomClass::Good)
      cand.push_back({0, t});
    else if (share <= v / Q * pT)
      cand.push_back({1, t});
  }
  double Tn = static_cast<double>(cs.sys.T.count());
  double allowance = v / 4;
  std::vector<int> excluded;
  for (auto [pri, t] : cand) {
    double add = tl[t].size() / Tn;
    if (res.excluded_mass + add > allowance + 1e-15) {
      res.relaxed = true;
      continue;
    }
    res.excluded_mass += add;
    excluded.push_back(remap[t]);
  }
  {
    std::ostringstream msg;
    msg << "excluded atoms exceed the pigeonhole allowance v/4 = " << allowance;
    require(!(strict && res.relaxed), msg.str());
  }
  auto pick = pigeonhole_select(cs.A, cs.sys.T, cube.full(), P, excluded, v, delta);
  int atom = -1;
  for (int t = 0; t < m; ++t)
    if (remap[t] == pick.atom) atom = t;
  ensure(atom >= 0, "pigeonhole picked a cell outside T");
  res.atom = atom;
  res.next = atom_system(ps, atom, &cs.A);
  res.density = cond_prob(res.next.cs.A, res.next.cs.sys.T);
  res.density_floor = delta + v / 4;
  ensure(res.density >= res.density_floor - 1e-12, "uniformized atom lost the density gain");
  auto ar = is_admissible(res.next.cs.sys, delta, cfg.admiss_C, cfg.admiss_kappa);
  res.admissible = ar.admissible;
  res.admiss_failure = ar.first_failure;
  res.pT = res.next.cs.sys.T.count() / static_cast<double>(res.next.cs.sys.cube->size());
  res.dim_before = cube.H().is_field() ? cube.H().n() : 0;
  res.dim_after = ps.V ? ps.V->dim() : res.dim_before;
  return res;
}

}  // namespace bc
