#include "boxcorner/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "boxcorner/error.hpp"
#include "boxcorner/parallel.hpp"
#include "boxcorner/systems.hpp"

namespace bc {

namespace {

std::size_t prod(const std::vector<int>& d) {
  std::size_t n = 1;
  for (int x : d) n *= static_cast<std::size_t>(x);
  return n;
}

double root(double pw, int k) {
  if (pw < 0) {
    ensure(pw > -1e-12, "box norm power went negative");
    return 0.0;
  }
  return std::pow(pw, 1.0 / std::ldexp(1.0, k));
}

}  // namespace

double box_pow_2d(const double* f, int X, int Y) {
  double total = 0;
  for (int x = 0; x < X; ++x) {
    const double* a = f + static_cast<std::size_t>(x) * Y;
    for (int x2 = x; x2 < X; ++x2) {
      const double* b = f + static_cast<std::size_t>(x2) * Y;
      double s = 0;
      for (int y = 0; y < Y; ++y) s += a[y] * b[y];
      s /= Y;
      total += (x == x2 ? 1.0 : 2.0) * s * s;
    }
  }
  return total / (static_cast<double>(X) * X);
}

double box_pow_3d(const double* f, int X, int Y, int Z) {
  std::size_t slab = static_cast<std::size_t>(Y) * Z;
  double total = ordered_sum(static_cast<std::size_t>(X), [&](std::size_t x) {
    std::vector<double> g(slab);
    const double* a = f + x * slab;
    double part = 0;
    for (int x2 = static_cast<int>(x); x2 < X; ++x2) {
      const double* b = f + static_cast<std::size_t>(x2) * slab;
      for (std::size_t q = 0; q < slab; ++q) g[q] = a[q] * b[q];
      part += (static_cast<int>(x) == x2 ? 1.0 : 2.0) * box_pow_2d(g.data(), Y, Z);
    }
    return part;
  });
  return total / (static_cast<double>(X) * X);
}

double box_pow(const std::vector<double>& f, const std::vector<int>& dims) {
  require(!dims.empty(), "box norm needs at least one axis");
  require(f.size() == prod(dims), "table size does not match axes");
  if (dims.size() == 1) {
    double m = mean(f);
    return m * m;
  }
  if (dims.size() == 2) return box_pow_2d(f.data(), dims[0], dims[1]);
  if (dims.size() == 3) return box_pow_3d(f.data(), dims[0], dims[1], dims[2]);
  std::vector<int> sub(dims.begin() + 1, dims.end());
  std::size_t rest = prod(sub);
  std::vector<double> g(rest);
  double total = 0;
  for (int a = 0; a < dims[0]; ++a)
    for (int b = a; b < dims[0]; ++b) {
      for (std::size_t q = 0; q < rest; ++q) g[q] = f[a * rest + q] * f[b * rest + q];
      total += (a == b ? 1.0 : 2.0) * box_pow(g, sub);
    }
  return total / (static_cast<double>(dims[0]) * dims[0]);
}

double box_norm(const std::vector<double>& f, const std::vector<int>& dims) {
  return root(box_pow(f, dims), static_cast<int>(dims.size()));
}

double box_norm(const TableFunction& f) { return box_norm(f.values, f.dims()); }

std::vector<double> permute_axes(const std::vector<double>& f, const std::vector<int>& dims,
                                 const std::vector<int>& order) {
  int k = static_cast<int>(dims.size());
  require(static_cast<int>(order.size()) == k, "permutation has wrong length");
  std::vector<int> nd(k);
  for (int i = 0; i < k; ++i) nd[i] = dims[order[i]];
  std::vector<std::size_t> st(k, 1);
  for (int i = k - 2; i >= 0; --i) st[i] = st[i + 1] * dims[i + 1];
  std::vector<double> out(f.size());
  std::vector<int> idx(k, 0);
  for (std::size_t q = 0; q < out.size(); ++q) {
    std::size_t src = 0;
    for (int i = 0; i < k; ++i) src += st[order[i]] * idx[i];
    out[q] = f[src];
    for (int i = k - 1; i >= 0; --i) {
      if (++idx[i] < nd[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

double box_pow_partial(const std::vector<double>& f, const std::vector<int>& dims,
                       const std::vector<int>& axes) {
  int k = static_cast<int>(dims.size());
  std::vector<bool> in(k, false);
  for (int a : axes) {
    require(a >= 0 && a < k, "box axis out of range");
    in[a] = true;
  }
  std::vector<int> order, outer_dims, inner_dims;
  for (int i = 0; i < k; ++i)
    if (!in[i]) {
      order.push_back(i);
      outer_dims.push_back(dims[i]);
    }
  for (int a : axes) {
    order.push_back(a);
    inner_dims.push_back(dims[a]);
  }
  if (outer_dims.empty()) return box_pow(permute_axes(f, dims, order), inner_dims);
  auto g = permute_axes(f, dims, order);
  std::size_t outer = prod(outer_dims), inner = prod(inner_dims);
  double total = 0;
  std::vector<double> slice(inner);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy(g.begin() + o * inner, g.begin() + (o + 1) * inner, slice.begin());
    total += box_pow(slice, inner_dims);
  }
  return total / static_cast<double>(outer);
}

double box_norm(const TableFunction& f, const std::vector<int>& axes) {
  return root(box_pow_partial(f.values, f.dims(), axes), static_cast<int>(axes.size()));
}

double box_norm_3d(const std::vector<double>& f, int X, int Y, int Z) {
  require(f.size() == static_cast<std::size_t>(X) * Y * Z, "table size does not match axes");
  return root(box_pow_3d(f.data(), X, Y, Z), 3);
}

double u3_pow(const std::vector<double>& f, const Group& H) {
  int N = H.size();
  require(static_cast<int>(f.size()) == N, "function size does not match group");
  double total = ordered_sum(static_cast<std::size_t>(N), [&](std::size_t h1) {
    double part = 0;
    for (int h2 = 0; h2 < N; ++h2) {
      int h12 = H.add(static_cast<int>(h1), h2);
      double m = 0;
      for (int s = 0; s < N; ++s)
        m += f[s] * f[H.add(s, static_cast<int>(h1))] * f[H.add(s, h2)] * f[H.add(s, h12)];
      m /= N;
      part += m * m;
    }
    return part;
  });
  return total / (static_cast<double>(N) * N);
}

double u3_norm(const std::vector<double>& f, const Group& H) { return root(u3_pow(f, H), 3); }

std::vector<double> u3_table(const std::vector<double>& f, const Group& H) {
  int N = H.size();
  std::vector<double> t(static_cast<std::size_t>(N) * N * N);
  std::size_t q = 0;
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y) {
      int xy = H.add(x, y);
      for (int z = 0; z < N; ++z) t[q++] = f[H.add(xy, z)];
    }
  return t;
}

namespace {
double gcs_rec(const std::vector<std::vector<double>>& fam, const std::vector<int>& dims,
               std::size_t axis) {
  if (fam.size() == 1) return mean(fam[0]);
  std::vector<int> sub(dims.begin() + static_cast<long>(axis) + 1, dims.end());
  std::size_t rest = prod(sub);
  int d0 = dims[axis];
  std::size_t half = fam.size() / 2;
  std::vector<std::vector<double>> next(half, std::vector<double>(rest));
  double total = 0;
  for (int a = 0; a < d0; ++a)
    for (int b = 0; b < d0; ++b) {
      for (std::size_t w = 0; w < half; ++w) {
        const auto& f0 = fam[w << 1];
        const auto& f1 = fam[(w << 1) | 1];
        for (std::size_t q = 0; q < rest; ++q) next[w][q] = f0[a * rest + q] * f1[b * rest + q];
      }
      total += half == 1 && sub.empty() ? next[0][0] : gcs_rec(next, dims, axis + 1);
    }
  return total / (static_cast<double>(d0) * d0);
}
}  // namespace

double gcs_form(const std::vector<std::vector<double>>& family, const std::vector<int>& dims) {
  std::size_t k = dims.size();
  require(k >= 1, "gcs form needs at least one axis");
  require(family.size() == (std::size_t{1} << k), "gcs family must have 2^|U| members");
  for (auto& f : family) require(f.size() == prod(dims), "gcs family member has wrong size");
  return gcs_rec(family, dims, 0);
}

std::vector<double> restrict_grid(const std::vector<double>& f, const std::vector<int>& dims,
                                  const std::vector<std::vector<int>>& idx) {
  int k = static_cast<int>(dims.size());
  require(static_cast<int>(idx.size()) == k, "grid restriction needs one index list per axis");
  std::vector<std::size_t> st(k, 1);
  for (int i = k - 2; i >= 0; --i) st[i] = st[i + 1] * dims[i + 1];
  std::size_t n = 1;
  for (auto& l : idx) {
    require(!l.empty(), "empty grid axis");
    n *= l.size();
  }
  std::vector<double> out(n);
  std::vector<std::size_t> pos(k, 0);
  for (std::size_t q = 0; q < n; ++q) {
    std::size_t src = 0;
    for (int i = 0; i < k; ++i) src += st[i] * static_cast<std::size_t>(idx[i][pos[i]]);
    out[q] = f[src];
    for (int i = k - 1; i >= 0; --i) {
      if (++pos[i] < idx[i].size()) break;
      pos[i] = 0;
    }
  }
  return out;
}

// ---- Omega bookkeeping ------------------------------------------------------

void OmegaSet::validate() const {
  require(arity == 3 || arity == 4, "omega arity must be 3 or 4");
  require(lambda >= 1, "replica count must be positive");
  std::set<OmegaMap> seen;
  for (auto& m : maps) {
    for (int j = 1; j <= arity; ++j)
      require(m(j) >= 0 && m(j) < lambda, "omega value out of range (must be < lambda)");
    for (int j = arity + 1; j <= 4; ++j) require(m(j) == 0, "omega defined beyond its arity");
    require(seen.insert(m).second, "omega maps must be distinct");
  }
}

int OmegaSet::restriction_count(int j, int k) const {
  std::set<std::pair<int, int>> r;
  for (auto& m : maps) r.insert({m(j), m(k)});
  return static_cast<int>(r.size());
}

OmegaSet OmegaSet::cube(int arity, int lambda) {
  OmegaSet o{arity, lambda, {}};
  int total = 1;
  for (int i = 0; i < arity; ++i) total *= lambda;
  for (int t = 0; t < total; ++t) {
    OmegaMap m;
    int r = t;
    for (int j = arity; j >= 1; --j) {
      m.v[j - 1] = r % lambda;
      r /= lambda;
    }
    o.maps.push_back(m);
  }
  return o;
}

std::string OmegaSet::str() const {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (i) os << ",";
    for (int j = 1; j <= arity; ++j) os << maps[i](j);
  }
  os << "}";
  return os.str();
}

int pair_slot(int j, int k) {
  if (j > k) std::swap(j, k);
  static const int tab[5][5] = {{-1, -1, -1, -1, -1},
                                {-1, -1, 0, 1, 2},
                                {-1, -1, -1, 3, 4},
                                {-1, -1, -1, -1, 5},
                                {-1, -1, -1, -1, -1}};
  require(j >= 1 && k <= 4 && j != k, "pair indices must be distinct in 1..4");
  return tab[j][k];
}

std::array<int, 2> slot_pair(int s) {
  static const int tab[6][2] = {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
  return {tab[s][0], tab[s][1]};
}

FormExponents exponents_L(const OmegaSet& om) {
  om.validate();
  require(om.arity == 3, "L forms have arity 3");
  FormExponents e;
  e.omega_count = static_cast<int>(om.size());
  for (auto [j, k] : {std::pair{1, 2}, {1, 3}, {2, 3}}) {
    e.psi[pair_slot(j, k)] = om.restriction_count(j, k);
    e.psi_present[pair_slot(j, k)] = e.psi[pair_slot(j, k)];
  }
  return e;
}

FormExponents exponents_Lambda(const OmegaSet& om, const std::vector<int>& ell,
                               const std::vector<FrameSet>& choice) {
  om.validate();
  require(om.arity == 4, "Lambda forms have arity 4");
  require(ell.size() == om.size() && choice.size() == om.size(), "one frame per omega");
  FormExponents e;
  e.omega_count = static_cast<int>(om.size());
  for (std::size_t i = 0; i < om.size(); ++i) {
    require(ell[i] >= 1 && ell[i] <= 4, "frame index must be in 1..4");
    if (choice[i] == FrameSet::T) e.phi[ell[i]]++;
  }
  for (int s = 0; s < 6; ++s) {
    auto [j, k] = slot_pair(s);
    std::set<std::pair<int, int>> all, present;
    for (std::size_t i = 0; i < om.size(); ++i) {
      auto r = std::pair{om.maps[i](j), om.maps[i](k)};
      all.insert(r);
      if (ell[i] != j && ell[i] != k) present.insert(r);
    }
    e.psi[s] = static_cast<int>(all.size());
    e.psi_present[s] = static_cast<int>(present.size());
  }
  return e;
}

OmegaSplit split_coordinate1(const OmegaSet& om, const std::vector<bool>& eligible) {
  om.validate();
  OmegaSplit s;
  s.kept = {om.arity, om.lambda, {}};
  s.doubled = {om.arity, om.lambda + 1, {}};
  std::vector<OmegaMap> zero;
  for (std::size_t i = 0; i < om.size(); ++i) {
    bool el = eligible.empty() || eligible[i];
    if (om.maps[i](1) == 0 && el) {
      s.to_zero.push_back(static_cast<int>(i));
      zero.push_back(om.maps[i]);
    } else {
      s.kept.maps.push_back(om.maps[i]);
    }
  }
  s.doubled.maps = s.kept.maps;
  for (auto m : zero) {
    s.doubled.maps.push_back(m);
    m.v[0] = om.lambda;
    s.doubled.maps.push_back(m);
  }
  return s;
}

namespace {
bool twice_equals_sum(const FormExponents& l, const FormExponents& a, const FormExponents& b,
                      bool use_present) {
  if (2 * l.omega_count != a.omega_count + b.omega_count) return false;
  for (int i = 1; i <= 4; ++i)
    if (2 * l.phi[i] != a.phi[i] + b.phi[i]) return false;
  for (int s = 0; s < 6; ++s) {
    const auto& L = use_present ? l.psi_present : l.psi;
    const auto& A = use_present ? a.psi_present : a.psi;
    const auto& B = use_present ? b.psi_present : b.psi;
    if (2 * L[s] != A[s] + B[s]) return false;
  }
  return true;
}

bool restrictions_contained(const OmegaSet& om, const OmegaSplit& sp) {
  for (int j = 2; j <= om.arity; ++j)
    for (int k = j + 1; k <= om.arity; ++k) {
      std::set<std::pair<int, int>> have;
      for (auto& m : sp.kept.maps) have.insert({m(j), m(k)});
      for (int i : sp.to_zero)
        if (!have.count({om.maps[i](j), om.maps[i](k)})) return false;
    }
  return true;
}
}  // namespace

ConservationReport conservation_L(const OmegaSet& om) {
  auto sp = split_coordinate1(om);
  ConservationReport r;
  r.lhs = exponents_L(om);
  r.kept = exponents_L(sp.kept);
  r.doubled = exponents_L(sp.doubled);
  r.exact = twice_equals_sum(r.lhs, r.kept, r.doubled, false);
  r.containment = restrictions_contained(om, sp);
  return r;
}

ConservationReport conservation_Lambda(const OmegaSet& om, const std::vector<int>& ell,
                                       const std::vector<FrameSet>& choice) {
  std::vector<bool> eligible(om.size());
  for (std::size_t i = 0; i < om.size(); ++i)
    eligible[i] = !(ell[i] == 1 && choice[i] == FrameSet::TTilde);
  auto sp = split_coordinate1(om, eligible);
  std::vector<int> ek, ed;
  std::vector<FrameSet> ck, cd;
  std::vector<bool> zero(om.size(), false);
  for (int i : sp.to_zero) zero[i] = true;
  for (std::size_t i = 0; i < om.size(); ++i)
    if (!zero[i]) {
      ek.push_back(ell[i]);
      ck.push_back(choice[i]);
    }
  ed = ek;
  cd = ck;
  for (int i : sp.to_zero) {
    ed.push_back(ell[i]);
    ed.push_back(ell[i]);
    cd.push_back(choice[i]);
    cd.push_back(choice[i]);
  }
  ConservationReport r;
  r.lhs = exponents_Lambda(om, ell, choice);
  r.kept = exponents_Lambda(sp.kept, ek, ck);
  r.doubled = exponents_Lambda(sp.doubled, ed, cd);
  r.exact = twice_equals_sum(r.lhs, r.kept, r.doubled, false);
  r.containment = restrictions_contained(om, sp);
  return r;
}

// ---- replica forms ------------------------------------------------------------

namespace {

struct VarList {
  std::vector<std::pair<int, int>> vars;  // (axis 0-based, replica)
};

// replica variables (axis, r) for axes < upto that some factor reads
VarList used_vars(const FormContext& ctx, const std::vector<FormFactor>& factors, int upto) {
  std::set<std::pair<int, int>> s;
  for (auto& f : factors)
    for (int j = 0; j < upto; ++j)
      if (!(ctx.arity == 4 && f.ell == j + 1)) s.insert({j, f.omega.v[j]});
  return {std::vector<std::pair<int, int>>(s.begin(), s.end())};
}

inline double eval_factor(const Cube& cube, const FormFactor& f,
                          const std::array<std::array<int, 8>, 4>& xv) {
  std::array<int, 4> x{0, 0, 0, 0};
  for (int j = 0; j < 4; ++j) x[j] = xv[j][f.omega.v[j]];
  return (*f.table)[cube.lambda(f.ell, x)];
}

void check_context(const FormContext& ctx, const std::vector<FormFactor>& factors) {
  require(ctx.cube != nullptr, "form context has no cube");
  require(ctx.arity == 3 || ctx.arity == 4, "form arity must be 3 or 4");
  require(ctx.lambda >= 1 && ctx.lambda <= 8, "replica count must be in 1..8");
  for (int j = 0; j < ctx.arity; ++j) require(!ctx.S[j].empty(), "replica variable ranges over an empty set");
  for (auto& f : factors) {
    require(f.table && f.table->size() == ctx.cube->size(), "form factor table has wrong size");
    require(f.ell >= 1 && f.ell <= 4, "form factor frame must be in 1..4");
    if (ctx.arity == 3) require(f.ell == 4, "arity-3 forms read every factor in frame 4");
    for (int j = 0; j < ctx.arity; ++j)
      require(f.omega.v[j] >= 0 && f.omega.v[j] < ctx.lambda, "omega value >= lambda");
  }
}

}  // namespace

double replica_form(const FormContext& ctx, const std::vector<FormFactor>& factors) {
  check_context(ctx, factors);
  const Cube& cube = *ctx.cube;
  int k = ctx.arity, last = k - 1, lam = ctx.lambda;
  std::vector<int> head;
  std::vector<std::vector<int>> byr(lam);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (k == 4 && factors[i].ell == 4)
      head.push_back(static_cast<int>(i));
    else
      byr[factors[i].omega.v[last]].push_back(static_cast<int>(i));
  }
  auto vl = used_vars(ctx, factors, last);
  const auto& vars = vl.vars;
  const auto& SL = ctx.S[last];
  double inv_last = 1.0 / static_cast<double>(SL.size());

  auto inner = [&](std::array<std::array<int, 8>, 4>& xv) {
    double val = 1;
    for (int i : head) {
      val *= eval_factor(cube, factors[i], xv);
      if (val == 0) return 0.0;
    }
    for (int r = 0; r < lam; ++r) {
      if (byr[r].empty()) continue;
      double s = 0;
      for (int xl : SL) {
        xv[last][r] = xl;
        double p = 1;
        for (int i : byr[r]) {
          p *= eval_factor(cube, factors[i], xv);
          if (p == 0) break;
        }
        s += p;
      }
      val *= s * inv_last;
      if (val == 0) return 0.0;
    }
    return val;
  };

  if (vars.empty()) {
    std::array<std::array<int, 8>, 4> xv{};
    return inner(xv);
  }
  // parallel over the first variable's values, odometer over the rest
  const auto& first = ctx.S[vars[0].first];
  std::size_t rest_count = 1;
  for (std::size_t v = 1; v < vars.size(); ++v) rest_count *= ctx.S[vars[v].first].size();
  double total = ordered_sum(first.size(), [&](std::size_t i0) {
    std::array<std::array<int, 8>, 4> xv{};
    xv[vars[0].first][vars[0].second] = first[i0];
    std::vector<std::size_t> pos(vars.size(), 0);
    for (std::size_t v = 1; v < vars.size(); ++v) xv[vars[v].first][vars[v].second] = ctx.S[vars[v].first][0];
    double part = 0;
    for (std::size_t q = 0; q < rest_count; ++q) {
      part += inner(xv);
      for (std::size_t v = vars.size() - 1; v >= 1; --v) {
        const auto& dom = ctx.S[vars[v].first];
        if (++pos[v] < dom.size()) {
          xv[vars[v].first][vars[v].second] = dom[pos[v]];
          break;
        }
        pos[v] = 0;
        xv[vars[v].first][vars[v].second] = dom[0];
      }
    }
    return part;
  });
  return total / (static_cast<double>(first.size()) * static_cast<double>(rest_count));
}

double linear_form_L(const FormContext& ctx, const OmegaSet& om,
                     const std::vector<const std::vector<double>*>& f) {
  om.validate();
  require(om.arity == 3 && ctx.arity == 3, "L forms have arity 3");
  require(om.lambda <= ctx.lambda, "omega values exceed the context's replicas");
  require(f.size() == om.size(), "one function per omega");
  std::vector<FormFactor> fac;
  for (std::size_t i = 0; i < om.size(); ++i) fac.push_back({om.maps[i], 4, f[i]});
  FormContext c = ctx;
  c.lambda = om.lambda;
  return replica_form(c, fac);
}

double expected_L(const OmegaSet& om, double delta4, double deltaV4,
                  const std::array<double, 6>& djk) {
  auto e = exponents_L(om);
  double v = std::pow(delta4 * deltaV4, e.omega_count);
  for (auto [j, k] : {std::pair{1, 2}, {1, 3}, {2, 3}}) v *= std::pow(djk[pair_slot(j, k)], e.psi[pair_slot(j, k)]);
  return v;
}

double linear_form_Lambda(const FormContext& ctx, const OmegaSet& om,
                          const std::vector<int>& ell,
                          const std::vector<const std::vector<double>*>& F) {
  om.validate();
  require(om.arity == 4 && ctx.arity == 4, "Lambda forms have arity 4");
  require(om.lambda <= ctx.lambda, "omega values exceed the context's replicas");
  require(F.size() == om.size() && ell.size() == om.size(), "one set per omega");
  std::vector<FormFactor> fac;
  for (std::size_t i = 0; i < om.size(); ++i) fac.push_back({om.maps[i], ell[i], F[i]});
  FormContext c = ctx;
  c.lambda = om.lambda;
  return replica_form(c, fac);
}

double expected_Lambda(const FormExponents& e, const std::array<double, 5>& dl,
                       const std::array<double, 6>& djk, bool paper_psi) {
  double v = 1;
  for (int l = 1; l <= 4; ++l) v *= std::pow(dl[l], e.phi[l]);
  for (int s = 0; s < 6; ++s) v *= std::pow(djk[s], paper_psi ? e.psi[s] : e.psi_present[s]);
  return v;
}

FormContext form_context(const TSystem& sys, int arity, int lambda) {
  FormContext c;
  c.cube = sys.cube.get();
  c.arity = arity;
  c.lambda = lambda;
  for (int j = 1; j <= 4; ++j) {
    c.S[j - 1].clear();
    sys.S[j].for_each([&](std::size_t a) { c.S[j - 1].push_back(static_cast<int>(a)); });
  }
  return c;
}

UniformityReport is_uniform(const Bits& V, int lambda, double theta, const TSystem& sys,
                            int samples, std::uint64_t seed) {
  require(lambda >= 1 && lambda <= 6, "uniformity checks support lambda in 1..6");
  Bits T4 = sys.t_ell(4);
  require(V.subset_of(T4), "V must lie inside T_4");
  auto dens = densities(sys);
  double dV4 = T4.any() ? cond_prob(V, T4) : 0.0;
  auto ctx = form_context(sys, 3, lambda);
  std::vector<double> vf = V.as_function();
  auto cube = OmegaSet::cube(3, lambda);
  UniformityReport rep;
  auto check = [&](const OmegaSet& om) {
    std::vector<const std::vector<double>*> f(om.size(), &vf);
    double L = linear_form_L(ctx, om, f);
    double e = expected_L(om, dens.d[4], dV4, dens.djk);
    double ratio = e > 0 ? std::abs(L - e) / e : (L == 0 ? 0.0 : INFINITY);
    rep.checked++;
    if (ratio > theta) rep.failures++;
    if (ratio > rep.worst_ratio || rep.checked == 1) {
      rep.worst_ratio = ratio;
      rep.worst = om;
    }
  };
  std::size_t m = cube.size();
  if (m <= 8) {
    rep.exhaustive = true;
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
      OmegaSet om{3, lambda, {}};
      for (std::size_t i = 0; i < m; ++i)
        if (mask >> i & 1) om.maps.push_back(cube.maps[i]);
      check(om);
    }
  } else {
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
      OmegaSet om{3, lambda, {}};
      for (std::size_t i = 0; i < m; ++i)
        if (rng() & 1) om.maps.push_back(cube.maps[i]);
      if (om.maps.empty()) om.maps.push_back(cube.maps[rng() % m]);
      check(om);
    }
  }
  return rep;
}

namespace {

// Shared Z evaluator: factors with zero[i] set are averaged over x_1^0.
ZStatistics z_generic(const FormContext& ctx, const std::vector<FormFactor>& factors,
                      const std::vector<bool>& zero) {
  check_context(ctx, factors);
  const Cube& cube = *ctx.cube;
  std::set<std::pair<int, int>> vs;
  for (auto& f : factors)
    for (int j = 0; j < ctx.arity; ++j)
      if (!(ctx.arity == 4 && f.ell == j + 1)) vs.insert({j, f.omega.v[j]});
  vs.erase({0, 0});
  std::vector<std::pair<int, int>> vars(vs.begin(), vs.end());
  std::size_t total = 1;
  for (auto& v : vars) total *= ctx.S[v.first].size();
  std::vector<int> zi, ki;
  for (std::size_t i = 0; i < factors.size(); ++i) (zero[i] ? zi : ki).push_back(static_cast<int>(i));
  double EY = 0, EZY = 0, EZ2Y = 0;
  std::array<std::array<int, 8>, 4> xv{};
  std::vector<std::size_t> pos(vars.size(), 0);
  for (auto& v : vars) xv[v.first][v.second] = ctx.S[v.first][0];
  for (std::size_t q = 0; q < total; ++q) {
    double y = 1;
    for (int i : ki) {
      y *= eval_factor(cube, factors[i], xv);
      if (y == 0) break;
    }
    if (y != 0) {
      double z = 0;
      for (int x10 : ctx.S[0]) {
        xv[0][0] = x10;
        double p = 1;
        for (int i : zi) {
          p *= eval_factor(cube, factors[i], xv);
          if (p == 0) break;
        }
        z += p;
      }
      z /= static_cast<double>(ctx.S[0].size());
      EY += y;
      EZY += z * y;
      EZ2Y += z * z * y;
    }
    for (std::size_t v = vars.size(); v-- > 0;) {
      const auto& dom = ctx.S[vars[v].first];
      if (++pos[v] < dom.size()) {
        xv[vars[v].first][vars[v].second] = dom[pos[v]];
        break;
      }
      pos[v] = 0;
      xv[vars[v].first][vars[v].second] = dom[0];
    }
  }
  ZStatistics r;
  double n = static_cast<double>(total);
  r.p_event = EY / n;
  require(r.p_event > 0, "conditioning event of the Z statistic is empty");
  r.mean = EZY / EY;
  r.variance = EZ2Y / EY - r.mean * r.mean;
  return r;
}

}  // namespace

ZStatistics z_statistics(const FormContext& ctx, const OmegaSet& om, const Bits& V,
                         const TSystem& sys) {
  om.validate();
  require(om.arity == 3 && ctx.arity == 3, "Z statistics of L forms have arity 3");
  std::vector<double> vf = V.as_function();
  std::vector<FormFactor> fac;
  std::vector<bool> zero;
  for (auto& m : om.maps) {
    fac.push_back({m, 4, &vf});
    zero.push_back(m(1) == 0);
  }
  require(std::count(zero.begin(), zero.end(), true) > 0, "no omega sends 1 to 0");
  FormContext c = ctx;
  c.lambda = om.lambda;
  auto r = z_generic(c, fac, zero);
  auto sp = split_coordinate1(om);
  auto dens = densities(sys);
  Bits T4 = sys.t_ell(4);
  double dV4 = cond_prob(V, T4);
  double full = expected_L(om, dens.d[4], dV4, dens.djk);
  double kept = sp.kept.maps.empty() ? 1.0 : expected_L(sp.kept, dens.d[4], dV4, dens.djk);
  r.predicted_mean = kept > 0 ? full / kept : 0.0;
  return r;
}

ZStatistics z_statistics_Lambda(const FormContext& ctx, const OmegaSet& om,
                                const std::vector<int>& ell,
                                const std::vector<const std::vector<double>*>& F,
                                const std::vector<bool>& eligible) {
  om.validate();
  require(om.arity == 4 && ctx.arity == 4, "Z statistics of Lambda forms have arity 4");
  std::vector<FormFactor> fac;
  std::vector<bool> zero;
  for (std::size_t i = 0; i < om.size(); ++i) {
    fac.push_back({om.maps[i], ell[i], F[i]});
    zero.push_back(om.maps[i](1) == 0 && eligible[i] && ell[i] != 1);
  }
  FormContext c = ctx;
  c.lambda = om.lambda;
  return z_generic(c, fac, zero);
}

LocalBoxCheck local_box_check(const FormContext& ctx, const OmegaSet& om,
                              const std::vector<bool>& use_f, int omega0,
                              const std::vector<double>& f, const Bits& V, int level,
                              double slack) {
  require(level >= 1 && level <= 3, "local box level must be 1, 2 or 3");
  require(use_f.size() == om.size(), "one selector per omega");
  require(omega0 >= 0 && omega0 < static_cast<int>(om.size()) && use_f[omega0],
          "the distinguished omega must carry f");
  const auto& m0 = om.maps[omega0];
  for (std::size_t i = 0; i < om.size(); ++i) {
    if (static_cast<int>(i) == omega0 || !use_f[i]) continue;
    if (level == 1) require(om.maps[i](1) != m0(1), "another f shares the distinguished x_1 replica");
    if (level == 2)
      require(om.maps[i](1) != m0(1) || om.maps[i](2) != m0(2),
              "another f shares the distinguished (x_1, x_2) replicas");
  }
  for (std::size_t q = 0; q < f.size(); ++q)
    require(std::abs(f[q]) <= (V.test(q) ? 1.0 : 0.0) + 1e-15, "f must satisfy |f| <= V");
  std::vector<double> vf = V.as_function();
  std::vector<const std::vector<double>*> fs, vs;
  for (std::size_t i = 0; i < om.size(); ++i) {
    fs.push_back(use_f[i] ? &f : &vf);
    vs.push_back(&vf);
  }
  LocalBoxCheck r;
  r.lhs = std::abs(linear_form_L(ctx, om, fs));
  r.form_V = linear_form_L(ctx, om, vs);
  int N = ctx.cube->N();
  std::vector<int> dims{N, N, N};
  std::vector<std::vector<int>> grid{ctx.S[0], ctx.S[1], ctx.S[2]};
  auto fg = restrict_grid(f, dims, grid);
  auto vg = restrict_grid(vf, dims, grid);
  std::vector<int> gd{static_cast<int>(grid[0].size()), static_cast<int>(grid[1].size()),
                      static_cast<int>(grid[2].size())};
  std::vector<int> axes;
  for (int a = 0; a < level; ++a) axes.push_back(a);
  double pf = box_pow_partial(fg, gd, axes), pv = box_pow_partial(vg, gd, axes);
  r.ratio = pv > 0 ? pf / pv : 0.0;
  double factor = std::ldexp(1.0, level);
  r.bound = factor * r.form_V * std::pow(slack + r.ratio, 1.0 / std::ldexp(1.0, level));
  r.holds = r.lhs <= r.bound + 1e-12;
  return r;
}

LocalBoxCheck lambda_box_check(const FormContext& ctx, const OmegaSet& om,
                               const std::vector<int>& ell, int omega0,
                               const std::vector<double>& f0, const TSystem& sys, double slack) {
  require(omega0 >= 0 && omega0 < static_cast<int>(om.size()), "distinguished omega out of range");
  std::array<std::vector<double>, 5> T;
  for (int l = 1; l <= 4; ++l) T[l] = sys.t_ell(l).as_function();
  const auto& T0 = T[ell[omega0]];
  for (std::size_t q = 0; q < f0.size(); ++q)
    require(std::abs(f0[q]) <= T0[q] + 1e-15, "f must satisfy |f| <= its frame set");
  std::vector<const std::vector<double>*> Fs, fs;
  for (std::size_t i = 0; i < om.size(); ++i) {
    Fs.push_back(&T[ell[i]]);
    fs.push_back(static_cast<int>(i) == omega0 ? &f0 : &T[ell[i]]);
  }
  LocalBoxCheck r;
  r.lhs = std::abs(linear_form_Lambda(ctx, om, ell, fs));
  r.form_V = std::abs(linear_form_Lambda(ctx, om, ell, Fs));
  const Cube& cube = *ctx.cube;
  int N = cube.N();
  std::vector<int> dims{N, N, N};
  double pf = box_pow(cube.to_frame_function(f0, ell[omega0]), dims);
  double pt = box_pow(cube.to_frame_function(T0, ell[omega0]), dims);
  r.ratio = pt > 0 ? pf / pt : 0.0;
  r.bound = 2.0 * r.form_V * std::pow(slack + r.ratio, 1.0 / 8.0);
  r.holds = r.lhs <= r.bound + 1e-12;
  return r;
}

// ---- inequality suite helpers ---------------------------------------------------

std::vector<int> face_dims(const std::vector<int>& dims, unsigned mask) {
  std::vector<int> d;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (mask >> i & 1) d.push_back(dims[i]);
  return d;
}

std::vector<double> lift_face(const std::vector<double>& g, unsigned mask,
                              const std::vector<int>& dims) {
  int k = static_cast<int>(dims.size());
  auto fd = face_dims(dims, mask);
  require(g.size() == prod(fd), "face table has wrong size");
  std::vector<double> out(prod(dims));
  std::vector<int> idx(k, 0);
  for (std::size_t q = 0; q < out.size(); ++q) {
    std::size_t src = 0;
    for (int i = 0; i < k; ++i)
      if (mask >> i & 1) src = src * static_cast<std::size_t>(dims[i]) + idx[i];
    out[q] = g[src];
    for (int i = k - 1; i >= 0; --i) {
      if (++idx[i] < dims[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

namespace {
double balanced_face_norm(const std::vector<double>& g, const std::vector<int>& fd) {
  double m = mean(g);
  std::vector<double> b(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) b[q] = g[q] - m;
  return box_norm(b, fd);
}
}  // namespace

FamilyBound set_family_bound(const FaceFamily& S, const std::vector<int>& dims) {
  return mixed_family_bound(S, {}, dims);
}

FamilyBound mixed_family_bound(const FaceFamily& S, const FaceFamily& f,
                               const std::vector<int>& dims) {
  std::size_t n = prod(dims);
  std::vector<double> all(n, 1.0), fonly(n, 1.0);
  double pe = 1, mx = 0;
  for (auto& [mask, g] : S) {
    require(mask != 0, "set families exclude the empty face");
    auto L = lift_face(g, mask, dims);
    for (std::size_t q = 0; q < n; ++q) all[q] *= L[q];
    pe *= mean(g);
    mx = std::max(mx, balanced_face_norm(g, face_dims(dims, mask)));
  }
  for (auto& [mask, g] : f) {
    auto L = lift_face(g, mask, dims);
    for (std::size_t q = 0; q < n; ++q) {
      all[q] *= L[q];
      fonly[q] *= L[q];
    }
  }
  FamilyBound r;
  r.lhs = std::abs(mean(all) - pe * (f.empty() ? 1.0 : mean(fonly)));
  r.rhs = std::ldexp(1.0, static_cast<int>(dims.size())) * mx;
  r.tau = mx;
  return r;
}

FamilyBound conditional_family_bound(const std::vector<double>& SU, const std::vector<int>& dims,
                                     const std::vector<unsigned>& family) {
  int k = static_cast<int>(dims.size());
  std::size_t n = prod(dims);
  require(SU.size() == n, "S_U table has wrong size");
  double delta = mean(SU);
  std::vector<std::size_t> st(k, 1);
  for (int i = k - 2; i >= 0; --i) st[i] = st[i + 1] * dims[i + 1];
  auto mix = [&](std::size_t x0, std::size_t x1, unsigned V) {
    std::size_t q = 0;
    for (int i = 0; i < k; ++i) {
      std::size_t c = ((V >> i & 1) ? x1 : x0) / st[i] % dims[i];
      q += c * st[i];
    }
    return q;
  };
  FamilyBound r;
  double acc = 0, target = std::pow(delta, static_cast<double>(family.size()));
  for (std::size_t x0 = 0; x0 < n; ++x0) {
    double inner = 0;
    for (std::size_t x1 = 0; x1 < n; ++x1) {
      double p = 1;
      for (unsigned V : family) {
        p *= SU[mix(x0, x1, V)];
        if (p == 0) break;
      }
      inner += p;
    }
    acc += std::abs(target - inner / static_cast<double>(n));
  }
  r.lhs = acc / static_cast<double>(n);
  // tau: for each V, average over the off-V coordinates of the V-box norm
  double tau = 0;
  for (unsigned V : family) {
    require(V != 0 && V < (1u << k), "family members must be nonempty faces");
    auto fd = face_dims(dims, V);
    std::size_t fn = prod(fd);
    std::vector<double> g(fn);
    double sum = 0;
    std::size_t count = 0;
    // iterate over x0 whose V coordinates are zero
    for (std::size_t x0 = 0; x0 < n; ++x0) {
      bool zero_on_V = true;
      for (int i = 0; i < k; ++i)
        if ((V >> i & 1) && (x0 / st[i] % dims[i]) != 0) zero_on_V = false;
      if (!zero_on_V) continue;
      std::size_t t = 0;
      for (std::size_t x1 = 0; x1 < n; ++x1) {
        bool base = true;
        for (int i = 0; i < k; ++i)
          if (!(V >> i & 1) && (x1 / st[i] % dims[i]) != 0) base = false;
        if (!base) continue;
        g[t++] = SU[mix(x0, x1, V)] - delta;
      }
      sum += box_norm(g, fd);
      ++count;
    }
    tau = std::max(tau, sum / static_cast<double>(count));
  }
  r.tau = tau;
  r.rhs = static_cast<double>(family.size()) * tau;
  return r;
}

}  // namespace bc
