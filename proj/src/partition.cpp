#include "boxcorner/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"

namespace bc {

Partition Partition::trivial(const Bits& ground) {
  Partition P;
  P.label.assign(ground.size(), -1);
  ground.for_each([&](std::size_t i) { P.label[i] = 0; });
  return P;
}

Partition Partition::points(const Bits& ground) {
  Partition P;
  P.label.assign(ground.size(), -1);
  int k = 0;
  ground.for_each([&](std::size_t i) { P.label[i] = k++; });
  return P;
}

Partition Partition::from_labels(std::vector<int> labels) {
  Partition P{std::move(labels)};
  P.normalize();
  return P;
}

void Partition::normalize() {
  std::unordered_map<int, int> re;
  for (auto& l : label) {
    if (l < 0) {
      l = -1;
      continue;
    }
    auto it = re.find(l);
    if (it == re.end()) it = re.emplace(l, static_cast<int>(re.size())).first;
    l = it->second;
  }
}

int Partition::atom_count() const {
  int m = -1;
  for (int l : label) m = std::max(m, l);
  return m + 1;
}

Bits Partition::ground() const {
  Bits g(label.size());
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i] >= 0) g.set(i);
  return g;
}

Bits Partition::atom(int a) const {
  Bits g(label.size());
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i] == a) g.set(i);
  return g;
}

std::vector<std::size_t> Partition::atom_sizes() const {
  std::vector<std::size_t> s(static_cast<std::size_t>(atom_count()), 0);
  for (int l : label)
    if (l >= 0) s[l]++;
  return s;
}

Partition meet(const Partition& P, const Partition& Q) {
  require(P.universe() == Q.universe(), "partitions of different universes");
  Partition R;
  R.label.assign(P.universe(), -1);
  std::map<std::pair<int, int>, int> ids;
  for (std::size_t i = 0; i < P.universe(); ++i) {
    if (P.label[i] < 0 || Q.label[i] < 0) continue;
    auto key = std::pair{P.label[i], Q.label[i]};
    auto it = ids.find(key);
    if (it == ids.end()) it = ids.emplace(key, static_cast<int>(ids.size())).first;
    R.label[i] = it->second;
  }
  return R;
}

Partition restrict_to(const Partition& P, const Bits& S) {
  require(S.size() == P.universe(), "restriction set has wrong universe");
  Partition R = P;
  for (std::size_t i = 0; i < R.label.size(); ++i)
    if (!S.test(i)) R.label[i] = -1;
  R.normalize();
  return R;
}

bool subordinate(const Partition& Pp, const Partition& P) {
  require(Pp.universe() == P.universe(), "partitions of different universes");
  std::vector<int> home(static_cast<std::size_t>(Pp.atom_count()), -2);
  for (std::size_t i = 0; i < Pp.universe(); ++i) {
    int a = Pp.label[i];
    if (a < 0) continue;
    int b = P.label[i];
    if (b < 0) return false;
    if (home[a] == -2)
      home[a] = b;
    else if (home[a] != b)
      return false;
  }
  return true;
}

int multi(const Partition& Pp, const Partition& P) {
  require(Pp.universe() == P.universe(), "partitions of different universes");
  std::vector<std::vector<int>> inside(static_cast<std::size_t>(std::max(P.atom_count(), 0)));
  for (std::size_t i = 0; i < Pp.universe(); ++i)
    if (Pp.label[i] >= 0 && P.label[i] >= 0) inside[P.label[i]].push_back(Pp.label[i]);
  int best = 0;
  for (auto& v : inside) {
    std::sort(v.begin(), v.end());
    best = std::max(best, static_cast<int>(std::unique(v.begin(), v.end()) - v.begin()));
  }
  return best;
}

std::vector<double> cond_expectation(const std::vector<double>& Z, const Partition& P) {
  require(Z.size() == P.universe(), "function and partition have different universes");
  std::size_t m = static_cast<std::size_t>(P.atom_count());
  std::vector<double> sum(m, 0.0);
  std::vector<std::size_t> cnt(m, 0);
  for (std::size_t i = 0; i < Z.size(); ++i)
    if (P.label[i] >= 0) {
      sum[P.label[i]] += Z[i];
      cnt[P.label[i]]++;
    }
  std::vector<double> out(Z.size(), 0.0);
  for (std::size_t i = 0; i < Z.size(); ++i)
    if (P.label[i] >= 0) out[i] = sum[P.label[i]] / static_cast<double>(cnt[P.label[i]]);
  return out;
}

double energy(const std::vector<double>& Z, const Partition& P) {
  auto e = cond_expectation(Z, P);
  double s = 0;
  for (double x : e) s += x * x;
  return s / static_cast<double>(Z.size());
}

MdsReport mds_check(const std::vector<double>& Z, const std::vector<Partition>& chain) {
  MdsReport r;
  r.refining = true;
  for (std::size_t m = 1; m < chain.size(); ++m)
    if (!subordinate(chain[m], chain[m - 1])) r.refining = false;
  require(r.refining, "mds check needs a refining chain");
  std::vector<std::vector<double>> E;
  for (auto& P : chain) E.push_back(cond_expectation(Z, P));
  std::vector<std::vector<double>> d;
  d.push_back(E[0]);
  for (std::size_t m = 1; m < E.size(); ++m) {
    std::vector<double> x(Z.size());
    for (std::size_t i = 0; i < Z.size(); ++i) x[i] = E[m][i] - E[m - 1][i];
    d.push_back(x);
  }
  double n = static_cast<double>(Z.size()), tele = 0;
  for (std::size_t a = 0; a < d.size(); ++a) {
    double s2 = 0;
    for (double x : d[a]) s2 += x * x;
    tele += s2 / n;
    for (std::size_t b = a + 1; b < d.size(); ++b) {
      double s = 0;
      for (std::size_t i = 0; i < Z.size(); ++i) s += d[a][i] * d[b][i];
      r.max_cross = std::max(r.max_cross, std::abs(s / n));
    }
  }
  r.telescope_err = std::abs(energy(Z, chain.back()) - tele);
  return r;
}

double energy_increment(double alpha, double beta, double nu) {
  require(beta > 0 && beta < 1, "beta must lie strictly between 0 and 1");
  return alpha * alpha + nu * nu * beta / (1.0 - beta);
}

namespace {
RationalValue reduce(__int128 n, __int128 d) {
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 a = n < 0 ? -n : n, b = d;
  while (b) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    n /= a;
    d /= a;
  }
  ensure(n <= INT64_MAX && n >= INT64_MIN && d <= INT64_MAX, "rational overflow");
  return {static_cast<std::int64_t>(n), static_cast<std::int64_t>(d)};
}
}  // namespace

RationalValue energy_increment_exact(RationalValue a, RationalValue b, RationalValue nu) {
  require(a.den > 0 && b.den > 0 && nu.den > 0, "denominators must be positive");
  require(b.num > 0 && b.num < b.den, "beta must lie strictly between 0 and 1");
  // a^2 + nu^2 b / (1 - b)
  __int128 n1 = static_cast<__int128>(a.num) * a.num, d1 = static_cast<__int128>(a.den) * a.den;
  __int128 n2 = static_cast<__int128>(nu.num) * nu.num * b.num;
  __int128 d2 = static_cast<__int128>(nu.den) * nu.den * (b.den - b.num);
  auto x = reduce(n1, d1), y = reduce(n2, d2);
  return reduce(static_cast<__int128>(x.num) * y.den + static_cast<__int128>(y.num) * x.den,
                static_cast<__int128>(x.den) * y.den);
}

Partition refine_for_energy(const std::vector<double>& Z, const Partition& P,
                            const std::vector<Partition>& improvements, double min_gain) {
  Partition R = P;
  for (auto& I : improvements) {
    // an improvement may cover part of the ground only; keep the rest whole
    Partition full = I;
    for (std::size_t i = 0; i < full.label.size(); ++i)
      if (full.label[i] < 0 && P.label[i] >= 0) full.label[i] = 1 << 29;
    full.normalize();
    R = meet(R, full);
  }
  double e0 = energy(Z, P), e1 = energy(Z, R);
  ensure(e1 >= e0 + min_gain - 1e-12, "common refinement did not gain the promised energy");
  return R;
}

bool is_good(const Partition& Pp, const std::vector<double>& S, double Delta, const Partition& P) {
  require(subordinate(Pp, P) && Pp.ground() == P.ground(), "is_good needs a refinement");
  return energy(S, Pp) >= energy(S, P) + Delta - 1e-12;
}

// ---- monitors ---------------------------------------------------------------------

namespace {
std::mutex g_mu;
StoppingMonitor::Ledger g_ledger;
}  // namespace

int simple_cap(double u) {
  require(u > 0 && u < 1, "u must lie in (0,1)");
  return static_cast<int>(std::ceil(1.0 / u - 1e-12));
}

int weighted_cap(double u, double tau, double C) {
  require(u > 0 && u < 1 && tau > 0 && tau < 1 && C >= 1, "weighted cap needs 0<u,tau<1, C>=1");
  double c = std::pow(u, -2.0) * std::pow(tau, -C);
  return c > 2e9 ? 2000000000 : static_cast<int>(std::ceil(c - 1e-9));
}

StoppingMonitor::StoppingMonitor(MonitorKind kind, double u, double tau, double C, std::string name)
    : kind_(kind), name_(std::move(name)) {
  if (kind == MonitorKind::Weighted) {
    cap_ = weighted_cap(u, tau, C);
    threshold_ = u * u * std::pow(tau, C);
  } else {
    cap_ = simple_cap(u);
    threshold_ = u;
  }
  std::lock_guard<std::mutex> lk(g_mu);
  g_ledger.monitors++;
}

bool StoppingMonitor::record(double jump) {
  if (jump < threshold_ * (1 - 1e-12)) return false;
  ++count_;
  std::lock_guard<std::mutex> lk(g_mu);
  g_ledger.max_fill = std::max(g_ledger.max_fill, static_cast<double>(count_) / cap_);
  if (count_ > cap_) {
    g_ledger.violations++;
    std::ostringstream os;
    os << "stopping monitor " << name_ << " exceeded its cap: " << count_ << " > " << cap_
       << " (threshold " << threshold_ << ")";
    throw InvariantViolation(os.str());
  }
  return true;
}

StoppingMonitor::Ledger StoppingMonitor::ledger() {
  std::lock_guard<std::mutex> lk(g_mu);
  return g_ledger;
}

// ---- pigeonhole ---------------------------------------------------------------------

PigeonholeResult pigeonhole_select(const Bits& A, const Bits& T, const Bits& X, const Partition& P,
                                   const std::vector<int>& excluded, double v, double delta) {
  require(A.subset_of(T) && T.subset_of(X), "pigeonhole needs A inside T inside X");
  require(P.ground() == X, "partition must cover exactly X");
  require(v > 0 && v < 1 && delta >= 0, "pigeonhole needs 0 < v < 1 and delta >= 0");
  require(T.any(), "T must be nonempty");
  require(cond_prob(A, T) >= delta + v - 1e-12, "pigeonhole needs P(A:T) >= delta + v");
  int m = P.atom_count();
  std::vector<bool> is_ex(static_cast<std::size_t>(m), false);
  for (int e : excluded) {
    require(e >= 0 && e < m, "excluded atom out of range");
    is_ex[e] = true;
  }
  std::vector<double> sz(m, 0), tc(m, 0), ac(m, 0);
  for (std::size_t i = 0; i < P.universe(); ++i) {
    int a = P.label[i];
    if (a < 0) continue;
    sz[a] += 1;
    if (T.test(i)) tc[a] += 1;
    if (A.test(i)) ac[a] += 1;
  }
  // excluded mass is measured inside T, which is what the counting needs
  double exT = 0;
  for (int a = 0; a < m; ++a)
    if (is_ex[a]) exT += tc[a];
  require(exT / static_cast<double>(T.count()) <= v / 4 + 1e-12,
          "excluded atoms carry more than v/4 of T");
  double pTX = cond_prob(T, X);
  PigeonholeResult best;
  for (int a = 0; a < m; ++a) {
    if (is_ex[a] || tc[a] == 0) continue;
    double pT = tc[a] / sz[a], pA = ac[a] / tc[a];
    if (pT < (v / 4) * pTX - 1e-12 || pA < delta + v / 2 - 1e-12) continue;
    if (best.atom < 0 || pA > best.p_A) best = {a, pT, pA};
  }
  ensure(best.atom >= 0, "no atom satisfies the pigeonhole bounds");
  return best;
}

// ---- affine partitions --------------------------------------------------------------

int coset_code(const Group& H, const AffineSubspace& V, int h) {
  return H.encode(V.reduce(H.digits(h)));
}

AffinePartition affine_partition(const Cube& cube, const AffineSubspace& V) {
  const Group& H = *cube.group();
  require(H.is_field(), "affine partitions need H = F_p^n");
  require(V.p() == H.p() && V.n() == H.n(), "V must live in H");
  for (int c : V.offset()) require(c == 0, "V must be a linear subspace");
  int N = H.size();
  std::vector<int> code(N);
  for (int h = 0; h < N; ++h) code[h] = coset_code(H, V, h);
  std::vector<int> labels(cube.size());
  std::map<std::array<int, 3>, int> ids;
  for (std::size_t i = 0; i < cube.size(); ++i) {
    auto x = cube.coords(i);
    std::array<int, 3> key{code[x[0]], code[x[1]], code[x[2]]};
    auto it = ids.find(key);
    if (it == ids.end()) it = ids.emplace(key, static_cast<int>(ids.size())).first;
    labels[i] = it->second;
  }
  return {V, Partition::from_labels(std::move(labels))};
}

bool check_affine(const Cube& cube, const AffinePartition& ap) {
  const Group& H = *cube.group();
  int m = ap.P.atom_count();
  std::size_t vsz = static_cast<std::size_t>(std::llround(std::pow(H.p(), ap.V.dim())));
  std::vector<std::array<std::vector<int>, 3>> proj(m);
  for (std::size_t i = 0; i < cube.size(); ++i) {
    int a = ap.P.label[i];
    if (a < 0) return false;
    auto x = cube.coords(i);
    for (int t = 0; t < 3; ++t) proj[a][t].push_back(x[t]);
  }
  for (int a = 0; a < m; ++a) {
    std::size_t vol = 1;
    for (int t = 0; t < 3; ++t) {
      auto& v = proj[a][t];
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      if (v.size() != vsz) return false;
      // translate back to the origin and compare with the points of V
      int base = v[0];
      std::vector<int> shifted;
      for (int h : v) shifted.push_back(H.sub(h, base));
      std::sort(shifted.begin(), shifted.end());
      if (shifted != ap.V.points()) return false;
      vol *= v.size();
    }
    if (vol != ap.P.atom(a).count()) return false;
  }
  return true;
}

// ---- towers -------------------------------------------------------------------------

namespace {
constexpr double kTop = 18446744073709551616.0;  // 2^64

TowerValue canon(int h, double t) {
  while (h == 0 && t >= kTop) {
    h = 1;
    t = std::log2(t);
  }
  while (h >= 1 && t < 64) {
    t = std::exp2(t);
    --h;
  }
  return {h, t};
}
}  // namespace

TowerValue TowerValue::of(double x) {
  require(x >= 0 && std::isfinite(x), "tower values start from a finite nonnegative number");
  return canon(0, x);
}

TowerValue TowerValue::tower2(int n) {
  require(n >= 0, "tower height must be nonnegative");
  TowerValue t = of(1);
  for (int i = 0; i < n; ++i) t = t.pow2();
  return t;
}

TowerValue TowerValue::pow2() const {
  if (height == 0 && top < 64) return canon(0, std::exp2(top));
  return canon(height + 1, top);
}

TowerValue TowerValue::times(double u) const {
  require(u >= 1, "times needs a factor >= 1");
  if (height == 0) return canon(0, top * u);
  if (height == 1) return canon(1, top + std::log2(u));
  // the shift is far below double resolution; round the top up so the result
  // still bounds u * x from above
  if (u == 1) return *this;
  return {height, std::nextafter(top, kTop)};
}

TowerValue TowerValue::log2() const {
  if (height == 0) {
    require(top > 0, "log2 of zero");
    return canon(0, std::log2(top));
  }
  return canon(height - 1, top);
}

std::optional<double> TowerValue::materialize() const {
  if (height == 0) return top;
  return std::nullopt;
}

int TowerValue::compare(const TowerValue& o) const {
  if (height != o.height) return height < o.height ? -1 : 1;
  if (top == o.top) return 0;
  return top < o.top ? -1 : 1;
}

std::string TowerValue::str() const {
  std::ostringstream os;
  if (height == 0)
    os << top;
  else {
    for (int i = 0; i < height; ++i) os << "2^";
    os << top;
  }
  return os.str();
}

TowerValue tower(int ell, int u, int v) {
  require(ell >= 0 && u >= 2 && v >= 2, "tower needs ell >= 0 and u, v >= 2");
  TowerValue t = TowerValue::of(static_cast<double>(u) * v);
  for (int i = 0; i < ell; ++i) t = t.times(u).pow2();
  return t;
}

int log_star(double x) {
  require(std::isfinite(x), "log_star of a non-finite number");
  int h = 0;
  double t = 1;  // 2^^h
  while (t < x) {
    t = std::exp2(t);
    ++h;
  }
  return h;
}

int log_star(const TowerValue& x) {
  // 2^^m = E^m(1) and E^h(t) <= E^m(1) iff t <= 2^^(m-h)
  return x.height + log_star(x.top);
}

bool tower_bound_holds(int ell, int u, int v, int u_power) {
  require(u_power >= 1, "u_power must be positive");
  TowerValue lhs = tower(ell, u, v);
  TowerValue rhs = TowerValue::tower2(ell + log_star(2.0 * std::pow(u, u_power) * v));
  return lhs <= rhs;
}

}  // namespace bc
