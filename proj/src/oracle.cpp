#include "boxcorner/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "boxcorner/corners.hpp"
#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/parallel.hpp"

namespace bc::oracle {

__int128 checked_mul(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw PreconditionError("oracle count overflows 128 bits");
  return r;
}

__int128 checked_add(__int128 a, __int128 b) {
  __int128 r;
  if (__builtin_add_overflow(a, b, &r)) throw PreconditionError("oracle count overflows 128 bits");
  return r;
}

namespace {

std::string i128_str(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  std::string s;
  while (v != 0) {
    int d = static_cast<int>(v % 10);
    s.push_back(static_cast<char>('0' + (d < 0 ? -d : d)));
    v /= 10;
  }
  if (neg) s.push_back('-');
  return {s.rbegin(), s.rend()};
}

bool integral(const std::vector<double>& f) {
  for (double v : f)
    if (v != std::floor(v) || std::abs(v) > 1e9) return false;
  return true;
}

// running sum of products; integer mode keeps the exact count
struct Acc {
  bool exact;
  __int128 n = 0;
  long double s = 0;
  explicit Acc(bool e) : exact(e) {}
  void add_term(const double* vals, std::size_t k) {
    if (exact) {
      __int128 p = 1;
      for (std::size_t i = 0; i < k; ++i) {
        if (vals[i] == 0) return;
        p = checked_mul(p, static_cast<__int128>(static_cast<std::int64_t>(vals[i])));
      }
      n = checked_add(n, p);
    } else {
      long double p = 1;
      for (std::size_t i = 0; i < k; ++i) p *= vals[i];
      s += p;
    }
  }
  void merge(const Acc& o) {
    n = checked_add(n, o.n);
    s += o.s;
  }
};

Exact finish(const Acc& a, __int128 den) {
  Exact e;
  e.exact = a.exact;
  e.den = den;
  if (a.exact) {
    e.num = a.n;
    e.value = static_cast<double>(static_cast<long double>(a.n) / static_cast<long double>(den));
  } else {
    e.value = static_cast<double>(a.s / static_cast<long double>(den));
  }
  return e;
}

void guard(double loops) {
  std::ostringstream m;
  m << "oracle loop count " << loops << " exceeds the budget " << kLoopBudget;
  require(loops <= kLoopBudget, m.str());
}

// odometer over a mixed radix
bool step(std::vector<int>& digit, const std::vector<int>& radix) {
  for (std::size_t i = digit.size(); i-- > 0;) {
    if (++digit[i] < radix[i]) return true;
    digit[i] = 0;
  }
  return false;
}

}  // namespace

std::string Exact::str() const {
  if (!exact) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    return os.str();
  }
  return i128_str(num) + "/" + i128_str(den);
}

std::int64_t Exact::num64() const {
  require(num >= INT64_MIN && num <= INT64_MAX, "numerator does not fit 64 bits");
  return static_cast<std::int64_t>(num);
}

std::int64_t Exact::den64() const {
  require(den <= INT64_MAX, "denominator does not fit 64 bits");
  return static_cast<std::int64_t>(den);
}

Exact box_pow_def(const std::vector<double>& f, const std::vector<int>& dims, Order order) {
  int k = static_cast<int>(dims.size());
  require(k >= 1 && k <= 6, "box oracle supports 1..6 axes");
  std::size_t total = 1;
  for (int d : dims) {
    require(d >= 1, "axis sizes must be positive");
    total *= static_cast<std::size_t>(d);
  }
  require(f.size() == total, "table size does not match axes");
  double loops = std::pow(static_cast<double>(total), 2) * (1 << k);
  guard(loops);
  // variables x_i^0, x_i^1 for every axis
  std::vector<int> radix;
  for (int d : dims) {
    radix.push_back(d);
    radix.push_back(d);
  }
  if (order == Order::Reverse) std::reverse(radix.begin(), radix.end());
  std::vector<std::size_t> stride(k, 1);
  for (int i = k - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];
  Acc acc(integral(f));
  std::vector<int> digit(radix.size(), 0);
  std::vector<double> vals(1u << k);
  do {
    for (unsigned w = 0; w < (1u << k); ++w) {
      std::size_t idx = 0;
      for (int i = 0; i < k; ++i) {
        int slot = 2 * i + ((w >> i) & 1);
        int v = order == Order::Forward ? digit[slot] : digit[radix.size() - 1 - slot];
        idx += stride[i] * v;
      }
      vals[w] = f[idx];
    }
    acc.add_term(vals.data(), vals.size());
  } while (step(digit, radix));
  __int128 den = static_cast<__int128>(total) * total;
  return finish(acc, den);
}

double box_norm_def(const std::vector<double>& f, const std::vector<int>& dims) {
  double v = box_pow_def(f, dims).value;
  return std::pow(std::max(0.0, v), 1.0 / (1 << dims.size()));
}

Exact u3_pow_def(const std::vector<double>& f, const Group& H) {
  int N = H.size();
  require(static_cast<int>(f.size()) == N, "function size does not match group");
  guard(std::pow(static_cast<double>(N), 4) * 8);
  Acc acc(integral(f));
  std::vector<Acc> part(N, Acc(acc.exact));
  parallel_for(N, [&](std::size_t x) {
    double vals[8];
    for (int h1 = 0; h1 < N; ++h1)
      for (int h2 = 0; h2 < N; ++h2)
        for (int h3 = 0; h3 < N; ++h3) {
          for (int w = 0; w < 8; ++w) {
            int y = static_cast<int>(x);
            if (w & 1) y = H.add(y, h1);
            if (w & 2) y = H.add(y, h2);
            if (w & 4) y = H.add(y, h3);
            vals[w] = f[y];
          }
          part[x].add_term(vals, 8);
        }
  });
  for (auto& p : part) acc.merge(p);
  __int128 n = N;
  return finish(acc, n * n * n * n);
}

Exact q_def(const Cube& cube, const std::array<const std::vector<double>*, 5>& f, Order order) {
  int N = cube.N();
  bool ex = true;
  for (int j = 1; j <= 4; ++j) {
    require(f[j] && f[j]->size() == cube.size(), "Q needs four functions on H^3");
    ex = ex && integral(*f[j]);
  }
  guard(std::pow(static_cast<double>(N), 4) * 4);
  Acc acc(ex);
  std::vector<int> radix(4, N), digit(4, 0);
  double vals[4];
  do {
    std::array<int, 4> x{};
    for (int j = 0; j < 4; ++j) x[j] = order == Order::Forward ? digit[j] : digit[3 - j];
    for (int j = 1; j <= 4; ++j) vals[j - 1] = (*f[j])[cube.lambda(j, x)];
    acc.add_term(vals, 4);
  } while (step(digit, radix));
  __int128 n = N;
  return finish(acc, n * n * n * n);
}

namespace {

Exact replica_def(const FormContext& ctx, const OmegaSet& om, const std::vector<int>& ell,
                  const std::vector<const std::vector<double>*>& F) {
  require(ctx.cube != nullptr, "form context has no cube");
  om.validate();
  require(F.size() == om.size() && ell.size() == om.size(), "one function per omega");
  int k = ctx.arity, lam = om.lambda;
  require(lam <= 8, "replica count must be at most 8");
  bool ex = true;
  for (auto* g : F) {
    require(g && g->size() == ctx.cube->size(), "form factor table has wrong size");
    ex = ex && integral(*g);
  }
  // every variable x_j^r, j < arity, r < lambda
  std::vector<int> radix;
  double loops = static_cast<double>(om.size());
  __int128 den = 1;
  for (int j = 0; j < k; ++j) {
    require(!ctx.S[j].empty(), "replica variable ranges over an empty set");
    for (int r = 0; r < lam; ++r) {
      radix.push_back(static_cast<int>(ctx.S[j].size()));
      loops *= ctx.S[j].size();
      den = checked_mul(den, static_cast<__int128>(ctx.S[j].size()));
    }
  }
  guard(loops);
  Acc acc(ex);
  std::vector<int> digit(radix.size(), 0);
  std::vector<double> vals(om.size());
  do {
    for (std::size_t i = 0; i < om.size(); ++i) {
      std::array<int, 4> x{0, 0, 0, 0};
      for (int j = 0; j < k; ++j) x[j] = ctx.S[j][digit[j * lam + om.maps[i].v[j]]];
      vals[i] = (*F[i])[ctx.cube->lambda(ell[i], x)];
    }
    acc.add_term(vals.data(), vals.size());
  } while (step(digit, radix));
  return finish(acc, den);
}

}  // namespace

Exact L_def(const FormContext& ctx, const OmegaSet& om,
            const std::vector<const std::vector<double>*>& f) {
  require(om.arity == 3 && ctx.arity == 3, "L forms have arity 3");
  return replica_def(ctx, om, std::vector<int>(om.size(), 4), f);
}

Exact Lambda_def(const FormContext& ctx, const OmegaSet& om, const std::vector<int>& ell,
                 const std::vector<const std::vector<double>*>& F) {
  require(om.arity == 4 && ctx.arity == 4, "Lambda forms have arity 4");
  for (int l : ell) require(l >= 1 && l <= 4, "frame must be in 1..4");
  return replica_def(ctx, om, ell, F);
}

// ---- extremal search ----------------------------------------------------------------

namespace {

struct CornerIndex {
  int n = 0;
  std::vector<std::vector<int>> corners;              // point lists
  std::vector<std::vector<int>> through;              // corners containing a point
};

CornerIndex corner_index(int N, int d) {
  CornerIndex ci;
  ci.n = 1;
  for (int r = 0; r < d; ++r) ci.n *= N;
  ci.through.resize(ci.n);
  std::vector<int> stride(d, 1);
  for (int r = d - 2; r >= 0; --r) stride[r] = stride[r + 1] * N;
  for (int g = 0; g < ci.n; ++g)
    for (int h = 1; h < N; ++h) {
      std::vector<int> pts{g};
      for (int r = 0; r < d; ++r) {
        int c = (g / stride[r]) % N;
        pts.push_back(g + (((c + h) % N) - c) * stride[r]);
      }
      int id = static_cast<int>(ci.corners.size());
      for (int p : pts) ci.through[p].push_back(id);
      ci.corners.push_back(std::move(pts));
    }
  return ci;
}

struct Search {
  const CornerIndex& ci;
  std::uint64_t budget;
  std::uint64_t nodes = 0;
  bool out_of_budget = false;
  std::vector<int> missing;   // per corner, points not yet included
  std::vector<char> in;
  int size = 0, best = -1;
  std::vector<char> best_set;

  Search(const CornerIndex& c, std::uint64_t b) : ci(c), budget(b) {
    missing.resize(ci.corners.size());
    for (std::size_t i = 0; i < ci.corners.size(); ++i)
      missing[i] = static_cast<int>(ci.corners[i].size());
    in.assign(ci.n, 0);
  }
  bool can_add(int p) const {
    for (int c : ci.through[p])
      if (missing[c] == 1) return false;
    return true;
  }
  void add(int p) {
    in[p] = 1;
    ++size;
    for (int c : ci.through[p]) --missing[c];
  }
  void remove(int p) {
    in[p] = 0;
    --size;
    for (int c : ci.through[p]) ++missing[c];
  }
  void run(int p) {
    if (++nodes > budget) {
      out_of_budget = true;
      return;
    }
    if (size + (ci.n - p) <= best) return;
    if (p == ci.n) {
      best = size;
      best_set = in;
      return;
    }
    if (can_add(p)) {
      add(p);
      run(p + 1);
      remove(p);
      if (out_of_budget) return;
    }
    run(p + 1);
  }
};

}  // namespace

MaxCornerFree max_cornerfree(int N, int d, std::uint64_t node_budget) {
  require(N >= 2 && d >= 1 && d <= 3, "need N >= 2 and d in 1..3");
  require(std::pow(static_cast<double>(N), d) <= 64, "extremal search supports N^d <= 64");
  auto ci = corner_index(N, d);
  // fix the first few points, search each prefix independently
  int pre = std::min(ci.n, 4);
  std::size_t np = std::size_t{1} << pre;
  std::vector<Search> part;
  part.reserve(np);
  for (std::size_t m = 0; m < np; ++m) part.emplace_back(ci, node_budget / np + 1);
  parallel_for(np, [&](std::size_t m) {
    Search& s = part[m];
    // include-first order: prefix bit set means point included
    for (int p = 0; p < pre; ++p)
      if ((m >> (pre - 1 - p)) & 1) {
        if (!s.can_add(p)) return;
        s.add(p);
      }
    s.run(pre);
  });
  MaxCornerFree res;
  res.N = N;
  res.d = d;
  res.exact = true;
  // prefixes in include-first order: highest mask first
  for (std::size_t q = np; q-- > 0;) {
    const Search& s = part[q];
    res.nodes += s.nodes;
    if (s.out_of_budget) res.exact = false;
    if (s.best > res.size || (res.witness.size() == 0 && s.best >= 0)) {
      res.size = s.best;
      res.witness = Bits(ci.n);
      for (int p = 0; p < ci.n; ++p)
        if (s.best_set[p]) res.witness.set(p);
    }
  }
  auto G = Group::cyclic(N);
  res.witness_verified = count_corners(res.witness, *G, d) == 0 &&
                         static_cast<int>(res.witness.count()) == res.size;
  ensure(res.witness_verified, "extremal witness contains a corner");
  return res;
}

// ---- random sets ----------------------------------------------------------------------

RandomSetStats random_set_stats(const std::vector<int>& dims, double density, int trials,
                                std::uint64_t seed) {
  require(trials >= 1, "need at least one trial");
  require(density >= 0 && density <= 1, "density must lie in [0,1]");
  require(!dims.empty(), "need at least one axis");
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  std::size_t k = static_cast<std::size_t>(std::llround(density * static_cast<double>(n)));
  RandomSetStats st;
  st.dims = dims;
  st.density = density;
  st.trials = trials;
  st.norms.resize(trials);
  // each trial has its own stream so the table is independent of the worker count
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + t);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Bits A(n);
    for (std::size_t i = 0; i < k; ++i) A.set(idx[i]);
    double dA = static_cast<double>(k) / static_cast<double>(n);
    st.norms[t] = box_norm(balanced(A, dA), dims);
  });
  std::sort(st.norms.begin(), st.norms.end());
  st.mean = std::accumulate(st.norms.begin(), st.norms.end(), 0.0) / trials;
  for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    std::size_t i = static_cast<std::size_t>(std::llround(q * (trials - 1)));
    st.quantiles.push_back({q, st.norms[i]});
  }
  return st;
}

}  // namespace bc::oracle
