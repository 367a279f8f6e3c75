#include "boxcorner/space.hpp"

#include <algorithm>
#include <sstream>

#include "boxcorner/error.hpp"

namespace bc {

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

std::shared_ptr<const Group> Group::field(int p, int n) {
  require(is_prime(p), "field modulus must be prime");
  require(n >= 0, "dimension must be nonnegative");
  long N = 1;
  for (int i = 0; i < n; ++i) N *= p;
  require(N <= 1024, "group too large (N > 1024)");
  auto g = std::shared_ptr<Group>(new Group());
  g->N_ = static_cast<int>(N);
  g->p_ = p;
  g->n_ = n;
  g->field_ = true;
  g->add_.resize(static_cast<std::size_t>(N) * N);
  g->neg_.resize(N);
  for (int a = 0; a < N; ++a) {
    auto da = g->digits(a);
    std::vector<int> d(n);
    for (int i = 0; i < n; ++i) d[i] = (p - da[i]) % p;
    g->neg_[a] = static_cast<std::uint16_t>(g->encode(d));
    for (int b = 0; b < N; ++b) {
      auto db = g->digits(b);
      for (int i = 0; i < n; ++i) d[i] = (da[i] + db[i]) % p;
      g->add_[static_cast<std::size_t>(a) * N + b] = static_cast<std::uint16_t>(g->encode(d));
    }
  }
  return g;
}

std::shared_ptr<const Group> Group::cyclic(int N) {
  require(N >= 1 && N <= 1024, "cyclic group order out of range");
  auto g = std::shared_ptr<Group>(new Group());
  g->N_ = N;
  g->p_ = N;
  g->n_ = 1;
  g->field_ = is_prime(N);
  g->add_.resize(static_cast<std::size_t>(N) * N);
  g->neg_.resize(N);
  for (int a = 0; a < N; ++a) {
    g->neg_[a] = static_cast<std::uint16_t>((N - a) % N);
    for (int b = 0; b < N; ++b)
      g->add_[static_cast<std::size_t>(a) * N + b] = static_cast<std::uint16_t>((a + b) % N);
  }
  return g;
}

std::string Group::name() const {
  std::ostringstream os;
  if (field_)
    os << p_ << "^" << n_;
  else
    os << "Z_" << N_;
  return os.str();
}

int Group::scale(int c, int a) const {
  std::vector<int> d = digits(a);
  int m = ((c % p_) + p_) % p_;
  for (auto& x : d) x = (x * m) % p_;
  return encode(d);
}

std::vector<int> Group::digits(int a) const {
  std::vector<int> d(n_);
  for (int i = 0; i < n_; ++i) {
    d[i] = a % p_;
    a /= p_;
  }
  return d;
}

int Group::encode(const std::vector<int>& d) const {
  int a = 0;
  for (int i = n_ - 1; i >= 0; --i) a = a * p_ + d[i];
  return a;
}

FieldVector FieldVector::decode(int p, int n, int code) {
  FieldVector v{p, std::vector<int>(n)};
  for (int i = 0; i < n; ++i) {
    v.coords[i] = code % p;
    code /= p;
  }
  return v;
}

int FieldVector::encode() const {
  int a = 0;
  for (int i = static_cast<int>(coords.size()) - 1; i >= 0; --i) a = a * p + coords[i];
  return a;
}

FieldVector FieldVector::operator+(const FieldVector& o) const {
  require(p == o.p && coords.size() == o.coords.size(), "field vectors from different spaces");
  FieldVector r = *this;
  for (std::size_t i = 0; i < coords.size(); ++i) r.coords[i] = (coords[i] + o.coords[i]) % p;
  return r;
}

FieldVector FieldVector::operator-() const {
  FieldVector r = *this;
  for (auto& c : r.coords) c = (p - c) % p;
  return r;
}

FieldVector FieldVector::scaled(int c) const {
  FieldVector r = *this;
  int m = ((c % p) + p) % p;
  for (auto& x : r.coords) x = (x * m) % p;
  return r;
}

int FieldVector::dot(const FieldVector& o) const {
  long s = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) s += static_cast<long>(coords[i]) * o.coords[i];
  return static_cast<int>(s % p);
}

std::array<int, 3> e4() { return {1, 1, 1}; }

ProductSpace ProductSpace::uniform(int k, int size) {
  ProductSpace s;
  for (int i = 0; i < k; ++i) s.axes.push_back({std::to_string(i + 1), size});
  return s;
}

std::size_t ProductSpace::size() const {
  std::size_t n = 1;
  for (auto& a : axes) n *= static_cast<std::size_t>(a.size);
  return n;
}

int ProductSpace::axis_of(const std::string& label) const {
  for (std::size_t i = 0; i < axes.size(); ++i)
    if (axes[i].label == label) return static_cast<int>(i);
  throw PreconditionError("no axis labelled " + label);
}

ProductSpace ProductSpace::face(const std::vector<int>& which) const {
  ProductSpace s;
  for (int w : which) {
    require(w >= 0 && w < static_cast<int>(axes.size()), "face axis out of range");
    s.axes.push_back(axes[w]);
  }
  return s;
}

std::vector<std::size_t> ProductSpace::strides() const {
  std::vector<std::size_t> st(axes.size(), 1);
  for (int i = static_cast<int>(axes.size()) - 2; i >= 0; --i)
    st[i] = st[i + 1] * static_cast<std::size_t>(axes[i + 1].size);
  return st;
}

bool ProductSpace::operator==(const ProductSpace& o) const {
  if (axes.size() != o.axes.size()) return false;
  for (std::size_t i = 0; i < axes.size(); ++i)
    if (axes[i].size != o.axes[i].size) return false;
  return true;
}

Cube::Cube(GroupPtr h) : h_(std::move(h)), N_(h_->size()) {
  size_ = static_cast<std::size_t>(N_) * N_ * N_;
  for (int ell = 1; ell <= 4; ++ell) {
    auto& t = frame_[ell];
    t.resize(size_);
    std::size_t k = 0;
    for (int a = 0; a < N_; ++a)
      for (int b = 0; b < N_; ++b)
        for (int c = 0; c < N_; ++c) t[k++] = static_cast<std::uint32_t>(from_frame(ell, a, b, c));
  }
}

int Cube::dot(std::size_t i, int which) const {
  auto x = coords(i);
  switch (which) {
    case 1: return x[0];
    case 2: return x[1];
    case 3: return x[2];
    case 4: return h_->add(h_->add(x[0], x[1]), x[2]);
  }
  throw PreconditionError("corner functional index must be in 1..4");
}

std::size_t Cube::lambda(int j, const std::array<int, 4>& x) const {
  const Group& g = *h_;
  switch (j) {
    case 4: return index(x[0], x[1], x[2]);
    case 3: return index(x[0], x[1], g.sub(x[3], g.add(x[0], x[1])));
    case 2: return index(x[0], g.sub(x[3], g.add(x[0], x[2])), x[2]);
    case 1: return index(g.sub(x[3], g.add(x[1], x[2])), x[1], x[2]);
  }
  throw PreconditionError("lambda index must be in 1..4");
}

std::array<int, 3> Cube::frame_labels(int ell) {
  switch (ell) {
    case 1: return {2, 3, 4};
    case 2: return {1, 3, 4};
    case 3: return {1, 2, 4};
    case 4: return {1, 2, 3};
  }
  throw PreconditionError("frame index must be in 1..4");
}

std::size_t Cube::from_frame(int ell, int a, int b, int c) const {
  auto lab = frame_labels(ell);
  std::array<int, 4> x{0, 0, 0, 0};
  x[lab[0] - 1] = a;
  x[lab[1] - 1] = b;
  x[lab[2] - 1] = c;
  return lambda(ell, x);
}

std::array<int, 3> Cube::to_frame(int ell, std::size_t i) const {
  auto lab = frame_labels(ell);
  return {dot(i, lab[0]), dot(i, lab[1]), dot(i, lab[2])};
}

const std::vector<std::uint32_t>& Cube::frame_table(int ell) const {
  require(ell >= 1 && ell <= 4, "frame index must be in 1..4");
  return frame_[ell];
}

std::vector<double> Cube::to_frame_function(const std::vector<double>& g, int ell) const {
  const auto& t = frame_table(ell);
  std::vector<double> r(size_);
  for (std::size_t k = 0; k < size_; ++k) r[k] = g[t[k]];
  return r;
}

Bits Cube::to_frame_set(const Bits& s, int ell) const {
  const auto& t = frame_table(ell);
  Bits r(size_);
  for (std::size_t k = 0; k < size_; ++k)
    if (s.test(t[k])) r.set(k);
  return r;
}

Bits Cube::from_frame_set(const Bits& s, int ell) const {
  const auto& t = frame_table(ell);
  Bits r(size_);
  for (std::size_t k = 0; k < size_; ++k)
    if (s.test(k)) r.set(t[k]);
  return r;
}

Bits Cube::lift_single(const Bits& S, int i) const {
  require(i >= 1 && i <= 4, "lift axis must be in 1..4");
  require(S.size() == static_cast<std::size_t>(N_), "single-axis set has wrong size");
  Bits r(size_);
  for (std::size_t k = 0; k < size_; ++k)
    if (S.test(dot(k, i))) r.set(k);
  return r;
}

Bits Cube::lift_pair(const Bits& R, int j, int k) const {
  require(j >= 1 && j <= 4 && k >= 1 && k <= 4 && j != k, "lift axes must be distinct in 1..4");
  require(R.size() == pair_size(), "pair set has wrong size");
  Bits r(size_);
  for (std::size_t q = 0; q < size_; ++q)
    if (R.test(static_cast<std::size_t>(dot(q, j)) * N_ + dot(q, k))) r.set(q);
  return r;
}

namespace linalg {

int modinv(int a, int p) {
  a %= p;
  if (a < 0) a += p;
  int r = 1, e = p - 2;
  long b = a;
  while (e) {
    if (e & 1) r = static_cast<int>((r * b) % p);
    b = (b * b) % p;
    e >>= 1;
  }
  return r;
}

std::vector<int> rref(std::vector<std::vector<int>>& rows, int p) {
  std::vector<int> piv;
  if (rows.empty()) return piv;
  std::size_t n = rows[0].size(), r = 0;
  for (std::size_t c = 0; c < n && r < rows.size(); ++c) {
    std::size_t s = r;
    while (s < rows.size() && rows[s][c] % p == 0) ++s;
    if (s == rows.size()) continue;
    std::swap(rows[r], rows[s]);
    int inv = modinv(rows[r][c], p);
    for (auto& v : rows[r]) v = static_cast<int>((static_cast<long>(v) * inv) % p);
    for (std::size_t o = 0; o < rows.size(); ++o) {
      if (o == r || rows[o][c] == 0) continue;
      int f = rows[o][c];
      for (std::size_t q = 0; q < n; ++q)
        rows[o][q] = static_cast<int>(((rows[o][q] - static_cast<long>(f) * rows[r][q]) % p + p) % p);
    }
    piv.push_back(static_cast<int>(c));
    ++r;
  }
  rows.resize(r);
  return piv;
}

std::vector<std::vector<int>> nullspace(std::vector<std::vector<int>> rows, int n, int p) {
  auto piv = rref(rows, p);
  std::vector<bool> is_piv(n, false);
  for (int c : piv) is_piv[c] = true;
  std::vector<std::vector<int>> out;
  for (int f = 0; f < n; ++f) {
    if (is_piv[f]) continue;
    std::vector<int> y(n, 0);
    y[f] = 1;
    for (std::size_t r = 0; r < piv.size(); ++r) y[piv[r]] = (p - rows[r][f]) % p;
    out.push_back(y);
  }
  return out;
}

std::optional<std::vector<int>> solve(const std::vector<std::vector<int>>& A,
                                      const std::vector<int>& b, int n, int p) {
  std::vector<std::vector<int>> aug;
  for (std::size_t r = 0; r < A.size(); ++r) {
    auto row = A[r];
    row.push_back(((b[r] % p) + p) % p);
    aug.push_back(row);
  }
  auto piv = rref(aug, p);
  std::vector<int> x(n, 0);
  for (std::size_t r = 0; r < piv.size(); ++r) {
    if (piv[r] == n) return std::nullopt;
    x[piv[r]] = aug[r][n];
  }
  return x;
}

}  // namespace linalg

AffineSubspace::AffineSubspace(int p, int n, std::vector<std::vector<int>> basis,
                               std::vector<int> offset)
    : p_(p), n_(n) {
  require(is_prime(p), "affine subspace needs a prime field");
  require(static_cast<int>(offset.size()) == n, "offset has wrong dimension");
  for (auto& b : basis) {
    require(static_cast<int>(b.size()) == n, "basis vector has wrong dimension");
    for (auto& v : b) v = ((v % p) + p) % p;
  }
  std::size_t k = basis.size();
  auto piv = linalg::rref(basis, p);
  require(basis.size() == k, "basis vectors are linearly dependent");
  basis_ = std::move(basis);
  pivots_ = std::move(piv);
  for (auto& v : offset) v = ((v % p) + p) % p;
  offset_ = reduce(offset);
  build_equations();
}

AffineSubspace AffineSubspace::whole(int p, int n) {
  std::vector<std::vector<int>> basis;
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(n, 0);
    e[i] = 1;
    basis.push_back(e);
  }
  return AffineSubspace(p, n, basis, std::vector<int>(n, 0));
}

AffineSubspace AffineSubspace::from_equations(int p, int n, std::vector<std::vector<int>> A,
                                              std::vector<int> b) {
  auto x = linalg::solve(A, b, n, p);
  require(x.has_value(), "inconsistent affine equations");
  return AffineSubspace(p, n, linalg::nullspace(A, n, p), *x);
}

void AffineSubspace::build_equations() {
  eq_ = linalg::nullspace(basis_, n_, p_);
  rhs_.clear();
  for (auto& row : eq_) {
    long s = 0;
    for (int i = 0; i < n_; ++i) s += static_cast<long>(row[i]) * offset_[i];
    rhs_.push_back(static_cast<int>(s % p_));
  }
}

std::vector<int> AffineSubspace::reduce(const std::vector<int>& x) const {
  std::vector<int> r = x;
  for (auto& v : r) v = ((v % p_) + p_) % p_;
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    int f = r[pivots_[i]];
    if (!f) continue;
    for (int q = 0; q < n_; ++q)
      r[q] = static_cast<int>(((r[q] - static_cast<long>(f) * basis_[i][q]) % p_ + p_) % p_);
  }
  return r;
}

bool AffineSubspace::contains(const std::vector<int>& x) const {
  for (std::size_t e = 0; e < eq_.size(); ++e) {
    long s = 0;
    for (int i = 0; i < n_; ++i) s += static_cast<long>(eq_[e][i]) * x[i];
    if (static_cast<int>(((s % p_) + p_) % p_) != rhs_[e]) return false;
  }
  return true;
}

bool AffineSubspace::contains_code(int code) const {
  return contains(FieldVector::decode(p_, n_, code).coords);
}

std::optional<AffineSubspace> AffineSubspace::meet(const AffineSubspace& o) const {
  require(p_ == o.p_ && n_ == o.n_, "affine subspaces in different spaces");
  auto A = eq_;
  auto b = rhs_;
  A.insert(A.end(), o.eq_.begin(), o.eq_.end());
  b.insert(b.end(), o.rhs_.begin(), o.rhs_.end());
  auto x = linalg::solve(A, b, n_, p_);
  if (!x) return std::nullopt;
  return AffineSubspace(p_, n_, linalg::nullspace(A, n_, p_), *x);
}

AffineSubspace AffineSubspace::translate(const std::vector<int>& t) const {
  std::vector<int> off = offset_;
  for (int i = 0; i < n_; ++i) off[i] = (off[i] + t[i]) % p_;
  return AffineSubspace(p_, n_, basis_, off);
}

std::vector<int> AffineSubspace::point_at(const std::vector<int>& coeff) const {
  std::vector<int> x = offset_;
  for (std::size_t i = 0; i < basis_.size(); ++i)
    for (int q = 0; q < n_; ++q) x[q] = static_cast<int>((x[q] + static_cast<long>(coeff[i]) * basis_[i][q]) % p_);
  return x;
}

std::vector<int> AffineSubspace::coordinates(const std::vector<int>& x) const {
  std::vector<int> c(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i)
    c[i] = ((x[pivots_[i]] - offset_[pivots_[i]]) % p_ + p_) % p_;
  return c;
}

std::vector<int> AffineSubspace::points() const {
  std::vector<int> out;
  int d = dim();
  long total = 1;
  for (int i = 0; i < d; ++i) total *= p_;
  std::vector<int> coeff(d, 0);
  for (long t = 0; t < total; ++t) {
    long r = t;
    for (int i = 0; i < d; ++i) {
      coeff[i] = static_cast<int>(r % p_);
      r /= p_;
    }
    out.push_back(FieldVector{p_, point_at(coeff)}.encode());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool AffineSubspace::same_direction(const AffineSubspace& o) const {
  return p_ == o.p_ && n_ == o.n_ && basis_ == o.basis_;
}

std::pair<int, int> parse_space(const std::string& s) {
  auto k = s.find('^');
  require(k != std::string::npos, "space must be written p^n");
  int p = std::stoi(s.substr(0, k)), n = std::stoi(s.substr(k + 1));
  require(is_prime(p) && n >= 0, "space must be p^n with p prime");
  return {p, n};
}

}  // namespace bc
