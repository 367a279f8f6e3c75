#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "boxcorner/bits.hpp"

namespace bc {

// Finite abelian group with elements 0..N-1. Fields F_p^n use base-p digits,
// coordinate i of x being (x / p^i) % p.
class Group {
 public:
  static std::shared_ptr<const Group> field(int p, int n);
  static std::shared_ptr<const Group> cyclic(int N);

  int size() const { return N_; }
  int p() const { return p_; }
  int n() const { return n_; }
  bool is_field() const { return field_; }
  std::string name() const;

  int add(int a, int b) const { return add_[static_cast<std::size_t>(a) * N_ + b]; }
  int neg(int a) const { return neg_[a]; }
  int sub(int a, int b) const { return add(a, neg(b)); }
  // c * a for c in F_p (field) or c in Z (cyclic)
  int scale(int c, int a) const;

  std::vector<int> digits(int a) const;
  int encode(const std::vector<int>& d) const;

 private:
  Group() = default;
  int N_ = 0, p_ = 0, n_ = 0;
  bool field_ = false;
  std::vector<std::uint16_t> add_, neg_;
};
using GroupPtr = std::shared_ptr<const Group>;

bool is_prime(int p);

struct FieldVector {
  int p = 2;
  std::vector<int> coords;

  static FieldVector decode(int p, int n, int code);
  int encode() const;
  std::size_t dim() const { return coords.size(); }
  FieldVector operator+(const FieldVector& o) const;
  FieldVector operator-() const;
  FieldVector operator-(const FieldVector& o) const { return *this + (-o); }
  FieldVector scaled(int c) const;
  int dot(const FieldVector& o) const;
  bool operator==(const FieldVector& o) const = default;
};

// Coefficients of e_4 = e_1 + e_2 + e_3 on H^3.
std::array<int, 3> e4();

struct Axis {
  std::string label;
  int size = 1;
};

// Labelled product of finite axes; the domain of a TableFunction.
struct ProductSpace {
  std::vector<Axis> axes;

  static ProductSpace uniform(int k, int size);
  std::size_t size() const;
  std::size_t arity() const { return axes.size(); }
  int axis_of(const std::string& label) const;
  ProductSpace face(const std::vector<int>& which) const;
  std::vector<std::size_t> strides() const;  // row major, axis 0 slowest
  bool operator==(const ProductSpace& o) const;
};

// H^3 with the four corner functionals x.e_1, x.e_2, x.e_3 and
// x.e_4 = x_1 + x_2 + x_3. Index of (a,b,c) is (a*N + b)*N + c.
class Cube {
 public:
  explicit Cube(GroupPtr h);

  const Group& H() const { return *h_; }
  const GroupPtr& group() const { return h_; }
  int N() const { return N_; }
  std::size_t size() const { return size_; }
  std::size_t pair_size() const { return static_cast<std::size_t>(N_) * N_; }

  std::size_t index(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * N_ + b) * N_ + c;
  }
  std::array<int, 3> coords(std::size_t i) const {
    return {static_cast<int>(i / (static_cast<std::size_t>(N_) * N_)),
            static_cast<int>((i / N_) % N_), static_cast<int>(i % N_)};
  }
  // x.e_which, which in 1..4
  int dot(std::size_t i, int which) const;

  // The unique point p with p.e_k = x_k for every k != j. x_j is ignored.
  std::size_t lambda(int j, const std::array<int, 4>& x) const;

  // Frame l: H^3 parametrised by the three functionals other than l, listed in
  // increasing label order. from_frame is lambda_l, to_frame its inverse.
  std::size_t from_frame(int ell, int a, int b, int c) const;
  std::array<int, 3> to_frame(int ell, std::size_t i) const;
  static std::array<int, 3> frame_labels(int ell);
  // table of from_frame over all (a,b,c), row major
  const std::vector<std::uint32_t>& frame_table(int ell) const;
  // g o lambda_l as a function on the frame coordinates
  std::vector<double> to_frame_function(const std::vector<double>& g, int ell) const;
  Bits to_frame_set(const Bits& s, int ell) const;
  Bits from_frame_set(const Bits& s, int ell) const;

  Bits full() const { return Bits(size_, true); }
  // {x : x.e_i in S}
  Bits lift_single(const Bits& S, int i) const;
  // {x : (x.e_j, x.e_k) in R}, R indexed a*N + b with a the e_j value
  Bits lift_pair(const Bits& R, int j, int k) const;

 private:
  GroupPtr h_;
  int N_;
  std::size_t size_;
  std::array<std::vector<std::uint32_t>, 5> frame_;
};

namespace linalg {
int modinv(int a, int p);
// Row-reduces in place; returns pivot columns.
std::vector<int> rref(std::vector<std::vector<int>>& rows, int p);
// Basis of {y : r.y = 0 for all rows r}, over F_p^n.
std::vector<std::vector<int>> nullspace(std::vector<std::vector<int>> rows, int n, int p);
// Some x with A x = b, if any.
std::optional<std::vector<int>> solve(const std::vector<std::vector<int>>& A,
                                      const std::vector<int>& b, int n, int p);
}  // namespace linalg

// offset + span(basis) inside F_p^n. Also keeps the equation form A x = b.
class AffineSubspace {
 public:
  AffineSubspace(int p, int n, std::vector<std::vector<int>> basis, std::vector<int> offset);
  static AffineSubspace whole(int p, int n);
  static AffineSubspace from_equations(int p, int n, std::vector<std::vector<int>> A,
                                       std::vector<int> b);

  int p() const { return p_; }
  int n() const { return n_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  int codim() const { return n_ - dim(); }
  const std::vector<std::vector<int>>& basis() const { return basis_; }
  const std::vector<int>& offset() const { return offset_; }
  const std::vector<std::vector<int>>& equations() const { return eq_; }
  const std::vector<int>& rhs() const { return rhs_; }

  bool contains(const std::vector<int>& x) const;
  bool contains_code(int code) const;
  std::optional<AffineSubspace> meet(const AffineSubspace& o) const;
  AffineSubspace translate(const std::vector<int>& t) const;
  std::vector<int> points() const;  // encoded, ascending
  // canonical representative of x + span(basis)
  std::vector<int> reduce(const std::vector<int>& x) const;
  // coordinates of x - offset in the basis (x must be a member)
  std::vector<int> coordinates(const std::vector<int>& x) const;
  std::vector<int> point_at(const std::vector<int>& coeff) const;
  bool same_direction(const AffineSubspace& o) const;

 private:
  AffineSubspace() = default;
  void build_equations();
  int p_ = 2, n_ = 0;
  std::vector<std::vector<int>> basis_;  // reduced row echelon
  std::vector<int> pivots_;
  std::vector<int> offset_;  // canonical: reduced modulo span
  std::vector<std::vector<int>> eq_;
  std::vector<int> rhs_;
};

// Parses "p^n" (e.g. "5^1").
std::pair<int, int> parse_space(const std::string& s);

}  // namespace bc
