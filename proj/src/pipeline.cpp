#include "boxcorner/pipeline.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "boxcorner/error.hpp"
#include "boxcorner/measure.hpp"

namespace bc {

void PipelineConfig::validate() const {
  require(is_prime(p) && n >= 1, "space must be F_p^n with p prime and n >= 1");
  require(kappa > 0, "kappa must be positive");
  require(admiss_C > 0 && admiss_kappa > 0, "admissibility constants must be positive");
  require(upsilon > 0 && upsilon < 1, "upsilon must lie in (0,1)");
  require(max_iterations >= 1, "max_iterations must be positive");
  inc.validate();
  require(uni.tau > 0 && uni.tau < 1 && uni.u2 > 0 && uni.u2 < 1 && uni.u3 > 0 && uni.u3 < 1,
          "uniformizer thresholds must lie in (0,1)");
  require(uni.codim_budget >= 1 && uni.max_codim >= 0 && uni.max_rounds >= 1,
          "uniformizer budgets must be positive");
}

Bits random_set(std::size_t n, double density, std::uint64_t seed) {
  require(density >= 0 && density <= 1, "density must lie in [0,1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Bits A(n);
  for (std::size_t i = 0; i < n; ++i)
    if (U(rng) < density) A.set(i);
  return A;
}

namespace {

// the witness read through the embedding, as a corner of the original cube
std::optional<CornerWitness> lift_witness(const Cube& cur, const Cube& orig,
                                          const std::vector<std::size_t>& to_orig,
                                          const CornerWitness& w) {
  const Group& G = cur.H();
  auto pts = w.points(G);
  std::vector<std::array<int, 3>> img;
  for (auto& p : pts) img.push_back(orig.coords(to_orig[cur.index(p[0], p[1], p[2])]));
  const Group& H = orig.H();
  int h = H.sub(img[1][0], img[0][0]);
  if (h == 0) return std::nullopt;
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) {
      int want = r == s ? H.add(img[0][s], h) : img[0][s];
      if (img[r + 1][s] != want) return std::nullopt;
    }
  CornerWitness out;
  out.g = {img[0][0], img[0][1], img[0][2]};
  out.h = h;
  return out;
}

}  // namespace

PipelineTrace run_pipeline(std::shared_ptr<const Cube> cube, const Bits& A,
                           const PipelineConfig& cfg) {
  cfg.validate();
  require(A.size() == cube->size(), "A must be a subset of H^3");
  require(A.any(), "A must be nonempty");
  PipelineTrace tr;
  tr.config = cfg;
  const Group& H0 = cube->H();
  tr.space = std::to_string(H0.p()) + "^" + std::to_string(H0.n());
  tr.A_size = A.count();
  tr.density = static_cast<double>(tr.A_size) / cube->size();
  {
    double c = 4.0 / (cfg.kappa * std::pow(tr.density, 1.0 / cfg.kappa));
    tr.iteration_cap = static_cast<int>(std::min<double>(cfg.max_iterations, std::ceil(c)));
  }

  CornerSystem cs{TSystem::trivial(cube), A};
  std::shared_ptr<const Cube> cur = cube;
  std::vector<std::size_t> to_orig(cube->size());
  for (std::size_t i = 0; i < to_orig.size(); ++i) to_orig[i] = i;
  DecideOptions dopt;
  dopt.kappa = cfg.kappa;
  dopt.admiss_C = cfg.admiss_C;
  dopt.admiss_kappa = cfg.admiss_kappa;
  dopt.soft_admissibility = true;
  bool done = false;

  for (int m = 0; m < tr.iteration_cap && !done; ++m) {
    IterationRecord rec;
    rec.m = m;
    rec.dim = cur->H().is_field() ? cur->H().n() : 0;
    auto dens = densities(cs);
    rec.dA = dens.dA;
    rec.pT = dens.pT;
    rec.d = dens.d;
    rec.djk = dens.djk;
    rec.A_size = cs.A.count();
    auto dec = von_neumann_decide(cs, dopt);
    rec.admissible = dec.admissible;
    rec.admiss_failure = dec.admiss_failure;
    if (!dec.admissible) rec.relaxations.push_back("admissibility relaxed: " + dec.admiss_failure);
    rec.ratio = dec.ratio;
    rec.uniform_bound = dec.uniform_bound;
    rec.size_lhs = dec.size_lhs;
    rec.size_rhs = dec.size_rhs;
    rec.outcome = outcome_name(dec.outcome);
    rec.ell = dec.ell;

    switch (dec.outcome) {
      case Outcome::Corner: {
        auto w = lift_witness(*cur, *cube, to_orig, *dec.corner);
        ensure(w.has_value(), "corner did not survive the embedding");
        tr.corner = w;
        tr.corner_verified = is_corner(A, H0, *w);
        ensure(tr.corner_verified, "corner is not in the original set");
        tr.terminal = "corner";
        done = true;
        break;
      }
      case Outcome::FailsSize:
        tr.diagnostic = "size condition fails at iteration " + std::to_string(m);
        done = true;
        break;
      case Outcome::NoCornerFound:
        tr.diagnostic = "uniform system without a corner under the desk kappa";
        done = true;
        break;
      case Outcome::NotUniform: {
        DensityIncrement di;
        try {
          di = density_increment(cs, cfg.kappa, cfg.inc);
        } catch (const PreconditionError& e) {
          tr.diagnostic = std::string("increment unavailable: ") + e.what();
          done = true;
          break;
        }
        rec.branch = di.inc.branch;
        rec.dA_increment = di.delta_after;
        if (!di.gain_ok) rec.relaxations.push_back("increment below delta^(1/kappa') floor");
        CornerSystem next = std::move(di.next);
        std::shared_ptr<const Cube> next_cube = cur;
        std::vector<std::size_t> next_map = to_orig;
        if (cfg.uniformize) {
          double v = di.delta_after - di.delta;
          try {
            auto ul = uniformizing_lemma(next, di.delta, std::min(v, 0.999), cfg.uni);
            rec.dA_uniformize = ul.density;
            rec.codim = ul.report.codim;
            rec.monitors = ul.report.monitors;
            if (ul.relaxed) rec.relaxations.push_back("uniformizer exclusions trimmed to v/4");
            if (ul.report.partial) rec.relaxations.push_back("uniformizer stopped partial");
            if (!ul.admissible)
              rec.relaxations.push_back("uniformized atom not admissible: " + ul.admiss_failure);
            next_cube = ul.next.cs.sys.cube;
            next_map.assign(next_cube->size(), 0);
            for (std::size_t y = 0; y < next_map.size(); ++y)
              next_map[y] = to_orig[ul.next.embed_point(*cur, y)];
            next = std::move(ul.next.cs);
          } catch (const PreconditionError& e) {
            rec.relaxations.push_back(std::string("uniformizer skipped: ") + e.what());
          }
        }
        double before = rec.dA, after = cond_prob(next.A, next.sys.T);
        if (!(after > before)) tr.density_monotone = false;
        ensure(after > before, "P(A:T) did not increase across an increment step");
        bool sub = true;
        next.A.for_each([&](std::size_t y) { sub = sub && A[next_map[y]]; });
        tr.subset_ok = tr.subset_ok && sub;
        ensure(sub, "A(m) left the original set");
        cs = std::move(next);
        cur = next_cube;
        to_orig = std::move(next_map);
        if (cs.A.none()) {
          tr.diagnostic = "A(m) became empty";
          done = true;
        }
        break;
      }
    }
    tr.iterations.push_back(std::move(rec));
  }
  if (!done) tr.diagnostic = "iteration cap " + std::to_string(tr.iteration_cap) + " reached";
  return tr;
}

}  // namespace bc
