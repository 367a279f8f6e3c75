#include "doctest.h"

#include "boxcorner/corners.hpp"
#include "boxcorner/error.hpp"
#include "boxcorner/io.hpp"
#include "boxcorner/measure.hpp"
#include "boxcorner/pipeline.hpp"
#include "gen.hpp"

using namespace bc;

namespace {
const std::string kGolden = std::string(BOXCORNER_SOURCE_DIR) + "/tests/golden/";
}

TEST_CASE("random sets") {
  CHECK(random_set(100, 0, 1).none());
  CHECK(random_set(100, 1, 1).count() == 100);
  CHECK(random_set(500, 0.3, 7) == random_set(500, 0.3, 7));
  CHECK_FALSE(random_set(500, 0.3, 7) == random_set(500, 0.3, 8));
  CHECK_THROWS_AS(random_set(10, 1.5, 1), PreconditionError);
}

TEST_CASE("the full cube yields a corner at once") {
  for (auto [p, n] : {std::pair{5, 1}, std::pair{3, 2}, std::pair{2, 3}}) {
    auto cube = io::make_cube(p, n);
    PipelineConfig cfg;
    cfg.p = p;
    cfg.n = n;
    auto tr = run_pipeline(cube, Bits(cube->size(), true), cfg);
    CHECK(tr.terminal == "corner");
    CHECK(tr.corner_verified);
    REQUIRE(tr.iterations.size() == 1);
    CHECK(tr.iterations[0].outcome == "corner");
    CHECK(is_corner(Bits(cube->size(), true), cube->H(), *tr.corner));
  }
}

TEST_CASE("dense random sets end in verified corners") {
  auto cube = io::make_cube(5, 1);
  PipelineConfig cfg;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Bits A = random_set(cube->size(), 0.9, s);
    auto tr = run_pipeline(cube, A, cfg);
    CHECK(tr.terminal == "corner");
    REQUIRE(tr.corner.has_value());
    CHECK(is_corner(A, cube->H(), *tr.corner));
  }
}

TEST_CASE("a planted product takes an increment step") {
  auto set = io::read_set(kGolden + "planted_5_1.txt");
  auto cube = io::make_cube(set.p, set.n);
  PipelineConfig cfg;
  auto tr = run_pipeline(cube, set.A, cfg);
  REQUIRE(tr.iterations.size() >= 2);
  auto& first = tr.iterations[0];
  CHECK(first.outcome == "not_uniform");
  CHECK(first.branch >= 1);
  CHECK(first.dA_increment > first.dA);
  CHECK(tr.iterations[1].dA > first.dA);
  CHECK(tr.subset_ok);
  CHECK(tr.density_monotone);
  for (std::size_t m = 1; m < tr.iterations.size(); ++m)
    CHECK(tr.iterations[m].dA > tr.iterations[m - 1].dA);
}

TEST_CASE("runs are deterministic and match the golden trace") {
  auto set = io::read_set(kGolden + "planted_5_1.txt");
  auto cube = io::make_cube(set.p, set.n);
  PipelineConfig cfg;
  auto a = io::to_json(run_pipeline(cube, set.A, cfg));
  auto b = io::to_json(run_pipeline(cube, set.A, cfg));
  CHECK(a == b);
  auto golden = io::read_json(kGolden + "planted_5_1.trace.json");
  CHECK(a.dump() == io::Json(golden).dump());
}

TEST_CASE("pipeline preconditions") {
  auto cube = io::make_cube(5, 1);
  PipelineConfig cfg;
  CHECK_THROWS_AS(run_pipeline(cube, Bits(cube->size()), cfg), PreconditionError);
  CHECK_THROWS_AS(run_pipeline(cube, Bits(10, true), cfg), PreconditionError);
  cfg.kappa = 0;
  CHECK_THROWS_AS(run_pipeline(cube, Bits(cube->size(), true), cfg), PreconditionError);
}
