#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdio>

#include "boxcorner/partition.hpp"
#include "gen.hpp"

// Every suite fails when a stopping monitor passed its cap outside the
// deliberate overflow tests.
int main(int argc, char** argv) {
  doctest::Context ctx(argc, argv);
  int rc = ctx.run();
  if (ctx.shouldExit()) return rc;
  auto led = bc::StoppingMonitor::ledger();
  int stray = led.violations - bc::testgen::deliberate_overflows();
  if (stray != 0) {
    std::fprintf(stderr, "stopping monitor caps exceeded %d time(s)\n", stray);
    return rc ? rc : 1;
  }
  return rc;
}
