#include "boxcorner/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>

namespace bc {

namespace {
int initial_workers() {
  if (const char* e = std::getenv("BOXCORNER_WORKERS")) {
    int w = std::atoi(e);
    if (w > 0) return w;
  }
  return 1;
}
std::atomic<int> g_workers{initial_workers()};
thread_local bool t_inside = false;
}  // namespace

int workers() { return g_workers.load(); }
void set_workers(int w) { g_workers.store(std::max(1, w)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  int w = workers();
  // nested calls run inline
  if (w <= 1 || n < 2 || t_inside) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(w), n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto run = [&] {
    t_inside = true;
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        next.store(n);
      }
    }
    t_inside = false;
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nt; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace bc
