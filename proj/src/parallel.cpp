#include "lf/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lf {

namespace {
std::atomic<int> g_jobs{1};
}

int default_jobs() { return g_jobs.load(); }
void set_default_jobs(int jobs) { g_jobs.store(jobs < 1 ? 1 : jobs); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int jobs) {
  if (jobs <= 0) jobs = default_jobs();
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::size_t err_index = n;
  std::mutex err_mu;
  auto work = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        // keep the lowest failing index so the reported error is stable
        std::lock_guard<std::mutex> lk(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  int k = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(jobs)));
  for (int t = 1; t < k; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace lf
