#include <atomic>
#include <exception>
#include <thread>

#include "cli.hpp"

namespace shearstab::cli {

WorkerPool::WorkerPool(int workers) : workers_(workers < 1 ? 1 : workers) {}

void WorkerPool::run(std::vector<std::function<void()>>& tasks) const {
  const int n = std::min<int>(workers_, static_cast<int>(tasks.size()));
  if (n <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int k = 0; k < n; ++k) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace shearstab::cli
