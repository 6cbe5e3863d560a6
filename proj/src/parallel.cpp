#include <capl/parallel.hpp>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace capl
{

unsigned worker_count()
{
  if (char const *env = std::getenv("CAPL_THREADS"))
  {
    try
    {
      int const n = std::stoi(env);
      if (n > 0)
        return static_cast<unsigned>(n);
    }
    catch (std::exception const &)
    {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::function<void(std::size_t, std::size_t)> const &fn)
{
  std::size_t const workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1)
  {
    if (n > 0)
      fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  std::size_t const chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w)
  {
    std::size_t const b = w * chunk;
    std::size_t const e = std::min(n, b + chunk);
    if (b < e)
      pool.emplace_back(fn, b, e);
  }
  fn(0, std::min(n, chunk));
  for (auto &t : pool)
    t.join();
}

} // namespace capl
