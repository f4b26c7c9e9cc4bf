#include "hessvar/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace hessvar {

namespace {

constexpr std::size_t kChunks = 64;
constexpr std::size_t kMinChunk = 256;

std::atomic<int> configured{0};

int default_threads() {
  if (const char* env = std::getenv("HESSVAR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 256L));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::size_t chunk_count(std::size_t count) {
  return std::max<std::size_t>(1, std::min(kChunks, count / kMinChunk));
}

template <class Body>
void run_chunks(std::size_t chunks, const Body& body) {
  const int threads = std::min<int>(thread_count(), static_cast<int>(chunks));
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) body(c);
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
}

}  // namespace

void set_thread_count(int threads) { configured = threads < 0 ? 0 : threads; }

int thread_count() {
  const int c = configured.load();
  return c > 0 ? c : default_threads();
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t chunks = chunk_count(count);
  run_chunks(chunks, [&](std::size_t c) { fn(c * count / chunks, (c + 1) * count / chunks); });
}

double parallel_sum(std::size_t count, const std::function<double(std::size_t, std::size_t)>& fn) {
  if (count == 0) return 0.0;
  const std::size_t chunks = chunk_count(count);
  std::vector<double> partial(chunks, 0.0);
  run_chunks(chunks, [&](std::size_t c) { partial[c] = fn(c * count / chunks, (c + 1) * count / chunks); });
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

double parallel_max(std::size_t count, const std::function<double(std::size_t, std::size_t)>& fn) {
  if (count == 0) return -std::numeric_limits<double>::infinity();
  const std::size_t chunks = chunk_count(count);
  std::vector<double> partial(chunks, 0.0);
  run_chunks(chunks, [&](std::size_t c) { partial[c] = fn(c * count / chunks, (c + 1) * count / chunks); });
  return *std::max_element(partial.begin(), partial.end());
}

}  // namespace hessvar
