#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace aroc {

using SampleId = std::uint32_t;
using ClusterId = std::uint32_t;

/// Bad parameters or inputs that fail validation (CLI exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents (CLI exit code 3).
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A caller broke an operation's precondition (CLI exit code 3).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> value{0};
  return value;
}

}  // namespace detail

/// Worker count used by the parallel loops. 0 means "pick a default":
/// AROC_THREADS from the environment, else hardware concurrency.
inline void set_num_threads(unsigned n) { detail::thread_setting() = n; }

inline unsigned num_threads() {
  unsigned n = detail::thread_setting();
  if (n != 0) return n;
  if (const char* env = std::getenv("AROC_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunking is a
/// pure function of count, so results written by index do not depend on the
/// number of threads.
template <typename Body>
void parallel_for_chunks(std::size_t count, std::size_t chunk, Body&& body) {
  if (count == 0) return;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t num_chunks = (count + chunk - 1) / chunk;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(num_threads(), num_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < num_chunks; ++c)
      body(c * chunk, std::min(count, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= num_chunks) return;
      try {
        body(c * chunk, std::min(count, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = num_chunks;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 0; t + 1 < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t chunk = std::max<std::size_t>(1, std::min<std::size_t>(1024, count / 64 + 1));
  parallel_for_chunks(count, chunk, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) body(i);
  });
}

}  // namespace aroc
