#include "bplp/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>

#include "bplp/parallel.hpp"

namespace bplp {

namespace {
std::atomic<LogLevel> g_level{LogLevel::info};
std::mutex g_mutex;
constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, const std::string& message) {
  if (level < g_level.load() || level == LogLevel::off) return;
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "[bplp %s] %s\n", kNames[static_cast<int>(level)], message.c_str());
}

int configure_workers_from_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("BPLP_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
  return worker_count();
}

}  // namespace bplp
