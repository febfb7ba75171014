#include "atcor/common/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace atcor::log {

namespace {

std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

void stderr_sink(Level level, std::string_view message) {
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

Sink& sink_ref() {
  static Sink sink = stderr_sink;
  return sink;
}

}  // namespace

void set_level(Level l) { g_level.store(l); }
Level level() { return g_level.load(); }

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  auto prev = std::move(sink_ref());
  sink_ref() = sink ? std::move(sink) : Sink(stderr_sink);
  return prev;
}

void write(Level l, std::string_view message) {
  if (static_cast<int>(l) < static_cast<int>(g_level.load())) return;
  std::lock_guard lock(g_mutex);
  sink_ref()(l, message);
}

}  // namespace atcor::log
