// REST + SSE front end for layout suggestions.
//   PORT           listening port (8080)
//   SNAPSHOT_PATH  sessions are restored from and saved to this file
//   WORKERS        concurrent suggestion jobs (2)

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include <pthread.h>

#include <httplib.h>

#include "gridlayout/service.hpp"

namespace {

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long x = std::strtol(v, &end, 10);
  if (*end || x <= 0 || x > 65535) {
    std::fprintf(stderr, "ignoring %s=%s\n", name, v);
    return fallback;
  }
  return static_cast<int>(x);
}

}  // namespace

int main() {
  using namespace gridlayout::service;
  // Signals go to a waiting thread so shutdown runs outside a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions options;
  options.workers = env_int("WORKERS", 2);
  if (const char* p = std::getenv("SNAPSHOT_PATH")) options.snapshot_path = p;
  const int port = env_int("PORT", 8080);

  int code = 0;
  {
    SuggestionService service(options);
    httplib::Server server;
    register_routes(server, service);

    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      std::fprintf(stderr, "signal %d, shutting down\n", sig);
      server.stop();
    });

    std::fprintf(stderr, "listening on port %d with %d workers\n", port, options.workers);
    if (!server.listen("0.0.0.0", port)) {
      std::fprintf(stderr, "cannot listen on port %d\n", port);
      code = 1;
      pthread_kill(waiter.native_handle(), SIGTERM);
    }
    waiter.join();
  }
  return code;
}
