#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gridlayout/core_model.hpp"

namespace httplib {
class Server;
}

namespace gridlayout::service {

using Json = nlohmann::ordered_json;

enum class Mode { Explore, Complete, Nearby, Constrained };
const char* to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

/// Failure of a request: HTTP status plus a JSON error body.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message, Json details = Json::object())
      : std::runtime_error(message), status_(status), code_(std::move(code)), details_(std::move(details)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  Json body() const;

 private:
  int status_;
  std::string code_;
  Json details_;
};

struct SuggestRequest {
  Mode mode = Mode::Explore;
  int k = 5;
  int radius = 2;
  std::string seed_solution_id;
  std::optional<double> time_limit;  // seconds
};

/// One entry of a job's append-only log. `seq` starts at 1.
struct Event {
  long seq = 0;
  std::string type;  // "solution" or "summary"
  Json data;
};

struct ServiceOptions {
  int workers = 2;             // concurrent jobs
  std::string snapshot_path;   // sessions are restored from / saved to this file when set
  long per_solve_nodes = 400;
  int solver_threads = 0;      // per job; 0 splits the hardware threads between workers
};

/// Sessions, suggestion jobs on a bounded worker pool, event logs and the
/// saved-design timeline. Thread-safe.
class SuggestionService {
 public:
  explicit SuggestionService(ServiceOptions options = {});
  ~SuggestionService();
  SuggestionService(const SuggestionService&) = delete;
  SuggestionService& operator=(const SuggestionService&) = delete;

  /// Throws ApiError 422 with the violations when the problem is invalid.
  std::string create_session(const LayoutProblem& problem);
  /// Replaces the problem and cancels the active job, if any.
  void replace_problem(const std::string& session, const LayoutProblem& problem);
  Json describe_session(const std::string& session) const;

  /// Queues a job; 409 while another job of the session is active.
  std::string suggest(const std::string& session, const SuggestRequest& request);
  Json describe_job(const std::string& session, const std::string& job) const;
  /// Events with seq > after_seq, waiting up to `wait` for the first one.
  /// `finished` is set once the log holds its summary and nothing newer
  /// than the returned events remains.
  std::vector<Event> events(const std::string& session, const std::string& job, long after_seq,
                            std::chrono::milliseconds wait, bool& finished) const;
  /// Cooperative cancel; the job ends with a "cancelled" summary.
  void cancel(const std::string& session, const std::string& job);

  /// Appends to the timeline; origin is user, optimiser or edited.
  Json save(const std::string& session, const LayoutSolution& solution, const std::string& origin);
  /// Saves a layout the session already knows by id (streamed or saved).
  Json save_emitted(const std::string& session, const std::string& solution_id, const std::string& origin);
  Json timeline(const std::string& session) const;

  void write_snapshot() const;
  void read_snapshot();

 private:
  struct Job;
  struct Session;

  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<Job> find_job(const Session& s, const std::string& id) const;
  void run_job(const std::shared_ptr<Session>& session, const std::shared_ptr<Job>& job);
  void worker_loop();

  ServiceOptions options_;
  mutable std::mutex mutex_;  // sessions_ and counters
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  long next_session_ = 1;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Binds the REST surface (sessions, suggest, event streams, saved designs)
/// to an HTTP server.
void register_routes(httplib::Server& server, SuggestionService& service);

}  // namespace gridlayout::service
