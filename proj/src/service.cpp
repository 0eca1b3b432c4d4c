#include "gridlayout/service.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>

#include "gridlayout/diversifier.hpp"
#include "gridlayout/io.hpp"

namespace gridlayout::service {

namespace {

Json violations_json(const std::vector<Violation>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) out.push_back({{"kind", to_string(v.kind)}, {"field", v.field}, {"message", v.message}});
  return out;
}

Json solution_json(const LayoutSolution& s) { return Json::parse(dump_solution(s)); }

Json bounds_json(const Bounds& b) {
  return {{"gammaMin", b.gamma_min}, {"gammaMax", b.gamma_max}, {"piMin", b.pi_min},  {"piMax", b.pi_max},
          {"epsMin", b.eps_min},     {"rectMin", b.rect_min},   {"epsCap", b.eps_cap}, {"proven", b.proven}};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

bool valid_origin(const std::string& o) { return o == "user" || o == "optimiser" || o == "edited"; }

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Explore: return "explore";
    case Mode::Complete: return "complete";
    case Mode::Nearby: return "nearby";
    case Mode::Constrained: return "constrained";
  }
  return "explore";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (Mode m : {Mode::Explore, Mode::Complete, Mode::Nearby, Mode::Constrained})
    if (text == to_string(m)) return m;
  return std::nullopt;
}

Json ApiError::body() const {
  Json e = {{"code", code_}, {"message", what()}};
  for (const auto& [k, v] : details_.items()) e[k] = v;
  return {{"error", e}};
}

struct SuggestionService::Job {
  std::string id;
  SuggestRequest request;
  LayoutProblem problem;
  std::optional<LayoutSolution> seed;
  std::atomic<bool> cancel{false};

  mutable std::mutex mutex;
  mutable std::condition_variable cv;
  std::vector<Event> log;
  std::string status = "queued";
  bool finished = false;
  std::atomic<int> emitted{0};

  void append(std::string type, Json data) {
    {
      std::lock_guard lock(mutex);
      Event e;
      e.seq = static_cast<long>(log.size()) + 1;
      e.type = std::move(type);
      e.data = std::move(data);
      e.data["seq"] = e.seq;
      log.push_back(std::move(e));
    }
    cv.notify_all();
  }
};

struct SuggestionService::Session {
  std::string id;
  mutable std::mutex mutex;
  LayoutProblem problem;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::string active;  // job id while one is queued or running
  std::map<std::string, LayoutSolution> solutions;  // emitted and saved, by id
  std::vector<Json> saved;
  long next_job = 1, next_solution = 1, next_saved = 1;
};

SuggestionService::SuggestionService(ServiceOptions options) : options_(std::move(options)) {
  const int workers = std::max(1, options_.workers);
  if (options_.solver_threads <= 0) {
    const int hw = std::max(1u, std::thread::hardware_concurrency());
    options_.solver_threads = std::max(1, hw / workers);
  }
  if (!options_.snapshot_path.empty() && std::filesystem::exists(options_.snapshot_path)) read_snapshot();
  for (int i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

SuggestionService::~SuggestionService() {
  {
    std::lock_guard lock(mutex_);
    for (auto& [_, s] : sessions_) {
      std::lock_guard sl(s->mutex);
      for (auto& [_, j] : s->jobs) j->cancel = true;
    }
  }
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& w : workers_) w.join();
  if (!options_.snapshot_path.empty()) {
    try {
      write_snapshot();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "snapshot failed: %s\n", e.what());
    }
  }
}

void SuggestionService::worker_loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      // Queued jobs still run (already cancelled) so their streams end.
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

std::shared_ptr<SuggestionService::Session> SuggestionService::find_session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ApiError(404, "UnknownSession", "no session '" + id + "'");
  return it->second;
}

std::shared_ptr<SuggestionService::Job> SuggestionService::find_job(const Session& s, const std::string& id) const {
  std::lock_guard lock(s.mutex);
  auto it = s.jobs.find(id);
  if (it == s.jobs.end()) throw ApiError(404, "UnknownJob", "no job '" + id + "' in session '" + s.id + "'");
  return it->second;
}

std::string SuggestionService::create_session(const LayoutProblem& problem) {
  const auto issues = validate_problem(problem);
  if (!issues.empty())
    throw ApiError(422, "InvalidProblem", "the problem is not valid", {{"violations", violations_json(issues)}});
  auto s = std::make_shared<Session>();
  s->problem = problem;
  std::lock_guard lock(mutex_);
  s->id = "session-" + std::to_string(next_session_++);
  sessions_[s->id] = s;
  return s->id;
}

void SuggestionService::replace_problem(const std::string& session, const LayoutProblem& problem) {
  const auto issues = validate_problem(problem);
  if (!issues.empty())
    throw ApiError(422, "InvalidProblem", "the problem is not valid", {{"violations", violations_json(issues)}});
  auto s = find_session(session);
  std::lock_guard lock(s->mutex);
  s->problem = problem;
  if (!s->active.empty()) s->jobs.at(s->active)->cancel = true;
}

Json SuggestionService::describe_session(const std::string& session) const {
  auto s = find_session(session);
  std::lock_guard lock(s->mutex);
  Json out = {{"sessionId", s->id}, {"problem", Json::parse(dump_problem(s->problem))}};
  out["activeJob"] = s->active.empty() ? Json(nullptr) : Json(s->active);
  out["saved"] = s->saved.size();
  return out;
}

std::string SuggestionService::suggest(const std::string& session, const SuggestRequest& request) {
  if (request.k < 1 || request.k > 50) throw ApiError(422, "InvalidRequest", "k must lie in 1..50");
  if (request.radius < 1) throw ApiError(422, "InvalidRequest", "radius must be at least 1");
  if (request.time_limit && !(*request.time_limit > 0))
    throw ApiError(422, "InvalidRequest", "timeLimit must be positive");
  auto s = find_session(session);
  auto job = std::make_shared<Job>();
  job->request = request;
  {
    std::lock_guard lock(s->mutex);
    if (!s->active.empty())
      throw ApiError(409, "JobActive", "job '" + s->active + "' is still running", {{"jobId", s->active}});
    job->problem = s->problem;
    if (request.mode == Mode::Nearby) {
      if (request.seed_solution_id.empty())
        throw ApiError(422, "InvalidRequest", "nearby needs seedSolutionId");
      auto it = s->solutions.find(request.seed_solution_id);
      if (it == s->solutions.end())
        throw ApiError(404, "UnknownSolution", "no solution '" + request.seed_solution_id + "'");
      std::vector<Violation> issues;
      try {
        issues = validate_solution(job->problem, it->second);
      } catch (const LayoutError& e) {
        throw ApiError(422, "InvalidSeed", e.what());
      }
      if (!issues.empty())
        throw ApiError(422, "InvalidSeed", "the seed layout is not valid for the current problem",
                       {{"violations", violations_json(issues)}});
      job->seed = it->second;
    }
    job->id = "job-" + std::to_string(s->next_job++);
    s->jobs[job->id] = job;
    s->active = job->id;
  }
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back([this, s, job] { run_job(s, job); });
  }
  queue_cv_.notify_one();
  return job->id;
}

void SuggestionService::run_job(const std::shared_ptr<Session>& session, const std::shared_ptr<Job>& job) {
  const auto& req = job->request;
  const auto& p = job->problem;
  {
    std::lock_guard lock(job->mutex);
    job->status = "running";
  }
  Json bound = nullptr;
  int rejected = 0;

  DiversifyConfig cfg;
  cfg.count = req.k;
  cfg.per_solve_nodes = options_.per_solve_nodes;
  cfg.threads = options_.solver_threads;
  if (req.time_limit) cfg.time_budget = std::chrono::duration<double>(*req.time_limit);
  cfg.should_stop = [&job] { return job->cancel.load(); };
  cfg.on_bounds = [&bound](const Bounds& b) { bound = bounds_json(b); };
  // Every pooled layout is checked and streamed, up to k of them.
  cfg.on_solution = [&](const LayoutSolution& s) {
    if (job->emitted >= req.k) return;
    if (!validate_solution(p, s).empty()) {
      ++rejected;
      return;
    }
    std::string id;
    {
      std::lock_guard lock(session->mutex);
      id = "sol-" + std::to_string(session->next_solution++);
      session->solutions[id] = s;
    }
    ++job->emitted;
    Json data = {{"solutionId", id}, {"solution", solution_json(s)}};
    data["stats"] = data["solution"]["stats"];
    job->append("solution", std::move(data));
  };

  std::string status = "completed";
  Json error = nullptr;
  try {
    if (job->cancel) {
      status = "cancelled";
    } else {
      switch (req.mode) {
        case Mode::Explore:
        case Mode::Constrained: diversify(p, cfg); break;
        case Mode::Complete: complete_partial(p, req.k, cfg); break;
        case Mode::Nearby: nearby(p, *job->seed, req.radius, req.k, cfg); break;
      }
    }
  } catch (const TimeBudgetExhausted&) {
    status = "timeout";
  } catch (const LayoutError& e) {
    status = e.kind() == ErrorKind::InfeasibleProblem ? "infeasible" : "failed";
    error = {{"kind", gridlayout::to_string(e.kind())}, {"message", e.what()}};
  } catch (const std::exception& e) {
    status = "failed";
    error = {{"kind", "InternalError"}, {"message", e.what()}};
  }
  if (job->cancel && status != "failed") status = "cancelled";

  Json summary = {{"status", status}, {"bound", bound}, {"count", job->emitted.load()}};
  if (rejected) summary["rejected"] = rejected;
  if (!error.is_null()) summary["error"] = error;
  {
    std::lock_guard lock(session->mutex);
    if (session->active == job->id) session->active.clear();
  }
  job->append("summary", std::move(summary));
  {
    std::lock_guard lock(job->mutex);
    job->status = status;
    job->finished = true;
  }
  job->cv.notify_all();
}

Json SuggestionService::describe_job(const std::string& session, const std::string& job) const {
  auto s = find_session(session);
  auto j = find_job(*s, job);
  std::lock_guard lock(j->mutex);
  Json out = {{"jobId", j->id}, {"mode", to_string(j->request.mode)}, {"k", j->request.k}, {"status", j->status}};
  out["count"] = j->emitted.load();
  out["lastSeq"] = static_cast<long>(j->log.size());
  return out;
}

std::vector<Event> SuggestionService::events(const std::string& session, const std::string& job, long after_seq,
                                             std::chrono::milliseconds wait, bool& finished) const {
  auto s = find_session(session);
  auto j = find_job(*s, job);
  std::unique_lock lock(j->mutex);
  after_seq = std::max(after_seq, 0L);
  j->cv.wait_for(lock, wait, [&] { return static_cast<long>(j->log.size()) > after_seq || j->finished; });
  std::vector<Event> out;
  for (auto i = static_cast<std::size_t>(std::min<long>(after_seq, j->log.size())); i < j->log.size(); ++i)
    out.push_back(j->log[i]);
  finished = j->finished;
  return out;
}

void SuggestionService::cancel(const std::string& session, const std::string& job) {
  auto s = find_session(session);
  auto j = find_job(*s, job);
  j->cancel = true;
}

Json SuggestionService::save(const std::string& session, const LayoutSolution& solution, const std::string& origin) {
  if (!valid_origin(origin)) throw ApiError(422, "InvalidRequest", "origin must be user, optimiser or edited");
  auto s = find_session(session);
  std::lock_guard lock(s->mutex);
  std::vector<Violation> issues;
  try {
    issues = validate_solution(s->problem, solution);
  } catch (const LayoutError& e) {
    throw ApiError(422, "InvalidSolution", e.what());
  }
  if (!issues.empty())
    throw ApiError(422, "InvalidSolution", "the layout is not valid for the current problem",
                   {{"violations", violations_json(issues)}});
  const std::string id = "saved-" + std::to_string(s->next_saved++);
  Json entry = {{"id", id}, {"timestamp", utc_now()}, {"solution", solution_json(solution)}, {"origin", origin}};
  s->saved.push_back(entry);
  s->solutions[id] = solution;
  return entry;
}

Json SuggestionService::save_emitted(const std::string& session, const std::string& solution_id,
                                     const std::string& origin) {
  LayoutSolution solution;
  {
    auto s = find_session(session);
    std::lock_guard lock(s->mutex);
    auto it = s->solutions.find(solution_id);
    if (it == s->solutions.end()) throw ApiError(404, "UnknownSolution", "no solution '" + solution_id + "'");
    solution = it->second;
  }
  return save(session, solution, origin);
}

Json SuggestionService::timeline(const std::string& session) const {
  auto s = find_session(session);
  std::lock_guard lock(s->mutex);
  return {{"sessionId", s->id}, {"items", s->saved}};
}

void SuggestionService::write_snapshot() const {
  Json doc = {{"version", 1}};
  Json list = Json::array();
  {
    std::lock_guard lock(mutex_);
    doc["nextSession"] = next_session_;
    for (const auto& [id, s] : sessions_) {
      std::lock_guard sl(s->mutex);
      list.push_back({{"id", id},
                      {"problem", Json::parse(dump_problem(s->problem))},
                      {"saved", s->saved},
                      {"nextJob", s->next_job},
                      {"nextSolution", s->next_solution},
                      {"nextSaved", s->next_saved}});
    }
  }
  doc["sessions"] = list;
  const std::filesystem::path file = options_.snapshot_path;
  const auto tmp = file.string() + ".tmp";
  write_text(tmp, doc.dump(2) + "\n");
  std::filesystem::rename(tmp, file);
}

void SuggestionService::read_snapshot() {
  const auto doc = Json::parse(read_text(options_.snapshot_path));
  std::lock_guard lock(mutex_);
  next_session_ = doc.value("nextSession", 1L);
  for (const auto& item : doc.at("sessions")) {
    auto s = std::make_shared<Session>();
    s->id = item.at("id").get<std::string>();
    s->problem = parse_problem(item.at("problem").dump());
    s->next_job = item.value("nextJob", 1L);
    s->next_solution = item.value("nextSolution", 1L);
    s->next_saved = item.value("nextSaved", 1L);
    for (const auto& entry : item.at("saved")) {
      s->saved.push_back(entry);
      s->solutions[entry.at("id").get<std::string>()] = parse_solution(entry.at("solution").dump());
    }
    sessions_[s->id] = s;
  }
}

}  // namespace gridlayout::service
