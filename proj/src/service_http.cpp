#include <algorithm>
#include <atomic>
#include <cstdio>

#include <httplib.h>

#include "gridlayout/io.hpp"
#include "gridlayout/service.hpp"

namespace gridlayout::service {

namespace {

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::string diagnostic_id() {
  static std::atomic<unsigned long> counter{0};
  const auto t = std::chrono::system_clock::now().time_since_epoch().count();
  char buf[40];
  std::snprintf(buf, sizeof buf, "diag-%lx-%lu", static_cast<unsigned long>(t) & 0xffffffUL, ++counter);
  return buf;
}

void internal_error(httplib::Response& res, const char* what) {
  const auto id = diagnostic_id();
  std::fprintf(stderr, "[%s] internal error: %s\n", id.c_str(), what);
  send(res, 500, {{"error", {{"code", "InternalError"}, {"message", "internal error"}, {"diagnosticId", id}}}});
}

// Runs a handler body and maps failures onto status codes.
template <class F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const ApiError& e) {
    send(res, e.status(), e.body());
  } catch (const ParseError& e) {
    send(res, 422, ApiError(422, "ParseError", e.what(), {{"path", e.path()}}).body());
  } catch (const LayoutError& e) {
    send(res, 422, ApiError(422, to_string(e.kind()), e.what()).body());
  } catch (const std::exception& e) {
    internal_error(res, e.what());
  }
}

Json body_json(const httplib::Request& req) {
  try {
    auto j = Json::parse(req.body);
    if (!j.is_object()) throw ApiError(422, "InvalidRequest", "the request body must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    throw ApiError(422, "MalformedJson", e.what(), {{"byte", e.byte}});
  }
}

void only_keys(const Json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [k, _] : j.items())
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
      throw ApiError(422, "InvalidRequest", "unknown field '" + k + "'", {{"path", "$." + k}});
}

// The problem document nested under "problem"; paths are reported from the body root.
LayoutProblem problem_of(const Json& body) {
  only_keys(body, {"problem"});
  if (!body.contains("problem") || !body["problem"].is_object())
    throw ApiError(422, "InvalidRequest", "missing problem object", {{"path", "$.problem"}});
  try {
    return parse_problem(body["problem"].dump(2));
  } catch (const ParseError& e) {
    throw ApiError(422, "ParseError", e.what(), {{"path", "$.problem" + e.path().substr(1)}});
  }
}

LayoutSolution solution_of(const Json& j) {
  try {
    return parse_solution(j.dump(2));
  } catch (const ParseError& e) {
    throw ApiError(422, "ParseError", e.what(), {{"path", "$.solution" + e.path().substr(1)}});
  }
}

template <class T>
T field(const Json& j, const char* key, const char* type_name, bool (Json::*is)() const noexcept) {
  const auto& v = j.at(key);
  if (!(v.*is)()) throw ApiError(422, "InvalidRequest", std::string(key) + " must be " + type_name, {{"path", std::string("$.") + key}});
  return v.get<T>();
}

SuggestRequest suggest_of(const Json& j) {
  only_keys(j, {"mode", "k", "radius", "seedSolutionId", "timeLimit"});
  SuggestRequest r;
  if (j.contains("mode")) {
    const auto text = field<std::string>(j, "mode", "a string", &Json::is_string);
    const auto mode = parse_mode(text);
    if (!mode)
      throw ApiError(422, "InvalidRequest", "mode must be explore, complete, nearby or constrained", {{"path", "$.mode"}});
    r.mode = *mode;
  }
  if (j.contains("k")) r.k = field<int>(j, "k", "an integer", &Json::is_number_integer);
  if (j.contains("radius")) r.radius = field<int>(j, "radius", "an integer", &Json::is_number_integer);
  if (j.contains("seedSolutionId"))
    r.seed_solution_id = field<std::string>(j, "seedSolutionId", "a string", &Json::is_string);
  if (j.contains("timeLimit")) r.time_limit = field<double>(j, "timeLimit", "a number", &Json::is_number);
  return r;
}

long after_seq_of(const httplib::Request& req) {
  std::string text;
  if (req.has_param("afterSeq"))
    text = req.get_param_value("afterSeq");
  else if (req.has_header("Last-Event-ID"))
    text = req.get_header_value("Last-Event-ID");
  if (text.empty()) return 0;
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw ApiError(422, "InvalidRequest", "afterSeq must be a non-negative integer", {{"path", "afterSeq"}});
}

std::string frame(const Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

}  // namespace

void register_routes(httplib::Server& server, SuggestionService& service) {
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      internal_error(res, e.what());
    } catch (...) {
      internal_error(res, "unknown exception");
    }
  });

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send(res, 200, {{"status", "ok"}}); });

  server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 201, {{"sessionId", service.create_session(problem_of(body_json(req)))}}); });
  });

  server.Get("/sessions/:id", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, service.describe_session(req.path_params.at("id"))); });
  });

  server.Put("/sessions/:id/problem", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& id = req.path_params.at("id");
      service.replace_problem(id, problem_of(body_json(req)));
      send(res, 200, service.describe_session(id));
    });
  });

  server.Post("/sessions/:id/suggest", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto job = service.suggest(req.path_params.at("id"), suggest_of(body_json(req)));
      send(res, 202, {{"jobId", job}});
    });
  });

  server.Get("/sessions/:id/jobs/:job", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, service.describe_job(req.path_params.at("id"), req.path_params.at("job"))); });
  });

  server.Delete("/sessions/:id/jobs/:job", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& id = req.path_params.at("id");
      const auto& job = req.path_params.at("job");
      service.cancel(id, job);
      send(res, 202, service.describe_job(id, job));
    });
  });

  server.Get("/sessions/:id/jobs/:job/events", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.path_params.at("id");
      const std::string job = req.path_params.at("job");
      service.describe_job(id, job);
      long after = after_seq_of(req);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [&service, id, job, after, idle = 0](std::size_t, httplib::DataSink& sink) mutable {
            bool finished = false;
            std::vector<Event> batch;
            try {
              batch = service.events(id, job, after, std::chrono::milliseconds(500), finished);
            } catch (const std::exception&) {
              sink.done();
              return true;
            }
            for (const auto& e : batch) {
              const auto text = frame(e);
              if (!sink.write(text.data(), text.size())) return false;
              after = e.seq;
            }
            if (finished) {
              sink.done();
            } else if (batch.empty() && ++idle % 30 == 0) {
              static constexpr char kPing[] = ": keep-alive\n\n";
              if (!sink.write(kPing, sizeof kPing - 1)) return false;
            }
            return true;
          });
    });
  });

  server.Post("/sessions/:id/saved", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto& id = req.path_params.at("id");
      const auto body = body_json(req);
      only_keys(body, {"solution", "solutionId", "origin"});
      std::string origin = "user";
      if (body.contains("origin")) origin = field<std::string>(body, "origin", "a string", &Json::is_string);
      Json entry;
      if (body.contains("solution")) {
        entry = service.save(id, solution_of(body["solution"]), origin);
      } else if (body.contains("solutionId")) {
        const auto sid = field<std::string>(body, "solutionId", "a string", &Json::is_string);
        if (!body.contains("origin")) origin = "optimiser";
        entry = service.save_emitted(id, sid, origin);
      } else {
        throw ApiError(422, "InvalidRequest", "give a solution or a solutionId", {{"path", "$"}});
      }
      send(res, 201, entry);
    });
  });

  server.Get("/sessions/:id/saved", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, service.timeline(req.path_params.at("id"))); });
  });
}

}  // namespace gridlayout::service
