#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "rdfviews/service.hpp"

namespace rdfviews::service {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_session:
    case ErrorCode::unknown_job:
    case ErrorCode::unknown_query:
    case ErrorCode::unknown_view:
    case ErrorCode::unknown_id:
      return 404;
    case ErrorCode::job_in_progress:
    case ErrorCode::not_materialized:
      return 409;
    case ErrorCode::io:
      return 500;
    default:
      return 400;
  }
}

namespace detail {

inline void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, {{"error", std::string(to_string(code))}, {"message", message}}, http_status(code));
}

/// Wraps a handler so library errors become JSON error responses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const Json::exception& e) {
      send_error(res, ErrorCode::syntax, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::io, e.what());
    }
  };
}

inline Json body_json(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::syntax, std::string("request body: ") + e.what());
  }
}

inline std::size_t cursor_param(const httplib::Request& req) {
  if (!req.has_param("cursor")) return 0;
  const auto& text = req.get_param_value("cursor");
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw Error(ErrorCode::syntax, "cursor must be a non-negative integer");
  return std::stoull(text);
}

}  // namespace detail

/// Installs the session routes on `server`.
inline void register_routes(httplib::Server& server, SessionManager& sessions) {
  using detail::guarded;
  using detail::send_json;
  using Req = httplib::Request;
  using Res = httplib::Response;
  auto session = [&sessions](const Req& req) { return sessions.get(req.path_params.at("id")); };

  server.Get("/health", [](const Req&, Res& res) { send_json(res, {{"status", "ok"}}); });

  server.Get("/sessions", guarded([&sessions](const Req&, Res& res) { send_json(res, {{"sessions", sessions.list()}}); }));

  server.Post("/sessions", guarded([&sessions](const Req&, Res& res) {
                send_json(res, sessions.create()->describe(), 201);
              }));

  server.Get("/sessions/:id", guarded([session](const Req& req, Res& res) { send_json(res, session(req)->describe()); }));

  server.Post("/sessions/:id/dataset", guarded([session](const Req& req, Res& res) {
                send_json(res, session(req)->upload_dataset(req.body));
              }));

  server.Post("/sessions/:id/schema", guarded([session](const Req& req, Res& res) {
                send_json(res, session(req)->upload_schema(req.body));
              }));

  server.Put("/sessions/:id/workload", guarded([session](const Req& req, Res& res) {
               send_json(res, session(req)->upload_workload(req.body));
             }));

  server.Post("/sessions/:id/search", guarded([session](const Req& req, Res& res) {
                auto config = search_config_from_json(detail::body_json(req));
                auto job = session(req)->start_search(config);
                send_json(res, {{"job", job}}, 202);
              }));

  server.Get("/sessions/:id/search/:job/progress", guarded([session](const Req& req, Res& res) {
               send_json(res, session(req)->search_progress(req.path_params.at("job"), detail::cursor_param(req)));
             }));

  server.Get("/sessions/:id/search/:job/result", guarded([session](const Req& req, Res& res) {
               send_json(res, session(req)->result(req.path_params.at("job")));
             }));

  server.Post("/sessions/:id/materialize", guarded([session](const Req& req, Res& res) {
                auto body = detail::body_json(req);
                std::optional<std::string> job;
                if (body.contains("job")) job = body.at("job").get<std::string>();
                send_json(res, session(req)->materialize(job));
              }));

  server.Post("/sessions/:id/query", guarded([session](const Req& req, Res& res) {
                auto body = detail::body_json(req);
                if (!body.contains("name") || !body.at("name").is_string())
                  throw Error(ErrorCode::syntax, "query request needs a string \"name\"");
                auto mode = parse_query_mode(body.value("mode", std::string("views")));
                send_json(res, session(req)->query(body.at("name").get<std::string>(), mode));
              }));

  server.Get("/sessions/:id/export/sql", guarded([session](const Req& req, Res& res) {
               std::optional<std::string> job;
               if (req.has_param("job")) job = req.get_param_value("job");
               res.set_content(session(req)->export_sql(job), "text/plain");
             }));

  server.Get("/sessions/:id/export/dictionary", guarded([session](const Req& req, Res& res) {
               res.set_content(session(req)->export_dictionary(), "text/tab-separated-values");
             }));
}

/// Splits "host:port"; a bare port binds to 127.0.0.1.
inline std::pair<std::string, int> parse_listen(const std::string& listen) {
  auto colon = listen.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : listen.substr(0, colon);
  std::string port = colon == std::string::npos ? listen : listen.substr(colon + 1);
  if (port.empty() || port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5)
    throw Error(ErrorCode::invalid_config, "bad listen address '" + listen + "'");
  int p = std::stoi(port);
  if (p > 65535) throw Error(ErrorCode::invalid_config, "bad port in '" + listen + "'");
  return {host.empty() ? "127.0.0.1" : host, p};
}

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

/// Serves until the process is stopped. RDFVIEWS_LISTEN and
/// RDFVIEWS_DATA_DIR fill in whatever the caller leaves empty.
inline void serve(std::string listen, std::string data_dir) {
  if (listen.empty()) listen = env_or("RDFVIEWS_LISTEN", "127.0.0.1:8080");
  if (data_dir.empty()) data_dir = env_or("RDFVIEWS_DATA_DIR", "rdfviews-data");
  auto [host, port] = parse_listen(listen);
  SessionManager sessions(data_dir);
  httplib::Server server;
  register_routes(server, sessions);
  if (!server.listen(host, port)) throw Error(ErrorCode::io, "cannot listen on " + listen);
}

}  // namespace rdfviews::service
