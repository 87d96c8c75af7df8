#pragma once

// HTTP/JSON front of BaselineService.
//
//   POST /sessions                  {evaluator_id, mode, seed?, plan?}      -> 201 session
//   GET  /sessions/{id}                                                     -> session
//   GET  /sessions/{id}/next                                                -> item or {"status":"complete"}
//   POST /sessions/{id}/answers     {index, key, view_duration_s, flags?}   -> progress | 409 | 422
//   GET  /assets/{asset_id}                                                 -> asset bytes
//   GET  /assets/{asset_id}/meta                                            -> asset sidecar
//   POST /curation/{scenario_id}    {evaluator_id?, verdict, note?}         -> 201 flag
//   GET  /curation[?scenario_id=]                                           -> {"flags": [...]}
//   GET  /export                                                            -> JSONL
//
// Errors are {"error": code, "message": text, ...detail}.

#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sceneval/service/service.hpp"

namespace sceneval {

namespace detail {

inline void send_json(httplib::Response &res, int status, const nlohmann::json &j) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

inline nlohmann::json request_json(const httplib::Request &req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw ServiceError(400, "invalid_request", "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error &e) {
    throw ServiceError(400, "invalid_json", e.what());
  }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request &req, httplib::Response &res) {
    try {
      f(req, res);
    } catch (const ServiceError &e) {
      send_json(res, e.status(), e.body());
    } catch (const nlohmann::json::exception &e) {
      send_json(res, 400, {{"error", "invalid_request"}, {"message", e.what()}});
    } catch (const ConfigError &e) {
      send_json(res, 400, {{"error", "invalid_request"}, {"message", e.what()}});
    } catch (const std::exception &e) {
      send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  };
}

} // namespace detail

/// Registers the API routes, plus a static mount for the UI bundle when given.
inline void install_routes(httplib::Server &server, BaselineService &service,
                           const std::optional<std::filesystem::path> &static_dir = std::nullopt) {
  using detail::guarded;
  using detail::send_json;

  server.Post("/sessions", guarded([&service](const httplib::Request &req, httplib::Response &res) {
                auto j = detail::request_json(req);
                std::optional<SessionPlan> plan;
                if (j.contains("plan") && !j["plan"].is_null()) plan = j["plan"].get<SessionPlan>();
                auto s = service.create_session(j.value("evaluator_id", std::string()),
                                                parse_view_mode(j.value("mode", std::string("collage"))), plan,
                                                j.value("seed", std::uint64_t{0}));
                send_json(res, 201, session_json(s));
              }));

  server.Get(R"(/sessions/([0-9a-f]+))", guarded([&service](const httplib::Request &req, httplib::Response &res) {
               send_json(res, 200, session_json(service.session(req.matches[1])));
             }));

  server.Get(R"(/sessions/([0-9a-f]+)/next)", guarded([&service](const httplib::Request &req, httplib::Response &res) {
               send_json(res, 200, service.next_item(req.matches[1]));
             }));

  server.Post(R"(/sessions/([0-9a-f]+)/answers)",
              guarded([&service](const httplib::Request &req, httplib::Response &res) {
                auto j = detail::request_json(req);
                if (!j.contains("index") || !j["index"].is_number_unsigned())
                  throw ServiceError(400, "invalid_request", "index (1-based item number) is required");
                if (!j.contains("key") || !j["key"].is_string())
                  throw ServiceError(400, "invalid_request", "key must be a string");
                SubmittedAnswer a;
                a.index = j["index"].get<std::size_t>();
                a.key = j["key"].get<std::string>();
                a.view_duration_s = j.value("view_duration_s", 0.0);
                for (const auto &f : j.value("flags", nlohmann::json::array())) {
                  CurationFlag flag;
                  flag.verdict = f.at("verdict").get<std::string>();
                  flag.note = f.value("note", std::string());
                  a.flags.push_back(std::move(flag));
                }
                send_json(res, 200, service.submit(req.matches[1], a));
              }));

  server.Get(R"(/assets/([A-Za-z0-9_\-]+)/meta)", guarded([&service](const httplib::Request &req, httplib::Response &res) {
               auto side = service.asset_sidecar(req.matches[1]);
               if (!side) throw ServiceError(404, "unknown_asset", "no asset '" + std::string(req.matches[1]) + "'");
               send_json(res, 200, *side);
             }));

  server.Get(R"(/assets/([A-Za-z0-9_\-]+))", guarded([&service](const httplib::Request &req, httplib::Response &res) {
               auto file = service.asset_file(req.matches[1]);
               if (!file) throw ServiceError(404, "unknown_asset", "no asset '" + std::string(req.matches[1]) + "'");
               res.status = 200;
               res.set_content(std::string(file->bytes.begin(), file->bytes.end()), file->mime);
             }));

  server.Post(R"(/curation/([^/]+))", guarded([&service](const httplib::Request &req, httplib::Response &res) {
                auto j = detail::request_json(req);
                CurationFlag f;
                f.scenario_id = req.matches[1];
                f.evaluator_id = j.value("evaluator_id", std::string());
                f.verdict = j.value("verdict", std::string());
                f.note = j.value("note", std::string());
                send_json(res, 201, service.flag(f));
              }));

  server.Get("/curation", guarded([&service](const httplib::Request &req, httplib::Response &res) {
               const auto filter = req.has_param("scenario_id") ? req.get_param_value("scenario_id") : std::string();
               send_json(res, 200, {{"flags", service.flags(filter)}});
             }));

  server.Get("/export", guarded([&service](const httplib::Request &, httplib::Response &res) {
               res.status = 200;
               res.set_content(service.export_jsonl(), "application/x-ndjson");
             }));

  if (static_dir && !server.set_mount_point("/ui", static_dir->string()))
    throw ConfigError("cannot mount static directory " + static_dir->string());
}

/// Server on a background thread, stopped on destruction.
class BackgroundServer {
public:
  BackgroundServer(BaselineService &service, const std::string &host = "127.0.0.1", int port = 0,
                   const std::optional<std::filesystem::path> &static_dir = std::nullopt) {
    install_routes(server_, service, static_dir);
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~BackgroundServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  BackgroundServer(const BackgroundServer &) = delete;
  BackgroundServer &operator=(const BackgroundServer &) = delete;

  int port() const { return port_; }

private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

} // namespace sceneval
