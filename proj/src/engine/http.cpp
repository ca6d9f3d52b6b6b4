#include "topicflow/engine/http.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "topicflow/error.hpp"

namespace topicflow::engine {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

std::string field(const json& body, const char* name) {
  if (!body.is_object() || !body.contains(name)) throw ValidationError(std::string("missing field '") + name + "'");
  if (!body[name].is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
  return body[name].get<std::string>();
}

}  // namespace

json history_json(const std::string& session_id, const std::vector<context::Context>& newest_first) {
  json turns = json::array();
  for (auto it = newest_first.rbegin(); it != newest_first.rend(); ++it) {
    turns.push_back({{"turn", it->turn},
                     {"user_id", it->user_id},
                     {"utterance", it->utterance},
                     {"response", it->response},
                     {"topic", it->topic_node},
                     {"dialogue", it->dialogue_id},
                     {"timestamp", it->timestamp}});
  }
  return {{"session_id", session_id}, {"turns", turns}};
}

HttpService::HttpService() : server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  // Wraps a handler with the readiness check and error mapping.
  auto guarded = [this](auto body) {
    return [this, body](const httplib::Request& req, httplib::Response& res) {
      auto eng = engine();
      if (!eng) return error(res, 503, "models are not loaded yet");
      try {
        body(*eng, req, res);
      } catch (const json::exception& e) {
        error(res, 400, std::string("malformed JSON: ") + e.what());
      } catch (const ValidationError& e) {
        error(res, 400, e.what());
      } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        error(res, 500, e.what());
      }
    };
  };

  s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    if (engine()) return reply(res, 200, {{"status", "ok"}});
    reply(res, 503, {{"status", "loading"}});
  });
  s.Post("/respond", guarded([](Engine& eng, const httplib::Request& req, httplib::Response& res) {
           const auto body = json::parse(req.body);
           const auto r = eng.respond(field(body, "session_id"), field(body, "user_id"), field(body, "text"));
           reply(res, 200, to_json(r));
         }));
  s.Post("/annotate", guarded([](Engine& eng, const httplib::Request& req, httplib::Response& res) {
           const auto body = json::parse(req.body);
           reply(res, 200, nlu::to_json(eng.annotate(field(body, "text"))));
         }));
  s.Get(R"(/session/([^/]+)/history)",
        guarded([](Engine& eng, const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          reply(res, 200, history_json(id, eng.history(id)));
        }));
}

HttpService::~HttpService() { stop(); }

void HttpService::set_engine(std::shared_ptr<Engine> engine) {
  std::lock_guard lock(mutex_);
  engine_ = std::move(engine);
}

std::shared_ptr<Engine> HttpService::engine() const {
  std::lock_guard lock(mutex_);
  return engine_;
}

bool HttpService::listen(const std::string& host, int port) { return server_->listen(host, port); }
int HttpService::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }
bool HttpService::listen_after_bind() { return server_->listen_after_bind(); }
void HttpService::stop() {
  if (server_) server_->stop();
}
void HttpService::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace topicflow::engine
