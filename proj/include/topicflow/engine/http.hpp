#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "topicflow/engine/engine.hpp"

namespace httplib {
class Server;
}

namespace topicflow::engine {

/// JSON API over an engine that may still be loading: every route except
/// /health answers 503 until set_engine() is called.
class HttpService {
 public:
  HttpService();
  ~HttpService();

  void set_engine(std::shared_ptr<Engine> engine);
  std::shared_ptr<Engine> engine() const;

  /// Blocks until stop(). Returns false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (-1 on failure); then call listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  mutable std::mutex mutex_;
  std::shared_ptr<Engine> engine_;
};

/// History as served by GET /session/{id}/history, oldest turn first.
nlohmann::json history_json(const std::string& session_id, const std::vector<context::Context>& newest_first);

}  // namespace topicflow::engine
