#pragma once

// HTTP+JSON serving layer. Handlers are plain methods returning a status and
// body so they can be exercised without a socket; serve() wires them to an
// httplib server.

#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "recsearch/config.hpp"

namespace httplib {
class Server;
}

namespace recsearch {

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
  // Request-log fields, when the request carried them.
  std::optional<std::size_t> k;
  std::string mode;
};

/// Rounds to 6 significant digits, the precision of every float on the wire.
double wire_float(double v);

class Service {
 public:
  explicit Service(ServingConfig cfg, std::ostream* log = nullptr);
  ~Service();

  /// Publishes loaded artifacts; /health reports 503 until this is called.
  void set_artifacts(LoadedSystem loaded);
  bool ready() const;

  HttpReply health() const;
  HttpReply search(std::string_view body) const;
  HttpReply item(std::string_view item_id) const;
  /// Runs both configs serially under an exclusive token, so concurrent
  /// calls queue rather than interleave.
  HttpReply ab(std::string_view body) const;

  /// Registers the routes on `server`.
  void mount(httplib::Server& server) const;

 private:
  std::shared_ptr<const LoadedSystem> artifacts() const;
  void log_request(std::string_view route, int status, double latency_ms, std::string_view extra) const;

  ServingConfig cfg_;
  std::ostream* log_;
  mutable std::mutex artifacts_mutex_;
  std::shared_ptr<const LoadedSystem> artifacts_;
  mutable std::mutex ab_token_;
  mutable std::mutex log_mutex_;
};

/// Starts listening on cfg.serving.host:port, then loads artifacts
/// (fail-fast: a load error stops the server and is rethrown). Blocks.
void serve(const SystemConfig& cfg, std::ostream* log = nullptr);

}  // namespace recsearch
