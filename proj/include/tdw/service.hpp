#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "tdw/cube.hpp"
#include "tdw/etl.hpp"
#include "tdw/kv_config.hpp"

namespace httplib {
class Server;
}

namespace tdw {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string read_token;
  std::string admin_token;
  std::filesystem::path etl_config;

  /// Tokens non-empty and distinct, port in range; Error(kInvalidArgument).
  void validate() const;

  /// Keys: host, port, read_token, admin_token, etl_config.
  static ServiceConfig from_kv(const KvConfig& kv);
  static ServiceConfig load(const std::filesystem::path& path);
};

/// Published cube state. Ids increase by one per publish.
struct Snapshot {
  uint64_t id = 0;
  std::shared_ptr<const CubeSnapshot> cube;
};

class SnapshotHolder {
 public:
  std::shared_ptr<const Snapshot> current() const;
  /// Returns the id given to `cube`.
  uint64_t publish(std::shared_ptr<const CubeSnapshot> cube);

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> current_;
  uint64_t next_id_ = 1;
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

/// Produces the next committed warehouse state.
using RefreshFn = std::function<EtlOutcome()>;

RefreshFn etl_refresh(EtlConfig config);

/// Request handlers, independent of the HTTP transport. Read endpoints
/// accept either token; refresh needs the admin token.
class QueryService {
 public:
  QueryService(ServiceConfig config, std::shared_ptr<const CubeSnapshot> initial, RefreshFn refresh);

  /// Loads the committed store named by config.etl_config.
  static std::unique_ptr<QueryService> open(const ServiceConfig& config);

  HttpResponse handle_health() const;
  HttpResponse handle_metadata(std::string_view authorization) const;
  HttpResponse handle_pivot(std::string_view authorization, std::string_view body) const;
  /// 409 while another refresh is running.
  HttpResponse handle_refresh(std::string_view authorization);

  std::shared_ptr<const Snapshot> snapshot() const { return snapshots_.current(); }
  const ServiceConfig& config() const { return config_; }

 private:
  enum class Access { kNone, kRead, kAdmin };
  Access access(std::string_view authorization) const;

  ServiceConfig config_;
  SnapshotHolder snapshots_;
  RefreshFn refresh_;
  std::atomic<bool> refreshing_{false};
};

/// HTTP binding of a QueryService.
class HttpServer {
 public:
  explicit HttpServer(QueryService& service);
  ~HttpServer();

  /// Binds config().host; port 0 picks a free port. Returns the bound port.
  int bind(int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  QueryService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace tdw
