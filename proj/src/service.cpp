#include "tdw/service.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include "tdw/error.hpp"
#include "tdw/json_codec.hpp"

namespace tdw {

using nlohmann::json;

void ServiceConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (read_token.empty() || admin_token.empty()) fail("read_token and admin_token must be set");
  if (read_token == admin_token) fail("admin_token must differ from read_token");
  if (port < 0 || port > 65535) fail(fmt::format("port {} out of range", port));
}

ServiceConfig ServiceConfig::from_kv(const KvConfig& kv) {
  ServiceConfig c;
  c.host = kv.get_or("host", c.host);
  c.port = static_cast<int>(kv.get_int("port", c.port));
  c.read_token = kv.get_or("read_token", "");
  c.admin_token = kv.get_or("admin_token", "");
  c.etl_config = kv.path_or("etl_config", "etl.conf");
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) { return from_kv(KvConfig::load(path)); }

std::shared_ptr<const Snapshot> SnapshotHolder::current() const {
  std::lock_guard lock(mutex_);
  return current_;
}

uint64_t SnapshotHolder::publish(std::shared_ptr<const CubeSnapshot> cube) {
  std::lock_guard lock(mutex_);
  auto s = std::make_shared<Snapshot>(Snapshot{next_id_++, std::move(cube)});
  current_ = s;
  return s->id;
}

RefreshFn etl_refresh(EtlConfig config) {
  return [config = std::move(config)] { return run_etl(config); };
}

namespace {

HttpResponse json_response(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_response(int status, std::string_view error, std::string_view message) {
  return json_response(status, {{"error", error}, {"message", message}});
}

HttpResponse unauthorized() { return json_response(401, {{"error", "UNAUTHORIZED"}}); }

}  // namespace

QueryService::QueryService(ServiceConfig config, std::shared_ptr<const CubeSnapshot> initial, RefreshFn refresh)
    : config_(std::move(config)), refresh_(std::move(refresh)) {
  config_.validate();
  snapshots_.publish(std::move(initial));
}

std::unique_ptr<QueryService> QueryService::open(const ServiceConfig& config) {
  const auto etl = EtlConfig::load(config.etl_config);
  auto cube = build_cube(load_warehouse(etl));
  return std::make_unique<QueryService>(config, std::move(cube), etl_refresh(etl));
}

QueryService::Access QueryService::access(std::string_view authorization) const {
  constexpr std::string_view kBearer = "Bearer ";
  if (!authorization.starts_with(kBearer)) return Access::kNone;
  const auto token = authorization.substr(kBearer.size());
  if (token == config_.admin_token) return Access::kAdmin;
  if (token == config_.read_token) return Access::kRead;
  return Access::kNone;
}

HttpResponse QueryService::handle_health() const {
  return json_response(200, {{"status", "ok"}, {"snapshot_id", snapshot()->id}});
}

HttpResponse QueryService::handle_metadata(std::string_view authorization) const {
  if (access(authorization) == Access::kNone) return unauthorized();
  const auto snap = snapshot();
  json body = metadata_to_json(*snap->cube);
  body["snapshot_id"] = snap->id;
  return json_response(200, body);
}

HttpResponse QueryService::handle_pivot(std::string_view authorization, std::string_view body) const {
  if (access(authorization) == Access::kNone) return unauthorized();
  PivotQuery query;
  try {
    query = query_from_json(json::parse(body));
  } catch (const json::exception& e) {
    return error_response(400, "MALFORMED_QUERY", fmt::format("body: invalid JSON ({})", e.what()));
  } catch (const Error& e) {
    return error_response(400, e.name(), e.what());
  }
  const auto snap = snapshot();
  try {
    const auto result = snap->cube->query(query);
    return json_response(200, {{"snapshot_id", snap->id},
                               {"query", query_to_json(query)},
                               {"result", result_to_json(result)}});
  } catch (const Error& e) {
    return error_response(e.code() == ErrorCode::kMalformedQuery ? 400 : 422, e.name(), e.what());
  }
}

HttpResponse QueryService::handle_refresh(std::string_view authorization) {
  const auto who = access(authorization);
  if (who != Access::kAdmin) return unauthorized();
  bool expected = false;
  if (!refreshing_.compare_exchange_strong(expected, true)) {
    return error_response(409, "BUSY", "a refresh is already running");
  }
  struct Release {
    std::atomic<bool>& flag;
    ~Release() { flag = false; }
  } release{refreshing_};
  try {
    auto outcome = refresh_();
    const uint64_t id = snapshots_.publish(build_cube(outcome.data));
    return json_response(200, {{"snapshot_id", id}, {"report", etl_report_to_json(outcome.report)}});
  } catch (const Error& e) {
    return error_response(500, e.name(), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "INTERNAL", e.what());
  }
}

// ---------------------------------------------------------------------------

HttpServer::HttpServer(QueryService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  auto auth = [](const httplib::Request& req) { return req.get_header_value("Authorization"); };
  server_->Get("/api/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.handle_health());
  });
  server_->Get("/api/metadata", [this, reply, auth](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_metadata(auth(req)));
  });
  server_->Post("/api/pivot", [this, reply, auth](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_pivot(auth(req), req.body));
  });
  server_->Post("/api/refresh", [this, reply, auth](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.handle_refresh(auth(req)));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(int port) {
  const auto& host = service_.config().host;
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, fmt::format("cannot bind {}", host));
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error(ErrorCode::kIo, fmt::format("cannot bind {}:{}", host, port));
  return port;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace tdw
