#include "recsearch/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "recsearch/evalbench.hpp"

namespace recsearch {
namespace {

using nlohmann::json;

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

HttpReply reply(int status, const json& body) {
  HttpReply r;
  r.status = status;
  r.body = body.dump();
  return r;
}

HttpReply error_reply(int status, std::string_view message) {
  return reply(status, json{{"error", message}});
}

json parse_object(std::string_view body) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw BadRequest("body is not valid JSON");
  if (!doc.is_object()) throw BadRequest("body must be a JSON object");
  return doc;
}

std::size_t positive_int(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw BadRequest(std::string("'") + key + "' must be a positive integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

std::string string_field(const json& v, const char* key) {
  if (!v.is_string()) throw BadRequest(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

// Everything in a search request except the query text.
RetrievalRequest parse_request_options(const json& obj, const ServingConfig& cfg) {
  RetrievalRequest req;
  req.k = cfg.default_k;
  req.mode = cfg.default_mode;
  req.lambda = cfg.default_lambda;
  if (obj.contains("k")) req.k = positive_int(obj["k"], "k");
  if (obj.contains("mode")) req.mode = parse_mode(string_field(obj["mode"], "mode"));
  if (obj.contains("engine")) req.engine = parse_engine(string_field(obj["engine"], "engine"));
  if (obj.contains("precision")) {
    req.precision = parse_precision(string_field(obj["precision"], "precision"));
  }
  if (obj.contains("ef_search")) req.ef_search = positive_int(obj["ef_search"], "ef_search");
  if (obj.contains("lambda")) {
    if (!obj["lambda"].is_number()) throw BadRequest("'lambda' must be a number");
    req.lambda = obj["lambda"].get<double>();
  }
  if (obj.contains("filters")) {
    const json& f = obj["filters"];
    if (!f.is_object()) throw BadRequest("'filters' must be an object of field: value");
    for (const auto& [field, value] : f.items()) {
      if (value.is_string()) {
        req.filters.push_back({field, value.get<std::string>()});
      } else if (value.is_number()) {
        req.filters.push_back({field, value.dump()});
      } else {
        throw BadRequest("filter '" + field + "' must be a string or number");
      }
    }
  }
  req.validate();
  validate_filters(req.filters);
  return req;
}

json opt_number(const std::optional<double>& v) {
  return v ? json(wire_float(*v)) : json(nullptr);
}

json result_json(const RankedResult& r) {
  json out{{"item_id", r.item_id}, {"rank", r.rank}, {"score", wire_float(r.score)}};
  out["title"] = r.display ? json(r.display->title) : json(nullptr);
  out["brand"] = r.display && r.display->brand ? json(*r.display->brand) : json(nullptr);
  out["source_scores"] = {{"dense", opt_number(r.source_scores.dense)},
                          {"sparse", opt_number(r.source_scores.sparse)}};
  return out;
}

json timings_json(const StageTimings& t) {
  return {{"encode", wire_float(t.encode_ms)},
          {"search", wire_float(t.search_ms)},
          {"lookup", wire_float(t.lookup_ms)},
          {"total", wire_float(t.total_ms)}};
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

// Maps library errors raised by a request to a status code.
template <typename Fn>
HttpReply guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const BadRequest& e) {
    return error_reply(400, e.what());
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::InvalidArgument:
      case ErrorCode::UnknownField:
      case ErrorCode::EmptySequence:
      case ErrorCode::ArtifactsMissing:
        return error_reply(400, e.what());
      default:
        return error_reply(500, e.what());
    }
  }
}

}  // namespace

double wire_float(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

Service::Service(ServingConfig cfg, std::ostream* log) : cfg_(std::move(cfg)), log_(log) {}

Service::~Service() = default;

void Service::set_artifacts(LoadedSystem loaded) {
  auto p = std::make_shared<const LoadedSystem>(std::move(loaded));
  std::lock_guard lock(artifacts_mutex_);
  artifacts_ = std::move(p);
}

bool Service::ready() const { return artifacts() != nullptr; }

std::shared_ptr<const LoadedSystem> Service::artifacts() const {
  std::lock_guard lock(artifacts_mutex_);
  return artifacts_;
}

HttpReply Service::health() const {
  const auto a = artifacts();
  if (!a) return reply(503, json{{"status", "loading"}});
  const System& s = a->system;
  const EmbeddingMatrix* vecs = s.dense_vectors();
  json modes = json::array({"dense"});
  if (s.bm25) {
    modes.push_back("sparse");
    modes.push_back("hybrid");
  }
  json engines = json::array();
  if (s.flat) engines.push_back("flat");
  if (s.hnsw) engines.push_back("hnsw");
  json precisions = json::array({"fp32"});
  if (s.qmodel) precisions.push_back("int8");
  return reply(200, json{{"status", "ok"},
                         {"checksums", a->checksums},
                         {"dims", s.model->d_out()},
                         {"N", vecs ? vecs->size() : 0},
                         {"modes", modes},
                         {"engines", engines},
                         {"precisions", precisions}});
}

HttpReply Service::search(std::string_view body) const {
  const auto a = artifacts();
  if (!a) return error_reply(503, "artifacts not loaded");
  HttpReply out = guarded([&] {
    const json doc = parse_object(body);
    if (!doc.contains("query")) throw BadRequest("'query' is required");
    RetrievalRequest req = parse_request_options(doc, cfg_);
    req.query_text = string_field(doc["query"], "query");
    StageTimings t;
    const auto results = retrieve(a->system, req, &t);
    json arr = json::array();
    for (const auto& r : results) arr.push_back(result_json(r));
    HttpReply r = reply(200, json{{"results", arr},
                                  {"timings_ms", timings_json(t)},
                                  {"mode", std::string(to_string(req.mode))},
                                  {"k", req.k}});
    r.k = req.k;
    r.mode = std::string(to_string(req.mode));
    return r;
  });
  return out;
}

HttpReply Service::item(std::string_view item_id) const {
  const auto a = artifacts();
  if (!a) return error_reply(503, "artifacts not loaded");
  const DisplayRecord* rec = a->system.cache->lookup(item_id);
  if (!rec) return error_reply(404, "unknown item '" + std::string(item_id) + "'");
  json out{{"item_id", rec->item_id}, {"title", rec->title}};
  out["brand"] = rec->brand ? json(*rec->brand) : json(nullptr);
  out["price"] = rec->price ? json(wire_float(*rec->price)) : json(nullptr);
  out["image_url"] = rec->image_url ? json(*rec->image_url) : json(nullptr);
  return reply(200, out);
}

HttpReply Service::ab(std::string_view body) const {
  const auto a = artifacts();
  if (!a) return error_reply(503, "artifacts not loaded");
  return guarded([&] {
    const json doc = parse_object(body);
    if (!doc.contains("queries") || !doc["queries"].is_array() || doc["queries"].empty()) {
      throw BadRequest("'queries' must be a non-empty array of strings");
    }
    std::vector<std::string> queries;
    for (const auto& q : doc["queries"]) queries.push_back(string_field(q, "queries[]"));
    for (const char* key : {"config_a", "config_b"}) {
      if (!doc.contains(key) || !doc[key].is_object()) {
        throw BadRequest(std::string("'") + key + "' must be an object");
      }
    }
    const RetrievalRequest cfg_a = parse_request_options(doc["config_a"], cfg_);
    const RetrievalRequest cfg_b = parse_request_options(doc["config_b"], cfg_);
    const std::size_t warmup = doc.contains("warmup") ? positive_int(doc["warmup"], "warmup") : 0;

    std::lock_guard token(ab_token_);
    auto run = [&](const RetrievalRequest& base, const char* label,
                   std::vector<std::vector<std::string>>& top) {
      std::size_t calls = 0;
      const QueryFn fn = [&](const std::string& q) {
        RetrievalRequest req = base;
        req.query_text = q;
        StageTimings t;
        const auto results = retrieve(a->system, req, &t);
        if (calls++ >= warmup) {
          std::vector<std::string> ids;
          for (std::size_t i = 0; i < results.size() && i < 10; ++i) ids.push_back(results[i].item_id);
          top.push_back(std::move(ids));
        }
        return t;
      };
      return latency_bench(fn, queries, warmup, queries.size(), label);
    };
    std::vector<std::vector<std::string>> top_a, top_b;
    const LatencyReport ra = run(cfg_a, "config_a", top_a);
    const LatencyReport rb = run(cfg_b, "config_b", top_b);

    double overlap = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) overlap += jaccard(top_a[i], top_b[i]);
    overlap /= static_cast<double>(queries.size());

    auto report = [](const LatencyReport& r) {
      return json{{"p50", wire_float(r.p50_ms)},
                  {"p99", wire_float(r.p99_ms)},
                  {"mean", wire_float(r.mean_ms)},
                  {"qps", wire_float(r.qps)}};
    };
    return reply(200, json{{"config_a", report(ra)},
                           {"config_b", report(rb)},
                           {"recall_overlap@10", wire_float(overlap)},
                           {"n_queries", queries.size()}});
  });
}

void Service::log_request(std::string_view route, int status, double latency_ms,
                          std::string_view extra) const {
  if (!log_) return;
  json line{{"route", route}, {"status", status}, {"latency_ms", wire_float(latency_ms)}};
  if (!extra.empty()) line.update(json::parse(extra));
  std::lock_guard lock(log_mutex_);
  *log_ << line.dump() << '\n' << std::flush;
}

void Service::mount(httplib::Server& server) const {
  auto send = [this](std::string_view route, httplib::Response& res,
                     std::chrono::steady_clock::time_point t0, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
    json extra = json::object();
    if (r.k) extra["k"] = *r.k;
    if (!r.mode.empty()) extra["mode"] = r.mode;
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    log_request(route, r.status, ms, extra.empty() ? std::string_view{} : extra.dump());
  };
  server.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) {
    const auto t0 = std::chrono::steady_clock::now();
    send("/health", res, t0, health());
  });
  server.Post("/search", [this, send](const httplib::Request& req, httplib::Response& res) {
    const auto t0 = std::chrono::steady_clock::now();
    send("/search", res, t0, search(req.body));
  });
  server.Get(R"(/item/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    const auto t0 = std::chrono::steady_clock::now();
    send("/item", res, t0, item(req.matches[1].str()));
  });
  server.Post("/ab", [this, send](const httplib::Request& req, httplib::Response& res) {
    const auto t0 = std::chrono::steady_clock::now();
    send("/ab", res, t0, ab(req.body));
  });
}

void serve(const SystemConfig& cfg, std::ostream* log) {
  httplib::Server server;
  Service service(cfg.serving, log);
  service.mount(server);
  if (!server.bind_to_port(cfg.serving.host, cfg.serving.port)) {
    throw Error(ErrorCode::IoError, "cannot bind " + cfg.serving.host + ":" +
                                        std::to_string(cfg.serving.port));
  }
  std::thread listener([&] { server.listen_after_bind(); });
  // A stop() issued before the accept loop starts would be lost.
  server.wait_until_ready();
  try {
    service.set_artifacts(load_system(cfg));
  } catch (...) {
    server.stop();
    listener.join();
    throw;
  }
  std::cerr << "listening on " << cfg.serving.host << ":" << cfg.serving.port << '\n';
  listener.join();
}

}  // namespace recsearch
