/*
 * Copyright 2026 The ensemble-lens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ensemble_lens/service.h"

#include <atomic>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <list>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <vector>

#include "ensemble_lens/analysis.h"
#include "ensemble_lens/csv.h"
#include "ensemble_lens/weights.h"
#include "httplib.h"

namespace ensemble_lens::service {
namespace {

using analysis::ordered_json;
using Query = std::multimap<std::string, std::string>;

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

std::string ErrorBody(const std::string& code, const std::string& message) {
  ordered_json body;
  body["error"] = {{"code", code}, {"message", message}};
  return analysis::Serialize(body);
}

std::string RandomToken() {
  static std::mutex mutex;
  static std::random_device device;
  static std::mt19937_64 rng([] {
    std::seed_seq seq{device(), device(), device(), device(),
                      device(), device(), device(), device()};
    return std::mt19937_64(seq);
  }());
  std::lock_guard lock(mutex);
  char text[33];
  std::snprintf(text, sizeof text, "%016" PRIx64 "%016" PRIx64, rng(), rng());
  return text;
}

uint64_t Fnv1a(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Byte-budgeted LRU of response bodies with optional spill to disk.
class ResponseCache {
 public:
  ResponseCache(size_t budget_bytes, std::optional<std::filesystem::path> spill_dir)
      : budget_(budget_bytes), spill_dir_(std::move(spill_dir)) {
    if (spill_dir_) {
      std::error_code ec;
      std::filesystem::create_directories(*spill_dir_, ec);
      if (ec) spill_dir_.reset();
    }
  }

  std::optional<std::string> Get(const std::string& key) {
    {
      std::lock_guard lock(mutex_);
      const auto it = index_.find(key);
      if (it != index_.end()) {
        entries_.splice(entries_.begin(), entries_, it->second);
        return it->second->second;
      }
    }
    if (!spill_dir_) return std::nullopt;
    std::ifstream in(SpillPath(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::string stored_key;
    std::getline(in, stored_key);
    if (stored_key != key) return std::nullopt;
    std::stringstream body;
    body << in.rdbuf();
    return body.str();
  }

  void Put(const std::string& key, const std::string& body) {
    std::vector<std::pair<std::string, std::string>> evicted;
    {
      std::lock_guard lock(mutex_);
      if (index_.contains(key)) return;
      entries_.emplace_front(key, body);
      index_[key] = entries_.begin();
      used_ += key.size() + body.size();
      while (used_ > budget_ && !entries_.empty()) {
        auto& last = entries_.back();
        used_ -= last.first.size() + last.second.size();
        index_.erase(last.first);
        evicted.emplace_back(std::move(last.first), std::move(last.second));
        entries_.pop_back();
      }
    }
    if (!spill_dir_) return;
    for (const auto& [k, v] : evicted) {
      std::ofstream out(SpillPath(k), std::ios::binary | std::ios::trunc);
      out << k << '\n' << v;
    }
  }

  // Drops every entry whose key starts with `prefix`.
  void Forget(const std::string& prefix) {
    std::lock_guard lock(mutex_);
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->first.rfind(prefix, 0) == 0) {
        used_ -= it->first.size() + it->second.size();
        index_.erase(it->first);
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
  }

 private:
  std::filesystem::path SpillPath(const std::string& key) const {
    char name[32];
    std::snprintf(name, sizeof name, "%016" PRIx64 ".json", Fnv1a(key));
    return *spill_dir_ / name;
  }

  size_t budget_;
  std::optional<std::filesystem::path> spill_dir_;
  std::mutex mutex_;
  size_t used_ = 0;
  std::list<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, decltype(entries_)::iterator> index_;
};

struct Job {
  std::string id;
  std::atomic<size_t> done{0};
  std::atomic<size_t> total{0};
  std::atomic<bool> cancel{false};
  std::mutex mutex;
  std::string state = "running";
  int result_status = 0;
  std::string result;
  std::thread worker;
};

struct Session {
  std::string id;
  std::shared_ptr<const EnsembleBundle> bundle;
  std::unique_ptr<analysis::PredictorPool> predictors;
  std::chrono::system_clock::time_point created_at;
  std::mutex jobs_mutex;
  std::map<std::string, std::shared_ptr<Job>> jobs;
};

std::optional<std::string> Param(const Query& query, const std::string& name) {
  const auto it = query.find(name);
  if (it == query.end()) return std::nullopt;
  return it->second;
}

std::string RequiredParam(const Query& query, const std::string& name) {
  auto value = Param(query, name);
  if (!value || value->empty()) {
    throw Error(ErrorCode::kInvalidArgument, "query parameter \"" + name + "\" is required");
  }
  return *value;
}

double ParseReal(const std::string& text, const std::string& name) {
  const auto v = csv::ParseNumber(text);
  if (!v) throw Error(ErrorCode::kInvalidArgument, name + " must be a number");
  return *v;
}

uint64_t ParseUnsigned(const std::string& text, const std::string& name) {
  uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidArgument, name + " must be a non-negative integer");
  }
  return value;
}

bool ParseFlag(const std::optional<std::string>& text) {
  return text && (*text == "1" || *text == "true" || *text == "yes");
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start < path.size()) {
    size_t slash = path.find('/', start);
    if (slash == std::string::npos) slash = path.size();
    if (slash > start) parts.push_back(path.substr(start, slash - start));
    start = slash + 1;
  }
  return parts;
}

compat::PairOptions PairOptionsFrom(const Query& query) {
  compat::PairOptions options;
  if (auto t = Param(query, "threshold")) options.sdr_threshold = ParseReal(*t, "threshold");
  if (auto x = Param(query, "xi")) options.xi = ParseReal(*x, "xi");
  if (auto b = Param(query, "bins")) {
    options.histogram_bins = ParseUnsigned(*b, "bins");
    if (options.histogram_bins == 0) {
      throw Error(ErrorCode::kInvalidArgument, "bins must be positive");
    }
  }
  return options;
}

std::string PairOptionsKey(const compat::PairOptions& options) {
  std::string key = "threshold=";
  if (options.sdr_threshold) key += csv::FormatNumber(*options.sdr_threshold);
  key += "&xi=" + csv::FormatNumber(options.xi);
  key += "&bins=" + std::to_string(options.histogram_bins);
  return key;
}

}  // namespace

bool IsLoopback(const std::string& host) {
  return host == "localhost" || host == "::1" || host.rfind("127.", 0) == 0;
}

struct AnalysisService::State {
  explicit State(ServiceOptions o)
      : options(std::move(o)),
        cache(options.cache_mb * 1024 * 1024, options.spill_dir) {}

  ServiceOptions options;
  ResponseCache cache;
  std::shared_mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  httplib::Server server;
  bool bound = false;

  std::shared_ptr<Session> FindSession(const std::string& id) {
    std::shared_lock lock(sessions_mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) {
      throw HttpError(404, "UnknownBundle", "no bundle session \"" + id + "\"");
    }
    return it->second;
  }

  Response CreateSession(const std::string& body) {
    if (body.size() > options.max_upload_mb * 1024 * 1024) {
      throw HttpError(413, "PayloadTooLarge", "bundle exceeds the upload limit");
    }
    const nlohmann::json document = nlohmann::json::parse(body, nullptr, false);
    if (document.is_discarded() || !document.is_object()) {
      throw Error(ErrorCode::kInvalidArgument, "request body is not a JSON object");
    }
    EnsembleBundle bundle;
    if (document.contains("path") && !document.contains("manifest")) {
      if (!document["path"].is_string()) {
        throw Error(ErrorCode::kInvalidArgument, "\"path\" must be a string");
      }
      bundle = LoadBundle(document["path"].get<std::string>());
    } else {
      bundle = ParseBundleDocument(document, std::filesystem::current_path());
    }
    auto session = std::make_shared<Session>();
    session->id = RandomToken();
    session->bundle = std::make_shared<const EnsembleBundle>(std::move(bundle));
    session->predictors = std::make_unique<analysis::PredictorPool>(session->bundle);
    session->created_at = std::chrono::system_clock::now();
    {
      std::unique_lock lock(sessions_mutex);
      sessions[session->id] = session;
    }
    ordered_json out;
    out["bundle_id"] = session->id;
    out["summary"] = analysis::SummaryDocument(*session->bundle, session->id);
    return {201, analysis::Serialize(out)};
  }

  void DropSession(const std::string& id) {
    std::shared_ptr<Session> session;
    {
      std::unique_lock lock(sessions_mutex);
      const auto it = sessions.find(id);
      if (it == sessions.end()) {
        throw HttpError(404, "UnknownBundle", "no bundle session \"" + id + "\"");
      }
      session = it->second;
      sessions.erase(it);
    }
    cache.Forget(id + "|");
    StopJobs(*session);
  }

  static void StopJobs(Session& session) {
    std::map<std::string, std::shared_ptr<Job>> jobs;
    {
      std::lock_guard lock(session.jobs_mutex);
      jobs.swap(session.jobs);
    }
    for (auto& [id, job] : jobs) {
      job->cancel = true;
      if (job->worker.joinable()) job->worker.join();
    }
  }

  void StopAllJobs() {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::shared_lock lock(sessions_mutex);
      for (auto& [id, session] : sessions) all.push_back(session);
    }
    for (auto& session : all) StopJobs(*session);
  }

  template <typename Compute>
  Response Cached(const Session& session, const std::string& key, Compute compute) {
    const std::string full = session.id + "|" + key;
    if (auto hit = cache.Get(full)) return {200, *hit};
    std::string body = analysis::Serialize(compute());
    cache.Put(full, body);
    return {200, std::move(body)};
  }

  Response StartJob(const std::shared_ptr<Session>& session, const std::string& key,
                    std::function<ordered_json(const xai::Progress&)> compute) {
    auto job = std::make_shared<Job>();
    job->id = RandomToken();
    const std::string full = session->id + "|" + key;
    job->worker = std::thread([this, job, full, compute = std::move(compute)] {
      const xai::Progress progress = [job](size_t done, size_t total) {
        job->done = done;
        job->total = total;
        return !job->cancel.load();
      };
      int status = 200;
      std::string body;
      std::string state = "done";
      try {
        if (auto hit = cache.Get(full)) {
          body = *hit;
        } else {
          body = analysis::Serialize(compute(progress));
          cache.Put(full, body);
        }
      } catch (const Error& e) {
        status = analysis::HttpStatus(e.code());
        body = analysis::Serialize(analysis::ErrorDocument(e));
        state = e.code() == ErrorCode::kCancelled ? "cancelled" : "failed";
      } catch (const std::exception& e) {
        status = 500;
        body = analysis::Serialize(analysis::ErrorDocument(e));
        state = "failed";
      }
      std::lock_guard lock(job->mutex);
      job->state = state;
      job->result_status = status;
      job->result = std::move(body);
    });
    {
      std::lock_guard lock(session->jobs_mutex);
      session->jobs[job->id] = job;
    }
    ordered_json out;
    out["job_id"] = job->id;
    out["status_url"] = "/api/bundles/" + session->id + "/jobs/" + job->id;
    return {202, analysis::Serialize(out)};
  }

  std::shared_ptr<Job> FindJob(Session& session, const std::string& id) {
    std::lock_guard lock(session.jobs_mutex);
    const auto it = session.jobs.find(id);
    if (it == session.jobs.end()) {
      throw HttpError(404, "UnknownJob", "no job \"" + id + "\"");
    }
    return it->second;
  }

  Response JobStatus(Job& job) {
    ordered_json out;
    out["job_id"] = job.id;
    std::lock_guard lock(job.mutex);
    out["state"] = job.state;
    out["done"] = job.done.load();
    out["total"] = job.total.load();
    if (job.state != "running") {
      out["result_status"] = job.result_status;
      out["result"] = ordered_json::parse(job.result);
    }
    return {200, analysis::Serialize(out)};
  }

  Response Route(const std::string& method, const std::string& path,
                 const Query& query, const std::string& body) {
    const std::vector<std::string> parts = SplitPath(path);
    auto not_found = [&]() -> Response {
      throw HttpError(404, "NotFound", "no route for " + method + " " + path);
    };
    if (parts.size() < 2 || parts[0] != "api") return not_found();
    if (parts[1] == "health" && parts.size() == 2) {
      if (method != "GET") throw HttpError(405, "MethodNotAllowed", "use GET");
      return {200, R"({"status":"ok"})"};
    }
    if (parts[1] != "bundles") return not_found();
    if (parts.size() == 2) {
      if (method != "POST") throw HttpError(405, "MethodNotAllowed", "use POST");
      return CreateSession(body);
    }
    const std::string& id = parts[2];
    if (parts.size() == 3) {
      if (method != "DELETE") return not_found();
      DropSession(id);
      return {200, R"({"deleted":true})"};
    }
    std::shared_ptr<Session> session = FindSession(id);
    const EnsembleBundle& bundle = *session->bundle;
    const std::string& resource = parts[3];
    const size_t depth = parts.size();

    auto expect = [&](const char* verb) {
      if (method != verb) {
        throw HttpError(405, "MethodNotAllowed", std::string("use ") + verb);
      }
    };

    if (resource == "summary" && depth == 4) {
      expect("GET");
      return {200, analysis::Serialize(analysis::SummaryDocument(bundle, session->id))};
    }
    if (resource == "metrics" && depth == 4) {
      expect("GET");
      return Cached(*session, "metrics", [&] { return analysis::MetricsDocument(bundle); });
    }
    if (resource == "compare" && depth == 4) {
      expect("GET");
      return Cached(*session, "compare", [&] { return analysis::CompareDocument(bundle); });
    }
    if (resource == "correlation" && depth == 4) {
      expect("GET");
      const auto method_name = Param(query, "method");
      std::optional<std::string_view> view;
      if (method_name && !method_name->empty()) view = *method_name;
      return Cached(*session, "correlation?method=" + method_name.value_or(""),
                    [&] { return analysis::CorrelationDocument(bundle, view); });
    }
    if (resource == "compat" && depth == 4) {
      expect("GET");
      const std::string metric = RequiredParam(query, "metric");
      const compat::PairOptions options = PairOptionsFrom(query);
      const std::string canonical(
          compat::PairMetricName(compat::ParsePairMetric(metric)));
      return Cached(*session, "compat?metric=" + canonical + "&" + PairOptionsKey(options),
                    [&] { return analysis::CompatDocument(bundle, canonical, options); });
    }
    if (resource == "compat" && depth == 7 && parts[4] == "pair") {
      expect("GET");
      const std::string& a = parts[5];
      const std::string& b = parts[6];
      bundle.ModelIndex(a);
      bundle.ModelIndex(b);
      const compat::PairOptions options = PairOptionsFrom(query);
      return Cached(*session, "pair/" + a + "/" + b + "?" + PairOptionsKey(options),
                    [&] { return analysis::PairDocument(bundle, a, b, options); });
    }
    if (resource == "weights" && depth == 5) {
      expect("POST");
      const nlohmann::json request = nlohmann::json::parse(body, nullptr, false);
      if (request.is_discarded() || !request.is_object()) {
        throw Error(ErrorCode::kInvalidArgument, "request body is not a JSON object");
      }
      if (parts[4] == "evaluate") return Evaluate(*session, request);
      if (parts[4] == "suggest") return Suggest(*session, request);
      return not_found();
    }
    if (resource == "xai" && depth == 5) {
      expect("GET");
      const std::string model = RequiredParam(query, "model");
      const bool async = ParseFlag(Param(query, "async"));
      if (model != metrics::kEnsembleId) bundle.ModelIndex(model);
      if (parts[4] == "importance") {
        xai::ImportanceOptions options;
        if (auto r = Param(query, "repeats")) options.repeats = ParseUnsigned(*r, "repeats");
        if (auto s = Param(query, "seed")) options.seed = ParseUnsigned(*s, "seed");
        if (auto m = Param(query, "metric"); m && !m->empty()) options.metric = *m;
        options.normalize = ParseFlag(Param(query, "normalize"));
        if (options.repeats == 0) {
          throw Error(ErrorCode::kInvalidArgument, "repeats must be at least 1");
        }
        const std::string key = "importance?model=" + model +
                                "&repeats=" + std::to_string(options.repeats) +
                                "&seed=" + std::to_string(options.seed) +
                                "&metric=" + options.metric.value_or("") +
                                "&normalize=" + (options.normalize ? "1" : "0");
        auto compute = [session, model, options](const xai::Progress& progress) {
          return analysis::ImportanceDocument(*session->predictors, *session->bundle,
                                              model, options, progress);
        };
        if (async) return StartJob(session, key, compute);
        return Cached(*session, key, [&] { return compute({}); });
      }
      if (parts[4] == "pdp") {
        const std::string feature = RequiredParam(query, "feature");
        xai::PdpOptions options;
        if (auto g = Param(query, "grid")) options.grid_size = ParseUnsigned(*g, "grid");
        if (auto c = Param(query, "row_cap")) options.row_cap = ParseUnsigned(*c, "row_cap");
        if (!bundle.dataset.features.FindColumn(feature)) {
          throw Error(ErrorCode::kUnknownFeature,
                      "dataset has no feature \"" + feature + "\"");
        }
        const std::string key =
            "pdp?model=" + model + "&feature=" + feature +
            "&grid=" + std::to_string(options.grid_size) + "&row_cap=" +
            (options.row_cap ? std::to_string(*options.row_cap) : std::string());
        auto compute = [session, model, feature, options](const xai::Progress& progress) {
          return analysis::PdpDocument(*session->predictors, *session->bundle, model,
                                       feature, options, progress);
        };
        if (async) return StartJob(session, key, compute);
        return Cached(*session, key, [&] { return compute({}); });
      }
      return not_found();
    }
    if (resource == "jobs" && depth == 5) {
      auto job = FindJob(*session, parts[4]);
      if (method == "DELETE") {
        job->cancel = true;
        return {200, analysis::Serialize({{"job_id", job->id}, {"cancel_requested", true}})};
      }
      expect("GET");
      return JobStatus(*job);
    }
    return not_found();
  }

  Response Evaluate(const Session& session, const nlohmann::json& request) {
    if (!request.contains("weights") || !request["weights"].is_object()) {
      throw Error(ErrorCode::kInvalidArgument, "\"weights\" must be an object");
    }
    std::map<std::string, double> weights;
    for (const auto& [id, w] : request["weights"].items()) {
      if (!w.is_number()) {
        throw Error(ErrorCode::kInvalidArgument, "weight of \"" + id + "\" is not a number");
      }
      weights[id] = w.get<double>();
    }
    std::shared_ptr<Session> holdout;
    std::string key = "weights/evaluate?";
    for (const auto& [id, w] : weights) key += id + "=" + csv::FormatNumber(w) + "&";
    if (request.contains("holdout_bundle_id") && !request["holdout_bundle_id"].is_null()) {
      if (!request["holdout_bundle_id"].is_string()) {
        throw Error(ErrorCode::kInvalidArgument, "holdout_bundle_id must be a string");
      }
      holdout = FindSession(request["holdout_bundle_id"].get<std::string>());
      key += "holdout=" + holdout->id;
    }
    return Cached(session, key, [&] {
      return analysis::EvaluateDocument(*session.bundle, weights,
                                        holdout ? holdout->bundle.get() : nullptr);
    });
  }

  Response Suggest(const Session& session, const nlohmann::json& request) {
    analysis::SuggestRequest suggest;
    if (!request.contains("objective") || !request["objective"].is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "\"objective\" must be a string");
    }
    suggest.objective = request["objective"].get<std::string>();
    if (request.contains("direction") && request["direction"].is_string()) {
      suggest.direction = request["direction"].get<std::string>();
    }
    for (const char* field : {"budget", "seed"}) {
      if (request.contains(field) && !request[field].is_number_unsigned()) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string(field) + " must be a non-negative integer");
      }
    }
    if (request.contains("budget")) suggest.budget = request["budget"].get<size_t>();
    if (request.contains("seed")) suggest.seed = request["seed"].get<uint64_t>();
    const std::string key = "weights/suggest?objective=" + suggest.objective +
                            "&direction=" + suggest.direction.value_or("") +
                            "&budget=" + std::to_string(suggest.budget) +
                            "&seed=" + std::to_string(suggest.seed);
    return Cached(session, key,
                  [&] { return analysis::SuggestDocument(*session.bundle, suggest); });
  }
};

AnalysisService::AnalysisService(ServiceOptions options)
    : state_(std::make_unique<State>(std::move(options))) {
  httplib::Server& server = state_->server;
  server.set_payload_max_length(state_->options.max_upload_mb * 1024 * 1024);
  // SO_REUSEADDR only: a port held by another listener must fail to bind.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  auto handler = [this](const httplib::Request& request, httplib::Response& response) {
    Query query(request.params.begin(), request.params.end());
    const Response result = Handle(request.method, request.path, query, request.body);
    response.status = result.status;
    response.set_content(result.body, "application/json");
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Delete(".*", handler);
  server.set_error_handler([](const httplib::Request&, httplib::Response& response) {
    if (!response.body.empty()) return;
    const std::string code = response.status == 413 ? "PayloadTooLarge" : "HttpError";
    response.set_content(ErrorBody(code, "HTTP " + std::to_string(response.status)),
                         "application/json");
  });
}

AnalysisService::~AnalysisService() {
  Stop();
  state_->StopAllJobs();
}

Response AnalysisService::Handle(const std::string& method, const std::string& path,
                                 const Query& query, const std::string& body) {
  try {
    return state_->Route(method, path, query, body);
  } catch (const HttpError& e) {
    return {e.status(), ErrorBody(e.code(), e.what())};
  } catch (const Error& e) {
    return {analysis::HttpStatus(e.code()), analysis::Serialize(analysis::ErrorDocument(e))};
  } catch (const std::exception& e) {
    return {500, analysis::Serialize(analysis::ErrorDocument(e))};
  }
}

int AnalysisService::Bind() {
  const ServiceOptions& options = state_->options;
  if (!options.allow_remote && !IsLoopback(options.bind)) {
    throw Error(ErrorCode::kInvalidArgument,
                "refusing to bind non-loopback address " + options.bind +
                    " without --allow-remote");
  }
  int port = options.port;
  if (port == 0) {
    port = state_->server.bind_to_any_port(options.bind);
    if (port < 0) throw Error(ErrorCode::kIo, "cannot bind " + options.bind);
  } else if (!state_->server.bind_to_port(options.bind, port)) {
    throw Error(ErrorCode::kIo,
                "cannot bind " + options.bind + ":" + std::to_string(port));
  }
  state_->bound = true;
  return port;
}

void AnalysisService::Run() {
  if (!state_->bound) throw Error(ErrorCode::kInvalidArgument, "Run() before Bind()");
  state_->server.listen_after_bind();
}

void AnalysisService::Stop() { state_->server.stop(); }

}  // namespace ensemble_lens::service
