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

// HTTP facade over the analysis documents.
//
//   GET    /api/health
//   POST   /api/bundles                          document body or {"path":...}
//   GET    /api/bundles/{id}/summary
//   DELETE /api/bundles/{id}
//   GET    /api/bundles/{id}/metrics
//   GET    /api/bundles/{id}/compare
//   GET    /api/bundles/{id}/correlation?method=
//   GET    /api/bundles/{id}/compat?metric=&threshold=&xi=
//   GET    /api/bundles/{id}/compat/pair/{a}/{b}?threshold=&xi=&bins=
//   POST   /api/bundles/{id}/weights/evaluate    {"weights":{...},"holdout_bundle_id"?}
//   POST   /api/bundles/{id}/weights/suggest     {"objective","direction"?,"budget","seed"}
//   GET    /api/bundles/{id}/xai/importance?model=&repeats=&seed=&metric=&normalize=
//   GET    /api/bundles/{id}/xai/pdp?model=&feature=&grid=&row_cap=
//   GET    /api/bundles/{id}/jobs/{job}
//   DELETE /api/bundles/{id}/jobs/{job}
//
// The xai routes accept async=1 and then answer 202 with a job whose status
// resource reports progress and, once finished, the document.
//
// Successful analysis bodies are cached per session in an LRU keyed by the
// route and its parameters; evicted entries are written under spill_dir when
// one is configured and read back on a later miss.

#ifndef ENSEMBLE_LENS_SERVICE_H_
#define ENSEMBLE_LENS_SERVICE_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace ensemble_lens::service {

struct ServiceOptions {
  std::string bind = "127.0.0.1";
  int port = 8080;
  bool allow_remote = false;
  size_t cache_mb = 64;
  std::optional<std::filesystem::path> spill_dir;
  size_t max_upload_mb = 256;
};

struct Response {
  int status = 200;
  std::string body;
};

// True for 127.0.0.0/8, ::1 and "localhost".
bool IsLoopback(const std::string& host);

class AnalysisService {
 public:
  explicit AnalysisService(ServiceOptions options);
  ~AnalysisService();
  AnalysisService(const AnalysisService&) = delete;
  AnalysisService& operator=(const AnalysisService&) = delete;

  // Routes one request without the network; the HTTP server calls this too.
  Response Handle(const std::string& method, const std::string& path,
                  const std::multimap<std::string, std::string>& query,
                  const std::string& body);

  // Binds the listening socket and returns the bound port (useful with port
  // 0). Throws Error(kInvalidArgument) for a non-loopback address without
  // allow_remote and Error(kIo) when the address cannot be bound.
  int Bind();
  // Serves until Stop(). Requires Bind().
  void Run();
  // Safe to call from any thread, including before Run().
  void Stop();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace ensemble_lens::service

#endif  // ENSEMBLE_LENS_SERVICE_H_
