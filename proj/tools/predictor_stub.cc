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

// Reference endpoint of the predictor protocol, used by the conformance
// tests. Each output depends only on its own input row:
//
//   regression   y = sum of numeric features + length of each categorical
//   classes      softmax over s_c = 0.1 * c * (same sum)
//
// Fault modes: wrong-count (drops one output), error (error document),
// silent (never replies), silent-predict (answers describe only), garbage
// (non-JSON reply), oversize (replies despite batch_max being exceeded;
// batch_max is otherwise enforced with an error document).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

namespace {

using nlohmann::json;

struct Config {
  std::string task = "regression";
  std::vector<std::string> classes;
  size_t batch_max = 10000;
  bool concurrent = false;
  std::string mode = "ok";
  std::string log;
};

std::mutex log_mutex;

void Log(const Config& config, size_t rows) {
  if (config.log.empty()) return;
  std::lock_guard lock(log_mutex);
  std::ofstream(config.log, std::ios::app) << rows << '\n';
}

json ErrorReply(const json& id, const std::string& code, const std::string& message) {
  return {{"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

double RowScore(const json& row) {
  double s = 0.0;
  for (const auto& v : row) {
    if (v.is_number()) s += v.get<double>();
    if (v.is_string()) s += static_cast<double>(v.get<std::string>().size());
  }
  return s;
}

json Describe(const Config& config, const json& id) {
  json out{{"id", id}, {"task", config.task}};
  if (config.task != "regression") out["classes"] = config.classes;
  out["batch_max"] = config.batch_max;
  out["concurrent"] = config.concurrent;
  return out;
}

// Returns nullopt when the mode says not to answer.
std::optional<json> Answer(const Config& config, const std::string& line) {
  const json request = json::parse(line, nullptr, false);
  if (request.is_discarded() || !request.is_object()) {
    return ErrorReply(nullptr, "MalformedRequest", "request is not a JSON object");
  }
  const json id = request.value("id", json());
  const std::string op = request.value("op", "");
  if (config.mode == "silent") return std::nullopt;
  if (op == "describe") return Describe(config, id);
  if (op != "predict") return ErrorReply(id, "UnknownOp", "unknown op \"" + op + "\"");
  if (config.mode == "silent-predict") return std::nullopt;
  if (!request.contains("features") || !request["features"].is_array()) {
    return ErrorReply(id, "MalformedRequest", "predict needs \"features\"");
  }
  const json& rows = request["features"];
  Log(config, rows.size());
  if (config.mode == "error") return ErrorReply(id, "ModelFailure", "stub failure");
  if (rows.size() > config.batch_max && config.mode != "oversize") {
    return ErrorReply(id, "BatchTooLarge", "request exceeds batch_max");
  }
  json out{{"id", id}};
  json values = json::array();
  for (const auto& row : rows) {
    const double s = RowScore(row);
    if (config.task == "regression") {
      values.push_back(s);
      continue;
    }
    const size_t k = config.classes.size();
    std::vector<double> p(k);
    double top = -INFINITY;
    for (size_t c = 0; c < k; ++c) top = std::max(top, 0.1 * static_cast<double>(c) * s);
    double total = 0.0;
    for (size_t c = 0; c < k; ++c) total += p[c] = std::exp(0.1 * static_cast<double>(c) * s - top);
    for (double& v : p) v /= total;
    values.push_back(p);
  }
  if (config.mode == "wrong-count" && !values.empty()) values.erase(values.size() - 1);
  out[config.task == "regression" ? "predictions" : "probabilities"] = std::move(values);
  return out;
}

int ServeStdio(const Config& config) {
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (config.mode == "garbage") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    const auto reply = Answer(config, line);
    if (reply) std::cout << reply->dump() << std::endl;
  }
  return 0;
}

int ServeHttp(const Config& config, int port, const std::string& port_file) {
  httplib::Server server;
  auto reply = [&](const std::string& request, httplib::Response& response) {
    if (config.mode == "garbage") {
      response.set_content("this is not json", "text/plain");
      return;
    }
    const auto answer = Answer(config, request);
    if (!answer) {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      return;
    }
    response.set_content(answer->dump(), "application/json");
  };
  server.Get("/describe", [&](const httplib::Request&, httplib::Response& response) {
    reply(R"({"op":"describe","id":0})", response);
  });
  server.Post("/predict", [&](const httplib::Request& request, httplib::Response& response) {
    reply(request.body, response);
  });
  server.Post("/shutdown", [&](const httplib::Request&, httplib::Response&) {
    server.stop();
  });
  const int bound = port == 0 ? server.bind_to_any_port("127.0.0.1")
                              : (server.bind_to_port("127.0.0.1", port) ? port : -1);
  if (bound < 0) {
    std::cerr << "predictor_stub: cannot bind port " << port << std::endl;
    return 5;
  }
  if (!port_file.empty()) {
    const std::string tmp = port_file + ".tmp";
    std::ofstream(tmp) << bound << '\n';
    std::rename(tmp.c_str(), port_file.c_str());
  }
  std::cout << "PORT " << bound << std::endl;
  server.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictor protocol reference endpoint"};
  Config config;
  std::string classes = "0,1";
  int http_port = -1;
  std::string port_file;
  app.add_option("--task", config.task)
      ->check(CLI::IsMember({"regression", "binary", "multiclass"}));
  app.add_option("--classes", classes, "comma-separated class labels");
  app.add_option("--batch-max", config.batch_max)->check(CLI::PositiveNumber);
  app.add_flag("--concurrent", config.concurrent);
  app.add_option("--mode", config.mode)
      ->check(CLI::IsMember({"ok", "wrong-count", "error", "silent", "silent-predict",
                             "garbage", "oversize"}));
  app.add_option("--log", config.log, "append each request's row count to FILE");
  app.add_option("--http", http_port, "serve HTTP on PORT (0 picks one)");
  app.add_option("--port-file", port_file, "write the bound HTTP port to FILE");
  CLI11_PARSE(app, argc, argv);

  if (config.task != "regression") {
    size_t start = 0;
    while (start <= classes.size()) {
      const size_t comma = classes.find(',', start);
      config.classes.push_back(classes.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (http_port >= 0) return ServeHttp(config, http_port, port_file);
  return ServeStdio(config);
}
