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

#include "ensemble_lens/predictor.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <thread>

#include "httplib.h"

extern char** environ;

namespace ensemble_lens::predictor {
namespace {

template <typename Json>
bool IsCount(const Json& v) {
  return v.is_number_integer() && v.template get<int64_t>() >= 0;
}

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kStochasticTolerance = 1e-9;
constexpr size_t kExcerptLength = 200;

[[noreturn]] void Malformed(const std::string& message) {
  throw Error(ErrorCode::kMalformedSpec, message);
}

[[noreturn]] void Violation(const std::string& message,
                            std::string_view payload = {}) {
  std::string text = message;
  if (!payload.empty()) {
    text += ": ";
    text += payload.substr(0, kExcerptLength);
    if (payload.size() > kExcerptLength) text += "...";
  }
  throw Error(ErrorCode::kProtocolViolation, text);
}

std::string LabelString(const json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

std::vector<std::string> Labels(const json& classes) {
  if (!classes.is_array()) Malformed("\"classes\" must be an array");
  std::vector<std::string> out;
  for (const auto& c : classes) out.push_back(LabelString(c));
  return out;
}

double Number(const json& value, const std::string& what) {
  if (!value.is_number()) Malformed(what + " must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) Malformed(what + " must be finite");
  return v;
}

std::vector<std::string> FeatureNames(const json& spec) {
  if (!spec.contains("features") || !spec["features"].is_array()) {
    Malformed("builtin spec needs a \"features\" array");
  }
  std::vector<std::string> out;
  for (const auto& f : spec["features"]) {
    if (!f.is_string()) Malformed("feature names must be strings");
    out.push_back(f.get<std::string>());
  }
  return out;
}

double Sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// Resolves spec feature names to columns of each request.
std::vector<const FeatureColumn*> Bind(const FeatureTable& rows,
                                       const std::vector<std::string>& names) {
  std::vector<const FeatureColumn*> out;
  for (const auto& name : names) {
    const auto j = rows.FindColumn(name);
    if (!j) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "predictor needs feature \"" + name +
                      "\", which the rows do not have");
    }
    out.push_back(&rows.columns[*j]);
  }
  return out;
}

// One feature's contribution to a linear score.
struct Term {
  std::optional<double> slope;
  std::map<std::string, double> levels;

  static Term Parse(const json& value, const std::string& where) {
    Term term;
    if (value.is_object()) {
      for (const auto& [level, c] : value.items()) {
        term.levels[level] = Number(c, where + "[" + level + "]");
      }
    } else {
      term.slope = Number(value, where);
    }
    return term;
  }

  double Apply(const FeatureColumn& column, size_t i) const {
    const bool numeric = column.meta.kind == FeatureKind::kNumeric;
    if (slope) {
      if (!numeric) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "feature \"" + column.meta.name +
                        "\" is categorical but has a numeric coefficient");
      }
      return *slope * column.numeric[i];
    }
    if (numeric) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "feature \"" + column.meta.name +
                      "\" is numeric but has per-level coefficients");
    }
    const auto it = levels.find(column.categorical[i]);
    return it == levels.end() ? 0.0 : it->second;
  }
};

struct LinearScore {
  double intercept = 0.0;
  std::vector<Term> terms;

  static LinearScore Parse(const json& intercept, const json& coefficients,
                           size_t p, const std::string& where) {
    LinearScore score;
    score.intercept = intercept.is_null() ? 0.0
                                          : Number(intercept, where + ".intercept");
    if (!coefficients.is_array()) {
      Malformed(where + ".coefficients must be an array");
    }
    if (coefficients.size() != p) {
      throw Error(ErrorCode::kCoefficientArityMismatch,
                  where + " has " + std::to_string(coefficients.size()) +
                      " coefficients for " + std::to_string(p) + " features");
    }
    for (size_t f = 0; f < p; ++f) {
      score.terms.push_back(Term::Parse(
          coefficients[f], where + ".coefficients[" + std::to_string(f) + "]"));
    }
    return score;
  }

  double Eval(const std::vector<const FeatureColumn*>& columns,
              size_t i) const {
    double s = intercept;
    for (size_t f = 0; f < terms.size(); ++f) s += terms[f].Apply(*columns[f], i);
    return s;
  }
};

class LinearPredictor final : public Predictor {
 public:
  LinearPredictor(std::vector<std::string> features, LinearScore score)
      : Predictor(TaskKind::kRegression, {}, {kDefaultBatchMax, true}),
        features_(std::move(features)),
        score_(std::move(score)) {}

 protected:
  PredictionSet PredictBatch(const FeatureTable& rows) const override {
    const auto columns = Bind(rows, features_);
    PredictionSet out;
    out.values.resize(rows.num_rows);
    for (size_t i = 0; i < rows.num_rows; ++i) out.values[i] = score_.Eval(columns, i);
    return out;
  }

 private:
  std::vector<std::string> features_;
  LinearScore score_;
};

class LogisticPredictor final : public Predictor {
 public:
  LogisticPredictor(TaskKind task, std::vector<std::string> classes,
                    std::vector<std::string> features,
                    std::vector<LinearScore> scores)
      : Predictor(task, std::move(classes), {kDefaultBatchMax, true}),
        features_(std::move(features)),
        scores_(std::move(scores)) {}

 protected:
  PredictionSet PredictBatch(const FeatureTable& rows) const override {
    const auto columns = Bind(rows, features_);
    const size_t k = class_labels_.size();
    PredictionSet out;
    out.probabilities = ProbabilityMatrix(rows.num_rows, k);
    std::vector<double> s(scores_.size());
    for (size_t i = 0; i < rows.num_rows; ++i) {
      auto row = out.probabilities->row(i);
      if (task_ == TaskKind::kBinary) {
        const double p1 = Sigmoid(scores_[0].Eval(columns, i));
        row[0] = 1.0 - p1;
        row[1] = p1;
        continue;
      }
      for (size_t c = 0; c < k; ++c) s[c] = scores_[c].Eval(columns, i);
      const double top = *std::max_element(s.begin(), s.end());
      double total = 0.0;
      for (size_t c = 0; c < k; ++c) total += row[c] = std::exp(s[c] - top);
      for (size_t c = 0; c < k; ++c) row[c] /= total;
    }
    return out;
  }

 private:
  std::vector<std::string> features_;
  std::vector<LinearScore> scores_;
};

struct TreeNode {
  // Internal node: feature index into the spec's features, else -1.
  int feature = -1;
  std::optional<double> threshold;
  std::vector<std::string> levels;
  size_t left = 0;
  size_t right = 0;
  double value = 0.0;
  std::vector<double> probabilities;
};

class TreePredictor final : public Predictor {
 public:
  TreePredictor(TaskKind task, std::vector<std::string> classes,
                std::vector<std::string> features, std::vector<TreeNode> nodes)
      : Predictor(task, std::move(classes), {kDefaultBatchMax, true}),
        features_(std::move(features)),
        nodes_(std::move(nodes)) {}

 protected:
  PredictionSet PredictBatch(const FeatureTable& rows) const override {
    const auto columns = Bind(rows, features_);
    PredictionSet out;
    if (task_ == TaskKind::kRegression) {
      out.values.resize(rows.num_rows);
    } else {
      out.probabilities = ProbabilityMatrix(rows.num_rows, class_labels_.size());
    }
    for (size_t i = 0; i < rows.num_rows; ++i) {
      const TreeNode& leaf = Route(columns, i);
      if (task_ == TaskKind::kRegression) {
        out.values[i] = leaf.value;
      } else {
        std::copy(leaf.probabilities.begin(), leaf.probabilities.end(),
                  out.probabilities->row(i).begin());
      }
    }
    return out;
  }

 private:
  const TreeNode& Route(const std::vector<const FeatureColumn*>& columns,
                        size_t i) const {
    const TreeNode* node = &nodes_[0];
    while (node->feature >= 0) {
      const FeatureColumn& column = *columns[node->feature];
      bool left = false;
      if (node->threshold) {
        if (column.meta.kind != FeatureKind::kNumeric) {
          throw Error(ErrorCode::kSchemaMismatch,
                      "threshold split on categorical feature \"" +
                          column.meta.name + "\"");
        }
        left = column.numeric[i] <= *node->threshold;
      } else {
        if (column.meta.kind != FeatureKind::kCategorical) {
          throw Error(ErrorCode::kSchemaMismatch,
                      "level split on numeric feature \"" + column.meta.name +
                          "\"");
        }
        left = std::find(node->levels.begin(), node->levels.end(),
                         column.categorical[i]) != node->levels.end();
      }
      node = &nodes_[left ? node->left : node->right];
    }
    return *node;
  }

  std::vector<std::string> features_;
  std::vector<TreeNode> nodes_;
};

void CheckAcyclic(const std::vector<TreeNode>& nodes) {
  // 0 unvisited, 1 on the current path, 2 finished.
  std::vector<int> state(nodes.size(), 0);
  std::vector<std::pair<size_t, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto& [id, step] = stack.back();
    const TreeNode& node = nodes[id];
    if (step == 0) {
      if (state[id] == 1) Malformed("tree has a cycle through node " + std::to_string(id));
      if (state[id] == 2 || node.feature < 0) {
        state[id] = 2;
        stack.pop_back();
        continue;
      }
      state[id] = 1;
    }
    if (step < 2) {
      const size_t child = step == 0 ? node.left : node.right;
      ++step;
      if (state[child] == 1) {
        Malformed("tree has a cycle through node " + std::to_string(child));
      }
      stack.emplace_back(child, 0);
      continue;
    }
    state[id] = 2;
    stack.pop_back();
  }
}

std::shared_ptr<const Predictor> LoadTree(const json& spec) {
  if (!spec.contains("task") || !spec["task"].is_string()) {
    Malformed("tree spec needs a \"task\"");
  }
  TaskKind task;
  try {
    task = ParseTaskKind(spec["task"].get<std::string>());
  } catch (const Error&) {
    Malformed("unknown tree task \"" + spec["task"].get<std::string>() + "\"");
  }
  std::vector<std::string> classes;
  if (IsClassification(task)) {
    if (!spec.contains("classes")) Malformed("classification tree needs \"classes\"");
    classes = Labels(spec["classes"]);
    if (classes.size() < 2 || (task == TaskKind::kBinary && classes.size() != 2)) {
      Malformed("class count does not fit the tree task");
    }
  }
  const std::vector<std::string> features = FeatureNames(spec);
  if (!spec.contains("nodes") || !spec["nodes"].is_array() || spec["nodes"].empty()) {
    Malformed("tree spec needs a non-empty \"nodes\" array");
  }
  const json& raw = spec["nodes"];
  std::vector<TreeNode> nodes(raw.size());
  for (size_t id = 0; id < raw.size(); ++id) {
    const json& n = raw[id];
    const std::string where = "nodes[" + std::to_string(id) + "]";
    if (!n.is_object()) Malformed(where + " must be an object");
    TreeNode& node = nodes[id];
    if (n.contains("feature")) {
      const auto it = std::find(features.begin(), features.end(),
                                n["feature"].is_string() ? n["feature"].get<std::string>()
                                                         : std::string());
      if (it == features.end()) Malformed(where + " splits on an undeclared feature");
      node.feature = static_cast<int>(it - features.begin());
      if (n.contains("threshold")) {
        node.threshold = Number(n["threshold"], where + ".threshold");
      } else if (n.contains("levels") && n["levels"].is_array()) {
        node.levels = Labels(n["levels"]);
      } else {
        Malformed(where + " needs a \"threshold\" or \"levels\"");
      }
      for (const char* side : {"left", "right"}) {
        if (!n.contains(side) || !IsCount(n[side]) ||
            n[side].get<size_t>() >= raw.size()) {
          Malformed(where + "." + side + " must index a node");
        }
      }
      node.left = n["left"].get<size_t>();
      node.right = n["right"].get<size_t>();
    } else if (task == TaskKind::kRegression) {
      if (!n.contains("value")) Malformed(where + " is a leaf without \"value\"");
      node.value = Number(n["value"], where + ".value");
    } else {
      if (!n.contains("probabilities") || !n["probabilities"].is_array() ||
          n["probabilities"].size() != classes.size()) {
        Malformed(where + " needs one probability per class");
      }
      double total = 0.0;
      for (const auto& p : n["probabilities"]) {
        const double v = Number(p, where + ".probabilities");
        if (v < 0.0) Malformed(where + " has a negative probability");
        node.probabilities.push_back(v);
        total += v;
      }
      if (std::abs(total - 1.0) > kStochasticTolerance) {
        Malformed(where + " probabilities do not sum to 1");
      }
    }
  }
  CheckAcyclic(nodes);
  return std::make_shared<TreePredictor>(task, std::move(classes), features,
                                         std::move(nodes));
}

std::shared_ptr<const Predictor> LoadLogistic(const json& spec) {
  const std::vector<std::string> features = FeatureNames(spec);
  std::vector<std::string> classes =
      spec.contains("classes") ? Labels(spec["classes"])
                               : std::vector<std::string>{"0", "1"};
  if (classes.size() < 2) Malformed("logistic spec needs at least two classes");
  const json& coefficients = spec.value("coefficients", json::array());
  const json intercept = spec.value("intercept", json());
  if (classes.size() == 2 && !(coefficients.size() > 0 && coefficients[0].is_array())) {
    std::vector<LinearScore> scores{
        LinearScore::Parse(intercept, coefficients, features.size(), "logistic")};
    return std::make_shared<LogisticPredictor>(TaskKind::kBinary, std::move(classes),
                                               features, std::move(scores));
  }
  if (!coefficients.is_array() || coefficients.size() != classes.size()) {
    throw Error(ErrorCode::kCoefficientArityMismatch,
                "multiclass logistic needs one coefficient row per class");
  }
  if (!intercept.is_null() &&
      (!intercept.is_array() || intercept.size() != classes.size())) {
    throw Error(ErrorCode::kCoefficientArityMismatch,
                "multiclass logistic needs one intercept per class");
  }
  std::vector<LinearScore> scores;
  for (size_t c = 0; c < classes.size(); ++c) {
    scores.push_back(LinearScore::Parse(intercept.is_null() ? json() : intercept[c],
                                        coefficients[c], features.size(),
                                        "logistic[class " + classes[c] + "]"));
  }
  const TaskKind task = classes.size() == 2 ? TaskKind::kBinary : TaskKind::kMulticlass;
  if (task == TaskKind::kBinary) {
    // Two-score softmax equals the sigmoid of the score difference.
    LinearScore diff = scores[1];
    diff.intercept -= scores[0].intercept;
    for (size_t f = 0; f < diff.terms.size(); ++f) {
      const Term& base = scores[0].terms[f];
      Term& term = diff.terms[f];
      if (term.slope.has_value() != base.slope.has_value()) {
        Malformed("coefficient kinds differ between classes");
      }
      if (term.slope) {
        *term.slope -= *base.slope;
      } else {
        for (const auto& [level, v] : base.levels) term.levels[level] -= v;
      }
    }
    scores = {std::move(diff)};
  }
  return std::make_shared<LogisticPredictor>(task, std::move(classes), features,
                                             std::move(scores));
}

// ---- external endpoints ----

class Transport {
 public:
  virtual ~Transport() = default;
  // Sends one request and returns the raw reply text. Throws
  // Error(kHandshakeTimeout) during the handshake and
  // Error(kPredictorUnavailable) afterwards when no reply arrives in time.
  virtual std::string Exchange(const json& request, bool handshake,
                               std::chrono::milliseconds timeout) = 0;
};

[[noreturn]] void NoReply(bool handshake, const std::string& message) {
  throw Error(handshake ? ErrorCode::kHandshakeTimeout
                        : ErrorCode::kPredictorUnavailable,
              message);
}

void IgnoreSigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class StdioTransport final : public Transport {
 public:
  explicit StdioTransport(const std::string& command) : command_(command) {
    IgnoreSigpipe();
    int in[2], out[2];
    if (::pipe2(in, O_CLOEXEC) != 0) Unavailable("pipe");
    if (::pipe2(out, O_CLOEXEC) != 0) {
      ::close(in[0]);
      ::close(in[1]);
      Unavailable("pipe");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setpgroup(&attr, 0);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr,
                                 const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    ::close(in[0]);
    ::close(out[1]);
    to_child_ = in[1];
    from_child_ = out[0];
    if (rc != 0) {
      pid_ = -1;
      Unavailable(std::strerror(rc));
    }
  }

  ~StdioTransport() override {
    if (to_child_ >= 0) ::close(to_child_);
    if (pid_ > 0) {
      const auto deadline = Clock::now() + std::chrono::milliseconds(500);
      int status = 0;
      while (::waitpid(pid_, &status, WNOHANG) == 0) {
        if (Clock::now() >= deadline) {
          ::kill(-pid_, SIGKILL);
          ::waitpid(pid_, &status, 0);
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
    }
    if (from_child_ >= 0) ::close(from_child_);
  }

  std::string Exchange(const json& request, bool handshake,
                       std::chrono::milliseconds timeout) override {
    std::lock_guard lock(mutex_);
    if (broken_) {
      throw Error(ErrorCode::kPredictorUnavailable,
                  "endpoint \"" + command_ + "\" stopped responding earlier");
    }
    const std::string line = request.dump() + "\n";
    size_t written = 0;
    while (written < line.size()) {
      const ssize_t w = ::write(to_child_, line.data() + written, line.size() - written);
      if (w < 0 && errno == EINTR) continue;
      if (w <= 0) {
        broken_ = true;
        NoReply(handshake, "endpoint \"" + command_ + "\" closed its input");
      }
      written += static_cast<size_t>(w);
    }
    const auto deadline = Clock::now() + timeout;
    while (true) {
      const size_t eol = buffer_.find('\n');
      if (eol != std::string::npos) {
        std::string reply = buffer_.substr(0, eol);
        buffer_.erase(0, eol + 1);
        if (reply.find_first_not_of(" \t\r") == std::string::npos) continue;
        return reply;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) {
        broken_ = true;
        NoReply(handshake, "no reply from \"" + command_ + "\" within " +
                               std::to_string(timeout.count()) + " ms");
      }
      pollfd fd{from_child_, POLLIN, 0};
      const int ready = ::poll(&fd, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready <= 0) continue;
      char chunk[65536];
      const ssize_t r = ::read(from_child_, chunk, sizeof chunk);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) {
        broken_ = true;
        NoReply(handshake, "endpoint \"" + command_ + "\" exited without replying");
      }
      buffer_.append(chunk, static_cast<size_t>(r));
    }
  }

 private:
  [[noreturn]] void Unavailable(const std::string& what) {
    throw Error(ErrorCode::kHandshakeTimeout,
                "cannot start \"" + command_ + "\": " + what);
  }

  std::string command_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool broken_ = false;
  std::mutex mutex_;
};

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const std::string& url) : url_(url) {
    const size_t scheme = url.find("://");
    const size_t slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    origin_ = url.substr(0, slash);
    if (slash != std::string::npos) prefix_ = url.substr(slash);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  std::string Exchange(const json& request, bool handshake,
                       std::chrono::milliseconds timeout) override {
    httplib::Client client(origin_);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    const bool describe = request.value("op", "") == "describe";
    httplib::Result result =
        describe ? client.Get(prefix_ + "/describe")
                 : client.Post(prefix_ + "/predict", request.dump(), "application/json");
    if (!result) {
      NoReply(handshake, "no reply from " + url_ + ": " +
                             httplib::to_string(result.error()));
    }
    if (result->status != 200) {
      // Error documents are accepted with any status.
      const json body = json::parse(result->body, nullptr, false);
      if (!body.is_discarded() && body.is_object() && body.contains("error")) {
        return result->body;
      }
      Violation("HTTP " + std::to_string(result->status) + " from " + url_,
                result->body);
    }
    return result->body;
  }

 private:
  std::string url_;
  std::string origin_;
  std::string prefix_;
};

json ParseReply(const std::string& text, int64_t id) {
  json reply = json::parse(text, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) {
    Violation("reply is not a JSON object", text);
  }
  if (reply.contains("error")) {
    const json& error = reply["error"];
    std::string code = "Error", message;
    if (error.is_object()) {
      code = error.value("code", code);
      message = error.value("message", "");
    } else {
      message = error.dump();
    }
    throw Error(ErrorCode::kRemoteError, "endpoint error " + code + ": " + message);
  }
  if (!reply.contains("id") || !reply["id"].is_number_integer() ||
      reply["id"].get<int64_t>() != id) {
    Violation("reply id does not match request id " + std::to_string(id), text);
  }
  return reply;
}

class ExternalPredictor final : public Predictor {
 public:
  ExternalPredictor(std::unique_ptr<Transport> transport, TaskKind task,
                    std::vector<std::string> classes, Capabilities capabilities,
                    std::chrono::milliseconds timeout)
      : Predictor(task, std::move(classes), capabilities),
        transport_(std::move(transport)),
        timeout_(timeout) {}

 protected:
  PredictionSet PredictBatch(const FeatureTable& rows) const override {
    const int64_t id = next_id_.fetch_add(1);
    json request;
    request["op"] = "predict";
    request["id"] = id;
    json features = json::array();
    for (size_t i = 0; i < rows.num_rows; ++i) {
      json row = json::array();
      for (const auto& column : rows.columns) {
        if (column.meta.kind == FeatureKind::kNumeric) {
          row.push_back(column.numeric[i]);
        } else {
          row.push_back(column.categorical[i]);
        }
      }
      features.push_back(std::move(row));
    }
    request["features"] = std::move(features);
    json columns = json::array();
    for (const auto& column : rows.columns) columns.push_back(column.meta.name);
    request["columns"] = std::move(columns);

    const std::string text = transport_->Exchange(request, false, timeout_);
    const json reply = ParseReply(text, id);
    return Decode(reply, rows.num_rows, text);
  }

 private:
  PredictionSet Decode(const json& reply, size_t n, const std::string& text) const {
    PredictionSet out;
    auto count_check = [&](const json& array, const char* key) {
      if (!array.is_array()) Violation(std::string("\"") + key + "\" is not an array", text);
      if (array.size() != n) {
        Violation("expected " + std::to_string(n) + " " + key + ", got " +
                      std::to_string(array.size()),
                  text);
      }
    };
    if (task_ == TaskKind::kRegression) {
      if (!reply.contains("predictions")) Violation("reply has no predictions", text);
      const json& values = reply["predictions"];
      count_check(values, "predictions");
      out.values.reserve(n);
      for (const auto& v : values) {
        if (!v.is_number()) Violation("regression prediction is not a number", text);
        out.values.push_back(v.get<double>());
      }
      return out;
    }
    const size_t k = class_labels_.size();
    if (reply.contains("probabilities")) {
      const json& rows = reply["probabilities"];
      count_check(rows, "probabilities");
      out.probabilities = ProbabilityMatrix(n, k);
      for (size_t i = 0; i < n; ++i) {
        if (!rows[i].is_array() || rows[i].size() != k) {
          Violation("probability row " + std::to_string(i) + " does not have " +
                        std::to_string(k) + " entries",
                    text);
        }
        for (size_t c = 0; c < k; ++c) {
          if (!rows[i][c].is_number()) Violation("probability is not a number", text);
          out.probabilities->at(i, c) = rows[i][c].get<double>();
        }
      }
      return out;
    }
    if (!reply.contains("predictions")) {
      Violation("reply has neither predictions nor probabilities", text);
    }
    const json& labels = reply["predictions"];
    count_check(labels, "predictions");
    out.codes.reserve(n);
    for (const auto& label : labels) {
      const std::string name = LabelString(label);
      const auto it = std::find(class_labels_.begin(), class_labels_.end(), name);
      if (it == class_labels_.end()) Violation("undeclared class label " + name, text);
      out.codes.push_back(static_cast<int>(it - class_labels_.begin()));
    }
    return out;
  }

  std::unique_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
  mutable std::atomic<int64_t> next_id_{1};
};

}  // namespace

PredictionSet Predictor::Predict(const FeatureTable& rows) const {
  const size_t n = rows.num_rows;
  const bool classification = IsClassification(task_);
  const size_t k = class_labels_.size();
  PredictionSet out;
  if (classification) {
    out.codes.reserve(n);
  } else {
    out.values.reserve(n);
  }
  std::optional<ProbabilityMatrix> probabilities;
  bool have_probabilities = false;
  const size_t batch = std::max<size_t>(capabilities_.batch_max, 1);
  for (size_t begin = 0; begin < n; begin += batch) {
    const size_t end = std::min(n, begin + batch);
    const bool whole = begin == 0 && end == n;
    PredictionSet part;
    {
      std::unique_lock<std::mutex> lock(gate_, std::defer_lock);
      if (!capabilities_.concurrent) lock.lock();
      part = whole ? PredictBatch(rows) : PredictBatch(rows.Slice(begin, end));
    }
    const size_t m = end - begin;
    if (!classification) {
      if (part.values.size() != m) {
        Violation("expected " + std::to_string(m) + " predictions, got " +
                  std::to_string(part.values.size()));
      }
      out.values.insert(out.values.end(), part.values.begin(), part.values.end());
      continue;
    }
    if (begin == 0) have_probabilities = part.probabilities.has_value();
    if (part.probabilities.has_value() != have_probabilities) {
      Violation("predictor switched between labels and probabilities");
    }
    if (part.probabilities) {
      const ProbabilityMatrix& p = *part.probabilities;
      if (p.rows() != m || p.cols() != k) {
        Violation("expected a " + std::to_string(m) + "x" + std::to_string(k) +
                  " probability matrix, got " + std::to_string(p.rows()) + "x" +
                  std::to_string(p.cols()));
      }
      if (!probabilities) probabilities = ProbabilityMatrix(n, k);
      for (size_t i = 0; i < m; ++i) {
        double total = 0.0;
        for (size_t c = 0; c < k; ++c) {
          const double v = p.at(i, c);
          if (!(v >= -kStochasticTolerance && v <= 1.0 + kStochasticTolerance)) {
            Violation("probability row " + std::to_string(begin + i) +
                      " has an entry outside [0, 1]");
          }
          total += v;
          probabilities->at(begin + i, c) = v;
        }
        if (std::abs(total - 1.0) > kStochasticTolerance) {
          Violation("probability row " + std::to_string(begin + i) +
                    " does not sum to 1");
        }
        if (part.codes.empty()) out.codes.push_back(ArgMax(p.row(i)));
      }
    }
    if (!part.codes.empty()) {
      if (part.codes.size() != m) {
        Violation("expected " + std::to_string(m) + " labels, got " +
                  std::to_string(part.codes.size()));
      }
      for (int code : part.codes) {
        if (code < 0 || static_cast<size_t>(code) >= k) {
          Violation("label code " + std::to_string(code) + " out of range");
        }
      }
      out.codes.insert(out.codes.end(), part.codes.begin(), part.codes.end());
    } else if (!part.probabilities && m > 0) {
      Violation("classification predictor returned neither labels nor probabilities");
    }
  }
  if (classification && (have_probabilities || n == 0)) {
    out.probabilities = probabilities ? std::move(*probabilities)
                                      : ProbabilityMatrix(n, k);
  }
  return out;
}

std::shared_ptr<const Predictor> LoadBuiltin(const nlohmann::json& spec) {
  if (!spec.is_object()) Malformed("builtin spec must be a JSON object");
  if (!spec.contains("kind") || !spec["kind"].is_string()) {
    Malformed("builtin spec needs a \"kind\"");
  }
  const std::string kind = spec["kind"].get<std::string>();
  if (kind == "linear") {
    const std::vector<std::string> features = FeatureNames(spec);
    return std::make_shared<LinearPredictor>(
        features,
        LinearScore::Parse(spec.value("intercept", json()),
                           spec.value("coefficients", json::array()),
                           features.size(), "linear"));
  }
  if (kind == "logistic") return LoadLogistic(spec);
  if (kind == "tree") return LoadTree(spec);
  Malformed("unknown builtin kind \"" + kind + "\"");
}

std::shared_ptr<const Predictor> ConnectExternal(const std::string& endpoint,
                                                 const ExternalOptions& options) {
  std::unique_ptr<Transport> transport;
  if (endpoint.rfind("http://", 0) == 0) {
    transport = std::make_unique<HttpTransport>(endpoint);
  } else {
    transport = std::make_unique<StdioTransport>(endpoint);
  }
  const std::string text = transport->Exchange({{"op", "describe"}, {"id", 0}}, true,
                                               options.handshake_timeout);
  const json reply = ParseReply(text, 0);
  if (!reply.contains("task") || !reply["task"].is_string()) {
    Violation("describe reply has no task", text);
  }
  TaskKind task;
  try {
    task = ParseTaskKind(reply["task"].get<std::string>());
  } catch (const Error&) {
    Violation("describe reply has an unknown task", text);
  }
  std::vector<std::string> classes;
  if (IsClassification(task)) {
    if (!reply.contains("classes") || !reply["classes"].is_array()) {
      Violation("classification endpoint did not declare its classes", text);
    }
    for (const auto& c : reply["classes"]) classes.push_back(LabelString(c));
    if (classes.size() < 2 || (task == TaskKind::kBinary && classes.size() != 2)) {
      Violation("declared classes do not fit the task", text);
    }
  }
  Capabilities capabilities;
  if (reply.contains("batch_max")) {
    if (!IsCount(reply["batch_max"]) || reply["batch_max"].get<size_t>() == 0) {
      Violation("batch_max must be a positive integer", text);
    }
    capabilities.batch_max = reply["batch_max"].get<size_t>();
  }
  capabilities.concurrent = reply.value("concurrent", false);
  return std::make_shared<ExternalPredictor>(std::move(transport), task,
                                             std::move(classes), capabilities,
                                             options.request_timeout);
}

std::shared_ptr<const Predictor> FromReference(
    const nlohmann::ordered_json& reference) {
  if (!reference.is_object()) Malformed("predictor reference must be an object");
  const std::string kind = reference.value("kind", "");
  if (kind == "builtin") {
    if (!reference.contains("spec")) Malformed("builtin reference has no \"spec\"");
    return LoadBuiltin(json::parse(reference["spec"].dump()));
  }
  if (kind == "external") {
    ExternalOptions options;
    if (reference.contains("timeout_ms")) {
      if (!IsCount(reference["timeout_ms"])) {
        Malformed("timeout_ms must be a non-negative integer");
      }
      options.handshake_timeout =
          std::chrono::milliseconds(reference["timeout_ms"].get<int64_t>());
    }
    if (reference.contains("url")) {
      return ConnectExternal(reference["url"].get<std::string>(), options);
    }
    if (reference.contains("command")) {
      return ConnectExternal(reference["command"].get<std::string>(), options);
    }
    Malformed("external reference needs a \"command\" or \"url\"");
  }
  if (kind == "linear" || kind == "logistic" || kind == "tree") {
    return LoadBuiltin(json::parse(reference.dump()));
  }
  Malformed("unknown predictor reference kind \"" + kind + "\"");
}

}  // namespace ensemble_lens::predictor
