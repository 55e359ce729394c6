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

// Child processes for the CLI and the HTTP predictor stub.

#ifndef ENSEMBLE_LENS_TESTS_SUPPORT_PROCESS_H_
#define ENSEMBLE_LENS_TESTS_SUPPORT_PROCESS_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <sys/types.h>

namespace ensemble_lens::testing {

// Absolute paths of the built tools, injected by the build.
std::string CliPath();
std::string StubPath();

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs argv (no shell) and collects stdout, stderr and the exit status.
CommandResult Run(const std::vector<std::string>& argv);

// Shell-quoted command line for `/bin/sh -c`.
std::string ShellCommand(const std::vector<std::string>& argv);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& text);

// A background process with its output discarded; killed (whole group) on
// destruction.
class Background {
 public:
  explicit Background(const std::vector<std::string>& argv);
  ~Background();
  Background(const Background&) = delete;
  Background& operator=(const Background&) = delete;

  pid_t pid() const { return pid_; }
  // Sends SIGTERM and waits; returns the exit status (or 128 + signal).
  int Terminate();

 private:
  pid_t pid_ = -1;
  bool reaped_ = false;
  int status_ = 0;
};

// Predictor stub serving HTTP on an ephemeral port.
class HttpStub {
 public:
  explicit HttpStub(std::vector<std::string> args);
  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  std::filesystem::path dir_;
  std::unique_ptr<Background> process_;
  int port_ = 0;
};

// An ephemeral loopback port that was free a moment ago.
int FreePort();

// Waits for an HTTP listener on 127.0.0.1:port to accept connections.
bool WaitForPort(int port, int timeout_ms);

}  // namespace ensemble_lens::testing

#endif  // ENSEMBLE_LENS_TESTS_SUPPORT_PROCESS_H_
