#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qrhint {

/// Child process with piped stdin/stdout, launched via /bin/sh -c in its own
/// process group so a timeout can kill the whole tree.
class PipeProcess {
 public:
  explicit PipeProcess(const std::string& shell_command);
  ~PipeProcess();

  PipeProcess(const PipeProcess&) = delete;
  PipeProcess& operator=(const PipeProcess&) = delete;

  bool running();
  bool write_all(const std::string& data);
  /// Reads until a line equal to `sentinel` appears or the deadline passes.
  /// Returns everything read before the sentinel, or nullopt on timeout/EOF.
  std::optional<std::string> read_until_line(const std::string& sentinel, int timeout_ms);
  void kill_now();

 private:
  int pid_ = -1;
  int in_fd_ = -1;   // child's stdin (we write)
  int out_fd_ = -1;  // child's stdout (we read)
  std::string buf_;
};

/// Runs a command to completion with input on stdin; returns stdout or
/// nullopt on timeout / spawn failure.
std::optional<std::string> run_command_capture(const std::string& shell_command,
                                               const std::string& stdin_data, int timeout_ms);

bool command_exists(const std::string& name);

}  // namespace qrhint
