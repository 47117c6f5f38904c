#include "qrhint/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace qrhint {

using Clock = std::chrono::steady_clock;

PipeProcess::PipeProcess(const std::string& shell_command) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) return;
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    return;
  }
  pid_t pid = fork();
  if (pid < 0) {
    close(in_pipe[0]); close(in_pipe[1]);
    close(out_pipe[0]); close(out_pipe[1]);
    return;
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]); close(in_pipe[1]);
    close(out_pipe[0]); close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", shell_command.c_str(), (char*)nullptr);
    _exit(127);
  }
  setpgid(pid, pid);
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  in_fd_ = in_pipe[1];
  out_fd_ = out_pipe[0];
  fcntl(out_fd_, F_SETFL, O_NONBLOCK);
  signal(SIGPIPE, SIG_IGN);
}

PipeProcess::~PipeProcess() { kill_now(); }

bool PipeProcess::running() {
  if (pid_ < 0) return false;
  int status;
  pid_t r = waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    pid_ = -1;
    return false;
  }
  return r == 0;
}

bool PipeProcess::write_all(const std::string& data) {
  if (in_fd_ < 0) return false;
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = write(in_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

std::optional<std::string> PipeProcess::read_until_line(const std::string& sentinel,
                                                        int timeout_ms) {
  auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    // scan buffered lines for the sentinel
    size_t start = 0;
    for (;;) {
      size_t nl = buf_.find('\n', start);
      if (nl == std::string::npos) break;
      std::string line = buf_.substr(start, nl - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line == sentinel) {
        std::string before = buf_.substr(0, start);
        buf_.erase(0, nl + 1);
        return before;
      }
      start = nl + 1;
    }
    auto now = Clock::now();
    if (now >= deadline) return std::nullopt;
    int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
    struct pollfd pfd = {out_fd_, POLLIN, 0};
    int pr = poll(&pfd, 1, std::min(wait_ms, 100));
    if (pr < 0 && errno != EINTR) return std::nullopt;
    if (pr > 0) {
      char chunk[4096];
      ssize_t n = read(out_fd_, chunk, sizeof chunk);
      if (n > 0) buf_.append(chunk, static_cast<size_t>(n));
      else if (n == 0) return std::nullopt;  // EOF
      else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) return std::nullopt;
    }
    if (pr == 0 && !running() && buf_.find('\n') == std::string::npos) return std::nullopt;
  }
}

void PipeProcess::kill_now() {
  if (pid_ >= 0) {
    kill(-pid_, SIGKILL);
    int status;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
  if (in_fd_ >= 0) { close(in_fd_); in_fd_ = -1; }
  if (out_fd_ >= 0) { close(out_fd_); out_fd_ = -1; }
}

std::optional<std::string> run_command_capture(const std::string& shell_command,
                                               const std::string& stdin_data, int timeout_ms) {
  char in_name[] = "/tmp/qrhint_in_XXXXXX";
  char out_name[] = "/tmp/qrhint_out_XXXXXX";
  int in_fd = mkstemp(in_name);
  int out_fd = mkstemp(out_name);
  if (in_fd < 0 || out_fd < 0) return std::nullopt;
  (void)!write(in_fd, stdin_data.data(), stdin_data.size());
  close(in_fd);
  close(out_fd);
  std::string cmd = "timeout " + std::to_string((timeout_ms + 999) / 1000) + "s " +
                    shell_command + " < " + in_name + " > " + out_name + " 2>&1";
  int rc = system(cmd.c_str());
  (void)rc;
  std::string out;
  {
    FILE* f = fopen(out_name, "rb");
    if (f) {
      char chunk[4096];
      size_t n;
      while ((n = fread(chunk, 1, sizeof chunk, f)) > 0) out.append(chunk, n);
      fclose(f);
    }
  }
  unlink(in_name);
  unlink(out_name);
  return out;
}

bool command_exists(const std::string& name) {
  const char* path = getenv("PATH");
  if (!path) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    std::string full = dir + "/" + name;
    if (access(full.c_str(), X_OK) == 0) return true;
  }
  return false;
}

}  // namespace qrhint
