#include "recomp/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>

#include "recomp/error.hpp"

extern char** environ;

namespace recomp {
namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw ExecError(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  Pipe(const Pipe&) = delete;
  Pipe& operator=(const Pipe&) = delete;
  void close_read() {
    if (fd[0] >= 0) ::close(fd[0]);
    fd[0] = -1;
  }
  void close_write() {
    if (fd[1] >= 0) ::close(fd[1]);
    fd[1] = -1;
  }
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

bool is_executable(const std::filesystem::path& p) {
  std::error_code ec;
  return std::filesystem::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

}  // namespace

std::optional<std::filesystem::path> find_executable(const std::string& program) {
  if (program.empty()) return std::nullopt;
  if (program.find('/') != std::string::npos) {
    if (is_executable(program)) return std::filesystem::path(program);
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  std::string path = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find(':', start);
    if (end == std::string::npos) end = path.size();
    std::string dir = path.substr(start, end - start);
    if (dir.empty()) dir = ".";
    std::filesystem::path candidate = std::filesystem::path(dir) / program;
    if (is_executable(candidate)) return candidate;
    start = end + 1;
  }
  return std::nullopt;
}

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options) {
  if (argv.empty()) throw ExecError("empty argv");
  ignore_sigpipe_once();

  auto exe = find_executable(argv[0]);
  if (!exe) throw ExecError("cannot find executable: " + argv[0]);

  // Everything the child needs is prepared before fork; only
  // async-signal-safe calls happen between fork and exec.
  std::string exe_path = exe->string();
  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  std::vector<std::string> env_storage;
  for (char** e = environ; e && *e; ++e) {
    std::string kv(*e);
    std::string key = kv.substr(0, kv.find('='));
    bool overridden = false;
    for (const auto& o : options.env)
      if (o.substr(0, o.find('=')) == key) overridden = true;
    if (!overridden) env_storage.push_back(std::move(kv));
  }
  for (const auto& o : options.env) env_storage.push_back(o);
  std::vector<char*> cenv;
  for (auto& e : env_storage) cenv.push_back(e.data());
  cenv.push_back(nullptr);

  std::string cwd = options.cwd.empty() ? std::string() : options.cwd.string();
  rlimit as_limit{};
  as_limit.rlim_cur = as_limit.rlim_max = static_cast<rlim_t>(options.address_space_limit);

  Pipe in, out, err, status;
  auto started = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw ExecError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    ::dup2(in.fd[0], STDIN_FILENO);
    ::dup2(out.fd[1], STDOUT_FILENO);
    ::dup2(err.fd[1], STDERR_FILENO);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
      int e = errno;
      [[maybe_unused]] auto n = ::write(status.fd[1], &e, sizeof e);
      ::_exit(127);
    }
    if (options.address_space_limit > 0) ::setrlimit(RLIMIT_AS, &as_limit);
    ::execve(exe_path.c_str(), cargv.data(), cenv.data());
    int e = errno;
    [[maybe_unused]] auto n = ::write(status.fd[1], &e, sizeof e);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  in.close_read();
  out.close_write();
  err.close_write();
  status.close_write();

  int child_errno = 0;
  if (::read(status.fd[0], &child_errno, sizeof child_errno) == static_cast<ssize_t>(sizeof child_errno)) {
    int ignored;
    ::waitpid(pid, &ignored, 0);
    throw ExecError("cannot spawn " + exe_path + ": " + std::strerror(child_errno));
  }

  ProcessResult result;
  std::size_t stdin_off = 0;
  const std::string& input = options.stdin_text;
  if (input.empty()) in.close_write();
  else set_nonblocking(in.fd[1]);
  set_nonblocking(out.fd[0]);
  set_nonblocking(err.fd[0]);

  auto deadline = started + options.timeout;
  char buf[65536];
  auto drain = [&](int fd, std::string& sink, std::size_t cap, bool* truncated) {
    for (;;) {
      ssize_t n = ::read(fd, buf, sizeof buf);
      if (n > 0) {
        std::size_t room = sink.size() < cap ? cap - sink.size() : 0;
        std::size_t take = std::min<std::size_t>(room, static_cast<std::size_t>(n));
        sink.append(buf, take);
        if (take < static_cast<std::size_t>(n) && truncated) *truncated = true;
        continue;
      }
      if (n == 0) return false;  // EOF
      if (errno == EINTR) continue;
      return true;  // EAGAIN: still open
    }
  };

  bool out_open = true, err_open = true;
  while (out_open || err_open || in.fd[1] >= 0) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    int wait_ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
    pollfd fds[3];
    nfds_t nfds = 0;
    int out_i = -1, err_i = -1, in_i = -1;
    if (out_open) { out_i = static_cast<int>(nfds); fds[nfds++] = {out.fd[0], POLLIN, 0}; }
    if (err_open) { err_i = static_cast<int>(nfds); fds[nfds++] = {err.fd[0], POLLIN, 0}; }
    if (in.fd[1] >= 0) { in_i = static_cast<int>(nfds); fds[nfds++] = {in.fd[1], POLLOUT, 0}; }
    int rc = ::poll(fds, nfds, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (out_i >= 0 && fds[out_i].revents) out_open = drain(out.fd[0], result.stdout_text, options.stdout_cap, &result.stdout_truncated);
    if (err_i >= 0 && fds[err_i].revents) err_open = drain(err.fd[0], result.stderr_text, options.stderr_cap, nullptr);
    if (in_i >= 0 && fds[in_i].revents) {
      if (fds[in_i].revents & (POLLERR | POLLHUP)) {
        in.close_write();
      } else {
        ssize_t n = ::write(in.fd[1], input.data() + stdin_off, input.size() - stdin_off);
        if (n > 0) stdin_off += static_cast<std::size_t>(n);
        else if (n < 0 && errno != EAGAIN && errno != EINTR) in.close_write();
        if (stdin_off >= input.size()) in.close_write();
      }
    }
  }

  int wstatus = 0;
  if (result.timed_out) {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &wstatus, 0);
  } else {
    // Output pipes closed; the child may still be running if it closed them
    // itself, so honour the remaining deadline.
    for (;;) {
      pid_t r = ::waitpid(pid, &wstatus, WNOHANG);
      if (r == pid) break;
      if (r < 0 && errno != EINTR) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        result.timed_out = true;
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &wstatus, 0);
        break;
      }
      ::usleep(1000);
    }
  }
  // Reap stragglers left in the group.
  ::kill(-pid, SIGKILL);

  result.duration = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  if (!result.timed_out) {
    if (WIFEXITED(wstatus)) result.exit_code = WEXITSTATUS(wstatus);
    else if (WIFSIGNALED(wstatus)) result.term_signal = WTERMSIG(wstatus);
  }
  return result;
}

}  // namespace recomp
