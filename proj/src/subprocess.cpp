#include "skimzoom/subprocess.hpp"

#include <csignal>
#include <cstring>
#include <stdexcept>

#include <sys/wait.h>
#include <unistd.h>

namespace skimzoom {

Subprocess::Subprocess(const std::string& command) {
  // Broken pipes surface as stream errors rather than killing the process.
  std::signal(SIGPIPE, SIG_IGN);

  int to_pipe[2];    // parent -> child
  int from_pipe[2];  // child -> parent
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0) {
    throw std::runtime_error("Subprocess: pipe() failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("Subprocess: fork() failed");
  if (pid_ == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_pipe[0]);
  close(from_pipe[1]);
  to_child_ = fdopen(to_pipe[1], "w");
  from_child_ = fdopen(from_pipe[0], "r");
  if (!to_child_ || !from_child_) throw std::runtime_error("Subprocess: fdopen() failed");
}

Subprocess::~Subprocess() {
  if (to_child_) fclose(to_child_);
  if (from_child_) fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

void Subprocess::send_line(const std::string& line) {
  if (fputs(line.c_str(), to_child_) == EOF || fputc('\n', to_child_) == EOF ||
      fflush(to_child_) != 0) {
    throw std::runtime_error("Subprocess: write to child failed");
  }
}

std::string Subprocess::recv_line() {
  std::string out;
  int c;
  while ((c = fgetc(from_child_)) != EOF) {
    if (c == '\n') return out;
    out.push_back(static_cast<char>(c));
  }
  throw std::runtime_error("Subprocess: child closed its output");
}

std::string Subprocess::round_trip(const std::string& line) {
  send_line(line);
  return recv_line();
}

}  // namespace skimzoom
