#pragma once

#include <cstdio>
#include <string>

namespace skimzoom {

// A child process spoken to over stdin/stdout, one line per message.  Used
// for the line-delimited JSON provider and backend protocols.  Not copyable;
// concurrent use must be externally serialized.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);  // runs via /bin/sh -c
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  // Writes one line (newline appended) and reads one line back.
  // Throws std::runtime_error if the child is gone or misbehaves.
  std::string round_trip(const std::string& line);

 private:
  void send_line(const std::string& line);
  std::string recv_line();

  int pid_ = -1;
  FILE* to_child_ = nullptr;
  FILE* from_child_ = nullptr;
};

}  // namespace skimzoom
