#include "skimzoom/util.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace skimzoom {

std::string format_seconds(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", seconds);
  return buf;
}

double round_two_decimals(double seconds) {
  return std::strtod(format_seconds(seconds).c_str(), nullptr);
}

double parse_clock_timestamp(const std::string& text) {
  std::string t = text;
  // trim
  auto is_ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!t.empty() && is_ws(t.front())) t.erase(t.begin());
  while (!t.empty() && is_ws(t.back())) t.pop_back();
  if (t.empty()) throw std::invalid_argument("empty timestamp");

  std::vector<std::string> parts;
  std::string cur;
  for (char c : t) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() > 3) throw std::invalid_argument("timestamp has too many ':' fields: " + text);

  double total = 0.0;
  for (const auto& p : parts) {
    if (p.empty()) throw std::invalid_argument("empty timestamp field: " + text);
    char* end = nullptr;
    double v = std::strtod(p.c_str(), &end);
    if (end == nullptr || *end != '\0' || !std::isfinite(v) || v < 0) {
      throw std::invalid_argument("bad timestamp field: " + text);
    }
    total = total * 60.0 + v;
  }
  return total;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {
std::map<std::string, int> word_counts(const std::string& text) {
  std::map<std::string, int> counts;
  for (auto& w : tokenize_words(text)) counts[w]++;
  return counts;
}
}  // namespace

double token_f1(const std::string& a, const std::string& b) {
  auto ca = word_counts(a);
  auto cb = word_counts(b);
  int na = 0, nb = 0, overlap = 0;
  for (auto& [w, n] : ca) na += n;
  for (auto& [w, n] : cb) nb += n;
  for (auto& [w, n] : ca) {
    auto it = cb.find(w);
    if (it != cb.end()) overlap += std::min(n, it->second);
  }
  if (na == 0 && nb == 0) return 1.0;
  if (overlap == 0) return 0.0;
  double precision = static_cast<double>(overlap) / na;
  double recall = static_cast<double>(overlap) / nb;
  return 2.0 * precision * recall / (precision + recall);
}

double token_jaccard(const std::string& a, const std::string& b) {
  auto ta = tokenize_words(a);
  auto tb = tokenize_words(b);
  std::sort(ta.begin(), ta.end());
  ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
  std::sort(tb.begin(), tb.end());
  tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
  if (ta.empty() && tb.empty()) return 1.0;
  std::vector<std::string> inter;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(inter));
  double uni = static_cast<double>(ta.size() + tb.size() - inter.size());
  return static_cast<double>(inter.size()) / uni;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& salt) {
  return mix_seed(seed, fnv1a64(salt));
}

double unit_from_hash(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (jobs <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  int count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  threads.reserve(count);
  for (int i = 0; i < count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace skimzoom
