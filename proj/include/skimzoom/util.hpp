#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace skimzoom {

// Canonical two-decimal rendering used everywhere a timestamp is written out.
// snprintf("%.2f") gives correctly rounded decimal conversion of the binary
// value (ties land on the even digit), so 0.333 -> "0.33".
std::string format_seconds(double seconds);

// Round to the two-decimal grid by round-tripping through the canonical
// rendering, so stored values and rendered values can never disagree.
double round_two_decimals(double seconds);

// Accepts "mm:ss", "hh:mm:ss" or plain seconds ("1858", "1858.5").
// "30:58" -> 1858.0.  Throws std::invalid_argument on garbage.
double parse_clock_timestamp(const std::string& text);

// Lowercased alphanumeric word tokens, punctuation treated as separators.
std::vector<std::string> tokenize_words(const std::string& text);

// Multiset token F1 over lowercased words: "red car" vs "a red car" = 0.8.
double token_f1(const std::string& a, const std::string& b);

// Set Jaccard over lowercased word tokens.  Both empty -> 1.0.
double token_jaccard(const std::string& a, const std::string& b);

// Stable 64-bit hashing (FNV-1a + splitmix finalizer).  Used wherever a
// seeded decision must not depend on the platform's std::hash.
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t mix_seed(std::uint64_t seed, const std::string& salt);

// Uniform double in [0, 1) from a 64-bit hash value.
double unit_from_hash(std::uint64_t h);

// Whole-file helpers.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Runs fn(i) for i in [0, n) with at most `jobs` worker threads.  Results are
// whatever fn writes into caller-owned slots, so output order never depends
// on scheduling.  jobs <= 1 degrades to a plain loop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace skimzoom
