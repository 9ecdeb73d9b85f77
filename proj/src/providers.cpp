#include "skimzoom/providers.hpp"

#include <stdexcept>

#include "json.hpp"

namespace skimzoom {

LineProtocolProvider::LineProtocolProvider(const std::string& command)
    : child_(std::make_unique<Subprocess>(command)) {}

std::string LineProtocolProvider::call(const std::string& request) {
  std::lock_guard<std::mutex> lock(mu_);
  return child_->round_trip(request);
}

namespace {
nlohmann::json parse_reply(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("provider sent unparsable reply: ") + e.what());
  }
  if (!j.value("ok", false)) {
    throw std::runtime_error("provider error: " + j.value("error", std::string("unknown")));
  }
  if (!j.contains("value")) throw std::runtime_error("provider reply lacks a value");
  return j["value"];
}
}  // namespace

double LineProtocolProvider::similarity(const std::string& a, const std::string& b) {
  nlohmann::json req{{"op", "similarity"}, {"a", a}, {"b", b}};
  return parse_reply(call(req.dump())).get<double>();
}

std::vector<double> LineProtocolProvider::embed(const std::string& text) {
  nlohmann::json req{{"op", "embed"}, {"text", text}};
  return parse_reply(call(req.dump())).get<std::vector<double>>();
}

std::string LineProtocolProvider::summarize(const std::vector<std::string>& texts) {
  nlohmann::json req{{"op", "summarize"}, {"texts", texts}};
  return parse_reply(call(req.dump())).get<std::string>();
}

std::string LineProtocolProvider::describe(const std::string& video_id, double start_s,
                                           double end_s) {
  nlohmann::json req{
      {"op", "describe"}, {"video_id", video_id}, {"start_s", start_s}, {"end_s", end_s}};
  return parse_reply(call(req.dump())).get<std::string>();
}

}  // namespace skimzoom
