#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "skimzoom/event_graph.hpp"
#include "skimzoom/subprocess.hpp"

namespace skimzoom {

// Speaks the provider wire protocol to a helper process: one JSON request per
// line on its stdin, one JSON response per line on its stdout.
//
//   {"op":"describe","video_id":...,"start_s":...,"end_s":...} -> {"ok":true,"value":"..."}
//   {"op":"similarity","a":"...","b":"..."}                     -> {"ok":true,"value":0.93}
//   {"op":"embed","text":"..."}                                 -> {"ok":true,"value":[...]}
//   {"op":"summarize","texts":["...",...]}                      -> {"ok":true,"value":"..."}
//
// Failures come back as {"ok":false,"error":"..."} and raise std::runtime_error.
class LineProtocolProvider : public TextSimilarityProvider,
                             public TextEmbedProvider,
                             public TextSummarizeProvider {
 public:
  explicit LineProtocolProvider(const std::string& command);

  double similarity(const std::string& a, const std::string& b) override;
  std::vector<double> embed(const std::string& text) override;
  std::string summarize(const std::vector<std::string>& texts) override;
  std::string describe(const std::string& video_id, double start_s, double end_s);

 private:
  std::string call(const std::string& request);

  std::mutex mu_;  // the child handles one request at a time
  std::unique_ptr<Subprocess> child_;
};

}  // namespace skimzoom
