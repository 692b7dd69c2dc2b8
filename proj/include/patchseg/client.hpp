// Model clients: remote chat-completion endpoint, replay cache, and a
// ground-truth oracle for closed-loop testing.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <tuple>

#include "patchseg/mask.hpp"

namespace patchseg {

struct ModelRequest {
  std::string image_ref;
  PatchSpec patch;
  std::string instruction;
};

struct ModelResponse {
  std::string text;
  double latency_ms = 0;
  int status = 0;  // HTTP-style; 200 is the only success

  bool ok() const { return status == 200; }
};

// complete() must tolerate concurrent calls; the pipeline fans requests out
// across worker threads.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual ModelResponse complete(const ModelRequest& request) = 0;
};

struct HttpClientConfig {
  std::string endpoint;             // e.g. "http://127.0.0.1:8080/v1/chat/completions"
  std::string model = "default";
  std::string auth_env = "";        // env var holding a bearer token, optional
  double timeout_seconds = 30.0;
};

// POSTs {"model":..., "messages":[{"role":"user","content":...}]} and returns
// the first choice's text. Transport failures come back as status 0; the
// pipeline owns retries.
class HttpModelClient : public ModelClient {
 public:
  explicit HttpModelClient(HttpClientConfig cfg);
  ModelResponse complete(const ModelRequest& request) override;

 private:
  HttpClientConfig cfg_;
  std::string host_;
  int port_ = 80;
  std::string path_;
};

// Serves responses recorded as JSONL {"image":...,"top":...,"left":...,"text":...};
// unknown keys come back as status 404.
class ReplayClient : public ModelClient {
 public:
  explicit ReplayClient(const std::filesystem::path& cache_jsonl);
  ModelResponse complete(const ModelRequest& request) override;

 private:
  std::map<std::tuple<std::string, int, int>, std::string> cache_;
};

// Answers with the canonical encoding of the ground-truth patch; regions
// beyond the mask read as background, mirroring inference-time padding.
class OracleClient : public ModelClient {
 public:
  OracleClient(SemanticMask ground_truth, ClassMap cm);
  ModelResponse complete(const ModelRequest& request) override;

 private:
  SemanticMask gt_;
  ClassMap cm_;
};

}  // namespace patchseg
