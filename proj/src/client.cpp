#include "patchseg/client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "patchseg/errors.hpp"
#include "patchseg/rrle.hpp"

namespace patchseg {

namespace {

using json = nlohmann::json;

// Splits "http://host:port/path"; https endpoints are rejected because the
// client is built without TLS.
void split_endpoint(const std::string& endpoint, std::string& host, int& port, std::string& path) {
  const std::string prefix = "http://";
  if (endpoint.rfind(prefix, 0) != 0) {
    if (endpoint.rfind("https://", 0) == 0) {
      throw DataError("https endpoints are not supported; use a plain http endpoint");
    }
    throw DataError("endpoint '" + endpoint + "' must start with http://");
  }
  std::string rest = endpoint.substr(prefix.size());
  const std::size_t slash = rest.find('/');
  path = slash == std::string::npos ? "/" : rest.substr(slash);
  std::string authority = rest.substr(0, slash);
  const std::size_t colon = authority.rfind(':');
  if (colon == std::string::npos) {
    host = authority;
    port = 80;
  } else {
    host = authority.substr(0, colon);
    try {
      port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw DataError("endpoint '" + endpoint + "' has a malformed port");
    }
  }
  if (host.empty()) throw DataError("endpoint '" + endpoint + "' has an empty host");
}

}  // namespace

HttpModelClient::HttpModelClient(HttpClientConfig cfg) : cfg_(std::move(cfg)) {
  split_endpoint(cfg_.endpoint, host_, port_, path_);
}

ModelResponse HttpModelClient::complete(const ModelRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  ModelResponse response;

  httplib::Client client(host_, port_);
  client.set_connection_timeout(std::chrono::milliseconds(
      static_cast<long long>(cfg_.timeout_seconds * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(
      static_cast<long long>(cfg_.timeout_seconds * 1000)));

  httplib::Headers headers;
  if (!cfg_.auth_env.empty()) {
    if (const char* token = std::getenv(cfg_.auth_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  const json body{{"model", cfg_.model},
                  {"messages", json::array({json{{"role", "user"},
                                                 {"content", request.instruction + "\nimage: " +
                                                                 request.image_ref}}})}};
  const httplib::Result result =
      client.Post(path_, headers, body.dump(), "application/json");

  const auto elapsed = std::chrono::steady_clock::now() - start;
  response.latency_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();

  if (!result) {
    response.status = 0;  // transport failure
    return response;
  }
  response.status = result->status;
  if (!response.ok()) return response;

  const json reply = json::parse(result->body, nullptr, false);
  if (reply.is_discarded()) {
    response.status = 0;
    return response;
  }
  try {
    const json& choice = reply.at("choices").at(0);
    if (choice.contains("message")) {
      response.text = choice.at("message").at("content").get<std::string>();
    } else {
      response.text = choice.at("text").get<std::string>();
    }
  } catch (const json::exception&) {
    response.status = 0;
  }
  return response;
}

ReplayClient::ReplayClient(const std::filesystem::path& cache_jsonl) {
  std::ifstream in(cache_jsonl);
  if (!in) throw DataError("cannot open '" + cache_jsonl.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DataError("'" + cache_jsonl.string() + "' line " + std::to_string(line_no) +
                      " is not valid JSON");
    }
    try {
      cache_[{j.at("image").get<std::string>(), j.at("top").get<int>(), j.at("left").get<int>()}] =
          j.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw DataError("'" + cache_jsonl.string() + "' line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
}

ModelResponse ReplayClient::complete(const ModelRequest& request) {
  ModelResponse response;
  const auto it = cache_.find({request.image_ref, request.patch.top, request.patch.left});
  if (it == cache_.end()) {
    response.status = 404;
    return response;
  }
  response.status = 200;
  response.text = it->second;
  return response;
}

OracleClient::OracleClient(SemanticMask ground_truth, ClassMap cm)
    : gt_(std::move(ground_truth)), cm_(std::move(cm)) {}

ModelResponse OracleClient::complete(const ModelRequest& request) {
  ModelResponse response;
  response.status = 200;
  response.text = encode_rrle(crop_padded(gt_, request.patch, cm_.background_id()), cm_);
  return response;
}

}  // namespace patchseg
