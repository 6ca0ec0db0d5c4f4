#include <httplib.h>

#include <fmt/format.h>
#include <regex>

#include "edabench/backends.hpp"

namespace edabench {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorCode::ConfigError, fmt::format("bad endpoint url '{}'", url));
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post(const std::string& url, const std::map<std::string, std::string>& headers,
                    const std::string& body) override {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(parts.path, h, body, "application/json");
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(timeout);
}

RemoteBackend::RemoteBackend(BackendId id, RemoteEndpoint endpoint, std::shared_ptr<Dispatcher> dispatcher,
                             std::unique_ptr<Transport> transport)
    : Backend(std::move(id)),
      endpoint_(std::move(endpoint)),
      dispatcher_(std::move(dispatcher)),
      transport_(transport ? std::move(transport) : make_http_transport()) {
  split_url(endpoint_.url);
  if (!dispatcher_) throw Error(ErrorCode::ConfigError, "remote backend needs a dispatcher");
}

json RemoteBackend::build_request(const std::string& model, const Prompt& prompt) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", prompt.text}});
  if (prompt.image != nullptr) {
    const auto png = encode_png(*prompt.image);
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  }
  json body{{"model", model}, {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})}};
  if (prompt.temperature) body["temperature"] = *prompt.temperature;
  if (prompt.want_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = 5;
    body["max_tokens"] = 1;
  }
  return body;
}

Completion RemoteBackend::parse_response(const json& body) {
  const auto& choices = body.at("choices");
  if (!choices.is_array() || choices.empty()) throw Error(ErrorCode::BackendUnavailable, "response without choices");
  const auto& choice = choices.at(0);
  Completion c;
  const auto& content = choice.at("message").at("content");
  if (content.is_string()) {
    c.text = content.get<std::string>();
  } else if (content.is_array()) {
    for (const auto& part : content) {
      if (part.value("type", "") == "text") c.text += part.value("text", "");
    }
  }
  if (auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object()) {
    if (auto tokens = lp->find("content"); tokens != lp->end() && tokens->is_array() && !tokens->empty()) {
      const auto& first = tokens->at(0);
      if (auto top = first.find("top_logprobs"); top != first.end() && top->is_array()) {
        for (const auto& alt : *top) {
          const auto tok = alt.at("token").get<std::string>();
          const double v = alt.at("logprob").get<double>();
          auto [it, fresh] = c.top_logprobs.emplace(tok, v);
          if (!fresh) it->second = std::max(it->second, v);
        }
      }
      if (first.contains("token") && first.contains("logprob")) {
        c.top_logprobs.emplace(first.at("token").get<std::string>(), first.at("logprob").get<double>());
      }
    }
  }
  return c;
}

Completion RemoteBackend::complete(const Prompt& prompt, const RequestContext&) {
  const auto body = build_request(endpoint_.model, prompt).dump();
  std::map<std::string, std::string> headers;
  if (!endpoint_.token.empty()) headers["Authorization"] = "Bearer " + endpoint_.token;
  return dispatcher_->call(id().name, [&] {
    const auto res = transport_->post(endpoint_.url, headers, body);
    if (res.status == 0 || res.status == 429 || res.status >= 500) {
      throw Error(ErrorCode::TransientFailure, fmt::format("{} answered {}", id().name, res.status));
    }
    if (res.status != 200) {
      throw Error(ErrorCode::BackendUnavailable,
                  fmt::format("{} answered {}: {}", id().name, res.status, res.body.substr(0, 200)));
    }
    try {
      return parse_response(json::parse(res.body));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BackendUnavailable, fmt::format("{} sent a malformed body: {}", id().name, e.what()));
    }
  });
}

}  // namespace edabench
