#include <chrono>
#include <fstream>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "kf/llm/gateway.hpp"

namespace kf::llm {

using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// --- Transcript -------------------------------------------------------------

Transcript::Transcript(std::filesystem::path file) : file_(std::move(file)) {
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
}

void Transcript::append(TranscriptEntry entry) {
  if (entry.timestamp.empty()) entry.timestamp = utc_now();
  std::lock_guard<std::mutex> lock(mu_);
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    out << json{{"digest", entry.digest},
                {"role", std::string(role_name(entry.role))},
                {"provider", entry.provider},
                {"timestamp", entry.timestamp},
                {"response", entry.response}}
               .dump()
        << "\n";
  }
  entries_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_;
}

std::size_t Transcript::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

// --- Cassettes --------------------------------------------------------------

std::vector<CassetteRecord> load_cassette(const std::filesystem::path &file) {
  if (!std::filesystem::exists(file)) throw FileNotFound(file.string());
  std::vector<CassetteRecord> out;
  int n = 0;
  for (const auto &line : split_lines(read_file(file))) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("digest").get<std::string>(), j.value("role", ""),
                     j.at("response").get<std::string>()});
    } catch (const json::exception &e) {
      throw ConfigError(file.string() + ":" + std::to_string(n) + ": bad cassette record: " +
                        e.what());
    }
  }
  return out;
}

ReplayProvider::ReplayProvider(const std::filesystem::path &cassette) {
  for (auto &r : load_cassette(cassette)) answers_[r.digest].push_back(std::move(r.response));
}

std::string ReplayProvider::complete(const PromptBundle &bundle) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = answers_.find(bundle.inputs_digest);
  if (it == answers_.end()) {
    throw CassetteMiss(std::string(role_name(bundle.role)) + " prompt " + bundle.inputs_digest);
  }
  std::size_t &next = next_[bundle.inputs_digest];
  const std::string &answer = it->second[std::min(next, it->second.size() - 1)];
  ++next;
  return answer;
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner,
                                     std::filesystem::path cassette)
    : inner_(std::move(inner)), cassette_(std::move(cassette)) {
  if (cassette_.has_parent_path()) std::filesystem::create_directories(cassette_.parent_path());
}

std::string RecordingProvider::complete(const PromptBundle &bundle) {
  std::string response = inner_->complete(bundle);
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(cassette_, std::ios::app);
  out << json{{"digest", bundle.inputs_digest},
              {"role", std::string(role_name(bundle.role))},
              {"response", response}}
             .dump()
      << "\n";
  return response;
}

// --- Live -------------------------------------------------------------------

LiveProvider::LiveProvider(LiveOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw ConfigError("live provider needs an endpoint");
}

std::string LiveProvider::complete(const PromptBundle &bundle) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.endpoint, m, kUrl)) {
    throw ConfigError("malformed endpoint " + options_.endpoint);
  }
  const std::string path = m[2].matched ? m[2].str() : "/v1/chat/completions";

  httplib::Client client(m[1].str());
  client.set_connection_timeout(options_.timeout_seconds);
  client.set_read_timeout(options_.timeout_seconds);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  const json body = {{"model", options_.model},
                     {"temperature", 0},
                     {"messages", json::array({{{"role", "user"},
                                                {"content", bundle.rendered_text}}})}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw ProviderUnavailable(httplib::to_string(res.error()));
  if (res->status != 200) {
    throw ProviderUnavailable("HTTP " + std::to_string(res->status) + ": " +
                              res->body.substr(0, 200));
  }
  try {
    return json::parse(res->body).at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception &e) {
    throw ProviderUnavailable(std::string("unexpected response: ") + e.what());
  }
}

// --- Gateway ----------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Provider> provider, std::shared_ptr<Transcript> transcript)
    : provider_(std::move(provider)),
      transcript_(transcript ? std::move(transcript) : std::make_shared<Transcript>()) {}

std::string Gateway::complete(AgentRole role, const PromptInputs &inputs) {
  const PromptBundle bundle = render_prompt(role, inputs);
  std::string response = provider_->complete(bundle);
  transcript_->append({bundle.inputs_digest, role, response, provider_->id(), {}});
  return response;
}

}  // namespace kf::llm
