#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajsim {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Transport. The only place in the library that touches the network is
// HttpTransport; everything else receives a Transport by injection.

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  double timeout_s = 60.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws TransportError on connection failure or timeout.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib backed transport; supports http:// and https:// URLs.
class HttpTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

// Counts calls and refuses all of them. Used to prove a pipeline stays offline.
class SentinelTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Chat models.

struct LlmConfig {
  std::string endpoint_url = "http://localhost:8000/v1/chat/completions";
  std::string model_name = "gpt-4o-mini";
  double temperature = 0.7;
  double timeout_s = 60.0;
  int max_retries = 2;
  std::string api_key_env = "LLM_API_KEY";

  // Throws ConfigError.
  void validate() const;
};

class ChatModel {
 public:
  virtual ~ChatModel() = default;
  // Returns the assistant message text. Throws TransportError.
  virtual std::string chat(const std::string& prompt, double temperature) = 0;
};

// OpenAI-compatible /chat/completions client. The API key is read from the
// environment variable named in the config at construction; it never comes
// from files or arguments.
class OpenAiChatModel final : public ChatModel {
 public:
  OpenAiChatModel(LlmConfig config, std::shared_ptr<Transport> transport);

  std::string chat(const std::string& prompt, double temperature) override;

  static std::string request_body(const std::string& model,
                                  const std::string& prompt,
                                  double temperature);
  // Extracts choices[0].message.content. Throws TransportError.
  static std::string reply_text(const std::string& response_body);

 private:
  LlmConfig config_;
  std::shared_ptr<Transport> transport_;
  std::string api_key_;
};

// Deterministic offline model. Replies are consumed in order and the final
// one repeats once the script is exhausted. Every prompt is recorded.
class ScriptedChatModel final : public ChatModel {
 public:
  explicit ScriptedChatModel(std::vector<std::string> script);

  std::string chat(const std::string& prompt, double temperature) override;

  std::vector<std::string> prompts() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> script_;
  std::vector<std::string> prompts_;
  std::size_t next_ = 0;
};

// A script reply that makes ScriptedChatModel throw TransportError, for
// exercising transport-failure paths.
inline constexpr std::string_view kScriptedTransportFailure =
    "<<transport-failure>>";

// ---------------------------------------------------------------------------
// Response contracts.

enum class FieldType { String, Integer, StringArrayMap };

struct ResponseSchema {
  std::string name;
  // Required object fields and their types. A schema with a single field of
  // type StringArrayMap and an empty key describes a whole-object map of
  // string -> array of strings.
  std::vector<std::pair<std::string, FieldType>> fields;

  // Human-readable shape, embedded into correction prompts.
  std::string describe() const;
  // nullopt when valid, otherwise the first violation.
  std::optional<std::string> violation(const json& value) const;

  static const ResponseSchema& next_activity();
  static const ResponseSchema& destination();
  static const ResponseSchema& activity_list();
  static const ResponseSchema& persona_goals();
};

// Finds the first parseable JSON object in model output, inside markdown
// fences or bare.
std::optional<json> extract_json_object(std::string_view reply);

// ---------------------------------------------------------------------------
// Adapter.

class LlmError : public std::runtime_error {
 public:
  enum class Kind { Transport, RetriesExhausted };
  LlmError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Completion {
  json value;
  int retries = 0;
};

class LlmAdapter {
 public:
  LlmAdapter(std::shared_ptr<ChatModel> model, LlmConfig config);

  // Sends the prompt, extracts and validates a JSON object, and retries with
  // a correction note up to max_retries times. Throws LlmError.
  Completion complete(const std::string& prompt, const ResponseSchema& schema);

  const LlmConfig& config() const noexcept { return config_; }
  ChatModel& model() noexcept { return *model_; }

 private:
  std::shared_ptr<ChatModel> model_;
  LlmConfig config_;
};

// ---------------------------------------------------------------------------
// Prompt templates. Placeholders are written {{slot}}.

class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string text);

  const std::string& name() const noexcept { return name_; }
  const std::string& text() const noexcept { return text_; }
  std::vector<std::string> slots() const;

  // Throws std::invalid_argument if any placeholder is left unfilled.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string name_;
  std::string text_;
};

// Built-in templates: persona_gen, activity_list, next_activity, destination,
// summary. Throws std::out_of_range for other names.
const PromptTemplate& prompt_template(std::string_view name);
std::vector<std::string> prompt_template_names();

}  // namespace trajsim
