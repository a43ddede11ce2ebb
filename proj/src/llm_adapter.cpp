#include "trajsim/llm_adapter.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cmath>
#include <cstdlib>

#include "trajsim/errors.hpp"

namespace trajsim {

// ---------------------------------------------------------------------------
// Transport

HttpResponse HttpTransport::post(const HttpRequest& request) {
  // Split "scheme://host[:port]/path".
  const auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) {
    throw TransportError("invalid endpoint URL '" + request.url + "'");
  }
  const auto path_start = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client client(origin);
  const auto seconds = static_cast<time_t>(request.timeout_s);
  const auto micros = static_cast<time_t>(
      (request.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  for (const auto& [key, value] : request.headers) headers.emplace(key, value);
  auto result = client.Post(path, headers, request.body, "application/json");
  if (!result) {
    throw TransportError("POST " + request.url + " failed: " +
                         httplib::to_string(result.error()));
  }
  return HttpResponse{result->status, result->body};
}

HttpResponse SentinelTransport::post(const HttpRequest& request) {
  ++calls_;
  throw TransportError("network access attempted in offline mode: " +
                       request.url);
}

// ---------------------------------------------------------------------------
// Chat models

void LlmConfig::validate() const {
  if (endpoint_url.empty()) throw ConfigError("llm.endpoint_url is empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("llm.temperature must be in [0, 2]");
  }
  if (!(timeout_s > 0.0)) throw ConfigError("llm.timeout_s must be > 0");
  if (max_retries < 0) throw ConfigError("llm.max_retries must be >= 0");
}

OpenAiChatModel::OpenAiChatModel(LlmConfig config,
                                 std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
  if (!transport_) throw ConfigError("OpenAiChatModel requires a transport");
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

std::string OpenAiChatModel::request_body(const std::string& model,
                                          const std::string& prompt,
                                          double temperature) {
  const json body = {
      {"model", model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", temperature},
  };
  return body.dump();
}

std::string OpenAiChatModel::reply_text(const std::string& response_body) {
  const json parsed = json::parse(response_body, nullptr, false);
  if (parsed.is_discarded()) {
    throw TransportError("chat completion response is not JSON");
  }
  try {
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat completion shape: ") +
                         e.what());
  }
}

std::string OpenAiChatModel::chat(const std::string& prompt,
                                  double temperature) {
  HttpRequest request;
  request.url = config_.endpoint_url;
  request.body = request_body(config_.model_name, prompt, temperature);
  request.timeout_s = config_.timeout_s;
  if (!api_key_.empty()) {
    request.headers.emplace_back("Authorization", "Bearer " + api_key_);
  }
  const HttpResponse response = transport_->post(request);
  if (response.status < 200 || response.status >= 300) {
    throw TransportError("chat completion HTTP status " +
                         std::to_string(response.status));
  }
  return reply_text(response.body);
}

ScriptedChatModel::ScriptedChatModel(std::vector<std::string> script)
    : script_(std::move(script)) {}

std::string ScriptedChatModel::chat(const std::string& prompt, double) {
  std::lock_guard lock(mutex_);
  prompts_.push_back(prompt);
  if (script_.empty()) throw TransportError("scripted model has no replies");
  const std::string& reply = script_[std::min(next_, script_.size() - 1)];
  ++next_;
  if (reply == kScriptedTransportFailure) {
    throw TransportError("scripted transport failure");
  }
  return reply;
}

std::vector<std::string> ScriptedChatModel::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

std::size_t ScriptedChatModel::calls() const {
  std::lock_guard lock(mutex_);
  return prompts_.size();
}

// ---------------------------------------------------------------------------
// Schemas and extraction

std::string ResponseSchema::describe() const {
  if (fields.size() == 1 && fields[0].second == FieldType::StringArrayMap &&
      fields[0].first.empty()) {
    return R"(a JSON object mapping each activity (string) to an array of location category strings)";
  }
  std::string out = "a JSON object with exactly these fields: {";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + fields[i].first + "\": ";
    switch (fields[i].second) {
      case FieldType::String: out += "string"; break;
      case FieldType::Integer: out += "integer"; break;
      case FieldType::StringArrayMap: out += "object of string arrays"; break;
    }
  }
  return out + "}";
}

namespace {

std::optional<std::string> check_string_array_map(const json& value,
                                                  const std::string& where) {
  if (!value.is_object()) return where + " must be an object";
  if (value.empty()) return where + " must not be empty";
  for (const auto& [key, entry] : value.items()) {
    if (!entry.is_array()) return "'" + key + "' must map to an array";
    for (const auto& item : entry) {
      if (!item.is_string()) return "'" + key + "' must contain only strings";
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> ResponseSchema::violation(const json& value) const {
  if (!value.is_object()) return "response is not a JSON object";
  for (const auto& [field, type] : fields) {
    if (type == FieldType::StringArrayMap && field.empty()) {
      return check_string_array_map(value, "response");
    }
    auto it = value.find(field);
    if (it == value.end()) return "missing field '" + field + "'";
    switch (type) {
      case FieldType::String:
        if (!it->is_string()) return "field '" + field + "' must be a string";
        break;
      case FieldType::Integer:
        if (!it->is_number_integer()) {
          return "field '" + field + "' must be an integer";
        }
        break;
      case FieldType::StringArrayMap:
        if (auto v = check_string_array_map(*it, "field '" + field + "'")) {
          return v;
        }
        break;
    }
  }
  return std::nullopt;
}

const ResponseSchema& ResponseSchema::next_activity() {
  static const ResponseSchema schema{"next_activity",
                                     {{"activity", FieldType::String},
                                      {"category", FieldType::String},
                                      {"duration_minutes", FieldType::Integer}}};
  return schema;
}

const ResponseSchema& ResponseSchema::destination() {
  static const ResponseSchema schema{"destination",
                                     {{"poi_id", FieldType::String}}};
  return schema;
}

const ResponseSchema& ResponseSchema::activity_list() {
  static const ResponseSchema schema{"activity_list",
                                     {{"", FieldType::StringArrayMap}}};
  return schema;
}

const ResponseSchema& ResponseSchema::persona_goals() {
  static const ResponseSchema schema{"persona_goals",
                                     {{"goals", FieldType::String}}};
  return schema;
}

std::optional<json> extract_json_object(std::string_view reply) {
  for (std::size_t start = reply.find('{'); start != std::string_view::npos;
       start = reply.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < reply.size(); ++i) {
      const char c = reply[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        json parsed = json::parse(reply.substr(start, i - start + 1), nullptr,
                                  false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        break;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Adapter

LlmAdapter::LlmAdapter(std::shared_ptr<ChatModel> model, LlmConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.validate();
  if (!model_) throw ConfigError("LlmAdapter requires a chat model");
}

Completion LlmAdapter::complete(const std::string& prompt,
                                const ResponseSchema& schema) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  std::string current = prompt;
  std::string last_problem;
  bool transport_failed = false;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    std::string reply;
    try {
      reply = model_->chat(current, config_.temperature);
      transport_failed = false;
    } catch (const TransportError& e) {
      transport_failed = true;
      last_problem = e.what();
      continue;
    }
    auto object = extract_json_object(reply);
    if (!object) {
      last_problem = "no JSON object in reply";
    } else if (auto problem = schema.violation(*object)) {
      last_problem = *problem;
    } else {
      return Completion{std::move(*object), attempt};
    }
    current = prompt + "\n\nYour previous reply was rejected (" + last_problem +
              "). Reply with only " + schema.describe() + ".";
  }
  if (transport_failed) {
    throw LlmError(LlmError::Kind::Transport, "LLM transport failure: " + last_problem);
  }
  throw LlmError(LlmError::Kind::RetriesExhausted,
                 "LLM reply invalid after retries: " + last_problem);
}

// ---------------------------------------------------------------------------
// Prompt templates

PromptTemplate::PromptTemplate(std::string name, std::string text)
    : name_(std::move(name)), text_(std::move(text)) {}

std::vector<std::string> PromptTemplate::slots() const {
  std::vector<std::string> out;
  for (std::size_t open = text_.find("{{"); open != std::string::npos;
       open = text_.find("{{", open + 2)) {
    const std::size_t close = text_.find("}}", open + 2);
    if (close == std::string::npos) break;
    std::string slot = text_.substr(open + 2, close - open - 2);
    if (std::find(out.begin(), out.end(), slot) == out.end()) {
      out.push_back(std::move(slot));
    }
  }
  return out;
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size());
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text_.find("{{", pos);
    if (open == std::string::npos) break;
    const std::size_t close = text_.find("}}", open + 2);
    if (close == std::string::npos) break;
    const std::string slot = text_.substr(open + 2, close - open - 2);
    auto it = values.find(slot);
    if (it == values.end()) {
      throw std::invalid_argument("prompt template '" + name_ +
                                  "': unfilled slot '" + slot + "'");
    }
    out.append(text_, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(text_, pos, std::string::npos);
  return out;
}

namespace {

const std::map<std::string, PromptTemplate, std::less<>>& templates() {
  static const std::map<std::string, PromptTemplate, std::less<>> all = [] {
    std::map<std::string, PromptTemplate, std::less<>> m;
    auto add = [&](const char* name, const char* text) {
      m.emplace(name, PromptTemplate(name, text));
    };
    add("persona_gen",
        R"(You are creating a synthetic resident for a city mobility simulation.
Demographics: {{demographics}}
Big Five personality traits (0 = low, 1 = high): {{big_five}}
Population context: {{population}}

Describe this person's everyday goals and priorities in one or two sentences.
Reply with only a JSON object: {"goals": "<text>"})");
    add("activity_list",
        R"(You are planning the typical daily activities of a simulated person.
Persona: {{persona}}
Location categories available in the city: {{categories}}

List the activities this person is likely to do on a normal day and, for each,
the location categories where it could take place. Use only the categories
listed above. Include "sleep" with "{{home_category}}".
Example: {"meal": ["Cafe", "Casual Dining", "Home", "Restaurant"]}
Reply with only a JSON object mapping activity names to arrays of categories.)");
    add("next_activity",
        R"(You are simulating one day in the life of a person.
Persona: {{persona}}
Possible activities and their location categories: {{activity_locations}}
Routine so far today (day {{day}}): {{routine}}
Historical mobility patterns: {{history}}
Current time: {{clock}} (minute {{minute}} of 1440)

Decide the person's next activity. Choose an activity from the list above and
one of its location categories, and a duration between 5 and 960 minutes.
Reply with only a JSON object:
{"activity": "<activity>", "category": "<category>", "duration_minutes": <integer>})");
    add("destination",
        R"(You are choosing where a simulated person goes next.
Persona goals: {{goals}}
Activity: {{activity}} (location category: {{category}})
Current location: {{current}}
Search radius: {{radius_km}} km
Relevant past visits: {{history}}

Candidate places (id | name | distance in km):
{{candidates}}

Pick one suitable candidate at random, favouring places that fit the person's
history and preferences. Reply with only a JSON object: {"poi_id": "<id>"})");
    add("summary",
        R"(Summarize the following day of a simulated person in two sentences,
mentioning recurring places and activities.
Day {{day}} activities: {{activities}})");
    return m;
  }();
  return all;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view name) {
  auto it = templates().find(name);
  if (it == templates().end()) {
    throw std::out_of_range("unknown prompt template '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<std::string> prompt_template_names() {
  std::vector<std::string> out;
  for (const auto& [name, t] : templates()) out.push_back(name);
  return out;
}

}  // namespace trajsim
