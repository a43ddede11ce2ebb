#include <doctest.h>

#include <cstdlib>

#include "trajsim/errors.hpp"
#include "trajsim/llm_adapter.hpp"

using namespace trajsim;
using nlohmann::json;

namespace {

class RecordingTransport final : public Transport {
 public:
  explicit RecordingTransport(HttpResponse reply) : reply_(std::move(reply)) {}
  HttpResponse post(const HttpRequest& request) override {
    requests.push_back(request);
    return reply_;
  }
  std::vector<HttpRequest> requests;

 private:
  HttpResponse reply_;
};

std::string completion_body(const std::string& content) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

}  // namespace

TEST_CASE("JSON extraction from model output") {
  CHECK(*extract_json_object(R"({"a": 1})") == json{{"a", 1}});
  CHECK(*extract_json_object("Sure!\n```json\n{\"a\": {\"b\": \"}\"}}\n```") ==
        json{{"a", {{"b", "}"}}}});
  CHECK(*extract_json_object("{broken {\"x\": 2}") == json{{"x", 2}});
  CHECK_FALSE(extract_json_object("no json here").has_value());
  CHECK_FALSE(extract_json_object("[1, 2]").has_value());
}

TEST_CASE("schema validation") {
  const auto& s = ResponseSchema::next_activity();
  CHECK_FALSE(s.violation(json::parse(R"({"activity":"a","category":"b","duration_minutes":5})")));
  CHECK_FALSE(s.violation(json::parse(
      R"({"activity":"a","category":"b","duration_minutes":5,"note":"extra"})")));
  CHECK(s.violation(json::parse(R"({"activity":"a","category":"b"})")));
  CHECK(s.violation(json::parse(R"({"activity":"a","category":"b","duration_minutes":"5"})")));
  CHECK(s.violation(json::parse(R"({"activity":"a","category":"b","duration_minutes":5.5})")));
  const auto& list = ResponseSchema::activity_list();
  CHECK_FALSE(list.violation(json::parse(R"({"meal":["Cafe"]})")));
  CHECK(list.violation(json::parse(R"({"meal":"Cafe"})")));
  CHECK(list.violation(json::parse(R"({"meal":[1]})")));
}

TEST_CASE("adapter retries with a correction note") {
  auto model = std::make_shared<ScriptedChatModel>(std::vector<std::string>{
      "I think a cafe.", R"({"poi_id": 7})", R"(ok: {"poi_id": "p1"})"});
  LlmAdapter adapter(model, {});
  const auto c = adapter.complete("pick", ResponseSchema::destination());
  CHECK(c.value.at("poi_id") == "p1");
  CHECK(c.retries == 2);
  const auto prompts = model->prompts();
  REQUIRE(prompts.size() == 3);
  CHECK(prompts[0] == "pick");
  CHECK(prompts[1].size() > prompts[0].size());
}

TEST_CASE("adapter gives up after max_retries") {
  auto model = std::make_shared<ScriptedChatModel>(std::vector<std::string>{"nope"});
  LlmConfig cfg;
  cfg.max_retries = 1;
  LlmAdapter adapter(model, cfg);
  try {
    adapter.complete("pick", ResponseSchema::destination());
    FAIL("expected LlmError");
  } catch (const LlmError& e) {
    CHECK(e.kind() == LlmError::Kind::RetriesExhausted);
  }
  CHECK(model->calls() == 2);

  auto broken = std::make_shared<ScriptedChatModel>(
      std::vector<std::string>{std::string(kScriptedTransportFailure)});
  LlmAdapter failing(broken, cfg);
  try {
    failing.complete("pick", ResponseSchema::destination());
    FAIL("expected LlmError");
  } catch (const LlmError& e) {
    CHECK(e.kind() == LlmError::Kind::Transport);
  }
}

TEST_CASE("OpenAI-compatible request and response") {
  const auto body = json::parse(OpenAiChatModel::request_body("m", "hello", 0.25));
  CHECK(body.at("model") == "m");
  CHECK(body.at("temperature") == 0.25);
  CHECK(body.at("messages")[0].at("role") == "user");
  CHECK(body.at("messages")[0].at("content") == "hello");

  CHECK(OpenAiChatModel::reply_text(completion_body("hi")) == "hi");
  CHECK_THROWS_AS(OpenAiChatModel::reply_text("{}"), TransportError);

  ::setenv("TRAJSIM_TEST_KEY", "sk-test", 1);
  LlmConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";
  cfg.api_key_env = "TRAJSIM_TEST_KEY";
  auto transport = std::make_shared<RecordingTransport>(HttpResponse{200, completion_body("yo")});
  OpenAiChatModel model(cfg, transport);
  CHECK(model.chat("hello", 0.7) == "yo");
  REQUIRE(transport->requests.size() == 1);
  const auto& req = transport->requests[0];
  CHECK(req.url == cfg.endpoint_url);
  bool has_auth = false;
  for (const auto& [k, v] : req.headers) has_auth |= k == "Authorization" && v == "Bearer sk-test";
  CHECK(has_auth);

  auto failing = std::make_shared<RecordingTransport>(HttpResponse{500, "oops"});
  OpenAiChatModel broken(cfg, failing);
  CHECK_THROWS_AS(broken.chat("hello", 0.7), TransportError);
}

TEST_CASE("sentinel transport counts and refuses") {
  SentinelTransport sentinel;
  CHECK_THROWS_AS(sentinel.post({}), TransportError);
  CHECK(sentinel.calls() == 1);
}

TEST_CASE("prompt templates") {
  for (const auto& name : prompt_template_names()) {
    const auto& t = prompt_template(name);
    CHECK_FALSE(t.slots().empty());
    CHECK_THROWS_AS(t.render({}), std::invalid_argument);
  }
  const PromptTemplate t("x", "Hi {{name}}, {{name}} again. {{other}}");
  CHECK(t.slots() == std::vector<std::string>{"name", "other"});
  CHECK(t.render({{"name", "Ann"}, {"other", "{{name}}"}}) == "Hi Ann, Ann again. {{name}}");
  CHECK_THROWS_AS(prompt_template("nope"), std::out_of_range);
}

TEST_CASE("LLM config validation") {
  LlmConfig cfg;
  cfg.temperature = 3.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_retries = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
