// Copyright 2026 The CIR Engine Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "httplib.h"

#include "cir/core/binary_io.hpp"
#include "cir/core/errors.hpp"
#include "cir/corpus/jsonl.hpp"
#include "cir/corpus/synth.hpp"
#include "cir/curation/curate.hpp"
#include "cir/curation/remote_generator.hpp"
#include "cir/curation/template_generator.hpp"
#include "oracles/oracles.hpp"

namespace fs = std::filesystem;
using namespace cir;
using nlohmann::json;

namespace {

const std::vector<AttributeFamily> kColorShape =
    parse_attribute_spec("color=red,blue,green;shape=cube,sphere");

ImageRecord red_cube(std::string id = "img0") {
  return ImageRecord{std::move(id), FeatureMatrix(1, 2, {1, 0}),
                     {{"color", "red"}, {"shape", "cube"}}};
}

// Records every request it sees; replies come from a scripted handler.
class RecordingGenerator : public TextGenerator {
 public:
  std::string generate(const GenerationRequest& req) const override {
    std::lock_guard lock(mu_);
    prompts.push_back(req.prompt);
    if (req.image.id == fail_id) {
      throw GenerationError(GenerationError::Kind::kGenerator, req.image.id,
                            "scripted failure");
    }
    return "  reply for " + req.image.id + "\n";
  }
  std::string fail_id;
  mutable std::vector<std::string> prompts;

 private:
  mutable std::mutex mu_;
};

class BlankGenerator : public TextGenerator {
 public:
  std::string generate(const GenerationRequest&) const override { return " \n\t"; }
};

// Local chat-completions stand-in.
class MockServer {
 public:
  explicit MockServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply_with(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}
      .dump();
}

RemoteGeneratorConfig remote_config(const std::string& url) {
  RemoteGeneratorConfig c;
  c.endpoint = url;
  c.model = "test-model";
  c.api_key = "secret";
  c.sleep = [](std::chrono::milliseconds) {};
  return c;
}

std::string read_prompt_file(const std::string& dir, const std::string& name) {
  std::ifstream in(fs::path(CIR_SOURCE_DIR) / "prompts" / dir / name);
  std::string s((std::istreambuf_iterator<char>(in)), {});
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

}  // namespace

TEST_CASE("prompt templates and placeholders") {
  const auto p = default_prompts();
  CHECK_NOTHROW(p.validate());
  CHECK(p.target_text.body.find(kModificationPlaceholder) != std::string::npos);
  CHECK(p.modification.body.find(kModificationPlaceholder) == std::string::npos);
  CHECK(p.caption.body.find(kModificationPlaceholder) == std::string::npos);
  const auto rendered = p.target_text.render("change the color to blue");
  CHECK(rendered.find("change the color to blue") != std::string::npos);
  CHECK(rendered.find(kModificationPlaceholder) == std::string::npos);

  PromptTemplate bad{PromptRole::kTargetText, "no placeholder"};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  PromptTemplate stray{PromptRole::kCaption, "caption {modification_text}"};
  CHECK_THROWS_AS(stray.validate(), ValidationError);
  CHECK_NOTHROW(alternate_prompts().validate());
  CHECK_FALSE(alternate_prompts().modification == p.modification);
}

TEST_CASE("shipped prompt files equal the built-in sets") {
  for (const char* dir : {"default", "alternate"}) {
    const auto loaded =
        load_prompt_dir((fs::path(CIR_SOURCE_DIR) / "prompts" / dir).string());
    const auto builtin =
        std::string(dir) == "default" ? default_prompts() : alternate_prompts();
    CHECK(loaded == builtin);
    CHECK(loaded.caption.body == read_prompt_file(dir, "caption.txt"));
  }
  CHECK_THROWS_AS(load_prompt_dir("/nonexistent/prompts"), IoError);
}

TEST_CASE("template generator: modification, target text and caption") {
  const TemplateGenerator gen(kColorShape, 7);
  const auto img = red_cube();
  const auto mod = generate_modification(img, gen);
  CHECK(mod.rfind("change the ", 0) == 0);
  CHECK(generate_modification(img, gen) == mod);  // deterministic

  CHECK(generate_target_text(img, "change the color to blue", gen) ==
        "a blue cube");
  CHECK(generate_caption(img, gen) == "a red cube");
  CHECK(generate_caption(img, gen) == generate_caption(img, gen));
  CHECK_THROWS_AS(generate_target_text(img, "", gen), ValidationError);
  CHECK_THROWS_AS(generate_target_text(img, "paint it", gen), GenerationError);
}

TEST_CASE("template modification flips exactly one attribute") {
  const TemplateGenerator gen(kColorShape, 3);
  std::size_t colors = 0, shapes = 0;
  for (int i = 0; i < 50; ++i) {
    const auto img = red_cube("img" + std::to_string(i));
    const auto mod = generate_modification(img, gen);
    std::vector<std::string> sig = {"red", "cube"};
    REQUIRE(oracle::apply_flip({"color", "shape"}, sig, mod));
    const std::size_t diff = (sig[0] != "red") + (sig[1] != "cube");
    CHECK(diff == 1);
    colors += sig[0] != "red";
    shapes += sig[1] != "cube";
  }
  CHECK(colors > 0);
  CHECK(shapes > 0);
}

TEST_CASE("template target text matches an attribute-flip oracle") {
  SynthConfig cfg;
  cfg.images = 80;
  const auto corpus = synth_corpus(cfg, 4);
  const TemplateGenerator gen(cfg.families, 4);
  std::vector<std::string> names;
  for (const auto& f : cfg.families) names.push_back(f.name);
  for (const auto& img : corpus.images) {
    const auto mod = generate_modification(img, gen);
    const auto target = generate_target_text(img, mod, gen);
    std::vector<std::string> sig;
    for (const auto& n : names) sig.push_back(img.meta.at(n));
    REQUIRE(oracle::apply_flip(names, sig, mod));
    std::string expected = "a";
    for (const auto& v : sig) expected += " " + v;
    CHECK(target == expected);
  }
}

TEST_CASE("dispatched target-text prompt embeds the modification verbatim") {
  RecordingGenerator gen;
  const std::string mod = "Change the COLOR to blue, please!";
  generate_target_text(red_cube(), mod, gen);
  REQUIRE(gen.prompts.size() == 1);
  CHECK(gen.prompts[0].find(mod) != std::string::npos);
  CHECK(gen.prompts[0] == default_prompts().target_text.render(mod));
}

TEST_CASE("replies are stripped and blank replies fail") {
  RecordingGenerator gen;
  CHECK(generate_caption(red_cube(), gen) == "reply for img0");
  BlankGenerator blank;
  try {
    generate_caption(red_cube("blank"), blank);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.kind() == GenerationError::Kind::kEmpty);
    CHECK(e.image_id() == "blank");
  }
}

TEST_CASE("curate_dataset cardinality, order and lenient failures") {
  const std::vector<ImageRecord> imgs = {red_cube("a"), red_cube("b"),
                                         red_cube("c")};
  const TemplateGenerator gen(kColorShape, 1);
  const auto all = curate_dataset(imgs, gen);
  REQUIRE(all.triplets.size() == 3);
  REQUIRE(all.captions.size() == 3);
  CHECK(all.failures.empty());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(all.triplets[i].ref_id == imgs[i].id);
    CHECK(all.captions[i].image_id == imgs[i].id);
  }

  RecordingGenerator flaky;
  flaky.fail_id = "b";
  const auto partial = curate_dataset(imgs, flaky);
  CHECK(partial.triplets.size() == 2);
  CHECK(partial.captions.size() == 2);
  REQUIRE(partial.failures.size() == 1);
  CHECK(partial.failures[0].image_id == "b");

  CurationOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(curate_dataset(imgs, flaky, strict), GenerationError);
  CHECK_THROWS_AS(curate_dataset({}, gen), ValidationError);
}

TEST_CASE("parallel curation keeps input order") {
  SynthConfig cfg;
  cfg.images = 64;
  const auto corpus = synth_corpus(cfg, 2);
  const TemplateGenerator gen(cfg.families, 2);
  CurationOptions par;
  par.parallelism = 4;
  const auto a = curate_dataset(corpus.images, gen);
  const auto b = curate_dataset(corpus.images, gen, par);
  CHECK(a.triplets == b.triplets);
  CHECK(a.captions == b.captions);
}

TEST_CASE("curated records round-trip through JSONL") {
  const TemplateGenerator gen(kColorShape, 1);
  const auto out = curate_dataset({red_cube("a"), red_cube("b")}, gen);
  CHECK(from_jsonl<TripletRecord>(to_jsonl(out.triplets)) == out.triplets);
  CHECK(from_jsonl<CaptionRecord>(to_jsonl(out.captions)) == out.captions);
}

TEST_CASE("retry policy delays grow geometrically and cap") {
  RetryPolicy p;
  p.initial_delay = std::chrono::milliseconds(100);
  p.factor = 2.0;
  p.max_delay = std::chrono::milliseconds(350);
  CHECK(p.delay_for(0).count() == 100);
  CHECK(p.delay_for(1).count() == 200);
  CHECK(p.delay_for(2).count() == 350);
}

TEST_CASE("base64 matches RFC 4648 vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("remote request body") {
  auto cfg = remote_config("http://example.invalid");
  cfg.images = [](const std::string& id) -> std::optional<ImageAttachment> {
    if (id == "img0") return ImageAttachment{"image/png", "foo"};
    return std::nullopt;
  };
  const RemoteGenerator gen(cfg);
  CHECK(gen.host() == "http://example.invalid");
  CHECK(gen.path() == "/v1/chat/completions");
  const auto img = red_cube();
  const GenerationRequest req{img, PromptRole::kCaption, "describe", std::nullopt};
  const auto body = gen.build_request(req);
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("temperature") == 0.0);
  const auto& content = body.at("messages").at(0).at("content");
  CHECK(body.at("messages").at(0).at("role") == "user");
  CHECK(content.at(0).at("image_url").at("url") == "data:image/png;base64,Zm9v");
  CHECK(content.at(1).at("type") == "text");
  CHECK(content.at(1).at("text") == "describe");

  const auto other = red_cube("missing");
  CHECK_THROWS_AS(gen.build_request({other, PromptRole::kCaption, "x", std::nullopt}),
                  GenerationError);
}

TEST_CASE("remote reply parsing") {
  CHECK(RemoteGenerator::parse_reply(reply_with("a red cube")) == "a red cube");
  const auto parts = json{
      {"choices",
       {{{"message",
          {{"content", {{{"type", "text"}, {"text", "a "}}, {{"type", "text"}, {"text", "cube"}}}}}}}}}};
  CHECK(RemoteGenerator::parse_reply(parts.dump()) == "a cube");
  CHECK_THROWS_AS(RemoteGenerator::parse_reply("{not json"), DecodeError);
  CHECK_THROWS_AS(RemoteGenerator::parse_reply("{\"choices\": []}"), DecodeError);
  CHECK_THROWS_AS(RemoteGenerator::parse_reply("{\"choices\": [{\"message\": {\"content\": 3}}]}"),
                  DecodeError);
}

TEST_CASE("remote generator against a local server") {
  std::atomic<int> calls{0};
  std::string seen_auth;
  json seen_body;
  std::mutex mu;
  MockServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    std::lock_guard lock(mu);
    seen_auth = req.get_header_value("Authorization");
    seen_body = json::parse(req.body);
    res.set_content(reply_with("  a blue cube "), "application/json");
  });
  const RemoteGenerator gen(remote_config(server.url()));
  const auto img = red_cube();
  CHECK(generate_target_text(img, "change the color to blue", gen) ==
        "a blue cube");
  CHECK(calls == 1);
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_body.at("model") == "test-model");
  CHECK(seen_body.at("messages").at(0).at("content").at(0).at("text").get<std::string>().find(
            "change the color to blue") != std::string::npos);
}

TEST_CASE("remote generator retries transient statuses with backoff") {
  std::atomic<int> calls{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(reply_with("ok"), "application/json");
  });
  auto cfg = remote_config(server.url());
  std::vector<long> delays;
  cfg.sleep = [&](std::chrono::milliseconds d) { delays.push_back(d.count()); };
  const RemoteGenerator gen(cfg);
  CHECK(generate_caption(red_cube(), gen) == "ok");
  CHECK(calls == 3);
  CHECK(delays == std::vector<long>{500, 1000});
}

TEST_CASE("remote generator gives up after the attempt budget") {
  std::atomic<int> calls{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  const RemoteGenerator gen(remote_config(server.url()));
  try {
    generate_caption(red_cube("img7"), gen);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.kind() == GenerationError::Kind::kTransport);
    CHECK(e.image_id() == "img7");
    CHECK(std::string(e.what()).find("3 attempt") != std::string::npos);
  }
  CHECK(calls == 3);
}

TEST_CASE("remote generator does not retry client errors") {
  std::atomic<int> calls{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
  });
  const RemoteGenerator gen(remote_config(server.url()));
  CHECK_THROWS_AS(generate_caption(red_cube(), gen), GenerationError);
  CHECK(calls == 1);
}

TEST_CASE("remote malformed JSON reply is a decode error") {
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": [", "application/json");
  });
  const RemoteGenerator gen(remote_config(server.url()));
  try {
    generate_caption(red_cube("img3"), gen);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.kind() == GenerationError::Kind::kDecode);
    CHECK(e.image_id() == "img3");
  }
}

TEST_CASE("remote timeout is a transport error carrying the image id") {
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2500));
    res.set_content(reply_with("late"), "application/json");
  });
  auto cfg = remote_config(server.url());
  cfg.timeout = std::chrono::seconds(1);
  cfg.retry.max_attempts = 1;
  const RemoteGenerator gen(cfg);
  try {
    generate_modification(red_cube("slow"), gen);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.kind() == GenerationError::Kind::kTransport);
    CHECK(e.image_id() == "slow");
  }
}

TEST_CASE("unreachable endpoint is a transport error") {
  auto cfg = remote_config("http://127.0.0.1:9");
  cfg.timeout = std::chrono::seconds(1);
  const RemoteGenerator gen(cfg);
  try {
    generate_caption(red_cube(), gen);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.kind() == GenerationError::Kind::kTransport);
  }
}

TEST_CASE("directory image resolver") {
  const auto dir = fs::temp_directory_path() / "cir_test_images";
  fs::create_directories(dir);
  write_file((dir / "img0.jpg").string(), "JPEGDATA");
  const auto resolve = directory_image_resolver(dir.string());
  const auto att = resolve("img0");
  REQUIRE(att.has_value());
  CHECK(att->mime == "image/jpeg");
  CHECK(att->bytes == "JPEGDATA");
  CHECK_FALSE(resolve("nope").has_value());
}

TEST_CASE("remote generator config validation") {
  RemoteGeneratorConfig c;
  CHECK_THROWS_AS(RemoteGenerator{c}, ValidationError);
  c.endpoint = "localhost:80";
  c.model = "m";
  CHECK_THROWS_AS(RemoteGenerator{c}, ValidationError);
  c.endpoint = "http://h:1/custom/path";
  const RemoteGenerator g(c);
  CHECK(g.host() == "http://h:1");
  CHECK(g.path() == "/custom/path");
}
