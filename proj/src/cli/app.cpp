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

#include "cir/cli/app.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include "cir/cli/manifest.hpp"
#include "cir/core/binary_io.hpp"
#include "cir/core/errors.hpp"
#include "cir/core/parallel.hpp"
#include "cir/core/rng.hpp"
#include "cir/corpus/cirf.hpp"
#include "cir/corpus/jsonl.hpp"
#include "cir/curation/curate.hpp"
#include "cir/curation/remote_generator.hpp"
#include "cir/curation/template_generator.hpp"
#include "cir/encoder/checkpoint.hpp"
#include "cir/metrics/metrics.hpp"
#include "cir/retrieval/index.hpp"
#include "cir/retrieval/retrieval.hpp"
#include "cir/training/grad_check.hpp"
#include "cir/version.hpp"

namespace cir::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

json PipelineConfig::to_json() const {
  return json{{"encoder", config_to_json(encoder)},
              {"train", train_config_to_json(train)},
              {"grad_check", grad_check}};
}

PipelineConfig load_pipeline_config(const std::optional<std::string>& path) {
  PipelineConfig cfg;
  if (!path) return cfg;
  json j;
  try {
    j = json::parse(read_file(*path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + *path + "': " + e.what());
  }
  if (!j.is_object()) {
    throw ValidationError("config '" + *path + "' must be a JSON object");
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "encoder" && key != "train" && key != "grad_check") {
      throw ValidationError("config '" + *path + "': unknown section '" + key +
                            "'");
    }
  }
  if (j.contains("encoder")) cfg.encoder = config_from_json(j["encoder"]);
  if (j.contains("train")) cfg.train = train_config_from_json(j["train"]);
  if (j.contains("grad_check")) {
    if (!j["grad_check"].is_object()) {
      throw ValidationError("config: grad_check must be an object");
    }
    cfg.grad_check = j["grad_check"];
  }
  return cfg;
}

json GeneratorOptions::to_json() const {
  json j{{"kind", kind}, {"attrs", attrs}, {"seed", seed}};
  if (kind == "remote") {
    j["endpoint"] = endpoint;
    j["model"] = model;
    j["image_dir"] = image_dir;
  }
  j["prompts_dir"] = prompts_dir;
  return j;
}

namespace {

std::vector<AttributeFamily> families_from(const std::string& attrs) {
  return attrs.empty() ? SynthConfig::default_families()
                       : parse_attribute_spec(attrs);
}

}  // namespace

std::unique_ptr<TextGenerator> make_generator(const GeneratorOptions& o) {
  if (o.kind == "template") {
    return std::make_unique<TemplateGenerator>(families_from(o.attrs), o.seed);
  }
  if (o.kind == "remote") {
    if (o.endpoint.empty()) {
      throw ValidationError("--endpoint is required with --generator remote");
    }
    if (o.model.empty()) {
      throw ValidationError("--model is required with --generator remote");
    }
    RemoteGeneratorConfig rc;
    rc.endpoint = o.endpoint;
    rc.model = o.model;
    if (const char* key = std::getenv(kApiKeyEnv)) rc.api_key = key;
    if (!o.image_dir.empty()) rc.images = directory_image_resolver(o.image_dir);
    return std::make_unique<RemoteGenerator>(std::move(rc));
  }
  throw ValidationError("--generator must be 'template' or 'remote', got '" +
                        o.kind + "'");
}

PromptSet resolve_prompts(const GeneratorOptions& o) {
  return o.prompts_dir.empty() ? default_prompts()
                               : load_prompt_dir(o.prompts_dir);
}

namespace {

// ---------------------------------------------------------------------------
// Shared helpers

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> argv;
};

void log(const Context& ctx, const std::string& line) {
  ctx.err << "[cir] " << line << '\n';
}

void require_file(const std::string& flag, const std::string& path) {
  if (!fs::exists(path)) {
    throw IoError(flag + ": '" + path + "' does not exist");
  }
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + out + "'");
  }
  return dir;
}

void write_text(RunManifest& manifest, const fs::path& path,
                std::string_view text) {
  write_file(path.string(), text);
  manifest.add_output(path.filename());
}

void add_generator_flags(CLI::App* cmd, GeneratorOptions& g) {
  cmd->add_option("--generator", g.kind, "template or remote")
      ->check(CLI::IsMember({"template", "remote"}));
  cmd->add_option("--attrs", g.attrs,
                  "attribute spec for the template generator, e.g. "
                  "\"color=red,blue;shape=cube,cone\"");
  cmd->add_option("--endpoint", g.endpoint, "chat-completions URL");
  cmd->add_option("--model", g.model, "remote model name");
  cmd->add_option("--image-dir", g.image_dir,
                  "directory with <image id>.png|jpg|jpeg|webp for the remote "
                  "generator");
  cmd->add_option("--prompts", g.prompts_dir,
                  "directory with modification.txt, target_text.txt, "
                  "caption.txt");
}

struct QueryRecord {
  std::string query_id;
  std::string ref_id;
  std::string modification;
  std::optional<std::string> generated_target_text;
};

std::vector<QueryRecord> read_queries(const std::string& path) {
  std::vector<QueryRecord> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      QueryRecord q;
      q.query_id = j.contains("query_id")
                       ? j.at("query_id").get<std::string>()
                       : "q" + std::to_string(out.size());
      q.ref_id = j.at("ref_id").get<std::string>();
      q.modification = j.at("modification").get<std::string>();
      if (j.contains("generated_target_text") &&
          !j.at("generated_target_text").is_null()) {
        q.generated_target_text =
            j.at("generated_target_text").get<std::string>();
      }
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw ValidationError("no queries in '" + path + "'");
  return out;
}

// Index and checkpoint loaded together; the index is re-encoded when it was
// built from a different checkpoint.
struct LoadedIndex {
  EncoderParams params;
  Index index;
};

LoadedIndex load_index_for(const Context& ctx, const std::string& index_dir,
                           const std::string& checkpoint, std::size_t threads) {
  require_file("--index", index_dir);
  require_file("--checkpoint", checkpoint);
  LoadedIndex li{load_checkpoint(checkpoint), load_index(index_dir)};
  if (li.index.params_digest != params_digest(li.params)) {
    log(ctx, "index was built from another checkpoint; re-encoding " +
                 std::to_string(li.index.size()) + " candidates");
    li.index = reencode_if_stale(std::move(li.index), li.params, threads);
  }
  return li;
}

std::vector<ImageRecord> references_for(const std::optional<std::string>& corpus,
                                        const Index& index) {
  if (!corpus) return index.raw;
  require_file("--corpus", *corpus);
  return load_features(*corpus);
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthGenArgs {
  std::uint64_t seed = 0;
  std::size_t images = 500;
  std::string attrs;
  std::size_t tokens = 4;
  std::size_t dim = 16;
  double noise = 0.05;
  std::size_t cases = 100;
  std::string out;
};

int cmd_synth_gen(const Context& ctx, const SynthGenArgs& a) {
  SynthConfig sc;
  sc.families = families_from(a.attrs);
  sc.images = a.images;
  sc.tokens = a.tokens;
  sc.dim = a.dim;
  sc.noise = a.noise;
  sc.eval_cases = a.cases;
  sc.validate();
  const auto corpus = synth_corpus(sc, a.seed);

  const auto dir = prepare_out(a.out);
  RunManifest manifest("synth-gen", ctx.argv);
  manifest.set_seed(a.seed);
  json families = json::array();
  for (const auto& f : sc.families) {
    families.push_back({{"name", f.name}, {"values", f.values}});
  }
  manifest.set_config({{"families", families},
                       {"images", sc.images},
                       {"tokens", sc.tokens},
                       {"dim", sc.dim},
                       {"noise", sc.noise},
                       {"eval_cases", sc.eval_cases}});
  save_features(corpus.images, (dir / "corpus.cirf").string());
  manifest.add_output("corpus.cirf");
  write_jsonl(corpus.eval_cases, (dir / "eval_cases.jsonl").string());
  manifest.add_output("eval_cases.jsonl");
  manifest.write(dir);
  ctx.out << "wrote " << corpus.images.size() << " images and "
          << corpus.eval_cases.size() << " eval cases to " << a.out << '\n';
  return kExitOk;
}

struct CurateArgs {
  std::string corpus;
  std::optional<std::string> holdout;
  GeneratorOptions gen;
  bool strict = false;
  std::size_t threads = 1;
  std::string out;
};

int cmd_curate(const Context& ctx, const CurateArgs& a) {
  require_file("--corpus", a.corpus);
  auto images = load_features(a.corpus);
  RunManifest manifest("curate", ctx.argv);
  manifest.add_input("corpus", a.corpus);
  if (a.holdout) {
    require_file("--holdout-cases", *a.holdout);
    manifest.add_input("holdout_cases", *a.holdout);
    std::set<std::string> held;
    for (const auto& c : read_jsonl<EvalCase>(*a.holdout)) held.insert(c.ref_id);
    std::erase_if(images, [&](const ImageRecord& r) { return held.contains(r.id); });
    log(ctx, "holding out " + std::to_string(held.size()) +
                 " evaluation references");
  }
  if (!a.gen.prompts_dir.empty()) manifest.add_input("prompts", a.gen.prompts_dir);
  const auto gen = make_generator(a.gen);
  CurationOptions opts{resolve_prompts(a.gen), a.strict, a.threads};
  const auto result = curate_dataset(images, *gen, opts);

  const auto dir = prepare_out(a.out);
  manifest.set_seed(a.gen.seed);
  manifest.set_config({{"generator", a.gen.to_json()},
                       {"strict", a.strict},
                       {"threads", a.threads}});
  write_jsonl(result.triplets, (dir / "triplets.jsonl").string());
  manifest.add_output("triplets.jsonl");
  write_jsonl(result.captions, (dir / "captions.jsonl").string());
  manifest.add_output("captions.jsonl");
  std::string failures;
  for (const auto& f : result.failures) {
    failures += json{{"image_id", f.image_id}, {"message", f.message}}.dump();
    failures += '\n';
    log(ctx, "curation failed: " + f.message);
  }
  write_text(manifest, dir / "failures.jsonl", failures);
  manifest.write(dir);
  ctx.out << "curated " << result.triplets.size() << " triplets and "
          << result.captions.size() << " captions (" << result.failures.size()
          << " failures)\n";
  return kExitOk;
}

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<double> temperature;
  std::optional<double> loss_t_weight;
  std::optional<double> loss_c_weight;

  void apply(TrainConfig& t) const {
    if (seed) t.seed = *seed;
    if (epochs) t.epochs = *epochs;
    if (lr) t.lr = *lr;
    if (batch_size) t.batch_size = *batch_size;
    if (temperature) t.temperature = *temperature;
    if (loss_t_weight) t.weights.target_text = *loss_t_weight;
    if (loss_c_weight) t.weights.caption = *loss_c_weight;
    t.validate();
  }
};

void add_train_flags(CLI::App* cmd, TrainOverrides& o) {
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--epochs", o.epochs, "number of epochs");
  cmd->add_option("--lr", o.lr, "initial learning rate");
  cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
  cmd->add_option("--temperature", o.temperature, "InfoNCE temperature");
  cmd->add_option("--loss-t-weight", o.loss_t_weight,
                  "weight of the target-text loss (0 disables it)");
  cmd->add_option("--loss-c-weight", o.loss_c_weight,
                  "weight of the caption loss (0 disables it)");
}

struct TrainInputs {
  std::string corpus;
  std::string triplets;
  std::string captions;
};

struct LoadedTrainData {
  std::vector<ImageRecord> images;
  std::vector<TripletRecord> triplets;
  std::vector<CaptionRecord> captions;
};

LoadedTrainData load_train_data(const TrainInputs& in, RunManifest& manifest) {
  require_file("--corpus", in.corpus);
  require_file("--triplets", in.triplets);
  require_file("--captions", in.captions);
  manifest.add_input("corpus", in.corpus);
  manifest.add_input("triplets", in.triplets);
  manifest.add_input("captions", in.captions);
  return {load_features(in.corpus), read_jsonl<TripletRecord>(in.triplets),
          read_jsonl<CaptionRecord>(in.captions)};
}

TrainResult run_training(const Context& ctx, const LoadedTrainData& data,
                         const EncoderConfig& enc, const TrainConfig& tc,
                         const std::string& label) {
  const auto set = build_training_set(data.images, data.triplets,
                                      data.captions, enc);
  return train(set, enc, tc, std::nullopt, [&](const EpochStats& s) {
    std::ostringstream line;
    line << label << "epoch " << s.epoch << " lr " << s.lr << " loss_t "
         << s.loss_t << " loss_c " << s.loss_c << " total " << s.loss_total;
    log(ctx, line.str());
  });
}

struct TrainArgs {
  TrainInputs inputs;
  std::optional<std::string> config;
  TrainOverrides overrides;
  std::string out;
};

int cmd_train(const Context& ctx, const TrainArgs& a) {
  RunManifest manifest("train", ctx.argv);
  if (a.config) {
    require_file("--config", *a.config);
    manifest.add_input("config", *a.config);
  }
  auto cfg = load_pipeline_config(a.config);
  a.overrides.apply(cfg.train);
  const auto data = load_train_data(a.inputs, manifest);
  const auto result = run_training(ctx, data, cfg.encoder, cfg.train, "");

  const auto dir = prepare_out(a.out);
  manifest.set_seed(cfg.train.seed);
  manifest.set_config(cfg.to_json());
  save_checkpoint(result.params, (dir / "checkpoint.cirp").string());
  manifest.add_output("checkpoint.cirp");
  write_text(manifest, dir / "loss_trace.csv", result.trace.to_csv());
  manifest.write(dir);
  ctx.out << "initial loss " << result.trace.initial.total << ", final loss "
          << result.trace.epochs.back().loss_total << "; checkpoint written to "
          << (dir / "checkpoint.cirp").string() << '\n';
  return kExitOk;
}

struct GradCheckArgs {
  std::optional<std::string> config;
  std::optional<std::size_t> samples;
  std::optional<double> eps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::string> out;
};

int cmd_grad_check(const Context& ctx, const GradCheckArgs& a) {
  RunManifest manifest("grad-check", ctx.argv);
  if (a.config) {
    require_file("--config", *a.config);
    manifest.add_input("config", *a.config);
  }
  PipelineConfig cfg = load_pipeline_config(a.config);
  // Small defaults unless the file names an encoder section.
  if (!a.config || !json::parse(read_file(*a.config)).contains("encoder")) {
    cfg.encoder.k = 4;
    cfg.encoder.d = 16;
    cfg.encoder.blocks = 1;
    cfg.encoder.heads = 4;
  }
  const json& gc = cfg.grad_check;
  static const std::set<std::string> kKeys = {
      "batch_size", "samples", "eps", "seed", "runs", "scale", "tolerance"};
  for (const auto& [key, _] : gc.items()) {
    if (!kKeys.contains(key)) {
      throw ValidationError("grad_check config: unknown key '" + key + "'");
    }
  }
  std::size_t batch = 4, samples = 50, runs = 5;
  double eps = 1e-4, scale = 0.1, tolerance = 1e-4;
  std::uint64_t seed = 0;
  try {
    batch = gc.value("batch_size", batch);
    samples = gc.value("samples", samples);
    eps = gc.value("eps", eps);
    seed = gc.value("seed", seed);
    runs = gc.value("runs", runs);
    scale = gc.value("scale", scale);
    tolerance = gc.value("tolerance", tolerance);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("grad_check config: ") + e.what());
  }
  if (a.samples) samples = *a.samples;
  if (a.eps) eps = *a.eps;
  if (a.seed) seed = *a.seed;
  if (a.runs) runs = *a.runs;
  if (batch < 2 || runs == 0) {
    throw ValidationError("grad-check: batch_size must be >= 2 and runs >= 1");
  }

  SynthConfig sc;
  sc.images = batch;
  sc.dim = cfg.encoder.image_dim;
  sc.eval_cases = 0;
  if (sc.dim < sc.one_hot_width()) sc.families.resize(1);

  json report = json::array();
  double worst = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t run_seed = mix_seed(seed, r);
    const auto corpus = synth_corpus(sc, run_seed);
    TemplateGenerator gen(sc.families, run_seed);
    const auto cur = curate_dataset(corpus.images, gen);
    const auto set = build_training_set(corpus.images, cur.triplets,
                                        cur.captions, cfg.encoder);
    const auto params = random_params(cfg.encoder, run_seed, scale);
    GradCheckOptions o;
    o.eps = eps;
    o.samples = samples;
    o.seed = run_seed;
    o.temperature = cfg.train.temperature;
    o.weights = cfg.train.weights;
    const auto rep = grad_check(params, set.triplets, set.captions, o);
    worst = std::max(worst, rep.max_rel_error);
    report.push_back({{"run", r}, {"max_rel_error", rep.max_rel_error}});
    ctx.out << "run " << r << ": max_rel_error " << rep.max_rel_error << '\n';
  }
  const bool pass = worst < tolerance;
  ctx.out << (pass ? "PASS" : "FAIL") << ": worst max_rel_error " << worst
          << " (tolerance " << tolerance << ")\n";
  if (a.out) {
    const auto dir = prepare_out(*a.out);
    manifest.set_seed(seed);
    manifest.set_config({{"encoder", config_to_json(cfg.encoder)},
                         {"batch_size", batch},
                         {"samples", samples},
                         {"eps", eps},
                         {"runs", runs},
                         {"scale", scale},
                         {"tolerance", tolerance}});
    write_text(manifest, dir / "grad_check.json",
               json{{"runs", report}, {"worst", worst}, {"pass", pass}}.dump(2) +
                   "\n");
    manifest.write(dir);
  }
  return pass ? kExitOk : kExitValidation;
}

struct IndexArgs {
  std::string corpus;
  std::string checkpoint;
  std::size_t threads = 1;
  std::string out;
};

int cmd_index(const Context& ctx, const IndexArgs& a) {
  require_file("--corpus", a.corpus);
  require_file("--checkpoint", a.checkpoint);
  RunManifest manifest("index", ctx.argv);
  manifest.add_input("corpus", a.corpus);
  manifest.add_input("checkpoint", a.checkpoint);
  const auto params = load_checkpoint(a.checkpoint);
  const auto index = build_index(load_features(a.corpus), params, a.threads);
  const auto dir = prepare_out(a.out);
  save_index(index, dir);
  for (const char* f : {"candidates.cirf", "features.cirf", "index.json"}) {
    manifest.add_output(f);
  }
  manifest.set_config({{"threads", a.threads}});
  manifest.write(dir);
  ctx.out << "indexed " << index.size() << " candidates into " << a.out << '\n';
  return kExitOk;
}

struct QueryArgs {
  std::string index;
  std::string checkpoint;
  std::optional<std::string> baseline_checkpoint;
  std::optional<std::string> corpus;
  GeneratorOptions gen;
  std::size_t threads = 1;
  std::string out;
};

void add_query_flags(CLI::App* cmd, QueryArgs& q) {
  cmd->add_option("--index", q.index, "index directory")->required();
  cmd->add_option("--checkpoint", q.checkpoint, "CIRP checkpoint")->required();
  cmd->add_option("--baseline-checkpoint", q.baseline_checkpoint,
                  "frozen encoder for baseline_target_text");
  cmd->add_option("--corpus", q.corpus,
                  "CIRF file with reference images (default: the candidates)");
  cmd->add_option("--threads", q.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", q.out, "output directory")->required();
  add_generator_flags(cmd, q.gen);
}

void record_query_inputs(RunManifest& m, const QueryArgs& q) {
  m.add_input("index", q.index);
  m.add_input("checkpoint", q.checkpoint);
  if (q.baseline_checkpoint) {
    require_file("--baseline-checkpoint", *q.baseline_checkpoint);
    m.add_input("baseline_checkpoint", *q.baseline_checkpoint);
  }
  if (q.corpus) m.add_input("corpus", *q.corpus);
  if (!q.gen.prompts_dir.empty()) m.add_input("prompts", q.gen.prompts_dir);
}

struct RetrieveArgs {
  QueryArgs q;
  std::string queries;
  std::string mode = "fused";
  std::size_t topk = 50;
};

int cmd_retrieve(const Context& ctx, const RetrieveArgs& a) {
  const auto mode = parse_mode(a.mode);
  require_file("--queries", a.queries);
  auto li = load_index_for(ctx, a.q.index, a.q.checkpoint, a.q.threads);
  RunManifest manifest("retrieve", ctx.argv);
  record_query_inputs(manifest, a.q);
  manifest.add_input("queries", a.queries);
  std::optional<EncoderParams> baseline;
  if (a.q.baseline_checkpoint) baseline = load_checkpoint(*a.q.baseline_checkpoint);
  const auto refs = references_for(a.q.corpus, li.index);
  const ImageLookup lookup(refs);
  const auto queries = read_queries(a.queries);
  const auto gen = make_generator(a.q.gen);
  const auto prompts = resolve_prompts(a.q.gen);
  const Retriever retriever(li.index, li.params,
                            baseline ? &*baseline : nullptr, a.q.threads);

  std::vector<std::string> lines(queries.size());
  parallel_for(queries.size(), a.q.threads, [&](std::size_t i) {
    const auto& q = queries[i];
    QueryBundle bundle{q.query_id, lookup.at(q.ref_id), q.modification,
                       q.generated_target_text};
    if (needs_target_text(mode) && !bundle.generated_target_text) {
      generate_query_target_text(bundle, *gen, prompts);
    }
    const auto ranking = retriever.retrieve(bundle, mode, a.topk);
    json r = json::array();
    for (const auto& e : ranking) r.push_back({{"id", e.id}, {"score", e.score}});
    lines[i] = json{{"query_id", q.query_id},
                    {"mode", mode_name(mode)},
                    {"ranking", std::move(r)}}
                   .dump() +
               "\n";
  });
  std::string body;
  for (const auto& l : lines) body += l;
  const auto dir = prepare_out(a.q.out);
  manifest.set_seed(a.q.gen.seed);
  manifest.set_config({{"mode", mode_name(mode)},
                       {"topk", a.topk},
                       {"threads", a.q.threads},
                       {"generator", a.q.gen.to_json()}});
  write_text(manifest, dir / "rankings.jsonl", body);
  manifest.write(dir);
  ctx.out << "ranked " << queries.size() << " queries (" << mode_name(mode)
          << ", top " << a.topk << ")\n";
  return kExitOk;
}

struct EvaluateArgs {
  QueryArgs q;
  std::string cases;
  std::string metrics;
  std::string mode = "fused";
};

struct SuiteInputs {
  LoadedIndex li;
  std::optional<EncoderParams> baseline;
  std::vector<ImageRecord> refs;
  std::vector<EvalCase> cases;
  std::unique_ptr<TextGenerator> gen;
  SuiteOptions options;
};

std::unique_ptr<SuiteInputs> load_suite(const Context& ctx, const QueryArgs& q,
                                        const std::string& cases,
                                        const std::string& metrics,
                                        RunManifest& manifest) {
  require_file("--cases", cases);
  auto s = std::make_unique<SuiteInputs>(SuiteInputs{
      load_index_for(ctx, q.index, q.checkpoint, q.threads), std::nullopt,
      {}, read_jsonl<EvalCase>(cases), make_generator(q.gen), {}});
  record_query_inputs(manifest, q);
  manifest.add_input("cases", cases);
  if (q.baseline_checkpoint) s->baseline = load_checkpoint(*q.baseline_checkpoint);
  s->refs = references_for(q.corpus, s->li.index);
  s->options.spec =
      metrics.empty() ? MetricSpec::defaults() : MetricSpec::parse(metrics);
  s->options.generator = s->gen.get();
  s->options.prompts = resolve_prompts(q.gen);
  s->options.threads = q.threads;
  return s;
}

int cmd_evaluate(const Context& ctx, const EvaluateArgs& a) {
  const auto mode = parse_mode(a.mode);
  RunManifest manifest("evaluate", ctx.argv);
  auto s = load_suite(ctx, a.q, a.cases, a.metrics, manifest);
  const ImageLookup lookup(s->refs);
  const Retriever retriever(s->li.index, s->li.params,
                            s->baseline ? &*s->baseline : nullptr, a.q.threads);
  const auto report = evaluate_suite(s->cases, lookup, retriever, mode, s->options);

  const auto dir = prepare_out(a.q.out);
  manifest.set_seed(a.q.gen.seed);
  manifest.set_config({{"mode", mode_name(mode)},
                       {"metrics", s->options.spec.names()},
                       {"threads", a.q.threads},
                       {"generator", a.q.gen.to_json()}});
  write_text(manifest, dir / "report.json", report.to_json().dump(2) + "\n");
  const auto table = format_table({report});
  write_text(manifest, dir / "report.txt", table);
  manifest.write(dir);
  ctx.out << table;
  return kExitOk;
}

struct AblateArgs {
  QueryArgs q;
  std::string cases;
  std::string metrics;
  bool retrain = false;
  TrainInputs inputs;
  std::optional<std::string> config;
  TrainOverrides overrides;
};

int cmd_ablate(const Context& ctx, const AblateArgs& a) {
  RunManifest manifest("ablate", ctx.argv);
  auto s = load_suite(ctx, a.q, a.cases, a.metrics, manifest);
  const ImageLookup lookup(s->refs);
  const auto dir = prepare_out(a.q.out);

  std::vector<EvalReport> reports;
  {
    const Retriever retriever(s->li.index, s->li.params,
                              s->baseline ? &*s->baseline : nullptr,
                              a.q.threads);
    for (const auto mode : kAllModes) {
      log(ctx, "evaluating " + std::string(mode_name(mode)));
      reports.push_back(
          evaluate_suite(s->cases, lookup, retriever, mode, s->options));
    }
  }

  json config{{"metrics", s->options.spec.names()},
              {"threads", a.q.threads},
              {"generator", a.q.gen.to_json()},
              {"retrain_ablations", a.retrain}};
  std::vector<EvalReport> retrained;
  if (a.retrain) {
    if (a.inputs.corpus.empty() || a.inputs.triplets.empty() ||
        a.inputs.captions.empty()) {
      throw ValidationError(
          "--retrain-ablations needs --train-corpus, --triplets and --captions");
    }
    if (a.config) {
      require_file("--config", *a.config);
      manifest.add_input("config", *a.config);
    }
    auto cfg = load_pipeline_config(a.config);
    a.overrides.apply(cfg.train);
    config["pipeline"] = cfg.to_json();
    manifest.set_seed(cfg.train.seed);
    const auto data = load_train_data(a.inputs, manifest);

    struct Variant {
      const char* name;
      double w_t, w_c;
      std::uint64_t seed_offset;
    };
    const Variant variants[] = {{"full", 1.0, 1.0, 0},
                                {"wo_lc", 1.0, 0.0, 0},
                                {"wo_lt", 0.0, 1.0, 0},
                                {"full_reseed", 1.0, 1.0, 1}};
    fs::create_directories(dir / "checkpoints");
    for (const auto& v : variants) {
      TrainConfig tc = cfg.train;
      tc.weights = {v.w_t * cfg.train.weights.target_text,
                    v.w_c * cfg.train.weights.caption};
      tc.seed = cfg.train.seed + v.seed_offset;
      const auto result = run_training(ctx, data, cfg.encoder, tc,
                                       std::string(v.name) + ": ");
      const auto ckpt = dir / "checkpoints" / (std::string(v.name) + ".cirp");
      save_checkpoint(result.params, ckpt.string());
      manifest.add_output(fs::relative(ckpt, dir));
      const auto index = build_index(s->li.index.raw, result.params, a.q.threads);
      const Retriever retriever(index, result.params, nullptr, a.q.threads);
      auto rep = evaluate_suite(s->cases, lookup, retriever,
                                RetrievalMode::kFused, s->options);
      rep.mode = std::string("fused[") + v.name + "]";
      retrained.push_back(std::move(rep));
    }
  } else {
    manifest.set_seed(a.q.gen.seed);
  }
  manifest.set_config(config);

  json out{{"modes", json::array()}, {"retrained", json::array()}};
  for (const auto& r : reports) out["modes"].push_back(r.to_json());
  for (const auto& r : retrained) out["retrained"].push_back(r.to_json());
  write_text(manifest, dir / "ablation.json", out.dump(2) + "\n");
  std::string table = format_table(reports);
  if (!retrained.empty()) table += "\n" + format_table(retrained);
  write_text(manifest, dir / "ablation.txt", table);
  manifest.write(dir);
  ctx.out << table;
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const TransportError*>(&e)) {
    return kExitIo;
  }
  if (const auto* g = dynamic_cast<const GenerationError*>(&e)) {
    return g->kind() == GenerationError::Kind::kTransport ? kExitIo
                                                          : kExitValidation;
  }
  return kExitValidation;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  Context ctx{out, err, {}};
  for (int i = 0; i < argc; ++i) ctx.argv.emplace_back(argv[i]);

  CLI::App app{"Composed image retrieval: curation, training, indexing and "
               "evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthGenArgs synth;
  auto* c_synth = app.add_subcommand("synth-gen", "generate a synthetic corpus");
  c_synth->add_option("--seed", synth.seed, "corpus seed");
  c_synth->add_option("--images", synth.images, "number of images")
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--attrs", synth.attrs, "attribute families");
  c_synth->add_option("--tokens", synth.tokens, "tokens per image");
  c_synth->add_option("--dim", synth.dim, "token width");
  c_synth->add_option("--noise", synth.noise, "token noise std");
  c_synth->add_option("--cases", synth.cases, "evaluation cases");
  c_synth->add_option("--out", synth.out, "output directory")->required();

  CurateArgs curate;
  auto* c_curate = app.add_subcommand("curate", "generate triplets and captions");
  c_curate->add_option("--corpus", curate.corpus, "CIRF corpus")->required();
  c_curate->add_option("--holdout-cases", curate.holdout,
                       "eval cases whose reference images are skipped");
  c_curate->add_option("--seed", curate.gen.seed, "generator seed");
  c_curate->add_flag("--strict", curate.strict, "abort on the first failure");
  c_curate->add_option("--threads", curate.threads, "concurrent requests")
      ->check(CLI::PositiveNumber);
  c_curate->add_option("--out", curate.out, "output directory")->required();
  add_generator_flags(c_curate, curate.gen);

  TrainArgs trainer;
  auto* c_train = app.add_subcommand("train", "fine-tune the encoder");
  c_train->add_option("--corpus", trainer.inputs.corpus, "CIRF corpus")->required();
  c_train->add_option("--triplets", trainer.inputs.triplets, "triplets JSONL")
      ->required();
  c_train->add_option("--captions", trainer.inputs.captions, "captions JSONL")
      ->required();
  c_train->add_option("--config", trainer.config, "JSON config file");
  c_train->add_option("--out", trainer.out, "output directory")->required();
  add_train_flags(c_train, trainer.overrides);

  GradCheckArgs gcheck;
  auto* c_grad = app.add_subcommand("grad-check",
                                    "compare analytic and numeric gradients");
  c_grad->add_option("--config", gcheck.config, "JSON config file");
  c_grad->add_option("--samples", gcheck.samples, "coordinates per run");
  c_grad->add_option("--eps", gcheck.eps, "finite-difference step");
  c_grad->add_option("--seed", gcheck.seed, "sampling seed");
  c_grad->add_option("--runs", gcheck.runs, "random configurations");
  c_grad->add_option("--out", gcheck.out, "output directory");

  IndexArgs indexer;
  auto* c_index = app.add_subcommand("index", "encode candidate images");
  c_index->add_option("--corpus", indexer.corpus, "CIRF corpus")->required();
  c_index->add_option("--checkpoint", indexer.checkpoint, "CIRP checkpoint")
      ->required();
  c_index->add_option("--threads", indexer.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  c_index->add_option("--out", indexer.out, "index directory")->required();

  RetrieveArgs retr;
  auto* c_retr = app.add_subcommand("retrieve", "rank candidates for queries");
  add_query_flags(c_retr, retr.q);
  c_retr->add_option("--queries", retr.queries, "queries JSONL")->required();
  c_retr->add_option("--mode", retr.mode, "retrieval mode");
  c_retr->add_option("--topk", retr.topk, "ranking length")
      ->check(CLI::PositiveNumber);
  c_retr->add_option("--seed", retr.q.gen.seed, "generator seed");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "score an evaluation suite");
  add_query_flags(c_eval, eval.q);
  c_eval->add_option("--cases", eval.cases, "eval cases JSONL")->required();
  c_eval->add_option("--metrics", eval.metrics,
                     "comma-separated metrics, e.g. R@1,R@5,mAP@10,Rs@1");
  c_eval->add_option("--mode", eval.mode, "retrieval mode");
  c_eval->add_option("--seed", eval.q.gen.seed, "generator seed");

  AblateArgs abl;
  auto* c_abl = app.add_subcommand("ablate", "evaluate every retrieval mode");
  add_query_flags(c_abl, abl.q);
  c_abl->add_option("--cases", abl.cases, "eval cases JSONL")->required();
  c_abl->add_option("--metrics", abl.metrics, "comma-separated metrics");
  c_abl->add_flag("--retrain-ablations", abl.retrain,
                  "also train full, w/o L_c, w/o L_t and re-seeded checkpoints");
  c_abl->add_option("--train-corpus", abl.inputs.corpus,
                    "CIRF corpus for retraining");
  c_abl->add_option("--triplets", abl.inputs.triplets, "triplets JSONL");
  c_abl->add_option("--captions", abl.inputs.captions, "captions JSONL");
  c_abl->add_option("--config", abl.config, "JSON config file");
  add_train_flags(c_abl, abl.overrides);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForVersion&) {
      out << kVersion << '\n';
      return kExitOk;
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::Success&) {
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      return kExitValidation;
    }
    if (c_synth->parsed()) return cmd_synth_gen(ctx, synth);
    if (c_curate->parsed()) return cmd_curate(ctx, curate);
    if (c_train->parsed()) return cmd_train(ctx, trainer);
    if (c_grad->parsed()) return cmd_grad_check(ctx, gcheck);
    if (c_index->parsed()) return cmd_index(ctx, indexer);
    if (c_retr->parsed()) return cmd_retrieve(ctx, retr);
    if (c_eval->parsed()) return cmd_evaluate(ctx, eval);
    if (c_abl->parsed()) return cmd_ablate(ctx, abl);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  err << "error: no subcommand given\n";
  return kExitValidation;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cir::cli
