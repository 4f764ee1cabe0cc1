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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cir/cli/app.hpp"
#include "cir/core/errors.hpp"
#include "cir/corpus/cirf.hpp"
#include "cir/corpus/synth.hpp"
#include "cir/curation/curate.hpp"
#include "cir/curation/template_generator.hpp"
#include "cir/encoder/checkpoint.hpp"
#include "cir/encoder/tokenizer.hpp"
#include "cir/metrics/metrics.hpp"
#include "cir/retrieval/index.hpp"
#include "cir/retrieval/retrieval.hpp"
#include "cir/similarity/similarity.hpp"
#include "cir/training/grad_check.hpp"
#include "cir/training/objectives.hpp"
#include "cir/training/trainer.hpp"
#include "cir/version.hpp"
#include "json.hpp"

namespace py = pybind11;
using namespace cir;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const FeatureMatrix& f) {
  py::array_t<float> out({f.rows(), f.dim()});
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

FeatureMatrix from_numpy(const FloatArray& a) {
  if (a.ndim() != 2) throw ValidationError("expected a 2-d array");
  const auto* p = a.data();
  return FeatureMatrix(a.shape(0), a.shape(1), std::vector<float>(p, p + a.size()));
}

py::array_t<double> mat_to_numpy(const Mat& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

// Python dicts travel through JSON text so the C++ side keeps a single
// validation path for configs.
nlohmann::json to_json(const py::object& obj) {
  if (obj.is_none()) return nlohmann::json::object();
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

py::object from_json(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

RankedList ranked_ids(const std::vector<std::string>& ids) {
  RankedList out;
  out.reserve(ids.size());
  double score = static_cast<double>(ids.size());
  for (const auto& id : ids) out.push_back({id, score--});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Composed image retrieval engine";
  m.attr("__version__") = std::string(kVersion);

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<ImageRecord>(m, "ImageRecord")
      .def(py::init([](std::string id, const FloatArray& tokens,
                       std::map<std::string, std::string> meta) {
             ImageRecord r{std::move(id), from_numpy(tokens), std::move(meta)};
             r.validate();
             return r;
           }),
           py::arg("id"), py::arg("tokens"), py::arg("meta") = std::map<std::string, std::string>{})
      .def_readonly("id", &ImageRecord::id)
      .def_property_readonly("tokens", [](const ImageRecord& r) { return to_numpy(r.tokens); })
      .def_readonly("meta", &ImageRecord::meta)
      .def("__repr__", [](const ImageRecord& r) { return "<ImageRecord " + r.id + ">"; });

  py::class_<TripletRecord>(m, "TripletRecord")
      .def(py::init<std::string, std::string, std::string>(), py::arg("ref_id"),
           py::arg("modification"), py::arg("target_text"))
      .def_readonly("ref_id", &TripletRecord::ref_id)
      .def_readonly("modification", &TripletRecord::modification)
      .def_readonly("target_text", &TripletRecord::target_text);

  py::class_<CaptionRecord>(m, "CaptionRecord")
      .def(py::init<std::string, std::string>(), py::arg("image_id"), py::arg("caption"))
      .def_readonly("image_id", &CaptionRecord::image_id)
      .def_readonly("caption", &CaptionRecord::caption);

  py::class_<EvalCase>(m, "EvalCase")
      .def(py::init([](std::string query_id, std::string ref_id, std::string modification,
                       std::vector<std::string> gold_ids,
                       std::optional<std::vector<std::string>> subset_ids,
                       std::optional<std::string> category) {
             return EvalCase{std::move(query_id), std::move(ref_id), std::move(modification),
                             std::move(gold_ids), std::move(subset_ids), std::move(category)};
           }),
           py::arg("query_id"), py::arg("ref_id"), py::arg("modification"),
           py::arg("gold_ids"), py::arg("subset_ids") = py::none(),
           py::arg("category") = py::none())
      .def_readonly("query_id", &EvalCase::query_id)
      .def_readonly("ref_id", &EvalCase::ref_id)
      .def_readonly("modification", &EvalCase::modification)
      .def_readonly("gold_ids", &EvalCase::gold_ids)
      .def_readonly("subset_ids", &EvalCase::subset_ids)
      .def_readonly("category", &EvalCase::category);

  m.def(
      "synth_corpus",
      [](std::size_t images, std::size_t cases, std::uint64_t seed, double noise,
         const std::string& attrs) {
        SynthConfig c;
        c.images = images;
        c.eval_cases = cases;
        c.noise = noise;
        if (!attrs.empty()) c.families = parse_attribute_spec(attrs);
        auto corpus = synth_corpus(c, seed);
        return py::make_tuple(std::move(corpus.images), std::move(corpus.eval_cases));
      },
      py::arg("images") = 500, py::arg("cases") = 100, py::arg("seed") = 0,
      py::arg("noise") = 0.05, py::arg("attrs") = "",
      "Synthetic attribute corpus; returns (images, eval_cases).");

  m.def("save_features", &save_features, py::arg("images"), py::arg("path"));
  m.def("load_features", &load_features, py::arg("path"));

  m.def(
      "curate_template",
      [](const std::vector<ImageRecord>& images, std::uint64_t seed, const std::string& attrs) {
        const auto families =
            attrs.empty() ? SynthConfig::default_families() : parse_attribute_spec(attrs);
        auto r = curate_dataset(images, TemplateGenerator(families, seed));
        return py::make_tuple(std::move(r.triplets), std::move(r.captions));
      },
      py::arg("images"), py::arg("seed") = 0, py::arg("attrs") = "",
      "Template-generator curation; returns (triplets, captions).");

  m.def("tokenize", [](const std::string& text, std::uint32_t vocab) {
    return tokenize(text, vocab).ids;
  }, py::arg("text"), py::arg("vocab") = 4096);

  py::class_<EncoderParams>(m, "Encoder")
      .def_static(
          "init",
          [](const py::object& config, std::uint64_t seed) {
            return init_params(config_from_json(to_json(config)), seed);
          },
          py::arg("config") = py::none(), py::arg("seed") = 0)
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const EncoderParams& p, const std::string& path) {
        save_checkpoint(p, path);
      }, py::arg("path"))
      .def_property_readonly("config", [](const EncoderParams& p) {
        return from_json(config_to_json(p.config));
      })
      .def("to_bytes", [](const EncoderParams& p) { return py::bytes(encode_checkpoint(p)); })
      .def_static("from_bytes", [](const py::bytes& b) {
        return decode_checkpoint(std::string(b));
      })
      .def("digest", [](const EncoderParams& p) { return params_digest(p); })
      .def("encode_image", [](const EncoderParams& p, const FloatArray& image) {
        return to_numpy(encode_image(from_numpy(image), p));
      }, py::arg("image"))
      .def("encode_text", [](const EncoderParams& p, const std::string& text) {
        return to_numpy(encode_text(tokenize(text, p.config.vocab), p));
      }, py::arg("text"))
      .def("encode_composed",
           [](const EncoderParams& p, const FloatArray& image, const std::string& text) {
             return to_numpy(encode_composed(from_numpy(image), tokenize(text, p.config.vocab), p));
           },
           py::arg("image"), py::arg("text"));

  m.def("maxsim", [](const FloatArray& a, const FloatArray& b) {
    return maxsim(from_numpy(a), from_numpy(b));
  }, py::arg("a"), py::arg("b"));
  m.def(
      "similarity_matrix",
      [](const std::vector<FloatArray>& q, const std::vector<FloatArray>& t,
         std::size_t threads) {
        std::vector<FeatureMatrix> qs, ts;
        for (const auto& a : q) qs.push_back(from_numpy(a));
        for (const auto& a : t) ts.push_back(from_numpy(a));
        return mat_to_numpy(similarity_matrix(qs, ts, threads));
      },
      py::arg("queries"), py::arg("targets"), py::arg("threads") = 1);
  m.def("fuse", &fuse, py::arg("s_hat"), py::arg("s_tilde"));
  m.def(
      "info_nce",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& s, double tau) {
        if (s.ndim() != 2) throw ValidationError("info_nce: expected a 2-d array");
        Mat m(s.shape(0), s.shape(1));
        std::copy(s.data(), s.data() + s.size(), m.data());
        return info_nce(m, tau);
      },
      py::arg("sim"), py::arg("tau"));

  m.def(
      "train",
      [](const std::vector<ImageRecord>& images, const std::vector<TripletRecord>& triplets,
         const std::vector<CaptionRecord>& captions, const py::object& encoder_config,
         const py::object& train_config) {
        const auto cfg = config_from_json(to_json(encoder_config));
        const auto tc = train_config_from_json(to_json(train_config));
        TrainResult result;
        {
          py::gil_scoped_release release;
          const auto set = build_training_set(images, triplets, captions, cfg);
          result = train(set, cfg, tc);
        }
        py::list trace;
        for (const auto& e : result.trace.epochs) {
          py::dict d;
          d["epoch"] = e.epoch;
          d["lr"] = e.lr;
          d["loss_t"] = e.loss_t;
          d["loss_c"] = e.loss_c;
          d["loss_total"] = e.loss_total;
          trace.append(d);
        }
        py::dict info;
        info["initial_loss"] = result.trace.initial.total;
        info["epochs"] = trace;
        return py::make_tuple(std::move(result.params), info);
      },
      py::arg("images"), py::arg("triplets"), py::arg("captions"),
      py::arg("encoder_config") = py::none(), py::arg("train_config") = py::none(),
      "Trains an encoder; returns (encoder, {initial_loss, epochs}).");

  m.def(
      "grad_check",
      [](const EncoderParams& p, const std::vector<ImageRecord>& images,
         const std::vector<TripletRecord>& triplets, const std::vector<CaptionRecord>& captions,
         std::size_t samples, double eps, std::uint64_t seed) {
        const auto set = build_training_set(images, triplets, captions, p.config);
        GradCheckOptions o;
        o.samples = samples;
        o.eps = eps;
        o.seed = seed;
        return grad_check(p, set.triplets, set.captions, o).max_rel_error;
      },
      py::arg("encoder"), py::arg("images"), py::arg("triplets"), py::arg("captions"),
      py::arg("samples") = 50, py::arg("eps") = 1e-4, py::arg("seed") = 0,
      "Largest relative error between analytic and numeric gradients.");
  m.def("random_encoder", [](const py::object& config, std::uint64_t seed, double scale) {
    return random_params(config_from_json(to_json(config)), seed, scale);
  }, py::arg("config") = py::none(), py::arg("seed") = 0, py::arg("scale") = 0.1);

  py::class_<Index>(m, "Index")
      .def_static(
          "build",
          [](const std::vector<ImageRecord>& images, const EncoderParams& p,
             std::size_t threads) { return build_index(images, p, threads); },
          py::arg("images"), py::arg("encoder"), py::arg("threads") = 1)
      .def_static("load", &load_index, py::arg("dir"))
      .def("save", [](const Index& i, const std::string& dir) { save_index(i, dir); },
           py::arg("dir"))
      .def_readonly("ids", &Index::ids)
      .def_readonly("params_digest", &Index::params_digest)
      .def("__len__", &Index::size);

  py::class_<Retriever>(m, "Retriever")
      .def(py::init<const Index&, const EncoderParams&, const EncoderParams*, std::size_t>(),
           py::arg("index"), py::arg("encoder"), py::arg("baseline") = nullptr,
           py::arg("threads") = 1, py::keep_alive<1, 2>(), py::keep_alive<1, 3>(),
           py::keep_alive<1, 4>())
      .def(
          "score",
          [](const Retriever& r, const ImageRecord& reference, const std::string& modification,
             const std::string& mode, std::optional<std::string> target_text) {
            const QueryBundle b{"query", reference, modification, std::move(target_text)};
            return r.score(b, parse_mode(mode));
          },
          py::arg("reference"), py::arg("modification"), py::arg("mode") = "fused",
          py::arg("target_text") = py::none())
      .def(
          "retrieve",
          [](const Retriever& r, const ImageRecord& reference, const std::string& modification,
             const std::string& mode, std::size_t topk, std::optional<std::string> target_text) {
            const QueryBundle b{"query", reference, modification, std::move(target_text)};
            std::vector<std::pair<std::string, double>> out;
            for (auto& e : r.retrieve(b, parse_mode(mode), topk)) out.emplace_back(e.id, e.score);
            return out;
          },
          py::arg("reference"), py::arg("modification"), py::arg("mode") = "fused",
          py::arg("topk") = 50, py::arg("target_text") = py::none(),
          "Top-k (id, score) pairs, best first.")
      .def(
          "evaluate",
          [](const Retriever& r, const std::vector<EvalCase>& cases,
             const std::vector<ImageRecord>& references, const std::string& mode,
             const std::string& metrics, std::uint64_t seed, const std::string& attrs) {
            const auto families =
                attrs.empty() ? SynthConfig::default_families() : parse_attribute_spec(attrs);
            const TemplateGenerator gen(families, seed);
            SuiteOptions o;
            if (!metrics.empty()) o.spec = MetricSpec::parse(metrics);
            o.generator = &gen;
            const ImageLookup lookup(references);
            return from_json(evaluate_suite(cases, lookup, r, parse_mode(mode), o).to_json());
          },
          py::arg("cases"), py::arg("references"), py::arg("mode") = "fused",
          py::arg("metrics") = "", py::arg("seed") = 0, py::arg("attrs") = "",
          "Evaluates cases with template-generated target text; returns the report dict.");

  m.def("modes", [] {
    std::vector<std::string> out;
    for (auto mode : kAllModes) out.emplace_back(mode_name(mode));
    return out;
  });

  m.def("rank_scores", [](const std::vector<std::string>& ids,
                          const std::vector<double>& scores, std::size_t topk) {
    std::vector<std::pair<std::string, double>> out;
    for (auto& e : rank_scores(ids, scores, topk)) out.emplace_back(e.id, e.score);
    return out;
  }, py::arg("ids"), py::arg("scores"), py::arg("topk"));
  m.def("recall_at_k", [](const std::vector<std::string>& ranking,
                          const std::vector<std::string>& gold, std::size_t k) {
    return recall_at_k(ranked_ids(ranking), gold, k);
  }, py::arg("ranking"), py::arg("gold"), py::arg("k"));
  m.def("map_at_k", [](const std::vector<std::string>& ranking,
                       const std::vector<std::string>& gold, std::size_t k) {
    return map_at_k(ranked_ids(ranking), gold, k);
  }, py::arg("ranking"), py::arg("gold"), py::arg("k"));
  m.def("subset_recall_at_k",
        [](const std::vector<std::string>& ranking, const std::vector<std::string>& gold,
           const std::vector<std::string>& subset, std::size_t k) {
          return subset_recall_at_k(ranked_ids(ranking), gold, subset, k);
        },
        py::arg("ranking"), py::arg("gold"), py::arg("subset"), py::arg("k"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "cir");
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI command; returns (exit_code, stdout, stderr).");
}
