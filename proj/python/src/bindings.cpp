// Python bindings: hdvqa._core
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hdvqa/dataset.hpp"
#include "hdvqa/encoding.hpp"
#include "hdvqa/errors.hpp"
#include "hdvqa/mlp.hpp"
#include "hdvqa/pipeline.hpp"
#include "hdvqa/query.hpp"
#include "hdvqa/training.hpp"

namespace py = pybind11;
using namespace hdvqa;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const Array& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D array");
  return {a.data(), static_cast<std::size_t>(a.shape(0))};
}

Array to_array(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array to_array(const Matrix& m) {
  if (m.cols() == 1) return to_array(std::span<const double>(m.data(), m.size()));
  Array out({m.rows(), m.cols()});
  auto r = out.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
  }
  return out;
}

Concept concept_arg(const std::string& name) {
  const auto c = parse_concept(name);
  if (!c) throw ParseError("unknown concept '" + name + "'");
  return *c;
}

py::array_t<float> image_array(const Image& img) {
  py::array_t<float> out({28, 28, 3});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

Image image_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (static_cast<std::size_t>(a.size()) != kImageSize) {
    throw DimensionError("image must hold 28*28*3 values");
  }
  Image img;
  std::copy(a.data(), a.data() + kImageSize, img.pixels.begin());
  return img;
}

Scene make_scene(const std::vector<std::tuple<std::string, std::string, std::string>>& items) {
  if (items.size() != 2) throw ValidationError("a scene has exactly two placements");
  Scene s;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& [p, shape, color] = items[k];
    s.placements[k] = Placement{concept_arg(p), {concept_arg(shape), concept_arg(color)}};
  }
  s.validate();
  return s;
}

py::dict labels_dict(const SceneLabels& l) {
  py::dict d;
  d["q"] = std::vector<bool>(l.q.begin(), l.q.end());
  d["g"] = std::vector<bool>(l.g.begin(), l.g.end());
  return d;
}

SceneLabels labels_from(const std::vector<bool>& q) {
  if (q.size() != 5) throw ValidationError("expected five training labels");
  SceneLabels l;
  std::copy(q.begin(), q.end(), l.q.begin());
  return l;
}

py::object json_to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<Question> question_list(const py::object& qs) {
  if (py::isinstance<py::str>(qs)) return parse_question_list(qs.cast<std::string>());
  std::vector<Question> out;
  for (const auto& q : qs) {
    out.push_back(py::isinstance<py::str>(q) ? Question::parse(q.cast<std::string>())
                                             : q.cast<Question>());
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hyperdimensional visual question answering core";

  static py::exception<Error> base(m, "HdvqaError", PyExc_RuntimeError);
  static py::exception<DimensionError> dim_err(m, "DimensionError", base.ptr());
  static py::exception<ZeroNormError> zero_err(m, "ZeroNormError", base.ptr());
  static py::exception<ValidationError> val_err(m, "ValidationError", base.ptr());
  static py::exception<NumericalError> num_err(m, "NumericalError", base.ptr());
  static py::exception<ParseError> parse_err(m, "ParseError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DimensionError& e) {
      PyErr_SetString(dim_err.ptr(), e.what());
    } catch (const ZeroNormError& e) {
      PyErr_SetString(zero_err.ptr(), e.what());
    } catch (const ValidationError& e) {
      PyErr_SetString(val_err.ptr(), e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(num_err.ptr(), e.what());
    } catch (const ParseError& e) {
      PyErr_SetString(parse_err.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.attr("DEFAULT_CODEBOOK_SEED") = kDefaultCodebookSeed;
  m.attr("DEFAULT_DIM") = kDefaultDim;
  m.attr("__version__") = std::string(kToolVersion);

  // ---- algebra and codebook ----
  m.def("concepts", [] {
    std::vector<std::string> names;
    for (Concept c : kAllConcepts) names.emplace_back(concept_name(c));
    return names;
  }, "Concept names in codebook order.");
  m.def("bind", [](const Array& a, const Array& b) {
    return to_array(bind(HDVector(std::vector<double>(as_span(a).begin(), as_span(a).end())),
                         HDVector(std::vector<double>(as_span(b).begin(), as_span(b).end())))
                        .span());
  });
  m.def("bundle", [](const Array& a, const Array& b) {
    return to_array(bundle(HDVector(std::vector<double>(as_span(a).begin(), as_span(a).end())),
                           HDVector(std::vector<double>(as_span(b).begin(), as_span(b).end())))
                        .span());
  });
  m.def("cosine", [](const Array& a, const Array& b) { return cosine(as_span(a), as_span(b)); });

  py::class_<Codebook>(m, "Codebook")
      .def_static("make", &Codebook::make, py::arg("seed") = kDefaultCodebookSeed,
                  py::arg("dim") = kDefaultDim, py::arg("check_orthogonality") = true)
      .def_property_readonly("dim", &Codebook::dim)
      .def_property_readonly("seed", &Codebook::seed)
      .def("__getitem__", [](const Codebook& cb, const std::string& name) {
        return to_array(cb[concept_arg(name)].span());
      })
      .def("max_cross_cosine", &Codebook::max_cross_cosine)
      .def("to_json", [](const Codebook& cb) { return cb.to_json().dump(); });

  // ---- scenes ----
  py::class_<Scene>(m, "Scene")
      .def(py::init(&make_scene), py::arg("placements"),
           "[(position, shape, color), (position, shape, color)]")
      .def_property_readonly("placements", [](const Scene& s) {
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& p : s.placements) {
          out.emplace_back(concept_name(p.position), concept_name(p.figure.shape),
                           concept_name(p.figure.color));
        }
        return out;
      })
      .def_property_readonly("image_id", &Scene::image_id)
      .def("canonical", &Scene::canonical)
      .def("__eq__", [](const Scene& a, const Scene& b) { return a == b; })
      .def("__repr__", &Scene::to_string);

  m.def("enumerate_scenes", &enumerate_scenes, py::arg("dedupe") = true);
  m.def("render", [](const Scene& s) { return image_array(render(s)); },
        "28x28x3 float32 image in [0, 1].");
  m.def("to_ppm", [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    return py::bytes(to_ppm(image_from_array(a)));
  });
  m.def("label_scene", [](const Scene& s) { return labels_dict(label_scene(s)); });
  m.def("encode_scene", [](const Scene& s, const Codebook& cb) {
    return to_array(encode_scene(s, cb).span());
  });
  m.def("decode_attribute",
        [](const Array& mv, const std::string& position, const std::string& key,
           const Codebook& cb) {
          const DecodeResult d = decode_attribute(as_span(mv), concept_arg(position),
                                                  concept_arg(key), cb);
          return py::make_tuple(std::string(concept_name(d.value)), d.margin,
                                std::vector<double>(d.cosines.begin(), d.cosines.end()));
        },
        py::arg("m"), py::arg("position"), py::arg("key"), py::arg("codebook"),
        "(value, margin, cosines) for a position and the key 'shape' or 'color'.");

  // ---- questions ----
  py::class_<Question>(m, "Question")
      .def_static("parse", [](const std::string& s) { return Question::parse(s); })
      .def_property_readonly("threshold", &Question::threshold)
      .def("truth", &Question::truth)
      .def("__eq__", [](const Question& a, const Question& b) { return a == b; })
      .def("__str__", &Question::to_string)
      .def("__repr__", [](const Question& q) { return "Question('" + q.to_string() + "')"; });
  m.def("training_questions", [] {
    return std::vector<Question>(training_questions().begin(), training_questions().end());
  });
  m.def("generalization_questions", [] {
    return std::vector<Question>(generalization_questions().begin(),
                                 generalization_questions().end());
  });
  m.def("parse_question_list", [](const std::string& s) { return parse_question_list(s); });
  m.def("score",
        [](const py::object& q, const Array& mv, const Codebook& cb) {
          const Question question =
              py::isinstance<py::str>(q) ? Question::parse(q.cast<std::string>())
                                         : q.cast<Question>();
          const QueryScore s = score(question, as_span(mv), cb);
          return py::make_tuple(s.value, s.threshold, s.answer);
        },
        py::arg("question"), py::arg("m"), py::arg("codebook"),
        "(value, threshold, answer) for a Question or compact question string.");
  m.def("loss_terms",
        [](const Array& mv, const std::vector<bool>& labels, const Codebook& cb) {
          const LossTerms lt = loss_terms(QueryEngine(cb), as_span(mv), labels_from(labels));
          return py::make_tuple(std::vector<double>(lt.e.begin(), lt.e.end()), lt.total,
                                to_array(lt.grad));
        },
        py::arg("m"), py::arg("labels"), py::arg("codebook"),
        "(per-question errors, total, gradient) of the training loss at m.");

  // ---- network ----
  py::class_<MlpModel>(m, "MlpModel")
      .def_static("init",
                  [](std::uint64_t seed, std::size_t hidden1, std::size_t hidden2,
                     std::size_t output) {
                    return MlpModel::init(seed, MlpShape{kImageSize, hidden1, hidden2, output});
                  },
                  py::arg("seed") = kDefaultInitSeed, py::arg("hidden1") = 200,
                  py::arg("hidden2") = 200, py::arg("output") = kDefaultDim)
      .def_property_readonly("init_seed", &MlpModel::init_seed)
      .def_property_readonly("shape",
                             [](const MlpModel& mdl) {
                               const auto& s = mdl.shape();
                               return py::make_tuple(s.input, s.hidden1, s.hidden2, s.output);
                             })
      .def("forward",
           [](const MlpModel& mdl, const Array& x) {
             if (x.ndim() == 1) return to_array(mdl.forward(as_span(x)).output);
             if (x.ndim() != 2) throw DimensionError("expected a 1-D or 2-D array");
             // rows are samples on the Python side
             Matrix in(x.shape(1), x.shape(0));
             auto r = x.unchecked<2>();
             for (py::ssize_t i = 0; i < x.shape(0); ++i) {
               for (py::ssize_t j = 0; j < x.shape(1); ++j) in(j, i) = r(i, j);
             }
             const Matrix out = mdl.forward(in).output.transpose();
             return to_array(out);
           },
           "Network output for one flattened image or a (batch, 2352) array.")
      .def("parameters", [](const MlpModel& mdl) {
        const auto& p = mdl.params();
        return py::make_tuple(p.w1, p.b1, p.w2, p.b2, p.w3, p.b3);
      });
  m.def("save_checkpoint",
        [](const std::filesystem::path& path, const MlpModel& mdl, std::uint64_t seed) {
          save_checkpoint(path, Checkpoint{mdl, seed});
        },
        py::arg("path"), py::arg("model"), py::arg("codebook_seed") = kDefaultCodebookSeed);
  m.def("load_checkpoint", [](const std::filesystem::path& path) {
    Checkpoint c = load_checkpoint(path);
    return py::make_tuple(c.model, c.codebook_seed);
  });

  // ---- datasets, training, evaluation ----
  py::class_<SplitSpec>(m, "SplitSpec")
      .def(py::init<>())
      .def_readwrite("split_seed", &SplitSpec::split_seed)
      .def_readwrite("test_fraction", &SplitSpec::test_fraction)
      .def_readwrite("dedupe", &SplitSpec::dedupe);

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", [](const Dataset& d) { return d.records.size(); })
      .def_readonly("codebook_seed", &Dataset::codebook_seed)
      .def_readonly("dim", &Dataset::dim)
      .def("indices", [](const Dataset& d, const std::string& split) {
        if (split == "train") return d.indices(SplitTag::Train);
        if (split == "test") return d.indices(SplitTag::Test);
        throw ParseError("split must be 'train' or 'test'");
      })
      .def("scene", [](const Dataset& d, std::size_t i) { return d.records.at(i).scene; })
      .def("image", [](const Dataset& d, std::size_t i) {
        return image_array(d.records.at(i).image);
      })
      .def("encoding", [](const Dataset& d, std::size_t i) {
        return to_array(d.records.at(i).m.span());
      })
      .def("labels", [](const Dataset& d, std::size_t i) {
        return labels_dict(d.records.at(i).labels);
      });
  m.def("build_dataset", &build_dataset, py::arg("codebook"), py::arg("split") = SplitSpec{});
  m.def("write_dataset", &write_dataset);
  m.def("read_dataset", &read_dataset);

  py::enum_<OptimizerKind>(m, "Optimizer")
      .value("PLAIN_SGD", OptimizerKind::PlainSgd)
      .value("MOMENTUM_SGD", OptimizerKind::MomentumSgd)
      .value("ADAM", OptimizerKind::Adam);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("optimizer", &TrainConfig::optimizer)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("epsilon", &TrainConfig::epsilon)
      .def_readwrite("momentum", &TrainConfig::momentum)
      .def_readwrite("shuffle_seed", &TrainConfig::shuffle_seed)
      .def_readwrite("early_stop", &TrainConfig::early_stop)
      .def("to_dict", [](const TrainConfig& c) { return json_to_py(c.to_json()); });

  m.def("train",
        [](const MlpModel& model, const Dataset& data, const TrainConfig& config,
           const std::function<void(int, double)>& on_epoch) {
          const QueryEngine engine(Codebook::make(data.codebook_seed, data.dim));
          const auto idx = data.indices(SplitTag::Train);
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train(model, data, idx, engine, config, [&](const EpochStats& s) {
              if (!on_epoch) return;
              py::gil_scoped_acquire acquire;
              on_epoch(s.epoch, s.mean_loss);
            });
          }
          std::vector<double> losses;
          for (const auto& s : r.history) losses.push_back(s.mean_loss);
          return py::make_tuple(r.model, losses);
        },
        py::arg("model"), py::arg("dataset"), py::arg("config") = TrainConfig{},
        py::arg("on_epoch") = std::function<void(int, double)>{},
        "Train on the dataset's train split. Returns (model, per-epoch mean losses).");
  m.def("evaluate",
        [](const MlpModel& model, const Dataset& data, const std::string& split,
           const py::object& questions) {
          const QueryEngine engine(Codebook::make(data.codebook_seed, data.dim));
          const auto idx = data.indices(split == "train" ? SplitTag::Train : SplitTag::Test);
          const auto qs = question_list(questions);
          return json_to_py(evaluate(model, data, idx, qs, engine).to_json());
        },
        py::arg("model"), py::arg("dataset"), py::arg("split") = "test",
        py::arg("questions") = "trained,generalization",
        "Evaluation report as a dict.");
  m.def("clean_margin_report", [](bool dedupe, const Codebook& cb) {
    const auto scenes = enumerate_scenes(dedupe);
    return json_to_py(clean_margin_report(scenes, cb).to_json());
  }, py::arg("dedupe") = false, py::arg("codebook") = Codebook::make());
  m.def("run_pipeline",
        [](const std::string& manifest_json, const std::filesystem::path& workdir) {
          const RunManifest manifest =
              RunManifest::from_json(nlohmann::ordered_json::parse(manifest_json));
          PipelineResult r;
          {
            py::gil_scoped_release release;
            r = run_pipeline(manifest, workdir);
          }
          return json_to_py(r.manifest.to_json());
        },
        py::arg("manifest_json"), py::arg("workdir"),
        "Generate, train and evaluate from a manifest JSON string; returns the run manifest.");
  m.def("default_manifest", [] { return RunManifest{}.to_json().dump(2); });
}
