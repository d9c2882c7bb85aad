#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "kge/checkpoint.hpp"
#include "kge/evaluation.hpp"
#include "kge/graph.hpp"
#include "kge/model.hpp"
#include "kge/random.hpp"
#include "kge/report.hpp"
#include "kge/sampling.hpp"
#include "kge/training.hpp"

namespace py = pybind11;
using namespace kge;

namespace {

using TripleTuple = std::tuple<Index, Index, Index>;

std::vector<Triple> to_triples(const std::vector<TripleTuple>& in) {
  std::vector<Triple> out;
  out.reserve(in.size());
  for (auto& [h, r, t] : in) out.push_back({h, r, t});
  return out;
}

std::vector<TripleTuple> to_tuples(std::span<const Triple> in) {
  std::vector<TripleTuple> out;
  out.reserve(in.size());
  for (auto& t : in) out.emplace_back(t.head, t.relation, t.tail);
  return out;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::memcpy(a.mutable_data(), v.data(), v.size() * sizeof(double));
  return a;
}

py::object json_value(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

// Model, optimizer state, sampler and shuffle generator of one training run.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const KnowledgeGraph& train)
      : cfg_(std::move(cfg)),
        train_(train),
        model_(init_model(cfg_.model, train.n_ent(), train.n_rel(), cfg_.dim, cfg_.rel_dim, cfg_.seed)),
        adam_(AdamState::for_model(model_)),
        sampler_(cfg_.sampler, train_, mix_seed(cfg_.seed, 1)),
        rng_(mix_seed(cfg_.seed, 2)) {
    cfg_.validate();
  }

  double epoch() { return train_epoch(model_, train_, sampler_, cfg_, adam_, rng_); }
  const Model& model() const { return model_; }

 private:
  TrainConfig cfg_;
  KnowledgeGraph train_;
  Model model_;
  AdamState adam_;
  NegativeSampler sampler_;
  Rng rng_;
};

}  // namespace

PYBIND11_MODULE(_kge, m) {
  m.doc() = "Knowledge graph embedding engine";
  py::register_exception<Error>(m, "KgeError", PyExc_ValueError);

  py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
      .def_property_readonly("n_ent", &KnowledgeGraph::n_ent)
      .def_property_readonly("n_rel", &KnowledgeGraph::n_rel)
      .def("__len__", &KnowledgeGraph::size)
      .def("triples", [](const KnowledgeGraph& g) { return to_tuples(g.triples()); })
      .def("entities", [](const KnowledgeGraph& g) { return g.entities().labels(); })
      .def("relations", [](const KnowledgeGraph& g) { return g.relations().labels(); })
      .def("with_triples",
           [](const KnowledgeGraph& g, const std::vector<TripleTuple>& t) { return g.with_triples(to_triples(t)); })
      .def("to_text", &write_triples)
      .def("save", &write_triples_file, py::arg("path"));

  m.def("load_triples", &load_triples, py::arg("text"));
  m.def("load_triples_file", &load_triples_file, py::arg("path"));
  m.def(
      "split",
      [](const KnowledgeGraph& kg, double share_train, bool with_validation, std::uint64_t seed) {
        auto r = split_kg(kg, share_train, with_validation, seed);
        py::dict d;
        d["train"] = r.train;
        d["valid"] = r.valid ? py::cast(*r.valid) : py::none();
        d["test"] = r.test;
        d["warning"] = r.warning ? py::cast(*r.warning) : py::none();
        return d;
      },
      py::arg("kg"), py::arg("share_train"), py::arg("with_validation") = false, py::arg("seed") = 0);
  m.def("corruption_stats", [](const KnowledgeGraph& kg) {
    auto s = corruption_stats(kg);
    return py::make_tuple(s.tph, s.hpt);
  });
  m.def("redundancy", [](const KnowledgeGraph& kg) {
    auto r = redundancy_metrics(kg);
    return py::make_tuple(r.duplicate_fraction, r.reverse_duplicate_fraction);
  });

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& x) { return std::string(to_string(x.kind)); })
      .def_readonly("n_ent", &Model::n_ent)
      .def_readonly("n_rel", &Model::n_rel)
      .def_readonly("dim", &Model::dim)
      .def_readonly("rel_dim", &Model::rel_dim)
      .def("param_names",
           [](const Model& x) {
             std::vector<std::string> names;
             for (auto& t : x.params) names.push_back(t.name);
             return names;
           })
      .def(
          "get_param",
          [](const Model& x, const std::string& name) {
            const auto& t = x.table(name);
            py::array_t<double> a({t.rows, t.cols});
            std::memcpy(a.mutable_data(), t.data.data(), t.data.size() * sizeof(double));
            return a;
          },
          py::arg("name"))
      .def(
          "set_param",
          [](Model& x, const std::string& name, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
            auto& t = x.table(name);
            if (static_cast<std::size_t>(a.size()) != t.data.size()) throw Error("wrong size for table " + name);
            std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(double));
          },
          py::arg("name"), py::arg("values"))
      .def("normalize", &normalize_parameters)
      .def(
          "score",
          [](const Model& x, const std::vector<TripleTuple>& t) { return to_array(score_batch(x, to_triples(t))); },
          py::arg("triples"))
      .def(
          "score_all",
          [](const Model& x, const std::vector<TripleTuple>& t, const std::string& side) {
            const Side s = side == "head" ? Side::Head : side == "tail" ? Side::Tail : throw Error("side must be head or tail");
            auto batch = to_triples(t);
            auto scores = lp_score_all(x, lp_prep_cands(x, batch, s), s);
            py::array_t<double> a({batch.size(), x.n_ent});
            std::memcpy(a.mutable_data(), scores.data(), scores.size() * sizeof(double));
            return a;
          },
          py::arg("triples"), py::arg("side") = "tail")
      .def("__eq__", [](const Model& a, const Model& b) { return a == b; });

  m.def(
      "init_model",
      [](const std::string& kind, std::size_t n_ent, std::size_t n_rel, std::size_t dim, std::size_t rel_dim,
         std::uint64_t seed) {
        return init_model(parse_model_kind(kind), n_ent, n_rel, dim, rel_dim ? rel_dim : dim, seed);
      },
      py::arg("kind"), py::arg("n_ent"), py::arg("n_rel"), py::arg("dim"), py::arg("rel_dim") = 0,
      py::arg("seed") = 0);

  py::class_<NegativeSampler>(m, "NegativeSampler")
      .def(py::init([](const std::string& kind, const KnowledgeGraph& kg, std::uint64_t seed) {
             return NegativeSampler(parse_sampler_kind(kind), kg, seed);
           }),
           py::arg("kind"), py::arg("kg"), py::arg("seed") = 0)
      .def(
          "corrupt",
          [](NegativeSampler& s, const std::vector<TripleTuple>& t) {
            return to_tuples(s.corrupt_batch(to_triples(t)));
          },
          py::arg("triples"))
      .def("corrupt_kg", [](NegativeSampler& s, const KnowledgeGraph& kg) { return to_tuples(s.corrupt_kg(kg)); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def_static(
          "load",
          [](const std::string& path, const std::map<std::string, std::string>& overrides) {
            return load_config(path, ConfigEntries(overrides.begin(), overrides.end()));
          },
          py::arg("path"), py::arg("overrides") = std::map<std::string, std::string>{})
      .def_static(
          "from_text", [](const std::string& text) { return resolve_config(parse_config_text(text)); },
          py::arg("text"))
      .def_static(
          "preset", [](const std::string& kind) { return paper_table1_preset(parse_model_kind(kind)); },
          py::arg("model"))
      .def("as_dict", &config_to_map)
      .def_readwrite("dim", &TrainConfig::dim)
      .def_readwrite("rel_dim", &TrainConfig::rel_dim)
      .def_readwrite("n_batches", &TrainConfig::n_batches)
      .def_readwrite("n_epochs", &TrainConfig::n_epochs)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("l2", &TrainConfig::l2)
      .def_readwrite("margin", &TrainConfig::margin)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<Trainer>(m, "Trainer")
      .def(py::init<TrainConfig, const KnowledgeGraph&>(), py::arg("config"), py::arg("train"))
      .def("epoch", &Trainer::epoch, "Run one epoch and return its summed loss.")
      .def_property_readonly("model", &Trainer::model, py::return_value_policy::copy);

  m.def(
      "link_prediction",
      [](const Model& model, const KnowledgeGraph& kg, const std::vector<KnowledgeGraph>& filter_graphs,
         std::vector<int> ks, std::size_t batch_size, std::size_t threads, const std::string& mode) {
        std::vector<const KnowledgeGraph*> ptrs{&kg};
        for (auto& g : filter_graphs) ptrs.push_back(&g);
        FilterSet filter(ptrs);
        LinkPredictionOptions opts;
        opts.batch_size = batch_size;
        opts.threads = threads;
        opts.mode = mode == "looped" ? EvalMode::Looped : EvalMode::Batched;
        py::gil_scoped_release release;
        auto lp = link_prediction(model, kg, filter, ks, opts);
        py::gil_scoped_acquire acquire;
        return json_value(metrics_to_json(lp));
      },
      py::arg("model"), py::arg("kg"), py::arg("filter") = std::vector<KnowledgeGraph>{},
      py::arg("ks") = std::vector<int>{1, 3, 10}, py::arg("batch_size") = 64, py::arg("threads") = 1,
      py::arg("mode") = "batched");

  m.def(
      "best_threshold",
      [](const std::vector<double>& pos, const std::vector<double>& neg) {
        auto f = best_threshold(pos, neg);
        return py::make_tuple(f.threshold, f.accuracy());
      },
      py::arg("pos"), py::arg("neg"));
  m.def(
      "triplet_classification",
      [](const Model& model, const KnowledgeGraph& valid, const std::vector<TripleTuple>& valid_neg,
         const KnowledgeGraph& test, const std::vector<TripleTuple>& test_neg) {
        auto table = fit_thresholds(model, valid, to_triples(valid_neg));
        return py::make_tuple(table.validation_accuracy,
                              classify(model, test.triples(), to_triples(test_neg), table));
      },
      py::arg("model"), py::arg("valid"), py::arg("valid_neg"), py::arg("test"), py::arg("test_neg"));

  m.def(
      "save_checkpoint",
      [](const Model& model, const std::string& path, const KnowledgeGraph* labels) {
        Checkpoint c{model, std::nullopt, std::nullopt};
        if (labels) {
          c.entities = labels->entities();
          c.relations = labels->relations();
        }
        save_checkpoint(c, path);
      },
      py::arg("model"), py::arg("path"), py::arg("labels") = nullptr);
  m.def(
      "load_checkpoint", [](const std::string& path) { return load_checkpoint(path).model; }, py::arg("path"));
}
