#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>

#include "varlens/apps.hpp"
#include "varlens/eval.hpp"
#include "varlens/index.hpp"
#include "varlens/train.hpp"

namespace py = pybind11;
using namespace varlens;

namespace {

using Model = EmbeddingModel<float>;

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

DatasetEmbedding from_python(const std::vector<double>& h, double g) { return DatasetEmbedding{h, g}; }

Table as_table(const std::vector<ColumnDataset>& columns) {
  return Table{columns.empty() ? std::string() : columns.front().table_id, columns};
}

// Scorer over one optional model per space, or a baseline.
std::unique_ptr<Scorer> make_scorer(const std::string& method, const std::vector<const Model*>& models,
                                    const WordVectorTable* words) {
  if (method == "embed") {
    if (models.empty()) fail(ErrorCode::kInvalidArgument, "method 'embed' needs at least one model");
    auto s = std::make_unique<EmbeddingScorer>(words);
    for (const Model* m : models) s->add_model(*m);
    return s;
  }
  return std::make_unique<BaselineScorer>(parse_baseline_method(method), words);
}

}  // namespace

PYBIND11_MODULE(_varlens, m) {
  m.doc() = "Deep-sets embeddings of table columns for variable matching";

  static py::exception<Error> error(m, "VarlensError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      PyErr_SetObject(exc.ptr(), py::make_tuple(std::string(error_category(e.code())), e.what()).ptr());
    }
  });

  py::enum_<ValueSpace>(m, "ValueSpace")
      .value("Numeric", ValueSpace::Numeric)
      .value("Language", ValueSpace::Language)
      .value("GeneralString", ValueSpace::GeneralString);

  py::class_<WordVectorTable>(m, "WordVectors")
      .def(py::init<int>(), py::arg("dim") = kEmbeddingDim)
      .def_property_readonly("dim", &WordVectorTable::dim)
      .def("__len__", &WordVectorTable::size)
      .def("insert", &WordVectorTable::insert)
      .def("__contains__", &WordVectorTable::contains);
  m.def("load_word_vectors", &load_word_vectors, py::arg("path"), py::arg("expected_dim") = kEmbeddingDim);

  py::class_<ColumnDataset>(m, "Dataset")
      .def_readonly("id", &ColumnDataset::id)
      .def_readonly("table_id", &ColumnDataset::table_id)
      .def_readonly("variable_name", &ColumnDataset::variable_name)
      .def_readonly("space", &ColumnDataset::space)
      .def_readonly("numbers", &ColumnDataset::numbers)
      .def_readonly("strings", &ColumnDataset::strings)
      .def("__len__", &ColumnDataset::size)
      .def("__repr__", [](const ColumnDataset& d) {
        return "<Dataset " + d.id + " " + std::string(to_string(d.space)) + " n=" + std::to_string(d.size()) + ">";
      });
  m.def(
      "numeric_dataset",
      [](std::string id, std::vector<float> values, std::string name, std::string table) {
        return make_numeric(std::move(id), std::move(table), std::move(name), std::move(values));
      },
      py::arg("id"), py::arg("values"), py::arg("name") = "", py::arg("table") = "");
  m.def(
      "string_dataset",
      [](std::string id, std::vector<std::string> values, ValueSpace space, std::string name, std::string table) {
        return make_strings(std::move(id), std::move(table), std::move(name), space, std::move(values));
      },
      py::arg("id"), py::arg("values"), py::arg("space") = ValueSpace::GeneralString, py::arg("name") = "",
      py::arg("table") = "");
  m.def(
      "load_table",
      [](const std::filesystem::path& path, const std::string& table_id, const WordVectorTable* words,
         char delimiter) {
        CsvOptions opts;
        opts.delimiter = delimiter;
        return classify_table(Table{table_id, load_table(path, table_id, opts)}, words).columns;
      },
      py::arg("path"), py::arg("table_id"), py::arg("words") = nullptr, py::arg("delimiter") = ',',
      "Reads a delimited file and assigns each column its value space.");

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_static(
          "build",
          [](const std::vector<ColumnDataset>& datasets, const WordVectorTable* words) {
            return GroundTruth::build(datasets, words);
          },
          py::arg("datasets"), py::arg("words") = nullptr)
      .def("add_match", &GroundTruth::add_match)
      .def("match", &GroundTruth::match)
      .def("pairs", &GroundTruth::pairs)
      .def("__len__", &GroundTruth::num_pairs);
  m.def("jaro_winkler", &jaro_winkler);

  py::class_<Model>(m, "Model")
      .def(py::init([](ValueSpace space, int width, int embed_dim, int word_dim, std::uint64_t seed) {
             ModelConfig cfg;
             cfg.width = width;
             cfg.embed_dim = embed_dim;
             cfg.word_dim = word_dim;
             Model model(space, cfg);
             model.init(seed);
             return model;
           }),
           py::arg("space") = ValueSpace::Numeric, py::arg("width") = 300, py::arg("embed_dim") = kEmbeddingDim,
           py::arg("word_dim") = kEmbeddingDim, py::arg("seed") = 0)
      .def_property_readonly("space", &Model::space)
      .def_property_readonly("num_params", &Model::num_params)
      .def(
          "embed",
          [](const Model& model, const ColumnDataset& d, const WordVectorTable* words) {
            const auto e = model.embed(d, words);
            return py::make_tuple(to_array(e.h), e.g);
          },
          py::arg("dataset"), py::arg("words") = nullptr, "Returns (h, g).")
      .def("save", [](const Model& model, const std::filesystem::path& p) { save_checkpoint(model, p); })
      .def_static("load", &load_checkpoint);

  m.def(
      "train",
      [](const std::vector<ColumnDataset>& repo, const GroundTruth* gt, const WordVectorTable* words,
         const py::kwargs& kw) {
        TrainConfig cfg;
        for (const auto& [key, value] : kw) {
          const auto k = key.cast<std::string>();
          if (k == "cap") cfg.cap = value.cast<std::size_t>();
          else if (k == "batch") cfg.batch = value.cast<std::size_t>();
          else if (k == "max_steps") cfg.max_steps = value.cast<std::size_t>();
          else if (k == "patience") cfg.patience = value.cast<std::size_t>();
          else if (k == "window") cfg.window = value.cast<std::size_t>();
          else if (k == "alpha") cfg.alpha = value.cast<double>();
          else if (k == "lr") cfg.adam.lr = value.cast<double>();
          else if (k == "width") cfg.model.width = value.cast<int>();
          else if (k == "embed_dim") cfg.model.embed_dim = value.cast<int>();
          else if (k == "seed") cfg.seed = value.cast<std::uint64_t>();
          else fail(ErrorCode::kConfigError, "unknown training option '" + k + "'");
        }
        if (words) cfg.model.word_dim = words->dim();
        const GroundTruth built = gt ? GroundTruth{} : GroundTruth::build(repo, words);
        TrainResult res;
        {
          py::gil_scoped_release release;
          res = train_model(repo, gt ? *gt : built, cfg, words);
        }
        std::vector<double> losses;
        for (const auto& e : res.log) losses.push_back(e.loss);
        return py::make_tuple(std::move(res.model), losses);
      },
      py::arg("datasets"), py::arg("ground_truth") = nullptr, py::arg("words") = nullptr,
      "Trains one model on a single-space repository; returns (model, per-step losses).");

  m.def(
      "distance",
      [](const std::vector<double>& ha, double ga, const std::vector<double>& hb, double gb) {
        return pairwise_distance(from_python(ha, ga), from_python(hb, gb)).d;
      },
      "D = |ha - hb|^2 + ga + gb; the match probability is exp(-D).");

  py::class_<RepositoryIndex>(m, "Index")
      .def(py::init([](std::uint32_t m_links, std::uint32_t ef_construction, std::uint32_t ef_search,
                       std::uint64_t seed) {
             return RepositoryIndex(IndexConfig{m_links, ef_construction, ef_search, seed});
           }),
           py::arg("m") = 16, py::arg("ef_construction") = 100, py::arg("ef_search") = 64, py::arg("seed") = 0)
      .def("__len__", &RepositoryIndex::size)
      .def(
          "add",
          [](RepositoryIndex& idx, std::string id, const std::vector<double>& h, double g) {
            idx.add(augment(from_python(h, g), std::move(id), VectorKind::Repository));
          },
          py::arg("id"), py::arg("h"), py::arg("g"))
      .def(
          "knn",
          [](const RepositoryIndex& idx, const std::vector<double>& h, double g, std::size_t k, bool exact,
             std::optional<std::size_t> ef) {
            const auto q = augment(from_python(h, g), "query", VectorKind::Query);
            const auto found =
                exact ? idx.knn_exact(q, k) : idx.knn_approx(q, k, ef.value_or(idx.config().ef_search));
            std::vector<std::pair<std::string, double>> out;
            for (const auto& n : found) out.emplace_back(n.id, n.d);
            return out;
          },
          py::arg("h"), py::arg("g"), py::arg("k") = 10, py::arg("exact") = false, py::arg("ef") = std::nullopt,
          "Nearest repository datasets as (id, D).")
      .def("save", [](const RepositoryIndex& idx, const std::filesystem::path& p) { save_index(idx, p); })
      .def_static("load", &load_index);

  m.def("meansd", [](std::vector<float> x, std::vector<float> y) { return meansd(x, y); });
  m.def("ks_test", [](std::vector<float> x, std::vector<float> y) {
    const auto r = ks_test(x, y);
    return py::make_tuple(r.statistic, r.p);
  });
  m.def(
      "mmd_linear",
      [](std::vector<float> x, std::vector<float> y, std::uint64_t seed) {
        const auto r = mmd_linear(x, y, seed);
        return py::make_tuple(r.statistic, r.standard_error());
      },
      py::arg("x"), py::arg("y"), py::arg("seed") = 0);
  m.def(
      "scf_test",
      [](std::vector<float> x, std::vector<float> y, int j, std::uint64_t seed) {
        const auto r = scf_test(x, y, j, seed);
        return py::make_tuple(r.statistic, r.p);
      },
      py::arg("x"), py::arg("y"), py::arg("frequencies") = kScfFrequencies, py::arg("seed") = 0);
  m.def(
      "baseline_score",
      [](const std::string& method, const ColumnDataset& a, const ColumnDataset& b, const WordVectorTable* words) {
        const auto s = baseline_score(parse_baseline_method(method), a, b, words);
        return py::make_tuple(s.d, s.p);
      },
      py::arg("method"), py::arg("a"), py::arg("b"), py::arg("words") = nullptr, "Returns (D, p).");

  m.def("auc", [](std::vector<double> pos, std::vector<double> neg) { return auc(pos, neg); });

  m.def(
      "similarity_matrix",
      [](const std::vector<ColumnDataset>& a, const std::vector<ColumnDataset>& b, const std::string& method,
         const std::vector<const Model*>& models, const WordVectorTable* words) {
        const auto scorer = make_scorer(method, models, words);
        return column_similarity_matrix(as_table(a), as_table(b), *scorer);
      },
      py::arg("a"), py::arg("b"), py::arg("method") = "embed", py::arg("models") = std::vector<const Model*>{},
      py::arg("words") = nullptr, "Match probabilities between the columns of two tables.");
  m.def(
      "schema_match",
      [](const Eigen::MatrixXd& p, std::size_t restarts, std::uint64_t seed) {
        const auto al = schema_match(p, restarts, seed);
        return py::make_tuple(al.target, al.score);
      },
      py::arg("p"), py::arg("restarts") = 10, py::arg("seed") = 0,
      "Two-opt alignment; returns (target column per row, total log p).");
  m.def(
      "union_search",
      [](const std::vector<ColumnDataset>& query, const std::vector<std::vector<ColumnDataset>>& candidates,
         std::size_t k, const std::string& method, const std::vector<const Model*>& models,
         const WordVectorTable* words, double tau) {
        const auto scorer = make_scorer(method, models, words);
        std::vector<Table> tables;
        for (const auto& c : candidates) tables.push_back(as_table(c));
        py::list out;
        for (const auto& u : union_search(as_table(query), tables, *scorer, k, tau))
          out.append(py::make_tuple(u.table_id, u.c_star, u.score));
        return out;
      },
      py::arg("query"), py::arg("candidates"), py::arg("k") = 10, py::arg("method") = "embed",
      py::arg("models") = std::vector<const Model*>{}, py::arg("words") = nullptr, py::arg("tau") = kUnionThreshold,
      "Ranked (table id, alignment size, score).");

  m.def(
      "synthetic_corpus",
      [](std::uint64_t seed, std::size_t affine, std::size_t distinct, std::size_t boolean, std::size_t categorical,
         std::size_t code, std::size_t clustered, std::size_t datasets, std::size_t samples) {
        SyntheticCorpusConfig cfg;
        cfg.seed = seed;
        cfg.affine_variables = affine;
        cfg.distinct_variables = distinct;
        cfg.boolean_variables = boolean;
        cfg.categorical_variables = categorical;
        cfg.code_variables = code;
        cfg.clustered_variables = clustered;
        cfg.datasets_per_variable = datasets;
        cfg.samples_per_dataset = samples;
        auto corpus = generate_synthetic_corpus(cfg);
        std::vector<std::vector<ColumnDataset>> tables;
        for (auto& t : corpus.tables) tables.push_back(std::move(t.columns));
        return py::make_tuple(tables, std::move(corpus.words));
      },
      py::arg("seed") = 0, py::arg("affine") = 10, py::arg("distinct") = 10, py::arg("boolean") = 0,
      py::arg("categorical") = 0, py::arg("code") = 0, py::arg("clustered") = 0, py::arg("datasets") = 10, py::arg("samples") = 2000,
      "Returns (tables, word vectors); each table is a list of datasets.");
}
