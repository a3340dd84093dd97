#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "txbench/agent/scripted.hpp"
#include "txbench/chem/fingerprint.hpp"
#include "txbench/chem/smiles.hpp"
#include "txbench/evalrunner/eval.hpp"
#include "txbench/metrics/metrics.hpp"
#include "txbench/promptgen/prompt.hpp"
#include "txbench/seqalign/align.hpp"
#include "txbench/taskdata/task.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace txbench;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

chem::Fingerprint fingerprint_of(const std::string& smiles, int radius, int n_bits) {
  return chem::morgan_fingerprint(chem::parse_smiles(smiles), {radius, n_bits});
}

seqalign::SequenceKind sequence_kind(const std::string& kind) {
  if (kind == "protein") return seqalign::SequenceKind::kAminoAcid;
  if (kind == "nucleotide") return seqalign::SequenceKind::kNucleotide;
  throw std::invalid_argument("kind must be 'protein' or 'nucleotide'");
}

Json wilcoxon_json(const metrics::WilcoxonResult& w) {
  return {{"w_plus", w.w_plus},   {"w_minus", w.w_minus},         {"statistic", w.statistic},
          {"p_value", w.p_value}, {"n_effective", w.n_effective}, {"exact", w.exact}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings to the txbench C++ core.";

  m.def("canonical_smiles", [](const std::string& s) { return chem::canonical_serialize(chem::parse_smiles(s)); },
        py::arg("smiles"));
  m.def(
      "fingerprint_hex",
      [](const std::string& s, int radius, int n_bits) { return fingerprint_of(s, radius, n_bits).to_hex(); },
      py::arg("smiles"), py::arg("radius") = 2, py::arg("n_bits") = 2048);
  m.def(
      "tanimoto",
      [](const std::string& a, const std::string& b, int radius, int n_bits) {
        return chem::tanimoto(fingerprint_of(a, radius, n_bits), fingerprint_of(b, radius, n_bits));
      },
      py::arg("a"), py::arg("b"), py::arg("radius") = 2, py::arg("n_bits") = 2048);

  m.def(
      "percent_identity",
      [](const std::string& a, const std::string& b, const std::string& kind) {
        const auto k = sequence_kind(kind);
        return seqalign::percent_identity(seqalign::make_sequence(k, a), seqalign::make_sequence(k, b));
      },
      py::arg("a"), py::arg("b"), py::arg("kind") = "protein");

  m.def(
      "auroc",
      [](const std::vector<bool>& labels, const std::vector<double>& scores) {
        std::unique_ptr<bool[]> y(new bool[labels.size()]);
        std::copy(labels.begin(), labels.end(), y.get());
        return metrics::auroc(std::span<const bool>(y.get(), labels.size()), scores);
      },
      py::arg("labels"), py::arg("scores"));
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return metrics::spearman(x, y); });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return metrics::pearson(x, y); });
  m.def("wilcoxon", [](const std::vector<double>& d) { return to_python(wilcoxon_json(metrics::wilcoxon_signed_rank(d))); },
        py::arg("differences"));

  m.def("bin_label", [](double y, double lo, double hi) { return promptgen::bin_label(y, {lo, hi}); });
  m.def("unbin_label", [](int bin, double lo, double hi) { return promptgen::unbin_label(bin, {lo, hi}); });

  m.def(
      "compare_columns",
      [](const fs::path& table, const std::string& a, const std::string& b) {
        return to_python(
            eval::compare_models(eval::load_table_column(table, a), eval::load_table_column(table, b)).to_json());
      },
      py::arg("table"), py::arg("a"), py::arg("b"));
  m.def(
      "compare_pairs",
      [](const fs::path& pairs) {
        const auto [a, b] = eval::load_pairs(pairs);
        return to_python(eval::compare_models(a, b).to_json());
      },
      py::arg("path"));

  py::class_<taskdata::TaskCatalog>(m, "Catalog")
      .def(py::init(&taskdata::TaskCatalog::load), py::arg("path"))
      .def("task_ids",
           [](const taskdata::TaskCatalog& c) {
             std::vector<std::string> ids;
             for (const auto& t : c.tasks()) ids.push_back(t.task_id);
             return ids;
           })
      .def("counts",
           [](const taskdata::TaskCatalog& c, const std::string& id) {
             const auto b = c.load_bundle(id);
             return py::dict(py::arg("train") = b.counts.train, py::arg("valid") = b.counts.validation,
                             py::arg("test") = b.counts.test);
           })
      .def(
          "render_prompt",
          [](const taskdata::TaskCatalog& c, const std::string& id, std::size_t point) {
            const auto b = c.load_bundle(id);
            const auto test = taskdata::split_indices(b, taskdata::Split::kTest);
            if (point >= test.size()) throw py::index_error("test point out of range");
            return promptgen::render_prompt(b.spec, b.points[test[point]], {}).text;
          },
          py::arg("task_id"), py::arg("point") = 0);

  m.def(
      "replay_agent",
      [](const fs::path& script, const fs::path& web_cassettes, std::optional<fs::path> cassette) {
        const auto s = agent::EpisodeScript::load(script);
        auto web = std::make_shared<tools::CassetteWebTransport>(web_cassettes);
        const fs::path llm = cassette ? *cassette : script.parent_path() / "llm.jsonl";
        Json episode;
        {
          py::gil_scoped_release release;
          episode = agent::replay_episode(s, web, llm).to_json();
        }
        return to_python(episode);
      },
      py::arg("script"), py::arg("web_cassettes"), py::arg("cassette") = py::none());
}
