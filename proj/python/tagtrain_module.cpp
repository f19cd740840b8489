#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "tagtrain/cli.hpp"
#include "tagtrain/corpus.hpp"
#include "tagtrain/fairness.hpp"
#include "tagtrain/lexdb.hpp"
#include "tagtrain/objective.hpp"
#include "tagtrain/sampler.hpp"
#include "tagtrain/stats.hpp"
#include "tagtrain/trainer.hpp"
#include "tagtrain/vocab.hpp"
#include "tagtrain/zeroshot.hpp"

namespace py = pybind11;
using namespace tagtrain;

namespace {

std::vector<std::string> ids_to_strings(const std::set<SynsetId>& ids) {
  std::vector<std::string> out;
  for (const SynsetId& id : ids) out.push_back(id.to_string());
  return out;
}

SynsetId parse_id(const std::string& text) {
  const auto id = SynsetId::parse(text);
  if (!id) throw std::invalid_argument("bad synset id: " + text);
  return *id;
}

}  // namespace

PYBIND11_MODULE(tagtrain, m) {
  m.doc() = "hashtag canonicalization, resampling, desk-scale training,"
            " zero-shot transfer and fairness metrics";

  py::class_<LexDb>(m, "LexDb")
      .def("synset_count", [](const LexDb& db) { return db.synset_count(); })
      .def("noun_count", [](const LexDb& db) { return db.synset_count(Pos::Noun); })
      .def("morphy",
           [](const LexDb& db, const std::string& word, const std::string& pos) {
             std::optional<std::string> base;
             if (pos == "all") {
               base = db.morphy(word);
             } else {
               const auto p = pos_from_tag(pos.empty() ? '?' : pos[0]);
               if (!p) throw std::invalid_argument("pos must be n/v/a/r or all");
               base = db.morphy(word, *p);
             }
             return base ? py::object(py::str(*base)) : py::object(py::none());
           },
           py::arg("word"), py::arg("pos") = "n")
      .def("synsets_of",
           [](const LexDb& db, const std::string& word) {
             std::vector<py::dict> out;
             for (const SynsetId& id : db.synsets_of(word)) {
               const Synset& s = db.synset(id);
               py::dict d;
               d["id"] = id.to_string();
               d["lemmas"] = s.lemmas;
               d["lexname"] = s.lexname;
               out.push_back(d);
             }
             return out;
           })
      .def("path_similarity", [](const LexDb& db, const std::string& a, const std::string& b) {
        return db.path_similarity(parse_id(a), parse_id(b));
      });

  m.def("load_database", &load_database, py::arg("directory"));

  m.def("get_synsets", [](const std::string& hashtag, const LexDb& db) {
    return ids_to_strings(get_synsets(normalize_hashtag(hashtag), db));
  });
  m.def("canonicalize", [](const std::string& hashtag, const LexDb& db) {
    const auto tag = canonicalize(normalize_hashtag(hashtag), db);
    return tag ? py::object(py::str(tag->canonical_key)) : py::object(py::none());
  });
  m.def("build_vocabulary",
        [](const std::vector<std::pair<std::string, std::uint64_t>>& counts, const LexDb& db,
           std::uint64_t min_count) {
          const Vocabulary vocab = build_vocabulary(counts, db, min_count);
          std::ostringstream ss;
          write_vocabulary_tsv(vocab, ss);
          return ss.str();
        },
        py::arg("counts"), py::arg("db"), py::arg("min_count") = 2);

  m.def("importance_hashtag", &importance_hashtag);
  m.def("effective_lr", [](double base_lr, std::uint64_t ref_batch, std::uint64_t batch) {
    OptimizerConfig c;
    c.base_lr = base_lr;
    c.ref_batch = ref_batch;
    c.batch = batch;
    return effective_lr(c);
  });
  m.def("lr_at", [](std::uint64_t step, std::uint64_t total_steps, double lr,
                    double warmup_frac) {
    ScheduleConfig s;
    s.total_steps = total_steps;
    s.warmup_frac = warmup_frac;
    return lr_at(step, s, lr);
  }, py::arg("step"), py::arg("total_steps"), py::arg("lr"), py::arg("warmup_frac") = 0.05);

  m.def("softmax_xent", [](const std::vector<double>& logits,
                           const std::map<std::size_t, double>& target) {
    const LossValue lv = softmax_xent(logits, make_target(target, logits.size()));
    return std::make_pair(lv.loss, lv.grad_logits);
  });

  m.def("apply_platt", [](const std::vector<double>& p, const std::vector<double>& w,
                          const std::vector<double>& b) {
    PlattParams params;
    params.w = w;
    params.b = b;
    return apply_platt(p, params);
  });
  m.def("fit_platt", [](const std::vector<std::vector<double>>& predictions) {
    const auto fit = fit_platt(predictions);
    py::dict d;
    d["w"] = fit.params.w;
    d["b"] = fit.params.b;
    d["initial_loss"] = fit.initial_loss;
    d["final_loss"] = fit.final_loss;
    return d;
  });

  m.def("topk", &topk, py::arg("scores"), py::arg("keys"), py::arg("k"));
  m.def("chi_square_pvalue", &chi_square_pvalue);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return std::make_tuple(code, out.str(), err.str());
  });
}
