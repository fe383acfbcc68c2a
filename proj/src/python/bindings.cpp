#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "radlabel/corpus.hpp"
#include "radlabel/error.hpp"
#include "radlabel/eval.hpp"
#include "radlabel/nn/attention.hpp"
#include "radlabel/nn/checkpoint.hpp"
#include "radlabel/rba.hpp"
#include "radlabel/tfidf.hpp"

namespace py = pybind11;
using namespace radlabel;

namespace {

OrganSystem organ_arg(const std::string& name) {
    if (auto o = organ_from_name(name)) return *o;
    throw ConfigError("unknown organ '" + name + "' (lungs, liver, kidneys)");
}

const OrganDictionaries& bundled() {
    static const OrganDictionaries d = [] {
        OrganDictionaries out;
        for (auto o : kAllOrgans) out[o] = load_dictionary(bundled_dictionary_path(o));
        return out;
    }();
    return d;
}

py::dict label_dict(const OrganLabelSet& l, const Dictionary& d) {
    py::dict out;
    for (std::size_t i = 0; i < kDiseaseCount; ++i) out[py::str(d.disease_labels[i])] = l.disease_flags[i];
    out["normal"] = l.normal;
    out["uncertain"] = l.uncertain;
    return out;
}

py::dict label_text(const std::string& raw, bool all_protocols, std::size_t normal_len) {
    RbaConfig cfg;
    cfg.normal_length_threshold = normal_len;
    const auto report = parse_report(raw);
    py::dict out;
    for (const auto& [organ, l] : label_report(report, bundled(), cfg, !all_protocols))
        out[py::str(std::string(organ_name(organ)))] = label_dict(l, bundled().at(organ));
    return out;
}

py::dict classify(const std::string& sentence, const std::string& organ, std::size_t normal_len) {
    RbaConfig cfg;
    cfg.normal_length_threshold = normal_len;
    const auto& d = bundled().at(organ_arg(organ));
    const auto v = classify_sentence(rba_tokenize(sentence), d, cfg);
    std::vector<std::string> votes;
    for (auto i : v.disease_votes) votes.push_back(d.disease_labels[i]);
    py::dict out;
    out["votes"] = votes;
    out["untracked"] = v.abnormal_untracked;
    out["normal"] = v.normal_vote;
    return out;
}

py::list generate(std::size_t count, std::uint64_t seed, double run_on_rate, double misspelling_rate) {
    auto spec = GenSpec::defaults();
    spec.report_count = count;
    spec.seed = seed;
    spec.run_on_rate = run_on_rate;
    spec.misspelling_rate = misspelling_rate;
    py::list out;
    for (const auto& g : generate_corpus(spec, bundled())) {
        py::dict row;
        row["report_id"] = g.record.report_id;
        row["subject_id"] = g.record.subject_id;
        row["raw_text"] = g.record.raw_text;
        py::dict truth;
        for (const auto& [organ, t] : g.truth) {
            py::dict flags;
            const auto& d = bundled().at(organ);
            for (std::size_t i = 0; i < kDiseaseCount; ++i) flags[py::str(d.disease_labels[i])] = t.disease_flags[i];
            flags["normal"] = t.normal;
            flags["uncertain"] = t.uncertain;
            truth[py::str(std::string(organ_name(organ)))] = flags;
        }
        row["truth"] = truth;
        out.append(row);
    }
    return out;
}

// A trained checkpoint with its vocabulary, ready for inference.
class Classifier {
public:
    explicit Classifier(const std::string& path) : ck_(nn::load_checkpoint(path)) {
        vocab_ = Vocabulary(ck_.metadata.at("vocab").get<std::vector<std::string>>());
        labels_ = ck_.metadata.at("labels").get<std::vector<std::string>>();
        organ_ = ck_.metadata.at("organ").get<std::string>();
    }

    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& organ() const { return organ_; }

    std::vector<std::vector<double>> predict(const std::vector<std::string>& findings) const {
        const auto fr = run(findings);
        std::vector<std::vector<double>> out(findings.size());
        for (std::size_t i = 0; i < findings.size(); ++i) {
            const auto row = fr.probs.row(static_cast<Eigen::Index>(i));
            out[i].assign(row.begin(), row.end());
        }
        return out;
    }

    std::vector<std::pair<std::string, double>> attention(const std::string& findings) const {
        const auto fr = run({findings});
        const std::vector<double> row(fr.attention.row(0).begin(), fr.attention.row(0).end());
        const auto trace = nn::make_trace(row, findings);
        std::vector<std::pair<std::string, double>> out;
        for (std::size_t i = 0; i < trace.tokens.size(); ++i) out.emplace_back(trace.tokens[i], trace.weights[i]);
        return out;
    }

private:
    nn::ForwardResult run(const std::vector<std::string>& findings) const {
        std::vector<EncodedFindings> enc;
        for (const auto& f : findings) enc.push_back(rnn_preprocess(f, vocab_, ck_.model.config.max_len));
        py::gil_scoped_release release;
        return nn::forward(ck_.model, enc);
    }

    nn::Checkpoint ck_;
    Vocabulary vocab_;
    std::vector<std::string> labels_;
    std::string organ_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rule-based and neural labeling of CT report findings";

    static py::exception<Error> base(m, "RadlabelError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const Error& e) {
            base(e.what());
        }
    });

    m.def("rba_tokenize", [](const std::string& s) { return rba_tokenize(s); }, py::arg("text"));
    m.def("rnn_tokenize", [](const std::string& s) { return rnn_tokenize(s); }, py::arg("text"));
    m.def(
        "segment_sentences",
        [](const std::string& s) {
            std::vector<std::vector<std::string>> out;
            for (auto& sent : segment_sentences(s)) out.push_back(std::move(sent.tokens));
            return out;
        },
        py::arg("findings"), "Token lists, one per sentence.");
    m.def(
        "findings",
        [](const std::string& raw) { return parse_report(raw).findings(); }, py::arg("raw_text"));

    m.def("classify_sentence", &classify, py::arg("sentence"), py::arg("organ"), py::arg("normal_len_threshold") = 18);
    m.def("label_report", &label_text, py::arg("raw_text"), py::arg("all_protocols") = false,
          py::arg("normal_len_threshold") = 18,
          "Per-organ disease flags plus normal and uncertain for one raw report.");

    m.def(
        "tfidf_rank",
        [](const std::vector<std::string>& corpus, std::size_t k) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& t : tfidf_rank(corpus, k)) out.emplace_back(t.token, t.score);
            return out;
        },
        py::arg("corpus"), py::arg("k") = 50);

    m.def(
        "roc_auc", [](const std::vector<double>& s, const std::vector<int>& y) { return roc_auc(s, y); },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "delong_ci",
        [](const std::vector<double>& s, const std::vector<int>& y, double alpha) {
            const auto ci = delong_ci(s, y, alpha);
            return py::make_tuple(ci.auc, ci.variance, ci.ci_low, ci.ci_high);
        },
        py::arg("scores"), py::arg("labels"), py::arg("alpha") = 0.05, "(auc, variance, ci_low, ci_high)");
    m.def(
        "binary_metrics",
        [](std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
            const auto b = binary_metrics({tp, fp, tn, fn});
            py::dict out;
            out["accuracy"] = b.accuracy;
            out["precision"] = b.precision;
            out["recall"] = b.recall;
            out["f1"] = b.f1;
            out["fpr"] = b.fpr;
            return out;
        },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def("generate_corpus", &generate, py::arg("count") = 100, py::arg("seed") = 0, py::arg("run_on_rate") = 0.0,
          py::arg("misspelling_rate") = 0.0);

    py::class_<Classifier>(m, "Classifier")
        .def(py::init<const std::string&>(), py::arg("checkpoint"))
        .def_property_readonly("labels", &Classifier::labels)
        .def_property_readonly("organ", &Classifier::organ)
        .def("predict", &Classifier::predict, py::arg("findings"), "Probabilities per label for each findings text.")
        .def("attention", &Classifier::attention, py::arg("findings"));
}
