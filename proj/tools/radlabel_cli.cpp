// radlabel: rule-based labeling, neural training and evaluation of CT report
// findings, one organ system at a time.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "radlabel/corpus.hpp"
#include "radlabel/error.hpp"
#include "radlabel/nn/attention.hpp"
#include "radlabel/nn/checkpoint.hpp"
#include "radlabel/nn/embeddings.hpp"
#include "radlabel/pipeline.hpp"
#include "radlabel/sweep.hpp"
#include "radlabel/tfidf.hpp"

namespace fs = std::filesystem;
using namespace radlabel;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

const std::map<std::string, OrganSystem> kOrganMap = {
    {"lungs", OrganSystem::LungsPleura},
    {"liver", OrganSystem::LiverGallbladder},
    {"kidneys", OrganSystem::KidneysUreters},
};

struct Output {
    std::ofstream file;
    std::ostream* stream = &std::cout;

    explicit Output(const std::string& path, std::ios::openmode mode = std::ios::out) {
        if (path.empty() || path == "-") return;
        file.open(path, mode);
        if (!file) throw ConfigError("cannot open " + path + " for writing");
        stream = &file;
    }
    std::ostream& operator*() { return *stream; }
};

std::vector<ReportRecord> read_reports(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return read_report_records(in);
}

std::vector<StructuredReport> parse_all(const std::vector<ReportRecord>& records) {
    std::vector<StructuredReport> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        try {
            out.push_back(parse_report(r));
        } catch (const Error& e) {
            throw Error(e.family(), "report " + r.report_id + ": " + e.what());
        }
    }
    return out;
}

Dictionary dictionary_for(OrganSystem organ, const std::string& override_path) {
    Dictionary d = load_dictionary(override_path.empty() ? bundled_dictionary_path(organ) : fs::path(override_path));
    if (d.organ_system != organ)
        throw ConfigError("dictionary " + override_path + " is for " + std::string(organ_name(d.organ_system)));
    return d;
}

std::vector<double> parse_fractions(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad fraction: " + item);
        }
        if (!(out.back() > 0.0 && out.back() <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
    }
    if (out.empty()) throw ConfigError("no fractions given");
    return out;
}

// Options shared by train and sweep.
struct ModelOptions {
    std::string in, dict, embed;
    std::string organ = "lungs";
    std::uint64_t seed = 0;
    int epochs = 50;
    std::size_t batch_size = 512;
    double lr = 1e-4;
    std::size_t embed_dim = 200;
    std::size_t units = 200;
    std::size_t dense_units = 64;
    double dropout = 0.2;
    std::size_t max_len = 650;
    std::size_t normal_len = 18;
    bool all_protocols = false;
    bool quiet = false;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--in", in, "Report records (JSON lines)")->required()->check(CLI::ExistingFile);
        cmd.add_option("--organ", organ, "Organ system")->check(CLI::IsMember({"lungs", "liver", "kidneys"}));
        cmd.add_option("--dict", dict, "Dictionary file (default: bundled)")->check(CLI::ExistingFile);
        cmd.add_option("--seed", seed, "Seed for initialization, shuffling and the subject split");
        cmd.add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
        cmd.add_option("--batch-size", batch_size, "Minibatch size")->check(CLI::PositiveNumber);
        cmd.add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
        cmd.add_option("--embed", embed, "Pretrained embeddings in text format")->check(CLI::ExistingFile);
        cmd.add_option("--embed-dim", embed_dim, "Embedding width")->check(CLI::PositiveNumber);
        cmd.add_option("--units", units, "Recurrent units per direction")->check(CLI::PositiveNumber);
        cmd.add_option("--dense-units", dense_units, "Dense layer width")->check(CLI::PositiveNumber);
        cmd.add_option("--dropout", dropout, "Dropout rate")->check(CLI::Range(0.0, 0.999));
        cmd.add_option("--max-len", max_len, "Tokens per report after padding or truncation")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--normal-len-threshold", normal_len, "Longest sentence allowed to vote normal");
        cmd.add_flag("--all-protocols", all_protocols, "Label every organ regardless of protocol");
        cmd.add_flag("--quiet", quiet, "No per-epoch progress on stderr");
    }

    nn::ModelConfig model_config() const {
        nn::ModelConfig c;
        c.embed_dim = embed_dim;
        c.recurrent_units = units;
        c.dense_units = dense_units;
        c.dropout_rate = dropout;
        c.max_len = max_len;
        c.seed = seed;
        return c;
    }

    nn::Hyperparams hyperparams() const {
        nn::Hyperparams hp;
        hp.epochs = epochs;
        hp.batch_size = batch_size;
        hp.learning_rate = lr;
        hp.seed = seed;
        return hp;
    }

    PreparedSplits prepare() const {
        const auto reports = parse_all(read_reports(in));
        RbaConfig rba;
        rba.normal_length_threshold = normal_len;
        auto data = build_organ_dataset(reports, dictionary_for(kOrganMap.at(organ), dict), rba, !all_protocols);
        if (!quiet)
            std::cerr << organ << ": " << data.examples.size() << " labeled reports, " << data.uncertain_ids.size()
                      << " uncertain excluded\n";
        return prepare_splits(std::move(data), model_config(), {0.70, 0.15, 0.15}, seed);
    }

    std::unique_ptr<nn::AlignedEmbeddings> embeddings(const Vocabulary& vocab) const {
        if (embed.empty()) return nullptr;
        auto e = std::make_unique<nn::AlignedEmbeddings>(nn::load_embeddings(embed, vocab, embed_dim));
        if (!quiet) std::cerr << "embeddings: " << e->hits << " hits, " << e->misses << " misses\n";
        return e;
    }
};

void print_epoch(const nn::EpochRecord& e) {
    std::fprintf(stderr, "epoch %3d  train_loss %.6f  val_loss %.6f\n", e.epoch, e.train_loss, e.val_loss);
}

nlohmann::ordered_json checkpoint_metadata(const ModelOptions& o, const PreparedSplits& s, int best_epoch) {
    nlohmann::ordered_json m;
    m["organ"] = o.organ;
    m["labels"] = s.data.label_names;
    m["split_seed"] = o.seed;
    m["split_fractions"] = {s.split.fractions[0], s.split.fractions[1], s.split.fractions[2]};
    m["normal_length_threshold"] = o.normal_len;
    m["apply_protocol_filter"] = !o.all_protocols;
    m["best_epoch"] = best_epoch;
    m["vocab_fingerprint"] = s.vocab.fingerprint();
    m["vocab"] = s.vocab.tokens();
    return m;
}

struct LoadedModel {
    nn::Checkpoint ck;
    Vocabulary vocab;
    OrganSystem organ;
    std::vector<std::string> labels;
};

LoadedModel load_model(const std::string& path) {
    LoadedModel m;
    m.ck = nn::load_checkpoint(path);
    try {
        m.vocab = Vocabulary(m.ck.metadata.at("vocab").get<std::vector<std::string>>());
        m.organ = kOrganMap.at(m.ck.metadata.at("organ").get<std::string>());
        m.labels = m.ck.metadata.at("labels").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
        throw FormatError(0, std::string("checkpoint metadata: ") + e.what());
    }
    if (m.vocab.size() != m.ck.model.config.vocab_size) throw FormatError(0, "vocabulary size does not match model");
    return m;
}

int run_label(const std::string& in, const std::string& out, const std::string& organ, const std::string& dict,
              std::size_t normal_len, bool all_protocols, bool evidence, const std::string& export_uncertain) {
    const auto records = read_reports(in);
    auto reports = parse_all(records);
    std::sort(reports.begin(), reports.end(),
              [](const auto& a, const auto& b) { return a.report_id < b.report_id; });

    OrganDictionaries dicts;
    if (organ == "all") {
        if (!dict.empty()) throw ConfigError("--dict needs a single --organ");
        for (auto o : kAllOrgans) dicts[o] = dictionary_for(o, "");
    } else {
        dicts[kOrganMap.at(organ)] = dictionary_for(kOrganMap.at(organ), dict);
    }
    RbaConfig cfg;
    cfg.normal_length_threshold = normal_len;

    Output o(out);
    std::unique_ptr<Output> unc = export_uncertain.empty() ? nullptr : std::make_unique<Output>(export_uncertain);
    for (const auto& r : reports) {
        const auto sentences = segment_sentences(r.findings());
        const auto labels = label_report(r, dicts, cfg, !all_protocols);
        for (const auto& [organ_sys, set] : labels) {
            const auto& d = dicts.at(organ_sys);
            const auto rec = LabelRecord::from(r.report_id, set, d, evidence ? &sentences : nullptr);
            write_label_record(*o, rec, d);
            if (unc && rec.uncertain) **unc << r.report_id << '\t' << organ_name(organ_sys) << '\n';
        }
    }
    return 0;
}

int run_tfidf(const std::string& in, const std::string& out, std::size_t k) {
    std::vector<std::string> corpus;
    for (const auto& r : parse_all(read_reports(in))) corpus.push_back(r.findings());
    const auto ranked = tfidf_rank(corpus, k);
    Output o(out);
    *o << "rank\ttoken\tscore\n";
    char buf[32];
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f", ranked[i].score);
        *o << i + 1 << '\t' << ranked[i].token << '\t' << buf << '\n';
    }
    return 0;
}

int run_train(const ModelOptions& opt, const std::string& out, std::string history_path) {
    const auto splits = opt.prepare();
    const auto emb = opt.embeddings(splits.vocab);
    auto hp = opt.hyperparams();
    auto result = run_experiment(splits, hp, emb.get(), nullptr, opt.quiet ? nn::EpochCallback{} : print_epoch);
    nn::save_checkpoint(out, result.best, checkpoint_metadata(opt, splits, result.history.best_epoch));
    if (history_path.empty()) history_path = out + ".history.csv";
    Output h(history_path);
    result.history.write_csv(*h);
    if (!opt.quiet) {
        std::cerr << "best epoch " << result.history.best_epoch << "; test split:\n";
        write_eval_table(std::cerr, result.test_report);
    }
    return 0;
}

int run_eval(const std::string& model_path, const std::string& in, const std::string& out, const std::string& split,
             const std::string& truth_path, bool records) {
    const auto m = load_model(model_path);
    const auto& meta = m.ck.metadata;
    const auto reports = parse_all(read_reports(in));
    const Dictionary dict = dictionary_for(m.organ, "");
    RbaConfig rba;
    rba.normal_length_threshold = meta.value("normal_length_threshold", std::size_t{18});

    OrganDataset data;
    if (truth_path.empty()) {
        data = build_organ_dataset(reports, dict, rba, meta.value("apply_protocol_filter", true));
    } else {
        std::ifstream tin(truth_path);
        if (!tin) throw ConfigError("cannot open " + truth_path);
        OrganDictionaries dicts;
        for (auto o : kAllOrgans) dicts[o] = dictionary_for(o, "");
        std::map<std::string, LabelRecord> truth;
        for (auto& r : read_label_records(tin, dicts))
            if (r.organ == m.organ) truth[r.report_id] = r;
        data.organ = m.organ;
        data.label_names = dict.output_labels();
        for (const auto& r : reports) {
            auto it = truth.find(r.report_id);
            if (it == truth.end() || it->second.uncertain) continue;
            std::vector<double> t;
            for (bool f : it->second.disease_flags) t.push_back(f ? 1.0 : 0.0);
            t.push_back(it->second.normal ? 1.0 : 0.0);
            data.examples.push_back({r.report_id, r.subject_id, r.findings(), t});
        }
    }
    if (data.examples.empty()) throw EmptyEval("no labeled reports to evaluate");

    std::vector<std::size_t> rows;
    if (split == "all") {
        for (std::size_t i = 0; i < data.examples.size(); ++i) rows.push_back(i);
    } else {
        std::vector<std::string> subjects;
        for (const auto& e : data.examples) subjects.push_back(e.subject_id);
        const auto f = meta.value("split_fractions", std::vector<double>{0.70, 0.15, 0.15});
        const auto assignment = split_by_subject(subjects, {f.at(0), f.at(1), f.at(2)}, meta.value("split_seed", 0ULL));
        const Split want = split == "train" ? Split::Train : split == "val" ? Split::Val : Split::Test;
        for (std::size_t i = 0; i < data.examples.size(); ++i)
            if (assignment.of(data.examples[i].subject_id) == want) rows.push_back(i);
    }
    if (rows.empty()) throw EmptyEval("the " + split + " split is empty");

    std::vector<EncodedFindings> enc;
    std::vector<std::vector<double>> targets;
    for (auto i : rows) {
        enc.push_back(rnn_preprocess(data.examples[i].findings, m.vocab, m.ck.model.config.max_len));
        targets.push_back(data.examples[i].targets);
    }
    const auto ds = nn::make_dataset(enc, targets, m.ck.model.config);
    const auto report = evaluate_model(m.ck.model, ds, m.labels);
    Output o(out);
    if (records) write_eval_records(*o, report);
    else write_eval_table(*o, report);
    return 0;
}

int run_sweep(const ModelOptions& opt, const std::string& out, const std::string& fractions_s) {
    const auto fractions = parse_fractions(fractions_s);
    const auto splits = opt.prepare();
    const auto emb = opt.embeddings(splits.vocab);
    SweepProgress progress;
    if (!opt.quiet)
        progress = [](double f, const nn::EpochRecord& e) {
            std::fprintf(stderr, "fraction %.2f  ", f);
            print_epoch(e);
        };
    const auto rows = training_size_sweep(splits, fractions, opt.hyperparams(), opt.seed, emb.get(), progress);
    Output o(out);
    write_sweep_table(*o, rows);
    return 0;
}

int run_gen(const std::string& out, const std::string& truth_path, std::size_t count, std::uint64_t seed,
            double negated, double run_on, double misspell) {
    GenSpec spec = GenSpec::defaults();
    spec.report_count = count;
    spec.seed = seed;
    spec.negated_rate = negated;
    spec.run_on_rate = run_on;
    spec.misspelling_rate = misspell;
    OrganDictionaries dicts;
    for (auto o : kAllOrgans) dicts[o] = dictionary_for(o, "");
    const auto corpus = generate_corpus(spec, dicts);
    Output o(out);
    for (const auto& g : corpus) write_report_record(*o, g.record);
    if (!truth_path.empty()) {
        Output t(truth_path);
        write_truth_records(*t, corpus, dicts);
    }
    return 0;
}

int run_render(const std::string& model_path, const std::string& in, const std::string& out, const std::string& format,
               std::size_t limit) {
    const auto m = load_model(model_path);
    const auto reports = parse_all(read_reports(in));
    const auto fmt = format == "html" ? nn::RenderFormat::Html : nn::RenderFormat::Ansi;
    Output o(out);
    if (fmt == nn::RenderFormat::Html) *o << "<!DOCTYPE html>\n<html><body style=\"font-family: monospace\">\n";
    std::size_t n = 0;
    for (const auto& r : reports) {
        if (limit && n++ >= limit) break;
        const auto enc = rnn_preprocess(r.findings(), m.vocab, m.ck.model.config.max_len);
        const auto fr = nn::forward(m.ck.model, std::span<const EncodedFindings>(&enc, 1));
        std::vector<double> row(fr.attention.row(0).begin(), fr.attention.row(0).end());
        const auto trace = nn::make_trace(row, r.findings());
        std::ostringstream head;
        head << r.report_id << " [" << organ_name(m.organ) << "]";
        for (std::size_t k = 0; k < m.labels.size(); ++k) {
            char buf[48];
            std::snprintf(buf, sizeof buf, " %s=%.3f", m.labels[k].c_str(), fr.probs(0, static_cast<Eigen::Index>(k)));
            head << buf;
        }
        if (fmt == nn::RenderFormat::Html) *o << "<h4>" << head.str() << "</h4>\n";
        else *o << head.str() << '\n';
        *o << nn::render_attention(trace.tokens, trace, fmt);
    }
    if (fmt == nn::RenderFormat::Html) *o << "</body></html>\n";
    return 0;
}

int exit_code(const Error& e) {
    switch (e.family()) {
        case ErrorFamily::Config: return kExitConfig;
        case ErrorFamily::Data: return kExitData;
        case ErrorFamily::Divergence: return kExitDiverged;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weakly supervised organ-level labeling of CT report findings"};
    app.require_subcommand(1);

    auto* label = app.add_subcommand("label", "Label reports with the rule-based engine");
    std::string l_in, l_out, l_organ = "all", l_dict, l_unc;
    std::size_t l_normal = 18;
    bool l_all = false, l_evidence = false;
    label->add_option("--in", l_in, "Report records (JSON lines)")->required()->check(CLI::ExistingFile);
    label->add_option("--out", l_out, "Label records (default: stdout)");
    label->add_option("--organ", l_organ, "Organ system or all")
        ->check(CLI::IsMember({"lungs", "liver", "kidneys", "all"}));
    label->add_option("--dict", l_dict, "Dictionary file for the chosen organ")->check(CLI::ExistingFile);
    label->add_option("--normal-len-threshold", l_normal, "Longest sentence allowed to vote normal");
    label->add_flag("--all-protocols", l_all, "Label every organ regardless of protocol");
    label->add_flag("--evidence", l_evidence, "Include matched terms per sentence");
    label->add_option("--export-uncertain", l_unc, "Write ids of uncertain (report, organ) pairs here");

    auto* tfidf = app.add_subcommand("tfidf", "Rank findings vocabulary by TF-IDF");
    std::string t_in, t_out;
    std::size_t t_k = 50;
    tfidf->add_option("--in", t_in, "Report records (JSON lines)")->required()->check(CLI::ExistingFile);
    tfidf->add_option("--out", t_out, "Ranked terms (default: stdout)");
    tfidf->add_option("--k", t_k, "Number of terms")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "Train the attention classifier on rule-based labels");
    ModelOptions tr;
    std::string tr_out, tr_history;
    tr.add_to(*train);
    train->add_option("--out", tr_out, "Checkpoint path")->required();
    train->add_option("--history", tr_history, "Per-epoch loss CSV (default: <out>.history.csv)");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string e_model, e_in, e_out, e_split = "test", e_truth;
    bool e_records = false;
    eval->add_option("--model", e_model, "Checkpoint")->required()->check(CLI::ExistingFile);
    eval->add_option("--in", e_in, "Report records (JSON lines)")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", e_out, "Evaluation table (default: stdout)");
    eval->add_option("--split", e_split, "Subject split to score")->check(CLI::IsMember({"train", "val", "test", "all"}));
    eval->add_option("--truth", e_truth, "Reference labels instead of the rule engine")->check(CLI::ExistingFile);
    eval->add_flag("--records", e_records, "JSON lines instead of a table");

    auto* sweep = app.add_subcommand("sweep", "Retrain on growing fractions of the training split");
    ModelOptions sw;
    std::string sw_out, sw_fractions = "0.2,0.4,0.6,0.8,1.0";
    sw.add_to(*sweep);
    sweep->add_option("--out", sw_out, "Plot-ready table (default: stdout)");
    sweep->add_option("--fractions", sw_fractions, "Comma-separated training fractions");

    auto* gen = app.add_subcommand("gen", "Generate a synthetic report corpus with known labels");
    std::string g_out, g_truth;
    std::size_t g_count = 1000;
    std::uint64_t g_seed = 0;
    double g_neg = 0.3, g_runon = 0.0, g_miss = 0.0;
    gen->add_option("--out", g_out, "Report records (default: stdout)");
    gen->add_option("--truth", g_truth, "Ground-truth label records");
    gen->add_option("--count", g_count, "Number of reports")->check(CLI::PositiveNumber);
    gen->add_option("--seed", g_seed, "Generator seed");
    gen->add_option("--negated-rate", g_neg, "Chance of a negated mention per absent disease")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--run-on-rate", g_runon, "Chance of fusing adjacent sentences")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--misspelling-rate", g_miss, "Per-word typo chance outside dictionary terms")
        ->check(CLI::Range(0.0, 1.0));

    auto* render = app.add_subcommand("render-attention", "Shade findings tokens by attention weight");
    std::string r_model, r_in, r_out, r_format = "ansi";
    std::size_t r_limit = 0;
    render->add_option("--model", r_model, "Checkpoint")->required()->check(CLI::ExistingFile);
    render->add_option("--in", r_in, "Report records (JSON lines)")->required()->check(CLI::ExistingFile);
    render->add_option("--out", r_out, "Output file (default: stdout)");
    render->add_option("--format", r_format, "ansi or html")->check(CLI::IsMember({"ansi", "html"}));
    render->add_option("--limit", r_limit, "Render at most this many reports (0: all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*label) return run_label(l_in, l_out, l_organ, l_dict, l_normal, l_all, l_evidence, l_unc);
        if (*tfidf) return run_tfidf(t_in, t_out, t_k);
        if (*train) return run_train(tr, tr_out, tr_history);
        if (*eval) return run_eval(e_model, e_in, e_out, e_split, e_truth, e_records);
        if (*sweep) return run_sweep(sw, sw_out, sw_fractions);
        if (*gen) return run_gen(g_out, g_truth, g_count, g_seed, g_neg, g_runon, g_miss);
        if (*render) return run_render(r_model, r_in, r_out, r_format, r_limit);
    } catch (const Error& e) {
        std::cerr << "radlabel: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "radlabel: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
