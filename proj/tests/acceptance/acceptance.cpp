// Acceptance suite. Each criterion is a standalone check selected by number on
// the command line and prints one PASS/FAIL line.
//
//   radlabel_acceptance          run all
//   radlabel_acceptance 3 7      run a subset

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "radlabel/corpus.hpp"
#include "radlabel/error.hpp"
#include "radlabel/eval.hpp"
#include "radlabel/nn/checkpoint.hpp"
#include "radlabel/nn/model.hpp"
#include "radlabel/nn/train.hpp"
#include "radlabel/pipeline.hpp"
#include "radlabel/rba.hpp"
#include "radlabel/sweep.hpp"
#include "radlabel/tfidf.hpp"

using namespace radlabel;

namespace {

// Tolerances and budgets.
constexpr double kAucTol = 1e-12;
constexpr double kDelongTol = 1e-9;
constexpr double kBootstrapBoundTol = 0.05;
constexpr int kBootstrapResamples = 10000;
constexpr double kGradRelTol = 1e-4;
constexpr int kGradSamples = 60;
constexpr double kHeadlineAuc = 0.95;
constexpr std::size_t kSweepMinPositives = 500;
constexpr double kAttentionSumTol = 1e-6;
constexpr double kTfidfTol = 1e-9;

constexpr double kBudget1 = 1.0, kBudget2 = 10.0, kBudget3 = 30.0, kBudget4 = 60.0, kBudget5 = 15 * 60.0;

// Desk-scale training settings shared by the headline and sweep checks.
constexpr std::size_t kDeskReports = 5000;
constexpr std::array<std::uint64_t, 3> kSeeds{1, 2, 3};

nn::ModelConfig desk_config() {
    nn::ModelConfig c;
    c.embed_dim = 32;
    c.recurrent_units = 32;
    c.dense_units = 32;
    c.dropout_rate = 0.2;
    c.max_len = 128;
    return c;
}

nn::Hyperparams desk_hyperparams(std::uint64_t seed) {
    nn::Hyperparams hp;
    hp.epochs = 10;
    hp.batch_size = 32;
    hp.learning_rate = 3e-3;
    hp.seed = seed;
    return hp;
}

std::string data_dir() {
    if (const char* env = std::getenv("RADLABEL_DATA_DIR")) return env;
    return RADLABEL_TEST_DATA_DIR;
}

const OrganDictionaries& dictionaries() {
    static const OrganDictionaries d = [] {
        OrganDictionaries out;
        for (auto o : kAllOrgans) out[o] = load_dictionary(bundled_dictionary_path(o));
        return out;
    }();
    return d;
}

struct Verdict {
    bool pass = true;
    std::string detail;
    std::vector<std::string> notes;  // informational lines

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::set<std::string> vote_names(const SentenceVerdict& v, const Dictionary& d) {
    std::set<std::string> out;
    for (auto i : v.disease_votes) out.insert(d.disease_labels[i]);
    return out;
}

// 1. Hand-traced golden sentences plus the full sample report.
Verdict criterion1() {
    Verdict v;
    const auto rows = oracle::load_golden(data_dir() + "/golden/sentences.tsv");
    v.require(rows.size() >= 150, "golden file has " + std::to_string(rows.size()) + " rows");
    std::size_t agree = 0;
    for (const auto& r : rows) {
        const auto& dict = dictionaries().at(*organ_from_name(r.organ));
        const auto got = classify_sentence(rba_tokenize(r.sentence), dict);
        const bool ok =
            vote_names(got, dict) == r.votes && got.abnormal_untracked == r.untracked && got.normal_vote == r.normal;
        if (ok) ++agree;
        else v.notes.push_back("mismatch [" + r.organ + "] " + r.sentence);
    }
    v.require(agree == rows.size(), std::to_string(rows.size() - agree) + " golden mismatches");

    std::ifstream in(data_dir() + "/golden/fig2_report.txt");
    const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto report = parse_report(raw, "fig2", "s0");
    v.require(report.protocol == Protocol::CAP, "sample protocol is " + std::string(to_string(report.protocol)));
    const auto labels = label_report(report, dictionaries());
    auto flags = [&](OrganSystem o) {
        const auto& l = labels.at(o);
        std::string s;
        for (std::size_t i = 0; i < kDiseaseCount; ++i)
            if (l.disease_flags[i]) s += dictionaries().at(o).disease_labels[i] + ",";
        if (l.normal) s += "normal,";
        if (l.uncertain) s += "uncertain,";
        return s;
    };
    v.require(labels.size() == 3, "sample report labeled for " + std::to_string(labels.size()) + " organs");
    if (labels.size() == 3) {
        v.require(flags(OrganSystem::LungsPleura) == "atelectasis,", "sample lungs: " + flags(OrganSystem::LungsPleura));
        v.require(flags(OrganSystem::LiverGallbladder) == "normal,",
                  "sample liver: " + flags(OrganSystem::LiverGallbladder));
        v.require(flags(OrganSystem::KidneysUreters) == "stone,", "sample kidneys: " + flags(OrganSystem::KidneysUreters));
    }
    if (v.detail.empty()) v.detail = std::to_string(agree) + "/" + std::to_string(rows.size()) + " golden verdicts";
    return v;
}

// 2. Clean generator round trip.
Verdict criterion2() {
    Verdict v;
    auto spec = GenSpec::defaults();
    spec.seed = 2024;
    spec.report_count = 1000;
    const auto corpus = generate_corpus(spec, dictionaries());
    const auto rt = rba_roundtrip_check(corpus, dictionaries());
    const auto disagreements = rt.comparisons - rt.agreements;
    v.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
    v.require(rt.comparisons > 1000, "only " + std::to_string(rt.comparisons) + " comparisons");
    if (v.pass) v.detail = std::to_string(rt.agreements) + "/" + std::to_string(rt.comparisons) + " (report, organ) pairs agree";
    return v;
}

// 3. Metric oracles.
Verdict criterion3() {
    Verdict v;
    Rng rng(33);

    double worst = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t n = 2 + rng.below(199);
        const bool coarse = rng.bernoulli(0.5);  // heavy ties
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
            y[i] = rng.bernoulli(0.3) ? 1 : 0;
        }
        y[0] = 1;
        y[1] = 0;
        worst = std::max(worst, std::abs(roc_auc(s, y) - oracle::pairwise_auc(s, y)));
    }
    v.require(worst <= kAucTol, fmt("roc_auc off by %.3g", worst));

    std::size_t exact = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        ConfusionCounts c{rng.below(4) ? rng.below(50) : 0, rng.below(4) ? rng.below(50) : 0,
                          rng.below(4) ? rng.below(50) : 0, rng.below(4) ? rng.below(50) : 0};
        if (c.total() == 0) {  // undefined, must be rejected
            try {
                binary_metrics(c);
            } catch (const EmptyEval&) {
                ++exact;
            }
            continue;
        }
        const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), tn = static_cast<double>(c.tn),
                     fn = static_cast<double>(c.fn);
        const double acc = (tp + tn) / (tp + fp + tn + fn);
        const double p = c.tp + c.fp ? tp / (tp + fp) : 0.0;
        const double r = c.tp + c.fn ? tp / (tp + fn) : 0.0;
        const double f1 = p + r > 0 ? 2.0 * (p * r) / (p + r) : 0.0;
        const double fpr = c.fp + c.tn ? fp / (fp + tn) : 0.0;
        const auto m = binary_metrics(c);
        if (m.accuracy == acc && m.precision == p && m.recall == r && m.f1 == f1 && m.fpr == fpr) ++exact;
    }
    v.require(exact == 1000, std::to_string(1000 - exact) + " binary_metrics mismatches");

    const std::vector<double> pos{0.9, 0.4}, neg{0.1, 0.6};
    const std::vector<double> scores{0.9, 0.4, 0.1, 0.6};
    const std::vector<int> labels{1, 1, 0, 0};
    const auto ci = delong_ci(scores, labels);
    const auto hand = oracle::delong_by_hand(pos, neg);
    constexpr double z975 = 1.959963984540054;
    const double lo = std::max(0.0, hand.auc - z975 * std::sqrt(hand.var));
    const double hi = std::min(1.0, hand.auc + z975 * std::sqrt(hand.var));
    v.require(std::abs(hand.auc - 0.75) <= kDelongTol && std::abs(hand.var - 0.125) <= kDelongTol,
              "hand DeLong is not 0.75 / 0.125");
    v.require(std::abs(ci.auc - hand.auc) <= kDelongTol && std::abs(ci.variance - hand.var) <= kDelongTol &&
                  std::abs(ci.ci_low - lo) <= kDelongTol && std::abs(ci.ci_high - hi) <= kDelongTol,
              fmt("delong_ci (%.6f, %.6f, %.6f, %.6f) differs from hand computation", ci.auc, ci.variance, ci.ci_low,
                  ci.ci_high));

    const auto boot = oracle::bootstrap_auc(pos, neg, kBootstrapResamples, 7);
    const double dlo = std::abs(ci.ci_low - boot.lo), dhi = std::abs(ci.ci_high - boot.hi);
    v.require(dlo <= kBootstrapBoundTol && dhi <= kBootstrapBoundTol,
              fmt("bootstrap (%.4f, %.4f) vs DeLong (%.4f, %.4f) on the 2+2 example", boot.lo, boot.hi, ci.ci_low,
                  ci.ci_high));

    // Informational: the same comparison where the normal approximation is
    // reasonable.
    {
        std::vector<double> s;
        std::vector<int> y;
        std::vector<double> p2, n2;
        for (int i = 0; i < 120; ++i) {
            const int yi = i % 2;
            const double x = (yi ? 0.8 : 0.0) + rng.uniform() * 1.5;
            s.push_back(x);
            y.push_back(yi);
            (yi ? p2 : n2).push_back(x);
        }
        const auto big = delong_ci(s, y);
        const auto bb = oracle::bootstrap_auc(p2, n2, 2000, 11);
        v.notes.push_back(fmt("info: 60+60 example DeLong (%.4f, %.4f) vs bootstrap (%.4f, %.4f)", big.ci_low,
                              big.ci_high, bb.lo, bb.hi));
    }
    if (v.pass) v.detail = fmt("auc worst %.2g; DeLong (%.4f, %.4f); bootstrap (%.4f, %.4f)", worst, ci.ci_low, ci.ci_high, boot.lo) + fmt(" hi %.4f", boot.hi);
    return v;
}

// 4. Gradient check on the miniature model.
Verdict criterion4() {
    Verdict v;
    nn::ModelConfig cfg;
    cfg.vocab_size = 50;
    cfg.embed_dim = 8;
    cfg.recurrent_units = 8;
    cfg.dense_units = 8;
    cfg.max_len = 20;
    cfg.num_labels = 5;
    cfg.dropout_rate = 0.2;
    cfg.seed = 4;
    auto model = nn::init_model(cfg);
    Rng rng(44);
    nn::IdMatrix ids(4, 20);
    for (Eigen::Index i = 0; i < ids.rows(); ++i) {
        const auto len = 6 + static_cast<Eigen::Index>(rng.below(15));
        for (Eigen::Index t = 0; t < 20; ++t) ids(i, t) = t < len ? 1 + static_cast<std::int32_t>(rng.below(49)) : 0;
    }
    nn::Matrix y(4, 5);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    auto w = nn::LossWeights::uniform(5);
    w.positive = {1.0, 2.0, 0.5, 1.5, 1.0};

    double worst = 0;
    int checked = 0;
    for (bool train_mode : {false, true}) {
        const auto g = nn::gradients(model.params, cfg, ids, y, w, train_mode, 9, 3);
        std::vector<nn::Matrix*> params, grads;
        model.params.for_each([&](std::string_view, nn::Matrix& m) { params.push_back(&m); });
        auto gcopy = g.grads;
        gcopy.for_each([&](std::string_view, nn::Matrix& m) { grads.push_back(&m); });
        for (int s = 0; s < kGradSamples; ++s) {
            const auto t = static_cast<std::size_t>(s) % params.size();
            Eigen::Index entry;
            if (t == 0) {  // an embedding row that actually occurs
                const auto row = ids(static_cast<Eigen::Index>(rng.below(4)), static_cast<Eigen::Index>(rng.below(6)));
                entry = row * params[0]->cols() + static_cast<Eigen::Index>(rng.below(params[0]->cols()));
            } else {
                entry = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(params[t]->size())));
            }
            const double fd = oracle::central_difference(model.params, *params[t], entry, cfg, ids, y, w, train_mode, 9);
            const double an = grads[t]->data()[entry];
            const double rel = std::abs(an - fd) / (std::abs(an) + 1e-8);
            worst = std::max(worst, rel);
            ++checked;
        }
    }
    v.require(worst < kGradRelTol, fmt("worst relative error %.3g", worst));
    if (v.pass) v.detail = std::to_string(checked) + " parameters, worst relative error " + fmt("%.2g", worst);
    return v;
}

std::vector<StructuredReport> desk_reports(std::uint64_t seed) {
    auto spec = GenSpec::defaults();
    spec.seed = seed;
    spec.report_count = kDeskReports;
    std::vector<StructuredReport> out;
    for (auto& g : generate_corpus(spec, dictionaries())) out.push_back(std::move(g.report));
    return out;
}

// 5. Headline analogue: every label of every organ above the AUC bar on
// every seed.
Verdict criterion5() {
    Verdict v;
    double lowest = 1.0;
    for (auto seed : kSeeds) {
        const auto reports = desk_reports(seed);
        for (auto organ : kAllOrgans) {
            auto data = build_organ_dataset(reports, dictionaries().at(organ));
            const auto splits = prepare_splits(std::move(data), desk_config(), {0.70, 0.15, 0.15}, seed);
            const auto result = run_experiment(splits, desk_hyperparams(seed));
            std::string line = "seed " + std::to_string(seed) + " " + std::string(organ_name(organ)) + ":";
            for (const auto& l : result.test_report.labels) {
                const bool ok = l.auc_defined && l.auc.auc >= kHeadlineAuc;
                lowest = std::min(lowest, l.auc_defined ? l.auc.auc : 0.0);
                line += " " + l.label + fmt("=%.4f", l.auc_defined ? l.auc.auc : std::nan(""));
                v.require(ok, "seed " + std::to_string(seed) + " " + std::string(organ_name(organ)) + " " + l.label +
                                  " below bar");
            }
            v.notes.push_back(line + " (best epoch " + std::to_string(result.history.best_epoch) + ")");
        }
    }
    if (v.pass) v.detail = fmt("15 labels x 3 seeds, lowest test AUC %.4f", lowest);
    return v;
}

// 6. Label efficiency: full training set at least as good as 20% for every
// well-populated label, on a majority of seeds.
Verdict criterion6() {
    Verdict v;
    const std::vector<double> fractions{0.2, 0.4, 0.6, 0.8, 1.0};
    std::map<std::string, int> wins, eligible_seeds;
    for (auto seed : kSeeds) {
        auto data = build_organ_dataset(desk_reports(seed), dictionaries().at(OrganSystem::LungsPleura));
        const auto splits = prepare_splits(std::move(data), desk_config(), {0.70, 0.15, 0.15}, seed);
        const auto rows = training_size_sweep(splits, fractions, desk_hyperparams(seed), seed);
        const auto& small = rows.front();
        const auto& full = rows.back();
        for (std::size_t k = 0; k < full.report.labels.size(); ++k) {
            const auto& name = full.report.labels[k].label;
            const auto& a = full.report.labels[k];
            const auto& b = small.report.labels[k];
            v.notes.push_back("seed " + std::to_string(seed) + " " + name + ": " +
                              std::to_string(full.train_positives[k]) + " positives, " +
                              fmt("auc@20%% %.4f auc@100%% %.4f", b.auc.auc, a.auc.auc));
            if (full.train_positives[k] < kSweepMinPositives) continue;
            ++eligible_seeds[name];
            if (a.auc_defined && b.auc_defined && a.auc.auc >= b.auc.auc) ++wins[name];
        }
    }
    v.require(!eligible_seeds.empty(), "no label reaches the positive-count threshold");
    std::string summary;
    for (const auto& [name, n] : eligible_seeds) {
        const int w = wins[name];
        // A label is judged on the seeds where it is eligible.
        v.require(2 * w > n, name + " improves on only " + std::to_string(w) + "/" + std::to_string(n) + " seeds");
        summary += name + " " + std::to_string(w) + "/" + std::to_string(n) + " ";
    }
    if (v.pass) v.detail = summary;
    return v;
}

// 7. Invariants.
Verdict criterion7() {
    Verdict v;
    Rng rng(77);

    {  // attention and probabilities
        nn::ModelConfig cfg;
        cfg.vocab_size = 60;
        cfg.embed_dim = 12;
        cfg.recurrent_units = 10;
        cfg.dense_units = 8;
        cfg.max_len = 40;
        cfg.seed = 7;
        const auto model = nn::init_model(cfg);
        double worst_sum = 0;
        bool probs_ok = true;
        for (int batch = 0; batch < 20; ++batch) {
            nn::IdMatrix ids(16, 40);
            for (Eigen::Index i = 0; i < ids.rows(); ++i) {
                const auto len = static_cast<Eigen::Index>(rng.below(41));
                for (Eigen::Index t = 0; t < 40; ++t) ids(i, t) = t < len ? static_cast<std::int32_t>(rng.below(60)) : 0;
            }
            const auto fr = nn::forward(model.params, cfg, ids, batch % 2 == 1, rng.next());
            for (Eigen::Index i = 0; i < fr.attention.rows(); ++i)
                worst_sum = std::max(worst_sum, std::abs(fr.attention.row(i).sum() - 1.0));
            probs_ok = probs_ok && (fr.probs.array() > 0.0).all() && (fr.probs.array() < 1.0).all();
        }
        v.require(worst_sum <= kAttentionSumTol, fmt("attention row sum off by %.3g", worst_sum));
        v.require(probs_ok, "probability outside (0, 1)");
    }

    {  // mutual exclusion on fuzzed reports
        auto spec = GenSpec::defaults();
        spec.seed = 70;
        spec.report_count = 10000;
        spec.run_on_rate = 0.3;
        spec.misspelling_rate = 0.05;
        spec.negated_rate = 0.5;
        auto corpus = generate_corpus(spec, dictionaries());
        const auto& bank = template_bank();
        std::size_t violations = 0;
        for (auto& g : corpus) {
            // Splice in a few arbitrary sentences, some without terminators.
            std::string findings = g.report.findings();
            for (int extra = static_cast<int>(rng.below(4)); extra > 0; --extra)
                findings += (rng.bernoulli(0.5) ? " " : ". ") + render_template(rng.pick(bank).text, rng);
            g.report.sections[Section::Findings] = findings;
            for (const auto& [organ, l] : label_report(g.report, dictionaries(), {}, false)) {
                const int states = (l.any_disease() ? 1 : 0) + (l.normal ? 1 : 0) + (l.uncertain ? 1 : 0);
                if (states != 1) ++violations;
            }
        }
        v.require(violations == 0, std::to_string(violations) + " label sets break mutual exclusion");
    }

    {  // split integrity
        std::size_t bad = 0;
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::string> subjects;
            const auto n = 20 + rng.below(500);
            for (std::uint64_t i = 0; i < n; ++i) subjects.push_back("S" + std::to_string(rng.below(n / 2 + 1)));
            const auto a = split_by_subject(subjects, {0.70, 0.15, 0.15}, trial);
            const auto b = split_by_subject(subjects, {0.70, 0.15, 0.15}, trial);
            const std::set<std::string> distinct(subjects.begin(), subjects.end());
            if (a.by_subject != b.by_subject) ++bad;
            if (a.by_subject.size() != distinct.size()) ++bad;
            if (a.count(Split::Train) + a.count(Split::Val) + a.count(Split::Test) != distinct.size()) ++bad;
            const double train_share = static_cast<double>(a.count(Split::Train)) / static_cast<double>(distinct.size());
            if (distinct.size() >= 100 && std::abs(train_share - 0.70) > 0.02) ++bad;
        }
        // Report-level: no subject contributes to two splits of a prepared dataset.
        auto spec = GenSpec::defaults();
        spec.seed = 71;
        spec.report_count = 600;
        std::vector<StructuredReport> reports;
        for (auto& g : generate_corpus(spec, dictionaries())) reports.push_back(std::move(g.report));
        nn::ModelConfig small;
        small.max_len = 16;
        const auto s = prepare_splits(build_organ_dataset(reports, dictionaries().at(OrganSystem::LungsPleura)), small,
                                      {0.70, 0.15, 0.15}, 5);
        std::map<std::string, std::set<int>> seen;
        auto mark = [&](const std::vector<std::size_t>& idx, int which) {
            for (auto i : idx) seen[s.data.examples[i].subject_id].insert(which);
        };
        mark(s.train_idx, 0);
        mark(s.val_idx, 1);
        mark(s.test_idx, 2);
        for (const auto& [subject, splits] : seen) bad += splits.size() != 1;
        if (s.train_idx.size() + s.val_idx.size() + s.test_idx.size() != s.data.examples.size()) ++bad;
        v.require(bad == 0, std::to_string(bad) + " split integrity failures");
    }

    {  // checkpoint round trip
        nn::ModelConfig cfg;
        cfg.vocab_size = 30;
        cfg.embed_dim = 6;
        cfg.recurrent_units = 5;
        cfg.dense_units = 4;
        cfg.max_len = 12;
        cfg.seed = 3;
        auto model = nn::init_model(cfg);
        nn::IdMatrix ids(8, 12);
        for (Eigen::Index i = 0; i < ids.size(); ++i) ids.data()[i] = static_cast<std::int32_t>(rng.below(30));
        nn::Matrix y(8, 5);
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.bernoulli(0.5);
        nn::Hyperparams hp;
        hp.learning_rate = 0.01;
        for (int step = 0; step < 3; ++step)
            nn::adam_step(model, nn::gradients(model.params, cfg, ids, y, nn::LossWeights::uniform(5), true, step).grads,
                          hp);
        model.state.epoch = 3;
        model.state.best_val_loss = 0.1 + 1e-17 * 3;
        nlohmann::ordered_json meta;
        meta["labels"] = {"a", "b"};
        std::stringstream first;
        nn::save_checkpoint(first, model, meta);
        const std::string bytes = first.str();
        const auto back = nn::load_checkpoint(first);
        std::stringstream second;
        nn::save_checkpoint(second, back.model, back.metadata);
        auto bits_equal = [](const nn::Parameters& a, const nn::Parameters& b) {
            std::vector<const nn::Matrix*> x, z;
            a.for_each([&](std::string_view, const nn::Matrix& m) { x.push_back(&m); });
            b.for_each([&](std::string_view, const nn::Matrix& m) { z.push_back(&m); });
            for (std::size_t t = 0; t < x.size(); ++t) {
                if (x[t]->rows() != z[t]->rows() || x[t]->cols() != z[t]->cols()) return false;
                for (Eigen::Index i = 0; i < x[t]->size(); ++i)
                    if (std::bit_cast<std::uint64_t>(x[t]->data()[i]) != std::bit_cast<std::uint64_t>(z[t]->data()[i]))
                        return false;
            }
            return true;
        };
        const bool ok = back.model.config == model.config && bits_equal(back.model.params, model.params) &&
                        back.model.state.has_moments && bits_equal(back.model.state.adam_m, model.state.adam_m) &&
                        bits_equal(back.model.state.adam_v, model.state.adam_v) &&
                        back.model.state.step == model.state.step && back.model.state.epoch == model.state.epoch &&
                        std::bit_cast<std::uint64_t>(back.model.state.best_val_loss) ==
                            std::bit_cast<std::uint64_t>(model.state.best_val_loss) &&
                        back.metadata == meta && second.str() == bytes;
        v.require(ok, "checkpoint round trip is not bit-exact");
    }

    {  // negation matches whole tokens only
        const auto& lungs = dictionaries().at(OrganSystem::LungsPleura);
        std::vector<std::string> negations;
        for (const auto& e : lungs.entries)
            if (e.category == Category::Negation && e.tokens.size() == 1) negations.push_back(e.surface);
        auto hits_anything = [&](const std::string& tok) {
            for (const auto& [o, d] : dictionaries())
                if (!match_terms(std::vector<std::string>{tok}, d).empty()) return true;
            return false;
        };
        std::size_t tried = 0, wrong = 0;
        const std::string letters = "abcdefghijklmnopqrstuvwxyz";
        auto junk = [&](std::size_t n) {
            std::string s;
            for (std::size_t i = 0; i < n; ++i) s += letters[rng.below(26)];
            return s;
        };
        while (tried < 2000) {
            const auto& neg = rng.pick(negations);
            std::string tok;
            switch (rng.below(3)) {
                case 0: tok = junk(1 + rng.below(4)) + neg; break;
                case 1: tok = neg + junk(1 + rng.below(4)); break;
                default: tok = junk(1 + rng.below(3)) + neg + junk(1 + rng.below(3)); break;
            }
            if (hits_anything(tok)) continue;
            ++tried;
            const std::vector<std::string> sent{tok, "bibasilar", "atelectasis"};
            const auto got = classify_sentence(sent, lungs);
            if (got.disease_votes != std::set<std::size_t>{0}) ++wrong;
        }
        // Controls: the bare word does negate.
        std::size_t controls = 0;
        for (const auto& neg : negations)
            controls += classify_sentence(std::vector<std::string>{neg, "bibasilar", "atelectasis"}, lungs)
                            .disease_votes.empty();
        v.require(wrong == 0, std::to_string(wrong) + " fuzzed tokens acted as negations");
        v.require(controls == negations.size(), "a bare negation term failed to negate");
    }
    if (v.pass) v.detail = "attention, probabilities, 10000 fuzzed reports, splits, checkpoint, negation";
    return v;
}

// 8. tf-idf.
Verdict criterion8() {
    Verdict v;
    const std::vector<std::string> docs{"Bibasilar atelectasis. Atelectasis persists.", "Lungs are clear.",
                                        "No pleural effusion."};
    const auto ranked = tfidf_rank(docs, 100);
    const auto it = std::find_if(ranked.begin(), ranked.end(), [](const TermScore& t) { return t.token == "atelectasis"; });
    const double expect = 2.0 * std::log(3.0);
    v.require(it != ranked.end() && std::abs(it->score - expect) <= kTfidfTol,
              fmt("atelectasis score %.12f", it == ranked.end() ? 0.0 : it->score));

    Rng rng(88);
    const std::vector<std::string> pool{"lung", "nodule", "effusion", "pleural", "atelectasis", "clear", "liver",
                                        "cyst", "stone", "renal", "normal", "no", "mild", "small", "right", "left"};
    std::size_t broken = 0;
    for (int c = 0; c < 100; ++c) {
        std::vector<std::string> corpus;
        std::vector<std::vector<std::string>> tokens;
        for (auto n = 2 + rng.below(12); n > 0; --n) {
            std::string d;
            std::vector<std::string> t;
            for (auto w = 1 + rng.below(15); w > 0; --w) {
                t.push_back(rng.pick(pool));
                d += (d.empty() ? "" : (rng.bernoulli(0.2) ? ". " : " ")) + t.back();
            }
            corpus.push_back(d);
            tokens.push_back(t);
        }
        const auto base = tfidf_rank(corpus, 1000);
        const auto oracle_best = oracle::best_tfidf(tokens);
        for (const auto& t : base)
            if (std::abs(t.score - oracle_best.at(t.token)) > kTfidfTol) ++broken;
        const auto copies = 2 + rng.below(3);
        std::vector<std::string> scaled;
        for (std::uint64_t k = 0; k < copies; ++k) scaled.insert(scaled.end(), corpus.begin(), corpus.end());
        const auto dup = tfidf_rank(scaled, 1000);
        bool same = dup.size() == base.size();
        for (std::size_t i = 0; same && i < base.size(); ++i)
            same = dup[i].token == base[i].token && dup[i].score == base[i].score;
        broken += !same;
    }
    v.require(broken == 0, std::to_string(broken) + " tf-idf mismatches on random corpora");
    if (v.pass) v.detail = fmt("2 ln 3 = %.6f; 100 random corpora invariant under duplication", it->score);
    return v;
}

struct Criterion {
    int id;
    const char* name;
    Verdict (*run)();
    double budget;  // seconds, 0 for none
};

const std::vector<Criterion> kCriteria{
    {1, "golden RBA sentences", criterion1, kBudget1},
    {2, "clean synthetic round trip", criterion2, kBudget2},
    {3, "metric oracles", criterion3, kBudget3},
    {4, "gradient check", criterion4, kBudget4},
    {5, "desk-scale headline AUC", criterion5, kBudget5},
    {6, "training-size sweep", criterion6, 0},
    {7, "invariant suites", criterion7, 0},
    {8, "tf-idf", criterion8, 0},
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = seconds_since(t0);
        if (c.budget > 0 && secs > c.budget) v.require(false, fmt("took %.1f s, budget %.0f s", secs, c.budget));
        for (const auto& n : v.notes) std::printf("  %s\n", n.c_str());
        std::printf("criterion %d %s: %s: %s (%.2f s)\n", c.id, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !v.pass;
    }
    return failures == 0 ? 0 : 1;
}
