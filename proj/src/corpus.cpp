#include "radlabel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ostream>
#include <set>

#include "radlabel/error.hpp"

namespace radlabel {

namespace {

using K = TemplateKind;
constexpr auto kLungs = OrganSystem::LungsPleura;
constexpr auto kLiver = OrganSystem::LiverGallbladder;
constexpr auto kKidneys = OrganSystem::KidneysUreters;

// Sentence skeletons after the phrasing of real body CT findings. Each one
// touches a single organ so the truth of a report follows from its parts.
const std::vector<SentenceTemplate> kBank = {
    // lungs: atelectasis, nodule, emphysema, effusion
    {K::Positive, kLungs, 0, "Basilar atelectasis."},
    {K::Positive, kLungs, 0, "Bibasilar atelectasis."},
    {K::Positive, kLungs, 0, "Mild dependent atelectasis in the {lobe}."},
    {K::Positive, kLungs, 0, "Subsegmental atelectasis at the {side} lung base."},
    {K::Positive, kLungs, 0, "Streaky atelectatic changes at the lung bases."},
    {K::Positive, kLungs, 0, "There is compressive atelectasis of the {lobe}."},
    {K::Positive, kLungs, 1, "A {mm} mm nodule in the {lobe}."},
    {K::Positive, kLungs, 1, "Scattered pulmonary nodules measuring up to {mm} mm."},
    {K::Positive, kLungs, 1, "Spiculated mass in the {lobe}."},
    {K::Positive, kLungs, 1, "Nodular opacity in the {lobe}."},
    {K::Positive, kLungs, 1, "A {mm} mm perifissural nodule is again seen."},
    {K::Positive, kLungs, 1, "Multiple bilateral pulmonary nodules."},
    {K::Positive, kLungs, 2, "Centrilobular emphysema."},
    {K::Positive, kLungs, 2, "Mild upper lobe predominant emphysema."},
    {K::Positive, kLungs, 2, "Paraseptal emphysematous changes."},
    {K::Positive, kLungs, 2, "Moderate emphysema is again seen."},
    {K::Positive, kLungs, 2, "Advanced bullous emphysema in the {lobe}."},
    {K::Positive, kLungs, 3, "Small {side} pleural effusion."},
    {K::Positive, kLungs, 3, "Moderate bilateral pleural effusions."},
    {K::Positive, kLungs, 3, "Large {side} pleural effusion is present."},
    {K::Positive, kLungs, 3, "Loculated effusion at the {side} lung base."},
    {K::Positive, kLungs, 3, "Small bilateral pleural effusions are noted."},
    {K::Negated, kLungs, 0, "No atelectasis."},
    {K::Negated, kLungs, 0, "There is no basilar atelectasis."},
    {K::Negated, kLungs, 1, "No definite pulmonary nodule."},
    {K::Negated, kLungs, 1, "No suspicious pulmonary nodules or masses."},
    {K::Negated, kLungs, 2, "No emphysema."},
    {K::Negated, kLungs, 2, "No evidence of emphysema."},
    {K::Negated, kLungs, 3, "No pleural effusion."},
    {K::Negated, kLungs, 3, "No pneumothorax or pleural effusion."},
    {K::Normal, kLungs, -1, "The lungs are clear."},
    {K::Normal, kLungs, -1, "Lung bases are clear."},
    {K::Normal, kLungs, -1, "Central airways are patent."},
    {K::Normal, kLungs, -1, "The lungs are clear bilaterally."},
    {K::Normal, kLungs, -1, "Limited view of the lung bases appear clear."},
    {K::Normal, kLungs, -1, "Trachea and mainstem bronchi are patent."},
    {K::Untracked, kLungs, -1, "Mild bronchiectasis in the lower lobes."},
    {K::Untracked, kLungs, -1, "Small {side} pneumothorax."},
    {K::Untracked, kLungs, -1, "Patchy ground glass opacities in the {lobe}."},
    {K::Untracked, kLungs, -1, "Scarring in the {lobe}."},
    {K::Untracked, kLungs, -1, "Air trapping is noted."},

    // liver: stone, lesion, dilation, fatty
    {K::Positive, kLiver, 0, "Cholelithiasis."},
    {K::Positive, kLiver, 0, "Multiple gallstones."},
    {K::Positive, kLiver, 0, "A {mm} mm gallstone is present."},
    {K::Positive, kLiver, 0, "Layering stones within the gallbladder."},
    {K::Positive, kLiver, 0, "Calcified gallstones are noted."},
    {K::Positive, kLiver, 1, "A {cm} cm hypodense lesion in the right hepatic lobe."},
    {K::Positive, kLiver, 1, "Hepatic hemangioma in the right lobe."},
    {K::Positive, kLiver, 1, "Simple hepatic cyst measuring {mm} mm."},
    {K::Positive, kLiver, 1, "Multiple liver lesions concerning for metastases."},
    {K::Positive, kLiver, 1, "A {cm} cm mass in the left lobe of the liver."},
    {K::Positive, kLiver, 2, "Intrahepatic biliary ductal dilatation."},
    {K::Positive, kLiver, 2, "Mild biliary dilation."},
    {K::Positive, kLiver, 2, "Gallbladder distension is noted."},
    {K::Positive, kLiver, 2, "The common bile duct is dilated."},
    {K::Positive, kLiver, 3, "Hepatic steatosis."},
    {K::Positive, kLiver, 3, "Diffuse fatty infiltration of the liver."},
    {K::Positive, kLiver, 3, "Mild hepatic steatosis is present."},
    {K::Positive, kLiver, 3, "Focal fatty infiltration adjacent to the falciform ligament in the liver."},
    {K::Negated, kLiver, 0, "No gallstones."},
    {K::Negated, kLiver, 0, "No cholelithiasis."},
    {K::Negated, kLiver, 1, "No focal hepatic mass."},
    {K::Negated, kLiver, 1, "No suspicious liver lesion."},
    {K::Negated, kLiver, 2, "No biliary dilatation."},
    {K::Negated, kLiver, 2, "No intrahepatic biliary ductal dilatation."},
    {K::Negated, kLiver, 3, "No hepatic steatosis."},
    {K::Negated, kLiver, 3, "There is no evidence of hepatic steatosis."},
    {K::Normal, kLiver, -1, "The liver is unremarkable."},
    {K::Normal, kLiver, -1, "Gallbladder is unremarkable."},
    {K::Normal, kLiver, -1, "The liver is normal in appearance."},
    {K::Normal, kLiver, -1, "The gallbladder is normal."},
    {K::Normal, kLiver, -1, "No abnormality of the liver."},
    {K::Untracked, kLiver, -1, "Nodular hepatic contour consistent with cirrhosis."},
    {K::Untracked, kLiver, -1, "Status post cholecystectomy."},
    {K::Untracked, kLiver, -1, "Mild periportal edema in the liver."},
    {K::Untracked, kLiver, -1, "Gallbladder wall thickening with pericholecystic fluid."},

    // kidneys: stone, lesion, atrophy, cyst
    {K::Positive, kKidneys, 0, "Nonobstructive {side} renal stone in the inferior pole."},
    {K::Positive, kKidneys, 0, "Bilateral nonobstructing renal calculi measuring up to {mm} mm."},
    {K::Positive, kKidneys, 0, "A {mm} mm calculus at the {side} ureterovesicular junction."},
    {K::Positive, kKidneys, 0, "Punctate {side} nephrolithiasis."},
    {K::Positive, kKidneys, 0, "{Side} renal stone measuring {mm} mm."},
    {K::Positive, kKidneys, 1, "A {cm} cm enhancing mass in the {side} kidney."},
    {K::Positive, kKidneys, 1, "Indeterminate {side} renal lesion measuring {mm} mm."},
    {K::Positive, kKidneys, 1, "Solid renal mass concerning for renal cell carcinoma."},
    {K::Positive, kKidneys, 2, "The {side} kidney is atrophic."},
    {K::Positive, kKidneys, 2, "Mild bilateral renal atrophy."},
    {K::Positive, kKidneys, 2, "Atrophic {side} kidney."},
    {K::Positive, kKidneys, 2, "Marked cortical atrophy of the {side} kidney."},
    {K::Positive, kKidneys, 3, "Simple {side} renal cyst."},
    {K::Positive, kKidneys, 3, "Multiple bilateral renal cysts."},
    {K::Positive, kKidneys, 3, "A {cm} cm cyst in the {side} kidney."},
    {K::Positive, kKidneys, 3, "Small cortical cyst in the {side} kidney."},
    {K::Negated, kKidneys, 0, "No renal stones."},
    {K::Negated, kKidneys, 0, "No hydronephrosis or nephrolithiasis."},
    {K::Negated, kKidneys, 1, "No renal mass."},
    {K::Negated, kKidneys, 1, "No suspicious renal lesion."},
    {K::Negated, kKidneys, 2, "No renal atrophy."},
    {K::Negated, kKidneys, 3, "No renal cysts."},
    {K::Normal, kKidneys, -1, "The kidneys are unremarkable."},
    {K::Normal, kKidneys, -1, "Kidneys are normal in appearance."},
    {K::Normal, kKidneys, -1, "The kidneys are otherwise unremarkable in appearance."},
    {K::Normal, kKidneys, -1, "Both kidneys are normal."},
    {K::Normal, kKidneys, -1, "The ureters are unremarkable."},
    {K::Untracked, kKidneys, -1, "Mild {side} hydronephrosis."},
    {K::Untracked, kKidneys, -1, "Moderate {side} hydroureter."},
    {K::Untracked, kKidneys, -1, "Status post {side} nephrectomy."},
    {K::Untracked, kKidneys, -1, "Scarring of the {side} renal cortex."},

    // organ-neutral filler
    {K::Distractor, std::nullopt, -1, "Thyroid is unremarkable."},
    {K::Distractor, std::nullopt, -1, "Aortic atherosclerosis."},
    {K::Distractor, std::nullopt, -1, "Aorta is nonaneurysmal."},
    {K::Distractor, std::nullopt, -1, "Heart is normal in size."},
    {K::Distractor, std::nullopt, -1, "Mild diffuse thickening of the thoracic esophageal wall."},
    {K::Distractor, std::nullopt, -1, "Coronary atherosclerosis."},
    {K::Distractor, std::nullopt, -1, "Small, stable nodes in the AP window."},
    {K::Distractor, std::nullopt, -1, "No axillary, mediastinal or hilar adenopathy."},
    {K::Distractor, std::nullopt, -1, "The spleen and adrenal glands are normal."},
    {K::Distractor, std::nullopt, -1, "Pancreas is unremarkable."},
    {K::Distractor, std::nullopt, -1, "Stomach is nondilated."},
    {K::Distractor, std::nullopt, -1, "Small bowel is nondilated."},
    {K::Distractor, std::nullopt, -1, "The appendix is normal."},
    {K::Distractor, std::nullopt, -1, "Urinary bladder is unremarkable."},
    {K::Distractor, std::nullopt, -1, "No free air."},
    {K::Distractor, std::nullopt, -1, "No free fluid."},
    {K::Distractor, std::nullopt, -1, "Degenerative changes of the thoracic spine."},
    {K::Distractor, std::nullopt, -1, "Diffuse aortoiliac atherosclerotic changes."},
    {K::Distractor, std::nullopt, -1, "The prostate is within normal limits."},
    {K::Distractor, std::nullopt, -1, "Mild stranding is seen around the distal left ureter."},
};

struct Filler {
    std::string_view key;
    std::vector<std::string_view> values;
};

const std::vector<Filler> kFillers = {
    {"{side}", {"right", "left"}},
    {"{Side}", {"Right", "Left"}},
    {"{lobe}", {"right lower lobe", "left lower lobe", "right upper lobe", "left upper lobe", "right middle lobe"}},
    {"{mm}", {"3", "4", "5", "6", "8", "11"}},
    {"{cm}", {"0.9", "1.2", "2.4", "3.1"}},
};

struct Protocols {
    Protocol cls;
    std::string_view text;
    double weight;
};

const std::vector<Protocols> kProtocols = {
    {Protocol::CAP, "CT Chest, Abdomen and Pelvis with IV Contrast", 0.45},
    {Protocol::CA, "CT Chest and Abdomen with IV Contrast", 0.10},
    {Protocol::C, "CT Chest without IV Contrast", 0.10},
    {Protocol::AP, "CT Abdomen and Pelvis without IV Contrast", 0.25},
    {Protocol::A, "CT Abdomen with IV Contrast", 0.10},
};

constexpr std::string_view kIndications[] = {
    "Staging of known malignancy.", "Abdominal pain.", "Follow-up of prior imaging findings.",
    "Shortness of breath.", "Hematuria.", "Weight loss."};

std::vector<const SentenceTemplate*> select(TemplateKind kind, std::optional<OrganSystem> organ, int disease) {
    std::vector<const SentenceTemplate*> out;
    for (const auto& t : kBank)
        if (t.kind == kind && t.organ == organ && t.disease == disease) out.push_back(&t);
    return out;
}

std::string render(const std::vector<const SentenceTemplate*>& pool, Rng& rng) {
    return render_template(rng.pick(pool)->text, rng);
}

std::string lower_letters(std::string_view w) {
    std::string s;
    for (char c : w)
        if (std::isalpha(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool protected_word(const std::string& w, const std::set<std::string>& stems) {
    for (const auto& s : stems)
        if (w.starts_with(s)) return true;
    return false;
}

std::string misspell(const std::string& sentence, double rate, const std::set<std::string>& stems, Rng& rng) {
    std::string out;
    std::size_t i = 0;
    while (i < sentence.size()) {
        std::size_t j = sentence.find(' ', i);
        if (j == std::string::npos) j = sentence.size();
        std::string word = sentence.substr(i, j - i);
        const std::string letters = lower_letters(word);
        if (letters.size() >= 4 && !protected_word(letters, stems) && rng.bernoulli(rate)) {
            // swap two adjacent interior letters
            std::size_t a = 1 + rng.below(word.size() - 2);
            if (a + 1 < word.size() && std::isalpha(static_cast<unsigned char>(word[a])) &&
                std::isalpha(static_cast<unsigned char>(word[a + 1])))
                std::swap(word[a], word[a + 1]);
        }
        out += word;
        if (j < sentence.size()) out += ' ';
        i = j + 1;
    }
    return out;
}

}  // namespace

GenSpec GenSpec::defaults() {
    GenSpec s;
    s.prevalence[kLungs] = {0.25, 0.25, 0.18, 0.22};
    s.prevalence[kLiver] = {0.15, 0.20, 0.12, 0.18};
    s.prevalence[kKidneys] = {0.20, 0.15, 0.10, 0.20};
    s.normal_prevalence[kLungs] = 0.35;
    s.normal_prevalence[kLiver] = 0.40;
    s.normal_prevalence[kKidneys] = 0.40;
    return s;
}

void GenSpec::validate() const {
    if (report_count < 1) throw ConfigError("report_count must be >= 1");
    auto in_unit = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!in_unit(negated_rate) || !in_unit(run_on_rate) || !in_unit(misspelling_rate))
        throw ConfigError("rates must lie in [0, 1]");
    if (!(subject_ratio > 0.0 && subject_ratio <= 1.0)) throw ConfigError("subject_ratio must lie in (0, 1]");
    if (distractor_min > distractor_max) throw ConfigError("distractor range is empty");
    for (const auto& [organ, p] : prevalence) {
        for (double v : p)
            if (!in_unit(v)) throw ConfigError("prevalence outside [0, 1] for " + std::string(organ_name(organ)));
        const auto it = normal_prevalence.find(organ);
        const double normal = it == normal_prevalence.end() ? 0.0 : it->second;
        if (normal + *std::max_element(p.begin(), p.end()) > 1.0 + 1e-12)
            throw InconsistentSpec("normal and disease prevalence exceed 1 for " + std::string(organ_name(organ)));
    }
    for (const auto& [organ, v] : normal_prevalence)
        if (!in_unit(v)) throw ConfigError("normal prevalence outside [0, 1] for " + std::string(organ_name(organ)));
}

const std::vector<SentenceTemplate>& template_bank() { return kBank; }

std::string render_template(std::string_view text, Rng& rng) {
    std::string out(text);
    for (const auto& f : kFillers) {
        std::size_t pos;
        while ((pos = out.find(f.key)) != std::string::npos) out.replace(pos, f.key.size(), rng.pick(f.values));
    }
    return out;
}

std::vector<std::string> expand_template(std::string_view text) {
    std::vector<std::string> out{std::string(text)};
    for (const auto& f : kFillers) {
        std::vector<std::string> next;
        for (const auto& s : out) {
            const auto pos = s.find(f.key);
            if (pos == std::string::npos) {
                next.push_back(s);
                continue;
            }
            for (auto v : f.values) {
                std::string c = s;
                c.replace(pos, f.key.size(), v);
                next.push_back(c);
            }
        }
        out = std::move(next);
    }
    return out;
}

std::vector<GeneratedReport> generate_corpus(const GenSpec& spec, const OrganDictionaries& dicts) {
    spec.validate();
    for (auto organ : kAllOrgans)
        if (!dicts.count(organ)) throw ConfigError("missing dictionary for " + std::string(organ_name(organ)));

    std::set<std::string> stems;
    for (const auto& [organ, dict] : dicts)
        for (const auto& e : dict.entries)
            for (const auto& tok : e.tokens) stems.insert(tok);

    const std::size_t subjects =
        std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(spec.report_count) * spec.subject_ratio));
    double protocol_total = 0.0;
    for (const auto& p : kProtocols) protocol_total += p.weight;

    std::vector<GeneratedReport> corpus;
    corpus.reserve(spec.report_count);
    char id[32];
    for (std::size_t r = 0; r < spec.report_count; ++r) {
        Rng rng(mix_seed(spec.seed, r));
        GeneratedReport g;
        std::snprintf(id, sizeof id, "R%06zu", r);
        g.record.report_id = id;
        std::snprintf(id, sizeof id, "S%05llu", static_cast<unsigned long long>(rng.below(subjects)));
        g.record.subject_id = id;

        double u = rng.uniform() * protocol_total;
        const Protocols* proto = &kProtocols.back();
        for (const auto& p : kProtocols) {
            if (u < p.weight) {
                proto = &p;
                break;
            }
            u -= p.weight;
        }

        std::vector<std::string> sentences;
        for (auto organ : kAllOrgans) {
            if (!filter_by_protocol(proto->cls, organ)) continue;
            const auto prev_it = spec.prevalence.find(organ);
            const std::array<double, kDiseaseCount> prev =
                prev_it == spec.prevalence.end() ? std::array<double, kDiseaseCount>{} : prev_it->second;
            const auto norm_it = spec.normal_prevalence.find(organ);
            const double normal_p = norm_it == spec.normal_prevalence.end() ? 0.0 : norm_it->second;

            LabelRecord truth;
            truth.report_id = g.record.report_id;
            truth.organ = organ;
            if (rng.uniform() < normal_p) {
                truth.normal = true;
            } else if (normal_p < 1.0) {
                // conditional rates keep each disease marginal at its prevalence
                for (std::size_t k = 0; k < kDiseaseCount; ++k)
                    truth.disease_flags[k] = rng.uniform() < prev[k] / (1.0 - normal_p);
            }
            const bool any = std::any_of(truth.disease_flags.begin(), truth.disease_flags.end(), [](bool b) { return b; });
            truth.uncertain = !any && !truth.normal;

            if (truth.normal) {
                sentences.push_back(render(select(K::Normal, organ, -1), rng));
            } else if (any) {
                for (std::size_t k = 0; k < kDiseaseCount; ++k)
                    if (truth.disease_flags[k])
                        sentences.push_back(render(select(K::Positive, organ, static_cast<int>(k)), rng));
                if (rng.bernoulli(0.3)) sentences.push_back(render(select(K::Normal, organ, -1), rng));
            } else if (rng.bernoulli(0.5)) {
                sentences.push_back(render(select(K::Untracked, organ, -1), rng));
            }
            for (std::size_t k = 0; k < kDiseaseCount; ++k)
                if (!truth.disease_flags[k] && rng.bernoulli(spec.negated_rate))
                    sentences.push_back(render(select(K::Negated, organ, static_cast<int>(k)), rng));
            g.truth.emplace(organ, std::move(truth));
        }

        const auto distractors = select(K::Distractor, std::nullopt, -1);
        const std::size_t n_distract =
            spec.distractor_min + rng.below(spec.distractor_max - spec.distractor_min + 1);
        for (std::size_t d = 0; d < n_distract; ++d) sentences.push_back(render(distractors, rng));
        rng.shuffle(sentences);

        if (spec.run_on_rate > 0.0) {
            std::vector<std::string> fused;
            for (auto& s : sentences) {
                if (!fused.empty() && rng.bernoulli(spec.run_on_rate)) {
                    fused.back().pop_back();  // drop the period
                    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
                    fused.back() += " " + s;
                } else {
                    fused.push_back(std::move(s));
                }
            }
            sentences = std::move(fused);
        }
        if (spec.misspelling_rate > 0.0)
            for (auto& s : sentences) s = misspell(s, spec.misspelling_rate, stems, rng);

        std::string findings;
        for (const auto& s : sentences) {
            if (!findings.empty()) findings += ' ';
            findings += s;
        }
        if (findings.empty()) findings = "Limited examination.";

        g.record.raw_text = "Protocol: " + std::string(proto->text) +
                            "\n\nIndication: " + std::string(kIndications[rng.below(std::size(kIndications))]) +
                            "\n\nTechnique: Axial images were obtained and reviewed.\n\nFindings: " + findings +
                            "\n\nImpression: See findings above.\n";
        g.report = parse_report(g.record);
        corpus.push_back(std::move(g));
    }
    return corpus;
}

RoundTrip rba_roundtrip_check(const std::vector<GeneratedReport>& corpus, const OrganDictionaries& dicts,
                              const RbaConfig& cfg) {
    if (corpus.empty()) throw EmptyEval("round-trip check on an empty corpus");
    RoundTrip rt;
    for (const auto& g : corpus) {
        const auto labels = label_report(g.report, dicts, cfg, true);
        for (const auto& [organ, truth] : g.truth) {
            ++rt.comparisons;
            const auto it = labels.find(organ);
            if (it == labels.end()) continue;
            const auto got = LabelRecord::from(g.record.report_id, it->second, dicts.at(organ));
            if (got.uncertain) ++rt.rba_uncertain;
            if (got.same_flags(truth)) ++rt.agreements;
        }
    }
    return rt;
}

void write_truth_records(std::ostream& out, const std::vector<GeneratedReport>& corpus, const OrganDictionaries& dicts) {
    for (const auto& g : corpus)
        for (const auto& [organ, truth] : g.truth) write_label_record(out, truth, dicts.at(organ));
}

}  // namespace radlabel
