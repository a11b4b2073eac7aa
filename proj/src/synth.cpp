#include "denc/synth.hpp"

#include <cmath>
#include <sstream>

#include "denc/common.hpp"
#include "denc/rng.hpp"
#include "denc/taxonomy.hpp"

namespace denc {

namespace {

constexpr int kClusterWords = 8;

const char* const kLabels[26] = {
    "alpha", "bravo",  "charlie", "delta",   "echo",   "foxtrot", "golf",    "hotel",   "india",
    "juliett", "kilo", "lima",    "mike",    "november", "oscar", "papa",    "quebec",  "romeo",
    "sierra", "tango", "uniform", "victor",  "whiskey", "xray",   "yankee",  "zulu"};

double snap32(double x) { return static_cast<double>(static_cast<float>(x)); }

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string instantiate(const std::vector<std::string>& template_words, const std::string& label,
                        const std::string& unique, const std::vector<std::string>& cluster,
                        Rng& rng) {
  std::string out;
  for (const std::string& tok : template_words) {
    const std::string& word = tok == "{label}"    ? label
                              : tok == "{unique}" ? unique
                              : tok == "{w}" ? cluster[rng.below(cluster.size())]
                                             : tok;
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::string zero_padded(int value, std::size_t width) {
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return digits;
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synth spec: " + msg); };
  if (prototype_count < 1) fail("prototype_count must be >= 1");
  if (prototype_count > 26) fail("prototype_count must be <= 26");
  if (shots_per_prototype < 1) fail("shots_per_prototype must be >= 1");
  if (frames_min < 1) fail("frames_min must be >= 1");
  if (frames_max < frames_min) fail("frames_max must be >= frames_min");
  if (feature_dim < 1) fail("feature_dim must be >= 1");
  if (!(noise >= 0.0)) fail("noise must be >= 0");
  if (caption_templates.empty()) fail("at least one caption template is required");
  for (const std::string& tmpl : caption_templates) {
    const std::vector<std::string> words = split_words(tmpl);
    if (words.empty()) fail("caption template must not be blank");
    for (const std::string& tok : words) {
      if (!tok.empty() && tok.front() == '{' && tok != "{label}" && tok != "{unique}" &&
          tok != "{w}") {
        fail("unknown placeholder '" + tok + "' in caption template");
      }
    }
  }
  if (!(judgment_rate > 0.0) || judgment_rate > 1.0) fail("judgment_rate must be in (0, 1]");
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticCorpus out;

  std::vector<std::vector<std::string>> templates;
  for (const std::string& tmpl : spec.caption_templates) templates.push_back(split_words(tmpl));
  const std::size_t pad = std::to_string(spec.shots_per_prototype - 1).size();

  std::vector<std::string> cluster_vocab, unique_vocab;
  std::size_t global = 0;
  for (int p = 0; p < spec.prototype_count; ++p) {
    const std::string label = kLabels[p];
    out.concept_ids.push_back(label);
    out.vocabulary.push_back(label);

    std::vector<double> centroid(static_cast<std::size_t>(spec.feature_dim));
    double norm = 0;
    for (double& c : centroid) {
      c = rng.normal();
      norm += c * c;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      centroid[0] = 1.0;
      norm = 1.0;
    }
    for (double& c : centroid) c /= norm;

    std::vector<std::string> cluster;
    for (int j = 0; j < kClusterWords; ++j) {
      cluster.push_back(label + std::to_string(j + 1));
      cluster_vocab.push_back(cluster.back());
    }

    for (int k = 0; k < spec.shots_per_prototype; ++k, ++global) {
      FeatureSequence shot;
      shot.shot_id = label + "_s" + zero_padded(k, pad);
      const std::int64_t frames =
          spec.frames_min +
          static_cast<std::int64_t>(rng.below(
              static_cast<std::uint64_t>(spec.frames_max - spec.frames_min + 1)));
      shot.frames = Tensor64({frames, spec.feature_dim});
      for (std::int64_t f = 0; f < frames; ++f) {
        for (std::int64_t d = 0; d < spec.feature_dim; ++d) {
          shot.frames[f * spec.feature_dim + d] =
              snap32(centroid[static_cast<std::size_t>(d)] + spec.noise * rng.normal());
        }
      }

      const std::string unique = label + "u" + std::to_string(k);
      unique_vocab.push_back(unique);
      const std::string train_text =
          instantiate(templates[global % templates.size()], label, unique, cluster, rng);
      const std::string val_text =
          instantiate(templates[(global + 1) % templates.size()], label, unique, cluster, rng);
      out.train_captions.push_back({shot.shot_id, train_text});
      out.val_captions.push_back({shot.shot_id, val_text});
      out.shots.push_back(std::move(shot));
    }
  }
  out.vocabulary.insert(out.vocabulary.end(), cluster_vocab.begin(), cluster_vocab.end());
  out.vocabulary.insert(out.vocabulary.end(), unique_vocab.begin(), unique_vocab.end());

  // Qrels: one topic per prototype; every shot of the corpus is pooled in a
  // single stratum. At judgment_rate 1 the pool is fully judged (exact-AP
  // oracle territory); below 1 a per-topic random subset keeps its judgments
  // and the rest become pooled-but-unjudged.
  std::ostringstream qrels;
  for (int p = 0; p < spec.prototype_count; ++p) {
    const std::string& topic = out.concept_ids[static_cast<std::size_t>(p)];
    std::vector<char> judged(out.shots.size(), 1);
    if (spec.judgment_rate < 1.0) {
      std::vector<std::size_t> order(out.shots.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      const auto keep = static_cast<std::size_t>(std::max<long long>(
          1, std::llround(spec.judgment_rate * static_cast<double>(order.size()))));
      judged.assign(out.shots.size(), 0);
      for (std::size_t i = 0; i < keep && i < order.size(); ++i) judged[order[i]] = 1;
    }
    const std::size_t per = static_cast<std::size_t>(spec.shots_per_prototype);
    for (std::size_t i = 0; i < out.shots.size(); ++i) {
      const bool relevant = i / per == static_cast<std::size_t>(p);
      const int judgment = judged[i] ? (relevant ? 1 : 0) : -1;
      qrels << topic << " all " << out.shots[i].shot_id << ' ' << judgment << '\n';
    }
  }
  out.qrels_text = qrels.str();

  // Taxonomy fragment: one level-1 concept per prototype, categories assigned
  // round-robin, three cluster-word description sentences as augmentations.
  std::ostringstream tax;
  for (int p = 0; p < spec.prototype_count; ++p) {
    const std::string& label = out.concept_ids[static_cast<std::size_t>(p)];
    auto cw = [&](int j) { return label + std::to_string(j + 1); };
    tax << label << '\t' << label << '\t'
        << category_name(kAllCategories[static_cast<std::size_t>(p) % kAllCategories.size()])
        << "\t1\t-\t" << "prototype concept " << label << '\t' << label << ' ' << cw(0) << ' '
        << cw(1) << ' ' << cw(2) << '|' << label << ' ' << cw(3) << ' ' << cw(4) << ' ' << cw(5)
        << '|' << label << ' ' << cw(6) << ' ' << cw(7) << ' ' << cw(0) << '\n';
  }
  out.taxonomy_text = tax.str();
  return out;
}

}  // namespace denc
