#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "denc/evaluation.hpp"
#include "denc/rng.hpp"
#include "denc/synth.hpp"
#include "denc/taxonomy.hpp"
#include "denc/text.hpp"
#include "denc/train.hpp"

using namespace denc;

namespace {

SyntheticCorpusSpec small_spec() {
  SyntheticCorpusSpec spec;
  spec.prototype_count = 3;
  spec.shots_per_prototype = 6;
  spec.feature_dim = 8;
  spec.seed = 9;
  return spec;
}

}  // namespace

TEST_CASE("corpus generation is deterministic and sized by the spec") {
  const SyntheticCorpusSpec spec = small_spec();
  const SyntheticCorpus a = generate_synthetic_corpus(spec);
  const SyntheticCorpus b = generate_synthetic_corpus(spec);

  REQUIRE(a.shots.size() == 18);
  CHECK(a.train_captions.size() == 18);
  CHECK(a.val_captions.size() == 18);
  CHECK(a.concept_ids == std::vector<std::string>{"alpha", "bravo", "charlie"});
  // labels + 8 cluster words per prototype + one unique word per shot
  CHECK(a.vocabulary.size() == 3 + 3 * 8 + 18);

  REQUIRE(b.shots.size() == a.shots.size());
  for (std::size_t i = 0; i < a.shots.size(); ++i) {
    CHECK(a.shots[i].shot_id == b.shots[i].shot_id);
    const std::int64_t n = a.shots[i].frame_count();
    CHECK(n >= spec.frames_min);
    CHECK(n <= spec.frames_max);
    CHECK(a.shots[i].dim() == spec.feature_dim);
    REQUIRE(b.shots[i].frames.numel() == a.shots[i].frames.numel());
    CHECK(std::memcmp(a.shots[i].frames.data(), b.shots[i].frames.data(),
                      sizeof(double) * static_cast<std::size_t>(a.shots[i].frames.numel())) == 0);
    CHECK(a.train_captions[i].caption == b.train_captions[i].caption);
    CHECK(a.val_captions[i].caption == b.val_captions[i].caption);
  }
  CHECK(a.qrels_text == b.qrels_text);
  CHECK(a.taxonomy_text == b.taxonomy_text);
  CHECK(a.vocabulary == b.vocabulary);

  SyntheticCorpusSpec other = spec;
  other.seed = 10;
  const SyntheticCorpus c = generate_synthetic_corpus(other);
  CHECK(std::memcmp(c.shots[0].frames.data(), a.shots[0].frames.data(),
                    sizeof(double) *
                        static_cast<std::size_t>(std::min(c.shots[0].frames.numel(),
                                                          a.shots[0].frames.numel()))) != 0);
}

TEST_CASE("zero noise collapses every frame of a prototype onto its centroid") {
  SyntheticCorpusSpec spec = small_spec();
  spec.noise = 0.0;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);

  const std::size_t per = static_cast<std::size_t>(spec.shots_per_prototype);
  for (std::size_t p = 0; p < 3; ++p) {
    const Tensor64& first = corpus.shots[p * per].frames;
    for (std::size_t k = 0; k < per; ++k) {
      const Tensor64& frames = corpus.shots[p * per + k].frames;
      for (std::int64_t f = 0; f < frames.shape()[0]; ++f) {
        for (std::int64_t d = 0; d < spec.feature_dim; ++d) {
          CHECK(frames[f * spec.feature_dim + d] == first[d]);
        }
      }
    }
  }
  // Distinct prototypes sit at distinct centroids.
  CHECK(std::memcmp(corpus.shots[0].frames.data(), corpus.shots[per].frames.data(),
                    sizeof(double) * static_cast<std::size_t>(spec.feature_dim)) != 0);
}

TEST_CASE("a nearest-centroid classifier recovers the prototypes at default noise") {
  SyntheticCorpusSpec spec;  // the 5 x 40, D=32, noise 0.1 defaults
  spec.seed = 17;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  REQUIRE(corpus.shots.size() == 200);

  const std::size_t per = 40;
  // Oracle route: estimate each prototype's centroid as the mean of all frames
  // of its shots, then classify every shot by its mean frame.
  std::vector<std::vector<double>> centroids(5, std::vector<double>(32, 0.0));
  for (std::size_t p = 0; p < 5; ++p) {
    std::size_t frames = 0;
    for (std::size_t k = 0; k < per; ++k) {
      const Tensor64& t = corpus.shots[p * per + k].frames;
      for (std::int64_t f = 0; f < t.shape()[0]; ++f) {
        for (std::int64_t d = 0; d < 32; ++d) centroids[p][static_cast<std::size_t>(d)] += t[f * 32 + d];
        ++frames;
      }
    }
    for (double& c : centroids[p]) c /= static_cast<double>(frames);
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < corpus.shots.size(); ++i) {
    const Tensor64& t = corpus.shots[i].frames;
    std::vector<double> mean(32, 0.0);
    for (std::int64_t f = 0; f < t.shape()[0]; ++f) {
      for (std::int64_t d = 0; d < 32; ++d) mean[static_cast<std::size_t>(d)] += t[f * 32 + d];
    }
    for (double& m : mean) m /= static_cast<double>(t.shape()[0]);

    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < 5; ++p) {
      double dist = 0;
      for (std::size_t d = 0; d < 32; ++d) {
        const double diff = mean[d] - centroids[p][d];
        dist += diff * diff;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = p;
      }
    }
    correct += best == i / per ? 1 : 0;
  }
  CHECK(static_cast<double>(correct) / 200.0 > 0.95);
}

TEST_CASE("captions follow the templates and stay inside prototype vocabulary") {
  const SyntheticCorpusSpec spec = small_spec();
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  const std::set<std::string> vocab(corpus.vocabulary.begin(), corpus.vocabulary.end());

  const std::size_t per = static_cast<std::size_t>(spec.shots_per_prototype);
  for (std::size_t i = 0; i < corpus.shots.size(); ++i) {
    const std::string& label = corpus.concept_ids[i / per];
    const std::string unique = label + "u" + std::to_string(i % per);

    long label_uses = 0;
    for (const CaptionPair* pair : {&corpus.train_captions[i], &corpus.val_captions[i]}) {
      CHECK(pair->shot_id == corpus.shots[i].shot_id);
      const std::vector<std::string> words = tokenize(pair->caption);
      REQUIRE(words.size() == 4);  // default templates have four slots
      label_uses += std::count(words.begin(), words.end(), label);
      CHECK(std::count(words.begin(), words.end(), unique) == 1);
      for (const std::string& w : words) {
        CHECK(vocab.count(w) == 1);
        // Cluster words carry the prototype's label as a prefix.
        CHECK(w.compare(0, label.size(), label) == 0);
      }
    }
    // Exactly one of the default templates carries {label}.
    CHECK(label_uses == 1);
    // The default template pair keeps held-out captions textually distinct.
    CHECK(corpus.train_captions[i].caption != corpus.val_captions[i].caption);
  }
}

TEST_CASE("qrels parse into fully judged single-stratum pools") {
  const SyntheticCorpusSpec spec = small_spec();
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  const JudgmentPool pool = JudgmentPool::load_string(corpus.qrels_text);

  REQUIRE(pool.size() == 3);
  CHECK(pool.topic_ids() == corpus.concept_ids);
  for (const std::string& topic_id : corpus.concept_ids) {
    const TopicPool& topic = pool.topic(topic_id);
    REQUIRE(topic.strata.size() == 1);
    const Stratum& stratum = topic.strata[0];
    CHECK(stratum.pooled.size() == 18);
    CHECK(stratum.rate() == 1.0);
    CHECK(stratum.relevant.size() == 6);
    CHECK(stratum.nonrelevant.size() == 12);
    CHECK(topic.estimated_relevant() == 6.0);
  }
  // Relevant shots are exactly the prototype's own.
  const Stratum& alpha = pool.topic("alpha").strata[0];
  for (const std::string& shot : alpha.relevant) {
    CHECK(shot.compare(0, 6, "alpha_") == 0);
  }
}

TEST_CASE("subsampled qrels expose the requested judgment rate") {
  SyntheticCorpusSpec spec = small_spec();
  spec.judgment_rate = 0.5;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  const JudgmentPool pool = JudgmentPool::load_string(corpus.qrels_text);

  for (const std::string& topic_id : corpus.concept_ids) {
    const Stratum& stratum = pool.topic(topic_id).strata[0];
    CHECK(stratum.pooled.size() == 18);
    CHECK(stratum.judged_count() == 9);  // llround(0.5 * 18)
    CHECK(stratum.rate() == doctest::Approx(0.5));
  }
}

TEST_CASE("the taxonomy fragment validates and expands into label plus descriptions") {
  const SyntheticCorpusSpec spec = small_spec();
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  const ConceptTree tree = ConceptTree::load_string(corpus.taxonomy_text);
  const std::set<std::string> vocab(corpus.vocabulary.begin(), corpus.vocabulary.end());

  REQUIRE(tree.size() == 3);
  CHECK(tree.level1_count() == 3);
  CHECK(tree.get("alpha").category == Category::kEconomic);
  CHECK(tree.get("bravo").category == Category::kSocial);
  CHECK(tree.get("charlie").category == Category::kDemographic);

  for (const std::string& id : corpus.concept_ids) {
    const AugmentedQuery query = tree.expand_query(id);
    REQUIRE(query.sentences.size() == 4);  // label + three descriptions
    CHECK(query.sentences[0] == id);
    for (std::size_t s = 1; s < 4; ++s) {
      const std::vector<std::string> words = tokenize(query.sentences[s]);
      REQUIRE(words.size() == 4);
      CHECK(words[0] == id);
      for (const std::string& w : words) CHECK(vocab.count(w) == 1);
    }
  }
}

TEST_CASE("spec validation rejects out-of-range fields") {
  auto expect_reject = [](auto mutate) {
    SyntheticCorpusSpec spec;
    mutate(spec);
    CHECK_THROWS_AS(generate_synthetic_corpus(spec), ConfigError);
  };
  expect_reject([](SyntheticCorpusSpec& s) { s.prototype_count = 0; });
  expect_reject([](SyntheticCorpusSpec& s) { s.prototype_count = 27; });
  expect_reject([](SyntheticCorpusSpec& s) { s.shots_per_prototype = 0; });
  expect_reject([](SyntheticCorpusSpec& s) { s.frames_min = 0; });
  expect_reject([](SyntheticCorpusSpec& s) { s.frames_max = s.frames_min - 1; });
  expect_reject([](SyntheticCorpusSpec& s) { s.feature_dim = 0; });
  expect_reject([](SyntheticCorpusSpec& s) { s.noise = -0.1; });
  expect_reject([](SyntheticCorpusSpec& s) { s.caption_templates.clear(); });
  expect_reject([](SyntheticCorpusSpec& s) { s.caption_templates = {"  "}; });
  expect_reject([](SyntheticCorpusSpec& s) { s.caption_templates = {"{label} {bogus}"}; });
  expect_reject([](SyntheticCorpusSpec& s) { s.judgment_rate = 0.0; });
  expect_reject([](SyntheticCorpusSpec& s) { s.judgment_rate = 1.5; });

  SyntheticCorpusSpec ok;
  ok.prototype_count = 26;
  ok.shots_per_prototype = 1;
  ok.frames_min = 1;
  ok.frames_max = 1;
  ok.feature_dim = 2;
  CHECK(generate_synthetic_corpus(ok).shots.size() == 26);
}

TEST_CASE("mean training loss decreases over the first epochs of a synthetic corpus") {
  SyntheticCorpusSpec spec;  // 5 x 40 = 200 caption pairs
  spec.seed = 23;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);

  Rng table_rng(spec.seed + 1);
  const EmbeddingTable table = random_embedding_table(corpus.vocabulary, 16, table_rng);

  EncoderConfig enc;
  enc.feature_dim = spec.feature_dim;
  enc.embed_dim = table.dim();
  enc.bow_dim = static_cast<std::int64_t>(table.size());
  enc.hidden = 16;
  enc.common_dim = 16;
  enc.conv_widths = {2, 3};
  enc.conv_filters = 8;

  TrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.batch_size = 16;
  cfg.epochs = 10;
  cfg.seed = 5;

  const TrainedModel<double> model =
      fit<double>(corpus.train_captions, corpus.val_captions, corpus.shots, table, enc, cfg);
  REQUIRE(model.history.size() == 10);
  for (std::size_t e = 1; e < model.history.size(); ++e) {
    INFO("epoch ", e + 1, ": ", model.history[e].mean_loss, " vs ",
         model.history[e - 1].mean_loss);
    CHECK(model.history[e].mean_loss < model.history[e - 1].mean_loss);
  }
  // Ten epochs already move the held-out ranking: the median rank of the
  // matching shot (chance: ~100 of 200) falls well below its epoch-1 level.
  CHECK(model.history.back().median_rank < 0.7 * model.history.front().median_rank);
  CHECK(model.history.back().recall5 > 0.08);
}
