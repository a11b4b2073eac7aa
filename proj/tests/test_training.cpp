#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "denc/embedding.hpp"
#include "denc/encoder.hpp"
#include "denc/loss.hpp"
#include "denc/rng.hpp"
#include "denc/train.hpp"

using namespace denc;

namespace {

EncoderConfig tiny_train_config() {
  EncoderConfig cfg;
  cfg.feature_dim = 4;
  cfg.embed_dim = 3;
  cfg.bow_dim = 5;
  cfg.hidden = 2;
  cfg.common_dim = 3;
  cfg.conv_widths = {2, 3};
  cfg.conv_filters = 2;
  return cfg;
}

Tensor64 random_row(int d, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(d));
  for (double& x : v) x = rng.normal();
  return Tensor64::row(std::move(v));
}

Tensor64 unit_row(int d, int axis) {
  Tensor64 t = Tensor64::zeros(1, d);
  t.at(0, axis) = 1.0;
  return t;
}

// Reference hardest-negative predicate: zero loss demands every matching pair
// beat all of its row and column negatives by at least the margin.
bool margins_satisfied(const Tensor64& s, double margin) {
  for (std::int64_t i = 0; i < s.rows(); ++i) {
    for (std::int64_t j = 0; j < s.cols(); ++j) {
      if (j == i) continue;
      if (s.at(i, i) - s.at(i, j) < margin) return false;
      if (s.at(j, j) - s.at(i, j) < margin) return false;
    }
  }
  return true;
}

Tensor64 random_similarity(std::int64_t b, Rng& rng) {
  Tensor64 s = Tensor64::zeros(b, b);
  for (std::int64_t i = 0; i < s.numel(); ++i) s[i] = rng.uniform(-1.0, 1.0);
  return s;
}

// Forward-only loss of a two-pair toy batch, used as the target function for
// the finite-difference sweep.
double batch_loss(const EncoderParams<double>& params, const std::vector<Tensor64>& frames,
                  const std::vector<std::vector<int>>& tokens, const Tensor64& table,
                  double margin) {
  Tape64 tape;
  TapeEncoder<double> enc(tape, params, /*trainable=*/false);
  std::vector<Value> videos, texts;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    videos.push_back(enc.encode_video(frames[i]).common);
    texts.push_back(enc.encode_text(tokens[i], table).common);
  }
  const Value loss = tape.ranking_loss(similarity_matrix_on_tape(tape, videos, texts), margin);
  return tape.value(loss)[0];
}

}  // namespace

TEST_CASE("similarity matrix of aligned unit vectors has a unit diagonal") {
  std::vector<Tensor64> basis = {unit_row(3, 0), unit_row(3, 1), unit_row(3, 2)};
  const Tensor64 s = similarity_matrix(basis, basis);
  REQUIRE(s.rows() == 3);
  REQUIRE(s.cols() == 3);
  for (std::int64_t i = 0; i < 3; ++i) {
    for (std::int64_t j = 0; j < 3; ++j) {
      CHECK(s.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("similarity matrix agrees with pairwise cosine similarity") {
  Rng rng(41);
  std::vector<Tensor64> videos, texts;
  for (int i = 0; i < 3; ++i) {
    videos.push_back(random_row(5, rng));
    texts.push_back(random_row(5, rng));
  }
  const Tensor64 s = similarity_matrix(videos, texts);
  for (std::int64_t i = 0; i < 3; ++i) {
    for (std::int64_t j = 0; j < 3; ++j) {
      CHECK(s.at(i, j) == doctest::Approx(similarity(videos[i], texts[j])).epsilon(1e-12));
    }
  }
}

TEST_CASE("similarity matrix handles a single pair and rejects bad batches") {
  Rng rng(42);
  const Tensor64 v = random_row(4, rng);
  const Tensor64 t = random_row(4, rng);
  const Tensor64 s = similarity_matrix({v}, {t});
  REQUIRE(s.rows() == 1);
  CHECK(s.at(0, 0) == doctest::Approx(similarity(v, t)).epsilon(1e-12));

  CHECK_THROWS_AS(similarity_matrix({}, {}), DataError);
  CHECK_THROWS_AS(similarity_matrix({v}, {t, t}), DataError);
  CHECK_THROWS_AS(similarity_matrix({v}, {random_row(3, rng)}), DataError);
}

TEST_CASE("ranking loss is zero when all margins are satisfied") {
  const Tensor64 s = Tensor64::matrix(2, 2, {1.0, 0.0, 0.0, 1.0});
  CHECK(ranking_loss(s, 0.2) == 0.0);
}

TEST_CASE("ranking loss matches the worked two-pair example") {
  const Tensor64 s = Tensor64::matrix(2, 2, {0.5, 0.9, 0.1, 0.4});
  CHECK(ranking_loss(s, 0.2) == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("ranking loss rejects non-square or single-pair input") {
  CHECK_THROWS_AS(ranking_loss(Tensor64::zeros(2, 3), 0.2), DataError);
  CHECK_THROWS_AS(ranking_loss(Tensor64::scalar(1.0), 0.2), DataError);
}

TEST_CASE("tape ranking loss agrees with the plain reference") {
  Rng rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t b = 2 + static_cast<std::int64_t>(rng.below(5));
    const Tensor64 s = random_similarity(b, rng);
    Tape64 tape;
    const Value leaf = tape.constant(s);
    const double on_tape = tape.value(tape.ranking_loss(leaf, 0.2))[0];
    CHECK(on_tape == doctest::Approx(ranking_loss(s, 0.2)).epsilon(1e-12));
  }
}

TEST_CASE("ranking loss is invariant under relabeling the pairs") {
  Rng rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t b = 2 + static_cast<std::int64_t>(rng.below(4));
    const Tensor64 s = random_similarity(b, rng);

    std::vector<std::size_t> perm(static_cast<std::size_t>(b));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    Tensor64 relabeled = Tensor64::zeros(b, b);
    for (std::int64_t i = 0; i < b; ++i) {
      for (std::int64_t j = 0; j < b; ++j) {
        relabeled.at(i, j) = s.at(static_cast<std::int64_t>(perm[static_cast<std::size_t>(i)]),
                                  static_cast<std::int64_t>(perm[static_cast<std::size_t>(j)]));
      }
    }
    CHECK(ranking_loss(relabeled, 0.2) == doctest::Approx(ranking_loss(s, 0.2)).epsilon(1e-12));
  }
}

TEST_CASE("ranking loss is zero exactly when every margin is met") {
  Rng rng(45);
  int zero_cases = 0;
  for (int trial = 0; trial < 400; ++trial) {
    Tensor64 s = random_similarity(3, rng);
    // Mix in diagonally dominant matrices so both outcomes actually occur.
    if (trial % 2 == 0) {
      for (std::int64_t i = 0; i < 3; ++i) s.at(i, i) += 1.3;
    }
    const bool zero = ranking_loss(s, 0.2) == 0.0;
    CHECK(zero == margins_satisfied(s, 0.2));
    if (zero) ++zero_cases;
  }
  CHECK(zero_cases > 50);        // both branches of the property were exercised
  CHECK(zero_cases < 350);
}

TEST_CASE("ranking loss gradient matches finite differences") {
  // Entries chosen away from hinge kinks and max ties.
  const Tensor64 s = Tensor64::matrix(3, 3, {0.61, 0.12, -0.33, 0.48, 0.05, 0.27,  //
                                             -0.14, 0.72, 0.39});
  const GradCheckBuild build = [](Tape64& tape, const std::vector<Value>& leaves) {
    return tape.ranking_loss(leaves[0], 0.2);
  };
  CHECK(grad_check(build, {s}, 1e-6) < 1e-6);
}

TEST_CASE("end-to-end encoder gradients match finite differences") {
  const EncoderConfig cfg = tiny_train_config();
  EncoderParams<double> params = EncoderParams<double>::seeded(cfg, 97);
  Rng rng(46);

  std::vector<Tensor64> frames;
  frames.push_back(Tensor64({3, cfg.feature_dim}));
  frames.push_back(Tensor64({2, cfg.feature_dim}));
  for (Tensor64& f : frames) {
    for (std::int64_t i = 0; i < f.numel(); ++i) f[i] = rng.normal();
  }
  const std::vector<std::vector<int>> tokens = {{0, 2, 4, 1}, {3, 1, 0}};
  Tensor64 table({6, cfg.embed_dim});
  for (std::int64_t i = 0; i < table.numel(); ++i) table[i] = rng.normal();

  const double margin = 0.2;
  const double base = batch_loss(params, frames, tokens, table, margin);
  REQUIRE(base > 0);  // hinge active, otherwise every gradient is trivially zero

  // Analytic gradients in canonical parameter order.
  std::vector<Tensor64> grads;
  {
    Tape64 tape;
    TapeEncoder<double> enc(tape, params, /*trainable=*/true);
    std::vector<Value> videos, texts;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      videos.push_back(enc.encode_video(frames[i]).common);
      texts.push_back(enc.encode_text(tokens[i], table).common);
    }
    const Value loss = tape.ranking_loss(similarity_matrix_on_tape(tape, videos, texts), margin);
    CHECK(tape.value(loss)[0] == doctest::Approx(base).epsilon(1e-12));
    tape.backward(loss);
    for (const Value v : enc.parameter_values()) grads.push_back(tape.grad(v));
  }

  const double step = 1e-6;
  double worst = 0;
  std::size_t nonzero = 0, total = 0;
  std::size_t tensor_count = 0;
  params.for_each_param([&](const std::string&, const Tensor64&) { ++tensor_count; });
  for (std::size_t target = 0; target < tensor_count; ++target) {
    for (std::int64_t k = 0; k < grads[target].numel(); ++k) {
      auto nudged = [&](double delta) {
        EncoderParams<double> p = params;
        std::size_t ti = 0;
        p.for_each_param([&](const std::string&, Tensor64& t) {
          if (ti == target) t[k] += delta;
          ++ti;
        });
        return batch_loss(p, frames, tokens, table, margin);
      };
      const double numeric = (nudged(step) - nudged(-step)) / (2 * step);
      const double analytic = grads[target][k];
      const double err = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      worst = std::max(worst, err);
      if (analytic != 0.0) ++nonzero;
      ++total;
    }
  }
  CHECK(worst < 1e-4);
  CHECK(static_cast<std::int64_t>(total) == params.scalar_count());
  CHECK(nonzero > total / 4);  // the check must not pass on an all-zero gradient
}

TEST_CASE("a zero learning rate leaves parameters bitwise unchanged") {
  const EncoderConfig cfg = tiny_train_config();
  EncoderParams<double> params = EncoderParams<double>::seeded(cfg, 11);
  const EncoderParams<double> before = params;

  Rng data_rng(47);
  std::vector<Tensor<double>> shot_frames;
  for (int i = 0; i < 3; ++i) {
    Tensor64 f({2, cfg.feature_dim});
    for (std::int64_t k = 0; k < f.numel(); ++k) f[k] = data_rng.normal();
    shot_frames.push_back(f);
  }
  Tensor64 table({6, cfg.embed_dim});
  for (std::int64_t k = 0; k < table.numel(); ++k) table[k] = data_rng.normal();

  std::vector<PreparedPair> pairs = {{0, {1, 2}}, {1, {0, 3}}, {2, {4, 2, 1}}, {0, {3}}};

  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.batch_size = 2;
  AdamState<double> opt = AdamState<double>::init(params);
  Rng rng(5);
  const double loss = train_epoch(pairs, shot_frames, table, params, opt, tc, rng);
  CHECK(std::isfinite(loss));
  CHECK(loss >= 0);

  std::vector<const Tensor64*> now, then;
  params.for_each_param([&](const std::string&, const Tensor64& t) { now.push_back(&t); });
  before.for_each_param([&](const std::string&, const Tensor64& t) { then.push_back(&t); });
  REQUIRE(now.size() == then.size());
  for (std::size_t i = 0; i < now.size(); ++i) {
    REQUIRE(now[i]->numel() == then[i]->numel());
    CHECK(std::memcmp(now[i]->data(), then[i]->data(),
                      sizeof(double) * static_cast<std::size_t>(now[i]->numel())) == 0);
  }
}

TEST_CASE("a lone leftover pair is dropped and the mean is per counted pair") {
  const EncoderConfig cfg = tiny_train_config();
  EncoderParams<double> params = EncoderParams<double>::seeded(cfg, 12);

  Rng data_rng(48);
  Tensor64 f({2, cfg.feature_dim});
  for (std::int64_t k = 0; k < f.numel(); ++k) f[k] = data_rng.normal();
  std::vector<Tensor<double>> shot_frames = {f};
  Tensor64 table({6, cfg.embed_dim});
  for (std::int64_t k = 0; k < table.numel(); ++k) table[k] = data_rng.normal();

  // Five identical pairs: every similarity entry is equal, so each pair
  // contributes exactly 2 * margin regardless of batch composition. A leftover
  // batch of one would be rejected by the loss, so finishing cleanly with mean
  // 2 * margin shows the leftover was dropped.
  std::vector<PreparedPair> pairs(5, PreparedPair{0, {1, 2}});

  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.batch_size = 2;
  AdamState<double> opt = AdamState<double>::init(params);
  Rng rng(6);
  const double mean = train_epoch(pairs, shot_frames, table, params, opt, tc, rng);
  CHECK(mean == doctest::Approx(2 * tc.margin).epsilon(1e-12));
}

TEST_CASE("training a single pair or an empty set is rejected") {
  const EncoderConfig cfg = tiny_train_config();
  EncoderParams<double> params = EncoderParams<double>::seeded(cfg, 13);
  std::vector<Tensor<double>> shot_frames = {Tensor64({2, cfg.feature_dim})};
  const Tensor64 table = Tensor64::zeros(6, cfg.embed_dim);

  TrainConfig tc;
  AdamState<double> opt = AdamState<double>::init(params);
  Rng rng(7);
  CHECK_THROWS_AS(train_epoch<double>({}, shot_frames, table, params, opt, tc, rng), DataError);
  const std::vector<PreparedPair> one = {{0, {1}}};
  CHECK_THROWS_AS(train_epoch(one, shot_frames, table, params, opt, tc, rng), DataError);
}

TEST_CASE("a non-finite loss names the failing batch") {
  const EncoderConfig cfg = tiny_train_config();
  EncoderParams<double> params = EncoderParams<double>::seeded(cfg, 14);
  params.video.fc_w[0] = std::numeric_limits<double>::quiet_NaN();

  Rng data_rng(49);
  Tensor64 f({2, cfg.feature_dim});
  for (std::int64_t k = 0; k < f.numel(); ++k) f[k] = data_rng.normal();
  std::vector<Tensor<double>> shot_frames = {f};
  Tensor64 table({6, cfg.embed_dim});
  for (std::int64_t k = 0; k < table.numel(); ++k) table[k] = data_rng.normal();
  const std::vector<PreparedPair> pairs = {{0, {1, 2}}, {0, {0, 3}}};

  TrainConfig tc;
  AdamState<double> opt = AdamState<double>::init(params);
  Rng rng(8);
  try {
    train_epoch(pairs, shot_frames, table, params, opt, tc, rng);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("training batch 0") != std::string::npos);
  }
}

TEST_CASE("prepared pairs resolve shot positions and reject bad captions") {
  const std::vector<std::string> words = {"red", "green", "blue", "dog"};
  Rng rng(50);
  const EmbeddingTable table = random_embedding_table(words, 3, rng);

  std::map<std::string, std::size_t> index = {{"s1", 0}, {"s2", 1}};
  const std::vector<CaptionPair> good = {{"s2", "a blue dog"}, {"s1", "red red green"}};
  const std::vector<PreparedPair> prepared = prepare_pairs(good, index, table);
  REQUIRE(prepared.size() == 2);
  CHECK(prepared[0].shot == 1);
  CHECK(prepared[0].tokens == std::vector<int>{2, 3});  // "a" is out of vocabulary
  CHECK(prepared[1].shot == 0);
  CHECK(prepared[1].tokens == std::vector<int>{0, 0, 1});

  CHECK_THROWS_AS(prepare_pairs({}, index, table), DataError);
  CHECK_THROWS_WITH_AS(prepare_pairs({{"ghost", "red"}}, index, table),
                       "caption references unknown shot 'ghost'", DataError);
  CHECK_THROWS_AS(prepare_pairs({{"s1", "a the of"}}, index, table), DataError);
}

TEST_CASE("recall from aligned vectors is perfect") {
  std::vector<Tensor64> shots = {unit_row(4, 0), unit_row(4, 1), unit_row(4, 2)};
  const RecallReport report = recall_from_commons(shots, shots, {0, 1, 2}, {1, 5});
  CHECK(report.recall_at.at(1) == 1.0);
  CHECK(report.recall_at.at(5) == 1.0);
  CHECK(report.median_rank == 1.0);
}

TEST_CASE("recall ranks by similarity and averages the middle ranks") {
  std::vector<Tensor64> shots = {unit_row(3, 0), unit_row(3, 1), unit_row(3, 2)};
  // Caption 0 matches shot 0 exactly (rank 1); caption 1 matches shot 1 but is
  // closer to both other shots (rank 3). Median of {1, 3} is 2.
  std::vector<Tensor64> captions = {unit_row(3, 0),
                                    Tensor64::matrix(1, 3, {0.9, 0.1, 0.95})};
  const RecallReport report = recall_from_commons(shots, captions, {0, 1}, {1, 2, 3});
  CHECK(report.recall_at.at(1) == 0.5);
  CHECK(report.recall_at.at(2) == 0.5);
  CHECK(report.recall_at.at(3) == 1.0);
  CHECK(report.median_rank == 2.0);
}

TEST_CASE("recall rejects invalid cutoffs and empty input") {
  std::vector<Tensor64> shots = {unit_row(2, 0)};
  CHECK_THROWS_AS(recall_from_commons(shots, shots, {0}, {0}), ConfigError);
  CHECK_THROWS_AS(recall_from_commons(shots, {}, {}, {1}), DataError);
}

TEST_CASE("an untrained encoder ranks validation shots near chance") {
  const EncoderConfig cfg = tiny_train_config();
  const EncoderParams<double> params = EncoderParams<double>::seeded(cfg, 15);

  std::vector<std::string> words;
  for (int i = 0; i < 40; ++i) words.push_back("w" + std::to_string(i));
  Rng rng(51);
  const EmbeddingTable table = random_embedding_table(words, cfg.embed_dim, rng);

  std::vector<FeatureSequence> shots;
  std::vector<CaptionPair> pairs;
  for (int i = 0; i < 20; ++i) {
    FeatureSequence s;
    s.shot_id = "shot" + std::to_string(i);
    s.frames = Tensor64({3, cfg.feature_dim});
    for (std::int64_t k = 0; k < s.frames.numel(); ++k) s.frames[k] = rng.normal();
    shots.push_back(std::move(s));
    pairs.push_back({"shot" + std::to_string(i),
                     "w" + std::to_string(2 * i) + " w" + std::to_string(2 * i + 1)});
  }

  const std::vector<PreparedPair> prepared = prepare_pairs(pairs, index_shots(shots), table);
  const RecallReport report = validation_recall(prepared, shots, table, params, {1, 5});
  CHECK(report.recall_at.at(1) <= 0.4);  // chance is 0.05 on 20 shots
  CHECK(report.recall_at.at(5) <= 0.8);
  CHECK(report.median_rank >= 2.0);
}

TEST_CASE("training is reproducible for a fixed seed and differs across seeds") {
  const EncoderConfig cfg = tiny_train_config();

  std::vector<std::string> words = {"cat", "dog", "car", "tree", "sky", "road"};
  Rng rng(52);
  const EmbeddingTable table = random_embedding_table(words, cfg.embed_dim, rng);

  std::vector<FeatureSequence> shots;
  std::vector<CaptionPair> pairs;
  for (int i = 0; i < 6; ++i) {
    FeatureSequence s;
    s.shot_id = "s" + std::to_string(i);
    s.frames = Tensor64({2, cfg.feature_dim});
    for (std::int64_t k = 0; k < s.frames.numel(); ++k) s.frames[k] = rng.normal();
    shots.push_back(std::move(s));
    pairs.push_back({"s" + std::to_string(i), words[static_cast<std::size_t>(i)] + " " +
                                                  words[static_cast<std::size_t>((i + 1) % 6)]});
  }

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 3;
  tc.learning_rate = 1e-3;
  tc.seed = 7;

  const TrainedModel<double> a = fit<double>(pairs, pairs, shots, table, cfg, tc);
  const TrainedModel<double> b = fit<double>(pairs, pairs, shots, table, cfg, tc);
  REQUIRE(a.history.size() == 2);
  REQUIRE(b.history.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(a.history[e].mean_loss == b.history[e].mean_loss);  // bitwise, not approximate
    CHECK(a.history[e].recall1 == b.history[e].recall1);
    CHECK(a.history[e].median_rank == b.history[e].median_rank);
  }
  std::vector<const Tensor64*> pa, pb;
  a.params.for_each_param([&](const std::string&, const Tensor64& t) { pa.push_back(&t); });
  b.params.for_each_param([&](const std::string&, const Tensor64& t) { pb.push_back(&t); });
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(std::memcmp(pa[i]->data(), pb[i]->data(),
                      sizeof(double) * static_cast<std::size_t>(pa[i]->numel())) == 0);
  }

  TrainConfig other = tc;
  other.seed = 8;
  const TrainedModel<double> c = fit<double>(pairs, pairs, shots, table, cfg, other);
  CHECK(c.history[0].mean_loss != a.history[0].mean_loss);
}

TEST_CASE("fit tracks the best validation epoch and reports history in order") {
  const EncoderConfig cfg = tiny_train_config();
  std::vector<std::string> words = {"sun", "moon", "star", "dust"};
  Rng rng(53);
  const EmbeddingTable table = random_embedding_table(words, cfg.embed_dim, rng);

  std::vector<FeatureSequence> shots;
  std::vector<CaptionPair> pairs;
  for (int i = 0; i < 4; ++i) {
    FeatureSequence s;
    s.shot_id = "s" + std::to_string(i);
    s.frames = Tensor64({2, cfg.feature_dim});
    for (std::int64_t k = 0; k < s.frames.numel(); ++k) s.frames[k] = rng.normal();
    shots.push_back(std::move(s));
    pairs.push_back({"s" + std::to_string(i), words[static_cast<std::size_t>(i)]});
  }

  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 2;
  tc.seed = 21;

  std::vector<int> seen;
  const TrainedModel<double> model = fit<double>(
      pairs, pairs, shots, table, cfg, tc,
      [&](const EpochStats& stats, const EncoderParams<double>&) { seen.push_back(stats.epoch); });
  CHECK(seen == std::vector<int>{1, 2, 3});
  REQUIRE(model.history.size() == 3);
  REQUIRE(model.best_epoch >= 1);
  REQUIRE(model.best_epoch <= 3);
  const double best_recall =
      model.history[static_cast<std::size_t>(model.best_epoch - 1)].recall1;
  for (const EpochStats& s : model.history) {
    CHECK(best_recall >= s.recall1);  // best is the max
    CHECK(s.mean_loss >= 0);
  }
  // Best must be the earliest epoch attaining the maximum.
  for (int e = 1; e < model.best_epoch; ++e) {
    CHECK(model.history[static_cast<std::size_t>(e - 1)].recall1 < best_recall);
  }
}

TEST_CASE("train config validation rejects out-of-range settings") {
  TrainConfig good;
  CHECK_NOTHROW(good.validate());

  auto reject = [](auto&& mutate) {
    TrainConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  reject([](TrainConfig& c) { c.margin = 0.0; });
  reject([](TrainConfig& c) { c.margin = -0.1; });
  reject([](TrainConfig& c) { c.learning_rate = -1e-4; });
  reject([](TrainConfig& c) { c.batch_size = 1; });
  reject([](TrainConfig& c) { c.epochs = 0; });
  reject([](TrainConfig& c) { c.precision = "f16"; });
  reject([](TrainConfig& c) { c.adam_beta1 = 1.0; });
  reject([](TrainConfig& c) { c.adam_beta2 = -0.1; });
  reject([](TrainConfig& c) { c.adam_eps = 0.0; });
}
