#include "denc/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "denc/text.hpp"

namespace denc {

namespace {

constexpr char kIndexMagic[4] = {'D', 'I', 'D', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

bool has_whitespace(const std::string& s) {
  for (unsigned char c : s) {
    if (std::isspace(c)) return true;
  }
  return false;
}

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", score);
  return buf;
}

}  // namespace

ShotIndex build_index(const std::vector<FeatureSequence>& shots,
                      const EncoderParams<double>& params,
                      const std::string& checkpoint_fingerprint, std::size_t threads) {
  if (shots.empty()) throw DataError("cannot index an empty corpus");
  if (threads < 1) throw ConfigError("index thread count must be >= 1");
  index_shots(shots);  // rejects duplicate shot ids

  ShotIndex index;
  index.checkpoint_fingerprint = checkpoint_fingerprint;
  index.shot_ids.reserve(shots.size());
  for (const FeatureSequence& shot : shots) index.shot_ids.push_back(shot.shot_id);
  index.vectors.resize(shots.size());

  const auto encode_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      index.vectors[i] = encode_video(shots[i], params).second;
    }
  };

  const std::size_t workers = std::min(threads, shots.size());
  if (workers <= 1) {
    encode_range(0, shots.size());
    return index;
  }

  // Errors from workers (bad feature dimensions) surface on the caller thread.
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t chunk = (shots.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(shots.size(), begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        encode_range(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return index;
}

void save_index(const ShotIndex& index, const std::string& path) {
  AtomicFile file(path, /*binary=*/true);
  std::ostream& os = file.stream();
  os.write(kIndexMagic, 4);
  put_u32_le(os, kIndexVersion);
  put_u32_le(os, static_cast<std::uint32_t>(index.checkpoint_fingerprint.size()));
  os.write(index.checkpoint_fingerprint.data(),
           static_cast<std::streamsize>(index.checkpoint_fingerprint.size()));
  put_u64_le(os, static_cast<std::uint64_t>(index.size()));
  put_u64_le(os, static_cast<std::uint64_t>(index.dim()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::string& id = index.shot_ids[i];
    const CommonSpaceVector& v = index.vectors[i];
    if (v.numel() != index.dim()) {
      throw DataError("index vector for shot '" + id + "' has dimension " +
                      std::to_string(v.numel()) + ", expected " + std::to_string(index.dim()));
    }
    put_u32_le(os, static_cast<std::uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (std::int64_t k = 0; k < v.numel(); ++k) put_f64_le(os, v[k]);
  }
  file.commit();
}

ShotIndex load_index(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open index file: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != std::string(kIndexMagic, 4)) {
    throw DataError("not an index file (bad magic): " + path);
  }
  const std::uint32_t version = get_u32_le(is);
  if (version != kIndexVersion) {
    throw DataError("unsupported index version " + std::to_string(version) + ": " + path);
  }

  ShotIndex index;
  const std::uint32_t fp_len = get_u32_le(is);
  index.checkpoint_fingerprint.resize(fp_len);
  is.read(index.checkpoint_fingerprint.data(), fp_len);
  const std::uint64_t count = get_u64_le(is);
  const std::uint64_t dim = get_u64_le(is);
  if (!is || count == 0 || dim == 0) throw DataError("index file is empty or truncated: " + path);

  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32_le(is);
    std::string id(name_len, '\0');
    is.read(id.data(), name_len);
    std::vector<double> values(dim);
    for (std::uint64_t k = 0; k < dim; ++k) values[k] = get_f64_le(is);
    if (!is) {
      throw DataError("index file truncated in entry " + std::to_string(i + 1) + ": " + path);
    }
    if (!seen.insert(id).second) {
      throw DataError("index file lists shot '" + id + "' twice: " + path);
    }
    index.shot_ids.push_back(std::move(id));
    index.vectors.push_back(Tensor64::row(std::move(values)));
  }
  return index;
}

RankedList rank_shots(const AugmentedQuery& query, const ShotIndex& index,
                      const EmbeddingTable& embeddings, const EncoderParams<double>& params,
                      std::size_t k, QueryAggregation aggregation) {
  if (k < 1) throw ConfigError("retrieval depth k must be >= 1");
  if (index.size() == 0) throw DataError("cannot rank against an empty index");

  // Encode every sentence that has at least one in-vocabulary token.
  std::vector<CommonSpaceVector> sentence_vectors;
  for (const std::string& sentence : query.sentences) {
    const TokenSequence seq = make_token_sequence(sentence, embeddings);
    if (seq.tokens.empty()) continue;
    sentence_vectors.push_back(encode_text(seq, embeddings, params).second);
  }
  if (sentence_vectors.empty()) {
    throw DataError("every sentence of query '" + query.concept_id + "' is out of vocabulary");
  }

  RankedList list;
  list.topic_id = query.concept_id;
  list.entries.reserve(index.size());

  if (aggregation == QueryAggregation::kMeanOfEmbeddings) {
    Tensor64 mean = Tensor64::zeros(1, sentence_vectors.front().numel());
    for (const CommonSpaceVector& v : sentence_vectors) {
      for (std::int64_t i = 0; i < mean.numel(); ++i) mean[i] += v[i];
    }
    for (std::int64_t i = 0; i < mean.numel(); ++i) {
      mean[i] /= static_cast<double>(sentence_vectors.size());
    }
    for (std::size_t s = 0; s < index.size(); ++s) {
      list.entries.push_back({index.shot_ids[s], similarity(mean, index.vectors[s])});
    }
  } else {
    for (std::size_t s = 0; s < index.size(); ++s) {
      double sum = 0;
      for (const CommonSpaceVector& v : sentence_vectors) {
        sum += similarity(v, index.vectors[s]);
      }
      list.entries.push_back(
          {index.shot_ids[s], sum / static_cast<double>(sentence_vectors.size())});
    }
  }

  std::sort(list.entries.begin(), list.entries.end(), [](const ScoredShot& a, const ScoredShot& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.shot_id < b.shot_id;
  });
  if (list.entries.size() > k) list.entries.resize(k);
  return list;
}

void save_run_file(const std::vector<RankedList>& lists, const std::string& run_tag,
                   const std::string& path) {
  if (run_tag.empty() || has_whitespace(run_tag)) {
    throw ConfigError("run tag must be nonempty and free of whitespace, got '" + run_tag + "'");
  }
  if (lists.empty()) throw DataError("no ranked lists to write");

  AtomicFile file(path);
  std::ostream& os = file.stream();
  for (const RankedList& list : lists) {
    for (std::size_t r = 0; r < list.entries.size(); ++r) {
      const ScoredShot& e = list.entries[r];
      os << list.topic_id << " Q0 " << e.shot_id << ' ' << (r + 1) << ' '
         << format_score(e.score) << ' ' << run_tag << '\n';
    }
  }
  file.commit();
}

RunFile load_run_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open run file: " + path);

  RunFile run;
  std::set<std::string> finished_topics;
  std::set<std::string> shots_in_topic;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError("run file line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;

    std::istringstream fields(stripped);
    std::string topic, q0, shot, rank_text, score_text, tag, extra;
    if (!(fields >> topic >> q0 >> shot >> rank_text >> score_text >> tag)) {
      fail("expected 'topic_id Q0 shot_id rank score run_tag'");
    }
    if (fields >> extra) fail("unexpected field '" + extra + "'");
    if (q0 != "Q0") fail("second field must be 'Q0', got '" + q0 + "'");

    std::size_t rank = 0;
    try {
      std::size_t used = 0;
      rank = std::stoul(rank_text, &used);
      if (used != rank_text.size()) throw std::invalid_argument(rank_text);
    } catch (const std::exception&) {
      fail("cannot parse rank '" + rank_text + "'");
    }
    double score = 0;
    try {
      std::size_t used = 0;
      score = std::stod(score_text, &used);
      if (used != score_text.size()) throw std::invalid_argument(score_text);
    } catch (const std::exception&) {
      fail("cannot parse score '" + score_text + "'");
    }

    if (run.topics.empty() && run.run_tag.empty()) {
      run.run_tag = tag;
    } else if (tag != run.run_tag) {
      fail("run tag '" + tag + "' differs from '" + run.run_tag + "'");
    }

    if (run.topics.empty() || run.topics.back().topic_id != topic) {
      if (finished_topics.count(topic)) {
        fail("topic '" + topic + "' appears in two separate blocks");
      }
      if (!run.topics.empty()) finished_topics.insert(run.topics.back().topic_id);
      run.topics.push_back(RankedList{topic, {}});
      shots_in_topic.clear();
    }

    RankedList& current = run.topics.back();
    if (rank != current.entries.size() + 1) {
      fail("rank " + std::to_string(rank) + " out of sequence (expected " +
           std::to_string(current.entries.size() + 1) + ")");
    }
    if (!current.entries.empty() && score > current.entries.back().score) {
      fail("score increases down the ranking");
    }
    if (!shots_in_topic.insert(shot).second) {
      fail("shot '" + shot + "' listed twice for topic '" + topic + "'");
    }
    current.entries.push_back({shot, score});
  }

  if (run.topics.empty()) throw DataError("run file contains no entries: " + path);
  return run;
}

}  // namespace denc
