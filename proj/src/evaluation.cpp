#include "denc/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "denc/text.hpp"

namespace denc {

namespace {

void require_unique_run(const RankedShots& run) {
  std::set<std::string> seen;
  for (const std::string& shot : run) {
    if (!seen.insert(shot).second) {
      throw DataError("run lists shot '" + shot + "' twice");
    }
  }
}

void require_epsilon(double epsilon) {
  if (!(epsilon > 0)) {
    throw ConfigError("evaluation epsilon must be > 0, got " + std::to_string(epsilon));
  }
}

// Smoothed probability that a pooled shot of this stratum is relevant, given
// the judged material above the current rank.
double relevance_ratio(std::size_t rel, std::size_t nonrel, double epsilon) {
  return (static_cast<double>(rel) + epsilon) /
         (static_cast<double>(rel + nonrel) + 2 * epsilon);
}

}  // namespace

std::size_t TopicPool::relevant_count() const {
  std::size_t n = 0;
  for (const Stratum& s : strata) n += s.relevant.size();
  return n;
}

double TopicPool::estimated_relevant() const {
  double total = 0;
  for (const Stratum& s : strata) {
    total += static_cast<double>(s.relevant.size()) / s.rate();
  }
  return total;
}

JudgmentPool JudgmentPool::load(std::istream& in) {
  JudgmentPool pool;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError("qrels line " + std::to_string(line_no) + ": " + msg);
  };

  // Per topic: stratum id → index, shot → (stratum index, line) for duplicate reporting.
  std::map<std::string, std::map<std::string, std::size_t>> stratum_index;
  std::map<std::string, std::map<std::string, std::size_t>> shot_home;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;

    std::istringstream fields(stripped);
    std::string topic_id, stratum_id, shot_id, judgment_text, extra;
    if (!(fields >> topic_id >> stratum_id >> shot_id >> judgment_text)) {
      fail("expected 'topic_id stratum_id shot_id judgment'");
    }
    if (fields >> extra) fail("unexpected field '" + extra + "' after judgment");

    int judgment = 0;
    if (judgment_text == "-1") {
      judgment = -1;
    } else if (judgment_text == "0") {
      judgment = 0;
    } else if (judgment_text == "1") {
      judgment = 1;
    } else {
      fail("judgment must be -1, 0, or 1, got '" + judgment_text + "'");
    }

    auto topic_it = pool.index_.find(topic_id);
    if (topic_it == pool.index_.end()) {
      topic_it = pool.index_.emplace(topic_id, pool.topics_.size()).first;
      pool.topics_.push_back(TopicPool{});
      pool.topics_.back().topic_id = topic_id;
    }
    TopicPool& topic = pool.topics_[topic_it->second];

    auto& strata_of = stratum_index[topic_id];
    auto stratum_it = strata_of.find(stratum_id);
    if (stratum_it == strata_of.end()) {
      stratum_it = strata_of.emplace(stratum_id, topic.strata.size()).first;
      topic.strata.push_back(Stratum{});
      topic.strata.back().id = stratum_id;
    }
    const std::size_t stratum = stratum_it->second;

    auto home = shot_home[topic_id].find(shot_id);
    if (home != shot_home[topic_id].end()) {
      if (home->second == stratum) {
        fail("shot '" + shot_id + "' listed twice in stratum '" + stratum_id + "' of topic '" +
             topic_id + "'");
      }
      fail("shot '" + shot_id + "' of topic '" + topic_id + "' appears in two strata ('" +
           topic.strata[home->second].id + "' and '" + stratum_id + "')");
    }
    shot_home[topic_id].emplace(shot_id, stratum);
    topic.shot_stratum.emplace(shot_id, stratum);

    Stratum& s = topic.strata[stratum];
    s.pooled.insert(shot_id);
    if (judgment == 1) s.relevant.insert(shot_id);
    if (judgment == 0) s.nonrelevant.insert(shot_id);
  }

  for (const TopicPool& topic : pool.topics_) {
    for (const Stratum& s : topic.strata) {
      if (s.judged_count() == 0) {
        throw DataError("topic '" + topic.topic_id + "' stratum '" + s.id +
                        "' has no judged shots, so its sampling rate is undefined");
      }
    }
  }
  return pool;
}

JudgmentPool JudgmentPool::load_string(const std::string& text) {
  std::istringstream in(text);
  return load(in);
}

JudgmentPool JudgmentPool::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open qrels file: " + path);
  return load(in);
}

bool JudgmentPool::has(const std::string& topic_id) const {
  return index_.find(topic_id) != index_.end();
}

const TopicPool& JudgmentPool::topic(const std::string& topic_id) const {
  auto it = index_.find(topic_id);
  if (it == index_.end()) {
    throw DataError("topic '" + topic_id + "' is not in the judgment pool");
  }
  return topics_[it->second];
}

std::vector<std::string> JudgmentPool::topic_ids() const {
  std::vector<std::string> ids;
  ids.reserve(topics_.size());
  for (const TopicPool& t : topics_) ids.push_back(t.topic_id);
  return ids;
}

double expected_precision_at_k(const RankedShots& run, const TopicPool& topic, std::size_t k,
                               double epsilon) {
  require_epsilon(epsilon);
  if (k < 1) throw ConfigError("rank must be >= 1");
  if (k > run.size()) {
    throw DataError("rank " + std::to_string(k) + " exceeds run length " +
                    std::to_string(run.size()));
  }
  require_unique_run(run);

  const std::string& at_k = run[k - 1];
  const auto home = topic.shot_stratum.find(at_k);
  if (home == topic.shot_stratum.end() || !topic.strata[home->second].relevant.count(at_k)) {
    throw DataError("shot '" + at_k + "' at rank " + std::to_string(k) +
                    " is not judged relevant");
  }
  if (k == 1) return 1.0;

  // Judged and pooled tallies per stratum over ranks 1..k-1; unpooled shots
  // fall in no stratum and so contribute nothing.
  std::vector<std::size_t> pooled(topic.strata.size(), 0);
  std::vector<std::size_t> rel(topic.strata.size(), 0);
  std::vector<std::size_t> nonrel(topic.strata.size(), 0);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const auto it = topic.shot_stratum.find(run[i]);
    if (it == topic.shot_stratum.end()) continue;
    const Stratum& s = topic.strata[it->second];
    ++pooled[it->second];
    if (s.relevant.count(run[i])) ++rel[it->second];
    if (s.nonrelevant.count(run[i])) ++nonrel[it->second];
  }

  const double above = static_cast<double>(k - 1);
  double sum = 0;
  for (std::size_t t = 0; t < topic.strata.size(); ++t) {
    sum += (static_cast<double>(pooled[t]) / above) * relevance_ratio(rel[t], nonrel[t], epsilon);
  }
  return 1.0 / static_cast<double>(k) + (above / static_cast<double>(k)) * sum;
}

double xinfap(const RankedShots& run, const TopicPool& topic, double epsilon) {
  require_epsilon(epsilon);
  require_unique_run(run);
  if (topic.relevant_count() == 0) {
    throw DataError("topic '" + topic.topic_id +
                    "' has no judged relevant shots; xinfAP is undefined");
  }

  // One pass over the run, maintaining per-stratum tallies of shots above the
  // current rank. For a relevant shot at rank k the expected precision reduces
  // to (1 + sum_t pooled_t * ratio_t) / k, which is exactly 1 at k = 1.
  std::vector<std::size_t> pooled(topic.strata.size(), 0);
  std::vector<std::size_t> rel(topic.strata.size(), 0);
  std::vector<std::size_t> nonrel(topic.strata.size(), 0);

  double total = 0;
  for (std::size_t k = 1; k <= run.size(); ++k) {
    const std::string& shot = run[k - 1];
    const auto it = topic.shot_stratum.find(shot);
    if (it == topic.shot_stratum.end()) continue;
    const std::size_t t = it->second;
    const Stratum& s = topic.strata[t];
    const bool is_relevant = s.relevant.count(shot) > 0;

    if (is_relevant) {
      double above_mass = 0;
      for (std::size_t u = 0; u < topic.strata.size(); ++u) {
        above_mass +=
            static_cast<double>(pooled[u]) * relevance_ratio(rel[u], nonrel[u], epsilon);
      }
      total += ((1.0 + above_mass) / static_cast<double>(k)) / s.rate();
    }

    ++pooled[t];
    if (is_relevant) ++rel[t];
    if (s.nonrelevant.count(shot)) ++nonrel[t];
  }
  return total / topic.estimated_relevant();
}

double mean_xinfap(const std::vector<double>& scores) {
  if (scores.empty()) throw DataError("no topic scores to average");
  double sum = 0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

EvalReport make_report(const std::vector<std::pair<std::string, double>>& topic_scores) {
  EvalReport report;
  report.per_topic = topic_scores;
  std::vector<double> scores;
  scores.reserve(topic_scores.size());
  for (const auto& [topic, score] : topic_scores) scores.push_back(score);
  report.mean = mean_xinfap(scores);
  return report;
}

namespace {

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", score);
  return buf;
}

}  // namespace

std::string format_report_text(const EvalReport& report) {
  std::size_t width = 5;  // "topic"
  for (const auto& [topic, score] : report.per_topic) width = std::max(width, topic.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "topic" << "  xinfap\n";
  for (const auto& [topic, score] : report.per_topic) {
    out << std::left << std::setw(static_cast<int>(width)) << topic << "  "
        << format_score(score) << "\n";
  }
  out << std::left << std::setw(static_cast<int>(width)) << "mean" << "  "
      << format_score(report.mean) << "\n";
  return out.str();
}

std::string format_report_tsv(const EvalReport& report) {
  std::string out = "topic\txinfap\n";
  for (const auto& [topic, score] : report.per_topic) {
    out += topic + "\t" + format_score(score) + "\n";
  }
  out += "mean\t" + format_score(report.mean) + "\n";
  return out;
}

}  // namespace denc
