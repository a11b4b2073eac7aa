#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "denc/common.hpp"

namespace denc {

// Smoothing constant of the relevance-ratio estimator; keeps strata with no
// judged material above a rank from producing 0/0.
inline constexpr double kDefaultEvalEpsilon = 1e-5;

// One sampling stratum of a topic's judgment pool. `pooled` holds every shot
// listed for the stratum; `relevant` / `nonrelevant` hold the judged subsets.
struct Stratum {
  std::string id;
  std::set<std::string> pooled;
  std::set<std::string> relevant;
  std::set<std::string> nonrelevant;

  std::size_t judged_count() const { return relevant.size() + nonrelevant.size(); }
  double rate() const {
    return static_cast<double>(judged_count()) / static_cast<double>(pooled.size());
  }
};

struct TopicPool {
  std::string topic_id;
  std::vector<Stratum> strata;                       // file order
  std::map<std::string, std::size_t> shot_stratum;   // shot → index into strata

  std::size_t relevant_count() const;
  // R-hat: the pool's estimate of the topic's total relevant count, summing
  // each stratum's judged-relevant count scaled up by its sampling rate.
  double estimated_relevant() const;
};

// Stratified, partially judged relevance pools for a set of topics, read from
// qrels lines `topic_id stratum_id shot_id judgment` with judgment 1 (relevant),
// 0 (nonrelevant), or -1 (pooled but unjudged).
class JudgmentPool {
 public:
  static JudgmentPool load(std::istream& in);
  static JudgmentPool load_string(const std::string& text);
  static JudgmentPool load_file(const std::string& path);

  bool has(const std::string& topic_id) const;
  const TopicPool& topic(const std::string& topic_id) const;  // DataError when absent
  std::vector<std::string> topic_ids() const;                 // file order
  std::size_t size() const { return topics_.size(); }

 private:
  std::vector<TopicPool> topics_;
  std::map<std::string, std::size_t> index_;
};

// A retrieval run for one topic: shot ids from best to worst, duplicate-free.
using RankedShots = std::vector<std::string>;

// Expected precision at rank k under the stratified pool, assuming the shot at
// rank k is judged relevant. Unpooled shots above k contribute nothing.
double expected_precision_at_k(const RankedShots& run, const TopicPool& topic, std::size_t k,
                               double epsilon = kDefaultEvalEpsilon);

// Extended inferred average precision of one run against one topic's pool.
// Judged-relevant shots missing from the run contribute zero.
double xinfap(const RankedShots& run, const TopicPool& topic,
              double epsilon = kDefaultEvalEpsilon);

// Arithmetic mean over per-topic scores.
double mean_xinfap(const std::vector<double>& scores);

// Per-topic score table plus the mean, in a fixed topic order.
struct EvalReport {
  std::vector<std::pair<std::string, double>> per_topic;
  double mean = 0;
};

EvalReport make_report(const std::vector<std::pair<std::string, double>>& topic_scores);
std::string format_report_text(const EvalReport& report);
std::string format_report_tsv(const EvalReport& report);

}  // namespace denc
