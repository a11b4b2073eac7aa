#include "denc/corpus.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "denc/common.hpp"
#include "denc/text.hpp"

namespace denc {
namespace {

constexpr char kFeatureMagic[4] = {'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

[[noreturn]] void fail(const std::string& path, std::size_t line_no, const std::string& message) {
  throw DataError(path + " line " + std::to_string(line_no) + ": " + message);
}

std::vector<std::string> whitespace_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (in >> field) fields.push_back(field);
  return fields;
}

double parse_value(const std::string& token, const std::string& path, std::size_t line_no) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(token, &consumed);
    if (consumed != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    fail(path, line_no, "cannot parse value '" + token + "'");
  }
}

bool parse_extent(const std::string& token, std::int64_t& out) {
  if (token.empty()) return false;
  std::int64_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

bool skippable(const std::string& line) {
  const std::string stripped = trim(line);
  return stripped.empty() || stripped.front() == '#';
}

std::vector<FeatureSequence> load_features_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file: " + path);

  std::vector<FeatureSequence> shots;
  std::map<std::string, std::size_t> first_seen;  // shot_id → header line
  std::int64_t corpus_dim = -1;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skippable(line)) continue;

    const std::vector<std::string> header = whitespace_fields(line);
    std::int64_t n = 0, dim = 0;
    if (header.size() != 3 || !parse_extent(header[1], n) || !parse_extent(header[2], dim)) {
      fail(path, line_no, "expected a shot header 'shot_id n D'");
    }
    if (n < 1 || dim < 1) fail(path, line_no, "shot extents must be >= 1");

    FeatureSequence shot;
    shot.shot_id = header[0];
    auto [it, inserted] = first_seen.emplace(shot.shot_id, line_no);
    if (!inserted) {
      fail(path, line_no,
           "duplicate shot_id '" + shot.shot_id + "' (first on line " +
               std::to_string(it->second) + ")");
    }
    if (corpus_dim < 0) {
      corpus_dim = dim;
    } else if (dim != corpus_dim) {
      fail(path, line_no,
           "shot '" + shot.shot_id + "' has dimension " + std::to_string(dim) + ", expected " +
               std::to_string(corpus_dim));
    }

    shot.frames = Tensor64({n, dim});
    for (std::int64_t row = 0; row < n; ++row) {
      if (!std::getline(in, line)) {
        fail(path, line_no, "shot '" + shot.shot_id + "' is truncated");
      }
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::vector<std::string> values = whitespace_fields(line);
      if (static_cast<std::int64_t>(values.size()) != dim) {
        fail(path, line_no,
             "expected " + std::to_string(dim) + " values, found " +
                 std::to_string(values.size()));
      }
      for (std::int64_t c = 0; c < dim; ++c) {
        // Both containers carry 32-bit values; snapping here makes text and
        // binary encodings of the same corpus elementwise identical.
        const double parsed = parse_value(values[static_cast<std::size_t>(c)], path, line_no);
        shot.frames.at(row, c) = static_cast<double>(static_cast<float>(parsed));
      }
    }
    shots.push_back(std::move(shot));
  }

  if (shots.empty()) throw DataError(path + ": feature file contains no shots");
  return shots;
}

std::vector<FeatureSequence> load_features_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw DataError(path + ": not a FEAT binary feature file");
  }
  const std::uint32_t version = get_u32_le(in);
  if (version != kFeatureVersion) {
    throw DataError(path + ": unsupported FEAT version " + std::to_string(version));
  }

  const std::uint32_t count = get_u32_le(in);
  if (count == 0) throw DataError(path + ": feature file contains no shots");

  std::vector<FeatureSequence> shots;
  std::map<std::string, std::uint32_t> first_seen;
  std::int64_t corpus_dim = -1;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = get_u32_le(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw DataError(path + ": truncated shot name in record " + std::to_string(k + 1));

    auto [it, inserted] = first_seen.emplace(name, k + 1);
    if (!inserted) {
      throw DataError(path + ": duplicate shot_id '" + name + "' (record " +
                      std::to_string(k + 1) + ", first in record " + std::to_string(it->second) +
                      ")");
    }

    const std::int64_t n = static_cast<std::int64_t>(get_u64_le(in));
    const std::int64_t dim = static_cast<std::int64_t>(get_u64_le(in));
    if (n < 1 || dim < 1) {
      throw DataError(path + ": record " + std::to_string(k + 1) + " has invalid extents");
    }
    if (corpus_dim < 0) {
      corpus_dim = dim;
    } else if (dim != corpus_dim) {
      throw DataError(path + ": shot '" + name + "' has dimension " + std::to_string(dim) +
                      ", expected " + std::to_string(corpus_dim));
    }

    FeatureSequence shot;
    shot.shot_id = std::move(name);
    shot.frames = Tensor64({n, dim});
    for (std::int64_t i = 0; i < shot.frames.numel(); ++i) {
      shot.frames[i] = static_cast<double>(get_f32_le(in));
    }
    shots.push_back(std::move(shot));
  }
  return shots;
}

}  // namespace

std::vector<FeatureSequence> load_features(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open feature file: " + path);
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::memcmp(magic, kFeatureMagic, 4) == 0) return load_features_binary(path);
  return load_features_text(path);
}

void save_features_text(const std::string& path, const std::vector<FeatureSequence>& shots) {
  AtomicFile file(path);
  std::ostream& out = file.stream();
  char buf[48];
  for (const FeatureSequence& shot : shots) {
    out << shot.shot_id << ' ' << shot.frame_count() << ' ' << shot.dim() << '\n';
    for (std::int64_t r = 0; r < shot.frame_count(); ++r) {
      for (std::int64_t c = 0; c < shot.dim(); ++c) {
        // %.9g keeps every float32-valued feature exact through the text form.
        std::snprintf(buf, sizeof buf, "%.9g", shot.frames.at(r, c));
        if (c > 0) out << ' ';
        out << buf;
      }
      out << '\n';
    }
  }
  file.commit();
}

void save_features_binary(const std::string& path, const std::vector<FeatureSequence>& shots) {
  AtomicFile file(path, /*binary=*/true);
  std::ostream& out = file.stream();
  out.write(kFeatureMagic, 4);
  put_u32_le(out, kFeatureVersion);
  put_u32_le(out, static_cast<std::uint32_t>(shots.size()));
  for (const FeatureSequence& shot : shots) {
    put_u32_le(out, static_cast<std::uint32_t>(shot.shot_id.size()));
    out.write(shot.shot_id.data(), static_cast<std::streamsize>(shot.shot_id.size()));
    put_u64_le(out, static_cast<std::uint64_t>(shot.frame_count()));
    put_u64_le(out, static_cast<std::uint64_t>(shot.dim()));
    for (const double v : shot.frames.values()) put_f32_le(out, static_cast<float>(v));
  }
  file.commit();
}

std::vector<CaptionPair> load_captions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open caption file: " + path);

  std::vector<CaptionPair> pairs;
  std::map<std::string, std::size_t> first_seen;  // "shot\tcaption" → line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skippable(line)) continue;

    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      fail(path, line_no, "missing tab separator between shot_id and caption");
    }
    CaptionPair pair;
    pair.shot_id = trim(line.substr(0, tab));
    pair.caption = trim(line.substr(tab + 1));
    if (pair.shot_id.empty()) fail(path, line_no, "empty shot_id");
    if (pair.caption.empty()) fail(path, line_no, "empty caption for shot '" + pair.shot_id + "'");

    auto [it, inserted] = first_seen.emplace(pair.shot_id + '\t' + pair.caption, line_no);
    if (!inserted) {
      fail(path, line_no,
           "duplicate caption for shot '" + pair.shot_id + "' (first on line " +
               std::to_string(it->second) + ")");
    }
    pairs.push_back(std::move(pair));
  }

  if (pairs.empty()) throw DataError(path + ": caption file contains no pairs");
  return pairs;
}

void save_captions(const std::string& path, const std::vector<CaptionPair>& pairs) {
  AtomicFile file(path);
  for (const CaptionPair& pair : pairs) {
    file.stream() << pair.shot_id << '\t' << pair.caption << '\n';
  }
  file.commit();
}

std::map<std::string, std::size_t> index_shots(const std::vector<FeatureSequence>& shots) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    auto [it, inserted] = index.emplace(shots[i].shot_id, i);
    if (!inserted) throw DataError("duplicate shot_id '" + shots[i].shot_id + "'");
  }
  return index;
}

}  // namespace denc
