#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>

#include "anchorpose/benchmark.hpp"
#include "anchorpose/random.hpp"
#include "anchorpose/text.hpp"

namespace anchorpose {

const char* to_string(PairScope scope) {
  return scope == PairScope::kPerSubject ? "per_subject" : "total";
}

PairScope parse_pair_scope(std::string_view name) {
  if (name == "per_subject") return PairScope::kPerSubject;
  if (name == "total") return PairScope::kTotal;
  throw Error(ErrorCode::kInvalidConfig, "unknown pair scope '" + std::string(name) + "'");
}

std::size_t neutral_reference_index(const PoseLog& log) {
  if (log.frames.empty()) throw Error(ErrorCode::kEmptyInput, "neutral reference of an empty log");
  const std::size_t n = log.frames.size();
  std::vector<double> sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = geodesic_deg(log.frames[i].pose.rotation, log.frames[j].pose.rotation);
      sums[i] += d;
      sums[j] += d;
    }
  }
  // Same denominator for every frame, so comparing sums compares means.
  return static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
}

std::vector<double> distances_to_neutral(const PoseLog& log) {
  const Rotationd& ref = log.frames[neutral_reference_index(log)].pose.rotation;
  std::vector<double> out;
  out.reserve(log.frames.size());
  for (const auto& f : log.frames) out.push_back(geodesic_deg(ref, f.pose.rotation));
  return out;
}

PairStats compute_pair_stats(std::span<const Pair> pairs) {
  PairStats s;
  s.count = pairs.size();
  double sum = 0.0;
  for (const Pair& p : pairs) {
    sum += p.gap_deg;
    s.gap_max_deg = std::max(s.gap_max_deg, p.gap_deg);
  }
  s.gap_mean_deg = pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
  return s;
}

namespace {

struct Candidate {
  std::uint32_t log = 0;
  std::uint32_t anchor = 0;
  std::uint32_t query = 0;
};

/// Sorted sample of n distinct indices from [0, population); everything when
/// population <= n. Partial Fisher-Yates.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (population <= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Candidate> hard_candidates(const PoseLog& log, std::uint32_t log_index, const PairOptions& o) {
  log.validate();
  const std::vector<double> dist = distances_to_neutral(log);
  std::vector<std::uint32_t> neutral, extreme;
  for (std::uint32_t i = 0; i < dist.size(); ++i) {
    if (dist[i] < o.neutral_thresh_deg) neutral.push_back(i);
    if (dist[i] > o.extreme_thresh_deg) extreme.push_back(i);
  }
  if (neutral.empty() || extreme.empty()) {
    throw Error(ErrorCode::kInsufficientFrames,
                "subject '" + log.subject_id + "': found " + std::to_string(neutral.size()) +
                    " neutral (< " + format_number(o.neutral_thresh_deg) + " deg) and " +
                    std::to_string(extreme.size()) + " extreme (> " + format_number(o.extreme_thresh_deg) +
                    " deg) frames; need at least one of each");
  }
  std::vector<Candidate> out;
  out.reserve(neutral.size() * extreme.size());
  for (std::uint32_t a : neutral) {
    for (std::uint32_t q : extreme) out.push_back({log_index, a, q});
  }
  return out;
}

std::vector<Candidate> easy_candidates(const PoseLog& log, std::uint32_t log_index, const PairOptions& o) {
  log.validate();
  const std::vector<double> dist = distances_to_neutral(log);
  std::vector<std::uint32_t> neutral;
  for (std::uint32_t i = 0; i < dist.size(); ++i) {
    if (dist[i] < o.neutral_thresh_deg) neutral.push_back(i);
  }
  std::vector<Candidate> out;
  for (std::uint32_t a : neutral) {
    for (std::uint32_t q : neutral) {
      if (a == q) continue;
      if (geodesic_deg(log.frames[a].pose.rotation, log.frames[q].pose.rotation) <= o.max_gap_deg) {
        out.push_back({log_index, a, q});
      }
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kInsufficientFrames,
                "subject '" + log.subject_id + "': " + std::to_string(neutral.size()) +
                    " neutral frames and no pair within " + format_number(o.max_gap_deg) + " deg");
  }
  return out;
}

using CandidateFn = std::vector<Candidate> (*)(const PoseLog&, std::uint32_t, const PairOptions&);

void append_pairs(PairSet& set, std::span<const PoseLog> logs, const std::vector<Candidate>& candidates,
                  std::size_t n, std::uint64_t seed) {
  for (std::size_t i : sample_indices(candidates.size(), n, seed)) {
    const Candidate& c = candidates[i];
    const PoseLog& log = logs[c.log];
    const FrameRecord& a = log.frames[c.anchor];
    const FrameRecord& q = log.frames[c.query];
    set.pairs.push_back(
        Pair{log.subject_id, a.frame_id, q.frame_id, geodesic_deg(a.pose.rotation, q.pose.rotation)});
  }
}

PairSet build_pairs(std::span<const PoseLog> logs, const PairOptions& o, const char* name, CandidateFn candidates_of,
                    bool single) {
  if (logs.empty()) throw Error(ErrorCode::kEmptyInput, "no pose logs");
  PairSet set;
  set.name = name;
  set.seed = o.seed;

  if (o.scope == PairScope::kPerSubject || single) {
    for (std::uint32_t li = 0; li < logs.size(); ++li) {
      std::vector<Candidate> c;
      try {
        c = candidates_of(logs[li], li, o);
      } catch (const Error& e) {
        if (single || e.code() != ErrorCode::kInsufficientFrames) throw;
        set.skipped_subjects.push_back(logs[li].subject_id);
        continue;
      }
      append_pairs(set, logs, c, o.n_pairs, derive_seed(o.seed, {name, logs[li].subject_id}));
    }
  } else {
    std::vector<Candidate> all;
    for (std::uint32_t li = 0; li < logs.size(); ++li) {
      try {
        const std::vector<Candidate> c = candidates_of(logs[li], li, o);
        all.insert(all.end(), c.begin(), c.end());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInsufficientFrames) throw;
        set.skipped_subjects.push_back(logs[li].subject_id);
      }
    }
    append_pairs(set, logs, all, o.n_pairs, derive_seed(o.seed, {name, "<total>"}));
  }
  if (set.pairs.empty()) {
    throw Error(ErrorCode::kInsufficientFrames, std::string("no subject yields ") + name + " pairs");
  }
  set.stats = compute_pair_stats(set.pairs);
  return set;
}

}  // namespace

PairSet build_hard_pairs(const PoseLog& log, const PairOptions& options) {
  return build_pairs(std::span<const PoseLog>(&log, 1), options, "hard", hard_candidates, true);
}

PairSet build_easy_pairs(const PoseLog& log, const PairOptions& options) {
  return build_pairs(std::span<const PoseLog>(&log, 1), options, "easy", easy_candidates, true);
}

PairSet build_hard_pairs(std::span<const PoseLog> logs, const PairOptions& options) {
  return build_pairs(logs, options, "hard", hard_candidates, false);
}

PairSet build_easy_pairs(std::span<const PoseLog> logs, const PairOptions& options) {
  return build_pairs(logs, options, "easy", easy_candidates, false);
}

void write_pairs_csv(std::ostream& out, const PairSet& set) {
  out << "#pairs v1 name=" << set.name << " seed=" << set.seed << '\n';
  out << "subject_id,anchor_id,query_id,gap_deg\n";
  for (const Pair& p : set.pairs) {
    out << p.subject_id << ',' << p.anchor_id << ',' << p.query_id << ',' << format_number(p.gap_deg) << '\n';
  }
}

PairSet read_pairs_csv(std::istream& in, const std::string& source) {
  PairSet set;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || trim(line).substr(0, 10) != "#pairs v1 ") {
    throw Error(ErrorCode::kParseError, source + ":1: missing '#pairs v1' header");
  }
  ++line_no;
  for (const std::string& token : split(trim(line).substr(10), ' ')) {
    if (token.rfind("name=", 0) == 0) set.name = token.substr(5);
    if (token.rfind("seed=", 0) == 0) {
      set.seed = static_cast<std::uint64_t>(parse_integer(token.substr(5), source + ":1 seed"));
    }
  }
  if (!std::getline(in, line) || trim(line) != "subject_id,anchor_id,query_id,gap_deg") {
    throw Error(ErrorCode::kParseError, source + ":2: unexpected column header");
  }
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 4) {
      throw Error(ErrorCode::kParseError, source + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    set.pairs.push_back(Pair{f[0], f[1], f[2], parse_number(f[3], source + ":" + std::to_string(line_no) + " gap_deg")});
  }
  set.stats = compute_pair_stats(set.pairs);
  return set;
}

}  // namespace anchorpose
