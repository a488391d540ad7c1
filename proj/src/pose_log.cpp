#include "anchorpose/pose_log.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anchorpose/text.hpp"

namespace anchorpose {

namespace {

constexpr std::string_view kHeaderPrefix = "#poselog v";
constexpr std::string_view kColumns =
    "subject_id,frame_id,index,qw,qx,qy,qz,tx_mm,ty_mm,tz_mm,fx,fy,cx,cy,width,height";
constexpr std::size_t kPoseFields = 10;
constexpr std::size_t kAllFields = 16;

void require_plain_token(const std::string& token, const char* what) {
  if (token.empty() || token.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorCode::kInvariantViolation,
                std::string(what) + " must be non-empty and free of commas/newlines: '" + token + "'");
  }
}

}  // namespace

void PoseLog::validate() const {
  if (frames.empty()) {
    throw Error(ErrorCode::kInvariantViolation, "pose log '" + subject_id + "' has no frames");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameRecord& f = frames[i];
    if (f.index != i) {
      throw Error(ErrorCode::kInvariantViolation, "subject '" + subject_id + "': frame '" +
                                                      f.frame_id + "' has index " +
                                                      std::to_string(f.index) + ", expected " +
                                                      std::to_string(i));
    }
    if (!seen.insert(f.frame_id).second) {
      throw Error(ErrorCode::kInvariantViolation,
                  "subject '" + subject_id + "': duplicate frame id '" + f.frame_id + "'");
    }
    if (f.pose.frame_tag != frame_tag) {
      throw Error(ErrorCode::kInvariantViolation, "subject '" + subject_id + "': frame '" +
                                                      f.frame_id + "' is in frame '" +
                                                      f.pose.frame_tag + "', log is '" + frame_tag + "'");
    }
  }
}

const FrameRecord* PoseLog::find(const std::string& frame_id) const {
  for (const auto& f : frames) {
    if (f.frame_id == frame_id) return &f;
  }
  return nullptr;
}

const FrameRecord& PoseLog::at(const std::string& frame_id) const {
  const FrameRecord* f = find(frame_id);
  if (f == nullptr) {
    throw Error(ErrorCode::kInvariantViolation,
                "subject '" + subject_id + "' has no frame '" + frame_id + "'");
  }
  return *f;
}

void write_canonical(std::ostream& out, const std::vector<PoseLog>& logs) {
  if (logs.empty()) throw Error(ErrorCode::kEmptyInput, "no pose logs to write");
  const std::string& tag = logs.front().frame_tag;
  require_plain_token(tag, "frame tag");
  for (const auto& log : logs) {
    log.validate();
    require_plain_token(log.subject_id, "subject id");
    if (log.frame_tag != tag) {
      throw Error(ErrorCode::kInvariantViolation, "all logs in one file must share a frame tag");
    }
  }

  out << kHeaderPrefix << kPoseLogFormatVersion << " frame_tag=" << tag << '\n';
  out << kColumns << '\n';
  for (const auto& log : logs) {
    for (const auto& f : log.frames) {
      require_plain_token(f.frame_id, "frame id");
      const auto& q = f.pose.rotation;
      const auto& t = f.pose.translation;
      out << log.subject_id << ',' << f.frame_id << ',' << f.index;
      for (double v : {q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()}) out << ',' << format_number(v);
      if (f.intrinsics) {
        const auto& k = *f.intrinsics;
        for (double v : {k.fx, k.fy, k.cx, k.cy, k.width, k.height}) out << ',' << format_number(v);
      } else {
        out << ",,,,,,";
      }
      out << '\n';
    }
  }
}

void write_canonical(const std::filesystem::path& path, const std::vector<PoseLog>& logs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "' for writing");
  write_canonical(out, logs);
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path.string() + "'");
}

std::vector<PoseLog> read_canonical(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto where = [&](std::string_view field) {
    return source + ":" + std::to_string(line_no) + (field.empty() ? "" : " field '" + std::string(field) + "'");
  };

  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, source + ": empty file");
  ++line_no;
  std::string_view header = trim(line);
  if (header.substr(0, kHeaderPrefix.size()) != kHeaderPrefix) {
    throw Error(ErrorCode::kParseError, where("") + ": missing '#poselog v<N>' header");
  }
  header.remove_prefix(kHeaderPrefix.size());
  const auto space = header.find(' ');
  const long long version = parse_integer(header.substr(0, space), where("version"));
  if (version != kPoseLogFormatVersion) {
    throw Error(ErrorCode::kParseError, where("version") + ": unsupported format version " +
                                            std::to_string(version));
  }
  std::string frame_tag;
  if (space != std::string_view::npos) {
    const std::string_view rest = trim(header.substr(space));
    if (rest.substr(0, 10) == "frame_tag=") frame_tag = std::string(rest.substr(10));
  }
  if (frame_tag.empty()) throw Error(ErrorCode::kParseError, where("frame_tag") + ": missing frame_tag");

  if (!std::getline(in, line) || trim(line) != kColumns) {
    ++line_no;
    throw Error(ErrorCode::kParseError, where("") + ": expected column header '" + std::string(kColumns) + "'");
  }
  ++line_no;

  std::vector<PoseLog> logs;
  std::map<std::string, std::size_t> by_subject;
  std::set<std::pair<std::string, std::string>> seen_ids;
  static const char* const kNames[kAllFields] = {"subject_id", "frame_id", "index", "qw", "qx", "qy",
                                                 "qz", "tx_mm", "ty_mm", "tz_mm", "fx", "fy",
                                                 "cx", "cy", "width", "height"};

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(trim(line), ',');
    if (fields.size() != kPoseFields && fields.size() != kAllFields) {
      throw Error(ErrorCode::kParseError, where("") + ": expected 10 or 16 fields, got " +
                                              std::to_string(fields.size()));
    }
    auto number = [&](std::size_t i) { return parse_number(fields[i], where(kNames[i])); };

    FrameRecord rec;
    const std::string subject(trim(fields[0]));
    rec.frame_id = std::string(trim(fields[1]));
    if (subject.empty()) throw Error(ErrorCode::kParseError, where("subject_id") + ": empty");
    if (rec.frame_id.empty()) throw Error(ErrorCode::kParseError, where("frame_id") + ": empty");
    const long long index = parse_integer(fields[2], where("index"));
    if (index < 0) throw Error(ErrorCode::kParseError, where("index") + ": negative");
    rec.index = static_cast<std::size_t>(index);

    const Eigen::Quaterniond q(number(3), number(4), number(5), number(6));
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > kQuaternionNormTolerance) {
      throw Error(ErrorCode::kInvariantViolation,
                  where("qw..qz") + ": quaternion norm " + format_number(norm) + " is not unit");
    }
    rec.pose.rotation = Rotationd(q);
    rec.pose.translation = {number(7), number(8), number(9)};
    rec.pose.frame_tag = frame_tag;

    if (fields.size() == kAllFields) {
      std::size_t empty = 0;
      for (std::size_t i = 10; i < kAllFields; ++i) empty += trim(fields[i]).empty() ? 1 : 0;
      if (empty != 0 && empty != 6) {
        throw Error(ErrorCode::kParseError, where("fx..height") + ": intrinsics must be all present or all empty");
      }
      if (empty == 0) {
        Intrinsicsd k{number(10), number(11), number(12), number(13), number(14), number(15)};
        if (!k.is_valid()) throw Error(ErrorCode::kInvariantViolation, where("fx..height") + ": invalid intrinsics");
        rec.intrinsics = k;
      }
    }

    auto [it, inserted] = by_subject.try_emplace(subject, logs.size());
    if (inserted) logs.push_back(PoseLog{subject, frame_tag, {}});
    PoseLog& log = logs[it->second];
    if (rec.index != log.frames.size()) {
      throw Error(ErrorCode::kInvariantViolation, where("index") + ": expected index " +
                                                      std::to_string(log.frames.size()) + " for subject '" +
                                                      subject + "'");
    }
    if (!seen_ids.emplace(subject, rec.frame_id).second) {
      throw Error(ErrorCode::kInvariantViolation, where("frame_id") + ": duplicate frame id '" + rec.frame_id + "'");
    }
    log.frames.push_back(std::move(rec));
  }
  if (logs.empty()) throw Error(ErrorCode::kInvariantViolation, source + ": no frames");
  return logs;
}

std::vector<PoseLog> ingest_canonical_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return read_canonical(in, path.string());
}

PoseLog ingest_canonical(const std::filesystem::path& path) {
  std::vector<PoseLog> logs = ingest_canonical_all(path);
  if (logs.size() != 1) {
    throw Error(ErrorCode::kInvariantViolation, "'" + path.string() + "' holds " +
                                                    std::to_string(logs.size()) + " subjects, expected 1");
  }
  return std::move(logs.front());
}

}  // namespace anchorpose
