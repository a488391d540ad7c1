#include <algorithm>
#include <fstream>
#include <sstream>

#include "anchorpose/pose_log.hpp"
#include "anchorpose/text.hpp"

namespace anchorpose {

namespace {

std::vector<double> read_numbers(const std::filesystem::path& path, ErrorCode on_error) {
  std::ifstream in(path);
  if (!in) throw Error(on_error, "cannot open '" + path.string() + "'");
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_number(token, path.string()));
  return values;
}

Eigen::Matrix3d matrix_from(const std::vector<double>& v, std::size_t offset) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = v[offset + 3 * r + c];
  }
  return m;
}

bool is_rotation(const Eigen::Matrix3d& m, double tol) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < tol &&
         m.determinant() > 0.0;
}

constexpr double kOrthonormalityTolerance = 1e-3;

}  // namespace

bool glob_match(const std::string& pattern, const std::string& name) {
  std::size_t p = 0, n = 0, star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

BiwiCalibration read_biwi_calibration(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kMissingCalibration, "calibration file '" + path.string() + "' not found");
  }
  std::vector<double> v;
  try {
    v = read_numbers(path, ErrorCode::kMissingCalibration);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) {
      throw Error(ErrorCode::kParseError, "calibration '" + path.string() + "': " + e.what());
    }
    throw;
  }
  if (v.size() != 25 && v.size() != 27) {
    throw Error(ErrorCode::kParseError, "calibration '" + path.string() + "': expected 25 or 27 numbers, got " +
                                            std::to_string(v.size()));
  }
  BiwiCalibration cal;
  const Eigen::Matrix3d k = matrix_from(v, 0);
  cal.rgb_intrinsics.fx = k(0, 0);
  cal.rgb_intrinsics.fy = k(1, 1);
  cal.rgb_intrinsics.cx = k(0, 2);
  cal.rgb_intrinsics.cy = k(1, 2);
  cal.rgb_intrinsics.width = v.size() == 27 ? v[25] : 640.0;
  cal.rgb_intrinsics.height = v.size() == 27 ? v[26] : 480.0;
  if (!cal.rgb_intrinsics.is_valid()) {
    throw Error(ErrorCode::kParseError, "calibration '" + path.string() + "': invalid RGB intrinsics");
  }
  // v[9..12] are distortion coefficients; the pipeline is pinhole-only.
  const Eigen::Matrix3d r = matrix_from(v, 13);
  if (!is_rotation(r, kOrthonormalityTolerance)) {
    throw Error(ErrorCode::kParseError, "calibration '" + path.string() + "': depth-to-RGB matrix is not a rotation");
  }
  cal.rgb_from_depth = SE3Posed{Rotationd::FromMatrix(r), {v[22], v[23], v[24]}, "rgb"};
  return cal;
}

SE3Posed read_biwi_pose(const std::filesystem::path& path, const std::string& frame_tag) {
  std::vector<double> v;
  try {
    v = read_numbers(path, ErrorCode::kMalformedPoseFile);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedPoseFile, "'" + path.string() + "': " + e.what());
  }
  if (v.size() != 12) {
    throw Error(ErrorCode::kMalformedPoseFile, "'" + path.string() + "': expected 12 numbers, got " +
                                                   std::to_string(v.size()));
  }
  const Eigen::Matrix3d r = matrix_from(v, 0);
  if (!is_rotation(r, kOrthonormalityTolerance)) {
    throw Error(ErrorCode::kMalformedPoseFile, "'" + path.string() + "': rotation block is not orthonormal");
  }
  return SE3Posed{Rotationd::FromMatrix(r), {v[9], v[10], v[11]}, frame_tag};
}

PoseLog ingest_biwi(const std::filesystem::path& subject_dir, const BiwiOptions& options) {
  const std::filesystem::path cal_path =
      options.calibration.empty() ? subject_dir / "rgb.cal" : options.calibration;
  return ingest_biwi(subject_dir, read_biwi_calibration(cal_path), options);
}

PoseLog ingest_biwi(const std::filesystem::path& subject_dir, const BiwiCalibration& calibration,
                    const BiwiOptions& options) {
  if (!std::filesystem::is_directory(subject_dir)) {
    throw Error(ErrorCode::kIoError, "'" + subject_dir.string() + "' is not a directory");
  }
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(subject_dir)) {
    if (entry.is_regular_file() && glob_match(options.pose_pattern, entry.path().filename().string())) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no files matching '" + options.pose_pattern + "' in '" +
                                            subject_dir.string() + "'");
  }

  SE3Posed rgb_from_depth = calibration.rgb_from_depth;
  if (options.invert_calibration) rgb_from_depth = inverse(rgb_from_depth);
  rgb_from_depth.frame_tag = "rgb";

  // Frame id: the part of the file name matched by the first '*'.
  const auto star = options.pose_pattern.find('*');
  const std::string prefix = star == std::string::npos ? "" : options.pose_pattern.substr(0, star);
  const std::string suffix = star == std::string::npos ? "" : options.pose_pattern.substr(star + 1);
  const bool simple = star != std::string::npos && suffix.find_first_of("*?") == std::string::npos &&
                      prefix.find('?') == std::string::npos;

  PoseLog log;
  log.subject_id = options.subject_id.empty() ? std::filesystem::absolute(subject_dir).lexically_normal().filename().string()
                                              : options.subject_id;
  if (log.subject_id.empty()) log.subject_id = subject_dir.parent_path().filename().string();
  log.frame_tag = "rgb";
  for (const std::string& name : names) {
    FrameRecord rec;
    rec.frame_id = simple ? name.substr(prefix.size(), name.size() - prefix.size() - suffix.size())
                          : std::filesystem::path(name).stem().string();
    rec.index = log.frames.size();
    rec.pose = compose(rgb_from_depth, read_biwi_pose(subject_dir / name, "depth"));
    rec.intrinsics = calibration.rgb_intrinsics;
    log.frames.push_back(std::move(rec));
  }
  log.validate();
  return log;
}

}  // namespace anchorpose
