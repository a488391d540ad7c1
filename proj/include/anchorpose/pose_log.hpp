#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "anchorpose/camera.hpp"
#include "anchorpose/geometry.hpp"

namespace anchorpose {

struct FrameRecord {
  std::string frame_id;
  std::size_t index = 0;
  SE3Posed pose;
  std::optional<Intrinsicsd> intrinsics;
};

/// Ordered frames of one subject/sequence, all in the same coordinate frame.
struct PoseLog {
  std::string subject_id;
  std::string frame_tag;
  std::vector<FrameRecord> frames;

  /// Throws InvariantViolation unless the log is non-empty, frame ids are
  /// unique, indices run 0..n-1 in order and every pose carries frame_tag.
  void validate() const;

  const FrameRecord* find(const std::string& frame_id) const;
  const FrameRecord& at(const std::string& frame_id) const;
};

// ---------------------------------------------------------------------------
// Canonical text format
//
//   #poselog v1 frame_tag=<tag>
//   subject_id,frame_id,index,qw,qx,qy,qz,tx_mm,ty_mm,tz_mm,fx,fy,cx,cy,width,height
//   S01,f0000,0,1,0,0,0,0,0,800,,,,,,
//
// Numbers use the shortest round-trip decimal form; intrinsics columns are
// empty when a frame has none. One file may hold several subjects.
// ---------------------------------------------------------------------------

inline constexpr int kPoseLogFormatVersion = 1;

/// Quaternions whose norm deviates from 1 by more than this are rejected.
inline constexpr double kQuaternionNormTolerance = 1e-3;

void write_canonical(std::ostream& out, const std::vector<PoseLog>& logs);
void write_canonical(const std::filesystem::path& path, const std::vector<PoseLog>& logs);

/// Parses every subject in the stream, in order of first appearance.
/// `source` names the input in diagnostics.
std::vector<PoseLog> read_canonical(std::istream& in, const std::string& source = "<stream>");
std::vector<PoseLog> ingest_canonical_all(const std::filesystem::path& path);

/// Single-subject convenience; InvariantViolation when the file holds more.
PoseLog ingest_canonical(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// BIWI adapter
// ---------------------------------------------------------------------------

/// Per-subject calibration: RGB intrinsics and the depth-to-RGB rigid
/// transform (x_rgb = R x_depth + t).
struct BiwiCalibration {
  Intrinsicsd rgb_intrinsics;
  SE3Posed rgb_from_depth;
};

/**
 * Reads a BIWI-style calibration file: 3x3 intrinsic matrix, 4 distortion
 * coefficients (ignored), 3x3 rotation, 3-vector translation, and optionally
 * image width and height (defaults 640 x 480). Whitespace separated.
 */
BiwiCalibration read_biwi_calibration(const std::filesystem::path& path);

struct BiwiOptions {
  std::string pose_pattern = "frame_*_pose.txt";  // '*' matches the frame id
  std::filesystem::path calibration;              // empty: <dir>/rgb.cal
  std::string subject_id;                         // empty: directory name
  bool invert_calibration = false;  // file stores rgb->depth instead
};

/// Reads one 3x3 rotation (row by row) followed by a translation in mm.
SE3Posed read_biwi_pose(const std::filesystem::path& path, const std::string& frame_tag);

/// Ingests a subject directory and re-expresses every pose in the RGB camera
/// frame: P_rgb = T_rgb<-depth * P_depth, frame_tag "rgb".
PoseLog ingest_biwi(const std::filesystem::path& subject_dir, const BiwiOptions& options = {});

PoseLog ingest_biwi(const std::filesystem::path& subject_dir, const BiwiCalibration& calibration,
                    const BiwiOptions& options = {});

/// Simple glob with '*' wildcards, matched against a whole file name.
bool glob_match(const std::string& pattern, const std::string& name);

}  // namespace anchorpose
