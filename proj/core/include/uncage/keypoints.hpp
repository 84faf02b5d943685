#pragma once

#include <array>
#include <string>
#include <vector>

namespace uncage {

/// Visibility follows the usual annotation convention:
/// 0 = absent, 1 = occluded, 2 = visible.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  int visibility = 0;
};

struct InstanceAnnotation {
  std::string instance_id;
  std::array<double, 4> bbox{0, 0, 0, 0}; // x, y, w, h
  double score = 1.0; // detection confidence; 1.0 when the file omits it
  bool has_score = false;
  std::vector<Keypoint> keypoints;
};

struct Frame {
  std::string frame_id;
  std::string group; // optional grouping key (species/sequence); may be empty
  std::vector<InstanceAnnotation> instances;
};

struct KeypointFile {
  std::vector<Frame> frames;
};

/// Parses the keypoint JSON schema:
///   {"frames":[{"frame_id", "group"?, "instances":[
///       {"instance_id", "bbox":[x,y,w,h], "score"?, "keypoints":[[x,y,v],..]}]}]}
/// Malformed structure raises SchemaError naming the offending record;
/// unreadable files raise IoError.
KeypointFile load_keypoints(const std::string& path);

void save_keypoints(const KeypointFile& file, const std::string& path);

} // namespace uncage
