#include "uncage/keypoints.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "uncage/errors.hpp"

namespace uncage {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& where) {
  if (!j.is_number())
    throw SchemaError(where + ": expected a number");
  return j.get<double>();
}

Keypoint parse_keypoint(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw SchemaError(where + ": keypoint must be [x, y, visibility]");
  Keypoint kp;
  kp.x = require_number(j[0], where);
  kp.y = require_number(j[1], where);
  if (!j[2].is_number_integer() && !j[2].is_number_unsigned())
    throw SchemaError(where + ": visibility must be an integer");
  kp.visibility = j[2].get<int>();
  if (kp.visibility < 0 || kp.visibility > 2)
    throw SchemaError(where + ": visibility must be 0, 1, or 2");
  if (kp.visibility > 0 && (!std::isfinite(kp.x) || !std::isfinite(kp.y)))
    throw SchemaError(where + ": annotated keypoint coordinates must be finite");
  return kp;
}

InstanceAnnotation parse_instance(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": instance must be an object");
  InstanceAnnotation inst;
  if (!j.contains("instance_id") || !j["instance_id"].is_string())
    throw SchemaError(where + ": missing string instance_id");
  inst.instance_id = j["instance_id"].get<std::string>();
  const std::string tag = where + " instance '" + inst.instance_id + "'";
  if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4)
    throw SchemaError(tag + ": bbox must be [x, y, w, h]");
  for (std::size_t i = 0; i < 4; ++i)
    inst.bbox[i] = require_number(j["bbox"][i], tag + " bbox");
  if (j.contains("score")) {
    inst.score = require_number(j["score"], tag + " score");
    inst.has_score = true;
  }
  if (!j.contains("keypoints") || !j["keypoints"].is_array())
    throw SchemaError(tag + ": missing keypoints array");
  for (const json& kp : j["keypoints"])
    inst.keypoints.push_back(parse_keypoint(kp, tag));
  return inst;
}

} // namespace

KeypointFile load_keypoints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keypoint file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    // parse_error for bad syntax, out_of_range for numbers a double
    // cannot hold; both mean the file is unusable.
    throw SchemaError("keypoint file " + path + ": " + e.what());
  }
  if (!root.is_object() || !root.contains("frames") ||
      !root["frames"].is_array())
    throw SchemaError("keypoint file " + path +
                      ": top level must be {\"frames\": [...]}");

  KeypointFile file;
  for (const json& jf : root["frames"]) {
    if (!jf.is_object() || !jf.contains("frame_id") ||
        !jf["frame_id"].is_string())
      throw SchemaError("keypoint file " + path +
                        ": frame missing string frame_id");
    Frame frame;
    frame.frame_id = jf["frame_id"].get<std::string>();
    const std::string where = "frame '" + frame.frame_id + "'";
    if (jf.contains("group")) {
      if (!jf["group"].is_string())
        throw SchemaError(where + ": group must be a string");
      frame.group = jf["group"].get<std::string>();
    }
    if (jf.contains("instances")) {
      if (!jf["instances"].is_array())
        throw SchemaError(where + ": instances must be an array");
      for (const json& ji : jf["instances"])
        frame.instances.push_back(parse_instance(ji, where));
    }
    file.frames.push_back(std::move(frame));
  }
  return file;
}

void save_keypoints(const KeypointFile& file, const std::string& path) {
  json root;
  root["frames"] = json::array();
  for (const Frame& frame : file.frames) {
    json jf;
    jf["frame_id"] = frame.frame_id;
    if (!frame.group.empty()) jf["group"] = frame.group;
    jf["instances"] = json::array();
    for (const InstanceAnnotation& inst : frame.instances) {
      json ji;
      ji["instance_id"] = inst.instance_id;
      ji["bbox"] = inst.bbox;
      if (inst.has_score) ji["score"] = inst.score;
      json kps = json::array();
      for (const Keypoint& kp : inst.keypoints)
        kps.push_back({kp.x, kp.y, kp.visibility});
      ji["keypoints"] = std::move(kps);
      jf["instances"].push_back(std::move(ji));
    }
    root["frames"].push_back(std::move(jf));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write keypoint file: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw IoError("write failure: " + path);
}

} // namespace uncage
