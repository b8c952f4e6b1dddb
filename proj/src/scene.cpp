#include "vrqoe/scene.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "vrqoe/rng.hpp"

namespace vrqoe {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kRadToDeg = 57.295779513082320877;

// Random-walk tuning for synthetic traces. Steps are a fraction of the scene
// so a 100-slot episode wanders across it without pinning to the walls.
constexpr double kStepFraction = 0.04;
constexpr double kMaxTurnRad = 0.6;

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }
}  // namespace

int AttentionSnapshot::observed(int user) const {
  const auto& row = counts.at(static_cast<std::size_t>(user));
  int total = 0;
  for (int c : row) total += c;
  return total;
}

int attention_level(double angle_deg) {
  if (!(angle_deg >= 0.0) || angle_deg > 180.0)
    throw std::domain_error("attention_level: angle " + std::to_string(angle_deg) +
                            " outside [0, 180]");
  if (angle_deg < 30.0) return 3;
  if (angle_deg < 60.0) return 2;
  if (angle_deg < 90.0) return 1;
  return 0;
}

double bearing_angle_deg(const ScenePose& observer, const Eigen::Vector2d& target) {
  const Eigen::Vector2d to_target = target - observer.position;
  const double norm = to_target.norm();
  if (norm == 0.0)
    throw std::invalid_argument("bearing_angle_deg: coincident observer and target");
  const double cosine = clamp(observer.gaze.dot(to_target) / norm, -1.0, 1.0);
  return std::acos(cosine) * kRadToDeg;
}

AttentionSnapshot attention_snapshot(const std::vector<ScenePose>& poses) {
  if (poses.size() < 2)
    throw std::invalid_argument("attention_snapshot: need at least two poses");
  AttentionSnapshot snap;
  snap.counts.assign(poses.size(), {0, 0, 0, 0});
  for (std::size_t k = 0; k < poses.size(); ++k) {
    for (std::size_t j = 0; j < poses.size(); ++j) {
      if (j == k) continue;
      int level = 3;  // coincident characters sit in central vision
      if ((poses[j].position - poses[k].position).norm() > 0.0)
        level = attention_level(bearing_angle_deg(poses[k], poses[j].position));
      ++snap.counts[k][static_cast<std::size_t>(level)];
    }
  }
  return snap;
}

SceneTrace synth_trace(int users, int slots, const SceneBounds& bounds, std::uint64_t seed) {
  if (users < 2) throw std::invalid_argument("synth_trace: need at least two users");
  if (slots < 1) throw std::invalid_argument("synth_trace: need at least one slot");
  if (!(bounds.max_x > bounds.min_x) || !(bounds.max_y > bounds.min_y))
    throw std::invalid_argument("synth_trace: empty bounds");

  Rng rng(seed);
  const double step_x = (bounds.max_x - bounds.min_x) * kStepFraction;
  const double step_y = (bounds.max_y - bounds.min_y) * kStepFraction;

  std::vector<Eigen::Vector2d> position(static_cast<std::size_t>(users));
  std::vector<double> heading(static_cast<std::size_t>(users));
  for (int k = 0; k < users; ++k) {
    position[k].x() = rng.uniform(bounds.min_x, bounds.max_x);
    position[k].y() = rng.uniform(bounds.min_y, bounds.max_y);
    heading[k] = rng.uniform(0.0, 2.0 * kPi);
  }

  SceneTrace trace;
  trace.slots.reserve(static_cast<std::size_t>(slots));
  for (int t = 0; t < slots; ++t) {
    std::vector<ScenePose> slot(static_cast<std::size_t>(users));
    for (int k = 0; k < users; ++k) {
      slot[k].user_id = k;
      slot[k].position = position[k];
      slot[k].gaze = {std::cos(heading[k]), std::sin(heading[k])};
    }
    trace.slots.push_back(std::move(slot));
    for (int k = 0; k < users; ++k) {
      position[k].x() = clamp(position[k].x() + rng.uniform(-step_x, step_x),
                              bounds.min_x, bounds.max_x);
      position[k].y() = clamp(position[k].y() + rng.uniform(-step_y, step_y),
                              bounds.min_y, bounds.max_y);
      heading[k] += rng.uniform(-kMaxTurnRad, kMaxTurnRad);
    }
  }
  return trace;
}

void save_trace(const SceneTrace& trace, std::ostream& out) {
  for (std::size_t t = 0; t < trace.slots.size(); ++t) {
    nlohmann::json record;
    record["slot"] = t;
    nlohmann::json poses = nlohmann::json::array();
    for (const ScenePose& p : trace.slots[t]) {
      poses.push_back({{"id", p.user_id},
                       {"pos", {p.position.x(), p.position.y()}},
                       {"gaze", {p.gaze.x(), p.gaze.y()}}});
    }
    record["poses"] = std::move(poses);
    out << record.dump() << "\n";
  }
}

void save_trace_file(const SceneTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  save_trace(trace, out);
}

SceneTrace load_trace(std::istream& in) {
  SceneTrace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::size_t slot = record.at("slot").get<std::size_t>();
    if (slot != trace.slots.size())
      throw std::runtime_error("trace line " + std::to_string(line_no) +
                               ": slot indices must be consecutive from 0");
    std::vector<ScenePose> poses;
    for (const auto& p : record.at("poses")) {
      ScenePose pose;
      pose.user_id = p.at("id").get<int>();
      pose.position = {p.at("pos").at(0).get<double>(), p.at("pos").at(1).get<double>()};
      pose.gaze = {p.at("gaze").at(0).get<double>(), p.at("gaze").at(1).get<double>()};
      const double norm = pose.gaze.norm();
      if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6)
        throw std::runtime_error("trace line " + std::to_string(line_no) +
                                 ": gaze is not a unit vector");
      pose.gaze /= norm;
      poses.push_back(pose);
    }
    if (!trace.slots.empty() && poses.size() != trace.slots.front().size())
      throw std::runtime_error("trace line " + std::to_string(line_no) +
                               ": user count changed mid-trace");
    trace.slots.push_back(std::move(poses));
  }
  if (trace.slots.empty()) throw std::runtime_error("trace stream contains no slots");
  return trace;
}

SceneTrace load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return load_trace(in);
}

ScenePose pose_from_frame(const MotionClip& clip, std::size_t frame, const GazeJointNames& names,
                          double metres_per_unit) {
  const int head = clip.find_joint(names.head);
  const int left = clip.find_joint(names.left_shoulder);
  const int right = clip.find_joint(names.right_shoulder);
  if (head < 0 || left < 0 || right < 0) {
    std::string missing;
    if (head < 0) missing += " " + names.head;
    if (left < 0) missing += " " + names.left_shoulder;
    if (right < 0) missing += " " + names.right_shoulder;
    throw std::runtime_error("clip is missing required joints:" + missing);
  }

  const std::vector<Eigen::Vector3d> joints = forward_kinematics(clip, frame);
  const auto ground = [](const Eigen::Vector3d& v) { return Eigen::Vector2d(v.x(), v.z()); };

  const Eigen::Vector2d ls = ground(joints[static_cast<std::size_t>(left)]);
  const Eigen::Vector2d rs = ground(joints[static_cast<std::size_t>(right)]);
  const Eigen::Vector2d axis = rs - ls;
  if (axis.norm() < 1e-9)
    throw std::runtime_error("degenerate pose: shoulders are coincident in the ground plane");

  Eigen::Vector2d normal(-axis.y(), axis.x());
  const Eigen::Vector2d head_dir = ground(joints[static_cast<std::size_t>(head)]) - (ls + rs) / 2.0;
  if (normal.dot(head_dir) < 0.0) normal = -normal;

  ScenePose pose;
  pose.position = ground(joints[0]) * metres_per_unit;
  pose.gaze = normal.normalized();
  return pose;
}

SceneTrace trace_from_clips(const std::vector<MotionClip>& clips, int users, int slots,
                            const SceneBounds& bounds, const GazeJointNames& names,
                            double metres_per_unit, double slot_seconds, std::uint64_t seed) {
  if (clips.empty()) throw std::invalid_argument("trace_from_clips: no clips");
  if (users < 2) throw std::invalid_argument("trace_from_clips: need at least two users");
  if (slots < 1) throw std::invalid_argument("trace_from_clips: need at least one slot");

  Rng rng(seed);
  const double margin_x = 0.1 * (bounds.max_x - bounds.min_x);
  const double margin_y = 0.1 * (bounds.max_y - bounds.min_y);

  std::vector<std::vector<ScenePose>> per_user(static_cast<std::size_t>(users));
  for (int k = 0; k < users; ++k) {
    const MotionClip& clip = clips[static_cast<std::size_t>(k) % clips.size()];
    if (clip.frame_count == 0)
      throw std::invalid_argument("trace_from_clips: clip has no frames");
    const std::size_t stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(slot_seconds / clip.frame_time)));

    const double yaw = rng.uniform(0.0, 2.0 * kPi);
    const Eigen::Rotation2D<double> rot(yaw);
    const Eigen::Vector2d anchor(rng.uniform(bounds.min_x + margin_x, bounds.max_x - margin_x),
                                 rng.uniform(bounds.min_y + margin_y, bounds.max_y - margin_y));

    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    std::vector<ScenePose>& track = per_user[static_cast<std::size_t>(k)];
    for (int t = 0; t < slots; ++t) {
      const std::size_t frame = std::min(static_cast<std::size_t>(t) * stride,
                                         clip.frame_count - 1);
      ScenePose pose = pose_from_frame(clip, frame, names, metres_per_unit);
      if (t == 0) origin = pose.position;
      pose.user_id = k;
      pose.position = rot * (pose.position - origin) + anchor;
      pose.position.x() = clamp(pose.position.x(), bounds.min_x, bounds.max_x);
      pose.position.y() = clamp(pose.position.y(), bounds.min_y, bounds.max_y);
      pose.gaze = (rot * pose.gaze).normalized();
      track.push_back(pose);
    }
  }

  SceneTrace trace;
  for (int t = 0; t < slots; ++t) {
    std::vector<ScenePose> slot;
    slot.reserve(static_cast<std::size_t>(users));
    for (int k = 0; k < users; ++k) slot.push_back(per_user[static_cast<std::size_t>(k)][t]);
    trace.slots.push_back(std::move(slot));
  }
  return trace;
}

}  // namespace vrqoe
