#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vrqoe/bvh.hpp"

namespace vrqoe {

inline constexpr int kAttentionLevels = 4;

struct SceneBounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 10.0;
  double max_y = 10.0;
};

// One user's ground-plane placement in the virtual scene.
struct ScenePose {
  int user_id = 0;
  Eigen::Vector2d position{0.0, 0.0};  // metres
  Eigen::Vector2d gaze{1.0, 0.0};      // unit vector
};

struct SceneTrace {
  std::vector<std::vector<ScenePose>> slots;  // slots[t][k]

  int users() const { return slots.empty() ? 0 : static_cast<int>(slots.front().size()); }
  std::size_t slot_count() const { return slots.size(); }
};

// Per-user character counts by attention level; every other avatar lands in
// exactly one level, so each row sums to users-1.
struct AttentionSnapshot {
  std::vector<std::array<int, kAttentionLevels>> counts;

  int users() const { return static_cast<int>(counts.size()); }
  int observed(int user) const;  // row sum
};

// Horizontal angle between gaze and target bearing mapped onto the four
// vision levels: [0,30) central=3, [30,60) binocular=2, [60,90) monocular=1,
// [90,180] blind spot=0. Upper boundaries open, 180 included in level 0.
int attention_level(double angle_deg);

// Absolute angle in degrees between the observer's gaze and the direction to
// `target`, in [0, 180]. The caller must handle coincident positions.
double bearing_angle_deg(const ScenePose& observer, const Eigen::Vector2d& target);

// Classifies every ordered pair (observer, other). Coincident positions count
// as central vision: a character at zero distance gets maximal attention.
AttentionSnapshot attention_snapshot(const std::vector<ScenePose>& poses);

// Seeded random-walk trace: positions clipped to bounds, headings turned by a
// bounded random angle each slot. Identical seeds give identical traces.
SceneTrace synth_trace(int users, int slots, const SceneBounds& bounds, std::uint64_t seed);

// Newline-delimited records, one per slot:
//   {"slot":t,"poses":[{"id":k,"pos":[x,y],"gaze":[gx,gy]},...]}
void save_trace(const SceneTrace& trace, std::ostream& out);
void save_trace_file(const SceneTrace& trace, const std::string& path);
SceneTrace load_trace(std::istream& in);
SceneTrace load_trace_file(const std::string& path);

struct GazeJointNames {
  std::string head = "Head";
  std::string left_shoulder = "LeftShoulder";
  std::string right_shoulder = "RightShoulder";
};

// Ground-plane pose from one motion-capture frame: position is the root
// projected to the (x, z) plane scaled by `metres_per_unit`; gaze is the unit
// normal of the shoulder axis pointing into the half-plane that contains the
// head, projected to the same plane.
ScenePose pose_from_frame(const MotionClip& clip, std::size_t frame, const GazeJointNames& names,
                          double metres_per_unit);

// Builds a trace for `users` users out of parsed clips (cycled when there are
// fewer clips than users). Each user's clip is rotated by a random yaw and
// re-anchored at a random point inside the bounds, mirroring how multi-user
// interaction data is augmented from single-subject recordings. Slot t samples
// the clip every slot_seconds of motion time.
SceneTrace trace_from_clips(const std::vector<MotionClip>& clips, int users, int slots,
                            const SceneBounds& bounds, const GazeJointNames& names,
                            double metres_per_unit, double slot_seconds, std::uint64_t seed);

}  // namespace vrqoe
