#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrqoe {

enum class BvhChannel { Xposition, Yposition, Zposition, Xrotation, Yrotation, Zrotation };

const char* bvh_channel_name(BvhChannel channel);

struct BvhJoint {
  std::string name;
  int parent = -1;  // -1 only for the root, which is stored first
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  std::vector<BvhChannel> channels;  // empty for end sites
  bool end_site = false;
};

// Skeleton hierarchy plus the per-frame channel values (Euler angles in
// degrees, translations in the file's length unit). Rotations compose in the
// order the channels appear in the file, each about the joint's local axis.
struct MotionClip {
  std::vector<BvhJoint> joints;
  std::size_t frame_count = 0;
  double frame_time = 0.0;
  std::vector<double> values;  // frame_count x channel_count, row-major

  std::size_t channel_count() const;
  double value(std::size_t frame, std::size_t channel) const;
  int find_joint(const std::string& name) const;  // -1 when absent
};

class BvhParseError : public std::runtime_error {
 public:
  BvhParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

MotionClip parse_bvh(std::istream& in);
MotionClip parse_bvh_file(const std::string& path);
void write_bvh(const MotionClip& clip, std::ostream& out);

// Global joint positions for one frame, in the order joints are stored.
// Composition is root-to-leaf: translate by the joint offset, then apply the
// joint's channels in file order. Rotations are right-handed about the local
// axes, column-vector convention (a +90 deg Yrotation maps +X onto -Z).
std::vector<Eigen::Vector3d> forward_kinematics(const MotionClip& clip, std::size_t frame);

}  // namespace vrqoe
