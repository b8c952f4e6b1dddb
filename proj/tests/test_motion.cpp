#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vrqoe/bvh.hpp"
#include "vrqoe/scene.hpp"

using namespace vrqoe;

namespace {

const char* kTwoJointFixture = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Chest
  {
    OFFSET 0 10 0
    CHANNELS 3 Zrotation Xrotation Yrotation
  }
}
MOTION
Frames: 1
Frame Time: 0.0333
1 2 3 0 0 0 0 0 0
)";

MotionClip gaze_fixture() {
  // Shoulders on the x axis, head forward of their midpoint along +z.
  const char* text = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT LeftShoulder
  {
    OFFSET -1 4 0
    CHANNELS 3 Zrotation Xrotation Yrotation
  }
  JOINT RightShoulder
  {
    OFFSET 1 4 0
    CHANNELS 3 Zrotation Xrotation Yrotation
  }
  JOINT Head
  {
    OFFSET 0 5 1
    CHANNELS 3 Zrotation Xrotation Yrotation
  }
}
MOTION
Frames: 1
Frame Time: 0.1
0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
)";
  std::istringstream in(text);
  return parse_bvh(in);
}

}  // namespace

TEST_CASE("two-joint one-frame fixture parses exactly") {
  std::istringstream in(kTwoJointFixture);
  const MotionClip clip = parse_bvh(in);
  REQUIRE(clip.joints.size() == 2);
  CHECK(clip.joints[0].name == "Hips");
  CHECK(clip.joints[0].parent == -1);
  CHECK(clip.joints[1].name == "Chest");
  CHECK(clip.joints[1].parent == 0);
  CHECK(clip.joints[1].offset[1] == 10.0);
  CHECK(clip.channel_count() == 9);
  REQUIRE(clip.frame_count == 1);
  CHECK(clip.value(0, 0) == 1.0);
  CHECK(clip.value(0, 2) == 3.0);
  CHECK(clip.frame_time == doctest::Approx(0.0333));
}

TEST_CASE("declared frame count must match the motion lines") {
  std::string text(kTwoJointFixture);
  text.replace(text.find("Frames: 1"), 9, "Frames: 2");
  std::istringstream in(text);
  CHECK_THROWS_AS(parse_bvh(in), BvhParseError);
  try {
    std::istringstream again(text);
    parse_bvh(again);
  } catch (const BvhParseError& e) {
    CHECK(e.line() > 0);  // the error names the offending line
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("zero declared frames with an empty motion section is valid") {
  std::string text(kTwoJointFixture);
  text.replace(text.find("Frames: 1"), 9, "Frames: 0");
  text.erase(text.find("1 2 3"));
  std::istringstream in(text);
  const MotionClip clip = parse_bvh(in);
  CHECK(clip.frame_count == 0);
  CHECK(clip.joints.size() == 2);
  CHECK_THROWS_AS(forward_kinematics(clip, 0), std::out_of_range);
}

TEST_CASE("non-numeric motion values name the line") {
  std::string text(kTwoJointFixture);
  text.replace(text.find("1 2 3"), 5, "1 x 3");
  std::istringstream in(text);
  CHECK_THROWS_WITH_AS(parse_bvh(in), doctest::Contains("line 15"), BvhParseError);
}

TEST_CASE("end sites parse and survive a round trip") {
  std::string text(kTwoJointFixture);
  const std::string inner = "CHANNELS 3 Zrotation Xrotation Yrotation";
  text.replace(text.find(inner), inner.size(),
               inner + "\n    End Site\n    {\n      OFFSET 0 5 0\n    }");
  std::istringstream in(text);
  const MotionClip clip = parse_bvh(in);
  REQUIRE(clip.joints.size() == 3);
  CHECK(clip.joints[2].end_site);
  CHECK(clip.joints[2].channels.empty());

  std::ostringstream out;
  write_bvh(clip, out);
  std::istringstream back(out.str());
  const MotionClip reparsed = parse_bvh(back);
  REQUIRE(reparsed.joints.size() == clip.joints.size());
  for (std::size_t i = 0; i < clip.joints.size(); ++i) {
    CHECK(reparsed.joints[i].name == clip.joints[i].name);
    CHECK(reparsed.joints[i].parent == clip.joints[i].parent);
    CHECK(reparsed.joints[i].offset == clip.joints[i].offset);
    CHECK(reparsed.joints[i].channels == clip.joints[i].channels);
  }
  CHECK(reparsed.frame_count == clip.frame_count);
  CHECK(reparsed.values == clip.values);
  CHECK(reparsed.frame_time == clip.frame_time);
}

TEST_CASE("forward kinematics with zero rotations accumulates offsets") {
  std::istringstream in(kTwoJointFixture);
  MotionClip clip = parse_bvh(in);
  for (double& v : clip.values) v = 0.0;
  const auto positions = forward_kinematics(clip, 0);
  CHECK(positions[0].isApprox(Eigen::Vector3d(0, 0, 0), 1e-12));
  CHECK(positions[1].isApprox(Eigen::Vector3d(0, 10, 0), 1e-12));
}

TEST_CASE("root translation shifts every joint") {
  std::istringstream in(kTwoJointFixture);
  const MotionClip clip = parse_bvh(in);  // root translation channels carry 1 2 3
  const auto positions = forward_kinematics(clip, 0);
  CHECK(positions[0].isApprox(Eigen::Vector3d(1, 2, 3), 1e-12));
  CHECK(positions[1].isApprox(Eigen::Vector3d(1, 12, 3), 1e-12));
}

TEST_CASE("a 90 degree yaw maps a +x offset onto -z") {
  const char* text = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 1 Yrotation
  JOINT Arm
  {
    OFFSET 1 0 0
    CHANNELS 1 Yrotation
  }
}
MOTION
Frames: 1
Frame Time: 0.1
90 0
)";
  std::istringstream in(text);
  const MotionClip clip = parse_bvh(in);
  const auto positions = forward_kinematics(clip, 0);
  // Hand evaluation: R_y(90) * (1,0,0) = (0,0,-1) in the column-vector
  // convention documented by the parser.
  CHECK(positions[1].isApprox(Eigen::Vector3d(0, 0, -1), 1e-9));
}

TEST_CASE("gaze points from the shoulder axis toward the head half-plane") {
  const MotionClip clip = gaze_fixture();
  const ScenePose pose = pose_from_frame(clip, 0, GazeJointNames{}, 1.0);
  CHECK(pose.gaze.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pose.gaze.y() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pose.position.norm() == doctest::Approx(0.0));
}

TEST_CASE("gaze rotates with the skeleton") {
  MotionClip clip = gaze_fixture();
  clip.values[5] = 90.0;  // root Yrotation
  const ScenePose pose = pose_from_frame(clip, 0, GazeJointNames{}, 1.0);
  // Recompute by rotating the unrotated gaze (0,1) by the same yaw: the
  // ground-plane image of R_y(90) applied to +z is +x.
  CHECK(pose.gaze.x() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pose.gaze.y() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("coincident shoulders are rejected") {
  MotionClip clip = gaze_fixture();
  clip.joints[1].offset = clip.joints[2].offset;  // collapse the shoulder axis
  CHECK_THROWS_WITH_AS(pose_from_frame(clip, 0, GazeJointNames{}, 1.0),
                       doctest::Contains("coincident"), std::runtime_error);
}

TEST_CASE("missing gaze joints are listed") {
  std::istringstream in(kTwoJointFixture);
  const MotionClip clip = parse_bvh(in);
  CHECK_THROWS_WITH_AS(pose_from_frame(clip, 0, GazeJointNames{}, 1.0),
                       doctest::Contains("LeftShoulder"), std::runtime_error);
}

TEST_CASE("synthetic traces are deterministic, bounded and well shaped") {
  const SceneBounds bounds{0, 0, 10, 10};
  const SceneTrace a = synth_trace(2, 1, bounds, 7);
  const SceneTrace b = synth_trace(2, 1, bounds, 7);
  REQUIRE(a.slot_count() == 1);
  for (int k = 0; k < 2; ++k) {
    CHECK(a.slots[0][k].position.x() == b.slots[0][k].position.x());
    CHECK(a.slots[0][k].position.y() == b.slots[0][k].position.y());
    CHECK(a.slots[0][k].gaze.x() == b.slots[0][k].gaze.x());
    CHECK(a.slots[0][k].gaze.y() == b.slots[0][k].gaze.y());
  }

  const SceneTrace big = synth_trace(5, 100, bounds, 1);
  CHECK(big.slot_count() == 100);
  CHECK(big.users() == 5);
  for (const auto& slot : big.slots) {
    REQUIRE(slot.size() == 5);
    for (const ScenePose& p : slot) {
      CHECK(p.position.x() >= bounds.min_x);
      CHECK(p.position.x() <= bounds.max_x);
      CHECK(p.position.y() >= bounds.min_y);
      CHECK(p.position.y() <= bounds.max_y);
      CHECK(p.gaze.norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  CHECK_THROWS_AS(synth_trace(1, 5, bounds, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_trace(2, 0, bounds, 1), std::invalid_argument);
}

TEST_CASE("trace files round-trip") {
  const SceneTrace trace = synth_trace(3, 7, SceneBounds{}, 11);
  std::ostringstream out;
  save_trace(trace, out);
  std::istringstream in(out.str());
  const SceneTrace loaded = load_trace(in);
  REQUIRE(loaded.slot_count() == trace.slot_count());
  REQUIRE(loaded.users() == trace.users());
  for (std::size_t t = 0; t < trace.slot_count(); ++t)
    for (int k = 0; k < trace.users(); ++k) {
      CHECK(loaded.slots[t][k].position.isApprox(trace.slots[t][k].position, 1e-12));
      CHECK(loaded.slots[t][k].gaze.isApprox(trace.slots[t][k].gaze, 1e-12));
    }
}

TEST_CASE("attention levels follow the half-open vision sectors") {
  CHECK(attention_level(15) == 3);
  CHECK(attention_level(45) == 2);
  CHECK(attention_level(75) == 1);
  CHECK(attention_level(120) == 0);
  // boundaries fall to the lower level, 180 included
  CHECK(attention_level(0) == 3);
  CHECK(attention_level(30) == 2);
  CHECK(attention_level(60) == 1);
  CHECK(attention_level(90) == 0);
  CHECK(attention_level(180) == 0);
  CHECK_THROWS_AS(attention_level(-1), std::domain_error);
  CHECK_THROWS_AS(attention_level(180.5), std::domain_error);
}

TEST_CASE("attention level is non-increasing in the angle") {
  int previous = 3;
  for (double angle = 0.0; angle <= 180.0; angle += 0.25) {
    const int level = attention_level(angle);
    CHECK(level <= previous);
    previous = level;
  }
}

TEST_CASE("snapshot counts hand-constructed geometry") {
  constexpr double kPi = 3.14159265358979323846;
  std::vector<ScenePose> poses(2);
  poses[0].position = {0, 0};
  poses[0].gaze = {1, 0};
  poses[1].position = {std::cos(10 * kPi / 180), std::sin(10 * kPi / 180)};
  poses[1].gaze = {0, 1};
  const AttentionSnapshot snap = attention_snapshot(poses);
  CHECK(snap.counts[0][3] == 1);  // 10 degrees off gaze: central vision
  CHECK(snap.counts[0][0] + snap.counts[0][1] + snap.counts[0][2] == 0);
}

TEST_CASE("users looking away from each other see only blind spots") {
  std::vector<ScenePose> poses(2);
  poses[0].position = {0, 0};
  poses[0].gaze = {-1, 0};
  poses[1].position = {1, 0};
  poses[1].gaze = {1, 0};
  const AttentionSnapshot snap = attention_snapshot(poses);
  CHECK(snap.counts[0][0] == 1);
  CHECK(snap.counts[1][0] == 1);
}

TEST_CASE("coincident characters land in central vision") {
  std::vector<ScenePose> poses(2);
  poses[0].position = {2, 2};
  poses[1].position = {2, 2};
  const AttentionSnapshot snap = attention_snapshot(poses);
  CHECK(snap.counts[0][3] == 1);
  CHECK(snap.counts[1][3] == 1);
}

TEST_CASE("every snapshot row sums to users minus one") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneTrace trace = synth_trace(5, 3, SceneBounds{}, seed);
    for (const auto& slot : trace.slots) {
      const AttentionSnapshot snap = attention_snapshot(slot);
      for (int k = 0; k < snap.users(); ++k) CHECK(snap.observed(k) == 4);
    }
  }
}

TEST_CASE("traces built from clips stay inside the scene") {
  std::vector<MotionClip> clips{gaze_fixture()};
  const SceneBounds bounds{0, 0, 10, 10};
  const SceneTrace trace = trace_from_clips(clips, 3, 5, bounds, GazeJointNames{}, 0.001, 1.0, 3);
  CHECK(trace.users() == 3);
  CHECK(trace.slot_count() == 5);
  for (const auto& slot : trace.slots)
    for (const ScenePose& p : slot) {
      CHECK(p.position.x() >= bounds.min_x);
      CHECK(p.position.x() <= bounds.max_x);
      CHECK(p.gaze.norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
  const SceneTrace again = trace_from_clips(clips, 3, 5, bounds, GazeJointNames{}, 0.001, 1.0, 3);
  CHECK(again.slots[4][2].position.x() == trace.slots[4][2].position.x());
  CHECK(again.slots[4][2].position.y() == trace.slots[4][2].position.y());
}
