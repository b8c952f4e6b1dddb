#include "vrqoe/bvh.hpp"

#include <Eigen/Geometry>

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace vrqoe {

namespace {
constexpr double kDegToRad = 0.017453292519943295;

// Whitespace tokenizer that remembers the line each token started on, so
// errors can point at the offending line.
class Lexer {
 public:
  explicit Lexer(std::istream& in) : in_(in) {}

  bool next(std::string& token) {
    token.clear();
    int c = in_.get();
    while (c != EOF && std::isspace(c)) {
      if (c == '\n') ++line_;
      c = in_.get();
    }
    if (c == EOF) return false;
    token_line_ = line_;
    while (c != EOF && !std::isspace(c)) {
      token.push_back(static_cast<char>(c));
      c = in_.get();
    }
    if (c == '\n') ++line_;
    return true;
  }

  std::string expect(const std::string& what) {
    std::string token;
    if (!next(token)) throw BvhParseError(line_, "unexpected end of file, expected " + what);
    return token;
  }

  void expect_exact(const std::string& literal) {
    const std::string token = expect("'" + literal + "'");
    if (token != literal)
      throw BvhParseError(token_line_, "expected '" + literal + "', got '" + token + "'");
  }

  double expect_number(const std::string& what) {
    const std::string token = expect(what);
    return parse_number(token, what);
  }

  double parse_number(const std::string& token, const std::string& what) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      throw BvhParseError(token_line_, "expected " + what + ", got '" + token + "'");
    }
    if (used != token.size())
      throw BvhParseError(token_line_, "expected " + what + ", got '" + token + "'");
    return value;
  }

  int line() const { return line_; }
  int token_line() const { return token_line_; }

 private:
  std::istream& in_;
  int line_ = 1;
  int token_line_ = 1;
};

BvhChannel channel_from_name(const std::string& name, int line) {
  if (name == "Xposition") return BvhChannel::Xposition;
  if (name == "Yposition") return BvhChannel::Yposition;
  if (name == "Zposition") return BvhChannel::Zposition;
  if (name == "Xrotation") return BvhChannel::Xrotation;
  if (name == "Yrotation") return BvhChannel::Yrotation;
  if (name == "Zrotation") return BvhChannel::Zrotation;
  throw BvhParseError(line, "unknown channel '" + name + "'");
}

// Parses one joint block (already past the joint's name token).
void parse_joint_body(Lexer& lex, MotionClip& clip, int joint_index) {
  lex.expect_exact("{");
  lex.expect_exact("OFFSET");
  for (int axis = 0; axis < 3; ++axis)
    clip.joints[joint_index].offset[axis] = lex.expect_number("offset value");

  std::string token = lex.expect("CHANNELS, JOINT, End or '}'");
  if (token == "CHANNELS") {
    const int count = static_cast<int>(lex.expect_number("channel count"));
    if (count < 0) throw BvhParseError(lex.token_line(), "negative channel count");
    for (int i = 0; i < count; ++i) {
      const std::string name = lex.expect("channel name");
      clip.joints[joint_index].channels.push_back(channel_from_name(name, lex.token_line()));
    }
    token = lex.expect("JOINT, End or '}'");
  } else if (!clip.joints[joint_index].end_site) {
    throw BvhParseError(lex.token_line(), "joint '" + clip.joints[joint_index].name +
                                              "' is missing a CHANNELS declaration");
  }

  while (token != "}") {
    if (token == "JOINT" || token == "End") {
      BvhJoint child;
      child.parent = joint_index;
      if (token == "End") {
        lex.expect_exact("Site");
        child.name = clip.joints[joint_index].name + "_End";
        child.end_site = true;
      } else {
        child.name = lex.expect("joint name");
      }
      clip.joints.push_back(child);
      const int child_index = static_cast<int>(clip.joints.size()) - 1;
      parse_joint_body(lex, clip, child_index);
    } else {
      throw BvhParseError(lex.token_line(), "expected JOINT, End or '}', got '" + token + "'");
    }
    token = lex.expect("JOINT, End or '}'");
  }
}

void write_joint(const MotionClip& clip, std::size_t index, std::ostream& out, int depth,
                 std::vector<bool>& emitted) {
  const BvhJoint& joint = clip.joints[index];
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  if (joint.end_site) {
    out << pad << "End Site\n";
  } else if (joint.parent < 0) {
    out << pad << "ROOT " << joint.name << "\n";
  } else {
    out << pad << "JOINT " << joint.name << "\n";
  }
  out << pad << "{\n";
  out << pad << "  OFFSET " << joint.offset[0] << " " << joint.offset[1] << " "
      << joint.offset[2] << "\n";
  if (!joint.channels.empty()) {
    out << pad << "  CHANNELS " << joint.channels.size();
    for (BvhChannel c : joint.channels) out << " " << bvh_channel_name(c);
    out << "\n";
  }
  emitted[index] = true;
  for (std::size_t j = index + 1; j < clip.joints.size(); ++j) {
    if (!emitted[j] && clip.joints[j].parent == static_cast<int>(index))
      write_joint(clip, j, out, depth + 1, emitted);
  }
  out << pad << "}\n";
}

}  // namespace

const char* bvh_channel_name(BvhChannel channel) {
  switch (channel) {
    case BvhChannel::Xposition: return "Xposition";
    case BvhChannel::Yposition: return "Yposition";
    case BvhChannel::Zposition: return "Zposition";
    case BvhChannel::Xrotation: return "Xrotation";
    case BvhChannel::Yrotation: return "Yrotation";
    case BvhChannel::Zrotation: return "Zrotation";
  }
  return "?";
}

std::size_t MotionClip::channel_count() const {
  std::size_t n = 0;
  for (const BvhJoint& j : joints) n += j.channels.size();
  return n;
}

double MotionClip::value(std::size_t frame, std::size_t channel) const {
  return values[frame * channel_count() + channel];
}

int MotionClip::find_joint(const std::string& name) const {
  for (std::size_t i = 0; i < joints.size(); ++i)
    if (joints[i].name == name) return static_cast<int>(i);
  return -1;
}

BvhParseError::BvhParseError(int line, const std::string& what)
    : std::runtime_error("bvh parse error at line " + std::to_string(line) + ": " + what),
      line_(line) {}

MotionClip parse_bvh(std::istream& in) {
  Lexer lex(in);
  MotionClip clip;

  lex.expect_exact("HIERARCHY");
  lex.expect_exact("ROOT");
  BvhJoint root;
  root.name = lex.expect("root name");
  root.parent = -1;
  clip.joints.push_back(root);
  parse_joint_body(lex, clip, 0);

  lex.expect_exact("MOTION");
  lex.expect_exact("Frames:");
  const double declared = lex.expect_number("frame count");
  if (declared < 0 || declared != std::floor(declared))
    throw BvhParseError(lex.token_line(), "invalid frame count");
  clip.frame_count = static_cast<std::size_t>(declared);
  lex.expect_exact("Frame");
  lex.expect_exact("Time:");
  clip.frame_time = lex.expect_number("frame time");
  if (clip.frame_time <= 0.0)
    throw BvhParseError(lex.token_line(), "frame time must be positive");

  const std::size_t channels = clip.channel_count();
  if (channels == 0) throw BvhParseError(lex.line(), "hierarchy declares no channels");
  clip.values.reserve(clip.frame_count * channels);
  for (std::size_t frame = 0; frame < clip.frame_count; ++frame) {
    for (std::size_t c = 0; c < channels; ++c) {
      std::string token;
      if (!lex.next(token))
        throw BvhParseError(lex.line(), "motion data ended at frame " + std::to_string(frame) +
                                            ": expected " + std::to_string(clip.frame_count) +
                                            " frames of " + std::to_string(channels) + " values");
      clip.values.push_back(lex.parse_number(token, "motion value"));
    }
  }
  std::string trailing;
  if (lex.next(trailing))
    throw BvhParseError(lex.token_line(),
                        "trailing content after the declared motion frames: '" + trailing + "'");
  return clip;
}

MotionClip parse_bvh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bvh file: " + path);
  return parse_bvh(in);
}

void write_bvh(const MotionClip& clip, std::ostream& out) {
  std::ostringstream text;
  text.precision(17);
  text << "HIERARCHY\n";
  std::vector<bool> emitted(clip.joints.size(), false);
  write_joint(clip, 0, text, 0, emitted);
  text << "MOTION\n";
  text << "Frames: " << clip.frame_count << "\n";
  text << "Frame Time: " << clip.frame_time << "\n";
  const std::size_t channels = clip.channel_count();
  for (std::size_t frame = 0; frame < clip.frame_count; ++frame) {
    for (std::size_t c = 0; c < channels; ++c) {
      if (c) text << " ";
      text << clip.values[frame * channels + c];
    }
    text << "\n";
  }
  out << text.str();
}

std::vector<Eigen::Vector3d> forward_kinematics(const MotionClip& clip, std::size_t frame) {
  if (frame >= clip.frame_count)
    throw std::out_of_range("forward_kinematics: frame " + std::to_string(frame) +
                            " out of range (clip has " + std::to_string(clip.frame_count) +
                            " frames)");

  std::vector<Eigen::Affine3d> global(clip.joints.size());
  std::vector<Eigen::Vector3d> positions(clip.joints.size());
  std::size_t channel = 0;
  for (std::size_t i = 0; i < clip.joints.size(); ++i) {
    const BvhJoint& joint = clip.joints[i];
    Eigen::Affine3d local = Eigen::Affine3d::Identity();
    local.translate(Eigen::Vector3d(joint.offset[0], joint.offset[1], joint.offset[2]));
    for (BvhChannel c : joint.channels) {
      const double v = clip.value(frame, channel);
      ++channel;
      switch (c) {
        case BvhChannel::Xposition: local.translate(Eigen::Vector3d(v, 0, 0)); break;
        case BvhChannel::Yposition: local.translate(Eigen::Vector3d(0, v, 0)); break;
        case BvhChannel::Zposition: local.translate(Eigen::Vector3d(0, 0, v)); break;
        case BvhChannel::Xrotation:
          local.rotate(Eigen::AngleAxisd(v * kDegToRad, Eigen::Vector3d::UnitX()));
          break;
        case BvhChannel::Yrotation:
          local.rotate(Eigen::AngleAxisd(v * kDegToRad, Eigen::Vector3d::UnitY()));
          break;
        case BvhChannel::Zrotation:
          local.rotate(Eigen::AngleAxisd(v * kDegToRad, Eigen::Vector3d::UnitZ()));
          break;
      }
    }
    global[i] = joint.parent < 0 ? local : global[joint.parent] * local;
    positions[i] = global[i].translation();
  }
  return positions;
}

}  // namespace vrqoe
