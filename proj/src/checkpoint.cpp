#include "vrqoe/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vrqoe {

namespace {
constexpr char kMagic[] = "VRQOECKPT1";

void write_string(std::ostream& out, const std::string& s) {
  const std::uint64_t n = s.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return s;
}
}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic) - 1);
  write_string(out, ckpt.config_json);
  write_string(out, ckpt.policy);
  const std::int64_t episode = ckpt.episode;
  out.write(reinterpret_cast<const char*>(&episode), sizeof(episode));
  ckpt.agent.save(out);
  const std::uint8_t has_inference = ckpt.inference.has_value() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&has_inference), sizeof(has_inference));
  if (ckpt.inference) ckpt.inference->save(out);
  write_string(out, ckpt.explore_rng);
  write_string(out, ckpt.replay_rng);
  write_string(out, ckpt.inference_rng);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, sizeof(magic)) != kMagic)
    throw std::runtime_error("not a checkpoint file: " + path);

  Checkpoint ckpt;
  ckpt.config_json = read_string(in);
  ckpt.policy = read_string(in);
  std::int64_t episode = 0;
  in.read(reinterpret_cast<char*>(&episode), sizeof(episode));
  ckpt.episode = static_cast<int>(episode);

  const ExperimentConfig config = config_from_json_text(ckpt.config_json);
  ckpt.agent = DdpgAgent::load(in, config.agent);
  std::uint8_t has_inference = 0;
  in.read(reinterpret_cast<char*>(&has_inference), sizeof(has_inference));
  if (!in) throw std::runtime_error("checkpoint truncated");
  if (has_inference) ckpt.inference = InferenceModel::load(in);
  ckpt.explore_rng = read_string(in);
  ckpt.replay_rng = read_string(in);
  ckpt.inference_rng = read_string(in);
  return ckpt;
}

}  // namespace vrqoe
