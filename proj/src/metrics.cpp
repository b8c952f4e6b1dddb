#include "vrqoe/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vrqoe {

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

MetricSummary::Stat stat_of(std::vector<double> values) {
  MetricSummary::Stat stat;
  const std::size_t n = values.size();
  for (double v : values) stat.mean += v;
  stat.mean /= static_cast<double>(n);
  std::sort(values.begin(), values.end());
  stat.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  double var = 0.0;
  for (double v : values) var += (v - stat.mean) * (v - stat.mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  const double half = 1.96 * std::sqrt(var / static_cast<double>(n));
  stat.ci95_low = stat.mean - half;
  stat.ci95_high = stat.mean + half;
  return stat;
}
}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

MetricRow row_from_episode(const std::string& run_id, const std::string& policy,
                           std::uint64_t seed, const EpisodeMetrics& m) {
  MetricRow row;
  row.run_id = run_id;
  row.policy = policy;
  row.episode = m.episode;
  row.seed = seed;
  row.mean_reward = m.mean_reward;
  row.mean_qoe = m.mean_qoe;
  row.hfqoe = m.final_hfqoe;
  row.success_rate = m.success_rate;
  row.mean_t_upload = m.mean_delays.upload_s;
  row.mean_t_extract = m.mean_delays.extract_s;
  row.mean_t_download = m.mean_delays.download_s;
  row.mean_t_reconstruct = m.mean_delays.reconstruct_s;
  row.user_qoe = m.user_qoe;
  return row;
}

MetricRow row_from_eval(const std::string& run_id, const std::string& policy, int index,
                        const EvalRecord& r) {
  MetricRow row;
  row.run_id = run_id;
  row.policy = policy;
  row.episode = index;
  row.seed = r.seed;
  row.mean_reward = r.mean_reward;
  row.mean_qoe = r.mean_qoe;
  row.hfqoe = r.final_hfqoe;
  row.success_rate = r.success_rate;
  row.mean_t_upload = r.mean_delays.upload_s;
  row.mean_t_extract = r.mean_delays.extract_s;
  row.mean_t_download = r.mean_delays.download_s;
  row.mean_t_reconstruct = r.mean_delays.reconstruct_s;
  row.user_qoe = r.user_qoe;
  return row;
}

CsvWriter::CsvWriter(const std::string& path, int users)
    : path_(path), users_(users), out_(path) {
  if (!out_) throw std::runtime_error("cannot open metrics file for writing: " + path);
  out_ << "run_id,policy,episode,seed,mean_reward,mean_qoe,hfqoe,success_rate,"
          "mean_t_upload,mean_t_extract,mean_t_download,mean_t_reconstruct";
  for (int k = 0; k < users_; ++k) out_ << ",qoe_user_" << k;
  out_ << ",param,value\n";
}

void CsvWriter::write(const MetricRow& row) {
  if (static_cast<int>(row.user_qoe.size()) != users_)
    throw std::invalid_argument("CsvWriter: row has wrong user count");
  out_ << row.run_id << ',' << row.policy << ',' << row.episode << ',' << row.seed << ','
       << format_double(row.mean_reward) << ',' << format_double(row.mean_qoe) << ','
       << format_double(row.hfqoe) << ',' << format_double(row.success_rate) << ','
       << format_double(row.mean_t_upload) << ',' << format_double(row.mean_t_extract) << ','
       << format_double(row.mean_t_download) << ',' << format_double(row.mean_t_reconstruct);
  for (double q : row.user_qoe) out_ << ',' << format_double(q);
  out_ << ',' << row.param << ',' << format_double(row.value) << '\n';
  out_.flush();
}

std::vector<MetricRow> read_metric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics file is empty: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 14 || header[0] != "run_id" || header[1] != "policy")
    throw std::runtime_error("malformed metrics header in " + path);
  int users = 0;
  for (const std::string& h : header)
    if (h.rfind("qoe_user_", 0) == 0) ++users;

  std::vector<MetricRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": field count mismatch");
    try {
      MetricRow row;
      row.run_id = f[0];
      row.policy = f[1];
      row.episode = std::stoi(f[2]);
      row.seed = std::stoull(f[3]);
      row.mean_reward = std::stod(f[4]);
      row.mean_qoe = std::stod(f[5]);
      row.hfqoe = std::stod(f[6]);
      row.success_rate = std::stod(f[7]);
      row.mean_t_upload = std::stod(f[8]);
      row.mean_t_extract = std::stod(f[9]);
      row.mean_t_download = std::stod(f[10]);
      row.mean_t_reconstruct = std::stod(f[11]);
      for (int k = 0; k < users; ++k) row.user_qoe.push_back(std::stod(f[12 + k]));
      row.param = f[12 + users];
      row.value = std::stod(f[13 + users]);
      rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  return rows;
}

std::vector<MetricSummary> summarize(const std::vector<MetricRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize: no rows");
  std::map<std::string, std::vector<const MetricRow*>> by_policy;
  for (const MetricRow& r : rows) by_policy[r.policy].push_back(&r);

  std::vector<MetricSummary> summaries;
  for (const auto& [policy, group] : by_policy) {
    MetricSummary s;
    s.policy = policy;
    s.records = static_cast<int>(group.size());
    s.low_confidence = group.size() < 3;
    const auto collect = [&](auto getter) {
      std::vector<double> v;
      v.reserve(group.size());
      for (const MetricRow* r : group) v.push_back(getter(*r));
      return stat_of(std::move(v));
    };
    s.reward = collect([](const MetricRow& r) { return r.mean_reward; });
    s.qoe = collect([](const MetricRow& r) { return r.mean_qoe; });
    s.hfqoe = collect([](const MetricRow& r) { return r.hfqoe; });
    s.success = collect([](const MetricRow& r) { return r.success_rate; });
    summaries.push_back(std::move(s));
  }
  return summaries;
}

std::string summary_to_json(const std::vector<MetricSummary>& summaries) {
  nlohmann::json root = nlohmann::json::object();
  const auto stat_json = [](const MetricSummary::Stat& s) {
    return nlohmann::json{{"mean", s.mean},
                          {"median", s.median},
                          {"ci95_low", s.ci95_low},
                          {"ci95_high", s.ci95_high}};
  };
  for (const MetricSummary& s : summaries) {
    root[s.policy] = {{"records", s.records},
                      {"low_confidence", s.low_confidence},
                      {"mean_reward", stat_json(s.reward)},
                      {"mean_qoe", stat_json(s.qoe)},
                      {"hfqoe", stat_json(s.hfqoe)},
                      {"success_rate", stat_json(s.success)}};
  }
  return root.dump(2) + "\n";
}

}  // namespace vrqoe
