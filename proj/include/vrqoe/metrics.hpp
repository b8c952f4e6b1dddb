#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vrqoe/agent.hpp"
#include "vrqoe/baselines.hpp"

namespace vrqoe {

// One row of the metrics CSV; training emits one per episode, evaluation one
// per (seed, trace) record. Optional sweep columns identify the grid point.
struct MetricRow {
  std::string run_id;
  std::string policy;
  int episode = 0;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;
  double mean_qoe = 0.0;
  double hfqoe = 1.0;
  double success_rate = 0.0;
  double mean_t_upload = 0.0;
  double mean_t_extract = 0.0;
  double mean_t_download = 0.0;
  double mean_t_reconstruct = 0.0;
  std::vector<double> user_qoe;
  std::string param;   // sweep key, empty otherwise
  double value = 0.0;  // sweep value
};

MetricRow row_from_episode(const std::string& run_id, const std::string& policy,
                           std::uint64_t seed, const EpisodeMetrics& m);
MetricRow row_from_eval(const std::string& run_id, const std::string& policy, int index,
                        const EvalRecord& r);

// Deterministic text output: fixed column order, shortest round-trip floats.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, int users);
  void write(const MetricRow& row);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  int users_;
  std::ofstream out_;
};

std::vector<MetricRow> read_metric_csv(const std::string& path);

// Per-policy aggregate over a set of rows.
struct MetricSummary {
  std::string policy;
  int records = 0;
  bool low_confidence = false;  // fewer than three records
  struct Stat {
    double mean = 0.0;
    double median = 0.0;
    double ci95_low = 0.0;
    double ci95_high = 0.0;
  };
  Stat reward, qoe, hfqoe, success;
};

std::vector<MetricSummary> summarize(const std::vector<MetricRow>& rows);
std::string summary_to_json(const std::vector<MetricSummary>& summaries);

std::string format_double(double v);  // %.17g, stable across runs

}  // namespace vrqoe
