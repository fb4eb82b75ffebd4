#ifndef UNIREP_METRICS_HPP_
#define UNIREP_METRICS_HPP_

#include <string>
#include <vector>

#include "unirep/config.hpp"
#include "unirep/trainer.hpp"

namespace unirep {

/// Line-delimited metrics: a header record followed by one record per
/// evaluation point. All serialized fields are deterministic; wall-clock
/// timing stays out of the file.
std::string metrics_header_line(const ExperimentConfig& config);
std::string metrics_record_line(const MetricsRecord& record);

struct MetricsFileData {
  std::string run_name;
  std::string norm_label;
  std::string sharing;
  std::vector<std::string> domain_names;
  std::vector<MetricsRecord> records;
};

MetricsFileData read_metrics_file(const std::string& path);

/// Aligned text table over several runs, one row per run with per-domain
/// final errors and their mean (the layout of the paper-style summaries).
std::string format_report(const std::vector<MetricsFileData>& runs);

}  // namespace unirep

#endif  // UNIREP_METRICS_HPP_
