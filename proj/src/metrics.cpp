#include "unirep/metrics.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "unirep/error.hpp"

namespace unirep {

using nlohmann::json;

std::string metrics_header_line(const ExperimentConfig& config) {
  json j;
  j["record"] = "header";
  j["run"] = config.name;
  j["norm"] = config.norm.label();
  j["sharing"] = to_string(config.sharing_mode);
  j["preset"] = config.preset;
  j["capacity_multiplier"] = config.capacity_multiplier;
  std::vector<std::string> names;
  for (const auto& d : config.domains)
    names.push_back(d.type == DomainConfig::Type::Synthetic
                        ? d.synth.name
                        : d.path);
  j["domains"] = names;
  j["config_hash"] = config.hash();
  return j.dump();
}

std::string metrics_record_line(const MetricsRecord& record) {
  json j;
  j["record"] = "metrics";
  j["step"] = record.step;
  j["lr"] = record.lr;
  j["train_loss"] = record.train_loss;
  j["val_error"] = record.val_error;
  j["mean_error"] = record.mean_error;
  return j.dump();
}

MetricsFileData read_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("metrics: cannot open '" + path + "'");
  MetricsFileData out;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  for (std::size_t lineno = 1; lineno <= lines.size(); ++lineno) {
    json j;
    try {
      j = json::parse(lines[lineno - 1]);
    } catch (const json::exception& e) {
      // A crashed run can leave one partial trailing line; earlier lines
      // must parse.
      if (lineno == lines.size()) break;
      throw FormatError("metrics: bad record in '" + path + "' line " +
                            std::to_string(lineno) + ": " + e.what(),
                        lineno);
    }
    const std::string kind = j.value("record", "");
    if (kind == "header") {
      out.run_name = j.value("run", "");
      out.norm_label = j.value("norm", "");
      out.sharing = j.value("sharing", "");
      out.domain_names = j.value("domains", std::vector<std::string>{});
    } else if (kind == "metrics") {
      MetricsRecord rec;
      rec.step = j.at("step").get<std::size_t>();
      rec.lr = j.at("lr").get<double>();
      rec.train_loss = j.at("train_loss").get<std::vector<double>>();
      rec.val_error = j.at("val_error").get<std::vector<double>>();
      rec.mean_error = j.at("mean_error").get<double>();
      out.records.push_back(std::move(rec));
    } else {
      throw FormatError("metrics: unknown record kind in '" + path + "' line " +
                            std::to_string(lineno),
                        lineno);
    }
  }
  return out;
}

std::string format_report(const std::vector<MetricsFileData>& runs) {
  auto display_label = [](const MetricsFileData& r) {
    if (r.run_name.empty()) return r.norm_label;
    if (r.norm_label.empty()) return r.run_name;
    return r.run_name + " " + r.norm_label;
  };
  std::size_t max_domains = 0;
  std::size_t label_width = 4;
  for (const auto& r : runs) {
    if (!r.records.empty())
      max_domains = std::max(max_domains, r.records.back().val_error.size());
    label_width = std::max(label_width, display_label(r).size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(label_width + 2)) << "run";
  for (std::size_t d = 0; d < max_domains; ++d)
    os << std::right << std::setw(9) << ("d" + std::to_string(d + 1));
  os << std::right << std::setw(9) << "mean" << "\n";
  for (const auto& r : runs) {
    os << std::left << std::setw(static_cast<int>(label_width + 2)) << display_label(r);
    if (r.records.empty()) {
      os << "  (no records)\n";
      continue;
    }
    const MetricsRecord& last = r.records.back();
    os << std::fixed << std::setprecision(2);
    for (std::size_t d = 0; d < max_domains; ++d) {
      if (d < last.val_error.size())
        os << std::right << std::setw(9) << last.val_error[d];
      else
        os << std::right << std::setw(9) << "-";
    }
    os << std::right << std::setw(9) << last.mean_error << "\n";
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

}  // namespace unirep
