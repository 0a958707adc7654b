#include "seqmc/trace_export.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "seqmc/error.hpp"

namespace seqmc {

namespace {

using nlohmann::json;

std::string format_real(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_from(const json& j, double if_null) { return j.is_null() ? if_null : j.get<double>(); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

StepRecord parse_csv_record(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 10) throw Error(Errc::IoFailure, "trace row has " + std::to_string(f.size()) + " fields");
  StepRecord r;
  r.context.chain_id = std::stoull(f[0]);
  r.context.epoch = std::stoull(f[1]);
  r.context.step = std::stoull(f[2]);
  r.context.burn_in = f[3] == "1";
  r.outcome.accepted = f[4] == "1";
  r.outcome.novel = f[5] == "1";
  r.outcome.acceptance_prob = std::stod(f[6]);
  if (!f[7].empty()) r.context.energy_raw = std::stod(f[7]);
  if (!f[8].empty()) r.context.energy_norm = std::stod(f[8]);
  r.context.target_temp = std::stod(f[9]);
  return r;
}

json record_to_json(const StepRecord& r) {
  const auto& c = r.context;
  const auto& o = r.outcome;
  json j;
  j["chain_id"] = c.chain_id;
  j["epoch"] = c.epoch;
  j["step"] = c.step;
  j["burn_in"] = c.burn_in;
  j["accepted"] = o.accepted;
  j["novel"] = o.novel;
  j["acceptance_prob"] = o.acceptance_prob;
  j["energy_raw"] = c.energy_raw ? json(*c.energy_raw) : json(nullptr);
  j["energy_norm"] = c.energy_norm ? json(*c.energy_norm) : json(nullptr);
  j["target_temp"] = c.target_temp;
  j["energy_old"] = o.energy_old;
  j["energy_new"] = o.energy_new;
  j["log_q_fwd"] = real_or_null(o.log_q_fwd);
  j["log_q_rev"] = real_or_null(o.log_q_rev);
  return j;
}

StepRecord record_from_json(const json& j) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  StepRecord r;
  r.context.chain_id = j.at("chain_id").get<std::size_t>();
  r.context.epoch = j.at("epoch").get<std::size_t>();
  r.context.step = j.at("step").get<std::size_t>();
  r.context.burn_in = j.at("burn_in").get<bool>();
  r.outcome.accepted = j.at("accepted").get<bool>();
  r.outcome.novel = j.at("novel").get<bool>();
  r.outcome.acceptance_prob = j.at("acceptance_prob").get<double>();
  r.context.energy_raw = optional_from(j.at("energy_raw"));
  r.context.energy_norm = optional_from(j.at("energy_norm"));
  r.context.target_temp = j.at("target_temp").get<double>();
  r.outcome.energy_old = j.at("energy_old").get<double>();
  r.outcome.energy_new = j.at("energy_new").get<double>();
  r.outcome.log_q_fwd = real_from(j.at("log_q_fwd"), kNegInf);
  r.outcome.log_q_rev = real_from(j.at("log_q_rev"), kNegInf);
  return r;
}

}  // namespace

void export_trace(std::span<const Trace> traces, const std::filesystem::path& path,
                  TraceFormat format, std::string_view config_hash) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  if (format == TraceFormat::csv) {
    out << "# seqmc trace config_hash=" << config_hash << '\n' << kTraceColumns << '\n';
    for (const Trace& trace : traces) {
      for (const auto& r : trace.steps()) {
        const auto& c = r.context;
        const auto& o = r.outcome;
        out << c.chain_id << ',' << c.epoch << ',' << c.step << ',' << (c.burn_in ? 1 : 0) << ','
            << (o.accepted ? 1 : 0) << ',' << (o.novel ? 1 : 0) << ','
            << format_real(o.acceptance_prob) << ',' << optional_real(c.energy_raw) << ','
            << optional_real(c.energy_norm) << ',' << format_real(c.target_temp) << '\n';
      }
    }
  } else {
    json meta;
    meta["kind"] = "meta";
    meta["config_hash"] = std::string(config_hash);
    out << meta.dump() << '\n';
    for (const Trace& trace : traces) {
      for (const auto& r : trace.steps()) out << record_to_json(r).dump() << '\n';
    }
  }
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string());
}

TraceFile read_trace(const std::filesystem::path& path, TraceFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  TraceFile file;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::IoFailure, path.string() + " is empty");
  try {
    if (format == TraceFormat::csv) {
      constexpr std::string_view kPrefix = "# seqmc trace config_hash=";
      if (line.rfind(kPrefix, 0) != 0) throw Error(Errc::IoFailure, "missing trace metadata line");
      file.config_hash = line.substr(kPrefix.size());
      if (!std::getline(in, line) || line != kTraceColumns) {
        throw Error(Errc::IoFailure, "missing or unexpected column header");
      }
      while (std::getline(in, line)) {
        if (!line.empty()) file.records.push_back(parse_csv_record(line));
      }
    } else {
      const json meta = json::parse(line);
      file.config_hash = meta.at("config_hash").get<std::string>();
      while (std::getline(in, line)) {
        if (!line.empty()) file.records.push_back(record_from_json(json::parse(line)));
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::IoFailure, std::string("malformed trace: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(Errc::IoFailure, std::string("malformed trace: ") + e.what());
  }
  return file;
}

TraceAggregates recompute_aggregates(std::span<const StepRecord> records, bool include_burn_in) {
  std::size_t counted = 0;
  std::size_t accepted = 0;
  std::size_t novel = 0;
  for (const auto& r : records) {
    if (r.context.burn_in && !include_burn_in) continue;
    ++counted;
    accepted += r.outcome.accepted ? 1 : 0;
    novel += (r.outcome.accepted && r.outcome.novel) ? 1 : 0;
  }
  TraceAggregates out;
  out.counted = counted;
  if (counted > 0) {
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(counted);
    out.novel_rate = static_cast<double>(novel) / static_cast<double>(counted);
  }
  return out;
}

}  // namespace seqmc
