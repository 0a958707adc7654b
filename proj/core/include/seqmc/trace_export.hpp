#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqmc/trace.hpp"

namespace seqmc {

enum class TraceFormat { csv, jsonl };

/// Column order of the CSV export.
inline constexpr std::string_view kTraceColumns =
    "chain_id,epoch,step,burn_in,accepted,novel,acceptance_prob,energy_raw,energy_norm,target_temp";

/// Writes every record of every trace. The first line carries the config hash
/// (a `#` comment for CSV, a `{"kind":"meta",...}` object for JSONL).
/// Untracked energies are empty CSV fields / JSON nulls. Reals use 17
/// significant digits so values survive a round trip.
void export_trace(std::span<const Trace> traces, const std::filesystem::path& path,
                  TraceFormat format, std::string_view config_hash);

struct TraceFile {
  std::string config_hash;
  std::vector<StepRecord> records;
};

/// Inverse of export_trace. CSV carries only the exported columns, so the
/// remaining StepOutcome fields read back as zero; JSONL restores them all.
TraceFile read_trace(const std::filesystem::path& path, TraceFormat format);

struct TraceAggregates {
  std::size_t counted = 0;
  double acceptance_rate = 0.0;
  double novel_rate = 0.0;
};

/// Rates recomputed from raw step records, independent of Trace's counters.
TraceAggregates recompute_aggregates(std::span<const StepRecord> records, bool include_burn_in);

}  // namespace seqmc
