#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedrep/baselines.hpp"
#include "fedrep/fullmeas.hpp"

namespace fedrep {

inline constexpr int kCsvSchemaVersion = 1;

/// Shortest round-trippable decimal form ("%.17g"); non-finite values
/// print as "nan"/"inf" literally.
std::string format_double(double value);

/// Aggregate CSV for one or more replicates: a schema header, one block
/// per replicate, then a mean/stddev summary block over replicates.
/// A non-empty `algo_label` inserts a leading algo column in data rows.
std::string fedrep_trace_csv(const std::vector<FedTrace>& traces,
                             const std::vector<std::uint64_t>& seeds,
                             const std::string& algo_label = "");

std::string fullmeas_trace_csv(const std::vector<FullMeasTrace>& traces,
                               const std::vector<std::uint64_t>& seeds);

/// One line per replicate plus a median summary line.
std::string new_client_csv(const std::vector<NewClientReport>& reports,
                           const std::vector<std::uint64_t>& seeds);

double median_of(std::vector<double> values);

/// Writes content to path via a temp file + rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace fedrep
