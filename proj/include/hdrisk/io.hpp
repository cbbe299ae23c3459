#pragma once

#include <iosfwd>
#include <string>

#include "hdrisk/model_data.hpp"

namespace hdrisk {

/// First line of a dataset file written by write_dataset_csv.
inline constexpr const char* kDatasetHeaderComment = "# hdrisk-dataset v1";

/// Dataset CSV: optional '#' comment lines, an optional column-name row,
/// then one observation per line with y in the first column.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Plain numeric matrix, one row per line, comma separated.
Matrix read_matrix_csv(const std::string& path);

/// Quote a CSV field when it contains a comma, quote or line break.
std::string csv_field(const std::string& value);
/// Shortest round-tripping decimal form; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double value);

}  // namespace hdrisk
