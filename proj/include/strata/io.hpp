#pragma once

#include "strata/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace strata {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);
/// Strict parse of a whole token; `context` prefixes the FormatError message.
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

// ---------------------------------------------------------------------------
// key = value files ('#' starts a comment line)
// ---------------------------------------------------------------------------

using KeyValueList = std::vector<std::pair<std::string, std::string>>;

KeyValueList parse_key_values(std::istream& in, std::string_view source);
KeyValueList read_key_values(const std::filesystem::path& path);
void write_key_values(const KeyValueList& kv, const std::filesystem::path& path,
                      const std::vector<std::string>& comments = {});

// ---------------------------------------------------------------------------
// point files
// ---------------------------------------------------------------------------

/// ASCII columns: x y z intensity return_number label (label -1 = unlabeled).
/// An optional "# extent <x0> <y0> <width> <height>" comment fixes the plot footprint;
/// otherwise the bounding box of the points is used. Plot id = file stem.
PlotCloud read_points(const std::filesystem::path& path);
PlotCloud read_ascii_points(std::istream& in, std::string plot_id, std::string_view source);
void write_points(const PlotCloud& cloud, const std::filesystem::path& path);

/// Uncompressed LAS 1.2, point data formats 0 and 1. Labels are left unset.
PlotCloud read_las(const std::filesystem::path& path);
/// Writes point format 0 with the given coordinate scale (test and export helper).
void write_las(const PlotCloud& cloud, const std::filesystem::path& path, double scale = 0.001);

/// 64-bit FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace strata
