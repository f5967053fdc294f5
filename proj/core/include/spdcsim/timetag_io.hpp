#pragma once

#include <filesystem>
#include <iosfwd>

#include "spdcsim/photostats.hpp"

namespace spdcsim::photostats {

/// Binary layout: magic "TTAG1\0", then packed little-endian records of
/// (u64 timestamp_ps, u8 channel). No header count, no compression.
inline constexpr char kTimeTagMagic[6] = {'T', 'T', 'A', 'G', '1', '\0'};
inline constexpr std::size_t kTimeTagRecordBytes = 9;

void write_timetags(std::ostream& out, const TimeTagStream& stream);
void write_timetags(const std::filesystem::path& path, const TimeTagStream& stream);

TimeTagStream read_timetags(std::istream& in);
TimeTagStream read_timetags(const std::filesystem::path& path);

}  // namespace spdcsim::photostats
