#include "spdcsim/timetag_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace spdcsim::photostats {

void write_timetags(std::ostream& out, const TimeTagStream& stream) {
  out.write(kTimeTagMagic, sizeof(kTimeTagMagic));
  std::array<char, kTimeTagRecordBytes> record{};
  for (const auto& e : stream.events) {
    for (int b = 0; b < 8; ++b) {
      record[static_cast<std::size_t>(b)] = static_cast<char>((e.timestamp_ps >> (8 * b)) & 0xFFu);
    }
    record[8] = static_cast<char>(e.channel);
    out.write(record.data(), record.size());
  }
  if (!out) throw std::runtime_error("failed writing time-tag stream");
}

void write_timetags(const std::filesystem::path& path, const TimeTagStream& stream) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_timetags(out, stream);
}

TimeTagStream read_timetags(std::istream& in) {
  char magic[sizeof(kTimeTagMagic)] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(magic)) ||
      std::memcmp(magic, kTimeTagMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a TTAG1 time-tag file");
  }

  TimeTagStream stream;
  std::array<unsigned char, kTimeTagRecordBytes> record{};
  while (true) {
    in.read(reinterpret_cast<char*>(record.data()), record.size());
    const auto got = in.gcount();
    if (got == 0) break;
    if (got != static_cast<std::streamsize>(record.size())) {
      throw std::runtime_error("truncated time-tag record");
    }
    std::uint64_t ts = 0;
    for (int b = 7; b >= 0; --b) ts = (ts << 8) | record[static_cast<std::size_t>(b)];
    if (record[8] > 1) throw std::runtime_error("time-tag channel must be 0 or 1");
    stream.events.push_back({ts, record[8]});
  }
  return stream;
}

TimeTagStream read_timetags(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_timetags(in);
}

}  // namespace spdcsim::photostats
