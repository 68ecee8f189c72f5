#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "trace.hpp"

namespace qpburst
{
//! Sidecar describing a trace file.
struct TraceMetadata
{
    double dt_seconds{0};
    double duration_seconds{0};
    std::uint64_t seed{0};
    std::string device;
    bool truth{false};
    bool discard{false};
    std::string config_hash;
};

//! CSV with header index,level,parity,reset[,true_level,true_parity,in_burst]
void write_trace_csv(std::ostream& os, Trace const& trace);
//! Parse a trace CSV; \c dt is taken from the metadata
Trace read_trace_csv(std::istream& is, double dt);

void write_metadata(std::ostream& os, TraceMetadata const& meta);
TraceMetadata read_metadata(std::istream& is);

//! Generic key=value reader used by sidecars and fit reports
std::map<std::string, std::string> read_key_values(std::istream& is);

//! Write through a temporary file in the same directory, then rename.
void write_file_atomic(std::filesystem::path const& path,
                       std::function<void(std::ostream&)> const& writer);

//! 64-bit FNV-1a hash as 16 hex digits
std::string fnv1a_hex(std::string_view data);

//! Shortest round-trip decimal representation
std::string format_double(double value);

}  // namespace qpburst
