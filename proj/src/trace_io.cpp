#include "qpburst/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <vector>

#include "qpburst/error.hpp"

namespace qpburst
{
namespace
{
constexpr char const* base_header = "index,level,parity,reset";
constexpr char const* truth_header = ",true_level,true_parity,in_burst";

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    {
        s.remove_prefix(1);
    }
    while (!s.empty()
           && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    {
        s.remove_suffix(1);
    }
    return s;
}

bool parse_bool(std::string const& v, int line)
{
    if (v == "1" || v == "true")
    {
        return true;
    }
    if (v == "0" || v == "false")
    {
        return false;
    }
    throw ParseError("expected boolean, got '" + v + "'", line);
}

}  // namespace

void write_trace_csv(std::ostream& os, Trace const& trace)
{
    os << base_header << (trace.has_truth ? truth_header : "") << '\n';
    std::string buf;
    buf.reserve(1 << 20);
    char num[24];
    for (std::size_t i = 0; i < trace.size(); ++i)
    {
        auto const res = std::to_chars(num, num + sizeof(num), i);
        buf.append(num, res.ptr);
        buf.push_back(',');
        buf.push_back(static_cast<char>('0' + trace.level[i]));
        buf.push_back(',');
        buf.push_back(to_char(static_cast<Parity>(trace.parity[i])));
        buf.push_back(',');
        buf.push_back(static_cast<char>('0' + trace.reset[i]));
        if (trace.has_truth)
        {
            buf.push_back(',');
            buf.push_back(static_cast<char>('0' + trace.true_level[i]));
            buf.push_back(',');
            buf.push_back(to_char(static_cast<Parity>(trace.true_parity[i])));
            buf.push_back(',');
            buf.push_back(static_cast<char>('0' + trace.in_burst[i]));
        }
        buf.push_back('\n');
        if (buf.size() > (1 << 20) - 64)
        {
            os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Trace read_trace_csv(std::istream& is, double dt)
{
    Trace trace;
    trace.dt = dt;
    std::string line;
    if (!std::getline(is, line))
    {
        throw ParseError("empty trace file", 1);
    }
    std::string_view const header = trim(line);
    if (header == base_header)
    {
        trace.has_truth = false;
    }
    else if (header == std::string(base_header) + truth_header)
    {
        trace.has_truth = true;
    }
    else
    {
        throw ParseError("unexpected trace header '" + std::string(header)
                             + "'",
                         1);
    }
    std::size_t const n_fields = trace.has_truth ? 7 : 4;
    int lineno = 1;
    std::vector<std::string_view> fields;
    while (std::getline(is, line))
    {
        ++lineno;
        std::string_view row = trim(line);
        if (row.empty())
        {
            continue;
        }
        fields.clear();
        std::size_t start = 0;
        while (true)
        {
            std::size_t const comma = row.find(',', start);
            fields.push_back(row.substr(start, comma - start));
            if (comma == std::string_view::npos)
            {
                break;
            }
            start = comma + 1;
        }
        if (fields.size() != n_fields)
        {
            throw ParseError("expected " + std::to_string(n_fields)
                                 + " fields",
                             lineno);
        }
        auto small = [lineno](std::string_view f, int max) {
            if (f.size() != 1 || f[0] < '0' || f[0] > '0' + max)
            {
                throw ParseError("invalid field '" + std::string(f) + "'",
                                 lineno);
            }
            return static_cast<std::uint8_t>(f[0] - '0');
        };
        auto parity = [lineno](std::string_view f) {
            if (f.size() != 1)
            {
                throw ParseError("invalid parity '" + std::string(f) + "'",
                                 lineno);
            }
            try
            {
                return parity_from_char(f[0]);
            }
            catch (ParseError const& e)
            {
                throw ParseError(e.what(), lineno);
            }
        };
        std::uint64_t index = 0;
        auto const res = std::from_chars(fields[0].data(),
                                         fields[0].data() + fields[0].size(),
                                         index);
        if (res.ec != std::errc{} || index != trace.size())
        {
            throw ParseError("index must count up from 0", lineno);
        }
        TraceRecord r;
        r.index = index;
        r.level = small(fields[1], 2);
        r.parity = parity(fields[2]);
        r.reset = small(fields[3], 1) != 0;
        if (trace.has_truth)
        {
            TruthRecord t;
            t.level = small(fields[4], 2);
            t.parity = parity(fields[5]);
            t.in_burst = small(fields[6], 1) != 0;
            r.truth = t;
        }
        trace.push_back(r);
    }
    return trace;
}

std::string format_double(double value)
{
    char buf[32];
    auto const res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_metadata(std::ostream& os, TraceMetadata const& meta)
{
    os << "dt_seconds=" << format_double(meta.dt_seconds) << '\n'
       << "duration_seconds=" << format_double(meta.duration_seconds) << '\n'
       << "seed=" << meta.seed << '\n'
       << "device=" << meta.device << '\n'
       << "truth=" << (meta.truth ? 1 : 0) << '\n'
       << "discard=" << (meta.discard ? 1 : 0) << '\n'
       << "config_hash=" << meta.config_hash << '\n';
}

std::map<std::string, std::string> read_key_values(std::istream& is)
{
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line))
    {
        ++lineno;
        std::string_view s = trim(line);
        if (s.empty() || s.front() == '#')
        {
            continue;
        }
        auto const eq = s.find('=');
        if (eq == std::string_view::npos)
        {
            throw ParseError("expected key=value", lineno);
        }
        std::string key(trim(s.substr(0, eq)));
        if (kv.count(key))
        {
            throw ParseError("duplicate key '" + key + "'", lineno);
        }
        kv[key] = std::string(trim(s.substr(eq + 1)));
    }
    return kv;
}

TraceMetadata read_metadata(std::istream& is)
{
    auto kv = read_key_values(is);
    auto take = [&kv](std::string const& key) {
        auto it = kv.find(key);
        if (it == kv.end())
        {
            throw ParseError("metadata missing '" + key + "'");
        }
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    TraceMetadata meta;
    try
    {
        meta.dt_seconds = std::stod(take("dt_seconds"));
        meta.duration_seconds = std::stod(take("duration_seconds"));
        meta.seed = std::stoull(take("seed"));
    }
    catch (std::invalid_argument const&)
    {
        throw ParseError("metadata: malformed number");
    }
    catch (std::out_of_range const&)
    {
        throw ParseError("metadata: number out of range");
    }
    meta.device = take("device");
    meta.truth = parse_bool(take("truth"), 0);
    meta.discard = parse_bool(take("discard"), 0);
    meta.config_hash = take("config_hash");
    if (!kv.empty())
    {
        throw ParseError("metadata: unknown key '" + kv.begin()->first + "'");
    }
    return meta;
}

void write_file_atomic(std::filesystem::path const& path,
                       std::function<void(std::ostream&)> const& writer)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    std::error_code ec;
    try
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
        {
            throw Error("cannot open '" + tmp.string() + "' for writing");
        }
        writer(os);
        os.flush();
        if (!os)
        {
            throw Error("write to '" + tmp.string() + "' failed");
        }
    }
    catch (...)
    {
        std::filesystem::remove(tmp, ec);
        throw;
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec)
    {
        std::filesystem::remove(tmp);
        throw Error("cannot rename '" + tmp.string() + "': " + ec.message());
    }
}

std::string fnv1a_hex(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace qpburst
