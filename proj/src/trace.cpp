#include "qpburst/trace.hpp"

#include <string>

#include "qpburst/error.hpp"

namespace qpburst
{
char to_char(Parity p)
{
    switch (p)
    {
        case Parity::even:
            return 'e';
        case Parity::odd:
            return 'o';
        case Parity::unknown:
            return '-';
    }
    return '-';
}

Parity parity_from_char(char c)
{
    switch (c)
    {
        case 'e':
            return Parity::even;
        case 'o':
            return Parity::odd;
        case '-':
            return Parity::unknown;
        default:
            throw ParseError(std::string("invalid parity symbol '") + c
                             + "'");
    }
}

void Trace::resize(std::size_t n, bool with_truth)
{
    has_truth = with_truth;
    level.resize(n);
    parity.resize(n);
    reset.resize(n);
    std::size_t const m = with_truth ? n : 0;
    true_level.resize(m);
    true_parity.resize(m);
    in_burst.resize(m);
}

void Trace::clear()
{
    resize(0, has_truth);
    discard = false;
}

TraceRecord Trace::record(std::size_t i) const
{
    TraceRecord r;
    r.index = i;
    r.level = level[i];
    r.parity = static_cast<Parity>(parity[i]);
    r.reset = reset[i] != 0;
    if (has_truth)
    {
        r.truth = TruthRecord{true_level[i],
                              static_cast<Parity>(true_parity[i]),
                              in_burst[i] != 0};
    }
    return r;
}

void Trace::push_back(TraceRecord const& r)
{
    if (r.index != size())
    {
        throw DomainError("trace records must be appended in index order");
    }
    level.push_back(r.level);
    parity.push_back(static_cast<std::uint8_t>(r.parity));
    reset.push_back(r.reset ? 1 : 0);
    if (has_truth)
    {
        TruthRecord const t = r.truth.value_or(TruthRecord{});
        true_level.push_back(t.level);
        true_parity.push_back(static_cast<std::uint8_t>(t.parity));
        in_burst.push_back(t.in_burst ? 1 : 0);
    }
}

void validate(Trace const& trace)
{
    if (!(trace.dt > 0))
    {
        throw DomainError("trace dt must be positive");
    }
    std::size_t const n = trace.size();
    if (trace.parity.size() != n || trace.reset.size() != n)
    {
        throw DomainError("trace columns differ in length");
    }
    if (trace.has_truth
        && (trace.true_level.size() != n || trace.true_parity.size() != n
            || trace.in_burst.size() != n))
    {
        throw DomainError("truth columns differ in length");
    }
    for (std::size_t i = 0; i < n; ++i)
    {
        if (trace.level[i] > 2 || trace.parity[i] > 2 || trace.reset[i] > 1)
        {
            throw DomainError("invalid label at sample " + std::to_string(i));
        }
    }
}

}  // namespace qpburst
