#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace qpburst
{
//! Charge-parity label of a readout.
enum class Parity : std::uint8_t
{
    even = 0,
    odd = 1,
    unknown = 2
};

//! CSV symbol: 'e', 'o' or '-'
char to_char(Parity p);
//! Inverse of to_char; throws ParseError on other symbols
Parity parity_from_char(char c);

//! Hidden state at a readout, recorded only by the simulator.
struct TruthRecord
{
    std::uint8_t level{0};
    Parity parity{Parity::even};
    bool in_burst{false};
};

//! One labeled readout.
struct TraceRecord
{
    std::uint64_t index{0};
    std::uint8_t level{0};
    Parity parity{Parity::unknown};
    bool reset{false};  //!< pi pulse applied after this readout
    std::optional<TruthRecord> truth;
};

//---------------------------------------------------------------------------//
/*!
 * Readout trace stored column-wise.
 *
 * Sample i is the readout at the end of the i-th cycle of length \c dt.
 * Truth columns are empty unless \c has_truth is set.
 */
struct Trace
{
    double dt{5.7e-6};
    std::vector<std::uint8_t> level;
    std::vector<std::uint8_t> parity;
    std::vector<std::uint8_t> reset;

    bool has_truth{false};
    std::vector<std::uint8_t> true_level;
    std::vector<std::uint8_t> true_parity;
    std::vector<std::uint8_t> in_burst;

    //! Offset-charge jump flagged during acquisition
    bool discard{false};

    std::size_t size() const { return level.size(); }
    bool empty() const { return level.empty(); }
    double duration() const { return dt * static_cast<double>(size()); }

    //! Resize all columns; truth columns only when requested
    void resize(std::size_t n, bool with_truth);
    void clear();

    TraceRecord record(std::size_t i) const;
    void push_back(TraceRecord const& r);
};

//! Throw DomainError for out-of-range labels or mismatched columns.
void validate(Trace const& trace);

}  // namespace qpburst
