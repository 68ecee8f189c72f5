#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "device.hpp"
#include "poisson.hpp"
#include "trace.hpp"

namespace qpburst
{
//---------------------------------------------------------------------------//
// WINDOWED COUNTING
//---------------------------------------------------------------------------//
/*!
 * Event counts in one non-overlapping readout window.
 *
 * A relaxation is a reported |0> whose preceding readout reported |1> or was
 * followed by a pi pulse (the qubit was then prepared in |1>). An excitation
 * is a reported |1> after an unreset |0>. Transitions touching |2> count as
 * neither.
 */
struct WindowCounts
{
    std::size_t window_index{0};
    std::uint32_t n_relax{0};
    std::uint32_t n_parity{0};  //!< Changes between resolved parity labels
    std::uint32_t n_excited{0};  //!< Readouts reporting |1>
    std::uint32_t n_excite{0};  //!< 0 -> 1 transitions
};

//! Half-plane a*x + b*y > c in the (transitions, parity switches) plane.
struct ThresholdLine
{
    double a{0};
    double b{1};
    double c{0};

    bool above(double x, double y) const { return a * x + b * y > c; }

    //! y > slope * x + intercept
    static ThresholdLine from_slope(double slope, double intercept)
    {
        return {-slope, 1, intercept};
    }
    //! x > x0
    static ThresholdLine vertical(double x0) { return {1, 0, x0}; }
};

enum class OnsetSignal
{
    automatic,  //!< Ground if stabilized, else parity switches if readable, else excited
    ground,
    excited,
    parity  //!< Parity switches between consecutive readouts
};

struct DetectionConfig
{
    std::size_t window_samples{175};
    std::optional<int> relax_threshold;  //!< Unset: automatic
    double auto_sigma{8};
    int fallback_threshold{35};
    std::optional<ThresholdLine> parity_threshold_2d;
    bool use_1d{true};  //!< With a 2-D line, also keep 1-D candidates
    //! Transition axis counts both directions instead of relaxations only
    bool two_way_transitions{false};
    int tls_min_span_windows{5};
    bool tls_decay_test{true};
    double tls_decay_time{5e-3};  //!< [s]
    double tls_sigma{3};
    std::size_t onset_kernel{20};
    int onset_search_windows{2};
    OnsetSignal onset_signal{OnsetSignal::automatic};
};

void validate(DetectionConfig const& config);

//! Count events in consecutive windows; a trailing partial window is dropped.
std::vector<WindowCounts>
count_windows(Trace const& trace, std::size_t window_samples);

//! Transition-axis value of a window.
inline std::uint32_t transition_count(WindowCounts const& w, bool two_way)
{
    return two_way ? w.n_relax + w.n_excite : w.n_relax;
}

//---------------------------------------------------------------------------//
// THRESHOLD
//---------------------------------------------------------------------------//
struct ThresholdFit
{
    int threshold{0};
    double mu{0};  //!< Mean of the dominant Poisson mode
    bool fallback{false};
};

/*!
 * Maximum-likelihood mean of the dominant mode.
 *
 * Fits a Poisson distribution truncated to counts up to twice the histogram
 * mode so that burst windows in the tail do not bias the mean. Returns a
 * non-positive value when the fit fails.
 */
double fit_mode_mean(std::span<std::uint32_t const> counts);

//! round(mu + sigma * sqrt(mu)), falling back on failure or < 1000 windows.
ThresholdFit auto_threshold(std::span<std::uint32_t const> counts,
                            double sigma = 8, int fallback = 35);

//! Fixed threshold from the config, or the automatic one.
ThresholdFit resolve_threshold(std::span<WindowCounts const> windows,
                               DetectionConfig const& config);

//---------------------------------------------------------------------------//
// CANDIDATES AND EVENTS
//---------------------------------------------------------------------------//
//! Run of adjacent flagged windows.
struct Candidate
{
    std::size_t first_window{0};
    std::size_t last_window{0};
    std::uint32_t peak_count{0};
};

std::vector<Candidate> detect_candidates(std::span<WindowCounts const> windows,
                                         int threshold,
                                         bool two_way = false);

//! Throws DomainError when the trace carries no parity information.
std::vector<Candidate> detect_2d(std::span<WindowCounts const> windows,
                                 ThresholdLine const& line,
                                 bool parity_available, bool two_way = false);

//! Union of two candidate sets with adjacent runs merged.
std::vector<Candidate> merge_candidates(std::span<Candidate const> a,
                                        std::span<Candidate const> b,
                                        std::span<WindowCounts const> windows,
                                        bool two_way = false);

struct Onset
{
    std::size_t index{0};
    bool low_confidence{false};
};

/*!
 * Sample where the readout population changes most steeply.
 *
 * Maximizes the difference of indicator means over the kernel after and
 * before each index, searching the candidate widened by the configured
 * number of windows on both sides.
 */
Onset locate_onset(Trace const& trace, Candidate const& candidate,
                   DetectionConfig const& config);

enum class EventClass
{
    qp_burst,
    tls,
    discarded
};

char const* to_string(EventClass c);

/*!
 * Separate sustained relaxation episodes from decaying bursts.
 *
 * An event is a TLS episode when the transition count stays above
 * mu + tls_sigma * sqrt(mu) for tls_min_span_windows windows and the excess
 * fails to decay: its fitted decay time exceeds tls_decay_time or the
 * fitted slope is not negative.
 */
EventClass classify_tls(std::span<WindowCounts const> windows,
                        std::size_t onset_window, double mu,
                        DetectionConfig const& config, double dt);

struct BurstEvent
{
    std::size_t trace_id{0};
    std::size_t onset_index{0};
    bool low_confidence{false};
    std::size_t first_window{0};
    std::size_t last_window{0};
    std::uint32_t peak_window_count{0};
    EventClass classification{EventClass::qp_burst};
};

struct TraceDetection
{
    std::vector<WindowCounts> windows;
    ThresholdFit threshold;
    std::vector<BurstEvent> events;
};

/*!
 * Full detection pass over one trace.
 *
 * A precomputed threshold (typically fitted over many traces) overrides the
 * per-trace one. Events of a discarded trace are labeled as such.
 */
TraceDetection detect_events(Trace const& trace, DetectionConfig const& config,
                             std::optional<ThresholdFit> const& threshold
                             = std::nullopt,
                             std::size_t trace_id = 0);

//---------------------------------------------------------------------------//
// RECOVERY CURVES
//---------------------------------------------------------------------------//
struct RecoveryOptions
{
    double bin_width{100e-6};  //!< [s], rounded to whole readouts
    double t_before{1e-3};  //!< Span before the onset [s]
    double t_after{10e-3};  //!< Span after the onset [s]
    //! Baselines subtracted from the rates; unset uses pre-onset bins
    std::optional<double> gamma10_steady;
    std::optional<double> gamma01_steady;
    //! Invert p10 and p01 jointly as a two-level chain (passive traces)
    bool two_state_inversion{false};
};

/*!
 * Time-resolved transition rates averaged over aligned events.
 *
 * Undefined bins (no conditioning readouts, or a certain transition) hold
 * NaN. Times are bin centers relative to the onset.
 */
struct RecoveryCurve
{
    std::vector<double> time;
    std::vector<double> gamma10;
    std::vector<double> gamma01;
    std::vector<double> d_gamma10;
    std::vector<double> d_gamma10_err;
    std::vector<double> d_gamma01;
    std::vector<double> d_gamma01_err;
    std::vector<double> t_q;  //!< Empty unless thermometry was requested
    std::vector<double> t_q_err;
    std::vector<double> x_qp;
    std::vector<std::uint64_t> cond10;
    std::vector<std::uint64_t> count10;
    std::vector<std::uint64_t> cond01;
    std::vector<std::uint64_t> count01;
    double baseline10{0};
    double baseline01{0};
    std::size_t n_events_averaged{0};

    std::size_t size() const { return time.size(); }
};

//! Rate from a per-readout transition probability: -ln(1 - p) / dt
double rate_from_probability(double p, double dt);

//! Conditional transition tallies binned relative to event onsets.
class RecoveryAccumulator
{
  public:
    RecoveryAccumulator(double dt, RecoveryOptions const& options);

    void add(Trace const& trace, std::size_t onset);
    //! Associative merge of tallies with identical binning
    void merge(RecoveryAccumulator const& other);

    std::size_t n_events() const { return n_events_; }

    //! Convert tallies to rates; thermometry columns when \c dev is given.
    RecoveryCurve finish(DeviceParams const* dev = nullptr) const;

  private:
    double dt_;
    RecoveryOptions options_;
    std::size_t bin_samples_;
    std::size_t before_samples_;
    std::size_t n_bins_;
    std::vector<std::uint64_t> cond10_, count10_, cond01_, count01_;
    std::size_t n_events_{0};
};

//! Pool qp_burst events; each event's trace_id indexes \c traces.
RecoveryCurve recovery_curve(std::span<Trace const> traces,
                             std::span<BurstEvent const> events,
                             RecoveryOptions const& options);

//! Passive-trace recovery with temperature and density columns.
RecoveryCurve thermometry_curve(std::span<Trace const> traces,
                                std::span<BurstEvent const> events,
                                RecoveryOptions options,
                                DeviceParams const& dev);

//---------------------------------------------------------------------------//
// FITS AND RATES
//---------------------------------------------------------------------------//
struct ExponentialFit
{
    double amplitude{0};
    double tau{0};
    double baseline{0};
    double amplitude_err{0};
    double tau_err{0};
    double baseline_err{0};
    double chi2{0};
    int dof{0};
};

/*!
 * Weighted fit of baseline + A exp(-t / tau).
 *
 * Bins with non-finite values or non-positive errors are skipped. The
 * baseline is fitted unless fixed. Throws ConvergenceError when fewer than
 * five bins remain or the fitted amplitude is not positive.
 */
ExponentialFit fit_exponential(std::span<double const> t,
                               std::span<double const> y,
                               std::span<double const> sigma,
                               std::optional<double> fixed_baseline = 0.0);

struct BurstRate
{
    std::uint64_t count{0};
    double minutes{0};
    double rate{0};  //!< [1/min]
    PoissonInterval ci;  //!< [1/min]
};

BurstRate burst_rate(std::uint64_t count, double observation_seconds,
                     double confidence = 0.95);

//---------------------------------------------------------------------------//
// OUTPUT
//---------------------------------------------------------------------------//
//! One JSON object per line.
void write_events_jsonl(std::ostream& os, std::span<BurstEvent const> events,
                        double dt);

//! Columns t_seconds,d_gamma10,d_gamma10_err,d_gamma01,d_gamma01_err,t_q,x_qp
void write_recovery_csv(std::ostream& os, RecoveryCurve const& curve);

//! Columns window_index,n_relax,n_parity,n_excited,n_excite
void write_windows_csv(std::ostream& os, std::span<WindowCounts const> windows);

}  // namespace qpburst
