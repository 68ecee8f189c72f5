#include "qpburst/model_fitting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qpburst/error.hpp"
#include "qpburst/least_squares.hpp"
#include "qpburst/random.hpp"
#include "qpburst/trace_io.hpp"
#include "qpburst/tunneling.hpp"
#include "qpburst/units.hpp"

namespace qpburst
{
namespace
{
struct Line
{
    double intercept{0};
    double slope{0};
    Eigen::Matrix2d cov;
    double chi2{0};
};

// Weighted least squares y = intercept + slope * x with absolute errors
Line weighted_line(std::span<double const> x, std::span<double const> y,
                   std::span<double const> err)
{
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        if (!(err[i] > 0))
        {
            throw DomainError("errors must be positive");
        }
        double const w = 1 / (err[i] * err[i]);
        a(0, 0) += w;
        a(0, 1) += w * x[i];
        a(1, 1) += w * x[i] * x[i];
        b(0) += w * y[i];
        b(1) += w * x[i] * y[i];
    }
    a(1, 0) = a(0, 1);
    double const det = a.determinant();
    if (!(std::abs(det) > 1e-12 * a(0, 0) * a(1, 1)))
    {
        throw SingularInputError(
            "rank-deficient line fit: abscissae are not distinct");
    }
    Line out;
    out.cov = a.inverse();
    Eigen::Vector2d const p = out.cov * b;
    out.intercept = p(0);
    out.slope = p(1);
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double const r = (y[i] - out.intercept - out.slope * x[i]) / err[i];
        out.chi2 += r * r;
    }
    return out;
}

double parse_number(std::string const& field, int line)
{
    double v = 0;
    char const* first = field.data();
    char const* last = first + field.size();
    while (first < last && *first == ' ')
    {
        ++first;
    }
    while (last > first && (last[-1] == ' ' || last[-1] == '\r'))
    {
        --last;
    }
    auto const [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
    {
        throw ParseError("invalid number '" + field + "'", line);
    }
    return v;
}

std::vector<std::vector<double>>
read_numeric_csv(std::istream& is, std::string const& header)
{
    std::string line;
    int line_no = 1;
    if (!std::getline(is, line))
    {
        throw ParseError("missing header", 1);
    }
    if (!line.empty() && line.back() == '\r')
    {
        line.pop_back();
    }
    if (line != header)
    {
        throw ParseError("expected header '" + header + "'", 1);
    }
    std::size_t const n_cols
        = static_cast<std::size_t>(std::count(header.begin(), header.end(), ','))
          + 1;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line))
    {
        ++line_no;
        if (line.empty() || line == "\r")
        {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
        {
            row.push_back(parse_number(field, line_no));
        }
        if (row.size() != n_cols)
        {
            throw ParseError("expected " + std::to_string(n_cols) + " fields",
                             line_no);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

DeviceParams with_gaps(DeviceParams dev, FitParams const& p)
{
    dev.delta = p.delta;
    dev.d_delta = p.d_delta;
    return dev;
}

// Transformed vector: ln x_ne, delta, d_delta, ln gamma0_ph [, ln gamma1_ph]
FitParams unpack(Eigen::VectorXd const& y, bool tied)
{
    FitParams p;
    p.x_ne = std::exp(y[0]);
    p.delta = y[1];
    p.d_delta = y[2];
    p.gamma0_ph = std::exp(y[3]);
    p.gamma1_ph = tied ? p.gamma0_ph : std::exp(y[4]);
    return p;
}

constexpr double min_rate = 1e-8;

Eigen::VectorXd pack(FitParams const& p, bool tied)
{
    Eigen::VectorXd y(tied ? 4 : 5);
    y[0] = std::log(std::max(p.x_ne, 1e-16));
    y[1] = p.delta;
    y[2] = p.d_delta;
    y[3] = std::log(std::max(p.gamma0_ph, min_rate));
    if (!tied)
    {
        y[4] = std::log(std::max(p.gamma1_ph, min_rate));
    }
    return y;
}

void fill_residuals(TempSweepData const& data, DeviceParams const& geometry,
                    FitParams const& p, bool log_space, Eigen::VectorXd& r)
{
    std::size_t const n = data.points.size();
    try
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            auto const& pt = data.points[i];
            auto const [m0, m1] = sweep_model(pt.temperature, geometry, p);
            Eigen::Index const k = static_cast<Eigen::Index>(2 * i);
            if (log_space)
            {
                r[k] = std::log(m0 / pt.gamma0) * pt.gamma0 / pt.gamma0_err;
                r[k + 1] = std::log(m1 / pt.gamma1) * pt.gamma1 / pt.gamma1_err;
            }
            else
            {
                r[k] = (m0 - pt.gamma0) / pt.gamma0_err;
                r[k + 1] = (m1 - pt.gamma1) / pt.gamma1_err;
            }
        }
    }
    catch (DomainError const&)
    {
        r.setConstant(std::numeric_limits<double>::quiet_NaN());
    }
}

bool spans_two_decades(TempSweepData const& data)
{
    double lo = INFINITY;
    double hi = 0;
    for (auto const& p : data.points)
    {
        lo = std::min({lo, p.gamma0, p.gamma1});
        hi = std::max({hi, p.gamma0, p.gamma1});
    }
    return lo > 0 && hi / lo > 100;
}

std::vector<double> default_starts(DeviceParams const& geometry,
                                   double delta)
{
    double const fq = geometry.f_q;
    double const f12 = geometry.f12();
    std::vector<double> starts;
    for (int i = 0; i <= 8; ++i)
    {
        starts.push_back(2 * fq * i / 8.0);
    }
    double const top = delta / 4;
    for (int i = 1; i <= 3 && top > 2 * fq; ++i)
    {
        starts.push_back(2 * fq + (top - 2 * fq) * i / 3.0);
    }
    std::erase_if(starts, [&](double d) {
        return std::abs(d - fq) < 0.01 * fq || std::abs(d - f12) < 0.01 * f12;
    });
    return starts;
}

}  // namespace

//---------------------------------------------------------------------------//
StateRates extrapolate_gamma01(std::span<PopulationPoint const> points)
{
    if (points.size() < 2)
    {
        throw DomainError("need at least two population points");
    }
    std::vector<double> x, y, e;
    for (auto const& p : points)
    {
        if (!(p.p1 >= 0 && p.p1 <= 1))
        {
            throw DomainError("population must lie in [0, 1]");
        }
        x.push_back(p.p1);
        y.push_back(p.gamma);
        e.push_back(p.gamma_err);
    }
    Line const l = weighted_line(x, y, e);
    StateRates out;
    out.gamma0 = l.intercept;
    out.gamma1 = l.intercept + l.slope;
    double const v00 = l.cov(0, 0);
    double const v01 = l.cov(0, 1);
    double const v11 = l.cov(1, 1);
    out.gamma0_err = std::sqrt(v00);
    out.gamma1_err = std::sqrt(std::max(v00 + 2 * v01 + v11, 0.0));
    out.covariance = v00 + v01;
    return out;
}

//---------------------------------------------------------------------------//
void validate(TempSweepData const& data)
{
    if (data.points.size() < 6)
    {
        throw DomainError("temperature sweep needs at least six points");
    }
    double lo = INFINITY;
    double hi = 0;
    std::vector<double> temps;
    for (auto const& p : data.points)
    {
        if (!(p.temperature > 0))
        {
            throw DomainError("temperatures must be positive");
        }
        if (!(p.gamma0_err > 0) || !(p.gamma1_err > 0))
        {
            throw DomainError("rate errors must be positive");
        }
        if (!(p.gamma0 > 0) || !(p.gamma1 > 0))
        {
            throw DomainError("rates must be positive");
        }
        lo = std::min(lo, p.temperature);
        hi = std::max(hi, p.temperature);
        temps.push_back(p.temperature);
    }
    std::sort(temps.begin(), temps.end());
    if (std::adjacent_find(temps.begin(), temps.end()) != temps.end())
    {
        throw DomainError("temperatures must be distinct");
    }
    if (hi < 2 * lo)
    {
        throw DomainError("temperatures must span a factor of two");
    }
}

std::pair<double, double> sweep_model(double temperature,
                                      DeviceParams const& geometry,
                                      FitParams const& params)
{
    DeviceParams const dev = with_gaps(geometry, params);
    QPBath const bath{temperature, params.x_ne, std::nullopt};
    TunnelRates const r = parity_switch_rates(dev, bath);
    return {r.gamma0_qp + params.gamma0_ph, r.gamma1_qp + params.gamma1_ph};
}

double sweep_chi2(TempSweepData const& data, DeviceParams const& geometry,
                  FitParams const& params, bool log_space)
{
    Eigen::VectorXd r(static_cast<Eigen::Index>(2 * data.points.size()));
    fill_residuals(data, geometry, params, log_space, r);
    return r.squaredNorm();
}

FitResult fit_temperature_sweep(TempSweepData const& data,
                                DeviceParams const& geometry,
                                FitParams const& init,
                                SweepFitOptions const& options)
{
    validate(data);
    bool const tied = options.tie_photon_rates;
    bool const log_space = options.log_residuals == 0
                               ? spans_two_decades(data)
                               : options.log_residuals > 0;
    Eigen::Index const n_par = tied ? 4 : 5;
    Eigen::Index const n_res = static_cast<Eigen::Index>(2 * data.points.size());

    Eigen::VectorXd lower(n_par);
    Eigen::VectorXd upper(n_par);
    lower << std::log(1e-16), 5 * geometry.f_q * (1 + 1e-9), 0,
        std::log(min_rate);
    upper << std::log(1e-2), 400, 0.45 * std::max(init.delta, 5 * geometry.f_q),
        std::log(1e6);
    if (!tied)
    {
        lower[4] = std::log(min_rate);
        upper[4] = std::log(1e6);
    }

    auto resid = [&](Eigen::VectorXd const& y, Eigen::VectorXd& r) {
        fill_residuals(data, geometry, unpack(y, tied), log_space, r);
    };

    std::vector<double> starts = options.d_delta_starts;
    if (starts.empty())
    {
        starts = default_starts(geometry, init.delta);
    }
    LsqOptions lsq;
    lsq.max_iterations = options.max_iterations;

    FitResult best;
    best.chi2 = INFINITY;
    LsqResult best_raw;
    for (double d0 : starts)
    {
        FitParams p0 = init;
        p0.d_delta = std::clamp(d0, 0.0, upper[2]);
        Eigen::VectorXd y0 = pack(p0, tied);
        LsqResult res;
        try
        {
            res = levenberg_marquardt(resid, y0, n_res, lower, upper, lsq);
        }
        catch (ConvergenceError const&)
        {
            continue;
        }
        ++best.starts;
        if (res.chi2 < best.chi2)
        {
            best.chi2 = res.chi2;
            best_raw = res;
        }
    }
    if (!std::isfinite(best.chi2))
    {
        throw ConvergenceError("no multi-start produced a finite fit", INFINITY);
    }

    best.params = unpack(best_raw.params, tied);
    best.log_space = log_space;
    best.converged = best_raw.converged;
    best.covariance_reliable = best_raw.covariance_reliable;
    best.dof = static_cast<int>(n_res - n_par);

    // Map the transformed covariance onto the natural parameters
    Eigen::Matrix<double, fit_size, Eigen::Dynamic> jac
        = Eigen::Matrix<double, fit_size, Eigen::Dynamic>::Zero(fit_size, n_par);
    jac(fit_x_ne, 0) = best.params.x_ne;
    jac(fit_delta, 1) = 1;
    jac(fit_d_delta, 2) = 1;
    jac(fit_gamma0_ph, 3) = best.params.gamma0_ph;
    jac(fit_gamma1_ph, tied ? 3 : 4) = best.params.gamma1_ph;
    best.covariance = jac * best_raw.covariance * jac.transpose();
    for (int i = 0; i < fit_size; ++i)
    {
        best.sigma[i] = std::sqrt(std::max(best.covariance(i, i), 0.0));
    }
    return best;
}

TempSweepData synthesize_sweep(DeviceParams const& geometry,
                               FitParams const& truth,
                               std::span<double const> temps,
                               double relative_noise, std::uint64_t seed)
{
    Rng rng(seed);
    double const err = relative_noise > 0 ? relative_noise : 0.1;
    TempSweepData out;
    for (double t : temps)
    {
        auto const [g0, g1] = sweep_model(t, geometry, truth);
        SweepPoint p;
        p.temperature = t;
        p.gamma0 = g0;
        p.gamma1 = g1;
        if (relative_noise > 0)
        {
            p.gamma0 = g0 * std::max(1 + relative_noise * rng.normal(), 1e-3);
            p.gamma1 = g1 * std::max(1 + relative_noise * rng.normal(), 1e-3);
        }
        p.gamma0_err = err * g0;
        p.gamma1_err = err * g1;
        out.points.push_back(p);
    }
    return out;
}

//---------------------------------------------------------------------------//
NormalizedRate normalized_rate(double gamma1, double gamma1_ph, double x_ne)
{
    if (!(x_ne > 0))
    {
        throw DomainError("resident density must be positive");
    }
    NormalizedRate out;
    out.value = (gamma1 - gamma1_ph) / x_ne;
    out.below_photon_floor = gamma1 < gamma1_ph;
    return out;
}

GapThicknessFit fit_gap_thickness(std::span<GapThicknessPoint const> points)
{
    std::vector<double> x, y, e;
    for (auto const& p : points)
    {
        if (!(p.thickness > 0))
        {
            throw DomainError("thickness must be positive");
        }
        x.push_back(1 / p.thickness);
        y.push_back(p.delta);
        e.push_back(p.delta_err);
    }
    std::vector<double> distinct = x;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    if (distinct.size() < 3)
    {
        throw SingularInputError("need at least three distinct thicknesses");
    }
    Line const l = weighted_line(x, y, e);
    GapThicknessFit out;
    out.a = l.slope;
    out.delta0 = l.intercept;
    out.a_err = std::sqrt(l.cov(1, 1));
    out.delta0_err = std::sqrt(l.cov(0, 0));
    out.covariance = l.cov(0, 1);
    out.chi2 = l.chi2;
    out.dof = static_cast<int>(points.size()) - 2;
    return out;
}

double quality_factor(double f_q, double t1)
{
    return 2 * units::pi * f_q * units::ghz * t1;
}

//---------------------------------------------------------------------------//
TempSweepData read_sweep_csv(std::istream& is)
{
    TempSweepData data;
    for (auto const& row :
         read_numeric_csv(is, "T_kelvin,gamma0,gamma0_err,gamma1,gamma1_err"))
    {
        data.points.push_back({row[0], row[1], row[2], row[3], row[4]});
    }
    return data;
}

void write_sweep_csv(std::ostream& os, TempSweepData const& data)
{
    os << "T_kelvin,gamma0,gamma0_err,gamma1,gamma1_err\n";
    for (auto const& p : data.points)
    {
        os << format_double(p.temperature) << ',' << format_double(p.gamma0)
           << ',' << format_double(p.gamma0_err) << ','
           << format_double(p.gamma1) << ',' << format_double(p.gamma1_err)
           << '\n';
    }
}

void write_fit_result(std::ostream& os, FitResult const& result)
{
    static char const* const names[fit_size]
        = {"x_ne", "delta", "d_delta", "gamma0_ph", "gamma1_ph"};
    FitParams const& p = result.params;
    double const values[fit_size]
        = {p.x_ne, p.delta, p.d_delta, p.gamma0_ph, p.gamma1_ph};
    for (int i = 0; i < fit_size; ++i)
    {
        os << names[i] << '=' << format_double(values[i]) << '\n';
    }
    for (int i = 0; i < fit_size; ++i)
    {
        os << "sigma_" << names[i] << '=' << format_double(result.sigma[i])
           << '\n';
    }
    for (int i = 0; i < fit_size; ++i)
    {
        for (int j = i; j < fit_size; ++j)
        {
            os << "cov_" << names[i] << '_' << names[j] << '='
               << format_double(result.covariance(i, j)) << '\n';
        }
    }
    os << "chi2=" << format_double(result.chi2) << '\n'
       << "dof=" << result.dof << '\n'
       << "log_space=" << (result.log_space ? "true" : "false") << '\n'
       << "covariance_reliable="
       << (result.covariance_reliable ? "true" : "false") << '\n';
}

std::vector<GapThicknessPoint> read_gap_thickness_csv(std::istream& is)
{
    std::vector<GapThicknessPoint> out;
    for (auto const& row :
         read_numeric_csv(is, "thickness_nm,delta_ghz,delta_err"))
    {
        out.push_back({row[0], row[1], row[2]});
    }
    return out;
}

}  // namespace qpburst
