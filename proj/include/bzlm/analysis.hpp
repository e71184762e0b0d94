#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bzlm/measurement.hpp"

namespace bzlm {

// Oscillation events and the periods between them. mean/sigma/frequency are
// absent when fewer than two events were detected.
struct PeriodStats {
    std::vector<double> event_times;
    std::vector<double> periods;  // successive event-time differences
    std::optional<double> mean_period;
    std::optional<double> sigma;  // population standard deviation of periods
    std::optional<double> frequency;

    std::size_t n_events() const { return event_times.size(); }
};

// Periods and summary statistics from a list of event times; mean/sigma/
// frequency stay absent below two events.
inline PeriodStats stats_from_event_times(std::vector<double> event_times) {
    PeriodStats stats;
    stats.event_times = std::move(event_times);
    if (stats.event_times.size() >= 2) {
        for (std::size_t k = 1; k < stats.event_times.size(); ++k)
            stats.periods.push_back(stats.event_times[k] - stats.event_times[k - 1]);
        double mean = 0.0;
        for (double p : stats.periods) mean += p;
        mean /= static_cast<double>(stats.periods.size());
        double var = 0.0;
        for (double p : stats.periods) var += (p - mean) * (p - mean);
        var /= static_cast<double>(stats.periods.size());
        stats.mean_period = mean;
        stats.sigma = std::sqrt(var);
        if (mean > 0.0) stats.frequency = 1.0 / mean;
    }
    return stats;
}

// Schmitt-trigger event detector: an event is an upward crossing of
// threshold_hi after the signal has previously fallen below threshold_lo.
// The hysteresis band makes the detector immune to chatter around a single
// threshold.
inline PeriodStats detect_periods(const PotentialTrace& trace, double threshold_hi,
                                  double threshold_lo) {
    if (!(threshold_hi > threshold_lo))
        throw std::invalid_argument("detect_periods: threshold_hi must exceed threshold_lo");
    std::vector<double> events;
    bool armed = false;
    double prev = 0.0;
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const double s = trace.samples[k];
        if (!std::isfinite(s))
            throw std::domain_error("detect_periods: non-finite sample at index " +
                                    std::to_string(k));
        if (k > 0 && armed && prev < threshold_hi && s >= threshold_hi) {
            events.push_back(trace.time_at(k));
            armed = false;
        }
        if (s < threshold_lo) armed = true;
        prev = s;
    }
    return stats_from_event_times(std::move(events));
}

// Relative-threshold mode: thresholds sit at hi_frac/lo_frac of the trace's
// peak-to-baseline amplitude above the baseline (median), which makes the
// detector invariant under positive rescaling of the signal.
inline PeriodStats detect_periods_relative(const PotentialTrace& trace,
                                           double hi_frac = 0.4, double lo_frac = 0.1) {
    if (!(hi_frac > lo_frac))
        throw std::invalid_argument("detect_periods: hi_frac must exceed lo_frac");
    if (trace.samples.empty()) return PeriodStats{};
    std::vector<double> sorted = trace.samples;
    for (double s : sorted)
        if (!std::isfinite(s)) throw std::domain_error("detect_periods: non-finite sample");
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double baseline = sorted[sorted.size() / 2];
    const double peak = *std::max_element(trace.samples.begin(), trace.samples.end());
    const double amplitude = peak - baseline;
    if (!(amplitude > 0.0)) return PeriodStats{};
    return detect_periods(trace, baseline + hi_frac * amplitude,
                          baseline + lo_frac * amplitude);
}

// Noise band for spike classification: a fraction of the window's own peak
// magnitude, with an absolute floor so an all-noise window does not promote
// its ripples to lobes.
inline double noise_band_for(const PotentialTrace& trace, double abs_floor = 1e-3,
                             double frac = 0.1) {
    double peak = 0.0;
    for (double s : trace.samples) peak = std::max(peak, std::abs(s));
    return std::max(abs_floor, frac * peak);
}

enum class SpikeClass { flat, monophasic, biphasic, action_like };

inline const char* to_string(SpikeClass c) {
    switch (c) {
        case SpikeClass::flat: return "flat";
        case SpikeClass::monophasic: return "monophasic";
        case SpikeClass::biphasic: return "biphasic";
        case SpikeClass::action_like: return "action-like";
    }
    return "?";
}

struct SpikeShape {
    SpikeClass classification = SpikeClass::flat;
    double peak = 0.0;
    double trough = 0.0;
    double peak_to_trough_interval = 0.0;
};

// Morphology of a window holding at most one wave passage:
//   flat        — nothing leaves the noise band;
//   monophasic  — only one lobe leaves the band;
//   biphasic    — positive and negative lobes both leave the band and are
//                 separated by a return to baseline that lasts at least
//                 min_lobe_separation time units;
//   action-like — a lobe is followed immediately by the opposite undershoot
//                 (depolarisation/repolarisation/hyperpolarisation profile).
inline SpikeShape classify_spike(const PotentialTrace& window, double noise_band,
                                 double min_lobe_separation = 2.0) {
    if (window.samples.empty())
        throw std::invalid_argument("classify_spike: empty window");
    if (!(noise_band >= 0.0))
        throw std::invalid_argument("classify_spike: noise_band must be >= 0");
    const auto& s = window.samples;
    std::size_t ipeak = 0, itrough = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (!std::isfinite(s[k]))
            throw std::domain_error("classify_spike: non-finite sample");
        if (s[k] > s[ipeak]) ipeak = k;
        if (s[k] < s[itrough]) itrough = k;
    }
    SpikeShape shape;
    shape.peak = s[ipeak];
    shape.trough = s[itrough];
    shape.peak_to_trough_interval =
        std::abs(window.time_at(ipeak) - window.time_at(itrough));

    const bool has_pos = shape.peak > noise_band;
    const bool has_neg = shape.trough < -noise_band;
    if (!has_pos && !has_neg) {
        shape.classification = SpikeClass::flat;
        return shape;
    }
    if (has_pos != has_neg) {
        shape.classification = SpikeClass::monophasic;
        return shape;
    }

    // Both lobes present. Find where the earlier lobe's |s| > band run ends
    // and the later lobe's begins, then total the in-band time between them.
    const std::size_t first = std::min(ipeak, itrough);
    const std::size_t second = std::max(ipeak, itrough);
    std::size_t end_first = first;
    while (end_first + 1 < s.size() && std::abs(s[end_first + 1]) > noise_band)
        ++end_first;
    std::size_t begin_second = second;
    while (begin_second > 0 && std::abs(s[begin_second - 1]) > noise_band)
        --begin_second;
    double in_band_time = 0.0;
    for (std::size_t k = end_first + 1; k < begin_second; ++k)
        if (std::abs(s[k]) <= noise_band) in_band_time += window.sample_spacing();

    shape.classification = in_band_time >= min_lobe_separation
                               ? SpikeClass::biphasic
                               : SpikeClass::action_like;
    return shape;
}

namespace detail {

// Least squares polynomial fit by Householder QR on the Vandermonde matrix.
// Returns coefficients c[0..degree], lowest order first.
inline std::vector<double> polyfit(const std::vector<double>& x,
                                   const std::vector<double>& y, int degree) {
    const std::size_t n = x.size();
    const std::size_t m = static_cast<std::size_t>(degree) + 1;
    if (n < m) throw std::invalid_argument("polyfit: fewer points than coefficients");
    // Column-major Vandermonde.
    std::vector<double> a(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        double p = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            a[j * n + i] = p;
            p *= x[i];
        }
    }
    std::vector<double> rhs = y;
    for (std::size_t j = 0; j < m; ++j) {
        // Householder vector for column j, rows j..n-1.
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) norm += a[j * n + i] * a[j * n + i];
        norm = std::sqrt(norm);
        if (norm == 0.0) throw std::domain_error("polyfit: rank-deficient system");
        double head = a[j * n + j];
        const double alpha = head >= 0.0 ? -norm : norm;
        std::vector<double> h(n - j);
        h[0] = head - alpha;
        for (std::size_t i = j + 1; i < n; ++i) h[i - j] = a[j * n + i];
        double hnorm2 = 0.0;
        for (double hv : h) hnorm2 += hv * hv;
        a[j * n + j] = alpha;
        for (std::size_t i = j + 1; i < n; ++i) a[j * n + i] = 0.0;
        if (hnorm2 == 0.0) continue;
        for (std::size_t col = j + 1; col < m; ++col) {
            double dot = 0.0;
            for (std::size_t i = j; i < n; ++i) dot += h[i - j] * a[col * n + i];
            const double scale = 2.0 * dot / hnorm2;
            for (std::size_t i = j; i < n; ++i) a[col * n + i] -= scale * h[i - j];
        }
        double dot = 0.0;
        for (std::size_t i = j; i < n; ++i) dot += h[i - j] * rhs[i];
        const double scale = 2.0 * dot / hnorm2;
        for (std::size_t i = j; i < n; ++i) rhs[i] -= scale * h[i - j];
    }
    // Back-substitute R c = rhs.
    std::vector<double> c(m, 0.0);
    for (std::size_t j = m; j-- > 0;) {
        double acc = rhs[j];
        for (std::size_t k = j + 1; k < m; ++k) acc -= a[k * n + j] * c[k];
        c[j] = acc / a[j * n + j];
    }
    return c;
}

inline double poly_eval(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) acc = acc * x + c[j];
    return acc;
}

inline double r_squared(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& c) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - poly_eval(c, x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot <= 0.0) return ss_res <= 1e-30 ? 1.0 : 0.0;
    return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

}  // namespace detail

// Linear and cubic least-squares fits over one segment of a (phi, period)
// curve. The requested degree is capped at n_points - 1, so a 2-point cubic
// degenerates to the interpolating line; unused coefficients stay zero.
struct SegmentFit {
    std::array<double, 2> linear_coeffs{{0.0, 0.0}};
    double linear_r2 = 0.0;
    std::array<double, 4> cubic_coeffs{{0.0, 0.0, 0.0, 0.0}};
    double cubic_r2 = 0.0;
};

namespace detail {

inline SegmentFit fit_segment(const std::vector<double>& x, const std::vector<double>& y) {
    SegmentFit fit;
    const int n = static_cast<int>(x.size());
    const auto lin = polyfit(x, y, std::min(1, n - 1));
    for (std::size_t j = 0; j < lin.size(); ++j) fit.linear_coeffs[j] = lin[j];
    fit.linear_r2 = r_squared(x, y, lin);
    const auto cub = polyfit(x, y, std::min(3, n - 1));
    for (std::size_t j = 0; j < cub.size(); ++j) fit.cubic_coeffs[j] = cub[j];
    fit.cubic_r2 = r_squared(x, y, cub);
    // Nested models: the cubic can only trail the line by rounding error.
    if (fit.cubic_r2 < fit.linear_r2 && fit.linear_r2 - fit.cubic_r2 < 1e-9)
        fit.cubic_r2 = fit.linear_r2;
    return fit;
}

}  // namespace detail

// Two-segment description of period versus excitability: ordinary least
// squares on the points with phi <= split and on those with phi >= split
// (the split point belongs to both segments).
inline std::pair<SegmentFit, SegmentFit> fit_period_curve(
    const std::vector<std::pair<double, double>>& points, double split = 0.05) {
    std::vector<double> xlo, ylo, xhi, yhi;
    for (const auto& [phi, period] : points) {
        if (phi <= split) {
            xlo.push_back(phi);
            ylo.push_back(period);
        }
        if (phi >= split) {
            xhi.push_back(phi);
            yhi.push_back(period);
        }
    }
    if (xlo.size() < 2 || xhi.size() < 2)
        throw std::invalid_argument(
            "fit_period_curve: need at least 2 points on each side of the split");
    return {detail::fit_segment(xlo, ylo), detail::fit_segment(xhi, yhi)};
}

// p*/p from two sets of period statistics.
inline double period_ratio(const PeriodStats& before, const PeriodStats& after) {
    if (!before.mean_period || !after.mean_period)
        throw std::invalid_argument("period_ratio: both mean periods must be present");
    return *after.mean_period / *before.mean_period;
}

// Moving-median baseline removal for drifting (typically imported) traces.
// The window is clamped at the edges; window must be odd.
inline PotentialTrace remove_baseline_median(const PotentialTrace& trace,
                                             std::size_t window) {
    if (window == 0 || window % 2 == 0)
        throw std::invalid_argument("remove_baseline_median: window must be odd");
    PotentialTrace out;
    out.record_stride = trace.record_stride;
    out.dt = trace.dt;
    out.samples.reserve(trace.samples.size());
    const std::size_t half = window / 2;
    std::vector<double> buf;
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const std::size_t lo = k > half ? k - half : 0;
        const std::size_t hi = std::min(trace.samples.size(), k + half + 1);
        buf.assign(trace.samples.begin() + lo, trace.samples.begin() + hi);
        std::nth_element(buf.begin(), buf.begin() + buf.size() / 2, buf.end());
        out.samples.push_back(trace.samples[k] - buf[buf.size() / 2]);
    }
    return out;
}

}  // namespace bzlm
