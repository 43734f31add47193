#include "hyperts/data/synth.hpp"

#include <algorithm>
#include <cmath>

#include "hyperts/core/error.hpp"
#include "hyperts/core/rng.hpp"

namespace hyperts::data {

ChannelKind channel_kind_from_string(const std::string& name) {
    if (name == "stationary") return ChannelKind::stationary;
    if (name == "periodic") return ChannelKind::periodic;
    if (name == "high_frequency") return ChannelKind::high_frequency;
    if (name == "seasonal_spike") return ChannelKind::seasonal_spike;
    if (name == "step_change") return ChannelKind::step_change;
    throw ConfigError("unknown channel kind '" + name + "'");
}

std::string to_string(ChannelKind kind) {
    switch (kind) {
    case ChannelKind::stationary: return "stationary";
    case ChannelKind::periodic: return "periodic";
    case ChannelKind::high_frequency: return "high_frequency";
    case ChannelKind::seasonal_spike: return "seasonal_spike";
    case ChannelKind::step_change: return "step_change";
    }
    throw ConfigError("unknown channel kind");
}

namespace {

constexpr double kTau = 6.283185307179586;
constexpr int kMasterPeriod = 16; // shared cycle so channels stay correlated

double base_value(ChannelKind kind, int t, Rng& noise) {
    const double phase = kTau * static_cast<double>(t % kMasterPeriod) / kMasterPeriod;
    switch (kind) {
    case ChannelKind::stationary:
        return 0.5 + noise.normal(0.0, 0.02);
    case ChannelKind::periodic:
        return 0.5 + 0.3 * std::sin(phase) + noise.normal(0.0, 0.02);
    case ChannelKind::high_frequency:
        return 0.5 + 0.12 * std::sin(kTau * static_cast<double>(t % 8) / 8.0) +
               0.06 * std::sin(phase) + noise.normal(0.0, 0.03);
    case ChannelKind::seasonal_spike: {
        const int pos = t % kMasterPeriod;
        const double bump = pos < 6 ? 0.4 * std::sin(kTau / 2.0 * static_cast<double>(pos) / 6.0) : 0.0;
        return 0.3 + bump + noise.normal(0.0, 0.02);
    }
    case ChannelKind::step_change:
        return 0.5 + 0.15 * std::sin(kTau * static_cast<double>(t) / 4096.0) +
               noise.normal(0.0, 0.02);
    }
    throw ConfigError("unknown channel kind");
}

enum class EventKind { spike, burst, shift, dropout };

} // namespace

TimeSeriesDataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.length < 1) throw ConfigError("synthetic series length must be >= 1");
    if (spec.channels.empty()) throw ConfigError("synthetic spec lists no channels");
    if (spec.anomaly_rate < 0.0 || spec.anomaly_rate >= 0.5)
        throw ConfigError("anomaly rate must lie in [0, 0.5), got " +
                          std::to_string(spec.anomaly_rate));

    const int t_len = spec.length;
    const auto n = static_cast<int>(spec.channels.size());
    Rng rng(seed);

    TimeSeriesDataset ds;
    ds.values = Mat(static_cast<std::size_t>(t_len), static_cast<std::size_t>(n));
    ds.labels.assign(static_cast<std::size_t>(t_len), 0);
    for (int c = 0; c < n; ++c) {
        ds.feature_names.push_back(to_string(spec.channels[static_cast<std::size_t>(c)]) + "_" +
                                   std::to_string(c));
    }

    for (int c = 0; c < n; ++c) {
        Rng noise = rng.fork(static_cast<std::uint64_t>(c));
        for (int t = 0; t < t_len; ++t)
            ds.values(static_cast<std::size_t>(t), static_cast<std::size_t>(c)) =
                base_value(spec.channels[static_cast<std::size_t>(c)], t, noise);
    }

    int remaining = static_cast<int>(std::llround(spec.anomaly_rate * t_len));
    if (remaining == 0) return ds;

    Rng events = rng.fork(0xabcdef);
    std::vector<std::uint8_t> busy(static_cast<std::size_t>(t_len), 0);
    int failures = 0;
    while (remaining > 0) {
        const double pick = events.next_double();
        EventKind kind = pick < 0.5   ? EventKind::spike
                         : pick < 0.8 ? EventKind::burst
                         : pick < 0.9 ? EventKind::shift
                                      : EventKind::dropout;
        int duration;
        switch (kind) {
        case EventKind::spike: duration = 1 + static_cast<int>(events.next_below(2)); break;
        case EventKind::burst: duration = 10 + static_cast<int>(events.next_below(11)); break;
        case EventKind::shift: duration = 3 + static_cast<int>(events.next_below(3)); break;
        case EventKind::dropout: duration = 3 + static_cast<int>(events.next_below(3)); break;
        }
        duration = std::min(duration, remaining);

        // Keep events apart so each window sees at most one of them.
        const int gap = failures > 500 ? 0 : failures > 200 ? 5 : 25;
        if (t_len <= duration + 2) break;
        const int t0 = 1 + static_cast<int>(events.next_below(static_cast<std::uint64_t>(t_len - duration - 1)));
        bool clear = true;
        for (int t = std::max(0, t0 - gap); t < std::min(t_len, t0 + duration + gap); ++t)
            if (busy[static_cast<std::size_t>(t)]) {
                clear = false;
                break;
            }
        if (!clear) {
            ++failures;
            continue;
        }

        const auto channel = static_cast<std::size_t>(events.next_below(static_cast<std::uint64_t>(n)));
        const double sign = events.bernoulli(0.5) ? 1.0 : -1.0;
        const double amp = kind == EventKind::spike ? 0.4 + 0.25 * events.next_double()
                                                    : 0.35 + 0.2 * events.next_double();
        for (int t = t0; t < t0 + duration; ++t) {
            auto ut = static_cast<std::size_t>(t);
            switch (kind) {
            case EventKind::spike:
            case EventKind::shift: ds.values(ut, channel) += sign * amp; break;
            case EventKind::burst:
                // Every burst step deviates by at least 0.3 units.
                ds.values(ut, channel) += (events.bernoulli(0.5) ? 1.0 : -1.0) *
                                          (0.3 + std::abs(events.normal(0.0, 0.15)));
                break;
            case EventKind::dropout: ds.values(ut, channel) = 0.02; break;
            }
            ds.labels[ut] = 1;
            busy[ut] = 1;
        }
        remaining -= duration;
    }
    return ds;
}

} // namespace hyperts::data
