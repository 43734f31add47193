#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperts/data/dataset.hpp"

namespace hyperts::data {

/// Channel archetypes for the synthetic sensor suite: a flat level, a
/// smooth periodic wave, a fast oscillation, a recurring bump train and a
/// slowly drifting level.
enum class ChannelKind { stationary, periodic, high_frequency, seasonal_spike, step_change };

ChannelKind channel_kind_from_string(const std::string& name);
std::string to_string(ChannelKind kind);

struct SynthSpec {
    std::vector<ChannelKind> channels{ChannelKind::stationary, ChannelKind::periodic,
                                      ChannelKind::high_frequency, ChannelKind::seasonal_spike,
                                      ChannelKind::step_change};
    int length = 20000;
    double anomaly_rate = 0.05; // fraction of timesteps carrying an injected event
};

/// Generate a labeled dataset with injected spikes, level shifts and
/// dropouts. Deterministic for a fixed seed; the labeled fraction equals
/// round(anomaly_rate * length) timesteps.
TimeSeriesDataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

} // namespace hyperts::data
