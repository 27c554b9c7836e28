#pragma once

#include <string>
#include <vector>

namespace vtsim {

// Sampled time series of one node voltage or branch current. Times are
// strictly increasing; sampling between points is linear.
struct Waveform {
    std::vector<double> times;
    std::vector<double> values;
    std::string quantity;

    std::size_t size() const { return times.size(); }
    void append(double t, double v) {
        times.push_back(t);
        values.push_back(v);
    }
    // Linear interpolation; clamps to the first/last value outside the span.
    double sample(double t) const;
};

}  // namespace vtsim
