#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dssc/core.hpp"

namespace dssc {

struct TraceEvent {
    double t = 0.0;
    std::string channel;
    std::string kind;     // sliding_onset, clamp, saturation, stiffness_warning, ...
    std::string message;
};

// Uniform-grid record of a run: named columns, one row per step, plus an
// event log. Columns are created on first write and must stay row-aligned.
class SimTrace {
public:
    void set_grid(double dt, std::size_t steps) {
        require(dt > 0.0, "trace: dt must be > 0");
        dt_ = dt;
        rows_ = steps;
        time_.resize(steps);
        for (std::size_t i = 0; i < steps; ++i) time_[i] = static_cast<double>(i) * dt;
    }

    double dt() const { return dt_; }
    std::size_t rows() const { return rows_; }
    const std::vector<double>& time() const { return time_; }

    std::vector<double>& column(const std::string& name) {
        auto it = columns_.find(name);
        if (it == columns_.end()) {
            auto [ins, ok] = columns_.emplace(name, std::vector<double>(rows_, 0.0));
            (void)ok;
            order_.push_back(name);
            return ins->second;
        }
        return it->second;
    }

    const std::vector<double>& column(const std::string& name) const {
        auto it = columns_.find(name);
        require(it != columns_.end(), "trace: no column named '" + name + "'");
        return it->second;
    }

    bool has_column(const std::string& name) const { return columns_.count(name) > 0; }
    const std::vector<std::string>& column_names() const { return order_; }

    void log_event(double t, const std::string& channel, const std::string& kind,
                   const std::string& message = "") {
        events_.push_back({t, channel, kind, message});
    }
    const std::vector<TraceEvent>& events() const { return events_; }

    std::string config_hash;

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        require(out.good(), "trace: cannot open '" + path + "' for writing");
        if (!config_hash.empty()) out << "# config_hash=" << config_hash << "\n";
        out << "t";
        for (const auto& name : order_) out << "," << name;
        out << "\n";
        out.precision(17);
        for (std::size_t i = 0; i < rows_; ++i) {
            out << time_[i];
            for (const auto& name : order_) out << "," << columns_.at(name)[i];
            out << "\n";
        }
    }

    std::size_t index_at(double t) const {
        require(dt_ > 0.0 && rows_ > 0, "trace: empty grid");
        const double idx = t / dt_;
        require(idx >= -0.5 && idx < static_cast<double>(rows_) + 0.5, "trace: time outside grid");
        std::size_t i = static_cast<std::size_t>(idx + 0.5);
        if (i >= rows_) i = rows_ - 1;
        return i;
    }

private:
    double dt_ = 0.0;
    std::size_t rows_ = 0;
    std::vector<double> time_;
    std::map<std::string, std::vector<double>> columns_;
    std::vector<std::string> order_;
    std::vector<TraceEvent> events_;
};

struct ChannelMetrics {
    std::optional<double> t_s;        // sliding onset, empty if never detected
    double rms_e = 0.0;
    double sup_e = 0.0;
    double residual = 0.0;            // sup|e| over the final 20% of the run
    double chattering_index = 0.0;    // total variation of u per unit time
    std::uint64_t clamp_count = 0;
};

struct Metrics {
    std::map<std::string, ChannelMetrics> channels;
    double t_end = 0.0;
    double dt = 0.0;
    std::string config_hash;
};

inline double window_rms(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    require(hi > lo && hi <= x.size(), "metrics: bad window");
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += x[i] * x[i];
    return std::sqrt(acc / static_cast<double>(hi - lo));
}

inline double window_sup_abs(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    require(hi > lo && hi <= x.size(), "metrics: bad window");
    double m = 0.0;
    for (std::size_t i = lo; i < hi; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

inline double total_variation(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    require(hi > lo && hi <= x.size(), "metrics: bad window");
    double tv = 0.0;
    for (std::size_t i = lo + 1; i < hi; ++i) tv += std::abs(x[i] - x[i - 1]);
    return tv;
}

} // namespace dssc
